#![allow(dead_code)]

use idealflow::graph::{DirectedNetwork, Link};
use proptest::prelude::*;

pub fn net(n: usize, arcs: &[(usize, usize)]) -> DirectedNetwork {
    DirectedNetwork::new(n, arcs.iter().map(|&(t, h)| Link::unit(t, h))).unwrap()
}

pub fn five_node() -> DirectedNetwork {
    DirectedNetwork::from_adjacency(&[
        vec![0.0, 1.0, 1.0, 1.0, 1.0],
        vec![0.0, 0.0, 1.0, 1.0, 1.0],
        vec![0.0, 1.0, 0.0, 1.0, 1.0],
        vec![1.0, 0.0, 0.0, 0.0, 1.0],
        vec![0.0, 0.0, 0.0, 1.0, 0.0],
    ])
    .unwrap()
}

pub const FIVE_NODE_FLOW: [[f64; 5]; 5] = [
    [0.0, 2.0, 2.0, 2.0, 2.0],
    [0.0, 0.0, 1.0, 1.0, 1.0],
    [0.0, 1.0, 0.0, 1.0, 1.0],
    [8.0, 0.0, 0.0, 0.0, 8.0],
    [0.0, 0.0, 0.0, 12.0, 0.0],
];

/// Strongly connected digraph: a Hamiltonian cycle through a permutation of
/// the nodes plus extra links.
pub fn strongly_connected(n: usize, perm: &[usize], extra: &[(usize, usize)]) -> DirectedNetwork {
    let mut arcs: Vec<(usize, usize)> = (0..n).map(|k| (perm[k], perm[(k + 1) % n])).collect();
    arcs.extend(extra.iter().map(|&(a, b)| (a % n, b % n)).filter(|(a, b)| a != b));
    arcs.sort_unstable();
    arcs.dedup();
    net(n, &arcs)
}

pub fn arb_strongly_connected(max_n: usize) -> impl Strategy<Value = DirectedNetwork> {
    (2..=max_n).prop_flat_map(|n| {
        (
            Just(n),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec((0..n, 0..n), 0..3 * n),
        )
            .prop_map(|(n, perm, extra)| strongly_connected(n, &perm, &extra))
    })
}

/// Symmetric digraph: every undirected edge of a connected graph in both directions.
pub fn arb_symmetric(max_n: usize) -> impl Strategy<Value = DirectedNetwork> {
    (2..=max_n).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(any::<prop::sample::Index>(), n - 1),
            prop::collection::vec((0..n, 0..n), 0..2 * n),
        )
            .prop_map(|(n, parents, extra)| {
                // random spanning tree keeps it connected
                let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (parents[v - 1].index(v), v)).collect();
                edges.extend(extra.into_iter().filter(|(a, b)| a != b));
                let mut arcs: Vec<(usize, usize)> = edges.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
                arcs.sort_unstable();
                arcs.dedup();
                net(n, &arcs)
            })
    })
}

/// Ring `1 -> 2 -> … -> 5 -> 1` as 0-based indices.
pub fn ring5() -> DirectedNetwork {
    net(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])
}
