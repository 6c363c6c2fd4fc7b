//! Directed network representation and structural checks.
//!
//! A [`DirectedNetwork`] is a simple digraph on nodes `0..n` whose links carry
//! a positive capacity (a unitless relative weight). Links are always kept in
//! row-major order of the adjacency matrix: sorted by tail, then by head. That
//! order is the column order of the incidence matrix and the entry order of
//! every sparse matrix in this crate, so "the k-th link" means the same thing
//! everywhere.

use std::collections::VecDeque;
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense 0-based node index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A directed link `tail -> head` with a positive capacity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub tail: NodeId,
    pub head: NodeId,
    pub capacity: f64,
}

impl Link {
    pub fn new(tail: usize, head: usize, capacity: f64) -> Self {
        Link {
            tail: NodeId(tail),
            head: NodeId(head),
            capacity,
        }
    }

    /// Unit-capacity link.
    pub fn unit(tail: usize, head: usize) -> Self {
        Link::new(tail, head, 1.0)
    }

    pub fn key(&self) -> (usize, usize) {
        (self.tail.0, self.head.0)
    }
}

/// A simple weighted digraph on nodes `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectedNetwork {
    n: usize,
    links: Vec<Link>,
    // links[row_ptr[i]..row_ptr[i + 1]] are the out-links of node i
    row_ptr: Vec<usize>,
    labels: Option<Vec<String>>,
}

impl DirectedNetwork {
    /// Builds a network, sorting links into row-major order.
    ///
    /// Self-loops are accepted here (use [`remove_self_loops`] to clean
    /// them); duplicates, out-of-range endpoints and non-positive capacities
    /// are rejected.
    pub fn new(n: usize, links: impl IntoIterator<Item = Link>) -> Result<Self> {
        let mut links: Vec<Link> = links.into_iter().collect();
        for l in &links {
            for end in [l.tail.0, l.head.0] {
                if end >= n {
                    return Err(Error::NodeOutOfRange { index: end, n });
                }
            }
            if !(l.capacity > 0.0) || !l.capacity.is_finite() {
                return Err(Error::InvalidCapacity {
                    tail: l.tail.0,
                    head: l.head.0,
                    capacity: l.capacity,
                });
            }
        }
        links.sort_by_key(Link::key);
        if let Some(w) = links.windows(2).find(|w| w[0].key() == w[1].key()) {
            return Err(Error::DuplicateArc {
                tail: w[0].tail.0,
                head: w[0].head.0,
            });
        }
        let mut row_ptr = vec![0; n + 1];
        for l in &links {
            row_ptr[l.tail.0 + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(DirectedNetwork {
            n,
            links,
            row_ptr,
            labels: None,
        })
    }

    /// Builds a network from a square matrix; every positive entry becomes a
    /// link whose capacity is the entry value.
    pub fn from_adjacency(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare);
        }
        let links = rows.iter().enumerate().flat_map(|(i, r)| {
            r.iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(move |(j, &v)| Link::new(i, j, v))
        });
        DirectedNetwork::new(n, links)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// All links in row-major order.
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Display label of a node: the stored label, or its 1-based number.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => (i + 1).to_string(),
        }
    }

    pub fn out_links(&self, i: usize) -> &[Link] {
        &self.links[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.links.iter().filter(|l| l.head.0 == i).count()
    }

    /// Position of link `tail -> head` in row-major order.
    pub fn link_index(&self, tail: usize, head: usize) -> Option<usize> {
        if tail >= self.n {
            return None;
        }
        let row = self.out_links(tail);
        row.binary_search_by_key(&head, |l| l.head.0)
            .ok()
            .map(|k| self.row_ptr[tail] + k)
    }

    pub fn contains(&self, tail: usize, head: usize) -> bool {
        self.link_index(tail, head).is_some()
    }

    pub fn capacity(&self, tail: usize, head: usize) -> Option<f64> {
        self.link_index(tail, head).map(|k| self.links[k].capacity)
    }

    /// A copy with one more link.
    pub fn with_link(&self, link: Link) -> Result<Self> {
        if self.contains(link.tail.0, link.head.0) {
            return Err(Error::DuplicateArc {
                tail: link.tail.0,
                head: link.head.0,
            });
        }
        let mut links = self.links.clone();
        links.push(link);
        let mut net = DirectedNetwork::new(self.n, links)?;
        net.labels = self.labels.clone();
        Ok(net)
    }

    /// A copy without link `tail -> head`.
    pub fn without_link(&self, tail: usize, head: usize) -> Result<Self> {
        let k = self.link_index(tail, head).ok_or(Error::MissingArc { tail, head })?;
        let mut net = self.clone();
        net.links.remove(k);
        for p in &mut net.row_ptr[tail + 1..] {
            *p -= 1;
        }
        Ok(net)
    }

    /// 0/1 adjacency matrix.
    pub fn adjacency(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for l in &self.links {
            a[l.tail.0][l.head.0] = 1.0;
        }
        a
    }

    fn petgraph(&self) -> DiGraph<(), ()> {
        let mut g = DiGraph::with_capacity(self.n, self.links.len());
        let nodes: Vec<_> = (0..self.n).map(|_| g.add_node(())).collect();
        for l in &self.links {
            g.add_edge(nodes[l.tail.0], nodes[l.head.0], ());
        }
        g
    }
}

/// Drops every link whose tail equals its head.
pub fn remove_self_loops(net: &DirectedNetwork) -> DirectedNetwork {
    let links = net.links.iter().copied().filter(|l| l.tail != l.head);
    let mut out = DirectedNetwork::new(net.n, links).expect("subset of a valid network");
    out.labels = net.labels.clone();
    out
}

/// Strongly connected components, each sorted ascending, listed in reverse
/// topological order of the condensation.
pub fn strongly_connected_components(net: &DirectedNetwork) -> Vec<Vec<usize>> {
    tarjan_scc(&net.petgraph())
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|ix| ix.index()).collect();
            c.sort_unstable();
            c
        })
        .collect()
}

pub fn is_strongly_connected(net: &DirectedNetwork) -> bool {
    net.n <= 1 || strongly_connected_components(net).len() == 1
}

/// A network made strongly connected by an optional cloud node.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedNetwork {
    /// The input network.
    pub base: DirectedNetwork,
    /// The strongly connected result; equal to `base` when no cloud was needed.
    pub network: DirectedNetwork,
    /// Index of the cloud node in `network` (always `base.node_count()`).
    pub cloud: Option<NodeId>,
    pub dummy_links: Vec<Link>,
}

impl AugmentedNetwork {
    pub fn is_dummy(&self, tail: usize, head: usize) -> bool {
        self.cloud.is_some_and(|c| tail == c.0 || head == c.0)
    }
}

/// Connects sink basins to source basins through a single cloud node.
///
/// Every source component of the condensation (no links entering from
/// outside) gets a link `cloud -> v` and every sink component gets `v ->
/// cloud`, where `v` is the lowest-index node of the component. A source or
/// sink node is a singleton component, so this covers the zero in/out-degree
/// case directly. Nodes without any link are not attached; a network that
/// contains one cannot be repaired and yields
/// [`Error::AugmentationFailed`].
pub fn augment_with_cloud(net: &DirectedNetwork, dummy_capacity: f64) -> Result<AugmentedNetwork> {
    if let Some(l) = net.links.iter().find(|l| l.tail == l.head) {
        return Err(Error::SelfLoop(l.tail.0));
    }
    if !(dummy_capacity > 0.0) {
        return Err(Error::InvalidCapacity {
            tail: net.n,
            head: net.n,
            capacity: dummy_capacity,
        });
    }
    if is_strongly_connected(net) {
        return Ok(AugmentedNetwork {
            base: net.clone(),
            network: net.clone(),
            cloud: None,
            dummy_links: Vec::new(),
        });
    }

    let comps = strongly_connected_components(net);
    let mut comp_of = vec![0; net.n];
    for (c, members) in comps.iter().enumerate() {
        for &v in members {
            comp_of[v] = c;
        }
    }
    let mut has_in = vec![false; comps.len()];
    let mut has_out = vec![false; comps.len()];
    for l in &net.links {
        let (a, b) = (comp_of[l.tail.0], comp_of[l.head.0]);
        if a != b {
            has_out[a] = true;
            has_in[b] = true;
        }
    }

    let cloud = net.n;
    let mut exits = Vec::new();
    let mut entries = Vec::new();
    for (c, members) in comps.iter().enumerate() {
        let v = members[0];
        let isolated = members.len() == 1 && net.out_degree(v) == 0 && net.in_degree(v) == 0;
        if isolated {
            continue;
        }
        if !has_out[c] {
            exits.push(Link::new(v, cloud, dummy_capacity));
        }
        if !has_in[c] {
            entries.push(Link::new(cloud, v, dummy_capacity));
        }
    }
    exits.sort_by_key(Link::key);
    entries.sort_by_key(Link::key);
    let dummy_links: Vec<Link> = exits.into_iter().chain(entries).collect();

    let mut network = DirectedNetwork::new(net.n + 1, net.links.iter().copied().chain(dummy_links.iter().copied()))?;
    let mut labels: Vec<String> = (0..net.n).map(|i| net.label(i)).collect();
    labels.push("cloud".to_string());
    network.labels = Some(labels);
    if !is_strongly_connected(&network) {
        return Err(Error::AugmentationFailed);
    }
    Ok(AugmentedNetwork {
        base: net.clone(),
        network,
        cloud: Some(NodeId(cloud)),
        dummy_links,
    })
}

/// Node-by-link incidence matrix: `+1` at the tail (outflow) and `-1` at the
/// head (inflow) of each link column. Columns follow row-major link order.
#[derive(Clone, Debug, PartialEq)]
pub struct IncidenceMatrix {
    n: usize,
    columns: Vec<(usize, usize)>,
}

impl IncidenceMatrix {
    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    /// `(tail, head)` of each column.
    pub fn columns(&self) -> &[(usize, usize)] {
        &self.columns
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        let (t, h) = self.columns[col];
        if row == t {
            1
        } else if row == h {
            -1
        } else {
            0
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<i8>> {
        (0..self.n)
            .map(|r| (0..self.cols()).map(|c| self.get(r, c)).collect())
            .collect()
    }
}

pub fn incidence(net: &DirectedNetwork) -> IncidenceMatrix {
    IncidenceMatrix {
        n: net.n,
        columns: net.links.iter().map(Link::key).collect(),
    }
}

/// Length of the longest shortest directed path.
pub fn diameter(net: &DirectedNetwork) -> Result<usize> {
    let n = net.n;
    let mut diam = 0;
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        dist.fill(usize::MAX);
        dist[s] = 0;
        queue.push_back(s);
        let mut seen = 1;
        while let Some(u) = queue.pop_front() {
            for l in net.out_links(u) {
                let v = l.head.0;
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    diam = diam.max(dist[v]);
                    seen += 1;
                    queue.push_back(v);
                }
            }
        }
        if seen != n {
            return Err(Error::NotStronglyConnected);
        }
    }
    Ok(diam)
}
