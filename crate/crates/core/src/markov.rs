//! Ideal flow through the Markov chain of a random walker.
//!
//! The walker's transition matrix `T` is row-stochastic with support on the
//! links of the network. Its stationary (Perron) vector `π`, scaled so that
//! `Σπ = κ`, gives the node throughput, and the ideal flow on link `i -> j`
//! is `π[i] · T[i][j]`. Because each node's outflow is `π[i]` and its inflow
//! is `(πT)[i] = π[i]`, the resulting matrix always has equal row and column
//! sums (it is *premagic*).
//!
//! ```
//! use idealflow::graph::{DirectedNetwork, Link};
//! use idealflow::markov::{ideal_flow, normalize_min, stationary, uniform_transition};
//!
//! let cycle = DirectedNetwork::new(3, [Link::unit(0, 1), Link::unit(1, 2), Link::unit(2, 0)])?;
//! let t = uniform_transition(&cycle)?;
//! let pi = stationary(&t, 3.0)?;
//! let f = normalize_min(&ideal_flow(&pi, &t)?)?;
//! assert!(f.matrix().values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
//! # Ok::<(), idealflow::Error>(())
//! ```

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{diameter, is_strongly_connected, DirectedNetwork};
use crate::matrix::ArcMatrix;

/// Allowed deviation of a transition row sum from 1.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Stationarity residual bound, relative to `κ / n`.
pub const STATIONARY_TOL: f64 = 1e-9;
/// Premagic residual bound, relative to `max(1, max entry)`.
pub const PREMAGIC_TOL: f64 = 1e-9;
/// Largest chain solved by dense LU under [`StationaryMethod::Auto`].
pub const DIRECT_SOLVE_MAX_NODES: usize = 512;
/// Distance to the nearest integer under which [`IdealFlowMatrix::snapped`] rounds.
pub const SNAP_TOL: f64 = 1e-6;

/// How a walker picks among the out-links of a node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Every out-link equally likely (standard ideal flow).
    #[default]
    Uniform,
    /// Proportional to link capacity (generalized ideal flow).
    Capacity,
}

/// Row-stochastic transition matrix supported on network links.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix(ArcMatrix);

impl StochasticMatrix {
    /// Validates nonnegativity, zero diagonal and unit row sums.
    pub fn new(m: ArcMatrix) -> Result<Self> {
        for (i, j, v) in m.entries() {
            if i == j && v != 0.0 {
                return Err(Error::SelfLoop(i));
            }
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidCapacity {
                    tail: i,
                    head: j,
                    capacity: v,
                });
            }
        }
        for (i, s) in m.row_sums().into_iter().enumerate() {
            if s == 0.0 {
                return Err(Error::DanglingNode(i));
            }
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::SolverFailure(format!(
                    "row {i} of transition matrix sums to {s}"
                )));
            }
        }
        Ok(StochasticMatrix(m))
    }

    pub fn matrix(&self) -> &ArcMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }
}

fn row_normalized(m: &ArcMatrix) -> Result<StochasticMatrix> {
    let sums = m.row_sums();
    if let Some(i) = sums.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::DanglingNode(i));
    }
    let entries = m.entries().filter(|e| e.2 != 0.0).map(|(i, j, v)| (i, j, v / sums[i]));
    StochasticMatrix::new(ArcMatrix::from_entries(m.dim(), entries)?)
}

fn check_self_loops(net: &DirectedNetwork) -> Result<()> {
    match net.links().iter().find(|l| l.tail == l.head) {
        Some(l) => Err(Error::SelfLoop(l.tail.0)),
        None => Ok(()),
    }
}

/// `T[i][j] = 1 / outdeg(i)` on every link.
pub fn uniform_transition(net: &DirectedNetwork) -> Result<StochasticMatrix> {
    check_self_loops(net)?;
    if let Some(i) = (0..net.node_count()).find(|&i| net.out_degree(i) == 0) {
        return Err(Error::DanglingNode(i));
    }
    let m = ArcMatrix::on_network(net, |l| 1.0 / net.out_degree(l.tail.0) as f64);
    StochasticMatrix::new(m)
}

/// `T[i][j] = capacity(i -> j) / Σ_k capacity(i -> k)`.
pub fn capacity_transition(net: &DirectedNetwork) -> Result<StochasticMatrix> {
    check_self_loops(net)?;
    row_normalized(&ArcMatrix::on_network(net, |l| l.capacity))
}

pub fn transition(net: &DirectedNetwork, weighting: Weighting) -> Result<StochasticMatrix> {
    match weighting {
        Weighting::Uniform => uniform_transition(net),
        Weighting::Capacity => capacity_transition(net),
    }
}

/// Row-normalizes an observed flow matrix into transition probabilities.
pub fn transition_from_flows(flows: &ArcMatrix) -> Result<StochasticMatrix> {
    row_normalized(flows)
}

/// Stationary vector `π` of a chain, scaled so that `Σπ = κ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerronVector {
    pub values: Vec<f64>,
    pub scale: f64,
}

impl PerronVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `‖πT − π‖∞`.
    pub fn residual(&self, t: &StochasticMatrix) -> f64 {
        let pt = left_multiply(&self.values, t);
        pt.iter()
            .zip(&self.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StationaryMethod {
    /// Direct solve up to [`DIRECT_SOLVE_MAX_NODES`], power iteration above.
    #[default]
    Auto,
    /// Dense LU on `[Tᵀ − I; 1ᵀ] π = [0; κ]` with one balance row replaced.
    Direct,
    /// Power iteration on the lazy walk `(T + I) / 2`.
    Power,
}

fn left_multiply(x: &[f64], t: &StochasticMatrix) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for (i, j, v) in t.matrix().entries() {
        y[j] += x[i] * v;
    }
    y
}

/// Stationary vector with `Σπ = κ`.
pub fn stationary(t: &StochasticMatrix, kappa: f64) -> Result<PerronVector> {
    stationary_with(t, kappa, StationaryMethod::Auto)
}

pub fn stationary_with(t: &StochasticMatrix, kappa: f64, method: StationaryMethod) -> Result<PerronVector> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::NonPositiveScale(kappa));
    }
    let n = t.dim();
    if n == 0 || !is_strongly_connected(&t.matrix().support()) {
        return Err(Error::NotIrreducible);
    }
    let direct = match method {
        StationaryMethod::Auto => n <= DIRECT_SOLVE_MAX_NODES,
        StationaryMethod::Direct => true,
        StationaryMethod::Power => false,
    };
    let values = if direct {
        solve_direct(t, kappa)?
    } else {
        solve_power(t, kappa)?
    };
    let pi = PerronVector { values, scale: kappa };
    let residual = pi.residual(t);
    if residual > STATIONARY_TOL * kappa / n as f64 {
        return Err(Error::SolverFailure(format!(
            "stationary residual {residual:e} exceeds tolerance"
        )));
    }
    if let Some(v) = pi.values.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::SolverFailure(format!(
            "stationary vector has non-positive entry {v:e}"
        )));
    }
    Ok(pi)
}

fn solve_direct(t: &StochasticMatrix, kappa: f64) -> Result<Vec<f64>> {
    let n = t.dim();
    // Row j of (Tᵀ − I) is the balance equation of node j. For an irreducible
    // chain any one of them is implied by the others, so the last one is
    // replaced by the normalization Σπ = κ.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in t.matrix().entries() {
        a[(j, i)] += v;
    }
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = kappa;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SolverFailure("singular balance system".into()))?;
    Ok(x.iter().copied().collect())
}

const POWER_MAX_ITERS: usize = 2_000_000;

fn solve_power(t: &StochasticMatrix, kappa: f64) -> Result<Vec<f64>> {
    let n = t.dim();
    let target = 1e-3 * STATIONARY_TOL * kappa / n as f64;
    let mut x = vec![kappa / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_MAX_ITERS {
        let xt = left_multiply(&x, t);
        residual = xt.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual <= target {
            return Ok(x);
        }
        for (xi, yi) in x.iter_mut().zip(&xt) {
            *xi = 0.5 * (*xi + yi);
        }
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v *= kappa / s);
    }
    Err(Error::NoConvergence {
        iterations: POWER_MAX_ITERS,
        residual,
    })
}

/// Nonnegative premagic flow matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealFlowMatrix(ArcMatrix);

impl IdealFlowMatrix {
    /// Wraps a matrix after checking nonnegativity and the premagic property.
    pub fn new(m: ArcMatrix) -> Result<Self> {
        if let Some((i, j, v)) = m.entries().find(|e| !(e.2 >= 0.0)) {
            return Err(Error::InvalidCapacity {
                tail: i,
                head: j,
                capacity: v,
            });
        }
        let check = is_premagic(&m, PREMAGIC_TOL);
        if !check.premagic {
            return Err(Error::NotPremagic(check.residual));
        }
        Ok(IdealFlowMatrix(m))
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        IdealFlowMatrix::new(ArcMatrix::from_dense(rows)?)
    }

    /// For iterative solvers whose own tolerance may be looser than
    /// [`PREMAGIC_TOL`].
    pub(crate) fn new_approximate(m: ArcMatrix) -> Self {
        IdealFlowMatrix(m)
    }

    pub fn matrix(&self) -> &ArcMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ArcMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn total(&self) -> f64 {
        self.0.total()
    }

    /// Node throughput: the common row/column sum vector.
    pub fn node_flows(&self) -> Vec<f64> {
        self.0.row_sums()
    }

    /// Largest entry; ties go to the first in row-major order.
    pub fn max_link(&self) -> Option<(usize, usize, f64)> {
        self.0
            .entries()
            .fold(None, |best: Option<(usize, usize, f64)>, e| match best {
                Some(b) if b.2 >= e.2 => Some(b),
                _ => Some(e),
            })
    }

    pub fn premagic_residual(&self) -> f64 {
        is_premagic(&self.0, PREMAGIC_TOL).residual
    }

    /// Rounded copy when every entry is within [`SNAP_TOL`] of an integer.
    pub fn snapped(&self) -> Option<IdealFlowMatrix> {
        self.0
            .values()
            .iter()
            .all(|v| (v - v.round()).abs() <= SNAP_TOL)
            .then(|| IdealFlowMatrix(self.0.map_values(f64::round)))
    }
}

/// `F[i][j] = π[i] · T[i][j]`.
pub fn ideal_flow(pi: &PerronVector, t: &StochasticMatrix) -> Result<IdealFlowMatrix> {
    if pi.len() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: pi.len(),
        });
    }
    let entries = t.matrix().entries().map(|(i, j, v)| (i, j, pi.values[i] * v));
    IdealFlowMatrix::new(ArcMatrix::from_entries(t.dim(), entries)?)
}

/// Divides every entry by the smallest positive entry.
pub fn normalize_min(f: &IdealFlowMatrix) -> Result<IdealFlowMatrix> {
    let m = f.0.min_positive().ok_or(Error::EmptyFlow)?;
    Ok(IdealFlowMatrix(f.0.map_values(|v| if v == m { 1.0 } else { v / m })))
}

/// Rescales so the entries sum to `total`.
pub fn normalize_total(f: &IdealFlowMatrix, total: f64) -> Result<IdealFlowMatrix> {
    let s = f.total();
    if !(s > 0.0) {
        return Err(Error::EmptyFlow);
    }
    scale(f, total / s)
}

/// Multiplies every entry by `kappa > 0`.
pub fn scale(f: &IdealFlowMatrix, kappa: f64) -> Result<IdealFlowMatrix> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::NonPositiveScale(kappa));
    }
    Ok(IdealFlowMatrix(f.0.map_values(|v| v * kappa)))
}

/// Outcome of a premagic test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PremagicCheck {
    pub premagic: bool,
    /// `max_i |rowSum_i − colSum_i|`.
    pub residual: f64,
}

/// Tests whether row sums equal column sums within `tol · max(1, max entry)`.
pub fn is_premagic(m: &ArcMatrix, tol: f64) -> PremagicCheck {
    let residual = m
        .row_sums()
        .iter()
        .zip(m.col_sums())
        .map(|(r, c)| (r - c).abs())
        .fold(0.0, f64::max);
    PremagicCheck {
        premagic: residual <= tol * m.max_entry().max(1.0),
        residual,
    }
}

/// Entropy in bits of one row's distribution.
pub fn node_entropy(t: &StochasticMatrix, i: usize) -> f64 {
    entropy_bits(t.matrix().row(i).map(|(_, p)| p))
}

/// Shannon entropy in bits of a probability vector.
pub fn entropy_bits(p: impl Iterator<Item = f64>) -> f64 {
    let h: f64 = p.filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum();
    // -0.0 for deterministic rows
    h.max(0.0)
}

/// Per-node entropies and their π-weighted mean (the entropy rate).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntropyReport {
    pub per_node: Vec<f64>,
    pub network_entropy: f64,
}

pub fn network_entropy(t: &StochasticMatrix, pi: &PerronVector) -> Result<EntropyReport> {
    if pi.len() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: pi.len(),
        });
    }
    let per_node: Vec<f64> = (0..t.dim()).map(|i| node_entropy(t, i)).collect();
    let total: f64 = pi.values.iter().sum();
    let network_entropy = per_node.iter().zip(&pi.values).map(|(h, w)| h * w / total).sum();
    Ok(EntropyReport {
        per_node,
        network_entropy,
    })
}

/// `max π / min π` and the bound `(max outdeg)^diam` it must respect under
/// uniform transitions. `None` when the network is not strongly connected.
pub fn perron_ratio(pi: &PerronVector, net: &DirectedNetwork) -> Option<(f64, f64)> {
    let diam = diameter(net).ok()?;
    let max_out = (0..net.node_count()).map(|i| net.out_degree(i)).max()?;
    let hi = pi.values.iter().copied().fold(f64::MIN, f64::max);
    let lo = pi.values.iter().copied().fold(f64::MAX, f64::min);
    Some((hi / lo, (max_out as f64).powi(diam as i32)))
}

pub fn perron_ratio_check(pi: &PerronVector, net: &DirectedNetwork) -> bool {
    perron_ratio(pi, net).is_some_and(|(ratio, bound)| ratio <= bound * (1.0 + 1e-9))
}

/// Standard or generalized ideal flow of a strongly connected network,
/// normalized so that its smallest entry is 1.
pub fn min_normalized_flow(net: &DirectedNetwork, weighting: Weighting) -> Result<IdealFlowMatrix> {
    let t = transition(net, weighting)?;
    let pi = stationary(&t, 1.0)?;
    normalize_min(&ideal_flow(&pi, &t)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Link;
    use approx::assert_abs_diff_eq;

    fn net(n: usize, arcs: &[(usize, usize)]) -> DirectedNetwork {
        DirectedNetwork::new(n, arcs.iter().map(|&(t, h)| Link::unit(t, h))).unwrap()
    }

    fn five_node() -> DirectedNetwork {
        DirectedNetwork::from_adjacency(&[
            vec![0.0, 1.0, 1.0, 1.0, 1.0],
            vec![0.0, 0.0, 1.0, 1.0, 1.0],
            vec![0.0, 1.0, 0.0, 1.0, 1.0],
            vec![1.0, 0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    fn five_node_flow() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 2.0, 2.0, 2.0, 2.0],
            vec![0.0, 0.0, 1.0, 1.0, 1.0],
            vec![0.0, 1.0, 0.0, 1.0, 1.0],
            vec![8.0, 0.0, 0.0, 0.0, 8.0],
            vec![0.0, 0.0, 0.0, 12.0, 0.0],
        ]
    }

    fn two_cycle() -> DirectedNetwork {
        net(2, &[(0, 1), (1, 0)])
    }

    fn triangle() -> DirectedNetwork {
        net(3, &[(0, 1), (1, 2), (2, 0)])
    }

    #[test]
    fn uniform_rows() {
        let t = uniform_transition(&five_node()).unwrap();
        let d = t.matrix().to_dense();
        assert_eq!(d[0], vec![0.0, 0.25, 0.25, 0.25, 0.25]);
        assert_eq!(d[4], vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        let t2 = uniform_transition(&two_cycle()).unwrap();
        assert_eq!(t2.matrix().to_dense(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(uniform_transition(&net(2, &[(0, 1)])), Err(Error::DanglingNode(1)));
    }

    #[test]
    fn capacity_rows() {
        let equal = capacity_transition(&five_node()).unwrap();
        assert_eq!(equal, uniform_transition(&five_node()).unwrap());
        let n = DirectedNetwork::new(
            3,
            [
                Link::new(0, 1, 3.0),
                Link::new(0, 2, 1.0),
                Link::unit(1, 0),
                Link::unit(2, 0),
            ],
        )
        .unwrap();
        let t = capacity_transition(&n).unwrap();
        assert_eq!(t.get(0, 1), 0.75);
        assert_eq!(t.get(0, 2), 0.25);
        // percentage inputs come back as the same split
        let pct = DirectedNetwork::new(
            3,
            [
                Link::new(0, 1, 70.0),
                Link::new(0, 2, 30.0),
                Link::unit(1, 0),
                Link::unit(2, 0),
            ],
        )
        .unwrap();
        let t = capacity_transition(&pct).unwrap();
        assert_abs_diff_eq!(t.get(0, 1), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(t.get(0, 2), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn transition_recovered_from_flows() {
        let f = ArcMatrix::from_dense(&five_node_flow()).unwrap();
        let t = transition_from_flows(&f).unwrap();
        assert_eq!(t, uniform_transition(&five_node()).unwrap());
        let t7 = transition_from_flows(&f.map_values(|v| 7.0 * v)).unwrap();
        assert_eq!(t7, t);
        let mut z = five_node_flow();
        z[2] = vec![0.0; 5];
        assert_eq!(
            transition_from_flows(&ArcMatrix::from_dense(&z).unwrap()),
            Err(Error::DanglingNode(2))
        );
    }

    #[test]
    fn five_node_stationary() {
        let t = uniform_transition(&five_node()).unwrap();
        for method in [StationaryMethod::Direct, StationaryMethod::Power] {
            let pi = stationary_with(&t, 42.0, method).unwrap();
            for (got, want) in pi.values.iter().zip([8.0, 3.0, 3.0, 16.0, 12.0]) {
                assert_abs_diff_eq!(*got, want, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn two_cycle_stationary() {
        let t = uniform_transition(&two_cycle()).unwrap();
        let pi = stationary(&t, 2.0).unwrap();
        assert_abs_diff_eq!(pi.values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pi.values[1], 1.0, epsilon = 1e-12);
        // periodic chain: the lazy power iteration still converges
        let pi = stationary_with(&t, 2.0, StationaryMethod::Power).unwrap();
        assert_abs_diff_eq!(pi.values[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn symmetric_digraph_stationary_is_degree() {
        // path 0-1-2-3 plus chord 1-3, every edge in both directions
        let und = [(0, 1), (1, 2), (2, 3), (1, 3)];
        let arcs: Vec<_> = und.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        let n = net(4, &arcs);
        let t = uniform_transition(&n).unwrap();
        let pi = stationary(&t, arcs.len() as f64).unwrap();
        for (i, v) in pi.values.iter().enumerate() {
            assert_abs_diff_eq!(*v, n.out_degree(i) as f64, epsilon = 1e-10);
        }
    }

    #[test]
    fn reducible_chain_rejected() {
        let m = ArcMatrix::from_dense(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        let t = StochasticMatrix::new(m).unwrap();
        assert_eq!(stationary(&t, 1.0), Err(Error::NotIrreducible));
        let t = uniform_transition(&two_cycle()).unwrap();
        assert_eq!(stationary(&t, 0.0), Err(Error::NonPositiveScale(0.0)));
    }

    #[test]
    fn five_node_ideal_flow() {
        let t = uniform_transition(&five_node()).unwrap();
        let pi = stationary(&t, 42.0).unwrap();
        let f = ideal_flow(&pi, &t).unwrap();
        let want = five_node_flow();
        for (i, row) in want.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                assert_abs_diff_eq!(f.get(i, j), w, epsilon = 1e-9);
            }
        }
        let snapped = normalize_min(&f).unwrap().snapped().unwrap();
        assert_eq!(snapped.matrix().to_dense(), want);
        assert_eq!(f.max_link().map(|m| (m.0, m.1)), Some((4, 3)));
    }

    #[test]
    fn small_cycles_ideal_flow() {
        let t = uniform_transition(&two_cycle()).unwrap();
        let f = ideal_flow(&stationary(&t, 2.0).unwrap(), &t).unwrap();
        assert_eq!(f.matrix().to_dense(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let t = uniform_transition(&triangle()).unwrap();
        let f = ideal_flow(&stationary(&t, 3.0).unwrap(), &t).unwrap();
        for v in f.matrix().values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
        let short = PerronVector {
            values: vec![1.0],
            scale: 1.0,
        };
        assert_eq!(
            ideal_flow(&short, &t),
            Err(Error::DimensionMismatch { expected: 3, found: 1 })
        );
    }

    #[test]
    fn normalization_and_scaling() {
        let f = IdealFlowMatrix::from_dense(&five_node_flow()).unwrap();
        assert_eq!(normalize_min(&f).unwrap(), f);
        let half = scale(&f, 0.5).unwrap();
        assert_eq!(normalize_min(&half).unwrap(), f);
        let doubled = scale(&f, 2.0).unwrap();
        assert_eq!(doubled.node_flows(), vec![16.0, 6.0, 6.0, 32.0, 24.0]);
        assert_eq!(scale(&f, 1.0).unwrap(), f);
        assert_eq!(scale(&f, -1.0), Err(Error::NonPositiveScale(-1.0)));
        let c = IdealFlowMatrix::from_dense(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(
            normalize_min(&c).unwrap().matrix().to_dense(),
            vec![vec![0.0, 1.0], vec![1.0, 0.0]]
        );
        let empty = IdealFlowMatrix::from_dense(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(normalize_min(&empty), Err(Error::EmptyFlow));
        let total = normalize_total(&f, 1.0).unwrap();
        assert_abs_diff_eq!(total.total(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn premagic_checks() {
        let f = ArcMatrix::from_dense(&five_node_flow()).unwrap();
        let c = is_premagic(&f, PREMAGIC_TOL);
        assert!(c.premagic);
        assert_eq!(c.residual, 0.0);
        assert_eq!(f.row_sums(), vec![8.0, 3.0, 3.0, 16.0, 12.0]);
        assert_eq!(f.col_sums(), vec![8.0, 3.0, 3.0, 16.0, 12.0]);
        let bad = ArcMatrix::from_dense(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let c = is_premagic(&bad, PREMAGIC_TOL);
        assert!(!c.premagic);
        assert_eq!(c.residual, 1.0);
        let sym = ArcMatrix::from_dense(&[vec![0.0, 2.5, 1.0], vec![2.5, 0.0, 4.0], vec![1.0, 4.0, 0.0]]).unwrap();
        assert!(is_premagic(&sym, 0.0).premagic);
        assert!(matches!(
            IdealFlowMatrix::from_dense(&[vec![0.0, 1.0], vec![0.0, 0.0]]),
            Err(Error::NotPremagic(_))
        ));
    }

    #[test]
    fn entropies() {
        let t = uniform_transition(&five_node()).unwrap();
        assert_abs_diff_eq!(node_entropy(&t, 0), 2.0, epsilon = 1e-15);
        assert_eq!(node_entropy(&t, 4), 0.0);
        let n = DirectedNetwork::new(
            3,
            [
                Link::new(0, 1, 3.0),
                Link::new(0, 2, 1.0),
                Link::unit(1, 0),
                Link::unit(2, 0),
            ],
        )
        .unwrap();
        let tc = capacity_transition(&n).unwrap();
        let direct = -0.75 * 0.75f64.log2() - 0.25 * 0.25f64.log2();
        assert_abs_diff_eq!(direct, 0.811_278_124_459_132_8, epsilon = 1e-15);
        assert_abs_diff_eq!(node_entropy(&tc, 0), direct, epsilon = 1e-15);
        // uniform split of the same support carries at least as much entropy
        let tu = uniform_transition(&n).unwrap();
        for i in 0..3 {
            assert!(node_entropy(&tu, i) >= node_entropy(&tc, i));
        }
    }

    #[test]
    fn five_node_network_entropy() {
        let t = uniform_transition(&five_node()).unwrap();
        let pi = stationary(&t, 42.0).unwrap();
        let r = network_entropy(&t, &pi).unwrap();
        let l3 = 3f64.log2();
        let want = [2.0, l3, l3, 1.0, 0.0];
        for (g, w) in r.per_node.iter().zip(want) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-12);
        }
        let rate = (8.0 * 2.0 + 3.0 * l3 + 3.0 * l3 + 16.0) / 42.0;
        assert_abs_diff_eq!(r.network_entropy, rate, epsilon = 1e-12);

        let tri = uniform_transition(&triangle()).unwrap();
        let pi = stationary(&tri, 1.0).unwrap();
        assert_eq!(network_entropy(&tri, &pi).unwrap().network_entropy, 0.0);
    }

    #[test]
    fn perron_ratio_bound() {
        let ex = five_node();
        let t = uniform_transition(&ex).unwrap();
        let pi = stationary(&t, 42.0).unwrap();
        let (ratio, bound) = perron_ratio(&pi, &ex).unwrap();
        assert_abs_diff_eq!(ratio, 16.0 / 3.0, epsilon = 1e-9);
        assert_eq!(bound, 64.0); // 4^3
        assert!(perron_ratio_check(&pi, &ex));

        let tri = triangle();
        let t = uniform_transition(&tri).unwrap();
        let pi = stationary(&t, 1.0).unwrap();
        let (ratio, bound) = perron_ratio(&pi, &tri).unwrap();
        assert_abs_diff_eq!(ratio, 1.0, epsilon = 1e-12);
        assert_eq!(bound, 1.0);
        assert!(perron_ratio_check(&pi, &tri));
    }

    #[test]
    fn generalized_flow_follows_capacity() {
        // hub 0 feeding 1 and 2 at 3:1, both returning
        let n = DirectedNetwork::new(
            3,
            [
                Link::new(0, 1, 3.0),
                Link::new(0, 2, 1.0),
                Link::unit(1, 0),
                Link::unit(2, 0),
            ],
        )
        .unwrap();
        let f = min_normalized_flow(&n, Weighting::Capacity).unwrap();
        assert_abs_diff_eq!(f.get(0, 1), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.get(0, 2), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.get(1, 0), 3.0, epsilon = 1e-12);
        let s = min_normalized_flow(&n, Weighting::Uniform).unwrap();
        assert_abs_diff_eq!(s.get(0, 1), 1.0, epsilon = 1e-12);
    }
}
