//! Standard ideal flow as the null space of a conservation system.
//!
//! Each link carries an unknown flow `e[k]`. Conservation at every node is
//! `B e = 0` for the incidence matrix `B`. Uniform splitting adds, for each
//! node with out-links `e₁ … e_k`, the chain `e₁ = e₂, …, e_{k−1} = e_k`.
//! Stacking both gives a square system `D e = 0` whose null space is one
//! dimensional for a strongly connected network.
//!
//! ```
//! use idealflow::graph::DirectedNetwork;
//! use idealflow::nullspace::nullspace_flow;
//!
//! let net = DirectedNetwork::from_adjacency(&[
//!     vec![0.0, 1.0, 1.0],
//!     vec![1.0, 0.0, 0.0],
//!     vec![1.0, 0.0, 0.0],
//! ])?;
//! let f = nullspace_flow(&net)?;
//! assert!((f.get(0, 1) - 1.0).abs() < 1e-12);
//! assert!((f.get(1, 0) - 1.0).abs() < 1e-12);
//! # Ok::<(), idealflow::Error>(())
//! ```

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{incidence, is_strongly_connected, DirectedNetwork, IncidenceMatrix};
use crate::markov::IdealFlowMatrix;
use crate::matrix::ArcMatrix;

/// Largest network solved by dense SVD under [`NullspaceMethod::Auto`].
pub const DENSE_MAX_NODES: usize = 512;
/// Relative size below which a singular value, or an entry left after
/// sparse elimination, counts as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Bound on `|B⁺e + B⁻e|` relative to `max(1, max load)`.
pub const CONSERVATION_TOL: f64 = 1e-9;

/// Positive and negative parts of an incidence matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct IncidenceSplit {
    b: IncidenceMatrix,
}

impl IncidenceSplit {
    pub fn incidence(&self) -> &IncidenceMatrix {
        &self.b
    }

    /// Entry of `B⁺` (0 or 1).
    pub fn plus(&self, row: usize, col: usize) -> i8 {
        self.b.get(row, col).max(0)
    }

    /// Entry of `B⁻` (0 or −1).
    pub fn minus(&self, row: usize, col: usize) -> i8 {
        self.b.get(row, col).min(0)
    }

    pub fn plus_dense(&self) -> Vec<Vec<i8>> {
        self.dense(|r, c| self.plus(r, c))
    }

    pub fn minus_dense(&self) -> Vec<Vec<i8>> {
        self.dense(|r, c| self.minus(r, c))
    }

    fn dense(&self, f: impl Fn(usize, usize) -> i8) -> Vec<Vec<i8>> {
        (0..self.b.rows())
            .map(|r| (0..self.b.cols()).map(|c| f(r, c)).collect())
            .collect()
    }

    /// `B⁺ e`: total outflow per node.
    pub fn outflow(&self, e: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.b.rows()];
        for (&(t, _), x) in self.b.columns().iter().zip(e) {
            v[t] += x;
        }
        v
    }

    /// `B⁻ e`: negated total inflow per node.
    pub fn inflow_neg(&self, e: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.b.rows()];
        for (&(_, h), x) in self.b.columns().iter().zip(e) {
            v[h] -= x;
        }
        v
    }
}

pub fn split_incidence(b: &IncidenceMatrix) -> IncidenceSplit {
    IncidenceSplit { b: b.clone() }
}

/// Equal-split rows: each row reads `e[plus] − e[minus] = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintMatrix {
    cols: usize,
    rows: Vec<(usize, usize)>,
}

impl ConstraintMatrix {
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `(column of +1, column of −1)` per row.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.rows
    }

    pub fn to_dense(&self) -> Vec<Vec<i8>> {
        self.rows
            .iter()
            .map(|&(a, b)| {
                let mut r = vec![0; self.cols];
                r[a] = 1;
                r[b] = -1;
                r
            })
            .collect()
    }
}

/// Chains consecutive out-links of every node with more than one.
pub fn build_constraints(net: &DirectedNetwork) -> ConstraintMatrix {
    let mut rows = Vec::new();
    let mut start = 0;
    for i in 0..net.node_count() {
        let k = net.out_degree(i);
        rows.extend((start..start + k).zip(start + 1..start + k));
        start += k;
    }
    ConstraintMatrix {
        cols: net.link_count(),
        rows,
    }
}

/// `D = [B; C]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedSystem {
    split: IncidenceSplit,
    constraints: ConstraintMatrix,
}

impl AugmentedSystem {
    pub fn new(net: &DirectedNetwork) -> Self {
        AugmentedSystem {
            split: split_incidence(&incidence(net)),
            constraints: build_constraints(net),
        }
    }

    pub fn split(&self) -> &IncidenceSplit {
        &self.split
    }

    pub fn constraints(&self) -> &ConstraintMatrix {
        &self.constraints
    }

    pub fn rows(&self) -> usize {
        self.split.b.rows() + self.constraints.rows()
    }

    pub fn cols(&self) -> usize {
        self.split.b.cols()
    }

    /// Each row as `(column, value)` pairs.
    pub fn sparse_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.split.b.rows()];
        for (k, &(t, h)) in self.split.b.columns().iter().enumerate() {
            rows[t].push((k, 1.0));
            rows[h].push((k, -1.0));
        }
        rows.extend(self.constraints.pairs().iter().map(|&(a, b)| vec![(a, 1.0), (b, -1.0)]));
        rows
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.sparse_rows()
            .into_iter()
            .map(|r| {
                let mut d = vec![0.0; self.cols()];
                for (c, v) in r {
                    d[c] += v;
                }
                d
            })
            .collect()
    }

    /// `D e`.
    pub fn apply(&self, e: &[f64]) -> Vec<f64> {
        self.sparse_rows()
            .iter()
            .map(|r| r.iter().map(|&(c, v)| v * e[c]).sum())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NullspaceMethod {
    /// Dense up to [`DENSE_MAX_NODES`] nodes, sparse above.
    #[default]
    Auto,
    /// Right singular vector of the smallest singular value.
    Dense,
    /// Sparse elimination with the single free variable pinned to 1.
    Sparse,
}

/// Positive spanning vector of the one-dimensional null space of `D`.
pub fn solve_null(d: &AugmentedSystem, method: NullspaceMethod) -> Result<Vec<f64>> {
    let p = d.cols();
    if p == 0 {
        return Err(Error::DegenerateNullSpace(0));
    }
    let dense = match method {
        NullspaceMethod::Auto => d.split.b.rows() <= DENSE_MAX_NODES,
        NullspaceMethod::Dense => true,
        NullspaceMethod::Sparse => false,
    };
    let mut e = if dense { null_dense(d)? } else { null_sparse(d)? };

    let scale = e.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let residual = d.apply(&e).iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if residual > 1e-9 * scale {
        return Err(Error::SolverFailure(format!("null vector residual {residual:e}")));
    }
    if e[0] < 0.0 {
        e.iter_mut().for_each(|v| *v = -*v);
    }
    if let Some((index, &value)) = e.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositiveEntry { index, value });
    }
    Ok(e)
}

fn null_dense(d: &AugmentedSystem) -> Result<Vec<f64>> {
    let (m, p) = (d.rows(), d.cols());
    let dense = d.to_dense();
    // pad to square so the SVD exposes all p right singular vectors
    let rows = m.max(p);
    let a = DMatrix::from_fn(rows, p, |i, j| if i < m { dense[i][j] } else { 0.0 });
    let svd = a.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::SolverFailure("SVD did not return V".into()))?;
    let sigma = &svd.singular_values;
    let smax = sigma.max();
    let null_dim = sigma.iter().filter(|&&s| s <= RANK_TOL * smax).count();
    if null_dim != 1 {
        return Err(Error::DegenerateNullSpace(null_dim));
    }
    let k = sigma.imin();
    Ok(vt.row(k).iter().copied().collect())
}

fn null_sparse(d: &AugmentedSystem) -> Result<Vec<f64>> {
    let p = d.cols();
    // pivot rows in creation order; each is reduced against all earlier ones
    let mut pivots: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; p];
    // scatter accumulator for the row being reduced
    let mut acc = vec![0.0; p];
    let mut live = vec![false; p];

    let mut rows = d.sparse_rows();
    // equal-split rows first, so each node's out-links collapse to one
    // unknown before the balance rows are eliminated
    rows.rotate_left(d.split.b.rows());
    for row in rows {
        let mut cols = Vec::new();
        let mut heap: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
        for (c, v) in row {
            if !live[c] {
                live[c] = true;
                cols.push(c);
                if let Some(k) = pivot_of_col[c] {
                    heap.push(Reverse(k));
                }
            }
            acc[c] += v;
        }
        // cancellation error scales with the largest value seen while reducing
        let mut peak = cols.iter().fold(0.0, |m: f64, &c| m.max(acc[c].abs()));
        while let Some(Reverse(k)) = heap.pop() {
            let (pc, prow) = &pivots[k];
            let v = acc[*pc];
            if v == 0.0 {
                continue;
            }
            let factor = v / prow.iter().find(|e| e.0 == *pc).map_or(1.0, |e| e.1);
            for &(c, w) in prow {
                if !live[c] {
                    live[c] = true;
                    cols.push(c);
                    if let Some(k2) = pivot_of_col[c] {
                        heap.push(Reverse(k2));
                    }
                }
                peak = peak.max((factor * w).abs());
                acc[c] -= factor * w;
            }
            acc[*pc] = 0.0;
        }
        let drop_tol = RANK_TOL * peak;
        let mut r: Vec<(usize, f64)> = cols
            .into_iter()
            .filter_map(|c| {
                let v = std::mem::take(&mut acc[c]);
                live[c] = false;
                (v.abs() > drop_tol).then_some((c, v))
            })
            .collect();
        r.sort_unstable_by_key(|e| e.0);
        let best = r
            .iter()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|&(c, _)| c);
        if let Some(c) = best {
            pivot_of_col[c] = Some(pivots.len());
            pivots.push((c, r));
        }
    }

    let free: Vec<usize> = (0..p).filter(|&c| pivot_of_col[c].is_none()).collect();
    if free.len() != 1 {
        return Err(Error::DegenerateNullSpace(free.len()));
    }
    let mut e = vec![0.0; p];
    e[free[0]] = 1.0;
    for (pc, row) in pivots.iter().rev() {
        let mut diag = 1.0;
        let mut s = 0.0;
        for &(c, v) in row {
            if c == *pc {
                diag = v;
            } else {
                s += v * e[c];
            }
        }
        e[*pc] = -s / diag;
    }
    Ok(e)
}

/// Divides by the smallest entry.
pub fn normalize_edges(e: &[f64]) -> Result<Vec<f64>> {
    if let Some((index, &value)) = e.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositiveEntry { index, value });
    }
    let m = e.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(e.iter().map(|&v| if v == m { 1.0 } else { v / m }).collect())
}

/// Node throughput `B⁺e`, checked against the inflow `−B⁻e`.
pub fn node_loads(split: &IncidenceSplit, e: &[f64]) -> Result<Vec<f64>> {
    if e.len() != split.b.cols() {
        return Err(Error::DimensionMismatch {
            expected: split.b.cols(),
            found: e.len(),
        });
    }
    let out = split.outflow(e);
    let inn = split.inflow_neg(e);
    let residual = out.iter().zip(&inn).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
    let scale = out.iter().copied().fold(1.0, f64::max);
    if residual > CONSERVATION_TOL * scale {
        return Err(Error::ConservationViolated(residual));
    }
    Ok(out)
}

/// Min-normalized standard ideal flow of a strongly connected network.
pub fn nullspace_flow(net: &DirectedNetwork) -> Result<IdealFlowMatrix> {
    nullspace_flow_with(net, NullspaceMethod::Auto)
}

pub fn nullspace_flow_with(net: &DirectedNetwork, method: NullspaceMethod) -> Result<IdealFlowMatrix> {
    if let Some(l) = net.links().iter().find(|l| l.tail == l.head) {
        return Err(Error::SelfLoop(l.tail.0));
    }
    if !is_strongly_connected(net) {
        return Err(Error::NotStronglyConnected);
    }
    let d = AugmentedSystem::new(net);
    let f = normalize_edges(&solve_null(&d, method)?)?;
    node_loads(d.split(), &f)?;
    let entries = net.links().iter().zip(f).map(|(l, v)| (l.tail.0, l.head.0, v));
    IdealFlowMatrix::new(ArcMatrix::from_entries(net.node_count(), entries)?)
}
