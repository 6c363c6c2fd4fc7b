//! Sparse square matrix whose support is a link set.

use crate::error::{Error, Result};
use crate::graph::{DirectedNetwork, Link};

/// Square matrix stored row-major in compressed rows.
///
/// Entries are kept in the same row-major order as the links of a
/// [`DirectedNetwork`], so the k-th stored value of a matrix built on a
/// network belongs to the network's k-th link.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl ArcMatrix {
    /// Keeps every nonzero entry of a dense square matrix.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare);
        }
        let entries = rows.iter().enumerate().flat_map(|(i, r)| {
            r.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(move |(j, &v)| (i, j, v))
        });
        ArcMatrix::from_entries(n, entries)
    }

    /// Builds from `(row, col, value)` triples in any order.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut e: Vec<(usize, usize, f64)> = entries.into_iter().collect();
        for &(i, j, _) in &e {
            if i >= n || j >= n {
                return Err(Error::NodeOutOfRange { index: i.max(j), n });
            }
        }
        e.sort_by_key(|&(i, j, _)| (i, j));
        if let Some(w) = e.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::DuplicateArc {
                tail: w[0].0,
                head: w[0].1,
            });
        }
        let mut row_ptr = vec![0; n + 1];
        for &(i, _, _) in &e {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(ArcMatrix {
            n,
            row_ptr,
            cols: e.iter().map(|x| x.1).collect(),
            vals: e.iter().map(|x| x.2).collect(),
        })
    }

    /// One entry per link of `net`, valued by `f`.
    pub fn on_network(net: &DirectedNetwork, f: impl Fn(&Link) -> f64) -> Self {
        let n = net.node_count();
        let mut row_ptr = vec![0; n + 1];
        for (i, p) in row_ptr.iter_mut().skip(1).enumerate() {
            *p = net.out_degree(i);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        ArcMatrix {
            n,
            row_ptr,
            cols: net.links().iter().map(|l| l.head.0).collect(),
            vals: net.links().iter().map(f).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[lo..hi].binary_search(&j) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[lo..hi].iter().copied().zip(self.vals[lo..hi].iter().copied())
    }

    /// Stored entries as `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for (&j, &v) in self.cols.iter().zip(&self.vals) {
            s[j] += v;
        }
        s
    }

    pub fn total(&self) -> f64 {
        self.vals.iter().sum()
    }

    pub fn max_entry(&self) -> f64 {
        self.vals.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest strictly positive entry.
    pub fn min_positive(&self) -> Option<f64> {
        self.vals.iter().copied().filter(|&v| v > 0.0).min_by(f64::total_cmp)
    }

    /// Same support, values transformed entrywise.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        ArcMatrix {
            vals: self.vals.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.entries() {
            d[i][j] = v;
        }
        d
    }

    /// The support as a unit-capacity network.
    pub fn support(&self) -> DirectedNetwork {
        DirectedNetwork::new(
            self.n,
            self.entries().filter(|e| e.2 != 0.0).map(|(i, j, _)| Link::unit(i, j)),
        )
        .expect("entries are unique and in range")
    }
}
