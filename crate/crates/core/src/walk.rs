//! Random-walk estimation of ideal flow.
//!
//! Agents walk the Markov chain of a [`StochasticMatrix`]: an agent at node
//! `i` moves to `j` with probability `T[i][j]`, and every traversal is
//! counted. Dividing the counts by their smallest nonzero value approaches the
//! min-normalized ideal flow as the number of transitions grows.
//!
//! Every agent draws from its own ChaCha8 stream, selected by the agent index
//! under a shared seed. Agents never share random state, so a run is
//! reproducible bit for bit regardless of thread count, and adding agents does
//! not perturb the paths of existing ones.
//!
//! ```
//! use idealflow::graph::{DirectedNetwork, Link};
//! use idealflow::markov::uniform_transition;
//! use idealflow::walk::{simulate, SimConfig};
//!
//! let net = DirectedNetwork::new(2, [Link::unit(0, 1), Link::unit(1, 0)])?;
//! let t = uniform_transition(&net)?;
//! let r = simulate(&t, &SimConfig::new(1, 10, 99))?;
//! assert_eq!(r.to_dense(), vec![vec![0, 5], vec![5, 0]]);
//! # Ok::<(), idealflow::Error>(())
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{is_strongly_connected, DirectedNetwork};
use crate::io::fmt_sig;
use crate::markov::{ideal_flow, normalize_min, stationary, uniform_transition, IdealFlowMatrix, StochasticMatrix};
use crate::matrix::ArcMatrix;

/// Where agents start.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Each agent draws its start node uniformly from its own stream.
    #[default]
    Uniform,
    /// Agent `a` starts at `nodes[a % nodes.len()]`.
    Explicit(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub agents: usize,
    pub steps: usize,
    pub seed: u64,
    #[serde(default)]
    pub placement: Placement,
    /// Uncounted steps taken before counting starts.
    #[serde(default)]
    pub burn_in: usize,
}

impl SimConfig {
    pub fn new(agents: usize, steps: usize, seed: u64) -> Self {
        SimConfig {
            agents,
            steps,
            seed,
            placement: Placement::Uniform,
            burn_in: 0,
        }
    }

    pub fn with_placement(mut self, nodes: Vec<usize>) -> Self {
        self.placement = Placement::Explicit(nodes);
        self
    }

    pub fn with_burn_in(mut self, steps: usize) -> Self {
        self.burn_in = steps;
        self
    }

    pub fn transitions(&self) -> u64 {
        self.agents as u64 * self.steps as u64
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.agents == 0 {
            return Err(Error::InvalidConfig("agents must be at least 1".into()));
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if let Placement::Explicit(nodes) = &self.placement {
            if nodes.is_empty() {
                return Err(Error::InvalidConfig("explicit placement is empty".into()));
            }
            if let Some(&index) = nodes.iter().find(|&&v| v >= n) {
                return Err(Error::NodeOutOfRange { index, n });
            }
        }
        Ok(())
    }
}

/// Traversal counts per link.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowCount {
    n: usize,
    arcs: Vec<(usize, usize)>,
    counts: Vec<u64>,
}

impl FlowCount {
    /// Counts from a dense integer matrix; zero cells are dropped.
    pub fn from_dense(rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare);
        }
        let (arcs, counts) = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .filter(|e| *e.1 > 0)
                    .map(move |(j, &c)| ((i, j), c))
            })
            .unzip();
        Ok(FlowCount { n, arcs, counts })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        match self.arcs.binary_search(&(i, j)) {
            Ok(k) => self.counts[k],
            Err(_) => 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(tail, head, count)` in row-major order, including zero counts on links.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.arcs.iter().zip(&self.counts).map(|(&(i, j), &c)| (i, j, c))
    }

    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        let mut d = vec![vec![0; self.n]; self.n];
        for (i, j, c) in self.entries() {
            d[i][j] = c;
        }
        d
    }

    pub fn as_matrix(&self) -> ArcMatrix {
        ArcMatrix::from_entries(self.n, self.entries().map(|(i, j, c)| (i, j, c as f64)))
            .expect("arcs are unique and in range")
    }

    /// Links of the walk that were never traversed.
    pub fn unvisited(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries().filter(|e| e.2 == 0).map(|(i, j, _)| (i, j))
    }
}

/// Counts divided by the smallest nonzero count.
pub fn relative_flow(r: &FlowCount) -> Result<ArcMatrix> {
    let m = r
        .counts
        .iter()
        .copied()
        .filter(|&c| c > 0)
        .min()
        .ok_or(Error::EmptyFlow)?;
    let entries = r
        .entries()
        .filter(|e| e.2 > 0)
        .map(|(i, j, c)| (i, j, c as f64 / m as f64));
    ArcMatrix::from_entries(r.n, entries)
}

/// Cumulative row distributions and the global link index of each entry.
struct Sampler {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    cum: Vec<f64>,
}

impl Sampler {
    fn new(t: &StochasticMatrix) -> Self {
        let n = t.dim();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut cum = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            let mut acc = 0.0;
            for (j, p) in t.matrix().row(i) {
                acc += p;
                cols.push(j);
                cum.push(acc);
            }
            row_ptr.push(cols.len());
        }
        Sampler { row_ptr, cols, cum }
    }

    /// Global entry index of the link taken from `i`.
    fn step(&self, i: usize, rng: &mut ChaCha8Rng) -> usize {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        if hi - lo == 1 {
            return lo;
        }
        let u: f64 = rng.random::<f64>() * self.cum[hi - 1];
        lo + self.cum[lo..hi - 1].partition_point(|&c| c <= u)
    }
}

struct Agent {
    rng: ChaCha8Rng,
    at: usize,
}

struct Walk<'a> {
    t: &'a StochasticMatrix,
    sampler: Sampler,
    agents: Vec<Agent>,
    counts: Vec<u64>,
    steps_done: usize,
}

impl<'a> Walk<'a> {
    fn start(t: &'a StochasticMatrix, cfg: &SimConfig) -> Result<Self> {
        let n = t.dim();
        cfg.validate(n)?;
        if n == 0 || !is_strongly_connected(&t.matrix().support()) {
            return Err(Error::NotIrreducible);
        }
        let sampler = Sampler::new(t);
        let mut agents: Vec<Agent> = (0..cfg.agents)
            .map(|a| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(a as u64);
                let at = match &cfg.placement {
                    Placement::Uniform => rng.random_range(0..n),
                    Placement::Explicit(nodes) => nodes[a % nodes.len()],
                };
                Agent { rng, at }
            })
            .collect();
        agents.par_iter_mut().for_each(|ag| {
            for _ in 0..cfg.burn_in {
                let k = sampler.step(ag.at, &mut ag.rng);
                ag.at = sampler.cols[k];
            }
        });
        Ok(Walk {
            t,
            counts: vec![0; sampler.cols.len()],
            sampler,
            agents,
            steps_done: 0,
        })
    }

    fn advance_to(&mut self, step: usize) {
        let todo = step.saturating_sub(self.steps_done);
        if todo == 0 {
            return;
        }
        let sampler = &self.sampler;
        let nnz = sampler.cols.len();
        // integer sums commute, so the reduction order cannot change the result
        let delta = self
            .agents
            .par_iter_mut()
            .fold(
                || vec![0u64; nnz],
                |mut acc, ag| {
                    for _ in 0..todo {
                        let k = sampler.step(ag.at, &mut ag.rng);
                        acc[k] += 1;
                        ag.at = sampler.cols[k];
                    }
                    acc
                },
            )
            .reduce(
                || vec![0u64; nnz],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        self.counts.iter_mut().zip(delta).for_each(|(x, y)| *x += y);
        self.steps_done = step;
    }

    fn flow_count(&self) -> FlowCount {
        FlowCount {
            n: self.t.dim(),
            arcs: self.t.matrix().entries().map(|(i, j, _)| (i, j)).collect(),
            counts: self.counts.clone(),
        }
    }
}

/// Runs `cfg.agents` walkers for `cfg.steps` counted steps each.
pub fn simulate(t: &StochasticMatrix, cfg: &SimConfig) -> Result<FlowCount> {
    let mut walk = Walk::start(t, cfg)?;
    walk.advance_to(cfg.steps);
    Ok(walk.flow_count())
}

/// Largest relative deviation `|rel − F| / F` over the links of `exact`.
pub fn max_relative_error(rel: &ArcMatrix, exact: &IdealFlowMatrix) -> f64 {
    exact
        .matrix()
        .entries()
        .filter(|e| e.2 > 0.0)
        .map(|(i, j, f)| (rel.get(i, j) - f).abs() / f)
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Checkpoint {
    pub transitions: u64,
    pub max_rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSeries {
    pub checkpoints: Vec<Checkpoint>,
    /// Counts at the last checkpoint; equal to [`simulate`] with the same config.
    pub counts: FlowCount,
}

impl ConvergenceSeries {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("transitions,max_rel_error\n");
        for c in &self.checkpoints {
            s.push_str(&format!("{},{}\n", c.transitions, fmt_sig(c.max_rel_error)));
        }
        s
    }
}

/// First checkpoint, in transitions.
pub const FIRST_CHECKPOINT: u64 = 1000;

/// Step counts at which checkpoints fall: transitions `1000·2^k` rounded up
/// to whole steps, at most `max_checkpoints − 1` of them, then the full run.
pub fn checkpoint_steps(cfg: &SimConfig, max_checkpoints: usize) -> Vec<usize> {
    let total = cfg.transitions();
    let agents = cfg.agents.max(1) as u64;
    let mut steps = Vec::new();
    let mut c = FIRST_CHECKPOINT;
    while c < total && steps.len() + 1 < max_checkpoints.max(1) {
        let s = c.div_ceil(agents) as usize;
        if steps.last() != Some(&s) && s < cfg.steps {
            steps.push(s);
        }
        c *= 2;
    }
    steps.push(cfg.steps);
    steps
}

/// Tracks the error of the relative counts against the exact flow of `t`
/// at geometrically spaced checkpoints of one run.
pub fn convergence_series(t: &StochasticMatrix, cfg: &SimConfig, max_checkpoints: usize) -> Result<ConvergenceSeries> {
    let exact = normalize_min(&ideal_flow(&stationary(t, 1.0)?, t)?)?;
    let mut walk = Walk::start(t, cfg)?;
    let mut checkpoints = Vec::new();
    for step in checkpoint_steps(cfg, max_checkpoints) {
        walk.advance_to(step);
        let rel = relative_flow(&walk.flow_count())?;
        checkpoints.push(Checkpoint {
            transitions: step as u64 * cfg.agents as u64,
            max_rel_error: max_relative_error(&rel, &exact),
        });
    }
    Ok(ConvergenceSeries {
        checkpoints,
        counts: walk.flow_count(),
    })
}

/// Default relative tolerance of [`propagate_flow`].
pub const PROPAGATE_TOL: f64 = 1e-10;

/// Deterministic flow propagation with equal splitting.
///
/// Injects `injection` units at `origin`, then repeatedly sets each node's
/// load to the sum of its inflows, split equally over its out-links, until
/// the largest change relative to the largest load drops below `tol`. Once
/// the change stops shrinking (a periodic network), consecutive iterates are
/// averaged instead. The result is min-normalized.
pub fn propagate_flow(
    net: &DirectedNetwork,
    origin: usize,
    injection: f64,
    max_iters: usize,
    tol: f64,
) -> Result<IdealFlowMatrix> {
    let n = net.node_count();
    if origin >= n {
        return Err(Error::NodeOutOfRange { index: origin, n });
    }
    if !(injection > 0.0) || !injection.is_finite() {
        return Err(Error::NonPositiveScale(injection));
    }
    if !is_strongly_connected(net) {
        return Err(Error::NotStronglyConnected);
    }
    let t = uniform_transition(net)?;
    let mut load = vec![0.0; n];
    load[origin] = injection;
    let mut lazy = false;
    let mut prev = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        let mut next = vec![0.0; n];
        for (i, j, p) in t.matrix().entries() {
            next[j] += load[i] * p;
        }
        let top = load.iter().copied().fold(0.0, f64::max);
        residual = next.iter().zip(&load).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / top;
        if residual < tol {
            let m = ArcMatrix::from_entries(n, t.matrix().entries().map(|(i, j, p)| (i, j, load[i] * p)))?;
            return normalize_min(&IdealFlowMatrix::new_approximate(m));
        }
        if !lazy && residual >= prev {
            lazy = true;
        }
        prev = residual;
        if lazy {
            for (x, y) in load.iter_mut().zip(next) {
                *x = 0.5 * (*x + y);
            }
        } else {
            load = next;
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        residual,
    })
}
