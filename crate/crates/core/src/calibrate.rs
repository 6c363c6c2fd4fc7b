//! Fitting the global scale of an ideal flow to observed link volumes.
//!
//! Observed volumes fix a transition matrix by row normalization. Its ideal
//! flow with total 1 is the *unit* flow `F₁`, and the model prediction is
//! `κ·F₁`. The single parameter `κ` is chosen to minimize the squared error
//! against the observations.
//!
//! ```
//! use idealflow::calibrate::{fit_scale, unit_ideal_flow, FitMode, FitOptions};
//! use idealflow::matrix::ArcMatrix;
//!
//! let obs = ArcMatrix::from_dense(&[
//!     vec![0.0, 30.0, 10.0],
//!     vec![30.0, 0.0, 0.0],
//!     vec![10.0, 0.0, 0.0],
//! ])?;
//! let unit = unit_ideal_flow(&obs)?;
//! let fit = fit_scale(&unit, &obs, FitMode::ClosedForm, &FitOptions::default())?;
//! assert!((fit.kappa - 80.0).abs() < 1e-9);
//! assert!(fit.mse < 1e-12);
//! # Ok::<(), idealflow::Error>(())
//! ```

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{augment_with_cloud, AugmentedNetwork, DirectedNetwork};
use crate::io::{fmt_sig, serialize_sig};
use crate::markov::{ideal_flow, stationary, transition_from_flows, IdealFlowMatrix};
use crate::matrix::ArcMatrix;

/// Relative bracket width at which the golden-section search stops.
pub const SEARCH_TOL: f64 = 1e-6;
/// Points of the log-spaced grid traced in closed-form mode.
pub const TRACE_POINTS: usize = 41;

/// Ideal flow with total 1 of the chain implied by observed volumes.
pub fn unit_ideal_flow(observed: &ArcMatrix) -> Result<IdealFlowMatrix> {
    let t = transition_from_flows(observed)?;
    ideal_flow(&stationary(&t, 1.0)?, &t)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    /// `κ = Σ F₁·F_obs / Σ F₁²`, the exact least-squares minimizer.
    #[default]
    ClosedForm,
    /// Golden-section search of the squared error over a bracket.
    GoldenSection,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitOptions {
    /// Links excluded from the error unless `include_dummy` is set.
    pub dummy: HashSet<(usize, usize)>,
    pub include_dummy: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Residual {
    /// 1-based.
    pub tail: usize,
    /// 1-based.
    pub head: usize,
    #[serde(serialize_with = "serialize_sig")]
    pub observed: f64,
    #[serde(serialize_with = "serialize_sig")]
    pub fitted: f64,
    /// `observed − fitted`.
    #[serde(serialize_with = "serialize_sig")]
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TracePoint {
    #[serde(serialize_with = "serialize_sig")]
    pub kappa: f64,
    #[serde(serialize_with = "serialize_sig")]
    pub sse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CalibrationResult {
    pub mode: FitMode,
    #[serde(serialize_with = "serialize_sig")]
    pub kappa: f64,
    #[serde(serialize_with = "serialize_sig")]
    pub sse: f64,
    #[serde(serialize_with = "serialize_sig")]
    pub mse: f64,
    pub arc_count: usize,
    pub include_dummy: bool,
    pub residuals: Vec<Residual>,
    pub search_trace: Vec<TracePoint>,
}

impl CalibrationResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    pub fn residuals_csv(&self) -> String {
        let mut s = String::from("tail,head,observed,fitted,residual\n");
        for r in &self.residuals {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.tail,
                r.head,
                fmt_sig(r.observed),
                fmt_sig(r.fitted),
                fmt_sig(r.residual)
            ));
        }
        s
    }

    pub fn trace_csv(&self) -> String {
        let mut s = String::from("kappa,sse\n");
        for p in &self.search_trace {
            s.push_str(&format!("{},{}\n", fmt_sig(p.kappa), fmt_sig(p.sse)));
        }
        s
    }
}

/// Links entering the error: the union of both supports, minus dummy links
/// unless they are included. Values are `(unit, observed)`.
fn fit_pairs(unit: &ArcMatrix, observed: &ArcMatrix, opts: &FitOptions) -> BTreeMap<(usize, usize), (f64, f64)> {
    let mut pairs: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for (i, j, v) in unit.entries() {
        pairs.entry((i, j)).or_default().0 = v;
    }
    for (i, j, v) in observed.entries() {
        pairs.entry((i, j)).or_default().1 = v;
    }
    pairs.retain(|k, _| opts.include_dummy || !opts.dummy.contains(k));
    pairs
}

fn sse_at(pairs: &BTreeMap<(usize, usize), (f64, f64)>, kappa: f64) -> f64 {
    pairs.values().map(|(u, o)| (o - kappa * u).powi(2)).sum()
}

/// Fits `κ` so that `κ·unit` best matches `observed` in squared error.
pub fn fit_scale(
    unit: &IdealFlowMatrix,
    observed: &ArcMatrix,
    mode: FitMode,
    opts: &FitOptions,
) -> Result<CalibrationResult> {
    if unit.dim() != observed.dim() {
        return Err(Error::DimensionMismatch {
            expected: unit.dim(),
            found: observed.dim(),
        });
    }
    let pairs = fit_pairs(unit.matrix(), observed, opts);
    let uu: f64 = pairs.values().map(|(u, _)| u * u).sum();
    if uu == 0.0 {
        return Err(Error::ZeroUnitFlow);
    }
    let uo: f64 = pairs.values().map(|(u, o)| u * o).sum();
    let closed = uo / uu;
    if !(closed > 0.0) {
        return Err(Error::NonPositiveScale(closed));
    }
    // spans a factor of 100 around the scale ratio of the two totals
    let ratio = pairs.values().map(|p| p.1).sum::<f64>() / pairs.values().map(|p| p.0).sum::<f64>();
    let (lo, hi) = (ratio / 10.0, ratio * 10.0);

    let (kappa, search_trace) = match mode {
        FitMode::ClosedForm => {
            let mut trace: Vec<TracePoint> = (0..TRACE_POINTS)
                .map(|k| {
                    let kappa = lo * (hi / lo).powf(k as f64 / (TRACE_POINTS - 1) as f64);
                    TracePoint {
                        kappa,
                        sse: sse_at(&pairs, kappa),
                    }
                })
                .collect();
            trace.push(TracePoint {
                kappa: closed,
                sse: sse_at(&pairs, closed),
            });
            trace.sort_by(|a, b| a.kappa.total_cmp(&b.kappa));
            (closed, trace)
        }
        FitMode::GoldenSection => golden_section(&pairs, lo, hi),
    };

    let sse = sse_at(&pairs, kappa);
    let residuals = pairs
        .iter()
        .map(|(&(i, j), &(u, o))| Residual {
            tail: i + 1,
            head: j + 1,
            observed: o,
            fitted: kappa * u,
            residual: o - kappa * u,
        })
        .collect();
    Ok(CalibrationResult {
        mode,
        kappa,
        sse,
        mse: sse / pairs.len() as f64,
        arc_count: pairs.len(),
        include_dummy: opts.include_dummy,
        residuals,
        search_trace,
    })
}

fn golden_section(pairs: &BTreeMap<(usize, usize), (f64, f64)>, mut a: f64, mut b: f64) -> (f64, Vec<TracePoint>) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut trace = Vec::new();
    let eval = |k: f64, trace: &mut Vec<TracePoint>| {
        let sse = sse_at(pairs, k);
        trace.push(TracePoint { kappa: k, sse });
        sse
    };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c, &mut trace);
    let mut fd = eval(d, &mut trace);
    while (b - a) > SEARCH_TOL * 0.5 * (a + b) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c, &mut trace);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d, &mut trace);
        }
    }
    let best = trace
        .iter()
        .min_by(|x, y| x.sse.total_cmp(&y.sse))
        .map(|p| p.kappa)
        .expect("at least two evaluations");
    (best, trace)
}

/// Fills volumes on the dummy links of an augmented network.
///
/// A link `v -> cloud` carries the surplus of inflow over outflow at `v`, and
/// `cloud -> v` the surplus of outflow over inflow. Where that surplus is not
/// positive the smallest positive observed volume is used, so every dummy
/// link keeps the walk irreducible.
pub fn fill_dummy_flows(aug: &AugmentedNetwork, observed: &ArcMatrix) -> Result<ArcMatrix> {
    let n = aug.network.node_count();
    let base_n = aug.base.node_count();
    if observed.dim() != base_n {
        return Err(Error::DimensionMismatch {
            expected: base_n,
            found: observed.dim(),
        });
    }
    let fallback = observed.min_positive().ok_or(Error::EmptyFlow)?;
    let out = observed.row_sums();
    let inn = observed.col_sums();
    let mut entries: Vec<(usize, usize, f64)> = observed.entries().collect();
    for l in &aug.dummy_links {
        let (t, h) = l.key();
        let surplus = if h >= base_n { inn[t] - out[t] } else { out[h] - inn[h] };
        entries.push((t, h, if surplus > 0.0 { surplus } else { fallback }));
    }
    ArcMatrix::from_entries(n, entries)
}

/// Calibration of a network against observed link volumes.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub augmented: AugmentedNetwork,
    /// Observed volumes on the augmented network, dummy links filled.
    pub observed: ArcMatrix,
    pub unit: IdealFlowMatrix,
    pub result: CalibrationResult,
}

/// Augments `net` if needed, fills dummy volumes, and fits `κ`.
pub fn calibrate_network(
    net: &DirectedNetwork,
    observed: &ArcMatrix,
    mode: FitMode,
    include_dummy: bool,
) -> Result<Calibration> {
    let augmented = augment_with_cloud(net, 1.0)?;
    let observed = fill_dummy_flows(&augmented, observed)?;
    let unit = unit_ideal_flow(&observed)?;
    let opts = FitOptions {
        dummy: augmented.dummy_links.iter().map(|l| l.key()).collect(),
        include_dummy,
    };
    let result = fit_scale(&unit, &observed, mode, &opts)?;
    Ok(Calibration {
        augmented,
        observed,
        unit,
        result,
    })
}
