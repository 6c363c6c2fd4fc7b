//! One entry point over the three solution methods.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{is_strongly_connected, DirectedNetwork};
use crate::markov::{ideal_flow, normalize_min, normalize_total, stationary, transition, IdealFlowMatrix, Weighting};
use crate::nullspace::nullspace_flow;
use crate::walk::{propagate_flow, PROPAGATE_TOL};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMethod {
    /// Stationary vector of the walk.
    #[default]
    Markov,
    /// Null space of the conservation and equal-split system.
    Nullspace,
    /// Deterministic load propagation from node 0.
    Propagate,
}

impl std::str::FromStr for FlowMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markov" => Ok(FlowMethod::Markov),
            "nullspace" => Ok(FlowMethod::Nullspace),
            "propagate" => Ok(FlowMethod::Propagate),
            _ => Err(Error::InvalidConfig(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Smallest link flow equals 1.
    #[default]
    Min,
    /// Link flows sum to the given total.
    Total(f64),
}

/// Iteration cap of the propagation method.
pub const PROPAGATE_MAX_ITERS: usize = 1_000_000;

/// Ideal flow of a strongly connected network by the chosen method.
///
/// Null space and propagation encode equal splitting and so reject
/// [`Weighting::Capacity`].
///
/// ```
/// use idealflow::graph::DirectedNetwork;
/// use idealflow::markov::Weighting;
/// use idealflow::solve::{compute_flow, FlowMethod, Normalization};
///
/// let net = DirectedNetwork::from_adjacency(&[
///     vec![0.0, 1.0, 1.0, 1.0, 1.0],
///     vec![0.0, 0.0, 1.0, 1.0, 1.0],
///     vec![0.0, 1.0, 0.0, 1.0, 1.0],
///     vec![1.0, 0.0, 0.0, 0.0, 1.0],
///     vec![0.0, 0.0, 0.0, 1.0, 0.0],
/// ])?;
/// for method in [FlowMethod::Markov, FlowMethod::Nullspace, FlowMethod::Propagate] {
///     let f = compute_flow(&net, method, Weighting::Uniform, Normalization::Min)?;
///     assert!((f.get(4, 3) - 12.0).abs() < 1e-9);
/// }
/// # Ok::<(), idealflow::Error>(())
/// ```
pub fn compute_flow(
    net: &DirectedNetwork,
    method: FlowMethod,
    weighting: Weighting,
    normalization: Normalization,
) -> Result<IdealFlowMatrix> {
    if !is_strongly_connected(net) {
        return Err(Error::NotStronglyConnected);
    }
    if weighting == Weighting::Capacity && method != FlowMethod::Markov {
        return Err(Error::InvalidConfig(
            "capacity weighting is only available with the markov method".into(),
        ));
    }
    let f = match method {
        FlowMethod::Markov => {
            let t = transition(net, weighting)?;
            ideal_flow(&stationary(&t, 1.0)?, &t)?
        }
        FlowMethod::Nullspace => nullspace_flow(net)?,
        FlowMethod::Propagate => propagate_flow(net, 0, 100.0, PROPAGATE_MAX_ITERS, PROPAGATE_TOL)?,
    };
    match normalization {
        Normalization::Min => normalize_min(&f),
        Normalization::Total(total) => normalize_total(&f, total),
    }
}
