//! Edit sessions for what-if analysis.
//!
//! A [`Session`] holds a network, applies link additions and removals one at
//! a time, and recomputes the ideal flow after every edit. Edits that leave
//! the network without a valid flow are rejected and change nothing. Every
//! snapshot is a pure function of the initial network and the edit list, so
//! replaying the same edits always reproduces the same snapshots.
//!
//! Node numbers in edits and snapshots are 1-based positions in node order.
//!
//! ```
//! use idealflow::graph::{DirectedNetwork, Link};
//! use idealflow::whatif::{Edit, Session, SessionOptions};
//!
//! let ring = DirectedNetwork::new(5, (0..5).map(|i| Link::unit(i, (i + 1) % 5)))?;
//! let mut s = Session::new(ring, SessionOptions::default())?;
//! let snap = s.apply(Edit::add(2, 5))?;
//! assert_eq!(snap.flow_on(5, 1), Some(2.0));
//! assert_eq!(snap.flow_on(2, 3), Some(1.0));
//! s.undo()?;
//! assert_eq!(s.snapshot().max_flow_arc.value, 1.0);
//! # Ok::<(), idealflow::Error>(())
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{augment_with_cloud, is_strongly_connected, DirectedNetwork, Link};
use crate::io::round_sig;
use crate::markov::{
    ideal_flow, network_entropy, normalize_min, normalize_total, stationary, transition, IdealFlowMatrix, Weighting,
};
use crate::nullspace::nullspace_flow;
use crate::solve::{FlowMethod, Normalization};

/// A single change to a network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Edit {
    Add {
        tail: usize,
        head: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        capacity: Option<f64>,
    },
    Remove {
        tail: usize,
        head: usize,
    },
}

impl Edit {
    /// Unit-capacity addition, 1-based.
    pub fn add(tail: usize, head: usize) -> Self {
        Edit::Add {
            tail,
            head,
            capacity: None,
        }
    }

    pub fn remove(tail: usize, head: usize) -> Self {
        Edit::Remove { tail, head }
    }
}

/// One step of an edit script: an edit or an undo of the latest edit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptStep {
    Edit(Edit),
    Undo(UndoStep),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum UndoStep {
    Undo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionOptions {
    /// Attach a cloud node when the network is not strongly connected.
    pub augment: bool,
    pub weighting: Weighting,
    /// Pinned link reported in every snapshot, 1-based.
    pub reference_arc: Option<(usize, usize)>,
    pub dummy_capacity: f64,
    /// Capacity of added links that do not give one.
    pub default_capacity: f64,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            augment: false,
            weighting: Weighting::Uniform,
            reference_arc: None,
            dummy_capacity: 1.0,
            default_capacity: 1.0,
        }
    }
}

/// Flow on one link, 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ArcFlow {
    pub tail: usize,
    pub head: usize,
    pub value: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub dummy: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntropySummary {
    pub per_node: Vec<f64>,
    pub network: f64,
}

/// Metrics after a stage. Every number is rounded to 12 significant digits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsSnapshot {
    /// Number of edits in effect.
    pub stage: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edit: Option<Edit>,
    pub labels: Vec<String>,
    /// 1-based number of the cloud node, if one was attached.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud: Option<usize>,
    /// Min-normalized flow on every link in row-major order.
    pub flows: Vec<ArcFlow>,
    pub max_flow_arc: ArcFlow,
    pub premagic_residual: f64,
    pub entropy: EntropySummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_arc: Option<ArcFlow>,
}

impl MetricsSnapshot {
    /// Flow on `tail -> head`, 1-based.
    pub fn flow_on(&self, tail: usize, head: usize) -> Option<f64> {
        self.flows
            .iter()
            .find(|a| a.tail == tail && a.head == head)
            .map(|a| a.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }
}

fn arc_flow(f: &IdealFlowMatrix, cloud: Option<usize>, i: usize, j: usize) -> ArcFlow {
    ArcFlow {
        tail: i + 1,
        head: j + 1,
        value: round_sig(f.get(i, j)),
        dummy: cloud.is_some_and(|c| i == c || j == c),
    }
}

/// The network the flow is computed on: `base`, or `base` plus a cloud.
fn solvable(base: &DirectedNetwork, opts: &SessionOptions) -> Result<(DirectedNetwork, Option<usize>)> {
    if let Some(l) = base.links().iter().find(|l| l.tail == l.head) {
        return Err(Error::SelfLoop(l.tail.0));
    }
    if is_strongly_connected(base) {
        return Ok((base.clone(), None));
    }
    if !opts.augment {
        return Err(Error::NotStronglyConnected);
    }
    let aug = augment_with_cloud(base, opts.dummy_capacity)?;
    Ok((aug.network, aug.cloud.map(|c| c.0)))
}

fn markov_flow(net: &DirectedNetwork, weighting: Weighting) -> Result<(IdealFlowMatrix, EntropySummary)> {
    let t = transition(net, weighting)?;
    let pi = stationary(&t, 1.0)?;
    let e = network_entropy(&t, &pi)?;
    let f = ideal_flow(&pi, &t)?;
    Ok((
        f,
        EntropySummary {
            per_node: e.per_node.into_iter().map(round_sig).collect(),
            network: round_sig(e.network_entropy),
        },
    ))
}

fn snapshot(
    base: &DirectedNetwork,
    opts: &SessionOptions,
    stage: usize,
    edit: Option<Edit>,
) -> Result<MetricsSnapshot> {
    let (net, cloud) = solvable(base, opts)?;
    let (raw, entropy) = markov_flow(&net, opts.weighting)?;
    let f = normalize_min(&raw)?;
    let flows: Vec<ArcFlow> = f
        .matrix()
        .entries()
        .map(|(i, j, _)| arc_flow(&f, cloud, i, j))
        .collect();
    let (mi, mj, _) = f.max_link().ok_or(Error::EmptyFlow)?;
    let reference_arc = opts
        .reference_arc
        .filter(|&(t, h)| t >= 1 && h >= 1 && net.contains(t - 1, h - 1))
        .map(|(t, h)| arc_flow(&f, cloud, t - 1, h - 1));
    Ok(MetricsSnapshot {
        stage,
        edit,
        labels: (0..net.node_count()).map(|i| net.label(i)).collect(),
        cloud: cloud.map(|c| c + 1),
        flows,
        max_flow_arc: arc_flow(&f, cloud, mi, mj),
        premagic_residual: round_sig(f.premagic_residual()),
        entropy,
        reference_arc,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    initial: DirectedNetwork,
    current: DirectedNetwork,
    options: SessionOptions,
    initial_snapshot: MetricsSnapshot,
    history: Vec<(Edit, DirectedNetwork, MetricsSnapshot)>,
}

impl Session {
    /// Starts a session; fails when the network has no valid flow.
    pub fn new(net: DirectedNetwork, options: SessionOptions) -> Result<Self> {
        let initial_snapshot = snapshot(&net, &options, 0, None)?;
        Ok(Session {
            current: net.clone(),
            initial: net,
            options,
            initial_snapshot,
            history: Vec::new(),
        })
    }

    /// Builds a session and applies `edits` in order.
    pub fn replay(net: DirectedNetwork, options: SessionOptions, edits: &[Edit]) -> Result<Self> {
        let mut s = Session::new(net, options)?;
        for e in edits {
            s.apply(e.clone())?;
        }
        Ok(s)
    }

    pub fn options(&self) -> &SessionOptions {
        &self.options
    }

    pub fn initial(&self) -> &DirectedNetwork {
        &self.initial
    }

    pub fn network(&self) -> &DirectedNetwork {
        &self.current
    }

    pub fn stage(&self) -> usize {
        self.history.len()
    }

    pub fn edits(&self) -> impl Iterator<Item = &Edit> {
        self.history.iter().map(|h| &h.0)
    }

    pub fn snapshot(&self) -> &MetricsSnapshot {
        self.history.last().map(|h| &h.2).unwrap_or(&self.initial_snapshot)
    }

    /// Snapshots of every stage, starting with the initial network.
    pub fn snapshots(&self) -> impl Iterator<Item = &MetricsSnapshot> {
        std::iter::once(&self.initial_snapshot).chain(self.history.iter().map(|h| &h.2))
    }

    fn edited(&self, edit: &Edit) -> Result<DirectedNetwork> {
        let n = self.current.node_count();
        let idx = |v: usize| -> Result<usize> {
            if v == 0 || v > n {
                Err(Error::NodeOutOfRange { index: v, n })
            } else {
                Ok(v - 1)
            }
        };
        match *edit {
            Edit::Add { tail, head, capacity } => {
                let (t, h) = (idx(tail)?, idx(head)?);
                if t == h {
                    return Err(Error::SelfLoop(t));
                }
                let c = capacity.unwrap_or(self.options.default_capacity);
                self.current.with_link(Link::new(t, h, c))
            }
            Edit::Remove { tail, head } => self.current.without_link(idx(tail)?, idx(head)?),
        }
    }

    /// Applies an edit and returns the new snapshot. On error nothing changes.
    pub fn apply(&mut self, edit: Edit) -> Result<&MetricsSnapshot> {
        let next = self.edited(&edit)?;
        let snap = snapshot(&next, &self.options, self.stage() + 1, Some(edit.clone()))?;
        self.current = next.clone();
        self.history.push((edit, next, snap));
        Ok(self.snapshot())
    }

    /// Reverts the latest edit.
    pub fn undo(&mut self) -> Result<&MetricsSnapshot> {
        self.history.pop().ok_or(Error::EmptyHistory)?;
        self.current = self
            .history
            .last()
            .map(|h| h.1.clone())
            .unwrap_or_else(|| self.initial.clone());
        Ok(self.snapshot())
    }

    /// Current flow by `method`, normalized as requested.
    pub fn flow(&self, normalization: Normalization, method: FlowMethod) -> Result<IdealFlowMatrix> {
        let (net, _) = solvable(&self.current, &self.options)?;
        let f = match method {
            FlowMethod::Markov => markov_flow(&net, self.options.weighting)?.0,
            FlowMethod::Nullspace if self.options.weighting == Weighting::Uniform => nullspace_flow(&net)?,
            FlowMethod::Propagate if self.options.weighting == Weighting::Uniform => crate::walk::propagate_flow(
                &net,
                0,
                100.0,
                crate::solve::PROPAGATE_MAX_ITERS,
                crate::walk::PROPAGATE_TOL,
            )?,
            _ => {
                return Err(Error::InvalidConfig(
                    "capacity weighting is only available with the markov method".into(),
                ))
            }
        };
        match normalization {
            Normalization::Min => normalize_min(&f),
            Normalization::Total(t) => normalize_total(&f, t),
        }
    }

    /// The network the flow is computed on, cloud included.
    pub fn solved_network(&self) -> Result<DirectedNetwork> {
        Ok(solvable(&self.current, &self.options)?.0)
    }
}

/// Runs a script of edits and undos, returning the snapshot after each step.
///
/// The first snapshot is the initial stage. A rejected edit aborts with
/// [`Error::EditRejected`] naming its 1-based position in the script.
pub fn run_script(
    net: DirectedNetwork,
    options: SessionOptions,
    steps: &[ScriptStep],
) -> Result<(Session, Vec<MetricsSnapshot>)> {
    let mut s = Session::new(net, options)?;
    let mut out = vec![s.snapshot().clone()];
    for (k, step) in steps.iter().enumerate() {
        let r = match step {
            ScriptStep::Edit(e) => s.apply(e.clone()).cloned(),
            ScriptStep::Undo(_) => s.undo().cloned(),
        };
        match r {
            Ok(snap) => out.push(snap),
            Err(e) => {
                return Err(Error::EditRejected {
                    stage: k + 1,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok((s, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> DirectedNetwork {
        DirectedNetwork::new(5, (0..5).map(|i| Link::unit(i, (i + 1) % 5))).unwrap()
    }

    fn opts() -> SessionOptions {
        SessionOptions {
            reference_arc: Some((2, 3)),
            ..SessionOptions::default()
        }
    }

    #[test]
    fn staged_values() {
        let mut s = Session::new(ring(), opts()).unwrap();
        assert!(s.snapshot().flows.iter().all(|a| a.value == 1.0));
        assert!(s.snapshot().entropy.per_node.iter().all(|&h| h == 0.0));

        let b = s.apply(Edit::add(2, 5)).unwrap().clone();
        assert_eq!(b.flow_on(5, 1), Some(2.0));
        assert_eq!(b.flow_on(1, 2), Some(2.0));

        let c = s.apply(Edit::add(1, 3)).unwrap().clone();
        assert_eq!(c.max_flow_arc.value, 4.0);
        assert_eq!(c.reference_arc.as_ref().map(|a| a.value), Some(1.0));

        let d = s.apply(Edit::add(2, 4)).unwrap().clone();
        assert_eq!(d.max_flow_arc.value, 6.0);
        assert_eq!((d.max_flow_arc.tail, d.max_flow_arc.head), (5, 1));

        assert_eq!(s.apply(Edit::add(4, 1)).unwrap().flow_on(5, 1), Some(3.5));
        s.undo().unwrap();
        assert_eq!(s.snapshot(), &d);
        assert_eq!(s.apply(Edit::add(3, 1)).unwrap().flow_on(5, 1), Some(4.0));

        s.undo().unwrap();
        s.undo().unwrap();
        assert_eq!(s.snapshot(), &c);
    }

    #[test]
    fn rejected_edits_leave_state() {
        let mut s = Session::new(ring(), opts()).unwrap();
        let before = s.clone();
        assert_eq!(s.apply(Edit::remove(1, 2)).unwrap_err(), Error::NotStronglyConnected);
        assert_eq!(s, before);
        assert_eq!(
            s.apply(Edit::add(1, 2)).unwrap_err(),
            Error::DuplicateArc { tail: 0, head: 1 }
        );
        assert_eq!(
            s.apply(Edit::remove(1, 3)).unwrap_err(),
            Error::MissingArc { tail: 0, head: 2 }
        );
        assert_eq!(
            s.apply(Edit::add(1, 9)).unwrap_err(),
            Error::NodeOutOfRange { index: 9, n: 5 }
        );
        assert_eq!(s.apply(Edit::add(2, 2)).unwrap_err(), Error::SelfLoop(1));
        assert_eq!(s, before);
        assert_eq!(s.undo().unwrap_err(), Error::EmptyHistory);
    }

    #[test]
    fn replay_is_deterministic() {
        let edits = [Edit::add(2, 5), Edit::add(1, 3), Edit::add(2, 4)];
        let a = Session::replay(ring(), opts(), &edits).unwrap();
        let b = Session::replay(ring(), opts(), &edits).unwrap();
        let ja: Vec<String> = a.snapshots().map(MetricsSnapshot::to_json).collect();
        let jb: Vec<String> = b.snapshots().map(MetricsSnapshot::to_json).collect();
        assert_eq!(ja, jb);
        let mut c = Session::replay(ring(), opts(), &edits[..2]).unwrap();
        c.apply(edits[2].clone()).unwrap();
        c.undo().unwrap();
        c.apply(edits[2].clone()).unwrap();
        assert_eq!(c.snapshot().to_json(), a.snapshot().to_json());
    }

    #[test]
    fn augmented_session_notes_cloud() {
        let weave = DirectedNetwork::new(
            6,
            [
                Link::unit(0, 2),
                Link::unit(1, 2),
                Link::unit(2, 3),
                Link::unit(3, 4),
                Link::unit(3, 5),
            ],
        )
        .unwrap();
        assert_eq!(
            Session::new(weave.clone(), SessionOptions::default()).unwrap_err(),
            Error::NotStronglyConnected
        );
        let s = Session::new(
            weave,
            SessionOptions {
                augment: true,
                ..SessionOptions::default()
            },
        )
        .unwrap();
        let snap = s.snapshot();
        assert_eq!(snap.cloud, Some(7));
        assert_eq!(snap.labels.last().map(String::as_str), Some("cloud"));
        assert_eq!(snap.flows.iter().filter(|a| a.dummy).count(), 4);
        assert_eq!(snap.flow_on(3, 4), Some(2.0));
    }

    #[test]
    fn flow_methods_agree() {
        let s = Session::replay(ring(), opts(), &[Edit::add(2, 5), Edit::add(1, 3), Edit::add(2, 4)]).unwrap();
        let m = s.flow(Normalization::Min, FlowMethod::Markov).unwrap();
        let n = s.flow(Normalization::Min, FlowMethod::Nullspace).unwrap();
        for ((_, _, a), (_, _, b)) in m.matrix().entries().zip(n.matrix().entries()) {
            assert!((a - b).abs() < 1e-8);
        }
        let t = s.flow(Normalization::Total(1.0), FlowMethod::Markov).unwrap();
        assert!((t.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn script_steps_parse() {
        let steps: Vec<ScriptStep> =
            serde_json::from_str(r#"[{"op":"add","tail":2,"head":5},{"op":"undo"},{"op":"remove","tail":1,"head":2}]"#)
                .unwrap();
        assert_eq!(steps[0], ScriptStep::Edit(Edit::add(2, 5)));
        assert_eq!(steps[1], ScriptStep::Undo(UndoStep::Undo));
        let err = run_script(ring(), opts(), &steps).unwrap_err();
        assert!(matches!(err, Error::EditRejected { stage: 3, .. }));
        let (_, snaps) = run_script(ring(), opts(), &[]).unwrap();
        assert_eq!(snaps.len(), 1);
    }
}
