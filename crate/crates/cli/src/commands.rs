use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use idealflow::calibrate::{calibrate_network, FitMode};
use idealflow::graph::{augment_with_cloud, is_strongly_connected, DirectedNetwork};
use idealflow::io::{
    export_matrix_csv, flows_on_network, fmt_sig, load_document, node_labels, parse_tntp_flow, parse_tntp_net,
    round_sig, NetworkDocument,
};
use idealflow::markov::{network_entropy, normalize_total, scale, stationary, transition, Weighting};
use idealflow::matrix::ArcMatrix;
use idealflow::solve::{compute_flow, FlowMethod, Normalization};
use idealflow::walk::{convergence_series, relative_flow, Placement, SimConfig};
use idealflow::whatif::{run_script, ScriptStep, SessionOptions};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    CalibrateArgs, Cli, Command, ComputeArgs, InputFormat, MethodArg, ModeArg, NetworkInput, NormalizeArg, ServeArgs,
    SimulateArgs, WhatifArgs,
};
use crate::config::Config;

/// Failure of the environment rather than of the input: exit code 4.
#[derive(Debug)]
pub struct EnvError(pub String);

impl fmt::Display for EnvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for EnvError {}

/// 2 for bad input, 3 for numerical failure, 4 for the environment.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<EnvError>().is_some() {
            return 4;
        }
        if let Some(err) = cause.downcast_ref::<idealflow::Error>() {
            return if err.is_numeric() { 3 } else { 2 };
        }
    }
    2
}

pub fn run(cli: Cli) -> Result<()> {
    let config = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Compute(a) => compute(a, &config),
        Command::Simulate(a) => simulate(a, &config),
        Command::Calibrate(a) => calibrate(a, &config),
        Command::Whatif(a) => whatif(a),
        Command::Serve(a) => serve(a, &config),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| EnvError(format!("writing {}: {e}", path.display())).into())
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| EnvError(format!("creating {}: {e}", dir.display())).into())
}

fn stdout(content: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(content.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| EnvError(format!("writing stdout: {e}")).into())
}

fn sniff(path: &Path, text: &str, format: Option<InputFormat>) -> InputFormat {
    format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some("json") => InputFormat::Json,
        Some("tntp") => InputFormat::Tntp,
        _ if text.trim_start().starts_with('{') => InputFormat::Json,
        _ => InputFormat::Tntp,
    })
}

enum Loaded {
    Document(NetworkDocument),
    Tntp(DirectedNetwork),
}

fn load(path: &Path, format: Option<InputFormat>) -> Result<Loaded> {
    let text = read(path)?;
    let parsed = match sniff(path, &text, format) {
        InputFormat::Json => load_document(&text).map(Loaded::Document),
        InputFormat::Tntp => parse_tntp_net(&text).map(|(n, _)| Loaded::Tntp(n)),
    };
    parsed.with_context(|| format!("parsing {}", path.display()))
}

fn load_network(path: &Path, format: Option<InputFormat>) -> Result<DirectedNetwork> {
    match load(path, format)? {
        Loaded::Document(d) => d.to_network().with_context(|| format!("parsing {}", path.display())),
        Loaded::Tntp(n) => Ok(n),
    }
}

fn weighting(input: &NetworkInput) -> Weighting {
    if input.capacity_weighted {
        Weighting::Capacity
    } else {
        Weighting::Uniform
    }
}

/// The network to solve and the 1-based cloud node, if one was attached.
fn prepare(input: &NetworkInput) -> Result<(DirectedNetwork, Option<usize>)> {
    let net = load_network(&input.network, input.format)?;
    if !input.augment || is_strongly_connected(&net) {
        return Ok((net, None));
    }
    let aug = augment_with_cloud(&net, 1.0)?;
    Ok((aug.network, aug.cloud.map(|c| c.0 + 1)))
}

fn rounded(m: &ArcMatrix) -> Vec<Vec<f64>> {
    m.to_dense()
        .into_iter()
        .map(|r| r.into_iter().map(round_sig).collect())
        .collect()
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct LinkValue {
    tail: usize,
    head: usize,
    value: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ComputeSummary {
    method: FlowMethod,
    weighting: Weighting,
    normalization: Normalization,
    nodes: usize,
    links: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    cloud: Option<usize>,
    snapped: bool,
    labels: Vec<String>,
    total: f64,
    premagic_residual: f64,
    max_flow_arc: LinkValue,
    node_entropy: Vec<f64>,
    network_entropy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<f64>>>,
}

fn compute(a: ComputeArgs, config: &Config) -> Result<()> {
    let (net, cloud) = prepare(&a.input)?;
    let method = match a.method.or(config.method).unwrap_or(MethodArg::Markov) {
        MethodArg::Markov => FlowMethod::Markov,
        MethodArg::Nullspace => FlowMethod::Nullspace,
        MethodArg::Propagate => FlowMethod::Propagate,
    };
    let kappa = a.kappa.or(config.kappa).unwrap_or(1.0);
    let normalization = match a.normalize.or(config.normalize).unwrap_or(NormalizeArg::Min) {
        NormalizeArg::Min => Normalization::Min,
        NormalizeArg::Total => Normalization::Total(kappa),
    };
    let w = weighting(&a.input);
    let f = compute_flow(&net, method, w, Normalization::Min)?;
    let mut f = match normalization {
        Normalization::Min => scale(&f, kappa)?,
        Normalization::Total(t) => normalize_total(&f, t)?,
    };
    let mut snapped = false;
    if a.snap {
        match f.snapped() {
            Some(s) => {
                f = s;
                snapped = true;
            }
            None => eprintln!("warning: flow is not integral within 1e-6; left unsnapped"),
        }
    }
    let t = transition(&net, w)?;
    let entropy = network_entropy(&t, &stationary(&t, 1.0)?)?;
    let (mi, mj, mv) = f.max_link().ok_or(idealflow::Error::EmptyFlow)?;
    let labels = node_labels(&net);
    let mut summary = ComputeSummary {
        method,
        weighting: w,
        normalization,
        nodes: net.node_count(),
        links: net.link_count(),
        cloud,
        snapped,
        labels: labels.clone(),
        total: round_sig(f.total()),
        premagic_residual: round_sig(f.premagic_residual()),
        max_flow_arc: LinkValue {
            tail: mi + 1,
            head: mj + 1,
            value: round_sig(mv),
        },
        node_entropy: entropy.per_node.iter().copied().map(round_sig).collect(),
        network_entropy: round_sig(entropy.network_entropy),
        matrix: None,
    };
    match a.out {
        Some(dir) => {
            out_dir(&dir)?;
            write(
                &dir.join("flow.csv"),
                &export_matrix_csv(&f.matrix().to_dense(), &labels),
            )?;
            write(&dir.join("summary.json"), &to_json(&summary))
        }
        None => {
            summary.matrix = Some(rounded(f.matrix()));
            stdout(&to_json(&summary))
        }
    }
}

fn simulate(a: SimulateArgs, config: &Config) -> Result<()> {
    let (net, _) = prepare(&a.input)?;
    let agents = a.agents.or(config.agents).unwrap_or(100);
    let steps = a.steps.or(config.steps).unwrap_or(200);
    let seed = a.seed.or(config.seed).unwrap_or(0);
    let checkpoints = a.checkpoints.or(config.checkpoints).unwrap_or(16);
    let mut cfg = SimConfig::new(agents, steps, seed).with_burn_in(a.burn_in.or(config.burn_in).unwrap_or(0));
    if !a.start.is_empty() {
        if let Some(&bad) = a.start.iter().find(|&&s| s == 0) {
            bail!(idealflow::Error::NodeOutOfRange {
                index: bad,
                n: net.node_count()
            });
        }
        cfg.placement = Placement::Explicit(a.start.iter().map(|s| s - 1).collect());
    }
    let t = transition(&net, weighting(&a.input))?;
    let series = convergence_series(&t, &cfg, checkpoints)?;
    let csv = series.to_csv();
    let Some(dir) = a.out else {
        return stdout(&csv);
    };
    out_dir(&dir)?;
    let labels = node_labels(&net);
    let counts: Vec<Vec<f64>> = series
        .counts
        .to_dense()
        .into_iter()
        .map(|r| r.into_iter().map(|c| c as f64).collect())
        .collect();
    let rel = relative_flow(&series.counts)?;
    write(&dir.join("counts.csv"), &export_matrix_csv(&counts, &labels))?;
    write(&dir.join("relative.csv"), &export_matrix_csv(&rel.to_dense(), &labels))?;
    write(&dir.join("convergence.csv"), &csv)?;
    let last = series.checkpoints.last().map_or(f64::NAN, |c| c.max_rel_error);
    let summary = json!({
        "agents": agents,
        "steps": steps,
        "burnIn": cfg.burn_in,
        "seed": seed,
        "transitions": series.counts.total(),
        "unvisitedLinks": series.counts.unvisited().count(),
        "finalMaxRelError": round_sig(last),
    });
    write(&dir.join("summary.json"), &to_json(&summary))
}

fn calibrate(a: CalibrateArgs, config: &Config) -> Result<()> {
    let (net, observed) = match load(&a.network, a.format)? {
        Loaded::Document(doc) => {
            let net = doc.to_network()?;
            let obs = match &a.flows {
                Some(p) => observed_from_file(&net, p)?,
                None => doc
                    .observed_matrix()?
                    .ok_or_else(|| anyhow!("no flow file given and the document has no observedFlows"))?,
            };
            (net, obs)
        }
        Loaded::Tntp(net) => {
            let p = a
                .flows
                .as_deref()
                .ok_or_else(|| anyhow!("a TNTP network needs a flow file"))?;
            let obs = observed_from_file(&net, p)?;
            (net, obs)
        }
    };
    let mode = match a.mode.or(config.mode).unwrap_or(ModeArg::ClosedForm) {
        ModeArg::ClosedForm => FitMode::ClosedForm,
        ModeArg::Search => FitMode::GoldenSection,
    };
    let cal = calibrate_network(&net, &observed, mode, a.include_dummy_arcs)?;
    let r = &cal.result;
    eprintln!(
        "kappa {} mse {} over {} links{}",
        fmt_sig(r.kappa),
        fmt_sig(r.mse),
        r.arc_count,
        if cal.augmented.cloud.is_some() {
            " (cloud attached)"
        } else {
            ""
        }
    );
    match a.out {
        Some(dir) => {
            out_dir(&dir)?;
            write(&dir.join("result.json"), &r.to_json())?;
            write(&dir.join("residuals.csv"), &r.residuals_csv())?;
            write(&dir.join("trace.csv"), &r.trace_csv())
        }
        None => stdout(&r.to_json()),
    }
}

fn observed_from_file(net: &DirectedNetwork, path: &Path) -> Result<ArcMatrix> {
    let recs = parse_tntp_flow(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(flows_on_network(net, &recs, true)?.0)
}

fn parse_reference(s: &str) -> Result<(usize, usize)> {
    let parse = || -> Option<(usize, usize)> {
        let (t, h) = s.split_once('-')?;
        Some((t.trim().parse().ok()?, h.trim().parse().ok()?))
    };
    parse().ok_or_else(|| anyhow!("--reference must look like 2-3, got {s:?}"))
}

fn whatif(a: WhatifArgs) -> Result<()> {
    let net = load_network(&a.input.network, a.input.format)?;
    let script = read(&a.script)?;
    let steps: Vec<ScriptStep> =
        serde_json::from_str(&script).with_context(|| format!("parsing {}", a.script.display()))?;
    let options = SessionOptions {
        augment: a.input.augment,
        weighting: weighting(&a.input),
        reference_arc: a.reference.as_deref().map(parse_reference).transpose()?,
        ..SessionOptions::default()
    };
    let (_, snapshots) = run_script(net, options, &steps)?;
    let mut report = String::new();
    for s in &snapshots {
        report.push_str(&s.to_json());
        report.push('\n');
    }
    match a.out {
        Some(p) => write(&p, &report),
        None => stdout(&report),
    }
}

fn serve(a: ServeArgs, config: &Config) -> Result<()> {
    use idealflow_service::{router, AppState, ServiceConfig};

    let host = a
        .host
        .or_else(|| config.host.clone())
        .unwrap_or_else(|| "127.0.0.1".into());
    let port = a.port.or(config.port).unwrap_or(8080);
    let cors_origins = if a.cors_origins.is_empty() {
        config.cors_origin.clone().unwrap_or_default()
    } else {
        a.cors_origins
    };
    let journal: Option<PathBuf> = a.journal.or_else(|| config.journal.clone());
    let state = match &journal {
        Some(dir) => {
            let s = AppState::with_journal(dir).map_err(|e| EnvError(e.to_string()))?;
            let n = s.recover().map_err(|e| EnvError(e.to_string()))?;
            tracing::info!(sessions = n, dir = %dir.display(), "journal replayed");
            s
        }
        None => AppState::new(),
    };
    let app = router(state, &ServiceConfig { cors_origins }).context("invalid --cors-origin")?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| EnvError(format!("starting runtime: {e}")))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host.as_str(), port))
            .await
            .map_err(|e| EnvError(format!("binding {host}:{port}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| EnvError(e.to_string()))?;
        stdout(&format!("listening on http://{addr}\n"))?;
        tracing::info!(%addr, "serving");
        idealflow_service::serve(listener, app, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| EnvError(format!("serving: {e}")))?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_cause() {
        let numeric = anyhow::Error::new(idealflow::Error::SolverFailure("x".into())).context("computing");
        assert_eq!(exit_code(&numeric), 3);
        let input = anyhow::Error::new(idealflow::Error::NotStronglyConnected);
        assert_eq!(exit_code(&input), 2);
        assert_eq!(exit_code(&anyhow::Error::new(EnvError("bind".into()))), 4);
        assert_eq!(exit_code(&anyhow!("anything else")), 2);
    }

    #[test]
    fn format_sniffing() {
        assert_eq!(sniff(Path::new("a.json"), "", None), InputFormat::Json);
        assert_eq!(sniff(Path::new("a.tntp"), "{", None), InputFormat::Tntp);
        assert_eq!(sniff(Path::new("a.txt"), "  {", None), InputFormat::Json);
        assert_eq!(
            sniff(Path::new("a.json"), "", Some(InputFormat::Tntp)),
            InputFormat::Tntp
        );
    }

    #[test]
    fn reference_syntax() {
        assert_eq!(parse_reference("2-3").unwrap(), (2, 3));
        assert!(parse_reference("2,3").is_err());
    }
}
