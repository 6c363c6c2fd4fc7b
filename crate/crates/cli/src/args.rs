use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "idealflow", version, about = "Ideal flow analysis of directed networks")]
pub struct Cli {
    /// Defaults file of `key = value` lines; `./idealflow.toml` is read when present.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ideal flow matrix of a network.
    Compute(ComputeArgs),
    /// Random-walk counts and their convergence to the ideal flow.
    Simulate(SimulateArgs),
    /// Fit the flow scale to observed link volumes.
    Calibrate(CalibrateArgs),
    /// Replay an edit script and report every stage.
    Whatif(WhatifArgs),
    /// Run the HTTP what-if service.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Json,
    Tntp,
}

#[derive(Debug, Args)]
pub struct NetworkInput {
    /// Network file: JSON document or TNTP network.
    pub network: PathBuf,

    /// Input format; sniffed from the extension or content when absent.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,

    /// Attach a cloud node when the network is not strongly connected.
    #[arg(long)]
    pub augment: bool,

    /// Split flow in proportion to link capacity instead of evenly.
    #[arg(long)]
    pub capacity_weighted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Markov,
    Nullspace,
    Propagate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeArg {
    Min,
    Total,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub input: NetworkInput,

    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,

    /// `min`: smallest link flow is 1. `total`: link flows sum to 1.
    #[arg(long, value_enum)]
    pub normalize: Option<NormalizeArg>,

    /// Multiplies the normalized flow.
    #[arg(long)]
    pub kappa: Option<f64>,

    /// Round to integers when every entry is within 1e-6 of one.
    #[arg(long)]
    pub snap: bool,

    /// Directory for `flow.csv` and `summary.json`; stdout gets one JSON object otherwise.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: NetworkInput,

    #[arg(long)]
    pub agents: Option<usize>,

    /// Counted steps per agent.
    #[arg(long)]
    pub steps: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Most checkpoints in the convergence series.
    #[arg(long)]
    pub checkpoints: Option<usize>,

    /// Uncounted steps before counting starts.
    #[arg(long)]
    pub burn_in: Option<usize>,

    /// Start nodes, 1-based, cycled over agents; uniform random when absent.
    #[arg(long, value_delimiter = ',')]
    pub start: Vec<usize>,

    /// Directory for `counts.csv`, `relative.csv`, `convergence.csv` and
    /// `summary.json`; stdout gets the convergence CSV otherwise.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    ClosedForm,
    #[value(alias = "golden-section")]
    Search,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Network file: TNTP network, or JSON document.
    pub network: PathBuf,

    /// TNTP link flow file; optional when the JSON document carries observed flows.
    pub flows: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,

    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,

    /// Count cloud links in the fitting error.
    #[arg(long)]
    pub include_dummy_arcs: bool,

    /// Directory for `result.json`, `residuals.csv` and `trace.csv`; stdout gets the result JSON otherwise.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WhatifArgs {
    #[command(flatten)]
    pub input: NetworkInput,

    /// JSON array of steps: `{"op":"add"|"remove","tail":t,"head":h}` or `{"op":"undo"}`, 1-based.
    pub script: PathBuf,

    /// Link reported in every stage, as `tail-head`, 1-based.
    #[arg(long, value_name = "T-H")]
    pub reference: Option<String>,

    /// Report file, one JSON snapshot per line; stdout otherwise.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub host: Option<String>,

    /// 0 picks a free port.
    #[arg(long)]
    pub port: Option<u16>,

    /// Allowed CORS origin, repeatable; `*` allows any.
    #[arg(long = "cors-origin", value_name = "ORIGIN")]
    pub cors_origins: Vec<String>,

    /// Directory of session journals, replayed on start.
    #[arg(long, value_name = "DIR")]
    pub journal: Option<PathBuf>,
}
