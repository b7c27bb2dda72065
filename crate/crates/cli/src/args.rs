use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "irfkit",
    version,
    about = "Impulse responses to persistent shocks: local projections, distributed lags, VARs, diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Portmanteau tests and correlograms for shock series.
    Test(TestArgs),
    /// Simulate one of the built-in data generating processes.
    Simulate(SimulateArgs),
    /// Estimate impulse responses from a CSV file.
    Irf(IrfArgs),
    /// Cumulative multiplier from two saved impulse responses.
    Multiplier(MultiplierArgs),
    /// Regenerate the plot data of a simulation figure.
    Replicate(ReplicateArgs),
    /// Execute a command described by a JSON config file.
    Run(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Test(_) => "test",
            Command::Simulate(_) => "simulate",
            Command::Irf(_) => "irf",
            Command::Multiplier(_) => "multiplier",
            Command::Replicate(_) => "replicate",
            Command::Run(_) => "run",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Output {
    /// Output directory (created if missing).
    #[arg(long, short = 'o', default_value = "irfkit-out")]
    #[serde(skip_serializing, default = "default_out")]
    pub out: PathBuf,
    /// Worker threads; IRFKIT_THREADS takes precedence.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

fn default_out() -> PathBuf {
    PathBuf::from("irfkit-out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKindArg {
    LjungBox,
    BoxPierce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NaPolicyArg {
    Reject,
    DropRows,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TestArgs {
    /// Input CSV.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Columns to test (default: every value column).
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    /// Period column.
    #[arg(long)]
    pub period: Option<String>,
    /// Entity column; switches to the pooled panel test.
    #[arg(long)]
    pub entity: Option<String>,
    /// Lag counts m.
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 20, 40, 60])]
    pub lags: Vec<usize>,
    /// Depth of the correlogram.
    #[arg(long, default_value_t = 40)]
    pub acf_lags: usize,
    #[arg(long, value_enum, default_value_t = TestKindArg::LjungBox)]
    pub kind: TestKindArg,
    #[arg(long, value_enum, default_value_t = NaPolicyArg::Reject)]
    pub na_policy: NaPolicyArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DgpArg {
    Simple,
    Extended,
    Iv,
    ExternalShock,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = DgpArg::Extended)]
    pub dgp: DgpArg,
    /// Sample length T (ignored for an external shock, which sets it).
    #[arg(long, default_value_t = 1000)]
    pub length: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Replicate index; selects an independent generator stream.
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,
    #[arg(long, default_value_t = 1.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.9)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.5)]
    pub b0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b1: f64,
    #[arg(long, default_value_t = 0.2)]
    pub gamma: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_u: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_eps: f64,
    /// Shock CSV for the external-shock process.
    #[arg(long)]
    pub shock_csv: Option<PathBuf>,
    /// Column of the shock CSV (default: the first value column).
    #[arg(long)]
    pub shock_column: Option<String>,
    /// Read the whole process from a JSON spec instead of the flags above.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateTimingArg {
    Lagged,
    Current,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct IrfArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub period: Option<String>,
    /// Outcome column.
    #[arg(long)]
    pub y: String,
    /// Shock column; the endogenous regressor for LP-IV.
    #[arg(long)]
    pub shock: String,
    /// lp, lp-leads, dlm, dlm-innovation, lp-residual-adjusted, lp-iv,
    /// lp-iv-leads, nonlinear-lp, var-endog or var-x.
    #[arg(long, default_value = "lp")]
    pub estimator: String,
    #[arg(long, default_value_t = 20)]
    pub horizon: usize,
    /// Lead rule: "h" (h leads at horizon h) or a fixed count.
    #[arg(long)]
    pub leads: Option<String>,
    /// Cap on the number of leads at each horizon.
    #[arg(long)]
    pub lead_cap: Option<usize>,
    /// Controls as name or name:lags; a bare name gets 4 lags.
    #[arg(long, value_delimiter = ',')]
    pub controls: Vec<String>,
    /// Lags of the shock entering as controls.
    #[arg(long, default_value_t = 0)]
    pub shock_lags: usize,
    /// Newey-West truncation lag (default: the horizon).
    #[arg(long)]
    pub nw_bandwidth: Option<usize>,
    /// 0/1 state column for state-dependent projections.
    #[arg(long)]
    pub state: Option<String>,
    /// Control for leads of the state.
    #[arg(long)]
    pub state_leads: bool,
    #[arg(long, value_enum, default_value_t = StateTimingArg::Lagged)]
    pub state_timing: StateTimingArg,
    /// Instrument column for LP-IV.
    #[arg(long)]
    pub instrument: Option<String>,
    /// Column whose leads are added (default: shock, or instrument for LP-IV).
    #[arg(long)]
    pub lead_series: Option<String>,
    #[arg(long, default_value_t = 0.95)]
    pub ci_level: f64,
    /// Zero-fill leads past the end of the sample instead of dropping rows.
    #[arg(long)]
    pub pad_tail_leads: bool,
    /// Estimate every horizon on one common sample.
    #[arg(long)]
    pub comparable_sample: bool,
    #[arg(long)]
    pub trend: bool,
    /// Shock lags in distributed lag models (default: the horizon).
    #[arg(long)]
    pub dlm_lags: Option<usize>,
    /// AR order of the shock for innovation-based estimators.
    #[arg(long, default_value_t = 1)]
    pub shock_ar_order: usize,
    /// VAR lag order.
    #[arg(long, default_value_t = 1)]
    pub var_lags: usize,
    /// Lags of the exogenous shock in VAR-X (default: the horizon).
    #[arg(long)]
    pub exog_lags: Option<usize>,
    /// Extra endogenous VAR variables, ordered after the shock and outcome.
    #[arg(long, value_delimiter = ',')]
    pub var_variables: Vec<String>,
    #[arg(long, value_enum, default_value_t = NaPolicyArg::Reject)]
    pub na_policy: NaPolicyArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MultiplierArgs {
    /// Numerator response JSON (output of `irf`).
    #[arg(long)]
    pub num: PathBuf,
    /// Denominator response JSON.
    #[arg(long)]
    pub den: PathBuf,
    /// Regime path to use from state-dependent results.
    #[arg(long)]
    pub regime: Option<String>,
    /// Response variable to use from VAR results.
    #[arg(long)]
    pub response: Option<String>,
    /// Absolute tolerance below which a cumulated denominator counts as zero.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplicateArgs {
    /// fig1, fig2, figB1, figB2, figB3, figB4 or figB5.
    pub figure: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Sample length of the simulated series.
    #[arg(long, default_value_t = 1_000_000)]
    pub length: usize,
    #[arg(long, default_value_t = 20)]
    pub horizon: usize,
    /// Shock lags in distributed lag regressions.
    #[arg(long, default_value_t = 50)]
    pub dlm_lags: usize,
    /// Monte Carlo replications (figB3).
    #[arg(long, default_value_t = 10_000)]
    pub replications: usize,
    /// Shock CSV (figB3).
    #[arg(long)]
    pub shock_csv: Option<PathBuf>,
    #[arg(long)]
    pub shock_column: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON config: {"command": "...", ...flags of that command}.
    #[arg(long, short)]
    pub config: PathBuf,
}

/// Turns a JSON config object into the argument vector of the named command,
/// so configs and flags share one parser and one set of defaults.
pub fn config_to_argv(config: &serde_json::Value) -> Result<Vec<String>, String> {
    let obj = config.as_object().ok_or("config must be a JSON object")?;
    let command = obj
        .get("command")
        .and_then(|c| c.as_str())
        .ok_or("config needs a string field \"command\"")?;
    if command == "run" {
        return Err("a config cannot invoke \"run\"".into());
    }
    let mut argv = vec!["irfkit".to_string(), command.to_string()];
    let mut positional = Vec::new();
    for (key, value) in obj {
        if key == "command" {
            continue;
        }
        if command == "replicate" && key == "figure" {
            positional.push(scalar(key, value)?);
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            serde_json::Value::Null => {}
            serde_json::Value::Bool(true) => argv.push(flag),
            serde_json::Value::Bool(false) => {}
            serde_json::Value::Array(items) => {
                if !items.is_empty() {
                    let parts: Result<Vec<String>, String> = items.iter().map(|v| scalar(key, v)).collect();
                    argv.push(flag);
                    argv.push(parts?.join(","));
                }
            }
            v => {
                argv.push(flag);
                argv.push(scalar(key, v)?);
            }
        }
    }
    argv.extend(positional);
    Ok(argv)
}

fn scalar(key: &str, v: &serde_json::Value) -> Result<String, String> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        serde_json::Value::Bool(b) => Ok(b.to_string()),
        _ => Err(format!("config field \"{key}\" must be a scalar or a list of scalars")),
    }
}
