// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

//! The `weakbell` command line.
//!
//! Every run prints a JSON summary on stdout. Commands that write records
//! (`--out`) also write a manifest next to them, and `rerun` regenerates the
//! same files from that manifest.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 invalid usage,
//! 3 the exhaustive CHSH check failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use weakbell_core::auditor::{
    chsh_bound_check, decomposition_test_with, exhaustive_verify, AuditConfig, BinaryTuple,
    HiddenVariableSource,
};
use weakbell_core::harness::{
    emit_manifest, emit_predictions, emit_records, load_manifest, read_records, run_sweep,
    simulate, simulate_hidden_variables, simulate_post_protocol, simulate_predictions, write_sweep,
    RunManifest, SweepSpec, WorkerPool,
};
use weakbell_core::predictor::{
    combine_bell_samples, exact_prediction_accuracy, post_protocol_chsh, prediction_accuracy,
    PostSelection, SequentialReadoutParams,
};
use weakbell_core::protocol::{estimate_chsh, exact_chsh, BellKind, Settings};
use weakbell_core::seed::rng_from_seed;
use weakbell_core::{CouplingStrength, NoiseModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_THEOREM: i32 = 3;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "weakbell",
    version,
    about = "Weak-measurement Bell test simulator and auditor"
)]
pub struct Cli {
    /// Worker threads; defaults to one per CPU. Output does not depend on it.
    #[arg(long, global = true, value_parser = parse_workers)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Enumerate all 16 binary tuples and check random binary sequences.
    VerifyTheorem(VerifyArgs),
    /// Generate trial records.
    Simulate(SimulateArgs),
    /// Test a record file against the binary-plus-noise model.
    Audit(AuditArgs),
    /// Ancilla-readout prediction experiment.
    Predict(PredictArgs),
    /// CHSH and audit verdict across coupling strengths.
    Sweep(SweepArgs),
    /// Repeat a recorded run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// Random binary sequences to check after the exhaustive table.
    #[arg(long, default_value_t = 100_000)]
    pub random_sequences: u64,
    #[arg(long, default_value_t = 64)]
    pub sequence_length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// The quantum weak-then-strong protocol.
    Quantum,
    /// Local binary hidden variables with the same detector model.
    HiddenVariable,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExperimentArgs {
    /// Weak coupling strength in (0, 1].
    #[arg(long, value_parser = parse_strength)]
    pub v: f64,
    /// `a1,a2,b1,b2` in degrees; defaults to the optimal CHSH angles.
    #[arg(long, value_parser = parse_angles, allow_hyphen_values = true)]
    pub angles: Option<Angles>,
    #[arg(long, value_parser = parse_bell, default_value = "phi+")]
    pub bell: BellKindArg,
    #[arg(long, default_value_t = 0.0, value_parser = parse_sigma)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true, value_parser = parse_finite)]
    pub noise_bias: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub experiment: ExperimentArgs,
    #[arg(long)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Source::Quantum)]
    pub source: Source,
    /// Record CSV; a manifest is written to `<out>.manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AuditArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Coupling strength used to rescale the raw outcomes.
    #[arg(long, value_parser = parse_strength)]
    pub v: f64,
    #[arg(long, default_value_t = 3.0, value_parser = parse_positive)]
    pub threshold_sigmas: f64,
    #[arg(long, default_value_t = 0.2, value_parser = parse_positive)]
    pub stderr_cap: f64,
    #[arg(long, default_value_t = 100)]
    pub min_count: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    /// System-ancilla coupling strength in (0, 1].
    #[arg(long, value_parser = parse_strength)]
    pub v: f64,
    /// Strength of each ancilla readout step.
    #[arg(long, default_value_t = 0.05, value_parser = parse_strength)]
    pub readout_v: f64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: u32,
    #[arg(long)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `b1,b2` in degrees, the axes both coupled and measured.
    #[arg(long, value_parser = parse_axes, allow_hyphen_values = true, default_value = "45,-45")]
    pub axes: Axes,
    #[arg(long, value_parser = parse_bell, default_value = "phi+")]
    pub bell: BellKindArg,
    /// Prediction CSV; a manifest is written to `<out>.manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Comma-separated coupling strengths.
    #[arg(long, value_parser = parse_grid, default_value = "0.1,0.5,0.95")]
    pub v_grid: Grid,
    /// Trials per grid point.
    #[arg(long)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_angles, allow_hyphen_values = true)]
    pub angles: Option<Angles>,
    #[arg(long, value_parser = parse_bell, default_value = "phi+")]
    pub bell: BellKindArg,
    #[arg(long, default_value_t = 0.0, value_parser = parse_sigma)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 3.0, value_parser = parse_positive)]
    pub threshold_sigmas: f64,
    /// Sweep CSV; a manifest is written to `<out>.manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write to this path instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angles(pub [f64; 4]);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axes(pub [f64; 2]);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid(pub Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BellKindArg(pub BellKind);

fn parse_finite(s: &str) -> Result<f64, String> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_strength(s: &str) -> Result<f64, String> {
    let v = parse_finite(s)?;
    CouplingStrength::new(v)
        .map(|c| c.value())
        .map_err(|e| e.to_string())
}

fn parse_sigma(s: &str) -> Result<f64, String> {
    let x = parse_finite(s)?;
    NoiseModel::unbiased(x)
        .map(|n| n.sigma)
        .map_err(|e| e.to_string())
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let x = parse_finite(s)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("`{s}` must be positive"))
    }
}

fn parse_workers(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("`{s}` is not a positive worker count")),
    }
}

fn parse_list(s: &str, len: usize) -> Result<Vec<f64>, String> {
    let values: Vec<f64> = s.split(',').map(parse_finite).collect::<Result<_, _>>()?;
    if values.len() != len {
        return Err(format!(
            "expected {len} comma-separated values, got {}",
            values.len()
        ));
    }
    Ok(values)
}

fn parse_angles(s: &str) -> Result<Angles, String> {
    let v = parse_list(s, 4)?;
    Ok(Angles([v[0], v[1], v[2], v[3]]))
}

fn parse_axes(s: &str) -> Result<Axes, String> {
    let v = parse_list(s, 2)?;
    Ok(Axes([v[0], v[1]]))
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let values: Vec<f64> = s.split(',').map(parse_strength).collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err("empty grid".into());
    }
    Ok(Grid(values))
}

fn parse_bell(s: &str) -> Result<BellKindArg, String> {
    s.parse::<BellKind>()
        .map(BellKindArg)
        .map_err(|e| e.to_string())
}

fn settings_from(
    angles: Option<Angles>,
    bell: BellKind,
    v: f64,
    noise: NoiseModel,
) -> anyhow::Result<Settings> {
    let degrees = angles.map_or_else(|| bell.optimal_chsh_degrees(), |a| a.0);
    Ok(Settings::from_degrees(
        degrees,
        CouplingStrength::new(v)?,
        noise,
        bell,
    )?)
}

impl ExperimentArgs {
    fn settings(&self) -> anyhow::Result<Settings> {
        let noise = NoiseModel::new(self.noise_bias, self.noise_sigma)?;
        settings_from(self.angles, self.bell.0, self.v, noise)
    }
}

/// Parses `argv` and runs it, writing the JSON summary (or help, or an
/// error) to the given streams. Returns the process exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let pool = match cli.workers {
        Some(n) => WorkerPool::new(n).expect("worker count validated by the parser"),
        None => WorkerPool::available(),
    };
    match execute(&cli.command, &pool) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.summary).unwrap_or_default();
            if writeln!(out, "{text}").is_err() {
                return EXIT_RUNTIME;
            }
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(
        argv,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}

pub struct Outcome {
    pub summary: Value,
    pub code: i32,
}

impl Outcome {
    fn ok(summary: Value) -> Self {
        Self {
            summary,
            code: EXIT_OK,
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn execute(command: &Command, pool: &WorkerPool) -> anyhow::Result<Outcome> {
    match command {
        Command::VerifyTheorem(args) => verify_theorem(args),
        Command::Simulate(args) => simulate_cmd(command, args, pool),
        Command::Audit(args) => audit_cmd(args),
        Command::Predict(args) => predict_cmd(command, args, pool),
        Command::Sweep(args) => sweep_cmd(command, args, pool),
        Command::Rerun(args) => rerun_cmd(args, pool),
    }
}

fn write_manifest(command: &Command, started: RunManifest, out: &Path) -> anyhow::Result<PathBuf> {
    let mut manifest = started.with_parameter("args", command)?;
    manifest.finish([out.display().to_string()]);
    let path = manifest_path(out);
    emit_manifest(&manifest, &path).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::VerifyTheorem(_) => "verify-theorem",
        Command::Simulate(_) => "simulate",
        Command::Audit(_) => "audit",
        Command::Predict(_) => "predict",
        Command::Sweep(_) => "sweep",
        Command::Rerun(_) => "rerun",
    }
}

fn verify_theorem(args: &VerifyArgs) -> anyhow::Result<Outcome> {
    let table = exhaustive_verify();
    let mut rng = rng_from_seed(args.seed);
    let mut worst = f64::NEG_INFINITY;
    let mut sequences_hold = true;
    if args.sequence_length > 0 {
        for _ in 0..args.random_sequences {
            let seq: Vec<BinaryTuple> = (0..args.sequence_length)
                .map(|_| {
                    let bits: u8 = rng.random();
                    let s = |k: u8| if bits >> k & 1 == 1 { 1 } else { -1 };
                    BinaryTuple::new(s(0), s(1), s(2), s(3))
                })
                .collect::<Result<_, _>>()?;
            match chsh_bound_check(&seq) {
                Ok(value) => worst = worst.max(value),
                Err(_) => sequences_hold = false,
            }
        }
    }
    let holds = table.holds && sequences_hold;
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| json!({ "tuple": r.tuple, "term": r.term }))
        .collect();
    let summary = json!({
        "command": "verify-theorem",
        "plus_two": table.plus_two,
        "minus_two": table.minus_two,
        "rows": rows,
        "random_sequences": args.random_sequences,
        "sequence_length": args.sequence_length,
        "max_sequence_chsh": if worst.is_finite() { json!(worst) } else { Value::Null },
        "holds": holds,
    });
    Ok(Outcome {
        summary,
        code: if holds { EXIT_OK } else { EXIT_THEOREM },
    })
}

fn simulate_cmd(
    command: &Command,
    args: &SimulateArgs,
    pool: &WorkerPool,
) -> anyhow::Result<Outcome> {
    let started = RunManifest::start(VERSION, command_name(command), args.seed);
    let settings = args.experiment.settings()?;
    let records = match args.source {
        Source::Quantum => simulate(&settings, args.trials, args.seed, pool)?,
        Source::HiddenVariable => simulate_hidden_variables(
            &HiddenVariableSource::new(settings),
            args.trials,
            args.seed,
            pool,
        ),
    };
    let mut summary = json!({
        "command": "simulate",
        "source": args.source,
        "settings_id": format!("{:016x}", settings.id()),
        "settings": settings,
        "trials": records.len(),
        "seed": args.seed,
    });
    if args.source == Source::Quantum {
        summary["exact_chsh"] = json!(exact_chsh(&settings)?);
    }
    if records.len() >= 2 {
        summary["estimate"] = serde_json::to_value(estimate_chsh(&records)?)?;
    }
    if let Some(out) = &args.out {
        emit_records(&records, out).with_context(|| format!("writing {}", out.display()))?;
        let manifest = write_manifest(command, started, out)?;
        summary["out"] = json!(out);
        summary["manifest"] = json!(manifest);
    }
    Ok(Outcome::ok(summary))
}

fn audit_cmd(args: &AuditArgs) -> anyhow::Result<Outcome> {
    let file = std::fs::File::open(&args.input)
        .with_context(|| format!("opening {}", args.input.display()))?;
    let records = read_records(std::io::BufReader::new(file))
        .with_context(|| format!("reading {}", args.input.display()))?;
    let config = AuditConfig {
        threshold_sigmas: args.threshold_sigmas,
        stderr_cap: args.stderr_cap,
        min_count: args.min_count,
    };
    let verdict = decomposition_test_with(&records, args.v, &config)?;
    let mut summary = serde_json::to_value(verdict)?;
    summary["command"] = json!("audit");
    summary["input"] = json!(args.input);
    Ok(Outcome::ok(summary))
}

fn predict_cmd(
    command: &Command,
    args: &PredictArgs,
    pool: &WorkerPool,
) -> anyhow::Result<Outcome> {
    let started = RunManifest::start(VERSION, command_name(command), args.seed);
    let [b1, b2] = args.axes.0;
    let settings = settings_from(
        Some(Angles([b1, b2, b1, b2])),
        args.bell.0,
        args.v,
        NoiseModel::NONE,
    )?;
    let readout = SequentialReadoutParams::new(CouplingStrength::new(args.readout_v)?, args.steps)?;
    let records = simulate_predictions(&settings, &readout, args.trials, args.seed, pool)?;
    let accuracy = prediction_accuracy(&records)?;
    let exact_post = post_protocol_chsh(&settings, &readout, PostSelection::Marginal)?;
    let bell_seed = weakbell_core::seed::derive_seed(args.seed, 1);
    let samples = simulate_post_protocol(&settings, &readout, args.trials, bell_seed, pool)?;
    let mc_post = combine_bell_samples(&samples, PostSelection::Marginal).ok();
    let mut summary = json!({
        "command": "predict",
        "settings_id": format!("{:016x}", settings.id()),
        "v": args.v,
        "readout_v": args.readout_v,
        "steps": args.steps,
        "readout_saturated": readout.is_saturated(),
        "trials": args.trials,
        "seed": args.seed,
        "accuracy": accuracy.accuracy,
        "ci95": [accuracy.ci_low, accuracy.ci_high],
        "exact_accuracy": exact_prediction_accuracy(&settings, &readout)?,
        "post_protocol_chsh": exact_post.chsh,
        "post_protocol_chsh_estimate": mc_post.map(|r| json!({ "chsh": r.chsh, "stderr": r.chsh_stderr })),
    });
    if let Some(out) = &args.out {
        emit_predictions(&records, out).with_context(|| format!("writing {}", out.display()))?;
        let manifest = write_manifest(command, started, out)?;
        summary["out"] = json!(out);
        summary["manifest"] = json!(manifest);
    }
    Ok(Outcome::ok(summary))
}

fn sweep_cmd(command: &Command, args: &SweepArgs, pool: &WorkerPool) -> anyhow::Result<Outcome> {
    let started = RunManifest::start(VERSION, command_name(command), args.seed);
    let base = settings_from(
        args.angles,
        args.bell.0,
        1.0,
        NoiseModel::unbiased(args.noise_sigma)?,
    )?;
    let spec = SweepSpec::new(&args.v_grid.0, args.trials)?;
    let audit = AuditConfig {
        threshold_sigmas: args.threshold_sigmas,
        ..AuditConfig::default()
    };
    let rows = run_sweep(&spec, &base, args.seed, pool, &audit)?;
    let mut summary = json!({
        "command": "sweep",
        "trials_per_point": args.trials,
        "seed": args.seed,
        "rows": rows,
    });
    if let Some(out) = &args.out {
        let file =
            std::fs::File::create(out).with_context(|| format!("writing {}", out.display()))?;
        write_sweep(&rows, std::io::BufWriter::new(file))?;
        let manifest = write_manifest(command, started, out)?;
        summary["out"] = json!(out);
        summary["manifest"] = json!(manifest);
    }
    Ok(Outcome::ok(summary))
}

fn rerun_cmd(args: &RerunArgs, pool: &WorkerPool) -> anyhow::Result<Outcome> {
    let manifest = load_manifest(&args.manifest)
        .with_context(|| format!("loading {}", args.manifest.display()))?;
    let recorded = manifest
        .parameters
        .get("args")
        .ok_or_else(|| anyhow!("manifest has no recorded arguments"))?;
    let mut command: Command =
        serde_json::from_value(recorded.clone()).context("decoding recorded arguments")?;
    let out = match &mut command {
        Command::Simulate(a) => Some(&mut a.out),
        Command::Predict(a) => Some(&mut a.out),
        Command::Sweep(a) => Some(&mut a.out),
        Command::VerifyTheorem(_) | Command::Audit(_) => None,
        Command::Rerun(_) => bail!("a manifest cannot record a rerun"),
    };
    if let (Some(slot), Some(path)) = (out, &args.out) {
        *slot = Some(path.clone());
    }
    execute(&command, pool)
}
