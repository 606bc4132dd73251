//! Command-line front end: norm estimation from stream files, gap reports,
//! identity suites, hard-instance generation and distinguishing experiments.
//!
//! Every command returns a [`RunReport`] serialised as JSON. All randomness
//! flows from `--seed`: the estimator derives its sketch seeds from it, `bhh`
//! uses it for the instance and `derive_seed(seed, [ORDER_STREAM])` for the
//! record order, and `distinguish` derives one seed per (case, trial).

pub mod stream;
pub mod verify;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use schatten_core::bhh::{distinguish_experiment, emit_stream, kyfan_experiment, sample_instance, BhhCase, HardStream};
use schatten_core::gaplab::{gap_expectation, Verdict};
use schatten_core::hashing::derive_seed;
use schatten_core::schatten::{check_even_exponent, exact_schatten_even_sparse, EstimatorConfig, EstimatorState, SparseMatrix};
use schatten_core::spectra::{eval_function, spectrum_block_diagonal, BlockKind, SpectralFunction};
use schatten_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

pub use stream::StreamFile;
use verify::{run_suite, SeriesGrid, Suite, ENTROPY_MS};

/// Success, or a nonzero gap verdict.
pub const EXIT_OK: i32 = 0;
/// A verification suite failed or an experiment did not separate.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Bad flags, parameters or input files.
pub const EXIT_USAGE: i32 = 2;
/// The gap is zero at the requested tolerance.
pub const EXIT_ZERO_GAP: i32 = 3;

/// Substream of `--seed` that orders the records written by `bhh`.
pub const ORDER_STREAM: u64 = 1;
/// Substream of a trial seed that seeds the estimator in `distinguish`.
pub const ESTIMATOR_STREAM: u64 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::ZeroGap { .. }) => EXIT_ZERO_GAP,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryAccounting {
    pub accounted_accumulators: usize,
    pub measured_accumulators: usize,
    pub memory_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: Value,
    pub seeds: BTreeMap<String, u64>,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory: Option<MemoryAccounting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports hold only finite numbers and strings")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: RunReport,
    pub exit_code: i32,
}

#[derive(Debug, Parser)]
#[command(name = "schatten", version, about = "Streaming Schatten-norm sketches, spectral gaps and hard instances")]
pub struct Cli {
    /// Leave wall-clock timing out of the report, so reruns are byte-identical.
    #[arg(long, global = true)]
    pub omit_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the Schatten p-norm (p-th power) of a streamed matrix.
    Estimate(EstimateArgs),
    /// Evaluate the even/odd parity gap of a spectral function.
    Gap(GapArgs),
    /// Run numerical identity suites.
    Verify(VerifyArgs),
    /// Generate a hard-instance stream file.
    Bhh(BhhArgs),
    /// Run the two-case distinguishing experiment.
    Distinguish(DistinguishArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Stream file of `i j delta` records.
    pub stream: PathBuf,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 0.25)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also compute the exact value and the relative error.
    #[arg(long)]
    pub exact: bool,
    /// Split the records round-robin over this many sketches and merge them.
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    /// Spectral function, e.g. power:1, entropy, kyfan:2, shrinker:1:0.5, mest:huber:1.
    #[arg(long)]
    pub f: SpectralFunction,
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// asym or sym.
    #[arg(long, default_value = "asymmetric")]
    pub kind: BlockKind,
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// series, hypergeom, stirling, entropy or all.
    #[arg(long, default_value = "all")]
    pub suite: Suite,
    /// Exponents of the series suite.
    #[arg(long = "p", value_delimiter = ',')]
    pub ps: Vec<f64>,
    /// Block sizes of the series and entropy suites.
    #[arg(long = "m", value_delimiter = ',')]
    pub ms: Vec<usize>,
    /// Tentacle weight of the series suite.
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BhhArgs {
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// even (Mx = 0) or odd (Mx = 1).
    #[arg(long)]
    pub case: BhhCase,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "asymmetric")]
    pub kind: BlockKind,
    /// Where to write the stream file.
    #[arg(long)]
    pub out: PathBuf,
    /// Spectral functions to evaluate exactly on the generated matrix.
    #[arg(long)]
    pub f: Vec<SpectralFunction>,
}

#[derive(Debug, Args)]
pub struct DistinguishArgs {
    /// Spectral function. kyfan:K runs the Ky-Fan experiment with alpha = K/n.
    #[arg(long)]
    pub f: SpectralFunction,
    #[arg(long, default_value_t = 2)]
    pub t: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "asymmetric")]
    pub kind: BlockKind,
    /// Also run the streaming estimator on every trial (even powers only).
    #[arg(long)]
    pub estimate: bool,
    #[arg(long, default_value_t = 0.25)]
    pub epsilon: f64,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serialisable report payload")
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut outcome = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a)?,
        Command::Gap(a) => cmd_gap(a)?,
        Command::Verify(a) => cmd_verify(a)?,
        Command::Bhh(a) => cmd_bhh(a)?,
        Command::Distinguish(a) => cmd_distinguish(a)?,
    };
    if !cli.omit_timing {
        outcome.report.timing = Some(Timing { elapsed_seconds: start.elapsed().as_secs_f64() });
    }
    Ok(outcome)
}

pub fn cmd_estimate(a: &EstimateArgs) -> Result<Outcome, CliError> {
    let p = check_even_exponent(a.p)?;
    if a.shards == 0 {
        return Err(Error::InvalidParameter("shards must be positive".into()).into());
    }
    let file = StreamFile::read(&a.stream)?;
    let config = EstimatorConfig::new(file.dim, p, a.epsilon, a.seed)?;
    let mut state = EstimatorState::new(config)?;
    if a.shards == 1 {
        state.ingest_all(&file.records)?;
    } else {
        for s in 0..a.shards {
            let mut shard = EstimatorState::new(config)?;
            shard.ingest_all(file.records.iter().skip(s).step_by(a.shards))?;
            state.merge(&shard)?;
        }
    }
    let estimate = state.finalize()?;
    let mut result = to_value(&estimate);
    if a.exact {
        let exact = exact_schatten_even_sparse(&SparseMatrix::from_updates(file.dim, &file.records)?, p)?;
        result["exact"] = json!(exact);
        result["relative_error"] = json!(if exact == 0.0 { estimate.y.abs() } else { (estimate.y - exact).abs() / exact });
    }
    let memory = MemoryAccounting {
        accounted_accumulators: config.accounted_accumulators()?,
        measured_accumulators: state.measured_accumulators(),
        memory_bytes: state.memory_bytes(),
    };
    let report = RunReport {
        command: "estimate".into(),
        config: json!({
            "stream": a.stream.display().to_string(),
            "n": file.dim,
            "records": file.records.len(),
            "header": file.header.iter().cloned().collect::<BTreeMap<_, _>>(),
            "p": p,
            "epsilon": a.epsilon,
            "shards": a.shards,
            "estimator": to_value(&config),
        }),
        seeds: BTreeMap::from([("seed".into(), a.seed)]),
        result,
        memory: Some(memory),
        timing: None,
    };
    Ok(Outcome { report, exit_code: EXIT_OK })
}

pub fn cmd_gap(a: &GapArgs) -> Result<Outcome, CliError> {
    let r = gap_expectation(&a.f, a.t, a.m, a.gamma, a.kind, a.tolerance)?;
    let exit_code = match r.verdict {
        Verdict::NonZero => EXIT_OK,
        Verdict::Zero(_) => EXIT_ZERO_GAP,
    };
    let report = RunReport {
        command: "gap".into(),
        config: json!({"f": a.f.to_string(), "t": a.t, "m": a.m, "gamma": a.gamma, "kind": a.kind.to_string(), "tolerance": a.tolerance}),
        seeds: BTreeMap::new(),
        result: to_value(&r),
        memory: None,
        timing: None,
    };
    Ok(Outcome { report, exit_code })
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let mut grid = SeriesGrid::default();
    if !a.ps.is_empty() {
        grid.ps = a.ps.clone();
    }
    if !a.ms.is_empty() {
        grid.ms = a.ms.clone();
    }
    if let Some(g) = a.gamma {
        grid.gamma = g;
    }
    let entropy_ms = if a.ms.is_empty() { ENTROPY_MS.to_vec() } else { a.ms.clone() };
    let r = run_suite(a.suite, &grid, &entropy_ms)?;
    let report = RunReport {
        command: "verify".into(),
        config: json!({"suite": a.suite, "series_grid": grid, "entropy_m": entropy_ms}),
        seeds: BTreeMap::new(),
        result: to_value(&r),
        memory: None,
        timing: None,
    };
    Ok(Outcome { report, exit_code: if r.passed { EXIT_OK } else { EXIT_CHECK_FAILED } })
}

/// Exact `f` of the block-diagonal matrix a stream realises.
pub fn stream_exact_value(s: &HardStream, f: &SpectralFunction) -> Result<f64, CliError> {
    Ok(eval_function(f, &spectrum_block_diagonal(&s.block_params()?)?)?)
}

pub fn cmd_bhh(a: &BhhArgs) -> Result<Outcome, CliError> {
    let inst = sample_instance(a.t, a.n, a.case, a.seed)?;
    let order_seed = derive_seed(a.seed, &[ORDER_STREAM]);
    let s = emit_stream(&inst, a.m, a.gamma, a.kind, order_seed)?;
    let text = s.to_stream_text();
    std::fs::write(&a.out, &text).map_err(|source| CliError::Io { path: a.out.display().to_string(), source })?;
    let mut exact = BTreeMap::new();
    for f in &a.f {
        exact.insert(f.to_string(), stream_exact_value(&s, f)?);
    }
    let report = RunReport {
        command: "bhh".into(),
        config: json!({
            "t": a.t, "n": a.n, "m": a.m, "gamma": a.gamma, "case": a.case.name(),
            "kind": a.kind.to_string(), "out": a.out.display().to_string(),
        }),
        seeds: BTreeMap::from([("seed".into(), a.seed), ("order_seed".into(), order_seed)]),
        result: json!({
            "dim": s.dim,
            "alice_updates": s.alice_part.len(),
            "bob_updates": s.bob_part.len(),
            "sum_q": s.sum_q(),
            "blocks": s.blocks,
            "exact": exact,
        }),
        memory: None,
        timing: None,
    };
    Ok(Outcome { report, exit_code: EXIT_OK })
}

pub fn cmd_distinguish(a: &DistinguishArgs) -> Result<Outcome, CliError> {
    let mut seeds = BTreeMap::from([("seed".to_string(), a.seed)]);
    let (result, separated) = if let SpectralFunction::KyFan { k, inner } = &a.f {
        if **inner != SpectralFunction::identity() {
            return Err(Error::InvalidParameter("the Ky-Fan experiment uses the plain k-norm".into()).into());
        }
        if a.estimate {
            return Err(Error::InvalidParameter("--estimate needs an even power".into()).into());
        }
        let r = kyfan_experiment(*k as f64 / a.n as f64, a.n, a.trials, a.seed)?;
        (to_value(&r), r.separated)
    } else {
        let p = if a.estimate {
            match a.f {
                SpectralFunction::PowerP(p) => Some(check_even_exponent(p)?),
                _ => return Err(Error::InvalidParameter("--estimate needs f = power:P with P even".into()).into()),
            }
        } else {
            None
        };
        let epsilon = a.epsilon;
        let estimator = move |s: &HardStream, trial_seed: u64| -> schatten_core::Result<f64> {
            let config = EstimatorConfig::new(s.dim, p.unwrap_or(2), epsilon, derive_seed(trial_seed, &[ESTIMATOR_STREAM]))?;
            let mut state = EstimatorState::new(config)?;
            state.ingest_all(s.updates())?;
            Ok(state.finalize()?.y)
        };
        let r = distinguish_experiment(
            &a.f,
            a.t,
            a.m,
            a.gamma,
            a.kind,
            a.n,
            a.trials,
            a.seed,
            if p.is_some() { Some(&estimator) } else { None },
        )?;
        if p.is_some() {
            seeds.insert("estimator_stream".into(), ESTIMATOR_STREAM);
        }
        (to_value(&r), r.separated)
    };
    let report = RunReport {
        command: "distinguish".into(),
        config: json!({
            "f": a.f.to_string(), "t": a.t, "m": a.m, "gamma": a.gamma, "n": a.n, "trials": a.trials,
            "kind": a.kind.to_string(), "estimate": a.estimate, "epsilon": a.epsilon,
        }),
        seeds,
        result,
        memory: None,
        timing: None,
    };
    Ok(Outcome { report, exit_code: if separated { EXIT_OK } else { EXIT_CHECK_FAILED } })
}
