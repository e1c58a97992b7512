//! The `saea` command line: `run`, `sweep`, `bounds`, `probe` and `drift`.
//!
//! Exit status is 0 on success, 1 on a usage error (reported as a single line
//! naming the offending flag) and 2 on a runtime or I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{self, Options};
use crate::ea::{AlgorithmParams, DEFAULT_SUCCESS_RATE, DEFAULT_UPDATE_STRENGTH};
use crate::error::Error;
use crate::fitness::{Benchmark, BenchmarkKind, Fitness};
use crate::harness::{self, ExperimentConfig};
use crate::mutation::{MutationKind, MutationSpec, StrengthSharing, DEFAULT_BETA, DEFAULT_CHI};
use crate::probe::{self, HardnessProbe};
use crate::rng::RngStream;
use crate::theory::{lambda_threshold, TheoryContext};

#[derive(Debug, Parser)]
#[command(
    name = "saea",
    version,
    about = "Self-adjusting (1,lambda) EA experiments, bounds and probes",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a batch of independent trials and print its summary
    Run(CommandArgs),
    /// Run one batch per n (and k) value and print the scaling table
    Sweep(CommandArgs),
    /// Print thresholds and runtime bounds as name,value CSV
    Bounds(CommandArgs),
    /// Estimate improvement probabilities per fitness level and classify hardness
    Probe(CommandArgs),
    /// Estimate the mean change of log_F(lambda) while lambda is small
    Drift(CommandArgs),
    /// Count generations that lose fitness while lambda is large
    Losses(CommandArgs),
}

#[derive(Debug, clap::Args)]
struct CommandArgs {
    /// TOML file providing defaults for any flag below
    #[arg(long)]
    config: Option<PathBuf>,

    #[command(flatten)]
    opts: Options,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage(flag: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("--{flag}: {msg}"))
}

fn runtime(e: Error) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Parses `argv` (including the program name), runs the subcommand and returns the exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let text = e.render().to_string();
                    let _ = writeln!(err, "{}", text.lines().next().unwrap_or("error: invalid usage"));
                    1
                }
            };
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Outcome<()> {
    let (cmd, args) = match cli.command {
        Command::Run(a) => ("run", a),
        Command::Sweep(a) => ("sweep", a),
        Command::Bounds(a) => ("bounds", a),
        Command::Probe(a) => ("probe", a),
        Command::Drift(a) => ("drift", a),
        Command::Losses(a) => ("losses", a),
    };
    let file = match &args.config {
        Some(path) => config::load_config(path).map_err(|e| match e {
            Error::Config(m) => usage("config", m),
            e => runtime(e),
        })?,
        None => Options::default(),
    };
    let o = args.opts.over(file);
    match cmd {
        "run" => cmd_run(&o, out),
        "sweep" => cmd_sweep(&o, out, err),
        "bounds" => cmd_bounds(&o, out),
        "probe" => cmd_probe(&o, out),
        "drift" => cmd_drift(&o, out),
        _ => cmd_losses(&o, out),
    }
}

fn kind(o: &Options) -> Outcome<BenchmarkKind> {
    o.function
        .as_deref()
        .ok_or_else(|| Failure::Usage("--function is required".into()))?
        .parse()
        .map_err(|e| usage("function", e))
}

fn benchmark_at(kind: BenchmarkKind, n: usize, k: Option<usize>, k_flag: &str) -> Outcome<Benchmark> {
    if n == 0 {
        return Err(usage("n", "must be positive"));
    }
    Benchmark::new(kind, n, k).map_err(|e| usage(k_flag, e))
}

fn benchmark(o: &Options) -> Outcome<Benchmark> {
    let n = o.n.ok_or_else(|| Failure::Usage("--n is required".into()))?;
    benchmark_at(kind(o)?, n, o.k, "k")
}

fn algorithm(o: &Options, n: usize) -> Outcome<AlgorithmParams> {
    let kind: MutationKind = match &o.mutation {
        Some(m) => m.parse().map_err(|e| usage("mutation", e))?,
        None => MutationKind::Standard,
    };
    let mut spec = match kind {
        MutationKind::Standard => MutationSpec::standard(o.chi.unwrap_or(DEFAULT_CHI)),
        MutationKind::HeavyTailed => MutationSpec::heavy_tailed(o.beta.unwrap_or(DEFAULT_BETA)),
    };
    if let Some(r) = o.rate {
        if kind != MutationKind::Standard {
            return Err(usage("rate", "only applies to --mutation sbm"));
        }
        spec.explicit_rate = Some(r);
    }
    if o.shared_chi == Some(true) {
        if kind != MutationKind::HeavyTailed {
            return Err(usage("shared-chi", "only applies to --mutation heavytailed"));
        }
        spec.sharing = StrengthSharing::PerGeneration;
    }
    let spec_flag = match (kind, o.rate) {
        (MutationKind::HeavyTailed, _) if n < 2 => "n",
        (MutationKind::HeavyTailed, _) => "beta",
        (_, Some(_)) => "rate",
        _ => "chi",
    };
    spec.validate(n).map_err(|e| usage(spec_flag, e))?;

    let p = AlgorithmParams {
        update_strength: o.update_strength.unwrap_or(DEFAULT_UPDATE_STRENGTH),
        success_rate: o.success_rate.unwrap_or(DEFAULT_SUCCESS_RATE),
        mutation: spec,
        elitist: o.elitist.unwrap_or(false),
        lambda_init: o.lambda_init.unwrap_or(1.0),
    };
    if !(p.update_strength > 1.0 && p.update_strength.is_finite()) {
        return Err(usage("F", format!("must exceed 1, got {}", p.update_strength)));
    }
    if !(p.success_rate > 0.0 && p.success_rate.is_finite()) {
        return Err(usage("s", format!("must be positive, got {}", p.success_rate)));
    }
    if !(p.lambda_init >= 1.0 && p.lambda_init.is_finite()) {
        return Err(usage("lambda-init", format!("must be at least 1, got {}", p.lambda_init)));
    }
    Ok(p)
}

fn experiment(o: &Options, f: &Benchmark) -> Outcome<ExperimentConfig> {
    let cfg = ExperimentConfig {
        function: f.kind(),
        n: f.n(),
        k: f.k(),
        params: algorithm(o, f.n())?,
        trials: o.trials.unwrap_or(config::DEFAULT_TRIALS),
        budget_evals: o.budget_evals.unwrap_or(config::DEFAULT_BUDGET_EVALS),
        base_seed: o.seed.unwrap_or(0),
        trajectory_stride: o.trajectory_stride.unwrap_or(0),
        out: o.out.clone(),
        workers: o.workers,
    };
    if cfg.trials == 0 {
        return Err(usage("trials", "must be at least 1"));
    }
    if cfg.budget_evals < cfg.n as u64 {
        return Err(usage(
            "budget-evals",
            format!("must be at least n (budget={}, n={})", cfg.budget_evals, cfg.n),
        ));
    }
    if cfg.workers == Some(0) {
        return Err(usage("workers", "must be at least 1"));
    }
    Ok(cfg)
}

fn cmd_run(o: &Options, out: &mut dyn Write) -> Outcome<()> {
    let f = benchmark(o)?;
    let cfg = experiment(o, &f)?;
    let batch = harness::run_batch(&cfg).map_err(runtime)?;
    harness::write_summary_to(&mut *out, &batch.summary).map_err(runtime)
}

fn cmd_sweep(o: &Options, out: &mut dyn Write, err: &mut dyn Write) -> Outcome<()> {
    let kind = kind(o)?;
    let n_values = o
        .n_values
        .clone()
        .or_else(|| o.n.map(|n| vec![n]))
        .ok_or_else(|| Failure::Usage("--n-values is required for sweep".into()))?;
    let (k_flag, k_values) = match &o.k_values {
        Some(ks) => ("k-values", ks.iter().map(|&k| Some(k)).collect()),
        None => ("k", vec![o.k]),
    };
    let mut first = None;
    for &n in &n_values {
        for &k in &k_values {
            let f = benchmark_at(kind, n, k, k_flag)?;
            first.get_or_insert(f);
        }
    }
    let f = first.ok_or_else(|| usage("n-values", "must not be empty"))?;
    let template = experiment(o, &f)?;
    for &n in &n_values {
        if template.budget_evals < n as u64 {
            return Err(usage("budget-evals", format!("must be at least n (budget={}, n={n})", template.budget_evals)));
        }
    }
    let table = harness::scaling_study(&template, &n_values, o.k_values.as_deref()).map_err(|e| match e {
        Error::InvalidArgument(m) if m.contains("at least 3 distinct") => usage("n-values", m),
        e => runtime(e),
    })?;
    table.write_csv_to(&mut *out).map_err(runtime)?;
    for k in &k_values {
        if let Ok(slope) = table.evaluation_slope(*k) {
            let label = k.map_or(String::new(), |k| format!(" (k={k})"));
            let _ = writeln!(err, "log-log slope of median evaluations vs n{label}: {slope}");
        }
    }
    Ok(())
}

/// Theory context with `--epsilon` and `--gamma` applied and checked.
fn theory(o: &Options, f: &Benchmark, p: &AlgorithmParams) -> Outcome<TheoryContext> {
    let mut ctx = TheoryContext::for_benchmark(f, p).map_err(runtime)?;
    if let Some(e) = o.epsilon {
        ctx.epsilon = e;
    }
    if let Some(g) = o.gamma {
        ctx.gamma = g;
    }
    if !(ctx.epsilon > 0.0 && ctx.epsilon < 1.0) {
        return Err(match o.epsilon {
            Some(e) => usage("epsilon", format!("must lie in (0, 1), got {e}")),
            None => usage(
                "epsilon",
                format!(
                    "{} is not everywhere hard under this operator (derived epsilon {}); pass --epsilon",
                    f.name(),
                    ctx.epsilon
                ),
            ),
        });
    }
    if !(ctx.gamma > 1.0) {
        return Err(usage("gamma", format!("must exceed 1, got {}", ctx.gamma)));
    }
    Ok(ctx)
}

fn write_pairs(out: &mut dyn Write, rows: &[(&str, String)]) -> Outcome<()> {
    let io = |e: std::io::Error| Failure::Runtime(format!("stdout: {e}"));
    writeln!(out, "name,value").map_err(io)?;
    for (k, v) in rows {
        writeln!(out, "{k},{v}").map_err(io)?;
    }
    Ok(())
}

fn cmd_bounds(o: &Options, out: &mut dyn Write) -> Outcome<()> {
    let f = benchmark(o)?;
    let p = algorithm(o, f.n())?;
    let ctx = theory(o, &f, &p)?;
    let safe = ctx.lambda_safe().map_err(|e| usage("n", e))?;
    let level_sum = ctx.fitness_level_sum().map_err(runtime)?;
    let elitist = ctx.elitist_evaluation_bound(0, ctx.d, p.lambda_init).map_err(runtime)?;
    write_pairs(
        out,
        &[
            ("n", ctx.n.to_string()),
            ("d", ctx.d.to_string()),
            ("F", ctx.update_strength.to_string()),
            ("s", ctx.success_rate.to_string()),
            ("gamma", ctx.gamma.to_string()),
            ("epsilon", ctx.epsilon.to_string()),
            ("p_min", ctx.p_min.to_string()),
            ("p_max", ctx.p_max.to_string()),
            ("lambda_safe", safe.to_string()),
            ("lambda_threshold", ctx.lambda_threshold().to_string()),
            ("generation_bound", ctx.generation_bound().to_string()),
            ("fitness_level_sum", level_sum.to_string()),
            ("elitist_evaluation_bound", elitist.to_string()),
            ("expected_lambda_limit", ctx.expected_lambda_limit().to_string()),
        ],
    )
}

fn pool(o: &Options) -> Outcome<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = o.workers {
        if w == 0 {
            return Err(usage("workers", "must be at least 1"));
        }
        b = b.num_threads(w);
    }
    b.build().map_err(|e| Failure::Runtime(format!("cannot start worker pool: {e}")))
}

fn cmd_probe(o: &Options, out: &mut dyn Write) -> Outcome<()> {
    let f = benchmark(o)?;
    let p = algorithm(o, f.n())?;
    let epsilon = match o.epsilon {
        Some(e) => e,
        None => theory(o, &f, &p)?.epsilon,
    };
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(usage("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    let c = o.c.unwrap_or(config::DEFAULT_C);
    if !(c > 0.0) {
        return Err(usage("c", format!("must be positive, got {c}")));
    }
    let points = o.points_per_level.unwrap_or(config::DEFAULT_POINTS_PER_LEVEL);
    if points == 0 {
        return Err(usage("points-per-level", "must be at least 1"));
    }
    let samples = o.samples.unwrap_or(config::DEFAULT_PROBE_SAMPLES);
    if samples < probe::MIN_SAMPLES {
        return Err(usage("samples", format!("must be at least {}", probe::MIN_SAMPLES)));
    }

    let mut rng = RngStream::new(o.seed.unwrap_or(0));
    let est = pool(o)?
        .install(|| HardnessProbe::estimate(&f, &p.mutation, points, samples, &mut rng))
        .map_err(runtime)?;
    let report = est.classify(epsilon, c).map_err(runtime)?;
    if let Some(dir) = &o.out {
        std::fs::create_dir_all(dir).map_err(|e| runtime(Error::Io { path: dir.clone(), source: e }))?;
        let path = dir.join("probe.csv");
        let file = std::fs::File::create(&path).map_err(|e| runtime(Error::Io { path: path.clone(), source: e }))?;
        probe::write_level_estimates_to(file, &est.estimates).map_err(runtime)?;
    }
    write_pairs(
        out,
        &[
            ("verdict", report.verdict.to_string()),
            ("threshold", report.threshold.to_string()),
            ("max_p_plus", report.max_p_plus.to_string()),
            ("max_p_plus_upper", report.max_p_plus_upper.to_string()),
            ("points", est.estimates.len().to_string()),
            ("samples_per_point", samples.to_string()),
        ],
    )
}

fn cmd_drift(o: &Options, out: &mut dyn Write) -> Outcome<()> {
    let f = benchmark(o)?;
    let p = algorithm(o, f.n())?;
    let cond = match o.max_lambda {
        Some(m) => m,
        None => {
            let eps = match o.epsilon {
                Some(e) => e,
                None => theory(o, &f, &p)?.epsilon,
            };
            lambda_threshold(f.n(), eps)
        }
    };
    if !(cond >= 1.0) {
        return Err(usage("max-lambda", format!("must be at least 1, got {cond}")));
    }
    let target = o.target_samples.unwrap_or(config::DEFAULT_TARGET_SAMPLES);
    if target == 0 {
        return Err(usage("target-samples", "must be at least 1"));
    }
    let est = probe::estimate_lambda_drift(&f, &p, cond, target, o.seed.unwrap_or(0)).map_err(runtime)?;
    write_pairs(
        out,
        &[
            ("max_lambda", cond.to_string()),
            ("mean_drift", est.mean_drift.to_string()),
            ("half_width", est.half_width.to_string()),
            ("samples", est.samples.to_string()),
            ("status", if est.complete { "complete" } else { "inconclusive" }.to_string()),
        ],
    )
}

/// Upper limit on restarts while collecting loss statistics.
const LOSS_MAX_RUNS: u64 = 10_000;

fn cmd_losses(o: &Options, out: &mut dyn Write) -> Outcome<()> {
    let f = benchmark(o)?;
    let p = algorithm(o, f.n())?;
    let min_lambda = match o.min_lambda {
        Some(m) => m,
        None => theory(o, &f, &p)?.lambda_safe().map_err(|e| usage("n", e))?,
    };
    if !(min_lambda >= 1.0) {
        return Err(usage("min-lambda", format!("must be at least 1, got {min_lambda}")));
    }
    let target = o.target_samples.unwrap_or(config::DEFAULT_TARGET_SAMPLES);
    if target == 0 {
        return Err(usage("target-samples", "must be at least 1"));
    }
    let budget = o.budget_evals.unwrap_or(config::DEFAULT_BUDGET_EVALS);
    let freq = probe::fitness_loss_frequency(&f, &p, min_lambda, target, LOSS_MAX_RUNS, budget, o.seed.unwrap_or(0))
        .map_err(runtime)?;
    write_pairs(
        out,
        &[
            ("min_lambda", min_lambda.to_string()),
            ("generations", freq.generations.to_string()),
            ("losses", freq.losses.to_string()),
            ("fraction", freq.fraction().to_string()),
            ("status", if freq.generations >= target { "complete" } else { "inconclusive" }.to_string()),
        ],
    )
}
