//! Batches of independent runs, their summaries, scaling studies and CSV output.
//!
//! Trial `i` of a batch is seeded with [`trial_seed`]`(base_seed, i)` and is
//! fully determined by that seed, so the records do not depend on the worker
//! count, on completion order or on how many other trials the batch has.
//! Only `time_ms` falls outside this guarantee.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ea::{AlgorithmParams, RunRecord, SelfAdjustingEa, TrajectoryPoint};
use crate::error::{Error, Result};
use crate::fitness::{Benchmark, BenchmarkKind, Fitness};
use crate::rng::trial_seed;
use crate::theory::TheoryContext;

pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SCALING_FILE: &str = "scaling.csv";
pub const TRAJECTORY_DIR: &str = "trajectories";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub function: BenchmarkKind,
    pub n: usize,
    /// Block size, for OneMaxBlocks only.
    pub k: Option<usize>,
    pub params: AlgorithmParams,
    pub trials: u64,
    pub budget_evals: u64,
    pub base_seed: u64,
    /// Record every `trajectory_stride`-th generation; 0 disables trajectories.
    pub trajectory_stride: u64,
    /// Output directory; nothing is written when absent.
    pub out: Option<PathBuf>,
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(function: BenchmarkKind, n: usize) -> Self {
        Self {
            function,
            n,
            k: None,
            params: AlgorithmParams::default(),
            trials: 1,
            budget_evals: 10_000_000,
            base_seed: 0,
            trajectory_stride: 0,
            out: None,
            workers: None,
        }
    }

    pub fn benchmark(&self) -> Result<Benchmark> {
        Benchmark::new(self.function, self.n, self.k)
    }

    pub fn validate(&self) -> Result<Benchmark> {
        let f = self.benchmark()?;
        self.params.validate(self.n)?;
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.budget_evals < self.n as u64 {
            return Err(Error::invalid(format!(
                "budget-evals must be at least n (budget={}, n={})",
                self.budget_evals, self.n
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers must be at least 1"));
        }
        Ok(f)
    }
}

/// Location and spread of one metric over a batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "summary of an empty sample");
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            median: median(values),
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub trials: u64,
    pub success_rate: f64,
    pub generations: MetricSummary,
    pub evaluations: MetricSummary,
    pub final_fitness: MetricSummary,
    pub max_lambda: MetricSummary,
    pub success: MetricSummary,
    /// Generations divided by the number of non-optimal fitness values.
    pub gen_per_d: MetricSummary,
    /// Evaluations divided by the fitness-level sum of the mutation operator.
    pub evals_per_fitness_level_sum: MetricSummary,
}

impl BatchSummary {
    pub fn from_records(records: &[RunRecord], d: usize, level_sum: f64) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid("cannot summarise an empty batch"));
        }
        let col = |g: &dyn Fn(&RunRecord) -> f64| -> MetricSummary {
            MetricSummary::of(&records.iter().map(g).collect::<Vec<_>>())
        };
        let success = col(&|r| r.success as u8 as f64);
        Ok(Self {
            trials: records.len() as u64,
            success_rate: success.mean,
            generations: col(&|r| r.generations as f64),
            evaluations: col(&|r| r.evaluations as f64),
            final_fitness: col(&|r| r.final_fitness as f64),
            max_lambda: col(&|r| r.max_lambda),
            success,
            gen_per_d: col(&|r| r.generations as f64 / d as f64),
            evals_per_fitness_level_sum: col(&|r| r.evaluations as f64 / level_sum),
        })
    }

    fn rows(&self) -> [(&'static str, MetricSummary); 7] {
        [
            ("generations", self.generations),
            ("evaluations", self.evaluations),
            ("final_fitness", self.final_fitness),
            ("max_lambda", self.max_lambda),
            ("success", self.success),
            ("gen_per_d", self.gen_per_d),
            ("evals_per_fitness_level_sum", self.evals_per_fitness_level_sum),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub records: Vec<RunRecord>,
    pub summary: BatchSummary,
}

fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    b.build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// Runs every trial of `cfg`, and writes records, summary and trajectories when `cfg.out` is set.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<Batch> {
    let f = cfg.validate()?;
    let level_sum = TheoryContext::for_benchmark(&f, &cfg.params)?.fitness_level_sum()?;
    info!(
        "{} n={} trials={} budget={} seed={}",
        f.name(),
        cfg.n,
        cfg.trials,
        cfg.budget_evals,
        cfg.base_seed
    );

    let pool = thread_pool(cfg.workers)?;
    let records = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let mut ea = SelfAdjustingEa::new(&f, cfg.params)?;
                let mut r = ea.run(cfg.budget_evals, trial_seed(cfg.base_seed, i), cfg.trajectory_stride)?;
                r.trial = i;
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = BatchSummary::from_records(&records, f.max_value(), level_sum)?;
    let batch = Batch { records, summary };
    if let Some(dir) = &cfg.out {
        write_batch(dir, &batch)?;
    }
    Ok(batch)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish<W: std::io::Write>(w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

/// Writes `records.csv`, `summary.csv` and, for runs with trajectories, `trajectories/trial_<i>.csv`.
pub fn write_batch(dir: &Path, batch: &Batch) -> Result<()> {
    create_dir(dir)?;
    write_records(&dir.join(RECORDS_FILE), &batch.records)?;
    write_summary(&dir.join(SUMMARY_FILE), &batch.summary)?;
    if batch.records.iter().any(|r| !r.trajectory.is_empty()) {
        let tdir = dir.join(TRAJECTORY_DIR);
        create_dir(&tdir)?;
        for r in &batch.records {
            write_trajectory(&tdir.join(format!("trial_{}.csv", r.trial)), &r.trajectory)?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    trial: u64,
    seed: u64,
    success: bool,
    generations: u64,
    evaluations: u64,
    final_fitness: usize,
    max_lambda: f64,
    time_ms: u64,
}

pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in records {
        w.serialize(RecordRow {
            trial: r.trial,
            seed: r.seed,
            success: r.success,
            generations: r.generations,
            evaluations: r.evaluations,
            final_fitness: r.final_fitness,
            max_lambda: r.max_lambda,
            time_ms: r.time_ms,
        })?;
    }
    finish(w, path)
}

/// Reads a records CSV back; trajectories are left empty.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_path(path)?;
    rd.deserialize::<RecordRow>()
        .map(|row| {
            let r = row?;
            Ok(RunRecord {
                trial: r.trial,
                seed: r.seed,
                success: r.success,
                generations: r.generations,
                evaluations: r.evaluations,
                final_fitness: r.final_fitness,
                max_lambda: r.max_lambda,
                time_ms: r.time_ms,
                trajectory: Vec::new(),
            })
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct SummaryRow {
    metric: String,
    mean: f64,
    median: f64,
    std: f64,
    min: f64,
    max: f64,
}

pub fn write_summary(path: &Path, summary: &BatchSummary) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_summary_to(file, summary)
}

pub fn write_summary_to<W: Write>(out: W, summary: &BatchSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (metric, m) in summary.rows() {
        w.serialize(SummaryRow {
            metric: metric.to_string(),
            mean: m.mean,
            median: m.median,
            std: m.std,
            min: m.min,
            max: m.max,
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Summary CSV contents as `(metric, summary)` pairs in file order.
pub fn read_summary(path: &Path) -> Result<Vec<(String, MetricSummary)>> {
    let mut rd = csv::Reader::from_path(path)?;
    rd.deserialize::<SummaryRow>()
        .map(|row| {
            let r = row?;
            Ok((
                r.metric,
                MetricSummary {
                    mean: r.mean,
                    median: r.median,
                    std: r.std,
                    min: r.min,
                    max: r.max,
                },
            ))
        })
        .collect()
}

#[derive(Serialize)]
struct TrajectoryRow {
    generation: u64,
    fitness: usize,
    lambda: f64,
}

pub fn write_trajectory(path: &Path, points: &[TrajectoryPoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for p in points {
        w.serialize(TrajectoryRow {
            generation: p.generation,
            fitness: p.fitness,
            lambda: p.lambda,
        })?;
    }
    finish(w, path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub k: Option<usize>,
    pub trials: u64,
    pub median_generations: f64,
    pub median_evaluations: f64,
    pub gen_per_n: f64,
    pub evals_per_n2: f64,
    /// `evals · k / (n² ln k)`, or `evals / n²` for `k = 1`. Not written to CSV.
    pub evals_block_normalized: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
}

impl ScalingTable {
    /// Least-squares slope of `ln(median evaluations)` against `ln n` over rows with block size `k`.
    pub fn evaluation_slope(&self, k: Option<usize>) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.k == k)
            .map(|r| (r.n as f64, r.median_evaluations))
            .collect();
        loglog_slope(&pts)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }

    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            n: usize,
            k: Option<usize>,
            trials: u64,
            median_generations: f64,
            median_evaluations: f64,
            gen_per_n: f64,
            evals_per_n2: f64,
            success_rate: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(Row {
                n: r.n,
                k: r.k,
                trials: r.trials,
                median_generations: r.median_generations,
                median_evaluations: r.median_evaluations,
                gen_per_n: r.gen_per_n,
                evals_per_n2: r.evals_per_n2,
                success_rate: r.success_rate,
            })?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::invalid("a log-log fit needs at least two positive points"));
    }
    let m = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("a log-log fit needs at least two distinct x values"));
    }
    Ok(sxy / sxx)
}

/// One batch per grid point of `n_values × k_values`. With `template.out`
/// set, batch `(n, k)` goes to `out/n<n>_k<k>/` and the table to `out/scaling.csv`.
pub fn scaling_study(
    template: &ExperimentConfig,
    n_values: &[usize],
    k_values: Option<&[usize]>,
) -> Result<ScalingTable> {
    let distinct = |v: &[usize]| {
        let mut v = v.to_vec();
        v.sort_unstable();
        v.dedup();
        v.len()
    };
    let ks: Vec<Option<usize>> = match k_values {
        Some(ks) => ks.iter().map(|&k| Some(k)).collect(),
        None => vec![template.k],
    };
    if distinct(n_values) < 3 && k_values.map_or(true, |k| distinct(k) < 3) {
        return Err(Error::invalid("a scaling study needs at least 3 distinct n or k values"));
    }

    let mut rows = Vec::new();
    for &n in n_values {
        for &k in &ks {
            let mut cfg = template.clone();
            cfg.n = n;
            cfg.k = k;
            cfg.out = template.out.as_ref().map(|d| match k {
                Some(k) => d.join(format!("n{n}_k{k}")),
                None => d.join(format!("n{n}")),
            });
            let batch = run_batch(&cfg)?;
            let s = &batch.summary;
            let nf = n as f64;
            let evals = s.evaluations.median;
            let block = match k {
                Some(k) if k > 1 => evals * k as f64 / (nf * nf * (k as f64).ln()),
                _ => evals / (nf * nf),
            };
            rows.push(ScalingRow {
                n,
                k,
                trials: s.trials,
                median_generations: s.generations.median,
                median_evaluations: evals,
                gen_per_n: s.generations.median / nf,
                evals_per_n2: evals / (nf * nf),
                evals_block_normalized: block,
                success_rate: s.success_rate,
            });
        }
    }
    let table = ScalingTable { rows };
    if let Some(dir) = &template.out {
        create_dir(dir)?;
        table.write_csv(&dir.join(SCALING_FILE))?;
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub metric: &'static str,
    pub empirical: f64,
    pub bound: f64,
    pub ratio: f64,
    /// Whether exceeding the bound counts as a violation.
    pub enforced: bool,
}

impl BoundRow {
    fn new(metric: &'static str, empirical: f64, bound: f64, enforced: bool) -> Self {
        Self {
            metric,
            empirical,
            bound,
            ratio: empirical / bound,
            enforced,
        }
    }

    pub fn violated(&self) -> bool {
        self.enforced && self.ratio > 1.0
    }
}

/// Mean generations against the generation bound and mean evaluations against
/// the elitist evaluation bound (elitist runs) or the plain fitness-level sum
/// (comma runs, reported but not enforced).
pub fn compare_to_bounds(
    summary: &BatchSummary,
    ctx: &TheoryContext,
    params: &AlgorithmParams,
) -> Result<Vec<BoundRow>> {
    if summary.success_rate < 1.0 {
        return Err(Error::invalid(format!(
            "bounds apply to completed runs only; success rate is {}",
            summary.success_rate
        )));
    }
    let mut rows = vec![BoundRow::new(
        "mean_generations",
        summary.generations.mean,
        ctx.generation_bound(),
        !params.elitist,
    )];
    if params.elitist {
        rows.push(BoundRow::new(
            "mean_evaluations",
            summary.evaluations.mean,
            ctx.elitist_evaluation_bound(0, ctx.d, params.lambda_init)?,
            true,
        ));
    } else {
        rows.push(BoundRow::new(
            "mean_evaluations",
            summary.evaluations.mean,
            ctx.fitness_level_sum()?,
            false,
        ));
    }
    Ok(rows)
}
