//! Estimators for one-offspring improvement and worsening probabilities, an
//! everywhere-hardness classifier, and an empirical drift estimator for `log_F λ`.
//!
//! Representative points for the classifier come from (1+1) hill-climbing
//! walks at rate 1/n, one ascending and one descending walk per random restart.
//! Only points these walks visit are probed; nothing is claimed about others.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::bitstring::Bitstring;
use crate::ea::{AlgorithmParams, SelfAdjustingEa};
use crate::error::{Error, Result};
use crate::fitness::Fitness;
use crate::mutation::{MutationKind, MutationSpec, Mutator};
use crate::rng::{trial_seed, RngStream, Substream};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

pub const MIN_SAMPLES: u64 = 1000;

/// Largest `n` accepted by [`exact_level_probs_bruteforce`].
pub const BRUTEFORCE_MAX_N: usize = 12;

/// Consecutive generations above the drift condition before a restart.
pub const DEFAULT_DRIFT_RESTART_WINDOW: u64 = 64;

/// A drift run also restarts once λ exceeds this multiple of the condition.
pub const DEFAULT_DRIFT_LAMBDA_CAP: f64 = 64.0;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let hw = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lower = if successes == 0 { 0.0 } else { (centre - hw).max(0.0) };
    let upper = if successes == trials { 1.0 } else { (centre + hw).min(1.0) };
    (lower, upper)
}

/// A proportion with its 95% interval. Exact values have `lower == upper == estimate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Proportion {
    pub fn exact(p: f64) -> Self {
        Self {
            estimate: p,
            lower: p,
            upper: p,
        }
    }

    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let (lower, upper) = wilson_interval(successes, trials, Z95);
        Self {
            estimate: successes as f64 / trials as f64,
            lower,
            upper,
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.upper - self.lower) / 2.0
    }
}

/// Improvement and worsening probabilities of one offspring of a fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelEstimate {
    /// Fitness of the probed point.
    pub level: usize,
    pub p_plus: Proportion,
    pub p_minus: Proportion,
    /// Number of offspring drawn; 0 for exact values.
    pub samples: u64,
    /// Mean fitness gain given an improvement.
    pub delta_plus: Option<f64>,
    /// Mean fitness loss given a worsening.
    pub delta_minus: Option<f64>,
}

#[derive(Default)]
struct Tally {
    better: u64,
    worse: u64,
    gain: u64,
    loss: u64,
}

impl Tally {
    fn add(&mut self, parent: usize, child: usize) {
        if child > parent {
            self.better += 1;
            self.gain += (child - parent) as u64;
        } else if child < parent {
            self.worse += 1;
            self.loss += (parent - child) as u64;
        }
    }
}

fn conditional_mean(total: u64, count: u64) -> Option<f64> {
    (count > 0).then(|| total as f64 / count as f64)
}

/// Monte Carlo estimate from `samples` independent offspring of `x`.
pub fn estimate_level_probs<F, R>(
    f: &F,
    spec: &MutationSpec,
    x: &Bitstring,
    samples: u64,
    rng: &mut R,
) -> Result<LevelEstimate>
where
    F: Fitness + ?Sized,
    R: Rng + ?Sized,
{
    if samples < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    check_len(f, x)?;
    let mut mutator = Mutator::new(spec, f.n())?;
    let parent = f.evaluate(x);
    let mut child = x.clone();
    let mut tally = Tally::default();
    for _ in 0..samples {
        mutator.begin_generation(rng);
        let flips = mutator.mutate_into(x, &mut child, rng);
        if flips > 0 {
            tally.add(parent, f.evaluate(&child));
        }
    }
    Ok(LevelEstimate {
        level: parent,
        p_plus: Proportion::from_counts(tally.better, samples),
        p_minus: Proportion::from_counts(tally.worse, samples),
        samples,
        delta_plus: conditional_mean(tally.gain, tally.better),
        delta_minus: conditional_mean(tally.loss, tally.worse),
    })
}

/// Exact probabilities by enumerating all `2^n` flip masks, for standard bit mutation and `n <= 12`.
pub fn exact_level_probs_bruteforce<F: Fitness + ?Sized>(
    f: &F,
    spec: &MutationSpec,
    x: &Bitstring,
) -> Result<LevelEstimate> {
    let n = f.n();
    if n > BRUTEFORCE_MAX_N {
        return Err(Error::invalid(format!(
            "exhaustive enumeration needs n <= {BRUTEFORCE_MAX_N}, got {n}"
        )));
    }
    if spec.kind != MutationKind::Standard {
        return Err(Error::invalid("exhaustive enumeration only supports sbm"));
    }
    spec.validate(n)?;
    check_len(f, x)?;
    let rate = spec.standard_rate(n);
    let base: u64 = x.iter().enumerate().map(|(i, b)| (b as u64) << i).sum();
    let parent = f.evaluate(x);

    let (mut p_plus, mut p_minus, mut gain, mut loss) = (0.0, 0.0, 0.0, 0.0);
    for mask in 1u64..(1 << n) {
        let flips = mask.count_ones() as i32;
        let w = rate.powi(flips) * (1.0 - rate).powi(n as i32 - flips);
        let child = f.evaluate(&Bitstring::from_index(base ^ mask, n));
        if child > parent {
            p_plus += w;
            gain += w * (child - parent) as f64;
        } else if child < parent {
            p_minus += w;
            loss += w * (parent - child) as f64;
        }
    }
    Ok(LevelEstimate {
        level: parent,
        p_plus: Proportion::exact(p_plus),
        p_minus: Proportion::exact(p_minus),
        samples: 0,
        delta_plus: (p_plus > 0.0).then(|| gain / p_plus),
        delta_minus: (p_minus > 0.0).then(|| loss / p_minus),
    })
}

fn check_len<F: Fitness + ?Sized>(f: &F, x: &Bitstring) -> Result<()> {
    if x.len() != f.n() {
        return Err(Error::invalid(format!(
            "point has length {}, function expects {}",
            x.len(),
            f.n()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Hard,
    NotHard,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Hard => "hard",
            Verdict::NotHard => "not_hard",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-level estimates for a set of representative points.
#[derive(Debug, Clone)]
pub struct HardnessProbe {
    pub n: usize,
    /// Sorted by level; `points_per_level` entries per non-optimal level.
    pub estimates: Vec<LevelEstimate>,
}

#[derive(Debug, Clone)]
pub struct HardnessReport {
    pub verdict: Verdict,
    /// `c · n^-ε`.
    pub threshold: f64,
    pub max_p_plus: f64,
    pub max_p_plus_upper: f64,
}

impl HardnessProbe {
    /// Collects `points_per_level` points on every non-optimal level and
    /// estimates their probabilities from `samples` offspring each.
    pub fn estimate<F, R>(
        f: &F,
        spec: &MutationSpec,
        points_per_level: usize,
        samples: u64,
        rng: &mut R,
    ) -> Result<Self>
    where
        F: Fitness + ?Sized,
        R: Rng + ?Sized,
    {
        if points_per_level == 0 {
            return Err(Error::invalid("points per level must be positive"));
        }
        if samples < MIN_SAMPLES {
            return Err(Error::invalid(format!(
                "need at least {MIN_SAMPLES} samples, got {samples}"
            )));
        }
        spec.validate(f.n())?;
        let points = collect_level_points(f, points_per_level, rng)?;
        let master: u64 = rng.random();
        let estimates = points
            .par_iter()
            .enumerate()
            .map(|(j, x)| {
                let mut r = RngStream::substream(trial_seed(master, j as u64), Substream::Aux);
                estimate_level_probs(f, spec, x, samples, &mut r)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n: f.n(), estimates })
    }

    pub fn max_p_plus(&self) -> f64 {
        self.estimates.iter().map(|e| e.p_plus.estimate).fold(0.0, f64::max)
    }

    /// hard if every upper bound is at most `c·n^-ε`, not_hard if some lower bound exceeds it.
    pub fn classify(&self, epsilon: f64, c: f64) -> Result<HardnessReport> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(c > 0.0) {
            return Err(Error::invalid(format!("c must be positive, got {c}")));
        }
        let threshold = c * (self.n as f64).powf(-epsilon);
        let upper = self.estimates.iter().map(|e| e.p_plus.upper).fold(0.0, f64::max);
        let lower = self.estimates.iter().map(|e| e.p_plus.lower).fold(0.0, f64::max);
        let verdict = if upper <= threshold {
            Verdict::Hard
        } else if lower > threshold {
            Verdict::NotHard
        } else {
            Verdict::Inconclusive
        };
        Ok(HardnessReport {
            verdict,
            threshold,
            max_p_plus: self.max_p_plus(),
            max_p_plus_upper: upper,
        })
    }
}

/// Writes `level,p_plus,p_plus_hw,p_minus,p_minus_hw,samples`, one row per estimate.
pub fn write_level_estimates_to<W: std::io::Write>(out: W, estimates: &[LevelEstimate]) -> Result<()> {
    #[derive(serde::Serialize)]
    struct Row {
        level: usize,
        p_plus: f64,
        p_plus_hw: f64,
        p_minus: f64,
        p_minus_hw: f64,
        samples: u64,
    }
    let mut w = csv::Writer::from_writer(out);
    for e in estimates {
        w.serialize(Row {
            level: e.level,
            p_plus: e.p_plus.estimate,
            p_plus_hw: e.p_plus.half_width(),
            p_minus: e.p_minus.estimate,
            p_minus_hw: e.p_minus.half_width(),
            samples: e.samples,
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn probe_everywhere_hardness<F, R>(
    f: &F,
    spec: &MutationSpec,
    points_per_level: usize,
    samples: u64,
    epsilon: f64,
    c: f64,
    rng: &mut R,
) -> Result<HardnessReport>
where
    F: Fitness + ?Sized,
    R: Rng + ?Sized,
{
    HardnessProbe::estimate(f, spec, points_per_level, samples, rng)?.classify(epsilon, c)
}

/// Points on every level `0..d`. Ascending and descending hill-climbing walks
/// from random restarts come first; levels they leave short are then filled by
/// walks that minimise the distance to the level. A level may repeat a point.
fn collect_level_points<F, R>(f: &F, per_level: usize, rng: &mut R) -> Result<Vec<Bitstring>>
where
    F: Fitness + ?Sized,
    R: Rng + ?Sized,
{
    let n = f.n();
    let d = f.max_value();
    let walk_limit = 10 * (n as u64) * (n as u64) + 1000;
    let walker = Walker {
        f,
        mutator: Mutator::new(&MutationSpec::default(), n)?,
        limit: walk_limit,
    };
    let mut found: Vec<Vec<Bitstring>> = vec![Vec::new(); d];

    for _ in 0..4 + 2 * per_level {
        let start = Bitstring::random(n, rng);
        for ascending in [true, false] {
            let mut seen = vec![false; d];
            walker.walk(
                start.clone(),
                |fx, fy| if ascending { fy >= fx } else { fy <= fx },
                |x, fx| {
                    if fx < d && !seen[fx] {
                        seen[fx] = true;
                        if found[fx].len() < per_level {
                            found[fx].push(x.clone());
                        }
                    }
                    if ascending { fx == d } else { fx == 0 }
                },
                rng,
            );
        }
    }

    for level in 0..d {
        let need = per_level - found[level].len();
        if need == 0 {
            continue;
        }
        let start = found
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_empty())
            .min_by_key(|(l, _)| l.abs_diff(level))
            .map(|(_, v)| v[0].clone())
            .unwrap_or_else(|| Bitstring::random(n, rng));
        let mut extra = Vec::new();
        walker.walk(
            start,
            |fx, fy| fy.abs_diff(level) <= fx.abs_diff(level),
            |x, fx| {
                if fx == level {
                    extra.push(x.clone());
                }
                extra.len() >= need
            },
            rng,
        );
        found[level].extend(extra);
        if found[level].is_empty() {
            return Err(Error::invalid(format!(
                "no point found on fitness level {level} after {walk_limit} steps"
            )));
        }
        // Some levels hold very few points; repeat what was found.
        let mut i = 0;
        while found[level].len() < per_level {
            let x = found[level][i].clone();
            found[level].push(x);
            i += 1;
        }
    }
    Ok(found.into_iter().flatten().collect())
}

/// (1+1) walks at rate 1/n with a pluggable acceptance rule.
struct Walker<'a, F: Fitness + ?Sized> {
    f: &'a F,
    mutator: Mutator,
    limit: u64,
}

impl<F: Fitness + ?Sized> Walker<'_, F> {
    /// Calls `visit` on the start and on every accepted point until it returns
    /// true or the step limit is hit.
    fn walk<R: Rng + ?Sized>(
        &self,
        mut x: Bitstring,
        accept: impl Fn(usize, usize) -> bool,
        mut visit: impl FnMut(&Bitstring, usize) -> bool,
        rng: &mut R,
    ) {
        let mut fx = self.f.evaluate(&x);
        let mut y = x.clone();
        if visit(&x, fx) {
            return;
        }
        for _ in 0..self.limit {
            if self.mutator.mutate_into(&x, &mut y, rng) == 0 {
                continue;
            }
            let fy = self.f.evaluate(&y);
            if accept(fx, fy) {
                std::mem::swap(&mut x, &mut y);
                fx = fy;
                if visit(&x, fx) {
                    return;
                }
            }
        }
    }
}

/// Mean one-generation change of `log_F λ` over generations starting with λ at most a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftEstimate {
    pub conditioning: String,
    pub mean_drift: f64,
    /// 95% normal half-width, treating generations as independent.
    pub half_width: f64,
    pub samples: u64,
    /// False when the generation limit was hit before `target_samples` were seen.
    pub complete: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct DriftOptions {
    /// Restart after this many consecutive generations above the condition.
    pub restart_window: u64,
    /// Restart once λ exceeds `lambda_cap · condition_max_lambda`.
    pub lambda_cap: f64,
    /// Give up after `generation_factor · target_samples` generations.
    pub generation_factor: u64,
}

impl Default for DriftOptions {
    fn default() -> Self {
        Self {
            restart_window: DEFAULT_DRIFT_RESTART_WINDOW,
            lambda_cap: DEFAULT_DRIFT_LAMBDA_CAP,
            generation_factor: 100,
        }
    }
}

pub fn estimate_lambda_drift<F: Fitness + ?Sized>(
    f: &F,
    params: &AlgorithmParams,
    condition_max_lambda: f64,
    target_samples: u64,
    seed: u64,
) -> Result<DriftEstimate> {
    estimate_lambda_drift_with(f, params, condition_max_lambda, target_samples, seed, DriftOptions::default())
}

/// Runs the algorithm from fresh restarts and records `log_F λ_{t+1} − log_F λ_t`
/// whenever `λ_t ≤ condition_max_lambda`. A run restarts on reaching the optimum,
/// after `restart_window` consecutive generations above the condition, or once
/// λ passes `lambda_cap` times the condition.
pub fn estimate_lambda_drift_with<F: Fitness + ?Sized>(
    f: &F,
    params: &AlgorithmParams,
    condition_max_lambda: f64,
    target_samples: u64,
    seed: u64,
    opts: DriftOptions,
) -> Result<DriftEstimate> {
    if !(condition_max_lambda >= 1.0) {
        return Err(Error::invalid(format!(
            "condition on lambda must be at least 1, got {condition_max_lambda}"
        )));
    }
    if target_samples == 0 || opts.restart_window == 0 || !(opts.lambda_cap >= 1.0) {
        return Err(Error::invalid(
            "target samples and restart window must be positive and the lambda cap at least 1",
        ));
    }
    let lambda_limit = opts.lambda_cap * condition_max_lambda;
    let mut ea = SelfAdjustingEa::new(f, *params)?;
    let ln_f = params.update_strength.ln();
    let up = 1.0 / params.success_rate;
    let d = f.max_value();
    let max_generations = opts.generation_factor.saturating_mul(target_samples);

    let mut restart = 0u64;
    let fresh = |ea: &SelfAdjustingEa<'_, F>, restart: &mut u64| {
        let s = trial_seed(seed, *restart);
        *restart += 1;
        (
            ea.initial_state(&mut RngStream::substream(s, Substream::Init)),
            RngStream::substream(s, Substream::Variation),
        )
    };
    let (mut state, mut rng) = fresh(&ea, &mut restart);

    let (mut count, mut sum, mut sum_sq) = (0u64, 0.0f64, 0.0f64);
    let mut above = 0u64;
    let mut generations = 0u64;
    while count < target_samples && generations < max_generations {
        if state.fitness == d || above >= opts.restart_window || state.lambda > lambda_limit {
            (state, rng) = fresh(&ea, &mut restart);
            above = 0;
        }
        let before = state.lambda;
        let outcome = ea.step(&mut state, &mut rng);
        generations += 1;
        if before <= condition_max_lambda {
            above = 0;
            // Exact step of the update rule; avoids rounding noise from taking logs.
            let step = if !outcome.success {
                up
            } else if before / params.update_strength >= 1.0 {
                -1.0
            } else {
                -before.ln() / ln_f
            };
            debug_assert!((step - (state.lambda.ln() - before.ln()) / ln_f).abs() < 1e-9);
            count += 1;
            sum += step;
            sum_sq += step * step;
        } else {
            above += 1;
        }
    }
    if count == 0 {
        return Err(Error::invalid(format!(
            "no generation with lambda <= {condition_max_lambda} within {generations} generations"
        )));
    }
    let mean = sum / count as f64;
    let var = if count > 1 {
        ((sum_sq - count as f64 * mean * mean) / (count - 1) as f64).max(0.0)
    } else {
        0.0
    };
    Ok(DriftEstimate {
        conditioning: format!("lambda <= {condition_max_lambda}"),
        mean_drift: mean,
        half_width: Z95 * (var / count as f64).sqrt(),
        samples: count,
        complete: count >= target_samples,
    })
}

/// Fraction of generations with a fitness loss, among those starting with `λ ≥ min_lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossFrequency {
    pub generations: u64,
    pub losses: u64,
}

impl LossFrequency {
    pub fn fraction(&self) -> f64 {
        if self.generations == 0 {
            0.0
        } else {
            self.losses as f64 / self.generations as f64
        }
    }
}

/// Runs handed to the worker pool at once by [`fitness_loss_frequency`].
const LOSS_ROUND: u64 = 32;

/// Pools generations with `λ_t ≥ min_lambda` over independent runs, each
/// stopped at the optimum or at `budget_evals`, until `target_generations` are
/// seen or `max_runs` runs have finished. Runs go in rounds of fixed size, so
/// the result does not depend on the worker count.
pub fn fitness_loss_frequency<F: Fitness + ?Sized>(
    f: &F,
    params: &AlgorithmParams,
    min_lambda: f64,
    target_generations: u64,
    max_runs: u64,
    budget_evals: u64,
    seed: u64,
) -> Result<LossFrequency> {
    params.validate(f.n())?;
    let d = f.max_value();
    let one_run = |run: u64| -> Result<LossFrequency> {
        let mut ea = SelfAdjustingEa::new(f, *params)?;
        let s = trial_seed(seed, run);
        let mut state = ea.initial_state(&mut RngStream::substream(s, Substream::Init));
        let mut rng = RngStream::substream(s, Substream::Variation);
        let mut out = LossFrequency {
            generations: 0,
            losses: 0,
        };
        while state.fitness < d && state.evaluations < budget_evals {
            let counted = state.lambda >= min_lambda;
            let outcome = ea.step(&mut state, &mut rng);
            if counted {
                out.generations += 1;
                out.losses += (outcome.fitness_delta < 0) as u64;
            }
        }
        Ok(out)
    };

    let mut total = LossFrequency {
        generations: 0,
        losses: 0,
    };
    let mut next = 0;
    while total.generations < target_generations && next < max_runs {
        let end = (next + LOSS_ROUND).min(max_runs);
        let parts = (next..end).into_par_iter().map(one_run).collect::<Result<Vec<_>>>()?;
        for p in parts {
            total.generations += p.generations;
            total.losses += p.losses;
        }
        next = end;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::Benchmark;

    #[test]
    fn wilson_basics() {
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert!(lo < 0.5 && hi > 0.5);
        let (lo, hi) = wilson_interval(100, 100, Z95);
        assert!(lo > 0.95 && hi == 1.0);
    }

    #[test]
    fn bruteforce_examples() {
        let lo = Benchmark::leadingones(4).unwrap();
        let e = exact_level_probs_bruteforce(&lo, &MutationSpec::default(), &"1100".parse().unwrap())
            .unwrap();
        assert!((e.p_plus.estimate - 9.0 / 64.0).abs() < 1e-15);
        // any of the two prefix bits flipping loses fitness
        assert!((e.p_minus.estimate - (1.0 - 0.75 * 0.75)).abs() < 1e-15);

        let om = Benchmark::onemax(3).unwrap();
        let e = exact_level_probs_bruteforce(&om, &MutationSpec::default(), &"110".parse().unwrap())
            .unwrap();
        assert!((e.p_plus.estimate - 4.0 / 27.0).abs() < 1e-15);
        assert!((e.p_minus.estimate - 11.0 / 27.0).abs() < 1e-15);
        assert_eq!(e.delta_plus, Some(1.0));

        let opt = exact_level_probs_bruteforce(&om, &MutationSpec::default(), &Bitstring::ones(3))
            .unwrap();
        assert_eq!(opt.p_plus.estimate, 0.0);
        assert_eq!(opt.delta_plus, None);
    }

    #[test]
    fn bruteforce_rejects() {
        let big = Benchmark::onemax(13).unwrap();
        assert!(exact_level_probs_bruteforce(&big, &MutationSpec::default(), &Bitstring::zeros(13)).is_err());
        let f = Benchmark::onemax(8).unwrap();
        let ht = MutationSpec::heavy_tailed(1.5);
        assert!(exact_level_probs_bruteforce(&f, &ht, &Bitstring::zeros(8)).is_err());
    }

    #[test]
    fn leadingones_bruteforce_matches_formula() {
        let n = 10;
        let f = Benchmark::leadingones(n).unwrap();
        let mut rng = RngStream::new(5);
        for _ in 0..20 {
            let x = Bitstring::random(n, &mut rng);
            let i = f.evaluate(&x);
            let e = exact_level_probs_bruteforce(&f, &MutationSpec::default(), &x).unwrap();
            let expect = if i == n {
                0.0
            } else {
                (1.0 / n as f64) * (1.0 - 1.0 / n as f64).powi(i as i32)
            };
            assert!((e.p_plus.estimate - expect).abs() < 1e-14, "{x}");
        }
    }

    #[test]
    fn trivial_estimates() {
        let n = 30;
        let mut rng = RngStream::new(1);
        let om = Benchmark::onemax(n).unwrap();
        let e = estimate_level_probs(&om, &MutationSpec::default(), &Bitstring::zeros(n), 2000, &mut rng)
            .unwrap();
        assert_eq!(e.p_minus.estimate, 0.0);
        let e = estimate_level_probs(&om, &MutationSpec::default(), &Bitstring::ones(n), 2000, &mut rng)
            .unwrap();
        assert_eq!(e.p_plus.estimate, 0.0);
        assert!(estimate_level_probs(&om, &MutationSpec::default(), &Bitstring::ones(n), 999, &mut rng).is_err());
    }

    #[test]
    fn leadingones_estimate_within_three_sigma() {
        let n = 50;
        let f = Benchmark::leadingones(n).unwrap();
        let mut rng = RngStream::new(11);
        let mut x = Bitstring::random(n, &mut rng);
        for j in 0..20 {
            x.set(j, true);
        }
        x.set(20, false);
        let samples = 200_000;
        let e = estimate_level_probs(&f, &MutationSpec::default(), &x, samples, &mut rng).unwrap();
        let p = (1.0 / n as f64) * (1.0 - 1.0 / n as f64).powi(20);
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        assert!((e.p_plus.estimate - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn verdict_is_monotone_in_c() {
        let f = Benchmark::leadingones(40).unwrap();
        let probe = HardnessProbe::estimate(&f, &MutationSpec::default(), 1, 1000, &mut RngStream::new(2)).unwrap();
        assert_eq!(probe.estimates.len(), 40);
        let mut seen_hard = false;
        for i in 1..200 {
            let c = i as f64 * 0.05;
            let v = probe.classify(0.5, c).unwrap().verdict;
            if seen_hard {
                assert_eq!(v, Verdict::Hard);
            }
            seen_hard |= v == Verdict::Hard;
        }
        assert!(seen_hard);
        assert!(probe.classify(0.0, 1.0).is_err());
        assert!(probe.classify(0.5, 0.0).is_err());
    }

    #[test]
    fn points_cover_every_level() {
        let f = Benchmark::onemaxblocks(24, 4).unwrap();
        let probe = HardnessProbe::estimate(&f, &MutationSpec::default(), 2, 1000, &mut RngStream::new(9)).unwrap();
        let levels: Vec<usize> = probe.estimates.iter().map(|e| e.level).collect();
        let expect: Vec<usize> = (0..24).flat_map(|l| [l, l]).collect();
        assert_eq!(levels, expect);
    }

    struct Flat(usize);
    impl Fitness for Flat {
        fn n(&self) -> usize {
            self.0
        }
        fn max_value(&self) -> usize {
            1
        }
        fn evaluate(&self, _: &Bitstring) -> usize {
            0
        }
        fn name(&self) -> String {
            "flat".into()
        }
    }

    #[test]
    fn no_success_gives_exact_upward_drift() {
        for s in [1.0, 4.0] {
            let params = AlgorithmParams {
                success_rate: s,
                ..AlgorithmParams::default()
            };
            let est = estimate_lambda_drift(&Flat(20), &params, 10.0, 5000, 3).unwrap();
            assert_eq!(est.mean_drift, 1.0 / s);
            assert_eq!(est.half_width, 0.0);
            assert!(est.complete);
        }
    }

    #[test]
    fn successful_generation_steps_down_by_one() {
        // OneMax from all zeros at rate 1: every offspring is the optimum.
        let f = Benchmark::onemax(5).unwrap();
        let params = AlgorithmParams {
            mutation: MutationSpec::with_rate(1.0),
            lambda_init: 4.0,
            ..AlgorithmParams::default()
        };
        let mut ea = SelfAdjustingEa::new(&f, params).unwrap();
        let mut st = ea.state_at(Bitstring::zeros(5));
        let out = ea.step(&mut st, &mut RngStream::new(0));
        assert!(out.success);
        let step = (st.lambda.ln() - 4f64.ln()) / 1.5f64.ln();
        assert!((step + 1.0).abs() < 1e-12);
    }

    #[test]
    fn drift_reports_incomplete() {
        let f = Benchmark::leadingones(30).unwrap();
        let opts = DriftOptions {
            generation_factor: 1,
            ..DriftOptions::default()
        };
        let est = estimate_lambda_drift_with(&f, &AlgorithmParams::default(), 1.0, 1000, 1, opts).unwrap();
        assert!(!est.complete);
        assert!(est.samples < 1000);
        assert!(estimate_lambda_drift(&f, &AlgorithmParams::default(), 0.5, 10, 1).is_err());
    }
}
