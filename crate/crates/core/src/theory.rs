//! Closed-form thresholds and runtime bounds.
//!
//! Everything here is plain arithmetic on a [`TheoryContext`]: the safe and
//! threshold population sizes, the potential function, fitness-level sums and
//! the evaluation, generation and expected-λ bounds. The free functions take
//! scalars so single formulas can be checked in isolation.

use std::f64::consts::E;

use crate::ea::AlgorithmParams;
use crate::error::{Error, Result};
use crate::fitness::{Benchmark, Fitness};
use crate::mutation::{MutationKind, MutationSpec, PowerLaw};

/// Hardness exponents are kept strictly below 1.
pub const EPSILON_CAP: f64 = 0.99;

/// `4 · max(log_γ(2d(s+1)), log_γ(n ln n))`. The inner logarithm is natural.
pub fn lambda_safe(n: usize, d: usize, success_rate: f64, gamma: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::invalid(format!("lambda_safe needs n >= 3, got {n}")));
    }
    if !(gamma > 1.0) {
        return Err(Error::invalid(format!("gamma must exceed 1, got {gamma}")));
    }
    let n = n as f64;
    let levels = (2.0 * d as f64 * (success_rate + 1.0)).ln();
    let size = (n * n.ln()).ln();
    Ok(4.0 * levels.max(size) / gamma.ln())
}

/// `n^(ε/2)`.
pub fn lambda_threshold(n: usize, epsilon: f64) -> f64 {
    (n as f64).powf(epsilon / 2.0)
}

/// `f − s/(s+1) · log_F(max(F^(1/s) / (p_min·λ), 1))`.
pub fn potential(fitness: usize, lambda: f64, update_strength: f64, success_rate: f64, p_min: f64) -> f64 {
    fitness as f64 - penalty(lambda, update_strength, success_rate, p_min)
}

fn penalty(lambda: f64, update_strength: f64, success_rate: f64, p_min: f64) -> f64 {
    let growth = update_strength.powf(1.0 / success_rate);
    let ratio = (growth / (p_min * lambda)).max(1.0);
    success_rate / (success_rate + 1.0) * ratio.ln() / update_strength.ln()
}

/// Multiplier of the level sum in the elitist evaluation bound.
pub fn elitist_level_coefficient(update_strength: f64, success_rate: f64) -> f64 {
    let f = update_strength;
    let s = success_rate;
    let growth = f.powf(1.0 / s);
    (1.0 / E + (1.0 - 1.0 / growth) / growth.ln()) * (f.powf((s + 1.0) / s) - 1.0) / (f - 1.0)
}

/// Parameters feeding the bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryContext {
    pub n: usize,
    /// Number of non-optimal fitness values.
    pub d: usize,
    pub success_rate: f64,
    pub update_strength: f64,
    /// Every non-optimal point has worsening probability at most `1/γ`.
    pub gamma: f64,
    /// Improvement probabilities are `O(n^-ε)`.
    pub epsilon: f64,
    /// Smallest one-offspring improvement probability over non-optimal points.
    pub p_min: f64,
    /// Largest one-offspring improvement probability over non-optimal points.
    pub p_max: f64,
    /// `s_i`: lower bound on the improvement probability on level `i`, for `i in 0..d`.
    pub level_probs: Vec<f64>,
}

impl TheoryContext {
    /// Default context for a benchmark and algorithm: analytic γ, ε, level
    /// probabilities and extremal improvement probabilities for the configured
    /// mutation operator.
    pub fn for_benchmark(f: &Benchmark, params: &AlgorithmParams) -> Result<Self> {
        let n = f.n();
        params.validate(n)?;
        let rates = RateMixture::new(&params.mutation, n)?;
        let k = f.block_size();

        let level_probs: Vec<f64> = match f {
            Benchmark::LeadingOnes { .. } => (0..n)
                .map(|i| rates.expect(|r| r * (1.0 - r).powi(i as i32)))
                .collect(),
            Benchmark::OneMax { .. } | Benchmark::OneMaxBlocks { .. } => (0..n)
                .map(|i| {
                    let zeros = (k - i % k) as f64;
                    rates.expect(|r| zeros * r * (1.0 - r).powi(n as i32 - 1))
                })
                .collect(),
        };
        let p_min = level_probs.iter().copied().fold(f64::INFINITY, f64::min);
        let p_max = rates.expect(|r| (k as f64 * r).min(1.0));

        let ln_n = (n as f64).ln();
        let epsilon = match params.mutation.kind {
            MutationKind::Standard => -p_max.ln() / ln_n,
            MutationKind::HeavyTailed => {
                let beta_slack = params.mutation.beta - 1.0;
                match f {
                    Benchmark::LeadingOnes { .. } => beta_slack,
                    _ => {
                        let lk = (k as f64).ln() / ln_n;
                        (1.0 - lk).min(beta_slack - lk)
                    }
                }
            }
        }
        .min(EPSILON_CAP);

        let ctx = Self {
            n,
            d: f.max_value(),
            success_rate: params.success_rate,
            update_strength: params.update_strength,
            gamma: rates.gamma(n),
            epsilon,
            p_min,
            p_max,
            level_probs,
        };
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(Error::invalid(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!(
                "epsilon must lie in (0, 1), got {} (the function is not everywhere hard \
                 for this operator; pass an explicit epsilon to override)",
                self.epsilon
            )));
        }
        if !(self.p_min > 0.0 && self.p_min <= self.p_max && self.p_max <= 1.0) {
            return Err(Error::invalid(format!(
                "need 0 < p_min <= p_max <= 1, got p_min={}, p_max={}",
                self.p_min, self.p_max
            )));
        }
        if !(self.update_strength > 1.0 && self.success_rate > 0.0) {
            return Err(Error::invalid("need F > 1 and s > 0"));
        }
        if let Some(i) = self.level_probs.iter().position(|&p| !(p > 0.0)) {
            return Err(Error::invalid(format!("level probability s_{i} must be positive")));
        }
        Ok(())
    }

    pub fn lambda_safe(&self) -> Result<f64> {
        lambda_safe(self.n, self.d, self.success_rate, self.gamma)
    }

    pub fn lambda_threshold(&self) -> f64 {
        lambda_threshold(self.n, self.epsilon)
    }

    pub fn potential(&self, fitness: usize, lambda: f64) -> f64 {
        potential(fitness, lambda, self.update_strength, self.success_rate, self.p_min)
    }

    /// Largest gap between fitness and potential, reached at λ = 1.
    pub fn max_penalty(&self) -> f64 {
        penalty(1.0, self.update_strength, self.success_rate, self.p_min)
    }

    /// `Σ_{i<d} 1/s_i`.
    pub fn fitness_level_sum(&self) -> Result<f64> {
        self.level_sum(0, self.d)
    }

    fn level_sum(&self, a: usize, b: usize) -> Result<f64> {
        if b > self.level_probs.len() {
            return Err(Error::invalid(format!(
                "level probabilities cover {} levels, need {b}",
                self.level_probs.len()
            )));
        }
        self.level_probs[a..b]
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                if p > 0.0 {
                    Ok(1.0 / p)
                } else {
                    Err(Error::invalid(format!("level probability s_{} must be positive", a + i)))
                }
            })
            .sum()
    }

    /// Expected evaluations of the elitist variant to go from fitness `a` to at least `b`.
    pub fn elitist_evaluation_bound(&self, a: usize, b: usize, lambda_init: f64) -> Result<f64> {
        if a > b || b > self.d {
            return Err(Error::invalid(format!(
                "need 0 <= a <= b <= d, got a={a}, b={b}, d={}",
                self.d
            )));
        }
        let f = self.update_strength;
        // The initial-λ term is printed in the source result as F/(1-F), which is
        // negative for F > 1 and cannot bound a count from above. F/(F-1) is used.
        let initial = lambda_init * f / (f - 1.0);
        Ok(initial + elitist_level_coefficient(f, self.success_rate) * self.level_sum(a, b)?)
    }

    /// Upper bound on `E[λ_t]` starting from `lambda_init`.
    pub fn expected_lambda_bound(&self, t: u64, lambda_init: f64) -> f64 {
        let f = self.update_strength;
        let decayed = (lambda_init / f.powf(t as f64)).floor();
        decayed + self.expected_lambda_limit()
    }

    /// The `t → ∞` limit of [`Self::expected_lambda_bound`].
    pub fn expected_lambda_limit(&self) -> f64 {
        let f = self.update_strength;
        let growth = f.powf(1.0 / self.success_rate);
        (growth + growth / f.ln()) / self.p_min
    }

    /// `2(s+1) · (d + s/(s+1) · log_F(F^(1/s) / p_min))`: initial potential gap over the drift `1/(2(s+1))`.
    pub fn generation_bound(&self) -> f64 {
        let s = self.success_rate;
        2.0 * (s + 1.0) * (self.d as f64 + self.max_penalty())
    }
}

/// The distribution of per-bit mutation rates used by one offspring.
struct RateMixture {
    rates: Vec<(f64, f64)>,
    copy_at_unit_rate: f64,
}

impl RateMixture {
    fn new(spec: &MutationSpec, n: usize) -> Result<Self> {
        spec.validate(n)?;
        Ok(match spec.kind {
            MutationKind::Standard => {
                let r = spec.standard_rate(n);
                Self {
                    rates: vec![(r, 1.0)],
                    copy_at_unit_rate: (1.0 - r).powi(n as i32),
                }
            }
            MutationKind::HeavyTailed => {
                let law = PowerLaw::new(n, spec.beta)?;
                let unit = 1.0 / n as f64;
                Self {
                    rates: law.probabilities().map(|(c, p)| (c as f64 / n as f64, p)).collect(),
                    copy_at_unit_rate: law.probability(1) * (1.0 - unit).powi(n as i32),
                }
            }
        })
    }

    fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.rates.iter().map(|&(r, w)| w * g(r)).sum()
    }

    /// `1 / (1 − P(copy))`, using only the unit-rate branch for the heavy-tailed operator.
    fn gamma(&self, _n: usize) -> f64 {
        1.0 / (1.0 - self.copy_at_unit_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    fn ctx(n: usize, d: usize, s: f64, f: f64, p_min: f64, levels: Vec<f64>) -> TheoryContext {
        TheoryContext {
            n,
            d,
            success_rate: s,
            update_strength: f,
            gamma: 2.0,
            epsilon: 0.5,
            p_min,
            p_max: 1.0,
            level_probs: levels,
        }
    }

    #[test]
    fn lambda_safe_examples() {
        let v = lambda_safe(1024, 100, 1.0, 2.0).unwrap();
        assert!(close(v, 51.172_646_887_769_86, 1e-12), "{v}");
        let v = lambda_safe(3, 1, 1.0, E).unwrap();
        assert!(close(v, 5.545_177_444_479_562, 1e-12), "{v}");
        assert!(lambda_safe(2, 1, 1.0, 2.0).is_err());
        assert!(lambda_safe(10, 1, 1.0, 1.0).is_err());
        // γ² halves λ_safe
        let a = lambda_safe(500, 10, 1.0, 1.7).unwrap();
        let b = lambda_safe(500, 10, 1.0, 1.7 * 1.7).unwrap();
        assert!(close(b, a / 2.0, 1e-12));
    }

    #[test]
    fn lambda_threshold_examples() {
        assert!(close(lambda_threshold(10_000, 0.5), 10.0, 1e-12));
        assert!(close(lambda_threshold(256, 1.0), 16.0, 1e-12));
        assert_eq!(lambda_threshold(256, 0.0), 1.0);
    }

    #[test]
    fn potential_examples() {
        assert!(close(potential(5, 1.0, 2.0, 1.0, 0.25), 3.5, 1e-12));
        // λ ≥ F^(1/s)/p_min: no penalty
        assert_eq!(potential(7, 8.0, 2.0, 1.0, 0.25), 7.0);
        assert_eq!(potential(7, 1000.0, 2.0, 1.0, 0.25), 7.0);
    }

    #[test]
    fn level_sum_examples() {
        let c = ctx(2, 2, 1.0, 1.5, 0.25, vec![0.5, 0.25]);
        assert!(close(c.fitness_level_sum().unwrap(), 6.0, 1e-15));
        let c = ctx(10, 10, 1.0, 1.5, 1.0, vec![1.0; 10]);
        assert_eq!(c.fitness_level_sum().unwrap(), 10.0);
        let c = ctx(3, 3, 1.0, 1.5, 0.1, vec![0.5, 0.0, 0.25]);
        assert!(c.fitness_level_sum().is_err());
    }

    #[test]
    fn leadingones_default_levels() {
        let f = Benchmark::leadingones(2).unwrap();
        let c = TheoryContext::for_benchmark(&f, &AlgorithmParams::default()).unwrap();
        assert_eq!(c.level_probs, vec![0.5, 0.25]);
        assert_eq!(c.fitness_level_sum().unwrap(), 6.0);
        assert_eq!(c.p_min, 0.25);
        assert_eq!(c.p_max, 0.5);
    }

    #[test]
    fn leadingones_level_sum_closed_form() {
        for n in [2usize, 5, 17, 64, 1000] {
            let f = Benchmark::leadingones(n).unwrap();
            let c = TheoryContext::for_benchmark(&f, &AlgorithmParams::default()).unwrap();
            let nf = n as f64;
            let closed = nf * (nf - 1.0) * ((1.0 - 1.0 / nf).powf(-nf) - 1.0);
            let looped = c.fitness_level_sum().unwrap();
            assert!(close(looped, closed, 1e-10), "n={n}: {looped} vs {closed}");
        }
    }

    #[test]
    fn onemaxblocks_levels_use_free_zeros() {
        let n = 12;
        let f = Benchmark::onemaxblocks(n, 4).unwrap();
        let c = TheoryContext::for_benchmark(&f, &AlgorithmParams::default()).unwrap();
        let single = (1.0 / 12.0) * (11.0f64 / 12.0).powi(11);
        for i in 0..n {
            assert!(close(c.level_probs[i], (4 - i % 4) as f64 * single, 1e-12));
        }
        assert!(close(c.epsilon, 1.0 - 4f64.ln() / 12f64.ln(), 1e-12));
    }

    #[test]
    fn default_epsilon_and_gamma() {
        let n = 128;
        let lo = Benchmark::leadingones(n).unwrap();
        let c = TheoryContext::for_benchmark(&lo, &AlgorithmParams::default()).unwrap();
        assert_eq!(c.epsilon, EPSILON_CAP);
        let gamma = 1.0 / (1.0 - (1.0 - 1.0 / n as f64).powi(n as i32));
        assert!(close(c.gamma, gamma, 1e-12));
        assert!(close(c.lambda_safe().unwrap(), 56.366_960_890_734_255, 1e-9));

        let ht = AlgorithmParams {
            mutation: MutationSpec::heavy_tailed(1.5),
            ..AlgorithmParams::default()
        };
        let c = TheoryContext::for_benchmark(&lo, &ht).unwrap();
        assert!(close(c.epsilon, 0.5, 1e-12));

        // OneMax with standard rate 1/n is not everywhere hard.
        let om = Benchmark::onemax(n).unwrap();
        let c = TheoryContext::for_benchmark(&om, &AlgorithmParams::default()).unwrap();
        assert!(c.validate().is_err());
        // ... but becomes so at rate n^-1.5
        let tiny = AlgorithmParams {
            mutation: MutationSpec::with_rate((n as f64).powf(-1.5)),
            ..AlgorithmParams::default()
        };
        let c = TheoryContext::for_benchmark(&om, &tiny).unwrap();
        assert!(close(c.epsilon, 0.5, 1e-12));
        c.validate().unwrap();
    }

    #[test]
    fn elitist_bound_examples() {
        assert!(close(elitist_level_coefficient(1.5, 1.0), 2.974_951_488_242_299, 1e-12));
        let c = ctx(10, 10, 1.0, 1.5, 0.1, vec![0.1; 10]);
        // empty level range: only the initial-λ term
        assert!(close(c.elitist_evaluation_bound(4, 4, 2.0).unwrap(), 6.0, 1e-12));
        let full = c.elitist_evaluation_bound(0, 10, 1.0).unwrap();
        assert!(close(full, 3.0 + 2.974_951_488_242_299 * 100.0, 1e-12));
        assert!(c.elitist_evaluation_bound(5, 4, 1.0).is_err());
        assert!(c.elitist_evaluation_bound(0, 11, 1.0).is_err());
    }

    #[test]
    fn expected_lambda_examples() {
        let c = ctx(10, 10, 1.0, 2.0, 0.1, vec![0.1; 10]);
        assert!(close(c.expected_lambda_bound(3, 8.0), 49.853_900_817_779_27, 1e-12));
        let limit = 10.0 * (2.0 + 2.0 / 2f64.ln());
        assert!(close(c.expected_lambda_bound(10_000, 1e9), limit, 1e-12));
        assert!(close(c.expected_lambda_limit(), limit, 1e-12));
    }

    #[test]
    fn generation_bound_examples() {
        let c = ctx(100, 100, 1.0, 2.0, 0.01, vec![0.01; 100]);
        assert!(close(c.generation_bound(), 415.287_712_379_549_5, 1e-12));
        // p_min = 1 leaves the penalty s/(s+1)·(1/s) = 1/(s+1)
        let c = ctx(100, 100, 1.0, 2.0, 1.0, vec![1.0; 100]);
        assert!(close(c.generation_bound(), 4.0 * 100.5, 1e-12));
    }

    proptest! {
        #[test]
        fn potential_sandwich_and_monotone(f in 0usize..1000, l1 in 1.0f64..1e6, l2 in 1.0f64..1e6,
                                           s in 0.1f64..20.0, big_f in 1.01f64..5.0,
                                           p_min in 1e-9f64..1.0) {
            let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            let g_lo = potential(f, lo, big_f, s, p_min);
            let g_hi = potential(f, hi, big_f, s, p_min);
            prop_assert!(g_lo <= g_hi + 1e-9);
            let worst = f as f64 - penalty(1.0, big_f, s, p_min);
            prop_assert!(g_lo >= worst - 1e-9);
            prop_assert!(g_hi <= f as f64);
            let saturated = big_f.powf(1.0 / s) / p_min;
            prop_assert_eq!(potential(f, saturated * 1.000001, big_f, s, p_min), f as f64);
        }

        #[test]
        fn elitist_bound_monotone(b1 in 0usize..20, b2 in 0usize..20, l1 in 1.0f64..100.0,
                                  l2 in 1.0f64..100.0, probs in prop::collection::vec(1e-4f64..1.0, 20)) {
            let c = ctx(20, 20, 1.0, 1.5, 1e-4, probs);
            let (blo, bhi) = (b1.min(b2), b1.max(b2));
            let (llo, lhi) = (l1.min(l2), l1.max(l2));
            prop_assert!(c.elitist_evaluation_bound(0, blo, llo).unwrap()
                <= c.elitist_evaluation_bound(0, bhi, llo).unwrap());
            prop_assert!(c.elitist_evaluation_bound(0, blo, llo).unwrap()
                <= c.elitist_evaluation_bound(0, blo, lhi).unwrap());
        }
    }
}
