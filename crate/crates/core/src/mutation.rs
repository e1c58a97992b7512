//! Standard bit mutation and heavy-tailed mutation.
//!
//! Both operators flip every bit independently at some rate. The heavy-tailed
//! operator first draws a strength `chi` from a power law on `1..=n/2` and then
//! flips at rate `chi / n`.
//!
//! Flips are sampled as a binomial flip count followed by a uniformly random
//! set of distinct positions, which has exactly the same distribution as
//! independent per-bit coin flips but costs `O(flips)` instead of `O(n)`.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::bitstring::Bitstring;
use crate::error::{Error, Result};

pub const DEFAULT_CHI: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MutationKind {
    /// Standard bit mutation at rate `chi / n` (or an explicit rate).
    Standard,
    /// Power-law strength, redrawn according to [`StrengthSharing`].
    HeavyTailed,
}

impl MutationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MutationKind::Standard => "sbm",
            MutationKind::HeavyTailed => "heavytailed",
        }
    }
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MutationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "sbm" | "standard" => Ok(MutationKind::Standard),
            "heavytailed" => Ok(MutationKind::HeavyTailed),
            _ => Err(Error::invalid(format!(
                "unknown mutation kind {s:?} (expected sbm or heavytailed)"
            ))),
        }
    }
}

/// How often the heavy-tailed strength is redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StrengthSharing {
    /// Fresh strength for every offspring.
    #[default]
    PerOffspring,
    /// One strength shared by all offspring of a generation.
    PerGeneration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutationSpec {
    pub kind: MutationKind,
    /// Standard kind: the rate is `chi / n`.
    pub chi: f64,
    /// Power-law exponent of the heavy-tailed kind.
    pub beta: f64,
    /// Overrides `chi / n` for the standard kind.
    pub explicit_rate: Option<f64>,
    pub sharing: StrengthSharing,
}

impl Default for MutationSpec {
    fn default() -> Self {
        Self {
            kind: MutationKind::Standard,
            chi: DEFAULT_CHI,
            beta: DEFAULT_BETA,
            explicit_rate: None,
            sharing: StrengthSharing::PerOffspring,
        }
    }
}

impl MutationSpec {
    pub fn standard(chi: f64) -> Self {
        Self {
            chi,
            ..Self::default()
        }
    }

    pub fn with_rate(rate: f64) -> Self {
        Self {
            explicit_rate: Some(rate),
            ..Self::default()
        }
    }

    pub fn heavy_tailed(beta: f64) -> Self {
        Self {
            kind: MutationKind::HeavyTailed,
            beta,
            ..Self::default()
        }
    }

    /// Per-bit rate of the standard kind.
    pub fn standard_rate(&self, n: usize) -> f64 {
        self.explicit_rate.unwrap_or(self.chi / n as f64)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        match self.kind {
            MutationKind::Standard => {
                if let Some(r) = self.explicit_rate {
                    if !(r > 0.0 && r <= 1.0) {
                        return Err(Error::invalid(format!("rate must be in (0, 1], got {r}")));
                    }
                } else if !(self.chi > 0.0 && self.chi.is_finite()) {
                    return Err(Error::invalid(format!("chi must be positive, got {}", self.chi)));
                } else if self.chi > n as f64 {
                    return Err(Error::invalid(format!(
                        "chi/n must not exceed 1 (chi={}, n={n})",
                        self.chi
                    )));
                }
                Ok(())
            }
            MutationKind::HeavyTailed => {
                if self.explicit_rate.is_some() {
                    return Err(Error::invalid("an explicit rate only applies to sbm"));
                }
                PowerLaw::check(n, self.beta)
            }
        }
    }
}

/// Truncated discrete power law on `1..=floor(n/2)`: `P(c) ∝ c^-beta`.
#[derive(Debug, Clone)]
pub struct PowerLaw {
    probs: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl PowerLaw {
    pub fn new(n: usize, beta: f64) -> Result<Self> {
        Self::check(n, beta)?;
        let weights: Vec<f64> = (1..=n / 2).map(|c| (c as f64).powf(-beta)).collect();
        let total: f64 = weights.iter().sum();
        let probs = weights.iter().map(|w| w / total).collect();
        let index = WeightedIndex::new(&weights)
            .map_err(|e| Error::invalid(format!("power law table: {e}")))?;
        Ok(Self { probs, index })
    }

    fn check(n: usize, beta: f64) -> Result<()> {
        if n < 2 {
            return Err(Error::invalid(format!("heavy-tailed mutation needs n >= 2, got {n}")));
        }
        if !(beta > 1.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta must exceed 1, got {beta}")));
        }
        Ok(())
    }

    /// Largest strength, `floor(n/2)`.
    pub fn max_strength(&self) -> usize {
        self.probs.len()
    }

    /// `P(chi = c)`; zero outside the support.
    pub fn probability(&self, c: usize) -> f64 {
        if c == 0 {
            0.0
        } else {
            self.probs.get(c - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn probabilities(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, &p)| (i + 1, p))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng) + 1
    }
}

/// Flip-count sampler for one fixed rate.
#[derive(Debug, Clone)]
struct FlipSampler {
    n: usize,
    count: Binomial,
}

impl FlipSampler {
    fn new(n: usize, rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::invalid(format!("mutation rate must be in [0, 1], got {rate}")));
        }
        let count = Binomial::new(n as u64, rate)
            .map_err(|e| Error::invalid(format!("mutation rate {rate}: {e}")))?;
        Ok(Self { n, count })
    }

    /// Flips bits of `x` in place; returns the number of flipped bits.
    #[inline]
    fn apply<R: Rng + ?Sized>(&self, x: &mut Bitstring, rng: &mut R) -> usize {
        let flips = self.count.sample(rng) as usize;
        match flips {
            0 => {}
            1 => x.flip(rng.random_range(0..self.n)),
            f if f == self.n => x.complement(),
            f => {
                for i in index::sample(rng, self.n, f) {
                    x.flip(i);
                }
            }
        }
        flips
    }
}

/// A mutation operator instantiated for one problem size, with its sampling tables built.
#[derive(Debug, Clone)]
pub struct Mutator {
    mode: Mode,
    shared_strength: Option<usize>,
}

#[derive(Debug, Clone)]
enum Mode {
    Fixed(FlipSampler),
    HeavyTailed {
        law: PowerLaw,
        // samplers[c - 1] flips at rate c / n
        samplers: Vec<FlipSampler>,
        sharing: StrengthSharing,
    },
}

impl Mutator {
    pub fn new(spec: &MutationSpec, n: usize) -> Result<Self> {
        spec.validate(n)?;
        let mode = match spec.kind {
            MutationKind::Standard => Mode::Fixed(FlipSampler::new(n, spec.standard_rate(n))?),
            MutationKind::HeavyTailed => {
                let law = PowerLaw::new(n, spec.beta)?;
                let samplers = (1..=law.max_strength())
                    .map(|c| FlipSampler::new(n, c as f64 / n as f64))
                    .collect::<Result<_>>()?;
                Mode::HeavyTailed {
                    law,
                    samplers,
                    sharing: spec.sharing,
                }
            }
        };
        Ok(Self {
            mode,
            shared_strength: None,
        })
    }

    /// Called once before the offspring of a generation are created.
    pub fn begin_generation<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if let Mode::HeavyTailed {
            law,
            sharing: StrengthSharing::PerGeneration,
            ..
        } = &self.mode
        {
            self.shared_strength = Some(law.sample(rng));
        }
    }

    /// Writes a mutant of `parent` into `child`; returns the number of flipped bits.
    #[inline]
    pub fn mutate_into<R: Rng + ?Sized>(
        &self,
        parent: &Bitstring,
        child: &mut Bitstring,
        rng: &mut R,
    ) -> usize {
        child.copy_from(parent);
        match &self.mode {
            Mode::Fixed(s) => s.apply(child, rng),
            Mode::HeavyTailed { law, samplers, sharing } => {
                let chi = match (sharing, self.shared_strength) {
                    (StrengthSharing::PerGeneration, Some(c)) => c,
                    _ => law.sample(rng),
                };
                samplers[chi - 1].apply(child, rng)
            }
        }
    }
}

/// Flips each bit of `x` independently with probability `rate`.
pub fn standard_bit_mutation<R: Rng + ?Sized>(
    x: &Bitstring,
    rate: f64,
    rng: &mut R,
) -> Result<Bitstring> {
    let sampler = FlipSampler::new(x.len(), rate)?;
    let mut y = x.clone();
    sampler.apply(&mut y, rng);
    Ok(y)
}

/// Draws a heavy-tailed strength from the power law on `1..=floor(n/2)`.
pub fn heavy_tailed_sample_strength<R: Rng + ?Sized>(
    n: usize,
    beta: f64,
    rng: &mut R,
) -> Result<usize> {
    Ok(PowerLaw::new(n, beta)?.sample(rng))
}

/// One offspring of `x` under `spec`.
pub fn mutate<R: Rng + ?Sized>(x: &Bitstring, spec: &MutationSpec, rng: &mut R) -> Result<Bitstring> {
    let mut m = Mutator::new(spec, x.len())?;
    m.begin_generation(rng);
    let mut y = x.clone();
    m.mutate_into(x, &mut y, rng);
    Ok(y)
}
