//! The self-adjusting (1,{F^(1/s)·λ, λ/F}) EA and its elitist (1+λ) counterpart.
//!
//! One parent produces `round(λ)` mutants per generation; the best mutant
//! (uniform among ties) is selected. A generation is a *success* when the best
//! mutant is strictly better than the parent. Success divides λ by `F`
//! (never below 1), failure multiplies it by `F^(1/s)`.
//!
//! With comma selection the parent is replaced unconditionally, including by a
//! worse or equally good mutant. With plus selection the parent is replaced
//! only by a strictly better mutant, so ties keep the parent.

use std::time::Instant;

use log::warn;
use rand::Rng;

use crate::bitstring::Bitstring;
use crate::error::{Error, Result};
use crate::fitness::Fitness;
use crate::mutation::{MutationSpec, Mutator};
use crate::rng::{RngStream, Substream};

pub const DEFAULT_UPDATE_STRENGTH: f64 = 1.5;
pub const DEFAULT_SUCCESS_RATE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmParams {
    /// `F > 1`.
    pub update_strength: f64,
    /// `s > 0`; one success every `s + 1` generations keeps λ steady.
    pub success_rate: f64,
    pub mutation: MutationSpec,
    /// Plus selection instead of comma selection.
    pub elitist: bool,
    pub lambda_init: f64,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        Self {
            update_strength: DEFAULT_UPDATE_STRENGTH,
            success_rate: DEFAULT_SUCCESS_RATE,
            mutation: MutationSpec::default(),
            elitist: false,
            lambda_init: 1.0,
        }
    }
}

impl AlgorithmParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.update_strength > 1.0 && self.update_strength.is_finite()) {
            return Err(Error::invalid(format!(
                "update strength F must exceed 1, got {}",
                self.update_strength
            )));
        }
        if !(self.success_rate > 0.0 && self.success_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "success rate s must be positive, got {}",
                self.success_rate
            )));
        }
        if !(self.lambda_init >= 1.0 && self.lambda_init.is_finite()) {
            return Err(Error::invalid(format!(
                "initial lambda must be at least 1, got {}",
                self.lambda_init
            )));
        }
        self.mutation.validate(n)
    }

    pub fn lambda_update(&self) -> LambdaUpdate {
        LambdaUpdate::new(self.update_strength, self.success_rate)
    }
}

/// The two multiplicative λ moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaUpdate {
    update_strength: f64,
    growth: f64,
}

impl LambdaUpdate {
    pub fn new(update_strength: f64, success_rate: f64) -> Self {
        Self {
            update_strength,
            growth: update_strength.powf(1.0 / success_rate),
        }
    }

    /// `F^(1/s)`.
    pub fn growth_factor(&self) -> f64 {
        self.growth
    }

    #[inline]
    pub fn apply(&self, lambda: f64, success: bool) -> f64 {
        if success {
            (lambda / self.update_strength).max(1.0)
        } else {
            lambda * self.growth
        }
    }
}

/// Nearest integer to `lambda`, halves rounded up; never below 1.
#[inline]
pub fn round_lambda(lambda: f64) -> u64 {
    // f64::round rounds halves away from zero, i.e. up for positive values.
    (lambda.round() as u64).max(1)
}

/// Markov state of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    pub x: Bitstring,
    /// Real-valued offspring population size; rounded only when used.
    pub lambda: f64,
    pub generation: u64,
    pub evaluations: u64,
    /// Cached `f(x)`.
    pub fitness: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationOutcome {
    /// Best offspring strictly better than the parent.
    pub success: bool,
    pub offspring_evaluated: u64,
    pub best_offspring_fitness: usize,
    /// New parent fitness minus old parent fitness.
    pub fitness_delta: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub generation: u64,
    pub fitness: usize,
    pub lambda: f64,
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub trial: u64,
    pub seed: u64,
    /// Optimum reached within the budget.
    pub success: bool,
    pub generations: u64,
    pub evaluations: u64,
    pub final_fitness: usize,
    pub max_lambda: f64,
    /// Wall-clock time; not covered by the reproducibility guarantee.
    pub time_ms: u64,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// The algorithm bound to one fitness function, with its mutation tables and scratch buffers.
pub struct SelfAdjustingEa<'a, F: Fitness + ?Sized> {
    fitness: &'a F,
    params: AlgorithmParams,
    update: LambdaUpdate,
    mutator: Mutator,
    child: Bitstring,
    best: Bitstring,
}

impl<'a, F: Fitness + ?Sized> SelfAdjustingEa<'a, F> {
    pub fn new(fitness: &'a F, params: AlgorithmParams) -> Result<Self> {
        let n = fitness.n();
        params.validate(n)?;
        Ok(Self {
            fitness,
            update: params.lambda_update(),
            mutator: Mutator::new(&params.mutation, n)?,
            params,
            child: Bitstring::zeros(n),
            best: Bitstring::zeros(n),
        })
    }

    pub fn params(&self) -> &AlgorithmParams {
        &self.params
    }

    /// Uniform random start with λ = `lambda_init`.
    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> RunState {
        let x = Bitstring::random(self.fitness.n(), rng);
        self.state_at(x)
    }

    /// Start from a given point with λ = `lambda_init`.
    pub fn state_at(&self, x: Bitstring) -> RunState {
        let fitness = self.fitness.evaluate(&x);
        RunState {
            x,
            lambda: self.params.lambda_init,
            generation: 0,
            evaluations: 0,
            fitness,
        }
    }

    /// Runs one generation in place.
    pub fn step<R: Rng + ?Sized>(&mut self, state: &mut RunState, rng: &mut R) -> GenerationOutcome {
        debug_assert_eq!(state.fitness, self.fitness.evaluate(&state.x));
        let offspring = round_lambda(state.lambda);
        self.mutator.begin_generation(rng);

        let mut best_fitness = 0usize;
        let mut ties = 0u64;
        for _ in 0..offspring {
            let flips = self.mutator.mutate_into(&state.x, &mut self.child, rng);
            let fit = if flips == 0 {
                state.fitness
            } else {
                self.fitness.evaluate(&self.child)
            };
            // Reservoir sampling keeps a uniform choice among the maximal offspring.
            if ties == 0 || fit > best_fitness {
                best_fitness = fit;
                ties = 1;
                std::mem::swap(&mut self.best, &mut self.child);
            } else if fit == best_fitness {
                ties += 1;
                if rng.random_range(0..ties) == 0 {
                    std::mem::swap(&mut self.best, &mut self.child);
                }
            }
        }

        let old_fitness = state.fitness;
        let success = best_fitness > old_fitness;
        if success || !self.params.elitist {
            std::mem::swap(&mut state.x, &mut self.best);
            state.fitness = best_fitness;
        }
        state.lambda = self.update.apply(state.lambda, success);
        state.generation += 1;
        state.evaluations += offspring;

        GenerationOutcome {
            success,
            offspring_evaluated: offspring,
            best_offspring_fitness: best_fitness,
            fitness_delta: state.fitness as i64 - old_fitness as i64,
        }
    }

    /// Runs from a uniform random start until the optimum or until `budget_evals`
    /// evaluations have been spent. The last generation always completes, so the
    /// budget can be overshot by at most one batch of offspring.
    pub fn run(&mut self, budget_evals: u64, seed: u64, trajectory_stride: u64) -> Result<RunRecord> {
        if budget_evals < 1 {
            return Err(Error::invalid("evaluation budget must be at least 1"));
        }
        let started = Instant::now();
        let mut init_rng = RngStream::substream(seed, Substream::Init);
        let mut rng = RngStream::substream(seed, Substream::Variation);
        let mut state = self.initial_state(&mut init_rng);
        let d = self.fitness.max_value();

        let mut trajectory = Vec::new();
        let mut max_lambda = state.lambda;
        let mut warned = false;
        let record = |t: &mut Vec<TrajectoryPoint>, s: &RunState| {
            t.push(TrajectoryPoint {
                generation: s.generation,
                fitness: s.fitness,
                lambda: s.lambda,
            })
        };
        if trajectory_stride > 0 {
            record(&mut trajectory, &state);
        }

        while state.fitness < d && state.evaluations < budget_evals {
            if !warned && round_lambda(state.lambda) > budget_evals - state.evaluations {
                warn!(
                    "generation {}: offspring population {} exceeds remaining budget {}",
                    state.generation,
                    round_lambda(state.lambda),
                    budget_evals - state.evaluations
                );
                warned = true;
            }
            self.step(&mut state, &mut rng);
            max_lambda = max_lambda.max(state.lambda);
            if trajectory_stride > 0 && state.generation % trajectory_stride == 0 {
                record(&mut trajectory, &state);
            }
        }
        if trajectory_stride > 0 && state.generation % trajectory_stride != 0 {
            record(&mut trajectory, &state);
        }

        Ok(RunRecord {
            trial: 0,
            seed,
            success: state.fitness == d,
            generations: state.generation,
            evaluations: state.evaluations,
            final_fitness: state.fitness,
            max_lambda,
            time_ms: started.elapsed().as_millis() as u64,
            trajectory,
        })
    }
}

pub fn initial_state<F: Fitness + ?Sized, R: Rng + ?Sized>(
    f: &F,
    params: &AlgorithmParams,
    rng: &mut R,
) -> Result<RunState> {
    Ok(SelfAdjustingEa::new(f, *params)?.initial_state(rng))
}

/// One generation from `state`. Builds the mutation tables on every call; use
/// [`SelfAdjustingEa`] for repeated steps.
pub fn generation_step<F: Fitness + ?Sized, R: Rng + ?Sized>(
    state: &RunState,
    params: &AlgorithmParams,
    f: &F,
    rng: &mut R,
) -> Result<(RunState, GenerationOutcome)> {
    let mut ea = SelfAdjustingEa::new(f, *params)?;
    let mut next = state.clone();
    let outcome = ea.step(&mut next, rng);
    Ok((next, outcome))
}

pub fn run_to_optimum<F: Fitness + ?Sized>(
    f: &F,
    params: &AlgorithmParams,
    budget_evals: u64,
    seed: u64,
    trajectory_stride: u64,
) -> Result<RunRecord> {
    SelfAdjustingEa::new(f, *params)?.run(budget_evals, seed, trajectory_stride)
}
