//! Self-adjusting (1,λ) evolutionary algorithms on pseudo-Boolean benchmarks,
//! with the matching runtime bounds, a hardness probe and an experiment harness.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bitstring;
pub mod cli;
pub mod config;
pub mod ea;
pub mod error;
pub mod fitness;
pub mod harness;
pub mod mutation;
pub mod probe;
pub mod rng;
pub mod theory;

pub use bitstring::Bitstring;
pub use ea::{AlgorithmParams, RunRecord, RunState, SelfAdjustingEa};
pub use error::{Error, Result};
pub use fitness::{Benchmark, BenchmarkKind, Fitness};
pub use harness::{run_batch, BatchSummary, ExperimentConfig};
pub use mutation::{MutationKind, MutationSpec};
pub use probe::{DriftEstimate, LevelEstimate, Verdict};
pub use theory::TheoryContext;
