//! C ABI over `saea-core`.
//!
//! Every function returns a [`SaeaStatus`]; on failure the message is kept per
//! thread and read with [`saea_last_error_message`]. Runs live behind the
//! opaque [`SaeaRun`] handle, which the caller releases with [`saea_run_free`].
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use saea::ea::AlgorithmParams;
use saea::fitness::{Benchmark, BenchmarkKind, Fitness};
use saea::mutation::MutationSpec;
use saea::rng::{RngStream, Substream};
use saea::{Bitstring, Error, RunState, SelfAdjustingEa, TheoryContext};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaeaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaeaFunction {
    OneMax = 0,
    LeadingOnes = 1,
    OneMaxBlocks = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaeaMutation {
    Standard = 0,
    HeavyTailed = 1,
}

/// Problem and algorithm settings. Fill with [`saea_params_default`] first.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SaeaParams {
    pub function: SaeaFunction,
    pub n: usize,
    /// Block size; read only for `SAEA_FUNCTION_ONE_MAX_BLOCKS`.
    pub k: usize,
    pub mutation: SaeaMutation,
    pub chi: f64,
    pub beta: f64,
    pub update_strength: f64,
    pub success_rate: f64,
    pub elitist: bool,
    pub lambda_init: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SaeaState {
    pub generation: u64,
    pub evaluations: u64,
    pub fitness: usize,
    /// Fitness of the optimum.
    pub max_fitness: usize,
    pub lambda: f64,
    pub optimal: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SaeaBounds {
    pub gamma: f64,
    pub epsilon: f64,
    pub lambda_safe: f64,
    pub lambda_threshold: f64,
    pub generation_bound: f64,
    pub fitness_level_sum: f64,
    pub elitist_evaluation_bound: f64,
    pub expected_lambda_limit: f64,
}

/// Opaque run handle.
pub struct SaeaRun {
    f: Benchmark,
    params: AlgorithmParams,
    state: RunState,
    rng: RngStream,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SaeaStatus, msg: impl Into<String>) -> SaeaStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> SaeaStatus {
    let status = match e {
        Error::Io { .. } | Error::Csv(_) => SaeaStatus::Io,
        _ => SaeaStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

/// Runs `body`, turning a panic into `SAEA_STATUS_PANIC`.
fn guard(body: impl FnOnce() -> SaeaStatus) -> SaeaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SaeaStatus::Panic, format!("panic: {msg}"))
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(SaeaStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

macro_rules! tryc {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

fn benchmark(p: &SaeaParams) -> Result<Benchmark, Error> {
    let (kind, k) = match p.function {
        SaeaFunction::OneMax => (BenchmarkKind::OneMax, None),
        SaeaFunction::LeadingOnes => (BenchmarkKind::LeadingOnes, None),
        SaeaFunction::OneMaxBlocks => (BenchmarkKind::OneMaxBlocks, Some(p.k)),
    };
    Benchmark::new(kind, p.n, k)
}

fn algorithm(p: &SaeaParams) -> Result<AlgorithmParams, Error> {
    let mutation = match p.mutation {
        SaeaMutation::Standard => MutationSpec::standard(p.chi),
        SaeaMutation::HeavyTailed => MutationSpec::heavy_tailed(p.beta),
    };
    let a = AlgorithmParams {
        update_strength: p.update_strength,
        success_rate: p.success_rate,
        mutation,
        elitist: p.elitist,
        lambda_init: p.lambda_init,
    };
    a.validate(p.n)?;
    Ok(a)
}

impl SaeaRun {
    fn snapshot(&self) -> SaeaState {
        SaeaState {
            generation: self.state.generation,
            evaluations: self.state.evaluations,
            fitness: self.state.fitness,
            max_fitness: self.f.max_value(),
            lambda: self.state.lambda,
            optimal: self.state.fitness == self.f.max_value(),
        }
    }
}

/// Writes the defaults: LeadingOnes, n = 100, unit-rate standard bit mutation, F = 1.5, s = 1.
///
/// # Safety
/// `out` must be null or point to writable memory for one `SaeaParams`.
#[no_mangle]
pub unsafe extern "C" fn saea_params_default(out: *mut SaeaParams) -> SaeaStatus {
    guard(|| {
        non_null!(out);
        let a = AlgorithmParams::default();
        out.write(SaeaParams {
            function: SaeaFunction::LeadingOnes,
            n: 100,
            k: 1,
            mutation: SaeaMutation::Standard,
            chi: a.mutation.chi,
            beta: a.mutation.beta,
            update_strength: a.update_strength,
            success_rate: a.success_rate,
            elitist: a.elitist,
            lambda_init: a.lambda_init,
        });
        SaeaStatus::Ok
    })
}

/// Creates a run at a uniform random start. Same `params` and `seed` give the same run.
///
/// # Safety
/// `params` must point to a valid `SaeaParams`; `out` to writable storage for a pointer.
#[no_mangle]
pub unsafe extern "C" fn saea_run_new(params: *const SaeaParams, seed: u64, out: *mut *mut SaeaRun) -> SaeaStatus {
    guard(|| {
        non_null!(params, out);
        let p = &*params;
        let f = tryc!(benchmark(p));
        let a = tryc!(algorithm(p));
        let ea = tryc!(SelfAdjustingEa::new(&f, a));
        let state = ea.initial_state(&mut RngStream::substream(seed, Substream::Init));
        drop(ea);
        let run = SaeaRun {
            f,
            params: a,
            state,
            rng: RngStream::substream(seed, Substream::Variation),
        };
        out.write(Box::into_raw(Box::new(run)));
        SaeaStatus::Ok
    })
}

/// Runs one generation; `success` (optional) receives whether the best offspring beat the parent.
///
/// # Safety
/// `run` must come from `saea_run_new` and not be freed; `success` may be null.
#[no_mangle]
pub unsafe extern "C" fn saea_run_step(run: *mut SaeaRun, success: *mut bool) -> SaeaStatus {
    guard(|| {
        non_null!(run);
        let r = &mut *run;
        let mut ea = tryc!(SelfAdjustingEa::new(&r.f, r.params));
        let o = ea.step(&mut r.state, &mut r.rng);
        if !success.is_null() {
            success.write(o.success);
        }
        SaeaStatus::Ok
    })
}

/// Steps until the optimum or until `budget_evals` total evaluations; `state` (optional) gets the final state.
///
/// # Safety
/// `run` must come from `saea_run_new` and not be freed; `state` may be null.
#[no_mangle]
pub unsafe extern "C" fn saea_run_to_optimum(run: *mut SaeaRun, budget_evals: u64, state: *mut SaeaState) -> SaeaStatus {
    guard(|| {
        non_null!(run);
        let r = &mut *run;
        let mut ea = tryc!(SelfAdjustingEa::new(&r.f, r.params));
        let d = r.f.max_value();
        while r.state.fitness < d && r.state.evaluations < budget_evals {
            ea.step(&mut r.state, &mut r.rng);
        }
        drop(ea);
        if !state.is_null() {
            state.write(r.snapshot());
        }
        SaeaStatus::Ok
    })
}

/// # Safety
/// `run` must come from `saea_run_new` and not be freed; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn saea_run_state(run: *const SaeaRun, out: *mut SaeaState) -> SaeaStatus {
    guard(|| {
        non_null!(run, out);
        out.write((*run).snapshot());
        SaeaStatus::Ok
    })
}

/// Copies the current search point as `len` bytes of 0 or 1.
///
/// # Safety
/// `run` must be live; `bits` must be writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn saea_run_point(run: *const SaeaRun, bits: *mut u8, len: usize) -> SaeaStatus {
    guard(|| {
        non_null!(run, bits);
        let x = &(*run).state.x;
        if len != x.len() {
            return fail(SaeaStatus::InvalidArgument, format!("len must equal n={}, got {len}", x.len()));
        }
        for (i, b) in x.iter().enumerate() {
            bits.add(i).write(b as u8);
        }
        SaeaStatus::Ok
    })
}

/// Releases a run. Null is ignored.
///
/// # Safety
/// `run` must be null or come from `saea_run_new` and not be freed already.
#[no_mangle]
pub unsafe extern "C" fn saea_run_free(run: *mut SaeaRun) {
    if !run.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(run))));
    }
}

/// Evaluates the benchmark of `params` on `len` bytes, each 0 or 1; `len` must equal `params->n`.
///
/// # Safety
/// `params` must be valid, `bits` readable for `len` bytes, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn saea_evaluate(
    params: *const SaeaParams,
    bits: *const u8,
    len: usize,
    out: *mut usize,
) -> SaeaStatus {
    guard(|| {
        non_null!(params, bits, out);
        let f = tryc!(benchmark(&*params));
        if len != f.n() {
            return fail(SaeaStatus::InvalidArgument, format!("len must equal n={}, got {len}", f.n()));
        }
        let raw = std::slice::from_raw_parts(bits, len);
        if let Some(b) = raw.iter().find(|&&b| b > 1) {
            return fail(SaeaStatus::InvalidArgument, format!("bits must be 0 or 1, got {b}"));
        }
        let bools: Vec<bool> = raw.iter().map(|&b| b == 1).collect();
        out.write(f.evaluate(&Bitstring::from_bools(&bools)));
        SaeaStatus::Ok
    })
}

/// Runtime thresholds and bounds for `params`, with the derived epsilon and gamma.
///
/// # Safety
/// `params` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn saea_theory_bounds(params: *const SaeaParams, out: *mut SaeaBounds) -> SaeaStatus {
    guard(|| {
        non_null!(params, out);
        let p = &*params;
        let f = tryc!(benchmark(p));
        let a = tryc!(algorithm(p));
        let ctx = tryc!(TheoryContext::for_benchmark(&f, &a));
        out.write(SaeaBounds {
            gamma: ctx.gamma,
            epsilon: ctx.epsilon,
            lambda_safe: tryc!(ctx.lambda_safe()),
            lambda_threshold: ctx.lambda_threshold(),
            generation_bound: ctx.generation_bound(),
            fitness_level_sum: tryc!(ctx.fitness_level_sum()),
            elitist_evaluation_bound: tryc!(ctx.elitist_evaluation_bound(0, ctx.d, a.lambda_init)),
            expected_lambda_limit: ctx.expected_lambda_limit(),
        });
        SaeaStatus::Ok
    })
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn saea_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, NUL-terminated and static.
#[no_mangle]
pub extern "C" fn saea_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
