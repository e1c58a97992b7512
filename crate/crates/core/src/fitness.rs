//! Pseudo-Boolean benchmark functions.
//!
//! All fitness values are integers in `0..=d`; exactly the points with value
//! `d` are optimal.

use std::fmt;
use std::str::FromStr;

use crate::bitstring::Bitstring;
use crate::error::{Error, Result};

/// Largest `n` accepted by exhaustive enumeration.
pub const EXHAUSTIVE_MAX_N: usize = 20;

pub trait Fitness: Sync {
    /// Problem size.
    fn n(&self) -> usize;

    /// Number of non-optimal fitness values; the optimum has fitness `d`.
    fn max_value(&self) -> usize;

    fn evaluate(&self, x: &Bitstring) -> usize;

    fn is_optimal(&self, x: &Bitstring) -> bool {
        self.evaluate(x) == self.max_value()
    }

    fn name(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    OneMax,
    LeadingOnes,
    OneMaxBlocks,
}

impl BenchmarkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkKind::OneMax => "onemax",
            BenchmarkKind::LeadingOnes => "leadingones",
            BenchmarkKind::OneMaxBlocks => "onemaxblocks",
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "onemax" => Ok(BenchmarkKind::OneMax),
            "leadingones" => Ok(BenchmarkKind::LeadingOnes),
            "onemaxblocks" => Ok(BenchmarkKind::OneMaxBlocks),
            other => Err(Error::invalid(format!(
                "unknown function {other:?} (expected onemax, leadingones or onemaxblocks)"
            ))),
        }
    }
}

/// One of the three benchmark functions at a fixed problem size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    OneMax { n: usize },
    LeadingOnes { n: usize },
    OneMaxBlocks { n: usize, k: usize },
}

impl Benchmark {
    pub fn onemax(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Benchmark::OneMax { n })
    }

    pub fn leadingones(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Benchmark::LeadingOnes { n })
    }

    pub fn onemaxblocks(n: usize, k: usize) -> Result<Self> {
        check_n(n)?;
        if k < 1 || k > n {
            return Err(Error::invalid(format!("k must be in 1..=n, got k={k}, n={n}")));
        }
        if n % k != 0 {
            return Err(Error::invalid(format!("k must divide n (n={n}, k={k})")));
        }
        Ok(Benchmark::OneMaxBlocks { n, k })
    }

    /// Selects a benchmark by name. `k` is required for, and only allowed with, `onemaxblocks`.
    pub fn from_name(name: &str, n: usize, k: Option<usize>) -> Result<Self> {
        Self::new(name.parse()?, n, k)
    }

    pub fn new(kind: BenchmarkKind, n: usize, k: Option<usize>) -> Result<Self> {
        match (kind, k) {
            (BenchmarkKind::OneMaxBlocks, Some(k)) => Self::onemaxblocks(n, k),
            (BenchmarkKind::OneMaxBlocks, None) => {
                Err(Error::invalid("onemaxblocks requires a block size k"))
            }
            (_, Some(_)) => Err(Error::invalid(format!(
                "k is only valid with onemaxblocks, not {kind}"
            ))),
            (BenchmarkKind::OneMax, None) => Self::onemax(n),
            (BenchmarkKind::LeadingOnes, None) => Self::leadingones(n),
        }
    }

    pub fn kind(&self) -> BenchmarkKind {
        match self {
            Benchmark::OneMax { .. } => BenchmarkKind::OneMax,
            Benchmark::LeadingOnes { .. } => BenchmarkKind::LeadingOnes,
            Benchmark::OneMaxBlocks { .. } => BenchmarkKind::OneMaxBlocks,
        }
    }

    /// Block size; OneMax behaves like a single block of size `n`, LeadingOnes like blocks of size 1.
    pub fn block_size(&self) -> usize {
        match *self {
            Benchmark::OneMax { n } => n,
            Benchmark::LeadingOnes { .. } => 1,
            Benchmark::OneMaxBlocks { k, .. } => k,
        }
    }

    pub fn k(&self) -> Option<usize> {
        match *self {
            Benchmark::OneMaxBlocks { k, .. } => Some(k),
            _ => None,
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::invalid("n must be positive"))
    } else {
        Ok(())
    }
}

impl Fitness for Benchmark {
    fn n(&self) -> usize {
        match *self {
            Benchmark::OneMax { n } | Benchmark::LeadingOnes { n } => n,
            Benchmark::OneMaxBlocks { n, .. } => n,
        }
    }

    fn max_value(&self) -> usize {
        self.n()
    }

    fn evaluate(&self, x: &Bitstring) -> usize {
        debug_assert_eq!(x.len(), self.n());
        match *self {
            Benchmark::OneMax { .. } => onemax(x),
            Benchmark::LeadingOnes { .. } => leadingones(x),
            Benchmark::OneMaxBlocks { k, .. } => onemaxblocks_unchecked(x, k),
        }
    }

    fn name(&self) -> String {
        match *self {
            Benchmark::OneMaxBlocks { k, .. } => format!("onemaxblocks(k={k})"),
            _ => self.kind().to_string(),
        }
    }
}

pub fn onemax(x: &Bitstring) -> usize {
    x.count_ones()
}

pub fn leadingones(x: &Bitstring) -> usize {
    x.leading_ones()
}

/// Ones in the longest prefix of complete blocks plus ones in the first incomplete block.
pub fn onemaxblocks(x: &Bitstring, k: usize) -> Result<usize> {
    let n = x.len();
    if k < 1 || k > n || n % k != 0 {
        return Err(Error::invalid(format!("k must divide n (n={n}, k={k})")));
    }
    Ok(onemaxblocks_unchecked(x, k))
}

fn onemaxblocks_unchecked(x: &Bitstring, k: usize) -> usize {
    // Blocks before the one holding the first 0-bit are complete.
    let prefix = x.leading_ones();
    if prefix == x.len() {
        return prefix;
    }
    let start = prefix / k * k;
    start + x.count_ones_range(start, start + k)
}

/// Whether every non-optimal point has a strictly better Hamming neighbour.
pub fn is_unimodal_exhaustive<F: Fitness + ?Sized>(f: &F) -> Result<bool> {
    let n = f.n();
    if n > EXHAUSTIVE_MAX_N {
        return Err(Error::invalid(format!(
            "exhaustive unimodality check limited to n <= {EXHAUSTIVE_MAX_N}, got {n}"
        )));
    }
    let d = f.max_value();
    let values: Vec<usize> = (0..1u64 << n)
        .map(|i| f.evaluate(&Bitstring::from_index(i, n)))
        .collect();
    Ok(values.iter().enumerate().all(|(i, &v)| {
        v == d || (0..n).any(|b| values[i ^ (1 << b)] > v)
    }))
}
