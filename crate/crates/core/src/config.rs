//! Command-line options and their TOML config-file form.
//!
//! A config file is a flat TOML table whose keys are the long flag names
//! without the leading dashes, e.g. `budget-evals = 1000000` or `F = 1.5`.
//! Unknown keys are rejected. Values given on the command line win over the
//! file, and the file wins over built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::error::{Error, Result};

pub const DEFAULT_TRIALS: u64 = 20;
pub const DEFAULT_BUDGET_EVALS: u64 = 10_000_000;
pub const DEFAULT_C: f64 = 2.0;
pub const DEFAULT_POINTS_PER_LEVEL: usize = 2;
pub const DEFAULT_PROBE_SAMPLES: u64 = 10_000;
pub const DEFAULT_TARGET_SAMPLES: u64 = 10_000;

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Options {
    /// Benchmark: onemax, leadingones or onemaxblocks [required]
    #[arg(long, help_heading = "Problem")]
    pub function: Option<String>,

    /// Problem size [required except for sweep]
    #[arg(long, help_heading = "Problem")]
    pub n: Option<usize>,

    /// Block size of onemaxblocks; must divide n [required for onemaxblocks]
    #[arg(long, help_heading = "Problem")]
    pub k: Option<usize>,

    /// Mutation operator: sbm or heavytailed [default: sbm]
    #[arg(long, help_heading = "Algorithm")]
    pub mutation: Option<String>,

    /// sbm rate is chi/n [default: 1]
    #[arg(long, help_heading = "Algorithm")]
    pub chi: Option<f64>,

    /// Power-law exponent of heavytailed, > 1 [default: 2]
    #[arg(long, help_heading = "Algorithm")]
    pub beta: Option<f64>,

    /// Explicit sbm rate in (0, 1], overrides chi/n [default: none]
    #[arg(long, help_heading = "Algorithm")]
    pub rate: Option<f64>,

    /// heavytailed: one strength per generation instead of per offspring [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true", help_heading = "Algorithm")]
    pub shared_chi: Option<bool>,

    /// Update strength F > 1 [default: 1.5]
    #[arg(long = "F", help_heading = "Algorithm")]
    #[serde(rename = "F")]
    pub update_strength: Option<f64>,

    /// Success rate s > 0 [default: 1]
    #[arg(long = "s", help_heading = "Algorithm")]
    #[serde(rename = "s")]
    pub success_rate: Option<f64>,

    /// Plus selection instead of comma selection [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true", help_heading = "Algorithm")]
    pub elitist: Option<bool>,

    /// Initial offspring population size, >= 1 [default: 1]
    #[arg(long, help_heading = "Algorithm")]
    pub lambda_init: Option<f64>,

    /// Independent runs per batch [default: 20]
    #[arg(long, help_heading = "Experiment")]
    pub trials: Option<u64>,

    /// Evaluation budget per run, >= n [default: 10000000]
    #[arg(long, help_heading = "Experiment")]
    pub budget_evals: Option<u64>,

    /// Base seed [default: 0]
    #[arg(long, help_heading = "Experiment")]
    pub seed: Option<u64>,

    /// Worker threads [default: available parallelism]
    #[arg(long, help_heading = "Experiment")]
    pub workers: Option<usize>,

    /// Record every k-th generation per trial; 0 disables [default: 0]
    #[arg(long, help_heading = "Experiment")]
    pub trajectory_stride: Option<u64>,

    /// Output directory [default: none, print to stdout only]
    #[arg(long, help_heading = "Experiment")]
    pub out: Option<PathBuf>,

    /// Problem sizes of a sweep, comma separated [required for sweep]
    #[arg(long, value_delimiter = ',', help_heading = "Experiment")]
    pub n_values: Option<Vec<usize>>,

    /// onemaxblocks block sizes of a sweep, comma separated [default: --k]
    #[arg(long, value_delimiter = ',', help_heading = "Experiment")]
    pub k_values: Option<Vec<usize>>,

    /// Hardness exponent in (0, 1) [default: derived from function and operator]
    #[arg(long, help_heading = "Theory")]
    pub epsilon: Option<f64>,

    /// Worsening-probability base, > 1 [default: derived from operator]
    #[arg(long, help_heading = "Theory")]
    pub gamma: Option<f64>,

    /// Probe threshold constant: hard means p+ <= c*n^-epsilon [default: 2]
    #[arg(long, help_heading = "Probe and drift")]
    pub c: Option<f64>,

    /// Probe points per fitness level [default: 2]
    #[arg(long, help_heading = "Probe and drift")]
    pub points_per_level: Option<usize>,

    /// Probe offspring per point, >= 1000 [default: 10000]
    #[arg(long, help_heading = "Probe and drift")]
    pub samples: Option<u64>,

    /// Drift condition: only generations with lambda <= this count [default: n^(epsilon/2)]
    #[arg(long, help_heading = "Probe and drift")]
    pub max_lambda: Option<f64>,

    /// Losses: only generations with lambda >= this count [default: lambda_safe]
    #[arg(long, help_heading = "Probe and drift")]
    pub min_lambda: Option<f64>,

    /// Drift and losses: conditioned generations to observe [default: 10000]
    #[arg(long, help_heading = "Probe and drift")]
    pub target_samples: Option<u64>,
}

macro_rules! overlay_fields {
    ($hi:ident, $lo:ident, $($f:ident),* $(,)?) => {
        Options { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl Options {
    /// Field-wise `self` where set, otherwise `lower`.
    pub fn over(self, lower: Options) -> Options {
        overlay_fields!(
            self, lower, function, n, k, mutation, chi, beta, rate, shared_chi, update_strength,
            success_rate, elitist, lambda_init, trials, budget_evals, seed, workers,
            trajectory_stride, out, n_values, k_values, epsilon, gamma, c, points_per_level,
            samples, max_lambda, min_lambda, target_samples,
        )
    }
}

pub fn parse_config(text: &str) -> Result<Options> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
}

pub fn load_config(path: &Path) -> Result<Options> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_sets_nothing() {
        assert_eq!(parse_config("").unwrap(), Options::default());
    }

    #[test]
    fn keys_match_flag_names() {
        let o = parse_config(
            "function = \"leadingones\"\nn = 64\nF = 2.0\ns = 4\nbudget-evals = 1000\n\
             lambda-init = 3.5\nmutation = \"heavy_tailed\"\nbeta = 1.5\nn-values = [8, 16]\n",
        )
        .unwrap();
        assert_eq!(o.function.as_deref(), Some("leadingones"));
        assert_eq!(o.update_strength, Some(2.0));
        assert_eq!(o.success_rate, Some(4.0));
        assert_eq!(o.budget_evals, Some(1000));
        assert_eq!(o.lambda_init, Some(3.5));
        assert_eq!(o.mutation.as_deref(), Some("heavy_tailed"));
        assert_eq!(o.beta, Some(1.5));
        assert_eq!(o.n_values, Some(vec![8, 16]));
    }

    #[test]
    fn unknown_key_and_syntax_errors_name_the_line() {
        let e = parse_config("n = 4\nbudget_evals = 10\n").unwrap_err().to_string();
        assert!(e.contains("budget_evals") && e.contains("line 2"), "{e}");
        let e = parse_config("n = 4\n\ns = = 1\n").unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
    }

    #[test]
    fn command_line_wins() {
        let file = Options {
            success_rate: Some(4.0),
            trials: Some(7),
            ..Options::default()
        };
        let cli = Options {
            success_rate: Some(1.0),
            ..Options::default()
        };
        let merged = cli.over(file);
        assert_eq!(merged.success_rate, Some(1.0));
        assert_eq!(merged.trials, Some(7));
    }
}
