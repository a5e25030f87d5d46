//! Experiment configuration, read from TOML.
//!
//! ```toml
//! suite = "two-weight"
//! depth = 6
//! instances = 10
//! seed = 42
//! t = [-1.0, 1.0]
//! output = "two-weight.csv"
//!
//! [weights]
//! cascade = 0.6
//!
//! [tolerances]
//! comparability = 10.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dyadica::MAX_DEPTH;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    TwoWeight,
    OneWeight,
    Unweighted,
    Packing,
    Sawyer,
    Khintchine,
    Perf,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::TwoWeight,
        Suite::OneWeight,
        Suite::Unweighted,
        Suite::Packing,
        Suite::Sawyer,
        Suite::Khintchine,
        Suite::Perf,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::TwoWeight => "two-weight",
            Suite::OneWeight => "one-weight",
            Suite::Unweighted => "unweighted",
            Suite::Packing => "packing",
            Suite::Sawyer => "sawyer",
            Suite::Khintchine => "khintchine",
            Suite::Perf => "perf",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.as_str() == s)
            .ok_or_else(|| CliError::Config(format!("unknown suite `{s}`")))
    }
}

/// Parameters of the weight families an instance draws from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightFamily {
    /// Exponents α of the power weights `x^α` (packing suite).
    pub powers: Vec<f64>,
    /// Cascade volatility δ in `[0, 1)`; 0 gives constant weights.
    pub cascade: f64,
}

impl Default for WeightFamily {
    fn default() -> Self {
        Self {
            powers: vec![-0.6, -0.4, 0.5, 2.0],
            cascade: 0.6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Rounding allowance, relative, for identities that hold exactly.
    pub rounding: f64,
    /// Closed-form Khintchine expectation against enumeration.
    pub khintchine: f64,
    /// Haar-testing identity, relative.
    pub haar_testing: f64,
    /// Relative slack for testing constants below the squared norm.
    pub testing_slack: f64,
    /// Largest accepted empirical comparability constant.
    pub comparability: f64,
    /// Largest accepted max/min ratio of a constant across depths.
    pub drift: f64,
    /// Wall-time budget of the perf suite, in milliseconds.
    pub perf_budget_ms: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rounding: 4.0 * f64::EPSILON,
            khintchine: 1e-10,
            haar_testing: 1e-10,
            testing_slack: 1e-8,
            comparability: 10.0,
            drift: 2.0,
            perf_budget_ms: 1000.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub depth: u32,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_t")]
    pub t: Vec<f64>,
    pub output: PathBuf,
    /// Write `<output>.json` with witnesses and flags.
    #[serde(default)]
    pub json: bool,
    /// Add a wall-time column; rows are then no longer byte-reproducible.
    #[serde(default)]
    pub timing: bool,
    /// Random restarts of the sign search.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Sign samples of the Monte-Carlo Khintchine estimate.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Shallowest depth of the packing sweep, which runs up to `depth`.
    #[serde(default = "default_min_depth")]
    pub min_depth: u32,
    #[serde(default)]
    pub weights: WeightFamily,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_instances() -> usize {
    1
}

fn default_t() -> Vec<f64> {
    vec![1.0]
}

fn default_restarts() -> usize {
    16
}

fn default_samples() -> usize {
    1000
}

fn default_min_depth() -> u32 {
    6
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Relative paths in the file are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        if config.output.is_relative() {
            if let Some(dir) = path.parent() {
                config.output = dir.join(&config.output);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(1..=MAX_DEPTH).contains(&self.depth) {
            return bad(format!("depth {} outside 1..={MAX_DEPTH}", self.depth));
        }
        if self.instances == 0 {
            return bad("instances must be at least 1".into());
        }
        if self.restarts == 0 || self.samples == 0 {
            return bad("restarts and samples must be at least 1".into());
        }
        if self.t.is_empty() || self.t.iter().any(|t| !t.is_finite()) {
            return bad("t must be a non-empty list of finite numbers".into());
        }
        if !(0.0..1.0).contains(&self.weights.cascade) {
            return bad(format!("cascade volatility {} outside [0, 1)", self.weights.cascade));
        }
        if self.weights.powers.iter().any(|a| !(a.is_finite() && *a > -1.0)) {
            return bad("power exponents must be finite and greater than -1".into());
        }
        match self.suite {
            Suite::OneWeight if self.t.iter().any(|&t| t > 0.0 && t < 1.0) => {
                bad("the one-weight suite needs t ≤ 0 or t ≥ 1".into())
            }
            Suite::Packing if self.weights.powers.is_empty() => bad("packing needs at least one power".into()),
            Suite::Packing if !(1..=self.depth).contains(&self.min_depth) => {
                bad(format!("min_depth {} outside 1..={}", self.min_depth, self.depth))
            }
            _ => Ok(()),
        }
    }

    pub fn json_path(&self) -> PathBuf {
        let mut name = self.output.clone().into_os_string();
        name.push(".json");
        PathBuf::from(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "suite = \"khintchine\"\ndepth = 3\noutput = \"k.csv\"\n";

    #[test]
    fn defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.suite, Suite::Khintchine);
        assert_eq!((c.instances, c.seed, c.restarts), (1, 0, 16));
        assert_eq!(c.t, vec![1.0]);
        assert_eq!(c.tolerances.khintchine, 1e-10);
        assert_eq!(c.json_path(), PathBuf::from("k.csv.json"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml(&format!("{MINIMAL}colour = 1\n")).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{MINIMAL}[weights]\ndelta = 0.1\n")).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{MINIMAL}[tolerances]\nloose = 1.0\n")).is_err());
    }

    #[test]
    fn invalid_values() {
        let with = |extra: &str| ExperimentConfig::from_toml(&format!("{extra}\noutput = \"x\"\n"));
        assert!(with("suite = \"nope\"\ndepth = 3").is_err());
        assert!(with("suite = \"perf\"\ndepth = 0").is_err());
        assert!(with("suite = \"perf\"\ndepth = 25").is_err());
        assert!(with("suite = \"perf\"\ndepth = 3\ninstances = 0").is_err());
        assert!(with("suite = \"one-weight\"\ndepth = 3\nt = [0.5]").is_err());
        assert!(with("suite = \"one-weight\"\ndepth = 3\nt = [-1.0, 2.0]").is_ok());
        assert!(with("suite = \"packing\"\ndepth = 4\nmin_depth = 5").is_err());
        assert!(with("suite = \"sawyer\"\ndepth = 3\n[weights]\ncascade = 1.0").is_err());
    }

    #[test]
    fn suite_names_round_trip() {
        for suite in Suite::ALL {
            assert_eq!(suite.as_str().parse::<Suite>().unwrap(), suite);
        }
    }
}
