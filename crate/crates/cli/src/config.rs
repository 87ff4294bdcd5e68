use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// One experiment: the step law, Schottky search settings, run sizes and
/// per-suite knobs. `run.seed` has no default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub schottky: SchottkyConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub suites: SuiteConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Finitely supported law on the free group; generators are words such
    /// as `"a"`, `"B"` or `"abA"` (capitals are inverses).
    Tree { rank: u32, generators: Vec<String>, weights: Vec<f64> },
    /// Finitely supported law on PSL(2, R), matrices as `[a, b, c, d]`.
    HyperbolicPlane { matrices: Vec<[f64; 4]>, weights: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchottkyConfig {
    pub target_size: usize,
    /// Defaults to `L0` of the constants ladder.
    pub k_prime: Option<f64>,
    pub probe_seed: u64,
    pub probe_count: usize,
    /// Probe seed for the independent re-verification.
    pub verify_seed: u64,
    pub power_cap: u32,
}

impl Default for SchottkyConfig {
    fn default() -> Self {
        Self { target_size: 310, k_prime: None, probe_seed: 1, probe_count: 3000, verify_seed: 2, power_cap: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: u64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon_multiplier: u64,
    #[serde(default)]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default = "default_estimation")]
    pub estimation_trials: usize,
}

fn default_horizon() -> u64 {
    4
}

fn default_estimation() -> usize {
    8000
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub pivot: PivotSuite,
    pub lil: LilSuite,
    pub tracking: TrackingSuite,
    pub converse: ConverseSuite,
    pub deviation: DeviationSuite,
    pub dyadic: DyadicSuite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PivotSuite {
    /// Probability of a Schottky block in the block model.
    pub alpha: f64,
    /// Trials of the decay fit; 0 skips it.
    pub decay_trials: usize,
    pub decay_estimation_trials: usize,
    pub decay_alpha: f64,
    pub decay_ns: Vec<usize>,
}

impl Default for PivotSuite {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            decay_trials: 0,
            decay_estimation_trials: 200,
            decay_alpha: 0.17,
            decay_ns: (1..=16).map(|j| 64 * j).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LilSuite {
    pub n0: u64,
}

impl Default for LilSuite {
    fn default() -> Self {
        Self { n0: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingSuite {
    pub alpha: f64,
    pub k0: u64,
    pub pairs: usize,
}

impl Default for TrackingSuite {
    fn default() -> Self {
        Self { alpha: 0.17, k0: 64, pairs: 2000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConverseSuite {
    pub p_heavy: f64,
    pub q: f64,
    pub cap: u64,
    pub ns: Vec<u64>,
}

impl Default for ConverseSuite {
    fn default() -> Self {
        Self { p_heavy: 0.1, q: 2.5, cap: 1_000_000, ns: (10..=14).map(|e| 1 << e).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviationSuite {
    pub ks: Vec<u64>,
    /// `x` is the first support element raised to this power.
    pub x_power: i64,
    pub moment_p: f64,
    pub moment_k: f64,
    pub moment_horizons: Vec<u64>,
}

impl Default for DeviationSuite {
    fn default() -> Self {
        Self { ks: vec![8, 16, 32, 64], x_power: 64, moment_p: 1.0, moment_k: 0.1, moment_horizons: vec![1024, 2048] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DyadicSuite {
    pub m: u32,
    pub k_max: u32,
    /// Levels used for the fourth-moment estimate.
    pub moment_k_max: u32,
}

impl Default for DyadicSuite {
    fn default() -> Self {
        Self { m: 0, k_max: 15, moment_k_max: 10 }
    }
}

impl ExperimentConfig {
    /// TOML, or JSON when the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Simple random walk on `F₂` with the given run sizes.
    pub fn reference(n: u64, trials: usize, seed: u64) -> Self {
        Self {
            model: ModelConfig::Tree {
                rank: 2,
                generators: ["a", "A", "b", "B"].iter().map(|s| s.to_string()).collect(),
                weights: vec![0.25; 4],
            },
            schottky: SchottkyConfig::default(),
            run: RunConfig {
                n,
                trials,
                seed,
                horizon_multiplier: default_horizon(),
                checkpoints: None,
                estimation_trials: default_estimation(),
            },
            outputs: OutputConfig::default(),
            suites: SuiteConfig::default(),
        }
    }
}
