use serde::{Deserialize, Serialize};
use serde_json::Value;

use pivotwalk::geometry::GromovConstants;
use pivotwalk::schottky::{plane_probes, search_schottky, tree_probes, verify_schottky, VerificationReport};
use pivotwalk::walk::{stream_rng, Stream};

use crate::config::ExperimentConfig;
use crate::model::{schottky_pair, BuiltModel};
use crate::report::SCHEMA_VERSION;
use crate::CliError;

/// Ball radius and power cap of the tree probe family.
const TREE_PROBE_RADIUS: usize = 24;
const TREE_PROBE_POWERS: u32 = 4;
/// Longest random word behind a plane probe point.
const PLANE_PROBE_LEN: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchottkyArtifact {
    pub schema_version: u32,
    pub config_hash: String,
    pub model: String,
    pub constants: GromovConstants,
    pub size: usize,
    /// The search result: parameters, patterns, powers and its own report.
    pub search: Value,
    /// Re-verification on probes drawn from `schottky.verify_seed`.
    pub fresh_verification: VerificationReport,
    pub passed: bool,
}

/// Searches for a Schottky set among powers of `{a, b}` patterns, with
/// `(a, b)` from [`schottky_pair`], then re-verifies it on a
/// fresh probe family twice the size.
pub fn schottky_search(cfg: &ExperimentConfig) -> Result<SchottkyArtifact, CliError> {
    let model = BuiltModel::new(&cfg.model)?;
    let constants = model.constants()?;
    let s = &cfg.schottky;
    let k_prime = s.k_prime.unwrap_or(constants.l0);
    let (search, fresh, size) = match &model {
        BuiltModel::Tree { space, mu } => {
            let (a, b) = schottky_pair(space, mu.support())?;
            let probes = |seed: u64, count: usize, set: &[_]| {
                tree_probes(
                    space.rank,
                    set,
                    TREE_PROBE_RADIUS,
                    count,
                    TREE_PROBE_POWERS,
                    &mut stream_rng(seed, Stream::Auxiliary, 0),
                )
            };
            let found = search_schottky(space, a, b, s.target_size, k_prime, s.power_cap, |set| {
                probes(s.probe_seed, s.probe_count, set)
            })?;
            let fresh_probes = probes(s.verify_seed, 2 * s.probe_count, &found.params.set)?;
            let fresh = verify_schottky(&found.params, space, &fresh_probes, s.power_cap)?;
            let size = found.params.set.len();
            (serde_json::to_value(&found), fresh, size)
        }
        BuiltModel::Plane { mu } => {
            let space = pivotwalk::models::HyperbolicPlane;
            let (a, b) = schottky_pair(&space, mu.support())?;
            let probes = |seed: u64, count: usize| {
                plane_probes(a, b, PLANE_PROBE_LEN, count, &mut stream_rng(seed, Stream::Auxiliary, 0))
            };
            let found = search_schottky(&space, a, b, s.target_size, k_prime, s.power_cap, |_| {
                Ok(probes(s.probe_seed, s.probe_count))
            })?;
            let fresh = verify_schottky(&found.params, &space, &probes(s.verify_seed, 2 * s.probe_count), s.power_cap)?;
            let size = found.params.set.len();
            (serde_json::to_value(&found), fresh, size)
        }
    };
    let search = search.map_err(|e| CliError::Output(e.to_string()))?;
    Ok(SchottkyArtifact {
        schema_version: SCHEMA_VERSION,
        config_hash: cfg.hash(),
        model: model.describe(),
        constants,
        size,
        passed: fresh.passed && size >= s.target_size,
        search,
        fresh_verification: fresh,
    })
}
