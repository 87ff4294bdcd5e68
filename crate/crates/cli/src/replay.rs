use serde_json::{json, Value};

use pivotwalk::pivots::TreeWalk;
use pivotwalk::stats::{log_deviation_series, PathTracker, PlaneLaw, TreeLaw, WalkLaw};
use pivotwalk::walk::{sample_iid_steps, sample_with, StepDistribution, Stream};

use crate::config::ExperimentConfig;
use crate::model::BuiltModel;
use crate::report::Sidecar;
use crate::suites::{self, Suite};
use crate::CliError;

/// Re-derives trial `trial` of a report. `seed` and `config`, when given,
/// must hash to the recorded config.
pub fn replay(
    sidecar: &Sidecar,
    trial: u64,
    seed: Option<u64>,
    config: Option<&ExperimentConfig>,
) -> Result<Value, CliError> {
    let mut cfg = config.cloned().unwrap_or_else(|| sidecar.config.clone());
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    let got = cfg.hash();
    if got != sidecar.config_hash {
        return Err(CliError::HashMismatch { expected: sidecar.config_hash.clone(), got });
    }
    let suite = Suite::from_name(&sidecar.suite)
        .ok_or_else(|| CliError::Config(format!("unknown suite {:?} in report", sidecar.suite)))?;
    let model = BuiltModel::new(&cfg.model)?;
    let body = match suite {
        Suite::PivotStats => pivot_dump(&cfg, &model, cfg.suites.pivot.alpha, cfg.run.n as usize, trial)?,
        Suite::Tracking => {
            let n = *suites::checkpoints(&cfg, 6, 4).last().unwrap_or(&cfg.run.n) as usize;
            pivot_dump(&cfg, &model, cfg.suites.tracking.alpha, 2 * (n + n / 4), trial)?
        }
        _ => {
            let cps = match suite {
                Suite::Logdev => suites::checkpoints(&cfg, 6, 8),
                Suite::Lil => suites::checkpoints(&cfg, 6, 2),
                _ => vec![iid_length(&cfg, suite)],
            };
            match &model {
                BuiltModel::Tree { mu, .. } => iid_dump(&TreeLaw::new(mu.clone()), mu, &cfg, &cps, trial),
                BuiltModel::Plane { mu } => iid_dump(&PlaneLaw::new(mu.clone()), mu, &cfg, &cps, trial),
            }
        }
    };
    Ok(json!({
        "suite": suite.name(),
        "trial": trial,
        "seed": cfg.run.seed,
        "config_hash": sidecar.config_hash,
        "replay": body,
    }))
}

fn iid_length(cfg: &ExperimentConfig, suite: Suite) -> u64 {
    match suite {
        Suite::Converse => cfg.suites.converse.ns.last().copied().unwrap_or(cfg.run.n),
        Suite::Dyadic => 1 << (cfg.suites.dyadic.moment_k_max + cfg.suites.dyadic.m),
        Suite::Deviation => cfg.suites.deviation.ks.iter().max().copied().unwrap_or(0) * cfg.run.horizon_multiplier,
        _ => cfg.run.n,
    }
}

fn iid_dump<L: WalkLaw, E: Clone + PartialEq>(
    law: &L,
    mu: &StepDistribution<E>,
    cfg: &ExperimentConfig,
    cps: &[u64],
    trial: u64,
) -> Value {
    let n = cps.last().copied().unwrap_or(0);
    let steps = sample_iid_steps(mu, n as usize, cfg.run.seed, Stream::Forward, trial);
    let mut t = law.start();
    let mut rng = pivotwalk::walk::stream_rng(cfg.run.seed, Stream::Forward, trial);
    for _ in 0..n {
        law.step(&mut rng, &mut t);
    }
    let (series, exceed) = log_deviation_series(law, cps, cfg.run.seed, trial);
    let logdev: Vec<Value> =
        series.iter().map(|&(n, v)| json!({ "n": n, "abs_difference": v, "ratio": v / (n as f64).ln() })).collect();
    json!({
        "n": n,
        "steps": steps,
        "displacement": t.displacement(),
        "translation": t.translation(),
        "translation_exceeds_displacement": exceed,
        "logdev": logdev,
    })
}

fn pivot_dump(cfg: &ExperimentConfig, model: &BuiltModel, alpha: f64, n: usize, trial: u64) -> Result<Value, CliError> {
    let preset = suites::reference_preset(cfg)?;
    let m = suites::block_model(&preset, model, alpha)?;
    let traj = sample_with(&m, n, cfg.run.seed, trial, Stream::Forward);
    let mut walk = TreeWalk::new(&m)?;
    let run = walk.run(&preset.constants, &traj)?;
    let record = run.record();
    let end = *run.positions().last().expect("nonempty path");
    Ok(json!({
        "trajectory": traj,
        "pivots": record.pivots,
        "moving_point": record.z,
        "history": record.history,
        "schottky_blocks": run.blocks(),
        "final_word": walk.arena.word(end).to_string(),
    }))
}
