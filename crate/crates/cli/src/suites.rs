use clap::ValueEnum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use pivotwalk::geometry::GromovConstants;
use pivotwalk::models::{CayleyArena, FreeGroupWord, HyperbolicPlane};
use pivotwalk::pivots::TreeWalk;
use pivotwalk::presets::TreePreset;
use pivotwalk::stats::{
    clt_samples, converse_diagnostic, deviation_probability_check, dyadic_b_moments, dyadic_decompose,
    geometric_checkpoints, lil_experiment, log_deviation_series, logdev_experiment, opposite_deviation_moment,
    pivot_decay, pivot_step_stats, quantile, tracking_experiment, HeavyTailLaw, PlaneLaw, TreeLaw, WalkLaw,
};
use pivotwalk::walk::{
    materialize_plane, materialize_tree, sample_iid_steps, sample_trajectory, tree_letters, DecomposedModel, Stream,
};

use crate::config::ExperimentConfig;
use crate::model::BuiltModel;
use crate::report::{num, Assertion, SuiteOutcome, Table};
use crate::CliError;

macro_rules! by_law {
    ($model:expr, $law:ident => $body:expr) => {
        match &$model {
            BuiltModel::Tree { mu, .. } => {
                let $law = TreeLaw::new(mu.clone());
                $body
            }
            BuiltModel::Plane { mu } => {
                let $law = PlaneLaw::new(mu.clone());
                $body
            }
        }
    };
}

pub const KS_MAX: f64 = 0.05;
pub const GAIN_TARGET: f64 = 0.9;
pub const MC_SIGMAS: f64 = 3.0;
pub const DOUBLING_CHANGE_MAX: f64 = 0.2;
pub const LIL_WINDOW: (f64, f64) = (0.5, 1.5);
pub const CONVERSE_RATIO: f64 = 3.0;
pub const DECAY_R2_MIN: f64 = 0.8;
pub const MOMENT_CHANGE_MAX: f64 = 0.1;
/// Allowed growth of `E[b⁴]` above the middle dyadic level.
pub const DYADIC_MOMENT_SPREAD: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    PivotStats,
    Clt,
    Lil,
    Logdev,
    Tracking,
    Converse,
    Deviation,
    Dyadic,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::PivotStats => "pivot-stats",
            Suite::Clt => "clt",
            Suite::Lil => "lil",
            Suite::Logdev => "logdev",
            Suite::Tracking => "tracking",
            Suite::Converse => "converse",
            Suite::Deviation => "deviation",
            Suite::Dyadic => "dyadic",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::value_variants().iter().copied().find(|v| v.name() == s)
    }
}

pub fn run_suite(cfg: &ExperimentConfig, suite: Suite) -> Result<SuiteOutcome, CliError> {
    let model = BuiltModel::new(&cfg.model)?;
    match suite {
        Suite::PivotStats => pivot_suite(cfg, &model),
        Suite::Clt => by_law!(model, law => clt_suite(cfg, &law)),
        Suite::Lil => by_law!(model, law => lil_suite(cfg, &law)),
        Suite::Logdev => by_law!(model, law => logdev_suite(cfg, &law)),
        Suite::Tracking => tracking_suite(cfg, &model),
        Suite::Converse => by_law!(model, law => converse_suite(cfg, &law)),
        Suite::Deviation => match &model {
            BuiltModel::Tree { mu, .. } => {
                let x = model.word_power(cfg.suites.deviation.x_power)?;
                deviation_suite(cfg, &TreeLaw::new(mu.clone()), &x)
            }
            BuiltModel::Plane { mu } => {
                let x = BuiltModel::plane_power(mu, cfg.suites.deviation.x_power)?;
                deviation_suite(cfg, &PlaneLaw::new(mu.clone()), &x)
            }
        },
        Suite::Dyadic => dyadic_suite(cfg, &model),
    }
}

/// Checkpoints from the config, or `per_octave` geometric points from `2^lo`
/// to `n`.
pub(crate) fn checkpoints(cfg: &ExperimentConfig, lo: u32, per_octave: u32) -> Vec<u64> {
    if let Some(c) = &cfg.run.checkpoints {
        return c.clone();
    }
    let hi = 63 - cfg.run.n.max(1).leading_zeros();
    let mut c: Vec<u64> = geometric_checkpoints(lo.min(hi), hi, per_octave);
    if c.last() != Some(&cfg.run.n) {
        c.push(cfg.run.n);
    }
    c
}

/// Relative change between the value at the checkpoint nearest `n/2` and at `n`.
fn doubling_change(cps: &[u64], values: &[f64]) -> Option<(u64, u64, f64)> {
    let n = *cps.last()?;
    let j = cps.iter().position(|&c| 2 * c >= n)?;
    let (a, b) = (values[j], *values.last()?);
    Some((cps[j], n, (b - a).abs() / a.abs()))
}

fn change_assertion(name: &str, cps: &[u64], values: &[f64]) -> Assertion {
    match doubling_change(cps, values) {
        Some((a, b, ch)) => Assertion::new(
            name,
            ch < DOUBLING_CHANGE_MAX,
            format!("p99 changes by {ch} between n = {a} and n = {b} (limit {DOUBLING_CHANGE_MAX})"),
        ),
        None => Assertion::new(name, false, "no checkpoints".into()),
    }
}

pub(crate) fn reference_preset(cfg: &ExperimentConfig) -> Result<TreePreset, CliError> {
    Ok(TreePreset::new(cfg.schottky.probe_seed, cfg.schottky.probe_count)?)
}

pub(crate) fn block_model(
    preset: &TreePreset,
    model: &BuiltModel,
    alpha: f64,
) -> Result<DecomposedModel<FreeGroupWord>, CliError> {
    let (space, mu) = model.tree()?;
    if space.rank != 2 {
        return Err(CliError::Config("pivot suites use the rank-2 Schottky preset".into()));
    }
    Ok(DecomposedModel::block(preset.schottky().to_vec(), preset.c().clone(), alpha, mu.clone())?)
}

fn pivot_suite(cfg: &ExperimentConfig, model: &BuiltModel) -> Result<SuiteOutcome, CliError> {
    let preset = reference_preset(cfg)?;
    let k = preset.constants;
    let p = &cfg.suites.pivot;
    let m = block_model(&preset, model, p.alpha)?;
    let n = cfg.run.n as usize;
    let (seed, trials) = (cfg.run.seed, cfg.run.trials);
    let rows: Vec<Vec<Vec<String>>> =
        (0..trials as u64).into_par_iter().map(|trial| pivot_rows(&m, &k, n, seed, trial)).collect::<Result<_, _>>()?;
    let mut table = Table::new(&["trial", "step", "P_size", "Q_size", "increment", "backtrack_depth"]);
    rows.into_iter().flatten().for_each(|r| table.push(r));
    let stats = pivot_step_stats(&m, &k, n, trials, seed)?;
    let mut assertions = vec![Assertion::new(
        "gain-frequency",
        stats.gain_frequency >= GAIN_TARGET - MC_SIGMAS * stats.gain_sigma,
        format!("P(increment = +1) = {} over {} steps, σ_MC = {}", stats.gain_frequency, stats.steps, stats.gain_sigma),
    )];
    for j in 0..stats.drops.len() {
        let bound = 10f64.powi(-(j as i32 + 1)) + MC_SIGMAS * stats.drop_sigma[j];
        assertions.push(Assertion::new(
            &format!("backtrack-tail-{j}"),
            stats.drop_frequency[j] <= bound,
            format!("P(increment < -{j}) = {} (bound {bound})", stats.drop_frequency[j]),
        ));
    }
    let mut summary = json!({ "model": describe_blocks(&m), "step_stats": stats });
    if p.decay_trials > 0 {
        let dm = block_model(&preset, model, p.decay_alpha)?;
        let d = pivot_decay(&dm, &k, &p.decay_ns, p.decay_trials, p.decay_estimation_trials, seed)?;
        for (name, fit) in [("decay-P", d.p_fit), ("decay-Q", d.q_fit)] {
            assertions.push(Assertion::new(
                name,
                fit.slope < 0.0 && fit.r2 >= DECAY_R2_MIN,
                format!("slope {} R² {} (κ1 = {})", fit.slope, fit.r2, d.kappa1),
            ));
        }
        summary["decay"] = json!(d);
    }
    Ok(SuiteOutcome { suite: Suite::PivotStats.name().into(), trials, table, summary, assertions })
}

/// Per committed step: `|P|`, `|Q_t|` at the block end `t` (horizon `2t`,
/// blank past `n/2`), increment and backtrack depth.
fn pivot_rows(
    m: &DecomposedModel<FreeGroupWord>,
    k: &GromovConstants,
    n: usize,
    seed: u64,
    trial: u64,
) -> Result<Vec<Vec<String>>, CliError> {
    let traj = sample_trajectory(m, n, seed, trial);
    let mut walk = TreeWalk::new(m)?;
    let mut run = walk.run(k, &traj)?;
    let history = run.history().to_vec();
    let mut out = Vec::with_capacity(history.len());
    for (step, r) in history.iter().enumerate() {
        let t = run.blocks()[step] * traj.block_len;
        let q = if 2 * t <= n { run.eventual(&walk.arena, t, 2 * t)?.pivots.len().to_string() } else { String::new() };
        out.push(vec![
            trial.to_string(),
            (step + 1).to_string(),
            r.size.to_string(),
            q,
            r.increment.to_string(),
            r.backtrack_depth().to_string(),
        ]);
    }
    Ok(out)
}

fn clt_suite<L: WalkLaw>(cfg: &ExperimentConfig, law: &L) -> Result<SuiteOutcome, CliError> {
    let r = clt_samples(law, cfg.run.n, cfg.run.trials, cfg.run.estimation_trials, cfg.run.seed)?;
    let mut table = Table::new(&["trial", "displacement_z", "translation_z"]);
    for (i, (d, t)) in r.displacement_samples.iter().zip(&r.translation_samples).enumerate() {
        table.push(vec![i.to_string(), num(*d), num(*t)]);
    }
    let assertions = vec![
        Assertion::new(
            "ks-displacement",
            r.ks_displacement <= KS_MAX,
            format!("KS = {} (limit {KS_MAX})", r.ks_displacement),
        ),
        Assertion::new(
            "ks-translation",
            r.ks_translation <= KS_MAX,
            format!("KS = {} (limit {KS_MAX})", r.ks_translation),
        ),
        Assertion::new(
            "pair-difference",
            r.max_pair_difference <= r.pair_bound,
            format!("max |d − τ|/√n = {} (limit 10 log n/√n = {})", r.max_pair_difference, r.pair_bound),
        ),
    ];
    let summary = json!({
        "model": law.describe(), "n": r.n, "lambda_hat": r.lambda, "sigma2_hat": r.sigma2,
        "ks_displacement": r.ks_displacement, "ks_translation": r.ks_translation,
        "max_pair_difference": r.max_pair_difference, "pair_bound": r.pair_bound,
    });
    Ok(SuiteOutcome { suite: Suite::Clt.name().into(), trials: r.trials, table, summary, assertions })
}

fn lil_suite<L: WalkLaw>(cfg: &ExperimentConfig, law: &L) -> Result<SuiteOutcome, CliError> {
    let cps = checkpoints(cfg, 6, 2);
    let n0 = cfg.suites.lil.n0;
    let r = lil_experiment(law, cfg.run.n, n0, cfg.run.trials, cfg.run.estimation_trials, &cps, cfg.run.seed)?;
    let mut table = Table::new(&["n", "mean_running_max"]);
    for (n, v) in &r.series {
        table.push(vec![n.to_string(), num(*v)]);
    }
    let (lo, hi) = (LIL_WINDOW.0 * r.sigma, LIL_WINDOW.1 * r.sigma);
    let m = r.mean_running_max.value;
    let assertions = vec![
        Assertion::diagnostic(
            "lil-window",
            (lo..=hi).contains(&m),
            format!("mean running max {m} against [{lo}, {hi}] (σ̂ = {})", r.sigma),
        ),
        Assertion::new(
            "translation-tracks-displacement",
            r.tracking_violations == 0,
            format!("{} steps with |τ − d| > 10 log n", r.tracking_violations),
        ),
    ];
    let summary = json!({ "model": law.describe(), "report": r });
    Ok(SuiteOutcome { suite: Suite::Lil.name().into(), trials: cfg.run.trials, table, summary, assertions })
}

fn logdev_suite<L: WalkLaw>(cfg: &ExperimentConfig, law: &L) -> Result<SuiteOutcome, CliError> {
    let cps = checkpoints(cfg, 6, 8);
    let r = logdev_experiment(law, &cps, cfg.run.trials, cfg.run.seed)?;
    let rows: Vec<Vec<Vec<String>>> = (0..cfg.run.trials as u64)
        .into_par_iter()
        .map(|trial| {
            log_deviation_series(law, &cps, cfg.run.seed, trial)
                .0
                .into_iter()
                .map(|(n, v)| vec![trial.to_string(), n.to_string(), num(v), num(v / (n as f64).ln())])
                .collect()
        })
        .collect();
    let mut table = Table::new(&["trial", "n", "abs_difference", "ratio"]);
    rows.into_iter().flatten().for_each(|r| table.push(r));
    let assertions = vec![
        Assertion::new(
            "translation-below-displacement",
            r.tau_exceeds_d == 0,
            format!("{} steps with τ > d", r.tau_exceeds_d),
        ),
        change_assertion("p99-stable", &r.checkpoints, &r.p99_running_ratio),
    ];
    let summary = json!({ "model": law.describe(), "report": r });
    Ok(SuiteOutcome { suite: Suite::Logdev.name().into(), trials: cfg.run.trials, table, summary, assertions })
}

fn tracking_suite(cfg: &ExperimentConfig, model: &BuiltModel) -> Result<SuiteOutcome, CliError> {
    let preset = reference_preset(cfg)?;
    let t = &cfg.suites.tracking;
    let m = block_model(&preset, model, t.alpha)?;
    let cps = checkpoints(cfg, 6, 4);
    let n = *cps.last().unwrap_or(&cfg.run.n) as usize;
    let r = tracking_experiment(&m, &preset.constants, n + n / 4, t.k0, &cps, cfg.run.trials, t.pairs, cfg.run.seed)?;
    let mut table = Table::new(&["checkpoint", "p99_running_ratio"]);
    for (c, v) in cps.iter().zip(&r.p99_running_ratio) {
        table.push(vec![c.to_string(), num(*v)]);
    }
    let assertions = vec![
        Assertion::new(
            "quasi-geodesic",
            r.quasi_geodesic_violations == 0,
            format!(
                "{} violations over {} pairs, max excess {}",
                r.quasi_geodesic_violations, r.pairs_checked, r.max_excess
            ),
        ),
        change_assertion("p99-stable", &cps, &r.p99_running_ratio),
    ];
    let summary = json!({
        "model": describe_blocks(&m), "checkpoints": r.checkpoints, "p99_running_ratio": r.p99_running_ratio,
        "pairs_checked": r.pairs_checked, "quasi_geodesic_violations": r.quasi_geodesic_violations,
        "max_excess": r.max_excess,
    });
    Ok(SuiteOutcome { suite: Suite::Tracking.name().into(), trials: cfg.run.trials, table, summary, assertions })
}

fn converse_suite<L: WalkLaw>(cfg: &ExperimentConfig, control: &L) -> Result<SuiteOutcome, CliError> {
    let c = &cfg.suites.converse;
    let heavy = HeavyTailLaw::new(c.p_heavy, c.q, c.cap)?;
    let h = converse_diagnostic(&heavy, &c.ns, cfg.run.trials, cfg.run.seed)?;
    let k = converse_diagnostic(control, &c.ns, cfg.run.trials, cfg.run.seed)?;
    let mut table = Table::new(&["n", "iqr_heavy_d", "iqr_heavy_tau", "iqr_control_d", "iqr_control_tau"]);
    for j in 0..c.ns.len() {
        table.push(vec![
            c.ns[j].to_string(),
            num(h.iqr_displacement[j]),
            num(h.iqr_translation[j]),
            num(k.iqr_displacement[j]),
            num(k.iqr_translation[j]),
        ]);
    }
    let check = |name: &str, a: f64, b: f64| {
        Assertion::new(
            name,
            a > 0.0 && a >= CONVERSE_RATIO * b.abs(),
            format!("heavy slope {a}, control slope {b} (ratio limit {CONVERSE_RATIO})"),
        )
    };
    let assertions = vec![
        check("converse-displacement", h.fit_displacement.slope, k.fit_displacement.slope),
        check("converse-translation", h.fit_translation.slope, k.fit_translation.slope),
    ];
    let summary =
        json!({ "heavy": heavy.describe(), "control": control.describe(), "heavy_report": h, "control_report": k });
    Ok(SuiteOutcome { suite: Suite::Converse.name().into(), trials: cfg.run.trials, table, summary, assertions })
}

fn deviation_suite<L: WalkLaw>(cfg: &ExperimentConfig, law: &L, x: &L::Tracker) -> Result<SuiteOutcome, CliError> {
    let d = &cfg.suites.deviation;
    let r = deviation_probability_check(law, x, &d.ks, cfg.run.horizon_multiplier, cfg.run.trials, cfg.run.seed)?;
    let o = opposite_deviation_moment(law, d.moment_p, d.moment_k, &d.moment_horizons, cfg.run.trials, cfg.run.seed)?;
    let mut table = Table::new(&["k", "horizon", "hits", "frequency"]);
    for j in 0..r.ks.len() {
        table.push(vec![r.ks[j].to_string(), r.horizons[j].to_string(), r.hits[j].to_string(), num(r.frequency[j])]);
    }
    let exp_change =
        o.exp_moment.windows(2).map(|w| (w[1].value - w[0].value).abs() / w[0].value.abs()).fold(0.0, f64::max);
    let assertions = vec![
        Assertion::new(
            "deviation-decay",
            r.fit.slope < 0.0,
            format!("log-frequency slope {} over k = {:?}", r.fit.slope, r.ks),
        ),
        Assertion::new(
            "frequencies-are-probabilities",
            r.frequency.iter().all(|f| (0.0..=1.0).contains(f)),
            format!("{:?}", r.frequency),
        ),
        Assertion::diagnostic(
            "opposite-moment-stable",
            o.max_relative_change() < MOMENT_CHANGE_MAX,
            format!("2p-moment changes by {} across horizons {:?}", o.max_relative_change(), o.horizons),
        ),
        Assertion::diagnostic(
            "opposite-exp-moment-stable",
            exp_change < MOMENT_CHANGE_MAX,
            format!("exponential moment changes by {exp_change}"),
        ),
    ];
    let summary = json!({ "model": law.describe(), "deviation": r, "opposite": o });
    Ok(SuiteOutcome { suite: Suite::Deviation.name().into(), trials: cfg.run.trials, table, summary, assertions })
}

fn dyadic_suite(cfg: &ExperimentConfig, model: &BuiltModel) -> Result<SuiteOutcome, CliError> {
    let dc = &cfg.suites.dyadic;
    let seed = cfg.run.seed;
    let decompose = |trial: u64, k_max: u32| -> Result<pivotwalk::stats::DyadicDecomposition, CliError> {
        let len = 1usize << (k_max + dc.m);
        Ok(match model {
            BuiltModel::Tree { space, mu } => {
                let steps = sample_iid_steps(mu, len, seed, Stream::Forward, trial);
                let mut arena = CayleyArena::new(space.rank)?;
                let root = arena.root();
                let pos = materialize_tree(&mut arena, &tree_letters(mu.support()), &steps, root)?;
                dyadic_decompose(&arena, &pos, dc.m, k_max)?
            }
            BuiltModel::Plane { mu } => {
                let steps = sample_iid_steps(mu, len, seed, Stream::Forward, trial);
                let (pos, _) = materialize_plane(mu.support(), &steps);
                dyadic_decompose(&HyperbolicPlane, &pos, dc.m, k_max)?
            }
        })
    };
    let full = decompose(0, dc.k_max)?;
    let decomps: Vec<_> =
        (0..cfg.run.trials as u64).into_par_iter().map(|t| decompose(t, dc.moment_k_max)).collect::<Result<_, _>>()?;
    let moments = dyadic_b_moments(&decomps)?;
    let mut table = Table::new(&["level", "b4_mean", "b4_half_width"]);
    for (k, e) in moments.iter().enumerate() {
        table.push(vec![k.to_string(), num(e.value), num(e.half_width)]);
    }
    let exact = matches!(model, BuiltModel::Tree { .. });
    let worst = decomps.iter().map(|d| d.identity_residual.max(d.telescoping_residual)).fold(0.0, f64::max);
    let worst = worst.max(full.identity_residual).max(full.telescoping_residual);
    // Small levels see only short-range cancellation, so uniform
    // boundedness is checked from the middle level upward.
    let mid = moments.len() / 2;
    let base = moments[mid].value;
    let hi = moments[mid..].iter().map(|e| e.value).fold(0.0, f64::max);
    let assertions = vec![
        Assertion::new(
            "dyadic-identity",
            if exact { worst == 0.0 } else { worst <= pivotwalk::stats::IDENTITY_TOLERANCE },
            format!("largest residual {worst} on {} paths plus one of 2^{} steps", decomps.len(), dc.k_max + dc.m),
        ),
        Assertion::diagnostic(
            "b4-bounded",
            hi <= DYADIC_MOMENT_SPREAD * base,
            format!("E[b⁴] at levels ≥ {mid} peaks at {hi} against {base} at level {mid} (factor limit {DYADIC_MOMENT_SPREAD})"),
        ),
    ];
    let q = quantile(&full.b[0], 0.99);
    let summary = json!({ "model": model.describe(), "moments": moments, "worst_residual": worst, "b0_p99": q });
    Ok(SuiteOutcome { suite: Suite::Dyadic.name().into(), trials: cfg.run.trials, table, summary, assertions })
}

fn describe_blocks(m: &DecomposedModel<FreeGroupWord>) -> String {
    format!("block model: alpha = {}, |S| = {}, block length {}", m.alpha(), m.schottky_len(), m.block_len())
}
