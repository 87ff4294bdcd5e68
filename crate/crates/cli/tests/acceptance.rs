//! The twelve acceptance criteria, one PASS/FAIL line each. Runs with its
//! own `main` so every criterion reports even when an earlier one fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use serde_json::Value;

use pivotwalk::geometry::{check_four_point, gromov_product, Metric};
use pivotwalk::models::{translation_length_limit_oracle, CayleyArena, FreeGroup, FreeGroupWord, SpaceModel};
use pivotwalk::pivots::{admissible_replacements, pivot_trajectory, rerun_pivoted, TreeWalk};
use pivotwalk::presets::TreePreset;
use pivotwalk::stats::{dyadic_decompose, pivot_decay};
use pivotwalk::walk::{materialize_tree, sample_iid_steps, sample_trajectory, tree_letters, StepDistribution, Stream};
use pivotwalk_cli::config::ExperimentConfig;
use pivotwalk_cli::schottky::schottky_search;
use pivotwalk_cli::suites::{run_suite, Suite};

const F2: FreeGroup = FreeGroup { rank: 2 };
const SEED: u64 = 20240611;

const EXACTNESS_SAMPLES: u64 = 10_000;
const EXACTNESS_SECS: f64 = 10.0;
const DYADIC_LEVELS: u32 = 15;
const ORACLE_POWER: u64 = 1000;

const SCHOTTKY_SIZE: usize = 310;
const SCHOTTKY_SECS: f64 = 60.0;

const MIN_BLOCK_STEPS: usize = 10_000;
const GAIN_TARGET: f64 = 0.9;
const MC_SIGMAS: f64 = 3.0;
const GAIN_SECS: f64 = 120.0;

const PIVOTAL_TIMES: usize = 100;
const MIN_ADMISSIBLE: usize = 304;

const ALIGNMENT_PATHS: u64 = 100;
const ALIGNMENT_BLOCKS: usize = 200;

const DECAY_R2_MIN: f64 = 0.8;
const DECAY_N_RANGE: (usize, usize) = (64, 1024);

const DOUBLING_CHANGE_MAX: f64 = 0.2;
const LOGDEV_N: u64 = 1 << 16;
const LOGDEV_PATHS: usize = 100;

const KS_MAX: f64 = 0.05;
const CLT_N: u64 = 1 << 10;
const CLT_TRIALS: usize = 2000;
const CLT_SECS: f64 = 600.0;

const CONVERSE_RATIO: f64 = 3.0;

const LIL_N: u64 = 1 << 16;
const LIL_TRIALS: usize = 200;
const LIL_WINDOW: (f64, f64) = (0.5, 1.5);

type Check = Result<(bool, String), String>;

fn config(name: &str) -> Result<ExperimentConfig, String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).map_err(|e| e.to_string())
}

fn suite(cfg: &ExperimentConfig, s: Suite) -> Result<Value, String> {
    run_suite(cfg, s).map(|o| o.summary).map_err(|e| e.to_string())
}

fn f(v: &Value) -> Result<f64, String> {
    v.as_f64().ok_or_else(|| format!("expected a number, got {v}"))
}

fn floats(v: &Value) -> Result<Vec<f64>, String> {
    v.as_array().ok_or_else(|| format!("expected an array, got {v}"))?.iter().map(f).collect()
}

fn ints(v: &Value) -> Result<Vec<u64>, String> {
    v.as_array()
        .ok_or_else(|| format!("expected an array, got {v}"))?
        .iter()
        .map(|x| x.as_u64().ok_or_else(|| format!("expected an integer, got {x}")))
        .collect()
}

/// Relative change of `values` between checkpoints `n/2` and `n`.
fn doubling_change(cps: &[u64], values: &[f64], n: u64) -> Result<f64, String> {
    let at =
        |c: u64| cps.iter().position(|&x| x == c).map(|i| values[i]).ok_or_else(|| format!("no checkpoint at {c}"));
    let (a, b) = (at(n / 2)?, at(n)?);
    Ok((b - a).abs() / a.abs())
}

fn random_word(trial: u64) -> FreeGroupWord {
    let mu = StepDistribution::uniform(["a", "A", "b", "B"].map(|s| F2.word(s).unwrap()).to_vec()).unwrap();
    let len = (trial % 13) as usize;
    let letters: Vec<i32> = sample_iid_steps(&mu, len, SEED, Stream::Auxiliary, trial)
        .iter()
        .map(|&s| [1, -1, 2, -2][s as usize])
        .collect();
    FreeGroupWord::from_letters(2, &letters).unwrap()
}

fn exactness() -> Check {
    let start = Instant::now();
    let d = |p: &FreeGroupWord, q: &FreeGroupWord| F2.distance(p, q);
    let gp = |b: &FreeGroupWord, p: &FreeGroupWord, q: &FreeGroupWord| gromov_product(&F2, b, p, q);
    let (mut bad_triples, mut bad_quads, mut bad_tau) = (0, 0, 0);
    for t in 0..EXACTNESS_SAMPLES {
        let [x, y, z, u] = std::array::from_fn(|i| random_word(4 * t + i as u64));
        let ok = gp(&x, &x, &y) == 0.0
            && gp(&x, &y, &z) == gp(&x, &z, &y)
            && d(&x, &y) == gp(&x, &y, &z) + gp(&y, &x, &z)
            && (0.0..=d(&x, &y)).contains(&gp(&x, &y, &z))
            && (gp(&x, &y, &z) - gp(&u, &y, &z)).abs() <= d(&x, &u);
        bad_triples += usize::from(!ok);
        bad_quads += usize::from(!check_four_point(&F2, &x, &y, &z, &u, 0.0));
        // |gⁿ| = nτ + (|g| − τ) on the tree, so the oracle is off by (|g| − τ)/n.
        let tau = F2.translation_length(&x);
        let power = F2.power(&x, ORACLE_POWER as i64).map_err(|e| e.to_string())?;
        let exact = power.len() as u64 == ORACLE_POWER * tau as u64 + x.len() as u64 - tau as u64;
        let oracle = translation_length_limit_oracle(&F2, &x, ORACLE_POWER).map_err(|e| e.to_string())?;
        bad_tau += usize::from(!exact || (oracle - tau).abs() > x.len() as f64 / ORACLE_POWER as f64);
    }
    let mu = StepDistribution::uniform(["a", "A", "b", "B"].map(|s| F2.word(s).unwrap()).to_vec()).unwrap();
    let steps = sample_iid_steps(&mu, 1 << DYADIC_LEVELS, SEED, Stream::Forward, 0);
    let mut arena = CayleyArena::new(2).map_err(|e| e.to_string())?;
    let root = arena.root();
    let pos = materialize_tree(&mut arena, &tree_letters(mu.support()), &steps, root).map_err(|e| e.to_string())?;
    let dy = dyadic_decompose(&arena, &pos, 0, DYADIC_LEVELS).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let passed = bad_triples == 0
        && bad_quads == 0
        && bad_tau == 0
        && dy.identity_residual == 0.0
        && dy.telescoping_residual == 0.0
        && secs < EXACTNESS_SECS;
    Ok((
        passed,
        format!(
            "{bad_triples} triple, {bad_quads} four-point, {bad_tau} τ failures over {EXACTNESS_SAMPLES}; \
             dyadic residual {} on 2^{DYADIC_LEVELS} steps; {secs:.1}s (limit {EXACTNESS_SECS}s)",
            dy.identity_residual
        ),
    ))
}

fn schottky_artifact() -> Check {
    let cfg = config("reference.toml")?;
    let start = Instant::now();
    let a = schottky_search(&cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let fresh = &a.fresh_verification;
    Ok((
        a.passed && fresh.passed && a.size == SCHOTTKY_SIZE && secs < SCHOTTKY_SECS,
        format!(
            "{} elements, fresh verification on {} probes {}; {secs:.1}s (limit {SCHOTTKY_SECS}s)",
            a.size,
            fresh.probes,
            if fresh.passed { "passed" } else { "failed" }
        ),
    ))
}

/// Criteria 3 and 4 from one pivot-stats run without the decay fit.
fn pivot_steps() -> Result<(Value, f64), String> {
    let mut cfg = config("pivot.toml")?;
    cfg.suites.pivot.decay_trials = 0;
    let start = Instant::now();
    let s = suite(&cfg, Suite::PivotStats)?;
    Ok((s["step_stats"].clone(), start.elapsed().as_secs_f64()))
}

fn pivot_gain(stats: &Value, secs: f64) -> Check {
    let steps = stats["steps"].as_u64().unwrap_or(0) as usize;
    let (p, sigma) = (f(&stats["gain_frequency"])?, f(&stats["gain_sigma"])?);
    let bound = GAIN_TARGET - MC_SIGMAS * sigma;
    Ok((
        steps >= MIN_BLOCK_STEPS && p >= bound && secs < GAIN_SECS,
        format!("P(+1) = {p:.4} ≥ {bound:.4} over {steps} block steps; {secs:.1}s (limit {GAIN_SECS}s)"),
    ))
}

fn backtrack_tail(stats: &Value) -> Check {
    let (freq, sigma) = (floats(&stats["drop_frequency"])?, floats(&stats["drop_sigma"])?);
    let mut passed = freq.len() == 3;
    let mut parts = Vec::new();
    for j in 0..freq.len() {
        let bound = 10f64.powi(-(j as i32 + 1)) + MC_SIGMAS * sigma[j];
        passed &= freq[j] <= bound;
        parts.push(format!("j={j}: {:.5} ≤ {bound:.5}", freq[j]));
    }
    Ok((passed, parts.join(", ")))
}

fn pivoting() -> Check {
    let p = TreePreset::new(1, 3000).map_err(|e| e.to_string())?;
    let m = p.block_model(0.5).map_err(|e| e.to_string())?;
    let k = p.constants;
    let (mut times, mut min_adm, mut moves, mut changed) = (0, usize::MAX, 0, 0);
    let mut trial = 0;
    while times < PIVOTAL_TIMES {
        let tr = sample_trajectory(&m, m.block_len() * 50, SEED, trial);
        trial += 1;
        let mut w = TreeWalk::new(&m).map_err(|e| e.to_string())?;
        let run = w.run(&k, &tr).map_err(|e| e.to_string())?;
        let piv = run.pivots();
        for &i in piv.iter().step_by(10) {
            if times == PIVOTAL_TIMES {
                break;
            }
            times += 1;
            let adm = admissible_replacements(&mut w, &m, &k, &run, i).map_err(|e| e.to_string())?;
            min_adm = min_adm.min(adm.len());
            for &a in &adm {
                let pt = pivot_trajectory(&mut w, &m, &k, &tr, &run, i, a).map_err(|e| e.to_string())?;
                let cp = w.arena.checkpoint();
                let rerun = rerun_pivoted(&mut w, &k, &run, &pt, i).map_err(|e| e.to_string())?;
                changed += usize::from(rerun.pivots() != piv);
                moves += 1;
                w.arena.rollback(cp);
            }
        }
    }
    Ok((
        min_adm >= MIN_ADMISSIBLE && changed == 0,
        format!("{times} pivotal times, min admissible {min_adm} (need {MIN_ADMISSIBLE}), {changed} of {moves} replacements changed P"),
    ))
}

fn alignment() -> Check {
    let p = TreePreset::new(1, 3000).map_err(|e| e.to_string())?;
    let m = p.block_model(0.5).map_err(|e| e.to_string())?;
    let k = p.constants;
    let (mut points, mut product, mut growth, mut worst) = (0, 0, 0, 0f64);
    for trial in 0..ALIGNMENT_PATHS {
        let tr = sample_trajectory(&m, m.block_len() * ALIGNMENT_BLOCKS, SEED, trial);
        let mut w = TreeWalk::new(&m).map_err(|e| e.to_string())?;
        let mut run = w.run(&k, &tr).map_err(|e| e.to_string())?;
        let a = run.alignment(&w.arena, &k, tr.len()).map_err(|e| e.to_string())?;
        points += a.points;
        product += a.product_violations;
        growth += a.growth_violations;
        worst = worst.max(a.max_product);
    }
    Ok((
        product == 0 && growth == 0 && worst < k.f0,
        format!(
            "{ALIGNMENT_PATHS} paths of {ALIGNMENT_BLOCKS} blocks, {points} aligned points: {product} product and \
             {growth} growth violations, max product {worst} (F0 = {})",
            k.f0
        ),
    ))
}

fn decay() -> Check {
    let cfg = config("pivot.toml")?;
    let pc = &cfg.suites.pivot;
    let p = TreePreset::new(cfg.schottky.probe_seed, cfg.schottky.probe_count).map_err(|e| e.to_string())?;
    let m = p.block_model(pc.decay_alpha).map_err(|e| e.to_string())?;
    let grid_ok = pc.decay_ns.first() == Some(&DECAY_N_RANGE.0) && pc.decay_ns.last() == Some(&DECAY_N_RANGE.1);
    let d = pivot_decay(&m, &p.constants, &pc.decay_ns, pc.decay_trials, pc.decay_estimation_trials, cfg.run.seed)
        .map_err(|e| e.to_string())?;
    let ok = |fit: &pivotwalk::stats::LinearFit| fit.slope < 0.0 && fit.r2 >= DECAY_R2_MIN;
    Ok((
        grid_ok && ok(&d.p_fit) && ok(&d.q_fit),
        format!(
            "κ1 = {:.4}; P slope {:.3e} R² {:.3}, Q slope {:.3e} R² {:.3} (R² limit {DECAY_R2_MIN}) over n = {}..{}",
            d.kappa1, d.p_fit.slope, d.p_fit.r2, d.q_fit.slope, d.q_fit.r2, DECAY_N_RANGE.0, DECAY_N_RANGE.1
        ),
    ))
}

fn logdev() -> Check {
    let cfg = config("logdev.toml")?;
    let r = &suite(&cfg, Suite::Logdev)?["report"];
    let cps = ints(&r["checkpoints"])?;
    let change = doubling_change(&cps, &floats(&r["p99_running_ratio"])?, LOGDEV_N)?;
    let exceed = r["tau_exceeds_d"].as_u64().unwrap_or(u64::MAX);
    let shape = cfg.run.n == LOGDEV_N && cfg.run.trials == LOGDEV_PATHS;
    Ok((
        shape && change < DOUBLING_CHANGE_MAX && exceed == 0,
        format!(
            "p99 change {change:.4} between 2^15 and 2^16 (limit {DOUBLING_CHANGE_MAX}), {exceed} steps with τ > d, \
             {} paths",
            cfg.run.trials
        ),
    ))
}

fn clt() -> Check {
    let cfg = config("reference.toml")?;
    let start = Instant::now();
    let s = suite(&cfg, Suite::Clt)?;
    let secs = start.elapsed().as_secs_f64();
    let (kd, kt) = (f(&s["ks_displacement"])?, f(&s["ks_translation"])?);
    let shape = cfg.run.n == CLT_N && cfg.run.trials == CLT_TRIALS;
    Ok((
        shape && kd <= KS_MAX && kt <= KS_MAX && secs < CLT_SECS,
        format!("KS displacement {kd:.4}, translation {kt:.4} (limit {KS_MAX}); {secs:.1}s (limit {CLT_SECS}s)"),
    ))
}

fn converse() -> Check {
    let cfg = config("converse.toml")?;
    let s = suite(&cfg, Suite::Converse)?;
    let mut passed = true;
    let mut parts = Vec::new();
    for stat in ["fit_displacement", "fit_translation"] {
        let (h, c) = (f(&s["heavy_report"][stat]["slope"])?, f(&s["control_report"][stat]["slope"])?);
        passed &= h > 0.0 && h >= CONVERSE_RATIO * c.abs();
        parts.push(format!("{stat}: heavy {h:.3}, control {c:.3}"));
    }
    Ok((passed, format!("{} (ratio limit {CONVERSE_RATIO})", parts.join("; "))))
}

fn lil() -> Check {
    let cfg = config("lil.toml")?;
    let r = &suite(&cfg, Suite::Lil)?["report"];
    let sigma = f(&r["sigma"])?;
    let m = f(&r["mean_running_max"]["value"])?;
    let (lo, hi) = (LIL_WINDOW.0 * sigma, LIL_WINDOW.1 * sigma);
    let shape = cfg.run.n == LIL_N && cfg.run.trials == LIL_TRIALS;
    Ok((
        shape && (lo..=hi).contains(&m),
        format!("diagnostic: mean running max {m:.4} in [{lo:.4}, {hi:.4}] (σ̂ = {sigma:.4})"),
    ))
}

fn tracking() -> Check {
    let cfg = config("tracking.toml")?;
    let s = suite(&cfg, Suite::Tracking)?;
    let cps = ints(&s["checkpoints"])?;
    let last = *cps.last().ok_or("no checkpoints")?;
    let change = doubling_change(&cps, &floats(&s["p99_running_ratio"])?, last)?;
    let violations = s["quasi_geodesic_violations"].as_u64().unwrap_or(u64::MAX);
    let pairs = s["pairs_checked"].as_u64().unwrap_or(0);
    Ok((
        pairs > 0 && violations == 0 && change < DOUBLING_CHANGE_MAX,
        format!(
            "{violations} quasi-geodesic violations over {pairs} pairs; p99 change {change:.4} between {} and {last} \
             (limit {DOUBLING_CHANGE_MAX})",
            last / 2
        ),
    ))
}

fn report(id: usize, name: &str, check: Check) -> bool {
    let (passed, detail) = check.unwrap_or_else(|e| (false, format!("error: {e}")));
    println!("{} {id:>2} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    passed
}

fn main() -> ExitCode {
    let mut results = vec![report(1, "exactness", exactness()), report(2, "schottky-artifact", schottky_artifact())];
    match pivot_steps() {
        Ok((stats, secs)) => {
            results.push(report(3, "pivot-gain", pivot_gain(&stats, secs)));
            results.push(report(4, "backtrack-tail", backtrack_tail(&stats)));
        }
        Err(e) => {
            results.push(report(3, "pivot-gain", Err(e.clone())));
            results.push(report(4, "backtrack-tail", Err(e)));
        }
    }
    results.push(report(5, "pivoting", pivoting()));
    results.push(report(6, "alignment", alignment()));
    results.push(report(7, "pivot-decay", decay()));
    results.push(report(8, "log-deviation", logdev()));
    results.push(report(9, "clt", clt()));
    results.push(report(10, "converse", converse()));
    results.push(report(11, "lil", lil()));
    results.push(report(12, "tracking", tracking()));
    let failed = results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
