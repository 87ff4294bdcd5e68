use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{linear_fit, mean_ci, smoothed_frequency, Estimate, LinearFit, StatsError};
use crate::geometry::GromovConstants;
use crate::models::FreeGroupWord;
use crate::pivots::{StepRecord, TreeWalk};
use crate::walk::{sample_with, DecomposedModel, Stream};

/// Backtrack depths tracked by [`PivotStepStats`]: `j = 0, 1, 2`.
pub const DROP_LEVELS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PivotStepStats {
    pub trials: usize,
    /// Committed steps counted (the last step of each path is excluded since
    /// its test point is the path end, not a fresh block).
    pub steps: usize,
    pub gains: usize,
    pub gain_frequency: f64,
    /// Binomial standard error of `gain_frequency`.
    pub gain_sigma: f64,
    /// Steps with `|P_{k+1}| < |P_k| − j`.
    pub drops: [usize; DROP_LEVELS],
    pub drop_frequency: [f64; DROP_LEVELS],
    pub drop_sigma: [f64; DROP_LEVELS],
    pub max_backtrack: u32,
}

fn binomial(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Committed step records of one sampled tree path.
pub fn pivot_history(
    model: &DecomposedModel<FreeGroupWord>,
    k: &GromovConstants,
    n: usize,
    seed: u64,
    stream: Stream,
    trial: u64,
) -> Result<Vec<StepRecord>, StatsError> {
    let traj = sample_with(model, n, seed, trial, stream);
    let mut walk = TreeWalk::new(model)?;
    Ok(walk.run(k, &traj)?.history().to_vec())
}

/// Gain and backtrack frequencies of the pivot construction over
/// `trials` paths of `n` steps.
pub fn pivot_step_stats(
    model: &DecomposedModel<FreeGroupWord>,
    k: &GromovConstants,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<PivotStepStats, StatsError> {
    let histories: Vec<Vec<StepRecord>> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| pivot_history(model, k, n, seed, Stream::Forward, trial))
        .collect::<Result<_, _>>()?;
    let mut steps = 0;
    let mut gains = 0;
    let mut drops = [0; DROP_LEVELS];
    let mut max_backtrack = 0;
    for h in &histories {
        for r in &h[..h.len().saturating_sub(1)] {
            steps += 1;
            if r.increment == 1 {
                gains += 1;
            }
            for (j, d) in drops.iter_mut().enumerate() {
                if r.increment < -(j as i64) {
                    *d += 1;
                }
            }
            max_backtrack = max_backtrack.max(r.backtrack_depth());
        }
    }
    if steps == 0 {
        return Err(StatsError::TooFewSamples { need: 1, got: 0 });
    }
    let (gain_frequency, gain_sigma) = binomial(gains, steps);
    let mut drop_frequency = [0.0; DROP_LEVELS];
    let mut drop_sigma = [0.0; DROP_LEVELS];
    for j in 0..DROP_LEVELS {
        (drop_frequency[j], drop_sigma[j]) = binomial(drops[j], steps);
    }
    Ok(PivotStepStats {
        trials,
        steps,
        gains,
        gain_frequency,
        gain_sigma,
        drops,
        drop_frequency,
        drop_sigma,
        max_backtrack,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub ns: Vec<usize>,
    pub trials: usize,
    /// `|P_N|/N` at the largest `N`, from the estimation stream.
    pub density: Estimate,
    pub kappa1: f64,
    pub p_hits: Vec<usize>,
    pub q_hits: Vec<usize>,
    pub p_frequency: Vec<f64>,
    pub q_frequency: Vec<f64>,
    /// `log frequency` against `n`.
    pub p_fit: LinearFit,
    pub q_fit: LinearFit,
}

/// `P(|P_n| ≤ κ1 n)` and `P(|Q_n| ≤ κ1 n)` over the grid `ns`, with
/// `κ1` half the estimated pivot density and `Q_n` taken with horizon `2n`.
pub fn pivot_decay(
    model: &DecomposedModel<FreeGroupWord>,
    k: &GromovConstants,
    ns: &[usize],
    trials: usize,
    estimation_trials: usize,
    seed: u64,
) -> Result<DecayReport, StatsError> {
    if ns.len() < 2 || ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(StatsError::Parameter("n grid must be positive, increasing, with two points".into()));
    }
    let n_max = *ns.last().expect("nonempty");
    let dens: Vec<f64> = (0..estimation_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let traj = sample_with(model, n_max, seed, trial, Stream::Estimate);
            let mut walk = TreeWalk::new(model)?;
            let run = walk.run(k, &traj)?;
            Ok(run.final_state().size as f64 / n_max as f64)
        })
        .collect::<Result<_, StatsError>>()?;
    let density = mean_ci(&dens);
    let kappa1 = density.value / 2.0;
    let rows: Vec<(Vec<bool>, Vec<bool>)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let traj = sample_with(model, 2 * n_max, seed, trial, Stream::Forward);
            let mut walk = TreeWalk::new(model)?;
            let mut run = walk.run(k, &traj)?;
            let arena = &walk.arena;
            let mut p = Vec::with_capacity(ns.len());
            let mut q = Vec::with_capacity(ns.len());
            for &n in ns {
                let bound = kappa1 * n as f64;
                p.push(run.state_at(arena, n)?.size as f64 <= bound);
                q.push(run.eventual(arena, n, 2 * n)?.pivots.len() as f64 <= bound);
            }
            Ok((p, q))
        })
        .collect::<Result<_, StatsError>>()?;
    let count = |eventual: bool| {
        (0..ns.len())
            .map(|j| rows.iter().filter(|(p, q)| if eventual { q[j] } else { p[j] }).count())
            .collect::<Vec<_>>()
    };
    let (p_hits, q_hits) = (count(false), count(true));
    let freq = |h: &[usize]| h.iter().map(|&c| smoothed_frequency(c, trials)).collect::<Vec<_>>();
    let (p_frequency, q_frequency) = (freq(&p_hits), freq(&q_hits));
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let ln = |v: &[f64]| v.iter().map(|f| f.ln()).collect::<Vec<_>>();
    Ok(DecayReport {
        ns: ns.to_vec(),
        trials,
        density,
        kappa1,
        p_fit: linear_fit(&x, &ln(&p_frequency))?,
        q_fit: linear_fit(&x, &ln(&q_frequency))?,
        p_hits,
        q_hits,
        p_frequency,
        q_frequency,
    })
}
