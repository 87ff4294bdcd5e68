use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{quantile, StatsError};
use crate::geometry::GromovConstants;
use crate::models::{CayleyArena, FreeGroupWord, NodeId};
use crate::pivots::{PivotRun, TreeWalk};
use crate::walk::{sample_with, stream_rng, DecomposedModel, Stream};

/// The path `Γ = [x_0, x_1] ∪ [x_1, x_2] ∪ …` through the marked points, with
/// `x_0 = o`, stored as a vertex mask of the arena.
struct Gamma {
    xs: Vec<NodeId>,
    /// Cumulative arc length at each `x_i`.
    arc: Vec<u64>,
    mask: Vec<bool>,
}

impl Gamma {
    fn new(arena: &CayleyArena, xs: Vec<NodeId>) -> Self {
        let mut mask = vec![false; arena.len()];
        let mut arc = vec![0];
        mask[arena.root() as usize] = true;
        for w in xs.windows(2) {
            let l = arena.lca(w[0], w[1]);
            for mut v in [w[0], w[1]] {
                while v != l {
                    mask[v as usize] = true;
                    v = arena.parent(v);
                }
            }
            mask[l as usize] = true;
            arc.push(arc.last().expect("nonempty") + arena.distance_between(w[0], w[1]));
        }
        Self { xs, arc, mask }
    }

    /// `Γ` contains the root and is connected, so the nearest point of `Γ` is
    /// the lowest marked ancestor.
    fn distance(&self, arena: &CayleyArena, v: NodeId) -> u64 {
        let (mut lo, mut hi) = (0, arena.depth(v));
        // Marked ancestors form a prefix of the root path.
        if self.mask[v as usize] {
            return 0;
        }
        while lo + 1 < hi {
            let mid = (lo + hi) / 2;
            if self.mask[arena.ancestor_at_depth(v, mid) as usize] {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (arena.depth(v) - lo) as u64
    }

    fn length(&self) -> u64 {
        *self.arc.last().expect("nonempty")
    }

    fn point_at(&self, arena: &CayleyArena, s: u64) -> NodeId {
        let i = self.arc.partition_point(|&a| a <= s).clamp(1, self.xs.len().max(2) - 1) - 1;
        arena.point_on_geodesic(self.xs[i], self.xs[i + 1], s - self.arc[i])
    }
}

/// `Γ` from the eventual pivots `Q_n` (horizon `H`), their count, and the
/// time of the last marked point.
fn eventual_gamma(
    arena: &CayleyArena,
    run: &mut PivotRun<NodeId>,
    block_len: usize,
    n: usize,
    horizon: usize,
) -> Result<(Gamma, usize, usize), StatsError> {
    let q = run.eventual(arena, n, horizon)?.pivots;
    let Some(&last) = q.last() else { return Err(StatsError::TooFewLoci) };
    let mut xs = run.marked_points(&q, &run.positions()[0]);
    xs.pop();
    let end = (run.blocks()[last as usize - 1] - 1) * block_len + 4 * (block_len / 6);
    Ok((Gamma::new(arena, xs), q.len(), end))
}

/// `(k, d(ω_k o, Γ))` for `k = 0..=K`, where `Γ` joins `o` and the marked
/// points of the eventual pivots `Q_n` (horizon `H`), and `K` is the time
/// of the last marked point.
pub fn tracking_series(
    arena: &CayleyArena,
    run: &mut PivotRun<NodeId>,
    block_len: usize,
    n: usize,
    horizon: usize,
) -> Result<Vec<(u64, f64)>, StatsError> {
    let (gamma, _, end) = eventual_gamma(arena, run, block_len, n, horizon)?;
    Ok(series(arena, run, &gamma, end))
}

fn series(arena: &CayleyArena, run: &PivotRun<NodeId>, gamma: &Gamma, end: usize) -> Vec<(u64, f64)> {
    (0..=end).map(|k| (k as u64, gamma.distance(arena, run.positions()[k]) as f64)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    pub trial: u64,
    pub eventual_pivots: usize,
    /// Last time covered by `Γ`.
    pub covered: usize,
    /// `max_{k0 ≤ k ≤ c} d(ω_k o, Γ)/log k` at each checkpoint `c`.
    pub running_ratio: Vec<f64>,
    pub max_distance: f64,
    pub pairs_checked: usize,
    pub quasi_geodesic_violations: usize,
    /// Largest `arc − ((1 + 8F0/L0)·d + 2F0 + 2D3)` over checked pairs.
    pub max_excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingSummary {
    pub checkpoints: Vec<u64>,
    pub trials: usize,
    /// 99th percentile over trials of the running ratio at each checkpoint.
    pub p99_running_ratio: Vec<f64>,
    /// Relative change of the percentile across the last doubling.
    pub last_doubling_change: f64,
    pub pairs_checked: usize,
    pub quasi_geodesic_violations: usize,
    pub max_excess: f64,
    pub reports: Vec<TrackingReport>,
}

/// Tracking of sample paths by `Γ`. Each path has `2·cover` steps, `Γ` is
/// built from `Q_cover` with horizon `2·cover`, and the series must reach
/// the last checkpoint. Quasi-geodesicity is checked on all pairs of marked
/// points plus `pairs` random pairs of arc-length positions. The ratio
/// statistic starts at `k0` so that the first few steps, where `log k` is
/// tiny, do not dominate it.
#[allow(clippy::too_many_arguments)]
pub fn tracking_experiment(
    model: &DecomposedModel<FreeGroupWord>,
    k: &GromovConstants,
    cover: usize,
    k0: u64,
    checkpoints: &[u64],
    trials: usize,
    pairs: usize,
    seed: u64,
) -> Result<TrackingSummary, StatsError> {
    let Some(&c_max) = checkpoints.last() else {
        return Err(StatsError::Parameter("no checkpoints".into()));
    };
    if k0 < 2 || checkpoints[0] < k0 || c_max as usize >= cover {
        return Err(StatsError::Parameter("checkpoints must lie in [k0, cover) with k0 ≥ 2".into()));
    }
    let a = 1.0 + 8.0 * k.f0 / k.l0;
    let b = 2.0 * k.f0 + 2.0 * k.d3;
    let reports: Vec<TrackingReport> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let traj = sample_with(model, 2 * cover, seed, trial, Stream::Forward);
            let mut walk = TreeWalk::new(model)?;
            let mut run = walk.run(k, &traj)?;
            let arena = &walk.arena;
            let (gamma, eventual_pivots, end) = eventual_gamma(arena, &mut run, traj.block_len, cover, 2 * cover)?;
            let series = series(arena, &run, &gamma, end);
            if series.len() <= c_max as usize {
                return Err(StatsError::PathTooShort { need: c_max as usize, got: series.len() - 1 });
            }
            let mut running_ratio = Vec::with_capacity(checkpoints.len());
            let mut run_max: f64 = 0.0;
            let mut next = 0;
            for &(t, d) in &series[k0 as usize..] {
                run_max = run_max.max(d / (t as f64).ln());
                if next < checkpoints.len() && t == checkpoints[next] {
                    running_ratio.push(run_max);
                    next += 1;
                }
            }
            let mut rng = stream_rng(seed, Stream::Auxiliary, trial);
            let len = gamma.length();
            let mut checked = 0;
            let mut violations = 0;
            let mut max_excess = f64::NEG_INFINITY;
            let mut check = |s: u64, t: u64| {
                let (s, t) = (s.min(t), s.max(t));
                let d = arena.distance_between(gamma.point_at(arena, s), gamma.point_at(arena, t)) as f64;
                let excess = (t - s) as f64 - (a * d + b);
                checked += 1;
                max_excess = max_excess.max(excess);
                if excess > 0.0 {
                    violations += 1;
                }
            };
            for i in 0..gamma.arc.len() {
                for j in i + 1..gamma.arc.len() {
                    check(gamma.arc[i], gamma.arc[j]);
                }
            }
            for _ in 0..pairs {
                check(rng.random_range(0..=len), rng.random_range(0..=len));
            }
            Ok(TrackingReport {
                trial,
                eventual_pivots,
                covered: series.len() - 1,
                running_ratio,
                max_distance: series.iter().map(|s| s.1).fold(0.0, f64::max),
                pairs_checked: checked,
                quasi_geodesic_violations: violations,
                max_excess,
            })
        })
        .collect::<Result<_, StatsError>>()?;
    let p99: Vec<f64> = (0..checkpoints.len())
        .map(|j| quantile(&reports.iter().map(|r| r.running_ratio[j]).collect::<Vec<_>>(), 0.99))
        .collect();
    let half = checkpoints.iter().position(|&c| 2 * c >= c_max).unwrap_or(0);
    let last = *p99.last().expect("nonempty");
    Ok(TrackingSummary {
        checkpoints: checkpoints.to_vec(),
        trials,
        last_doubling_change: (last - p99[half]).abs() / p99[half],
        p99_running_ratio: p99,
        pairs_checked: reports.iter().map(|r| r.pairs_checked).sum(),
        quasi_geodesic_violations: reports.iter().map(|r| r.quasi_geodesic_violations).sum(),
        max_excess: reports.iter().map(|r| r.max_excess).fold(f64::NEG_INFINITY, f64::max),
        reports,
    })
}
