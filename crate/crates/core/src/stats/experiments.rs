use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    iqr, ks_normal, lil_alpha, linear_fit, mean_ci, quantile, smoothed_frequency, Estimate, LinearFit, PathTracker,
    StatsError, WalkLaw,
};
use crate::walk::{stream_rng, Stream};

/// Runs `n` steps of one trial, calling `f(k, ω_k)` after every step.
fn run_path<L: WalkLaw>(law: &L, n: u64, seed: u64, stream: Stream, trial: u64, mut f: impl FnMut(u64, &L::Tracker)) {
    let mut rng = stream_rng(seed, stream, trial);
    let mut t = law.start();
    for k in 1..=n {
        law.step(&mut rng, &mut t);
        f(k, &t);
    }
}

/// `(d(o, ω_n o), τ(ω_n))` per trial.
pub fn endpoint_samples<L: WalkLaw>(law: &L, n: u64, seed: u64, stream: Stream, trials: usize) -> Vec<(f64, f64)> {
    (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut out = (0.0, 0.0);
            run_path(law, n, seed, stream, trial, |k, t| {
                if k == n {
                    out = (t.displacement(), t.translation());
                }
            });
            out
        })
        .collect()
}

/// Mean of `d(o, ω_n o)/n`, on the estimation stream.
pub fn estimate_drift<L: WalkLaw>(law: &L, n: u64, trials: usize, seed: u64) -> Estimate {
    let xs: Vec<f64> =
        endpoint_samples(law, n, seed, Stream::Estimate, trials).iter().map(|s| s.0 / n as f64).collect();
    mean_ci(&xs)
}

/// Sample variance of `d(o, ω_n o)` divided by `n`, on the estimation stream.
pub fn estimate_variance<L: WalkLaw>(law: &L, n: u64, trials: usize, seed: u64) -> Estimate {
    let xs: Vec<f64> =
        endpoint_samples(law, n, seed, Stream::Estimate, trials).iter().map(|s| s.0 / (n as f64).sqrt()).collect();
    super::variance_ci(&xs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub n: u64,
    pub trials: usize,
    pub estimation_trials: usize,
    /// From the estimation stream.
    pub lambda: Estimate,
    /// `σ̂²` from the estimation stream.
    pub sigma2: Estimate,
    pub ks_displacement: f64,
    pub ks_translation: f64,
    /// `max |d − τ|/√n` over trials.
    pub max_pair_difference: f64,
    /// `10 log n / √n`.
    pub pair_bound: f64,
    pub displacement_samples: Vec<f64>,
    pub translation_samples: Vec<f64>,
}

/// Normalized displacement and translation length at time `n`, with
/// `λ̂, σ̂` taken from an independent block of trials.
pub fn clt_samples<L: WalkLaw>(
    law: &L,
    n: u64,
    trials: usize,
    estimation_trials: usize,
    seed: u64,
) -> Result<CltReport, StatsError> {
    if trials < 2 || estimation_trials < 2 {
        return Err(StatsError::TooFewSamples { need: 2, got: trials.min(estimation_trials) });
    }
    let lambda = estimate_drift(law, n, estimation_trials, seed);
    let sigma2 = estimate_variance(law, n, estimation_trials, seed);
    let sq = (n as f64).sqrt();
    let samples = endpoint_samples(law, n, seed, Stream::Forward, trials);
    let centre = n as f64 * lambda.value;
    let zd: Vec<f64> = samples.iter().map(|s| (s.0 - centre) / sq).collect();
    let zt: Vec<f64> = samples.iter().map(|s| (s.1 - centre) / sq).collect();
    let sd = sigma2.value.sqrt();
    Ok(CltReport {
        n,
        trials,
        estimation_trials,
        lambda,
        sigma2,
        ks_displacement: ks_normal(&zd, 0.0, sd)?,
        ks_translation: ks_normal(&zt, 0.0, sd)?,
        max_pair_difference: samples.iter().map(|s| (s.0 - s.1).abs() / sq).fold(0.0, f64::max),
        pair_bound: 10.0 * (n as f64).ln() / sq,
        displacement_samples: zd,
        translation_samples: zt,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConverseReport {
    pub ns: Vec<u64>,
    pub trials: usize,
    /// IQR of `(d − median)/√n` per `n`.
    pub iqr_displacement: Vec<f64>,
    pub iqr_translation: Vec<f64>,
    /// `log IQR` against `log n`.
    pub fit_displacement: LinearFit,
    pub fit_translation: LinearFit,
}

/// Spread of the √n-normalized statistics over a grid of `n`. A positive
/// log-log slope means the spread keeps growing, so no Gaussian limit.
pub fn converse_diagnostic<L: WalkLaw>(
    law: &L,
    ns: &[u64],
    trials: usize,
    seed: u64,
) -> Result<ConverseReport, StatsError> {
    if ns.len() < 2 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(StatsError::Parameter("n grid must be increasing with two points".into()));
    }
    let n_max = *ns.last().expect("nonempty");
    let per_trial: Vec<Vec<(f64, f64)>> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut out = Vec::with_capacity(ns.len());
            let mut next = 0;
            run_path(law, n_max, seed, Stream::Forward, trial, |k, t| {
                if next < ns.len() && k == ns[next] {
                    out.push((t.displacement(), t.translation()));
                    next += 1;
                }
            });
            out
        })
        .collect();
    let mut iqr_d = Vec::new();
    let mut iqr_t = Vec::new();
    for (j, &n) in ns.iter().enumerate() {
        let sq = (n as f64).sqrt();
        let d: Vec<f64> = per_trial.iter().map(|v| v[j].0 / sq).collect();
        let t: Vec<f64> = per_trial.iter().map(|v| v[j].1 / sq).collect();
        iqr_d.push(iqr(&d));
        iqr_t.push(iqr(&t));
    }
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ln = |v: &[f64]| v.iter().map(|a| a.ln()).collect::<Vec<_>>();
    Ok(ConverseReport {
        ns: ns.to_vec(),
        trials,
        fit_displacement: linear_fit(&x, &ln(&iqr_d))?,
        fit_translation: linear_fit(&x, &ln(&iqr_t))?,
        iqr_displacement: iqr_d,
        iqr_translation: iqr_t,
    })
}

/// `(n, |τ(ω_n) − d(o, ω_n o)|)` at the checkpoints of one trajectory.
/// The second value counts steps with `τ > d`.
pub fn log_deviation_series<L: WalkLaw>(
    law: &L,
    checkpoints: &[u64],
    seed: u64,
    trial: u64,
) -> (Vec<(u64, f64)>, usize) {
    let n_max = checkpoints.last().copied().unwrap_or(0);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut bad = 0;
    let mut next = 0;
    run_path(law, n_max, seed, Stream::Forward, trial, |k, t| {
        let (d, tau) = (t.displacement(), t.translation());
        if tau > d + 1e-9 * d.max(1.0) {
            bad += 1;
        }
        if next < checkpoints.len() && k == checkpoints[next] {
            out.push((k, (tau - d).abs()));
            next += 1;
        }
    });
    (out, bad)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogDevReport {
    pub checkpoints: Vec<u64>,
    pub trials: usize,
    /// 99th percentile over trials of `R(n) = max_{m ≤ n} |τ − d|(m)/log m`,
    /// the maximum taken over checkpoints.
    pub p99_running_ratio: Vec<f64>,
    pub max_ratio: f64,
    /// Steps with `τ > d`, over all trials.
    pub tau_exceeds_d: usize,
}

pub fn logdev_experiment<L: WalkLaw>(
    law: &L,
    checkpoints: &[u64],
    trials: usize,
    seed: u64,
) -> Result<LogDevReport, StatsError> {
    if checkpoints.first().is_none_or(|&c| c < 2) {
        return Err(StatsError::Parameter("checkpoints must start at n ≥ 2".into()));
    }
    let per: Vec<(Vec<f64>, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let (s, bad) = log_deviation_series(law, checkpoints, seed, trial);
            let mut run = 0.0f64;
            let r = s
                .iter()
                .map(|&(n, v)| {
                    run = run.max(v / (n as f64).ln());
                    run
                })
                .collect();
            (r, bad)
        })
        .collect();
    let p99 = (0..checkpoints.len()).map(|j| quantile(&per.iter().map(|p| p.0[j]).collect::<Vec<_>>(), 0.99)).collect();
    Ok(LogDevReport {
        checkpoints: checkpoints.to_vec(),
        trials,
        p99_running_ratio: p99,
        max_ratio: per.iter().flat_map(|p| p.0.last().copied()).fold(0.0, f64::max),
        tau_exceeds_d: per.iter().map(|p| p.1).sum(),
    })
}

/// `(n, (d(o, ω_n o) − λn)/α(n))` at `checkpoints`, with running maximum
/// and minimum over every step `n0 ≤ n` (not only checkpoints).
pub fn lil_series<L: WalkLaw>(
    law: &L,
    lambda: f64,
    n0: u64,
    checkpoints: &[u64],
    seed: u64,
    trial: u64,
) -> Vec<(u64, f64, f64, f64)> {
    let n_max = checkpoints.last().copied().unwrap_or(0);
    let mut out = Vec::with_capacity(checkpoints.len());
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut next = 0;
    run_path(law, n_max, seed, Stream::Forward, trial, |k, t| {
        let s = (t.displacement() - lambda * k as f64) / lil_alpha(k);
        if k >= n0 {
            hi = hi.max(s);
            lo = lo.min(s);
        }
        if next < checkpoints.len() && k == checkpoints[next] {
            out.push((k, s, hi, lo));
            next += 1;
        }
    });
    out
}

/// Per trial: running max, running min, running max of τ, tracking
/// violations and the running max at each checkpoint.
type LilTrial = (f64, f64, f64, usize, Vec<f64>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LilReport {
    pub n_max: u64,
    pub n0: u64,
    pub trials: usize,
    pub lambda: Estimate,
    pub sigma: f64,
    /// Mean over trials of `max_{n0 ≤ n ≤ N} (d − λ̂n)/α(n)`.
    pub mean_running_max: Estimate,
    /// Mean over trials of the running minimum.
    pub mean_running_min: Estimate,
    /// Same statistics for `τ(ω_n)`.
    pub mean_running_max_translation: Estimate,
    /// Steps where `|τ − d| > 10 log n`, i.e. the two normalized series
    /// differ by more than `10 log n/α(n)`.
    pub tracking_violations: usize,
    /// Mean running max at each checkpoint.
    pub series: Vec<(u64, f64)>,
}

/// Running extrema of the LIL-normalized displacement up to `n_max`.
pub fn lil_experiment<L: WalkLaw>(
    law: &L,
    n_max: u64,
    n0: u64,
    trials: usize,
    estimation_trials: usize,
    checkpoints: &[u64],
    seed: u64,
) -> Result<LilReport, StatsError> {
    if n0 < 3 || n0 >= n_max {
        return Err(StatsError::Parameter(format!("need 3 ≤ n0 < n_max, got n0 = {n0}")));
    }
    let lambda = estimate_drift(law, n_max, estimation_trials, seed);
    let sigma = estimate_variance(law, n_max, estimation_trials, seed).value.sqrt();
    let lam = lambda.value;
    let cps: Vec<u64> = checkpoints.iter().copied().filter(|&c| c <= n_max).collect();
    let per: Vec<(f64, f64, f64, usize, Vec<f64>)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let (mut hi, mut lo, mut hi_t) = (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            let mut bad = 0;
            let mut at = Vec::with_capacity(cps.len());
            let mut next = 0;
            run_path(law, n_max, seed, Stream::Forward, trial, |k, t| {
                let (d, tau) = (t.displacement(), t.translation());
                let a = lil_alpha(k);
                if k >= n0 {
                    hi = hi.max((d - lam * k as f64) / a);
                    lo = lo.min((d - lam * k as f64) / a);
                    hi_t = hi_t.max((tau - lam * k as f64) / a);
                    if (d - tau).abs() > 10.0 * (k as f64).ln() {
                        bad += 1;
                    }
                }
                if next < cps.len() && k == cps[next] {
                    at.push(hi);
                    next += 1;
                }
            });
            (hi, lo, hi_t, bad, at)
        })
        .collect();
    let col = |f: &dyn Fn(&LilTrial) -> f64| per.iter().map(f).collect::<Vec<_>>();
    let series =
        cps.iter().enumerate().filter(|(_, &c)| c >= n0).map(|(j, &c)| (c, super::mean(&col(&|p| p.4[j])))).collect();
    Ok(LilReport {
        n_max,
        n0,
        trials,
        lambda,
        sigma,
        mean_running_max: mean_ci(&col(&|p| p.0)),
        mean_running_min: mean_ci(&col(&|p| p.1)),
        mean_running_max_translation: mean_ci(&col(&|p| p.2)),
        tracking_violations: per.iter().map(|p| p.3).sum(),
        series,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub ks: Vec<u64>,
    pub horizons: Vec<u64>,
    pub trials: usize,
    pub hits: Vec<usize>,
    /// `(hits + ½)/(trials + 1)`.
    pub frequency: Vec<f64>,
    /// `log frequency` against `k`.
    pub fit: LinearFit,
}

/// Frequency of `sup_{k ≤ n ≤ H} (x, ω_n o)_o ≥ d(o, ω_k o)` with
/// `H = horizon_factor · k`.
pub fn deviation_probability_check<L: WalkLaw>(
    law: &L,
    x: &L::Tracker,
    ks: &[u64],
    horizon_factor: u64,
    trials: usize,
    seed: u64,
) -> Result<DeviationReport, StatsError> {
    if horizon_factor < 4 {
        return Err(StatsError::Parameter("horizon must be at least 4k".into()));
    }
    let horizons: Vec<u64> = ks.iter().map(|k| k * horizon_factor).collect();
    let h_max = horizons.iter().copied().max().unwrap_or(0);
    let hit_rows: Vec<Vec<bool>> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut d = vec![0.0; h_max as usize + 1];
            let mut p = vec![0.0; h_max as usize + 1];
            run_path(law, h_max, seed, Stream::Forward, trial, |k, t| {
                d[k as usize] = t.displacement();
                p[k as usize] = t.product_with(x);
            });
            ks.iter()
                .zip(&horizons)
                .map(|(&k, &h)| p[k as usize..=h as usize].iter().any(|&v| v >= d[k as usize]))
                .collect()
        })
        .collect();
    let hits: Vec<usize> = (0..ks.len()).map(|j| hit_rows.iter().filter(|r| r[j]).count()).collect();
    let frequency: Vec<f64> = hits.iter().map(|&h| smoothed_frequency(h, trials)).collect();
    let xk: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let ly: Vec<f64> = frequency.iter().map(|f| f.ln()).collect();
    Ok(DeviationReport { ks: ks.to_vec(), horizons, trials, hits, frequency, fit: linear_fit(&xk, &ly)? })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OppositeReport {
    pub p: f64,
    pub k_exp: f64,
    pub horizons: Vec<u64>,
    pub trials: usize,
    /// `E[max_{n ≤ H} (ω̌_n o, ω_n o)_o^{2p}]` per horizon.
    pub power_moment: Vec<Estimate>,
    /// `E[exp(K max_{n ≤ H} (ω̌_n o, ω_n o)_o)]` per horizon.
    pub exp_moment: Vec<Estimate>,
}

impl OppositeReport {
    /// Largest relative change of the power moment between consecutive horizons.
    pub fn max_relative_change(&self) -> f64 {
        self.power_moment.windows(2).map(|w| (w[1].value - w[0].value).abs() / w[0].value.abs()).fold(0.0, f64::max)
    }
}

/// Moments of the largest product between independent backward and
/// forward paths.
pub fn opposite_deviation_moment<L: WalkLaw>(
    law: &L,
    p: f64,
    k_exp: f64,
    horizons: &[u64],
    trials: usize,
    seed: u64,
) -> Result<OppositeReport, StatsError> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(StatsError::Parameter("horizons must be increasing".into()));
    }
    let back = law.reflected();
    let h_max = *horizons.last().expect("nonempty");
    let rows: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rf = stream_rng(seed, Stream::Forward, trial);
            let mut rb = stream_rng(seed, Stream::Backward, trial);
            let (mut f, mut b) = (law.start(), back.start());
            let mut best = 0.0f64;
            let mut out = Vec::with_capacity(horizons.len());
            let mut next = 0;
            for n in 1..=h_max {
                law.step(&mut rf, &mut f);
                back.step(&mut rb, &mut b);
                best = best.max(f.product_with(&b));
                if n == horizons[next] {
                    out.push(best);
                    next += 1;
                }
            }
            out
        })
        .collect();
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    Ok(OppositeReport {
        p,
        k_exp,
        horizons: horizons.to_vec(),
        trials,
        power_moment: (0..horizons.len())
            .map(|j| mean_ci(&col(j).iter().map(|m| m.powf(2.0 * p)).collect::<Vec<_>>()))
            .collect(),
        exp_moment: (0..horizons.len())
            .map(|j| mean_ci(&col(j).iter().map(|m| (k_exp * m).exp()).collect::<Vec<_>>()))
            .collect(),
    })
}
