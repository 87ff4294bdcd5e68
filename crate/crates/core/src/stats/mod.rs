//! Estimators and limit-law diagnostics for displacement and translation
//! length, tracking of pivotal quasi-geodesics, and the dyadic
//! decomposition of the displacement.

mod dyadic;
mod experiments;
mod law;
mod pivot_stats;
mod tracking;

pub use dyadic::{dyadic_b_moments, dyadic_decompose, DyadicDecomposition, IDENTITY_TOLERANCE};
pub use experiments::{
    clt_samples, converse_diagnostic, deviation_probability_check, endpoint_samples, estimate_drift, estimate_variance,
    lil_experiment, lil_series, log_deviation_series, logdev_experiment, opposite_deviation_moment, CltReport,
    ConverseReport, DeviationReport, LilReport, LogDevReport, OppositeReport,
};
pub use law::{HeavyTailLaw, PathTracker, PlaneLaw, PlaneTracker, TreeLaw, WalkLaw, WordTracker};
pub use pivot_stats::{pivot_decay, pivot_history, pivot_step_stats, DecayReport, PivotStepStats};
pub use tracking::{tracking_experiment, tracking_series, TrackingReport, TrackingSummary};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::models::ModelError;
use crate::pivots::PivotError;
use crate::walk::WalkError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("path of length {got} is shorter than the required {need}")]
    PathTooShort { need: usize, got: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("fewer than two pivotal loci")]
    TooFewLoci,
    #[error(transparent)]
    Pivot(#[from] PivotError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// 95% normal-approximation z value.
pub const Z95: f64 = 1.959_963_984_540_054;

/// A point estimate with a 95% half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
    pub trials: usize,
}

impl Estimate {
    pub fn lower(&self) -> f64 {
        self.value - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.value + self.half_width
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn mean_ci(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let hw = if n > 1 { Z95 * (sample_variance(xs) / n as f64).sqrt() } else { f64::INFINITY };
    Estimate { value: mean(xs), half_width: hw, trials: n }
}

/// Sample variance with the asymptotic standard error `√((m₄ − s⁴)/n)`.
pub fn variance_ci(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let s2 = sample_variance(xs);
    let m = mean(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n as f64;
    let se = ((m4 - s2 * s2).max(0.0) / n as f64).sqrt();
    Estimate { value: s2, half_width: Z95 * se, trials: n }
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let h = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn iqr(xs: &[f64]) -> f64 {
    quantile(xs, 0.75) - quantile(xs, 0.25)
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit, StatsError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(StatsError::TooFewSamples { need: 2, got: x.len().min(y.len()) });
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(StatsError::Parameter("constant regressor".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r2 })
}

/// Kolmogorov–Smirnov distance between the empirical law of `xs` and
/// `N(mu, sd²)`.
pub fn ks_normal(xs: &[f64], mu: f64, sd: f64) -> Result<f64, StatsError> {
    let dist = Normal::new(mu, sd).map_err(|e| StatsError::Parameter(e.to_string()))?;
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        // Ties: the empirical CDF jumps once over the whole run.
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let f = dist.cdf(v[i]);
        d = d.max((f - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    Ok(d)
}

/// `LL n`: `log log n` for `n ≥ 3`, and 1 below that (including `n = 2`).
pub fn ll(n: u64) -> f64 {
    if n >= 3 {
        (n as f64).ln().ln()
    } else {
        1.0
    }
}

/// `α(n) = (2n LL n)^{1/2}`.
pub fn lil_alpha(n: u64) -> f64 {
    (2.0 * n as f64 * ll(n)).sqrt()
}

/// `β(n) = (n / LL n)^{1/2}`.
pub fn lil_beta(n: u64) -> f64 {
    (n as f64 / ll(n)).sqrt()
}

/// `per_octave` points per doubling from `2^lo` to `2^hi`, rounded and
/// deduplicated.
pub fn geometric_checkpoints(lo: u32, hi: u32, per_octave: u32) -> Vec<u64> {
    let mut out: Vec<u64> = (0..=(hi - lo) * per_octave)
        .map(|j| 2f64.powf(lo as f64 + j as f64 / per_octave as f64).round() as u64)
        .collect();
    out.dedup();
    out
}

/// Frequency with half a pseudo-count, so that zero counts stay finite on a
/// log scale.
pub fn smoothed_frequency(hits: usize, trials: usize) -> f64 {
    (hits as f64 + 0.5) / (trials as f64 + 1.0)
}

/// Named series and fits of one experiment, with its provenance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub experiment: String,
    pub seed: u64,
    pub model: String,
    pub n: usize,
    pub trials: usize,
    pub lambda_hat: Option<Estimate>,
    pub sigma_hat: Option<Estimate>,
    pub ks_displacement: Option<f64>,
    pub ks_translation: Option<f64>,
    pub lil_series: Vec<(u64, f64)>,
    pub logdev_series: Vec<(u64, f64)>,
    pub tracking_series: Vec<(u64, f64)>,
    pub decay_fits: BTreeMap<String, LinearFit>,
}
