use serde::{Deserialize, Serialize};

use super::{mean_ci, Estimate, StatsError};
use crate::geometry::{gromov_product, Metric};

/// Largest accepted residual of the dyadic identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-6;

/// Dyadic increments of a path sampled every `M = 2^m` steps.
///
/// Level `k` has cells `i = 1..=2^{k_max−k}`, stored 0-based:
/// `y[k][i−1] = d(ω_{2ᵏM(i−1)} o, ω_{2ᵏM i} o)` and
/// `b[k][i−1] = (ω_{2ᵏM(i−1)} o, ω_{2ᵏM(i+1)} o)_{ω_{2ᵏM i} o}` for every `i`
/// with `2ᵏM(i+1)` inside the sampled range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicDecomposition {
    pub m: u32,
    pub k_max: u32,
    pub y: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    /// Largest `|Y_{k+1,i} − Y_{k,2i−1} − Y_{k,2i} + 2b_{k,2i−1}|`.
    pub identity_residual: f64,
    /// Largest residual of `Y_{k,1} = Σ_i Y_{0,i} − 2 Σ_{t<k} Σ_i b_{t,2i−1}`,
    /// summed directly.
    pub telescoping_residual: f64,
}

impl DyadicDecomposition {
    pub fn block(&self) -> u64 {
        1 << self.m
    }
}

/// Decomposes `positions = ω_0 o, …, ω_L o` with `L ≥ 2^{k_max + m}`.
pub fn dyadic_decompose<M: Metric + ?Sized>(
    metric: &M,
    positions: &[M::Point],
    m: u32,
    k_max: u32,
) -> Result<DyadicDecomposition, StatsError> {
    let need =
        1usize.checked_shl(k_max + m).ok_or_else(|| StatsError::Parameter(format!("2^{} overflows", k_max + m)))?;
    if positions.len() < need + 1 {
        return Err(StatsError::PathTooShort { need, got: positions.len().saturating_sub(1) });
    }
    let at = |k: u32, i: usize| &positions[(i << (k + m)).min(need)];
    let mut y = Vec::with_capacity(k_max as usize + 1);
    let mut b = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        let cells = 1usize << (k_max - k);
        y.push((1..=cells).map(|i| metric.distance(at(k, i - 1), at(k, i))).collect::<Vec<_>>());
        b.push((1..cells).map(|i| gromov_product(metric, at(k, i), at(k, i - 1), at(k, i + 1))).collect::<Vec<_>>());
    }
    let mut identity_residual: f64 = 0.0;
    for k in 0..k_max as usize {
        for i in 0..y[k + 1].len() {
            let r = y[k + 1][i] - y[k][2 * i] - y[k][2 * i + 1] + 2.0 * b[k][2 * i];
            identity_residual = identity_residual.max(r.abs());
        }
    }
    // Y_{k,1} = Σ_{i ≤ 2ᵏ} Y_{0,i} − 2 Σ_{t<k} Σ_{i ≤ 2^{k−t−1}} b_{t,2i−1}.
    let mut telescoping_residual: f64 = 0.0;
    for k in 0..=k_max as usize {
        let base: f64 = y[0][..1 << k].iter().sum();
        let removed: f64 = (0..k).map(|t| b[t].iter().step_by(2).take(1 << (k - t - 1)).sum::<f64>()).sum();
        telescoping_residual = telescoping_residual.max((y[k][0] - (base - 2.0 * removed)).abs());
    }
    let base: f64 = y[0].iter().sum();
    let scale = 1.0f64.max(base.abs());
    if identity_residual > IDENTITY_TOLERANCE * scale || telescoping_residual > IDENTITY_TOLERANCE * scale {
        return Err(StatsError::Parameter(format!(
            "dyadic identity residual {identity_residual}, telescoping residual {telescoping_residual}"
        )));
    }
    Ok(DyadicDecomposition { m, k_max, y, b, identity_residual, telescoping_residual })
}

/// `E[b_{k,i}⁴]` per level `k < k_max`, pooling every cell of every path.
pub fn dyadic_b_moments(decomps: &[DyadicDecomposition]) -> Result<Vec<Estimate>, StatsError> {
    let Some(first) = decomps.first() else {
        return Err(StatsError::TooFewSamples { need: 1, got: 0 });
    };
    if decomps.iter().any(|d| d.k_max != first.k_max || d.m != first.m) {
        return Err(StatsError::Parameter("decompositions have different shapes".into()));
    }
    Ok((0..first.k_max as usize)
        .map(|k| {
            let xs: Vec<f64> = decomps.iter().flat_map(|d| d.b[k].iter().map(|v| v.powi(4))).collect();
            mean_ci(&xs)
        })
        .collect())
}
