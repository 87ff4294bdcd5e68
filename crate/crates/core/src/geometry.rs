//! Gromov-product algebra and the witnessing, gluing, alignment and marking
//! predicates for δ-hyperbolic spaces.
//!
//! Everything here only needs distances. Points are ordered pairs of the
//! underlying metric; no geodesics are constructed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A metric space with a hyperbolicity constant.
pub trait Metric {
    type Point: Clone + std::fmt::Debug;

    fn distance(&self, x: &Self::Point, y: &Self::Point) -> f64;

    fn delta(&self) -> f64;

    /// Margin for strict inequalities: `v < b` is evaluated as `v < b - slack`.
    /// Zero for exact models.
    fn slack(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("empty witness chain")]
    EmptyChain,
    #[error("empty gamma list")]
    EmptyGammas,
    #[error("chain length mismatch: {gammas} gammas against {etas} etas")]
    LengthMismatch { gammas: usize, etas: usize },
    #[error("invalid constant {name} = {value}")]
    InvalidConstant { name: &'static str, value: f64 },
    #[error("constants ladder violated: {0}")]
    Ladder(String),
}

/// `(y, z)_x = ½[d(x,y) + d(x,z) − d(y,z)]`.
pub fn gromov_product<M: Metric + ?Sized>(m: &M, x: &M::Point, y: &M::Point, z: &M::Point) -> f64 {
    0.5 * (m.distance(x, y) + m.distance(x, z) - m.distance(y, z))
}

/// Strict comparison honoring the model slack.
pub fn strictly_below<M: Metric + ?Sized>(m: &M, value: f64, bound: f64) -> bool {
    value < bound - m.slack()
}

pub fn same_point<M: Metric + ?Sized>(m: &M, x: &M::Point, y: &M::Point) -> bool {
    m.distance(x, y) <= m.slack()
}

/// True iff `(x,y)_w ≥ min{(x,z)_w, (y,z)_w} − delta`.
pub fn check_four_point<M: Metric + ?Sized>(
    m: &M,
    x: &M::Point,
    y: &M::Point,
    z: &M::Point,
    w: &M::Point,
    delta: f64,
) -> bool {
    let xy = gromov_product(m, w, x, y);
    let xz = gromov_product(m, w, x, z);
    let yz = gromov_product(m, w, y, z);
    xy >= xz.min(yz) - delta - m.slack()
}

/// Largest four-point defect over the 3 pairings of a quadruple; the smallest
/// δ for which the quadruple satisfies the condition at every basepoint choice.
pub fn four_point_defect<M: Metric + ?Sized>(m: &M, pts: [&M::Point; 4]) -> f64 {
    let mut worst = 0.0f64;
    for w in 0..4 {
        let rest: Vec<usize> = (0..4).filter(|&i| i != w).collect();
        for (a, b, c) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
            let (x, y, z) = (pts[rest[a]], pts[rest[b]], pts[rest[c]]);
            let xy = gromov_product(m, pts[w], x, y);
            let xz = gromov_product(m, pts[w], x, z);
            let yz = gromov_product(m, pts[w], y, z);
            worst = worst.max(xz.min(yz) - xy);
        }
    }
    worst
}

/// An ordered pair of points, written `[initial, terminal]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment<P> {
    pub initial: P,
    pub terminal: P,
}

impl<P: Clone> Segment<P> {
    pub fn new(initial: P, terminal: P) -> Self {
        Self { initial, terminal }
    }

    pub fn reversed(&self) -> Self {
        Self::new(self.terminal.clone(), self.initial.clone())
    }

    pub fn length<M: Metric<Point = P> + ?Sized>(&self, m: &M) -> f64 {
        m.distance(&self.initial, &self.terminal)
    }
}

/// `(γ, z)_*` for `γ = [x, y]`, i.e. `(y, z)_x`.
pub fn segment_product<M: Metric + ?Sized>(m: &M, seg: &Segment<M::Point>, z: &M::Point) -> f64 {
    gromov_product(m, &seg.initial, &seg.terminal, z)
}

/// D-witnessing of `seg = [x, y]` by `chain = ([x_i, y_i])`.
pub fn is_witnessed<M: Metric + ?Sized>(
    m: &M,
    seg: &Segment<M::Point>,
    chain: &[Segment<M::Point>],
    d: f64,
) -> Result<bool, GeometryError> {
    let refs: Vec<&Segment<M::Point>> = chain.iter().collect();
    witnessed_refs(m, &seg.initial, &seg.terminal, &refs, d)
}

fn witnessed_refs<M: Metric + ?Sized>(
    m: &M,
    x: &M::Point,
    y: &M::Point,
    chain: &[&Segment<M::Point>],
    d: f64,
) -> Result<bool, GeometryError> {
    if chain.is_empty() {
        return Err(GeometryError::EmptyChain);
    }
    let n = chain.len();
    let xs = |i: usize| -> &M::Point {
        match i {
            0 => x,
            i if i == n + 1 => y,
            i => &chain[i - 1].initial,
        }
    };
    let ys = |i: usize| -> &M::Point {
        match i {
            0 => x,
            i if i == n + 1 => y,
            i => &chain[i - 1].terminal,
        }
    };
    let lt = |v: f64| strictly_below(m, v, d);
    for i in 1..=n {
        let ok = lt(gromov_product(m, xs(i), xs(i - 1), xs(i + 1)))
            && lt(gromov_product(m, ys(i), ys(i - 1), ys(i + 1)))
            && lt(gromov_product(m, xs(i), ys(i - 1), ys(i)))
            && lt(gromov_product(m, ys(i), xs(i), xs(i + 1)));
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// C-gluing: shared initial point and `(γ₁, γ₂)_* < C`.
pub fn is_glued<M: Metric + ?Sized>(m: &M, g1: &Segment<M::Point>, g2: &Segment<M::Point>, c: f64) -> bool {
    same_point(m, &g1.initial, &g2.initial)
        && strictly_below(m, gromov_product(m, &g1.initial, &g1.terminal, &g2.terminal), c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Alignment<P> {
    pub aligned: bool,
    /// Gluing loci `p_i`; empty unless aligned.
    pub loci: Vec<P>,
}

/// Shared core of alignment and the three marking variants. `gammas[i]` or
/// `etas[i]` may be absent at the ends of a marked chain.
fn aligned_core<M: Metric + ?Sized>(
    m: &M,
    gammas: &[Option<&Segment<M::Point>>],
    etas: &[Option<&Segment<M::Point>>],
    c: f64,
    d: f64,
) -> Result<Option<Vec<M::Point>>, GeometryError> {
    debug_assert_eq!(gammas.len(), etas.len());
    let mut loci = Vec::with_capacity(gammas.len());
    for (i, (g, e)) in gammas.iter().zip(etas).enumerate() {
        let p = match (g, e) {
            (Some(g), Some(e)) => {
                if !is_glued(m, g, &e.reversed(), c) {
                    return Ok(None);
                }
                g.initial.clone()
            }
            (Some(g), None) => g.initial.clone(),
            (None, Some(e)) => e.terminal.clone(),
            (None, None) => return Err(GeometryError::EmptyGammas),
        };
        if i > 0 {
            let (Some(prev), Some(eta)) = (gammas[i - 1], etas[i]) else {
                return Ok(None);
            };
            if !witnessed_refs(m, &loci[i - 1], &p, &[prev, eta], d)? {
                return Ok(None);
            }
        }
        loci.push(p);
    }
    Ok(Some(loci))
}

/// (C, D)-alignment of `(γ_i)` and `(η_i)`.
pub fn is_aligned<M: Metric + ?Sized>(
    m: &M,
    gammas: &[Segment<M::Point>],
    etas: &[Segment<M::Point>],
    c: f64,
    d: f64,
) -> Result<Alignment<M::Point>, GeometryError> {
    if gammas.len() != etas.len() {
        return Err(GeometryError::LengthMismatch { gammas: gammas.len(), etas: etas.len() });
    }
    if gammas.is_empty() {
        return Err(GeometryError::EmptyGammas);
    }
    let g: Vec<_> = gammas.iter().map(Some).collect();
    let e: Vec<_> = etas.iter().map(Some).collect();
    Ok(match aligned_core(m, &g, &e, c, d)? {
        Some(loci) => Alignment { aligned: true, loci },
        None => Alignment { aligned: false, loci: Vec::new() },
    })
}

/// Head marking of `seg = [p_1, y]` by `γ_1..γ_N` and `η_2..η_N`.
pub fn is_head_marked<M: Metric + ?Sized>(
    m: &M,
    seg: &Segment<M::Point>,
    gammas: &[Segment<M::Point>],
    etas: &[Segment<M::Point>],
    c: f64,
    d: f64,
) -> Result<bool, GeometryError> {
    if gammas.is_empty() {
        return Err(GeometryError::EmptyGammas);
    }
    if etas.len() + 1 != gammas.len() {
        return Err(GeometryError::LengthMismatch { gammas: gammas.len(), etas: etas.len() });
    }
    let g: Vec<_> = gammas.iter().map(Some).collect();
    let e: Vec<_> = std::iter::once(None).chain(etas.iter().map(Some)).collect();
    let Some(loci) = aligned_core(m, &g, &e, c, d)? else {
        return Ok(false);
    };
    let last = gammas.last().expect("nonempty");
    Ok(same_point(m, &seg.initial, &loci[0])
        && strictly_below(m, segment_product(m, &last.reversed(), &seg.terminal), c))
}

/// Tail marking of `seg = [x, p_N]` by `γ_1..γ_{N−1}` and `η_1..η_N`.
pub fn is_tail_marked<M: Metric + ?Sized>(
    m: &M,
    seg: &Segment<M::Point>,
    gammas: &[Segment<M::Point>],
    etas: &[Segment<M::Point>],
    c: f64,
    d: f64,
) -> Result<bool, GeometryError> {
    if etas.is_empty() {
        return Err(GeometryError::EmptyGammas);
    }
    if gammas.len() + 1 != etas.len() {
        return Err(GeometryError::LengthMismatch { gammas: gammas.len(), etas: etas.len() });
    }
    let g: Vec<_> = gammas.iter().map(Some).chain(std::iter::once(None)).collect();
    let e: Vec<_> = etas.iter().map(Some).collect();
    let Some(loci) = aligned_core(m, &g, &e, c, d)? else {
        return Ok(false);
    };
    Ok(same_point(m, &seg.terminal, loci.last().expect("nonempty"))
        && strictly_below(m, segment_product(m, &etas[0], &seg.initial), c))
}

/// Full marking of `seg = [p_1, p_N]` by `γ_1..γ_{N−1}` and `η_2..η_N`.
pub fn is_fully_marked<M: Metric + ?Sized>(
    m: &M,
    seg: &Segment<M::Point>,
    gammas: &[Segment<M::Point>],
    etas: &[Segment<M::Point>],
    c: f64,
    d: f64,
) -> Result<bool, GeometryError> {
    if gammas.is_empty() {
        return Err(GeometryError::EmptyGammas);
    }
    if gammas.len() != etas.len() {
        return Err(GeometryError::LengthMismatch { gammas: gammas.len(), etas: etas.len() });
    }
    let g: Vec<_> = gammas.iter().map(Some).chain(std::iter::once(None)).collect();
    let e: Vec<_> = std::iter::once(None).chain(etas.iter().map(Some)).collect();
    let Some(loci) = aligned_core(m, &g, &e, c, d)? else {
        return Ok(false);
    };
    Ok(same_point(m, &seg.initial, &loci[0]) && same_point(m, &seg.terminal, loci.last().expect("nonempty")))
}

/// Pairwise distances of a point sequence, for repeated product queries.
#[derive(Clone, Debug)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new<M: Metric + ?Sized>(m: &M, points: &[M::Point]) -> Self {
        let n = points.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = m.distance(&points[i], &points[j]);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self { n, d }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    /// `(p_i, p_k)_{p_j}`.
    pub fn product(&self, j: usize, i: usize, k: usize) -> f64 {
        0.5 * (self.dist(j, i) + self.dist(j, k) - self.dist(i, k))
    }

    /// Maximum of `(p_i, p_k)_{p_j}` over `i < j < k`, with its argmax.
    pub fn max_middle_product(&self) -> (f64, Option<(usize, usize, usize)>) {
        let mut best = (0.0, None);
        for j in 1..self.n.saturating_sub(1) {
            for i in 0..j {
                for k in j + 1..self.n {
                    let v = self.product(j, i, k);
                    if best.1.is_none() || v > best.0 {
                        best = (v, Some((i, j, k)));
                    }
                }
            }
        }
        best
    }
}

/// Maximum of `(p_i, p_k)_{p_j}` over ordered triples `i < j < k`; 0 for
/// fewer than 3 points.
pub fn chain_product_bound<M: Metric + ?Sized>(m: &M, points: &[M::Point]) -> f64 {
    DistanceMatrix::new(m, points).max_middle_product().0
}

/// The constants used by the pivotal-time construction, derived from δ and
/// the Schottky constant `C0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GromovConstants {
    pub delta: f64,
    pub c0: f64,
    pub d0: f64,
    pub e0: f64,
    pub f0: f64,
    pub g0: f64,
    pub d3: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l0: f64,
}

impl GromovConstants {
    /// Builds the ladder with the smallest admissible `L0`.
    pub fn new(delta: f64, c0: f64) -> Result<Self, GeometryError> {
        for (name, value) in [("delta", delta), ("C0", c0)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(GeometryError::InvalidConstant { name, value });
            }
        }
        // Far-segment witnessing needs C+δ+1, gluing needs 2C.
        let d0 = (c0 + delta + 1.0).max(2.0 * c0);
        let e0 = d0 + 4.0 * delta;
        let f0 = 2.0 * e0 + 3.0 * delta;
        let d3 = 2.0 * f0;
        // Schottky chains are checked with F = 2F0.
        let g0 = 3.0 * (2.0 * f0) + 2.0 * delta;
        let l1 = 4.0 * d0 + 6.0 * delta + 1.0;
        let l2 = 2.0 * e0 + 6.0 * delta + 1.0;
        let l3 = 4.0 * (2.0 * f0) + 3.0 * delta + 1.0;
        let mut k = Self { delta, c0, d0, e0, f0, g0, d3, l1, l2, l3, l0: 0.0 };
        k.l0 = k.min_l0();
        Ok(k)
    }

    /// Same ladder with a larger length threshold.
    pub fn with_l0(mut self, l0: f64) -> Result<Self, GeometryError> {
        self.l0 = l0;
        self.validate()?;
        Ok(self)
    }

    pub fn min_l0(&self) -> f64 {
        let chain = 16.0 * self.d0 + 8.0 * self.f0 + 2.0 * self.g0 + 16.0 * self.delta + 2.0;
        [self.l1, self.l2, self.l3, chain, 16.0 * self.d3].into_iter().fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let expect = Self::new(self.delta, self.c0)?;
        let pairs = [
            ("D0", self.d0, expect.d0),
            ("E0", self.e0, expect.e0),
            ("F0", self.f0, expect.f0),
            ("G0", self.g0, expect.g0),
            ("D3", self.d3, expect.d3),
            ("L1", self.l1, expect.l1),
            ("L2", self.l2, expect.l2),
            ("L3", self.l3, expect.l3),
        ];
        for (name, got, want) in pairs {
            if got != want {
                return Err(GeometryError::Ladder(format!("{name} = {got}, expected {want}")));
            }
        }
        if !(self.l0 >= expect.l0) {
            return Err(GeometryError::Ladder(format!("L0 = {} below the threshold {}", self.l0, expect.l0)));
        }
        Ok(())
    }

    /// Multiplicative and additive constants of the pivot quasi-geodesic.
    pub fn quasi_geodesic(&self) -> (f64, f64) {
        (1.0 + 8.0 * self.f0 / self.l0, 2.0 * self.f0 + 2.0 * self.d3)
    }
}

/// `|t^p − s^p|` upper bound for `t, s ≥ 0`: `|t−s|^p` when `p ≤ 1`,
/// `2^p (|t−s|^p + s^{p−1}|t−s|)` otherwise.
pub fn power_difference_bound(t: f64, s: f64, p: f64) -> f64 {
    let h = (t - s).abs();
    if p <= 1.0 {
        h.powf(p)
    } else {
        2f64.powf(p) * (h.powf(p) + s.powf(p - 1.0) * h)
    }
}
