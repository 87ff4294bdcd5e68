use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{IsometryKind, ModelError, SpaceModel};
use crate::geometry::Metric;

/// Hyperbolicity constant used for the plane. The sharp four-point constant
/// is ln 2; this leaves a margin for rounding.
pub const PLANE_DELTA: f64 = 0.7;

const TOL: f64 = 1e-9;
const RENORMALIZE_SCALE: f64 = 1e8;

/// An element of SL(2, R) acting by `z ↦ (az + b)/(cz + d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moebius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Moebius {
    pub const IDENTITY: Self = Self { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, ModelError> {
        let m = Self { a, b, c, d };
        if (m.det() - 1.0).abs() > TOL {
            return Err(ModelError::Determinant(m.det()));
        }
        Ok(m)
    }

    /// Rescales a matrix of positive determinant into SL(2, R).
    pub fn normalized(a: f64, b: f64, c: f64, d: f64) -> Result<Self, ModelError> {
        let det = a * d - b * c;
        if !(det > 0.0 && det.is_finite()) {
            return Err(ModelError::Determinant(det));
        }
        let s = det.sqrt();
        Ok(Self { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn mul(&self, o: &Self) -> Self {
        let a = self.a * o.a + self.b * o.c;
        let b = self.a * o.b + self.b * o.d;
        let c = self.c * o.a + self.d * o.c;
        let d = self.c * o.b + self.d * o.d;
        // Once a·d reaches ~1e8, a·d − b·c carries visible rounding and rescaling by
        // it would do more harm than the drift it corrects.
        let det = a * d - b * c;
        let scale = (a * d).abs() + (b * c).abs();
        if scale < RENORMALIZE_SCALE && det > 0.0 {
            let s = det.sqrt();
            Self { a: a / s, b: b / s, c: c / s, d: d / s }
        } else {
            Self { a, b, c, d }
        }
    }

    /// `|det − 1|` relative to the size of the products it is computed from.
    /// Entries are rescaled first so that huge powers do not overflow.
    pub fn det_error(&self) -> f64 {
        let m = [self.a, self.b, self.c, self.d].into_iter().map(f64::abs).fold(1.0, f64::max);
        let (a, b, c, d) = (self.a / m, self.b / m, self.c / m, self.d / m);
        let unit = 1.0 / (m * m);
        let scale = (a * d).abs() + (b * c).abs();
        ((a * d - b * c) - unit).abs() / scale.max(unit)
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// `(az + b)/(cz + d)`, with the imaginary part taken as
    /// `Im z / |cz + d|²` so that it stays positive far from `i`, where the
    /// complex quotient rounds it to either sign.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        let den = z * self.c + self.d;
        let q = (z * self.a + self.b) / den;
        Complex64::new(q.re, z.im / den.norm_sqr())
    }

    /// Fixed points on the boundary `R ∪ {∞}`; `None` stands for ∞.
    pub fn boundary_fixed_points(&self) -> Vec<Option<f64>> {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        if c.abs() <= TOL * (a.abs() + d.abs()).max(1.0) {
            let mut v = vec![None];
            if (d - a).abs() > TOL {
                v.push(Some(b / (d - a)));
            }
            return v;
        }
        // c z² + (d − a) z − b = 0
        let disc = (d - a) * (d - a) + 4.0 * b * c;
        if disc < -TOL {
            return Vec::new();
        }
        let r = disc.max(0.0).sqrt();
        let mut v = vec![Some((a - d + r) / (2.0 * c)), Some((a - d - r) / (2.0 * c))];
        if r <= TOL {
            v.pop();
        }
        v
    }
}

/// The upper half plane with basepoint `i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicPlane;

impl HyperbolicPlane {
    pub fn point(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }
}

impl Metric for HyperbolicPlane {
    type Point = Complex64;

    fn distance(&self, z: &Complex64, w: &Complex64) -> f64 {
        // arccosh(1 + |z−w|²/(2 Im z Im w)) written as 2 asinh(·) for accuracy.
        // The square roots are taken separately so that two points far from
        // i do not underflow Im z · Im w.
        let s = (z - w).norm() / (2.0 * z.im.sqrt() * w.im.sqrt());
        2.0 * s.asinh()
    }

    fn delta(&self) -> f64 {
        PLANE_DELTA
    }

    fn slack(&self) -> f64 {
        TOL
    }
}

impl SpaceModel for HyperbolicPlane {
    type Element = Moebius;

    fn basepoint(&self) -> Complex64 {
        Complex64::new(0.0, 1.0)
    }

    fn identity(&self) -> Moebius {
        Moebius::IDENTITY
    }

    fn compose(&self, g: &Moebius, h: &Moebius) -> Result<Moebius, ModelError> {
        Ok(g.mul(h))
    }

    fn inverse(&self, g: &Moebius) -> Moebius {
        g.inverse()
    }

    fn act(&self, g: &Moebius, z: &Complex64) -> Result<Complex64, ModelError> {
        Ok(g.apply(*z))
    }

    fn displacement(&self, g: &Moebius) -> f64 {
        // cosh d(i, g·i) = (a² + b² + c² + d²)/2, evaluated without
        // overflow: arccosh q = ln 2q up to O(q⁻²) once q is large.
        let m = [g.a, g.b, g.c, g.d].into_iter().map(f64::abs).fold(0.0, f64::max);
        if m < 1e8 {
            let q = 0.5 * (g.a * g.a + g.b * g.b + g.c * g.c + g.d * g.d);
            return q.max(1.0).acosh();
        }
        let s: f64 = [g.a, g.b, g.c, g.d].into_iter().map(|x| (x / m) * (x / m)).sum();
        2.0 * m.ln() + s.ln()
    }

    fn translation_length(&self, g: &Moebius) -> f64 {
        let t = g.trace().abs();
        if t > 2.0 + TOL {
            2.0 * (t / 2.0).acosh()
        } else {
            0.0
        }
    }

    fn classify(&self, g: &Moebius) -> IsometryKind {
        let t = g.trace().abs();
        if (t - 2.0).abs() <= TOL {
            IsometryKind::Parabolic
        } else if t < 2.0 {
            IsometryKind::Elliptic
        } else {
            IsometryKind::Loxodromic
        }
    }

    fn are_independent(&self, g: &Moebius, h: &Moebius) -> Result<bool, ModelError> {
        for m in [g, h] {
            if self.classify(m) != IsometryKind::Loxodromic {
                return Err(ModelError::NotLoxodromic(self.describe(m)));
            }
        }
        let close = |p: &Option<f64>, q: &Option<f64>| match (p, q) {
            (None, None) => true,
            (Some(x), Some(y)) => (x - y).abs() <= TOL * x.abs().max(y.abs()).max(1.0),
            _ => false,
        };
        let fg = g.boundary_fixed_points();
        let fh = h.boundary_fixed_points();
        Ok(!fg.iter().any(|p| fh.iter().any(|q| close(p, q))))
    }

    fn describe(&self, g: &Moebius) -> String {
        format!("[[{}, {}], [{}, {}]]", g.a, g.b, g.c, g.d)
    }
}
