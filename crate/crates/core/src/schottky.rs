//! Schottky sets: verification of the counting and displacement conditions,
//! and the search among powers of length-10 patterns in two loxodromics.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{FreeGroup, FreeGroupWord, HyperbolicPlane, Letter, ModelError, Moebius, SpaceModel};

/// Patterns are words `φ_1 ⋯ φ_10` with `φ_i ∈ {a, b}`.
pub const PATTERN_LEN: usize = 10;

pub const DEFAULT_POWER_CAP: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchottkyError {
    #[error("a Schottky set needs at least two distinct elements")]
    TooSmall,
    #[error("elements {0} and {1} coincide")]
    Duplicate(usize, usize),
    #[error("requested {requested} elements from a set of {available}")]
    SubsetSize { requested: usize, available: usize },
    #[error("a and b are not independent loxodromics")]
    NotIndependent,
    #[error("target size {0} exceeds the {1} available patterns")]
    TooManyPatterns(usize, usize),
    #[error("no probes supplied")]
    NoProbes,
    #[error("schottky search exhausted: {0}")]
    Exhausted(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A candidate `(K, K′)`-Schottky set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchottkyParams<E> {
    pub k: f64,
    pub k_prime: f64,
    pub set: Vec<E>,
}

impl<E: Clone + PartialEq> SchottkyParams<E> {
    pub fn new(k: f64, k_prime: f64, set: Vec<E>) -> Result<Self, SchottkyError> {
        if set.len() < 2 {
            return Err(SchottkyError::TooSmall);
        }
        for i in 0..set.len() {
            for j in i + 1..set.len() {
                if set[i] == set[j] {
                    return Err(SchottkyError::Duplicate(i, j));
                }
            }
        }
        Ok(Self { k, k_prime, set })
    }
}

/// The first `size` elements, keeping `K` and `K′`. Sets produced by the
/// search are already in canonical (pattern) order.
pub fn schottky_subset<E: Clone + PartialEq>(
    params: &SchottkyParams<E>,
    size: usize,
) -> Result<SchottkyParams<E>, SchottkyError> {
    if size == 0 || size > params.set.len() {
        return Err(SchottkyError::SubsetSize { requested: size, available: params.set.len() });
    }
    Ok(SchottkyParams { k: params.k, k_prime: params.k_prime, set: params.set[..size].to_vec() })
}

/// Exact sufficient condition on trees. If every element is cyclically
/// reduced of length at least `max(2K, K′)` and the `⌈K⌉`-prefixes of the
/// `2|S|` rays `s^{±∞}` are pairwise distinct, then for any `x, y` at most one
/// element can reach `(x, sⁱy)_o ≥ K` by agreeing with `x` along `s^{+∞}`, and
/// at most one by cancelling into `y` along `s^{−∞}`; with `y = o` only the
/// first mode exists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeCertificate {
    pub holds: bool,
    pub all_cyclically_reduced: bool,
    pub min_length: usize,
    pub distinct_ray_prefixes: bool,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Offender {
    pub probe: usize,
    pub positive: usize,
    pub negative: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub probes: usize,
    pub power_cap: u32,
    pub worst_positive: usize,
    pub worst_negative: usize,
    /// Worst count over probes with `y = o` and `i > 0` (should be ≤ 1).
    pub worst_single_orbit: usize,
    pub displacement_ok: bool,
    pub min_displacement: f64,
    pub offenders: Vec<Offender>,
    pub certificate: Option<TreeCertificate>,
    /// True when the verdict rests on probes alone.
    pub sampled_only: bool,
}

/// Model-specific support for Schottky verification.
pub trait SchottkyModel: SpaceModel {
    /// Whether some `0 < i ≤ cap` (resp. `−cap ≤ i < 0`) reaches
    /// `(x, sⁱy)_o ≥ K`.
    fn power_hits(
        &self,
        x: &Self::Point,
        s: &Self::Element,
        y: &Self::Point,
        cap: u32,
        k: f64,
    ) -> Result<(bool, bool), ModelError> {
        let mut hit = (false, false);
        let mut pos = self.identity();
        let mut neg = self.identity();
        let s_inv = self.inverse(s);
        let o = self.basepoint();
        for _ in 0..cap {
            pos = self.compose(&pos, s)?;
            neg = self.compose(&neg, &s_inv)?;
            for (g, flag) in [(&pos, &mut hit.0), (&neg, &mut hit.1)] {
                if !*flag {
                    let gy = self.act(g, y)?;
                    *flag = crate::geometry::gromov_product(self, &o, x, &gy) >= k - self.slack();
                }
            }
            if hit.0 && hit.1 {
                break;
            }
        }
        Ok(hit)
    }

    fn certificate(&self, _params: &SchottkyParams<Self::Element>) -> Option<TreeCertificate> {
        None
    }
}

impl SchottkyModel for HyperbolicPlane {}

/// `(x, red(sⁱ y))_o` for cyclically reduced `s` given by `letter(k)`,
/// without building the power. Also reports whether larger `i` give the same
/// value, which holds once `sⁱ` outruns both `x` and `y`.
fn lazy_power_product(
    x: &[Letter],
    s: &dyn Fn(usize) -> Letter,
    slen: usize,
    reps: usize,
    y: &[Letter],
) -> (usize, bool) {
    let total = slen * reps;
    let inv_at = |k: usize| -s(slen - 1 - (k % slen));
    let mut cancel = 0;
    while cancel < total && cancel < y.len() && y[cancel] == inv_at(cancel) {
        cancel += 1;
    }
    let head = total - cancel;
    let len = head + y.len() - cancel;
    let at = |k: usize| if k < head { s(k % slen) } else { y[cancel + k - head] };
    let mut k = 0;
    while k < x.len() && k < len && x[k] == at(k) {
        k += 1;
    }
    (k, head > x.len() && total > y.len())
}

impl SchottkyModel for FreeGroup {
    fn power_hits(
        &self,
        x: &FreeGroupWord,
        s: &FreeGroupWord,
        y: &FreeGroupWord,
        cap: u32,
        k: f64,
    ) -> Result<(bool, bool), ModelError> {
        if s.is_empty() || !s.is_cyclically_reduced() {
            let mut hit = (false, false);
            for i in 1..=cap as i64 {
                hit.0 |= self.power_orbit_product(x, s, i, y)? >= k;
                hit.1 |= self.power_orbit_product(x, s, -i, y)? >= k;
            }
            return Ok(hit);
        }
        let sl = s.letters();
        let n = sl.len();
        let fwd = |j: usize| sl[j];
        let bwd = |j: usize| -sl[n - 1 - j];
        let mut out = [false, false];
        for (slot, f) in [(0usize, &fwd as &dyn Fn(usize) -> Letter), (1, &bwd)] {
            for i in 1..=cap as usize {
                let (v, stable) = lazy_power_product(x.letters(), f, n, i, y.letters());
                if v as f64 >= k {
                    out[slot] = true;
                    break;
                }
                if stable {
                    break;
                }
            }
        }
        Ok((out[0], out[1]))
    }

    fn certificate(&self, params: &SchottkyParams<FreeGroupWord>) -> Option<TreeCertificate> {
        let kk = params.k.ceil().max(0.0) as usize;
        let all_cr = params.set.iter().all(|s| !s.is_empty() && s.is_cyclically_reduced());
        let min_length = params.set.iter().map(|s| s.len()).min().unwrap_or(0);
        let mut seen = HashSet::new();
        let mut distinct = true;
        if all_cr {
            for s in &params.set {
                let l = s.letters();
                let n = l.len();
                let plus: Vec<Letter> = (0..kk).map(|j| l[j % n]).collect();
                let minus: Vec<Letter> = (0..kk).map(|j| -l[n - 1 - (j % n)]).collect();
                distinct &= seen.insert(plus);
                distinct &= seen.insert(minus);
            }
        }
        let long = min_length as f64 >= (2.0 * params.k).max(params.k_prime);
        let reason = if !all_cr {
            Some("an element is not cyclically reduced".to_string())
        } else if !long {
            Some(format!("shortest element {min_length} below max(2K, K')"))
        } else if !distinct {
            Some("two rays share a K-prefix".to_string())
        } else {
            None
        };
        Some(TreeCertificate {
            holds: reason.is_none(),
            all_cyclically_reduced: all_cr,
            min_length,
            distinct_ray_prefixes: distinct,
            reason,
        })
    }
}

/// Checks the two counting conditions on every probe `(x, y)` and the
/// displacement condition `d(o, sⁱo) ≥ K′` for `0 < |i| ≤ power_cap`.
pub fn verify_schottky<S: SchottkyModel>(
    params: &SchottkyParams<S::Element>,
    space: &S,
    probes: &[(S::Point, S::Point)],
    power_cap: u32,
) -> Result<VerificationReport, SchottkyError> {
    if probes.is_empty() {
        return Err(SchottkyError::NoProbes);
    }
    let o = space.basepoint();
    let mut worst = (0, 0, 0);
    let mut offenders = Vec::new();
    for (idx, (x, y)) in probes.iter().enumerate() {
        let (mut pos, mut neg, mut single) = (0, 0, 0);
        for s in &params.set {
            let (p, n) = space.power_hits(x, s, y, power_cap, params.k)?;
            pos += p as usize;
            neg += n as usize;
            single += space.power_hits(x, s, &o, power_cap, params.k)?.0 as usize;
        }
        worst = (worst.0.max(pos), worst.1.max(neg), worst.2.max(single));
        if (pos > 2 || neg > 2) && offenders.len() < 16 {
            offenders.push(Offender { probe: idx, positive: pos, negative: neg });
        }
    }
    let mut min_displacement = f64::INFINITY;
    for s in &params.set {
        for i in 1..=power_cap as i64 {
            for j in [i, -i] {
                min_displacement = min_displacement.min(space.displacement(&space.power(s, j)?));
            }
        }
    }
    let displacement_ok = min_displacement >= params.k_prime - space.slack();
    let certificate = space.certificate(params);
    Ok(VerificationReport {
        passed: worst.0 <= 2
            && worst.1 <= 2
            && worst.2 <= 1
            && displacement_ok
            && certificate.as_ref().is_none_or(|c| c.holds),
        probes: probes.len(),
        power_cap,
        worst_positive: worst.0,
        worst_negative: worst.1,
        worst_single_orbit: worst.2,
        displacement_ok,
        min_displacement,
        offenders,
        sampled_only: certificate.is_none(),
        certificate,
    })
}

/// Adversarial probes in the tree: pairs from the ball of radius `radius`,
/// high powers of set elements against inverse powers, and mixed words.
pub fn tree_probes<R: Rng + ?Sized>(
    rank: u32,
    set: &[FreeGroupWord],
    radius: usize,
    count: usize,
    power_cap: u32,
    rng: &mut R,
) -> Result<Vec<(FreeGroupWord, FreeGroupWord)>, ModelError> {
    let letters: Vec<Letter> = (1..=rank as Letter).flat_map(|g| [g, -g]).collect();
    let random_word = |rng: &mut R, len: usize| -> Result<FreeGroupWord, ModelError> {
        let mut w = FreeGroupWord::identity(rank);
        while w.len() < len {
            w.push(letters[rng.random_range(0..letters.len())])?;
        }
        Ok(w)
    };
    let mut probes = Vec::with_capacity(count);
    let third = count / 3;
    for _ in 0..third {
        let lx = rng.random_range(0..=radius);
        let ly = rng.random_range(0..=radius);
        probes.push((random_word(rng, lx)?, random_word(rng, ly)?));
    }
    let cap = power_cap.max(1) as i64;
    let pick_pow = |rng: &mut R| -> i64 {
        match rng.random_range(0..3) {
            0 => 1,
            1 => rng.random_range(1..=cap),
            _ => cap,
        }
    };
    for _ in third..2 * third {
        let s = &set[rng.random_range(0..set.len())];
        let t = &set[rng.random_range(0..set.len())];
        let x = s.pow(pick_pow(rng))?;
        let y = match rng.random_range(0..3) {
            0 => FreeGroupWord::identity(rank),
            1 => t.pow(-pick_pow(rng))?,
            _ => t.pow(pick_pow(rng))?.inverse(),
        };
        probes.push((x, y));
    }
    while probes.len() < count {
        let s = &set[rng.random_range(0..set.len())];
        let t = &set[rng.random_range(0..set.len())];
        let (lu, lv) = (rng.random_range(0..=radius), rng.random_range(0..=radius));
        let u = random_word(rng, lu)?;
        let v = random_word(rng, lv)?;
        let x = u.mul(&s.pow(rng.random_range(1..=3))?)?;
        // y starts along t^{-∞}, so sⁱ cancels into it only for s = t.
        let y = t.pow(-rng.random_range(1..=3))?.mul(&v)?;
        probes.push((x, y));
    }
    Ok(probes)
}

/// Result of [`search_schottky`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchottkySearch<E> {
    pub params: SchottkyParams<E>,
    /// Pattern masks, bit 9 first: a set bit selects `b`.
    pub patterns: Vec<u16>,
    /// Exponent `e` in `φ_i^e`.
    pub pattern_exponent: u32,
    /// Each element is `pattern^power`.
    pub power: u64,
    pub report: VerificationReport,
}

fn pattern_word<S: SpaceModel>(space: &S, a: &S::Element, b: &S::Element, mask: u16) -> Result<S::Element, ModelError> {
    let mut w = space.identity();
    for bit in (0..PATTERN_LEN).rev() {
        let g = if mask >> bit & 1 == 1 { b } else { a };
        w = space.compose(&w, g)?;
    }
    Ok(w)
}

/// Builds `target_size` powers of distinct `{a, b}`-patterns of length 10
/// forming a `(K, K′)`-Schottky set, with `K = max d(o, p·o)` over patterns.
/// `probes` produces the probe family for a candidate set.
pub fn search_schottky<S, F>(
    space: &S,
    a: &S::Element,
    b: &S::Element,
    target_size: usize,
    k_prime: f64,
    power_cap: u32,
    mut probes: F,
) -> Result<SchottkySearch<S::Element>, SchottkyError>
where
    S: SchottkyModel,
    F: FnMut(&[S::Element]) -> Result<Vec<(S::Point, S::Point)>, ModelError>,
{
    if !space.are_independent(a, b).unwrap_or(false) {
        return Err(SchottkyError::NotIndependent);
    }
    let available = 1usize << PATTERN_LEN;
    if target_size > available {
        return Err(SchottkyError::TooManyPatterns(target_size, available));
    }
    let masks: Vec<u16> = (0..target_size as u16).collect();
    let mut last_failure = String::from("no attempt");
    for exponent in [1u32, 2, 4, 8] {
        let ae = space.power(a, exponent as i64)?;
        let be = space.power(b, exponent as i64)?;
        let pats: Vec<S::Element> =
            masks.iter().map(|&m| pattern_word(space, &ae, &be, m)).collect::<Result<_, _>>()?;
        let k = pats.iter().map(|p| space.displacement(p)).fold(0.0, f64::max);
        let tau_min = pats.iter().map(|p| space.translation_length(p)).fold(f64::INFINITY, f64::min);
        if !(tau_min > 0.0) {
            last_failure = format!("a pattern with exponent {exponent} is not loxodromic");
            continue;
        }
        let mut power = ((k_prime / tau_min).ceil() as u64).max(1);
        for _ in 0..4 {
            let set: Vec<S::Element> = pats.iter().map(|p| space.power(p, power as i64)).collect::<Result<_, _>>()?;
            let params = match SchottkyParams::new(k, k_prime, set) {
                Ok(p) => p,
                Err(e) => {
                    last_failure = e.to_string();
                    break;
                }
            };
            let pr = probes(&params.set)?;
            let report = verify_schottky(&params, space, &pr, power_cap)?;
            if report.passed {
                return Ok(SchottkySearch { params, patterns: masks, pattern_exponent: exponent, power, report });
            }
            last_failure = format!(
                "exponent {exponent}, power {power}: counts ({}, {}), single-orbit {}, min displacement {}",
                report.worst_positive, report.worst_negative, report.worst_single_orbit, report.min_displacement
            );
            power *= 2;
        }
    }
    Err(SchottkyError::Exhausted(last_failure))
}

/// Random probes in the plane: orbit points of random words in `a`, `b`.
pub fn plane_probes<R: Rng + ?Sized>(
    a: &Moebius,
    b: &Moebius,
    max_len: usize,
    count: usize,
    rng: &mut R,
) -> Vec<(num_complex::Complex64, num_complex::Complex64)> {
    let plane = HyperbolicPlane;
    let gens = [*a, a.inverse(), *b, b.inverse()];
    let point = |rng: &mut R| {
        let mut g = Moebius::IDENTITY;
        for _ in 0..rng.random_range(0..=max_len) {
            g = g.mul(&gens[rng.random_range(0..4)]);
        }
        g.apply(plane.basepoint())
    };
    (0..count).map(|_| (point(rng), point(rng))).collect()
}

/// Distance check used in reports: `d(o, s·o)` for each element.
pub fn displacements<S: SpaceModel>(space: &S, set: &[S::Element]) -> Vec<f64> {
    set.iter().map(|s| space.displacement(s)).collect()
}
