use rand::Rng;

use super::StatsError;
use crate::models::{FreeGroupWord, HyperbolicPlane, Letter, Moebius, SpaceModel};
use crate::walk::StepDistribution;

/// The current product `ω_k` of a walk, with the statistics read at
/// checkpoints.
pub trait PathTracker: Clone + Send + Sync {
    /// `d(o, ω_k o)`.
    fn displacement(&self) -> f64;
    /// `τ(ω_k)` in closed form.
    fn translation(&self) -> f64;
    /// `(ω_k o, other o)_o`.
    fn product_with(&self, other: &Self) -> f64;
}

/// An i.i.d. step law that can drive a tracker.
pub trait WalkLaw: Sync {
    type Tracker: PathTracker;

    fn start(&self) -> Self::Tracker;

    fn step<R: Rng + ?Sized>(&self, rng: &mut R, t: &mut Self::Tracker);

    /// Law of the inverse steps, for backward paths.
    fn reflected(&self) -> Self;

    fn describe(&self) -> String;
}

/// A reduced word kept as a stack of letters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WordTracker {
    letters: Vec<Letter>,
}

impl WordTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, l: Letter) {
        if self.letters.last() == Some(&-l) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    pub fn push_all(&mut self, ls: &[Letter]) {
        for &l in ls {
            self.push(l);
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }
}

impl From<&FreeGroupWord> for WordTracker {
    fn from(w: &FreeGroupWord) -> Self {
        Self { letters: w.letters().to_vec() }
    }
}

impl PathTracker for WordTracker {
    fn displacement(&self) -> f64 {
        self.letters.len() as f64
    }

    fn translation(&self) -> f64 {
        let w = &self.letters;
        let mut c = 0;
        while 2 * c + 1 < w.len() && w[c] == -w[w.len() - 1 - c] {
            c += 1;
        }
        (w.len() - 2 * c) as f64
    }

    fn product_with(&self, other: &Self) -> f64 {
        self.letters.iter().zip(&other.letters).take_while(|(a, b)| a == b).count() as f64
    }
}

/// Product of Möbius steps.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneTracker {
    g: Moebius,
}

impl PlaneTracker {
    pub fn new(g: Moebius) -> Self {
        Self { g }
    }
}

impl PathTracker for PlaneTracker {
    fn displacement(&self) -> f64 {
        HyperbolicPlane.displacement(&self.g)
    }

    fn translation(&self) -> f64 {
        HyperbolicPlane.translation_length(&self.g)
    }

    fn product_with(&self, other: &Self) -> f64 {
        // From matrix displacements: orbit points underflow past d ≈ 700.
        let h = HyperbolicPlane;
        let across = h.displacement(&self.g.inverse().mul(&other.g));
        0.5 * (h.displacement(&self.g) + h.displacement(&other.g) - across)
    }
}

/// i.i.d. steps of a finitely supported law on a free group.
#[derive(Clone, Debug)]
pub struct TreeLaw {
    mu: StepDistribution<FreeGroupWord>,
    letters: Vec<Vec<Letter>>,
}

impl TreeLaw {
    pub fn new(mu: StepDistribution<FreeGroupWord>) -> Self {
        let letters = mu.support().iter().map(|w| w.letters().to_vec()).collect();
        Self { mu, letters }
    }

    pub fn distribution(&self) -> &StepDistribution<FreeGroupWord> {
        &self.mu
    }
}

impl WalkLaw for TreeLaw {
    type Tracker = WordTracker;

    fn start(&self) -> WordTracker {
        WordTracker::new()
    }

    fn step<R: Rng + ?Sized>(&self, rng: &mut R, t: &mut WordTracker) {
        t.push_all(&self.letters[self.mu.sample(rng) as usize]);
    }

    fn reflected(&self) -> Self {
        let support = self.mu.support().iter().map(|w| w.inverse()).collect();
        Self::new(self.mu.relabel(support))
    }

    fn describe(&self) -> String {
        let parts: Vec<String> =
            self.mu.support().iter().zip(self.mu.weights()).map(|(w, p)| format!("{w}:{p:.6}")).collect();
        format!("F{} iid [{}]", self.mu.support()[0].rank(), parts.join(" "))
    }
}

/// i.i.d. Möbius steps.
#[derive(Clone, Debug)]
pub struct PlaneLaw {
    mu: StepDistribution<Moebius>,
}

impl PlaneLaw {
    pub fn new(mu: StepDistribution<Moebius>) -> Self {
        Self { mu }
    }
}

impl WalkLaw for PlaneLaw {
    type Tracker = PlaneTracker;

    fn start(&self) -> PlaneTracker {
        PlaneTracker { g: Moebius::IDENTITY }
    }

    fn step<R: Rng + ?Sized>(&self, rng: &mut R, t: &mut PlaneTracker) {
        t.g = t.g.mul(&self.mu.support()[self.mu.sample(rng) as usize]);
    }

    fn reflected(&self) -> Self {
        Self { mu: self.mu.reflected(&HyperbolicPlane) }
    }

    fn describe(&self) -> String {
        format!("H2 iid, {} matrices", self.mu.len())
    }
}

/// With probability `p_heavy` a jump `a^{±k}`, `P(k) ∝ k^{−q}` for
/// `1 ≤ k ≤ cap`; otherwise a simple-random-walk letter of `F₂`.
#[derive(Clone, Debug)]
pub struct HeavyTailLaw {
    p_heavy: f64,
    q: f64,
    cap: u64,
    cdf: Vec<f64>,
}

impl HeavyTailLaw {
    pub fn new(p_heavy: f64, q: f64, cap: u64) -> Result<Self, StatsError> {
        if !(p_heavy > 0.0 && p_heavy < 1.0) || !(q > 1.0) || cap == 0 {
            return Err(StatsError::Parameter(format!("heavy tail p = {p_heavy}, q = {q}, cap = {cap}")));
        }
        let mut cdf = Vec::with_capacity(cap as usize);
        let mut acc = 0.0;
        for k in 1..=cap {
            acc += (k as f64).powf(-q);
            cdf.push(acc);
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Ok(Self { p_heavy, q, cap, cdf })
    }

    /// `E[k^p]` of the jump size, finite iff `p < q − 1`.
    pub fn jump_moment(&self, p: f64) -> f64 {
        let mut prev = 0.0;
        let mut s = 0.0;
        for (i, &c) in self.cdf.iter().enumerate() {
            s += (c - prev) * ((i + 1) as f64).powf(p);
            prev = c;
        }
        s
    }
}

impl WalkLaw for HeavyTailLaw {
    type Tracker = WordTracker;

    fn start(&self) -> WordTracker {
        WordTracker::new()
    }

    fn step<R: Rng + ?Sized>(&self, rng: &mut R, t: &mut WordTracker) {
        if rng.random_bool(self.p_heavy) {
            let u: f64 = rng.random();
            let k = self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1) + 1;
            let l: Letter = if rng.random_bool(0.5) { 1 } else { -1 };
            for _ in 0..k {
                t.push(l);
            }
        } else {
            const SRW: [Letter; 4] = [1, -1, 2, -2];
            t.push(SRW[rng.random_range(0..4)]);
        }
    }

    fn reflected(&self) -> Self {
        // Symmetric law.
        self.clone()
    }

    fn describe(&self) -> String {
        format!("F2 heavy tail: a^(+-k) w.p. {} with k^-{} up to {}, else SRW", self.p_heavy, self.q, self.cap)
    }
}
