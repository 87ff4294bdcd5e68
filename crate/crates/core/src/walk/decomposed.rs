use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{StepDistribution, StepId, WalkError};
use crate::models::SpaceModel;

/// One draw of a 6N-step block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockDraw {
    /// `ρ = 1`: the block `a² c² b²` with `a = S[a]`, `b = S[b]`.
    Schottky { a: u32, b: u32 },
    /// `ρ = 0`: a draw from ν.
    Filler(Vec<StepId>),
}

/// How the remainder ν is sampled.
#[derive(Clone, Debug)]
pub enum Filler {
    /// ν is the normalized remainder `(μ^{6N} − αη)/(1 − α)`, sampled exactly
    /// by rejection from `μ^{6N}`.
    Remainder,
    /// ν is `6N` i.i.d. steps of the given law on alphabet ids.
    Iid(StepDistribution<StepId>),
}

/// A step law together with the block decomposition
/// `μ^{6N} = α (μ_{S²} × 1_{c²} × μ_{S²}) + (1−α) ν`.
#[derive(Clone, Debug)]
pub struct DecomposedModel<E> {
    alphabet: Vec<E>,
    base: StepDistribution<E>,
    n: usize,
    schottky: Vec<Vec<StepId>>,
    c: Vec<StepId>,
    alpha: f64,
    ln_alpha: f64,
    alpha_exact: Option<BigRational>,
    filler: Filler,
    ln_weights: Vec<f64>,
    lookup: HashMap<Vec<StepId>, u32>,
}

/// Mass bookkeeping of the decomposition on the support of η.
#[derive(Clone, Debug, PartialEq)]
pub struct MassAccounting {
    pub alpha: f64,
    /// `μ^{6N}(supp η)`.
    pub eta_support_mass: f64,
    /// `(1−α) ν(supp η) = μ^{6N}(supp η) − α`; nonnegative iff consistent.
    pub remainder_on_eta_support: f64,
    /// Smallest `ν(t)` over `t ∈ supp η`, times `(1−α)`.
    pub min_remainder: f64,
    /// Exact versions when the base weights are rational.
    pub exact_consistent: Option<bool>,
}

impl<E: Clone + PartialEq> DecomposedModel<E> {
    /// Exact decomposition of an i.i.d. base law. `schottky[k]` and `c` list
    /// the base-support indices `a_1(s)…a_N(s)` of each Schottky word.
    pub fn from_base(base: StepDistribution<E>, schottky: Vec<Vec<StepId>>, c: Vec<StepId>) -> Result<Self, WalkError> {
        let n = c.len();
        if n == 0 || schottky.len() < 2 {
            return Err(WalkError::Decomposition("need N ≥ 1 and |S| ≥ 2".into()));
        }
        let k = base.len() as StepId;
        for w in schottky.iter().chain(std::iter::once(&c)) {
            if w.len() != n || w.iter().any(|&i| i >= k) {
                return Err(WalkError::Decomposition("alphabet outside the base support".into()));
            }
        }
        let lookup = Self::build_lookup(&schottky)?;
        if lookup.contains_key(&c) {
            return Err(WalkError::Decomposition("c belongs to S".into()));
        }
        let ln_weights: Vec<f64> = base.weights().iter().map(|w| w.ln()).collect();
        let ln_word = |w: &[StepId]| w.iter().map(|&i| ln_weights[i as usize]).sum::<f64>();
        let ln_min_s = schottky.iter().map(|w| ln_word(w)).fold(f64::INFINITY, f64::min);
        let s2 = (schottky.len() as f64).powi(2);
        // α = |S|² · min_t μ^{6N}(t): the largest α keeping ν nonnegative.
        let ln_alpha = s2.ln() + 4.0 * ln_min_s + 2.0 * ln_word(&c);
        let alpha_exact = base.exact_weights().map(|ex| {
            let word = |w: &[StepId]| w.iter().fold(BigRational::one(), |acc, &i| acc * ex[i as usize].clone());
            let min_s = schottky.iter().map(|w| word(w)).min().expect("nonempty");
            let sq = min_s.clone() * min_s;
            let cc = word(&c);
            BigRational::from_integer(BigInt::from(schottky.len()).pow(2)) * sq.clone() * sq * cc.clone() * cc
        });
        if !(ln_alpha < 0.0) {
            return Err(WalkError::Decomposition(format!("alpha = {} is not below 1", ln_alpha.exp())));
        }
        let alpha = match &alpha_exact {
            Some(a) => a.to_f64().unwrap_or(0.0),
            None => ln_alpha.exp(),
        };
        Ok(Self {
            alphabet: base.support().to_vec(),
            base,
            n,
            schottky,
            c,
            alpha,
            ln_alpha,
            alpha_exact,
            filler: Filler::Remainder,
            ln_weights,
            lookup,
        })
    }

    /// Block-level model with `N = 1`: each block is `a² c² b²` with
    /// probability `alpha`, otherwise six i.i.d. steps from `filler`.
    pub fn block(schottky: Vec<E>, c: E, alpha: f64, filler: StepDistribution<E>) -> Result<Self, WalkError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(WalkError::Decomposition(format!("alpha = {alpha} outside (0, 1)")));
        }
        if schottky.len() < 2 {
            return Err(WalkError::Decomposition("need |S| ≥ 2".into()));
        }
        if schottky.contains(&c) {
            return Err(WalkError::Decomposition("c belongs to S".into()));
        }
        let f = filler.len() as StepId;
        let mut alphabet = filler.support().to_vec();
        alphabet.extend(schottky.iter().cloned());
        alphabet.push(c);
        let s_ids: Vec<Vec<StepId>> = (0..schottky.len() as StepId).map(|i| vec![f + i]).collect();
        let c_id = vec![f + schottky.len() as StepId];
        let lookup = Self::build_lookup(&s_ids)?;
        let ids = filler.relabel((0..f).collect());
        let ln_weights = filler.weights().iter().map(|w| w.ln()).collect();
        Ok(Self {
            alphabet,
            base: filler,
            n: 1,
            schottky: s_ids,
            c: c_id,
            alpha,
            ln_alpha: alpha.ln(),
            alpha_exact: None,
            filler: Filler::Iid(ids),
            ln_weights,
            lookup,
        })
    }

    fn build_lookup(schottky: &[Vec<StepId>]) -> Result<HashMap<Vec<StepId>, u32>, WalkError> {
        let mut lookup = HashMap::new();
        for (i, w) in schottky.iter().enumerate() {
            if lookup.insert(w.clone(), i as u32).is_some() {
                return Err(WalkError::Decomposition("repeated Schottky alphabet".into()));
            }
        }
        Ok(lookup)
    }

    /// The model of the backward increments `ǧ = g⁻¹`: inverted alphabet,
    /// Schottky choices from `S⁻¹`, reversed block layout.
    pub fn reflected<S: SpaceModel<Element = E>>(&self, space: &S) -> Self {
        let rev = |w: &Vec<StepId>| w.iter().rev().copied().collect::<Vec<_>>();
        let schottky: Vec<Vec<StepId>> = self.schottky.iter().map(rev).collect();
        let lookup = Self::build_lookup(&schottky).expect("reversal keeps alphabets distinct");
        Self {
            alphabet: self.alphabet.iter().map(|g| space.inverse(g)).collect(),
            base: self.base.reflected(space),
            n: self.n,
            schottky,
            c: rev(&self.c),
            alpha: self.alpha,
            ln_alpha: self.ln_alpha,
            alpha_exact: self.alpha_exact.clone(),
            filler: self.filler.clone(),
            ln_weights: self.ln_weights.clone(),
            lookup,
        }
    }

    pub fn alphabet(&self) -> &[E] {
        &self.alphabet
    }

    pub fn base(&self) -> &StepDistribution<E> {
        &self.base
    }

    /// Schottky word length `N`.
    pub fn word_len(&self) -> usize {
        self.n
    }

    /// Block length `6N`.
    pub fn block_len(&self) -> usize {
        6 * self.n
    }

    pub fn schottky_len(&self) -> usize {
        self.schottky.len()
    }

    pub fn schottky_alphabet(&self, i: u32) -> &[StepId] {
        &self.schottky[i as usize]
    }

    pub fn c_alphabet(&self) -> &[StepId] {
        &self.c
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ln_alpha(&self) -> f64 {
        self.ln_alpha
    }

    pub fn alpha_exact(&self) -> Option<&BigRational> {
        self.alpha_exact.as_ref()
    }

    pub fn filler(&self) -> &Filler {
        &self.filler
    }

    /// Step ids of a block draw, `6N` of them.
    pub fn block_steps(&self, draw: &BlockDraw) -> Vec<StepId> {
        match draw {
            BlockDraw::Schottky { a, b } => {
                let (a, b) = (&self.schottky[*a as usize], &self.schottky[*b as usize]);
                [a, a, &self.c, &self.c, b, b].into_iter().flatten().copied().collect()
            }
            BlockDraw::Filler(steps) => steps.clone(),
        }
    }

    /// Index pair `(a, b)` if `t` lies in the support of η.
    pub fn eta_indices(&self, t: &[StepId]) -> Option<(u32, u32)> {
        let n = self.n;
        if t.len() != 6 * n || t[..n] != t[n..2 * n] || t[4 * n..5 * n] != t[5 * n..] {
            return None;
        }
        if t[2 * n..3 * n] != self.c[..] || t[3 * n..4 * n] != self.c[..] {
            return None;
        }
        Some((*self.lookup.get(&t[..n])?, *self.lookup.get(&t[4 * n..5 * n])?))
    }

    pub fn sample_block<R: Rng + ?Sized>(&self, rng: &mut R) -> BlockDraw {
        if rng.random_bool(self.alpha) {
            let k = self.schottky.len() as u32;
            return BlockDraw::Schottky { a: rng.random_range(0..k), b: rng.random_range(0..k) };
        }
        let len = 6 * self.n;
        match &self.filler {
            Filler::Iid(d) => BlockDraw::Filler((0..len).map(|_| d.sample(rng)).collect()),
            Filler::Remainder => loop {
                let t: Vec<StepId> = (0..len).map(|_| self.base.sample(rng)).collect();
                if self.eta_indices(&t).is_none() {
                    return BlockDraw::Filler(t);
                }
                // Thin μ^{6N} on supp η by α η(t) / μ^{6N}(t).
                let ln_mu: f64 = t.iter().map(|&i| self.ln_weights[i as usize]).sum();
                let ln_s2 = 2.0 * (self.schottky.len() as f64).ln();
                let remove = (self.ln_alpha - ln_s2 - ln_mu).exp();
                if rng.random::<f64>() >= remove {
                    return BlockDraw::Filler(t);
                }
            },
        }
    }

    /// Checks that ν is a probability measure on the support of η.
    pub fn mass_accounting(&self) -> MassAccounting {
        let s = self.schottky.len();
        let ln_eta = -2.0 * (s as f64).ln();
        let mut eta_support_mass = 0.0;
        let mut min_remainder = f64::INFINITY;
        let iid = matches!(self.filler, Filler::Remainder);
        // Block model: supp η carries α η(t) plus the filler mass, which is
        // zero because filler steps never use Schottky ids.
        let block_mass = self.alpha * ln_eta.exp();
        let mu_of = |a: &[StepId], b: &[StepId]| {
            if !iid {
                return block_mass;
            }
            let word = |w: &[StepId]| w.iter().map(|&i| self.ln_weights[i as usize]).sum::<f64>();
            (2.0 * word(a) + 2.0 * word(&self.c) + 2.0 * word(b)).exp()
        };
        for a in &self.schottky {
            for b in &self.schottky {
                let mu = mu_of(a, b);
                eta_support_mass += mu;
                min_remainder = min_remainder.min(mu - block_mass);
            }
        }
        let exact_consistent = match (&self.alpha_exact, self.base.exact_weights()) {
            (Some(alpha), Some(ex)) => {
                let word = |w: &[StepId]| w.iter().fold(BigRational::one(), |acc, &i| acc * ex[i as usize].clone());
                let c2 = word(&self.c) * word(&self.c);
                let eta = BigRational::new(BigInt::one(), BigInt::from(s).pow(2));
                let share = alpha.clone() * eta;
                let words: Vec<BigRational> = self.schottky.iter().map(|w| word(w) * word(w)).collect();
                let min_w = words.iter().min().expect("nonempty").clone();
                // μ^{6N}(t) − α η(t) ≥ 0 for every t iff it holds at the minimum.
                Some(min_w.clone() * c2 * min_w - share >= BigRational::zero() && *alpha < BigRational::one())
            }
            _ => None,
        };
        MassAccounting {
            alpha: self.alpha,
            eta_support_mass,
            remainder_on_eta_support: eta_support_mass - self.alpha,
            min_remainder,
            exact_consistent,
        }
    }
}
