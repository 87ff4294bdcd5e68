//! Step distributions, moments, and samplers for random walks with a
//! Schottky block decomposition.

mod decomposed;
mod path;
mod trajectory;

pub use decomposed::{BlockDraw, DecomposedModel, Filler, MassAccounting};
pub use path::{materialize_plane, materialize_tree, tree_letters};
pub use trajectory::{
    sample_bidirectional, sample_iid_steps, sample_trajectory, sample_with, stream_rng, Stream, Trajectory,
};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use thiserror::Error;

use crate::models::{IsometryKind, ModelError, SpaceModel};

/// Index into a model alphabet.
pub type StepId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("empty support")]
    EmptySupport,
    #[error("support and weights differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("weight {0} is not positive")]
    NonPositive(f64),
    #[error("weights sum to {0}, not 1")]
    Sum(f64),
    #[error("support elements {0} and {1} coincide")]
    Duplicate(usize, usize),
    #[error("invalid decomposition: {0}")]
    Decomposition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o: {0}")]
    Io(String),
}

/// A finitely supported probability measure on group elements.
#[derive(Clone, Debug)]
pub struct StepDistribution<E> {
    support: Vec<E>,
    weights: Vec<f64>,
    exact: Option<Vec<BigRational>>,
    sampler: WeightedIndex<f64>,
}

impl<E: Clone + PartialEq> StepDistribution<E> {
    pub fn new(support: Vec<E>, weights: Vec<f64>) -> Result<Self, WalkError> {
        if support.is_empty() {
            return Err(WalkError::EmptySupport);
        }
        if support.len() != weights.len() {
            return Err(WalkError::Length(support.len(), weights.len()));
        }
        if let Some(&w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(WalkError::NonPositive(w));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(WalkError::Sum(sum));
        }
        for i in 0..support.len() {
            for j in i + 1..support.len() {
                if support[i] == support[j] {
                    return Err(WalkError::Duplicate(i, j));
                }
            }
        }
        let sampler = WeightedIndex::new(&weights).map_err(|e| WalkError::Decomposition(e.to_string()))?;
        Ok(Self { support, weights, exact: None, sampler })
    }

    pub fn uniform(support: Vec<E>) -> Result<Self, WalkError> {
        let n = support.len().max(1) as u64;
        Self::from_rational(support, &vec![(1, n); n as usize])
    }

    /// Weights given as exact fractions `(numerator, denominator)`.
    pub fn from_rational(support: Vec<E>, weights: &[(u64, u64)]) -> Result<Self, WalkError> {
        let exact: Vec<BigRational> = weights
            .iter()
            .map(|&(p, q)| {
                if p == 0 || q == 0 {
                    Err(WalkError::NonPositive(0.0))
                } else {
                    Ok(BigRational::new(BigInt::from(p), BigInt::from(q)))
                }
            })
            .collect::<Result<_, _>>()?;
        let total = exact.iter().fold(BigRational::zero(), |a, b| a + b);
        if total != BigRational::from_integer(1.into()) {
            return Err(WalkError::Sum(total.to_f64().unwrap_or(f64::NAN)));
        }
        let f: Vec<f64> = exact.iter().map(|r| r.to_f64().expect("finite")).collect();
        let total_f: f64 = f.iter().sum();
        let f: Vec<f64> = f.iter().map(|w| w / total_f).collect();
        let mut d = Self::new(support, f)?;
        d.exact = Some(exact);
        Ok(d)
    }

    pub fn support(&self) -> &[E] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exact_weights(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StepId {
        self.sampler.sample(rng) as StepId
    }

    /// The law of `g⁻¹` for `g ~ μ`, with the same index order.
    pub fn reflected<S: SpaceModel<Element = E>>(&self, space: &S) -> Self {
        Self {
            support: self.support.iter().map(|g| space.inverse(g)).collect(),
            weights: self.weights.clone(),
            exact: self.exact.clone(),
            sampler: self.sampler.clone(),
        }
    }

    /// Same weights on a new support of equal length.
    pub fn relabel<F>(&self, support: Vec<F>) -> StepDistribution<F> {
        assert_eq!(support.len(), self.support.len());
        StepDistribution {
            support,
            weights: self.weights.clone(),
            exact: self.exact.clone(),
            sampler: self.sampler.clone(),
        }
    }
}

/// `Σ μ(g) d(o, g·o)^p`.
pub fn pth_moment<S: SpaceModel>(mu: &StepDistribution<S::Element>, p: f64, space: &S) -> f64 {
    mu.support.iter().zip(&mu.weights).map(|(g, w)| w * space.displacement(g).powf(p)).sum()
}

/// `Σ μ(g) exp(K d(o, g·o))`.
pub fn exponential_moment<S: SpaceModel>(mu: &StepDistribution<S::Element>, k: f64, space: &S) -> f64 {
    mu.support.iter().zip(&mu.weights).map(|(g, w)| w * (k * space.displacement(g)).exp()).sum()
}

/// Caps the number of distinct products kept per semigroup level.
const PRODUCT_CAP: usize = 4096;

fn next_level<S: SpaceModel>(
    space: &S,
    level: &[S::Element],
    support: &[S::Element],
) -> Result<Vec<S::Element>, ModelError> {
    let mut out: Vec<S::Element> = Vec::new();
    'outer: for g in level {
        for s in support {
            let h = space.compose(g, s)?;
            if !out.contains(&h) {
                out.push(h);
                if out.len() >= PRODUCT_CAP {
                    break 'outer;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NonElementary<E> {
    pub found: bool,
    pub witness: Option<(E, E)>,
}

/// Searches semigroup products of length at most `search_depth` for two
/// independent loxodromics. `found = false` only means none was found.
pub fn is_non_elementary<S: SpaceModel>(
    mu: &StepDistribution<S::Element>,
    space: &S,
    search_depth: usize,
) -> Result<NonElementary<S::Element>, ModelError> {
    let mut lox: Vec<S::Element> = Vec::new();
    let mut level: Vec<S::Element> = mu.support.clone();
    for depth in 1..=search_depth {
        if depth > 1 {
            level = next_level(space, &level, &mu.support)?;
        }
        for g in &level {
            if space.classify(g) != IsometryKind::Loxodromic || lox.contains(g) {
                continue;
            }
            for h in &lox {
                if space.are_independent(h, g)? {
                    return Ok(NonElementary { found: true, witness: Some((h.clone(), g.clone())) });
                }
            }
            if lox.len() < PRODUCT_CAP {
                lox.push(g.clone());
            }
        }
    }
    Ok(NonElementary { found: false, witness: None })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NonArithmetic<E> {
    pub found: bool,
    /// Per depth `N`, whether `supp μ^N` has two distinct translation lengths.
    pub per_depth: Vec<(usize, bool)>,
    pub witness: Option<(usize, E, E)>,
}

/// Looks for `N ≤ search_depth` such that `supp μ^N` contains elements with
/// distinct translation lengths.
pub fn is_non_arithmetic<S: SpaceModel>(
    mu: &StepDistribution<S::Element>,
    space: &S,
    search_depth: usize,
) -> Result<NonArithmetic<S::Element>, ModelError> {
    let mut per_depth = Vec::new();
    let mut witness = None;
    let mut level: Vec<S::Element> = mu.support.clone();
    for n in 1..=search_depth {
        if n > 1 {
            level = next_level(space, &level, &mu.support)?;
        }
        let first = &level[0];
        let t0 = space.translation_length(first);
        let other = level.iter().find(|g| (space.translation_length(g) - t0).abs() > 1e-9);
        per_depth.push((n, other.is_some()));
        if let (Some(g), None) = (other, &witness) {
            witness = Some((n, first.clone(), g.clone()));
        }
    }
    Ok(NonArithmetic { found: witness.is_some(), per_depth, witness })
}
