//! Concrete spaces: the Cayley tree of a free group (exact) and the
//! hyperbolic plane (floating point).

mod arena;
mod free_group;
mod plane;

pub use arena::{CayleyArena, NodeId};
pub use free_group::{FreeGroup, FreeGroupWord, Letter, WORD_CAPACITY};
pub use plane::{HyperbolicPlane, Moebius, PLANE_DELTA};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{gromov_product, Metric};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("word length exceeds capacity {0}")]
    Capacity(usize),
    #[error("letter {letter} outside rank {rank}")]
    BadLetter { letter: Letter, rank: u32 },
    #[error("unsupported rank {0}")]
    BadRank(u32),
    #[error("points from free groups of ranks {0} and {1}")]
    RankMismatch(u32, u32),
    #[error("cannot parse word {0:?}")]
    Parse(String),
    #[error("{0} is not loxodromic")]
    NotLoxodromic(String),
    #[error("matrix is not in SL(2,R): det = {0}")]
    Determinant(f64),
    #[error("n_max must be at least 1")]
    ZeroPower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsometryKind {
    Elliptic,
    Parabolic,
    Loxodromic,
}

/// A metric space with a basepoint and a group acting by isometries.
pub trait SpaceModel: Metric + Sync {
    type Element: Clone + PartialEq + std::fmt::Debug + Send + Sync;

    fn basepoint(&self) -> Self::Point;
    fn identity(&self) -> Self::Element;
    fn compose(&self, g: &Self::Element, h: &Self::Element) -> Result<Self::Element, ModelError>;
    fn inverse(&self, g: &Self::Element) -> Self::Element;
    fn act(&self, g: &Self::Element, x: &Self::Point) -> Result<Self::Point, ModelError>;

    fn power(&self, g: &Self::Element, n: i64) -> Result<Self::Element, ModelError> {
        let mut base = if n < 0 { self.inverse(g) } else { g.clone() };
        let mut k = n.unsigned_abs();
        let mut acc = self.identity();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.compose(&acc, &base)?;
            }
            k >>= 1;
            if k > 0 {
                base = self.compose(&base, &base)?;
            }
        }
        Ok(acc)
    }

    fn orbit_point(&self, g: &Self::Element) -> Result<Self::Point, ModelError> {
        self.act(g, &self.basepoint())
    }

    /// `d(o, g·o)`.
    fn displacement(&self, g: &Self::Element) -> f64;

    /// Closed-form translation length.
    fn translation_length(&self, g: &Self::Element) -> f64;

    fn classify(&self, g: &Self::Element) -> IsometryKind;

    /// Disjointness of fixed-point sets of two loxodromics.
    fn are_independent(&self, g: &Self::Element, h: &Self::Element) -> Result<bool, ModelError>;

    /// `(x, s^i·y)_o`. Models override this when powers are expensive.
    fn power_orbit_product(
        &self,
        x: &Self::Point,
        s: &Self::Element,
        i: i64,
        y: &Self::Point,
    ) -> Result<f64, ModelError> {
        let sy = self.act(&self.power(s, i)?, y)?;
        Ok(gromov_product(self, &self.basepoint(), x, &sy))
    }

    /// Human-readable element, used in reports.
    fn describe(&self, g: &Self::Element) -> String;
}

/// `d(o, g^{n_max}·o) / n_max`, the defining limit of the translation length.
pub fn translation_length_limit_oracle<S: SpaceModel>(
    space: &S,
    g: &S::Element,
    n_max: u64,
) -> Result<f64, ModelError> {
    if n_max == 0 {
        return Err(ModelError::ZeroPower);
    }
    let gn = space.power(g, n_max as i64)?;
    Ok(space.displacement(&gn) / n_max as f64)
}
