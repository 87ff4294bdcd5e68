use pivotwalk::geometry::GromovConstants;
use pivotwalk::models::{FreeGroup, FreeGroupWord, HyperbolicPlane, Moebius, SpaceModel, PLANE_DELTA};
use pivotwalk::schottky::PATTERN_LEN;
use pivotwalk::stats::{PlaneLaw, PlaneTracker, TreeLaw, WordTracker};
use pivotwalk::walk::StepDistribution;

use crate::config::ModelConfig;
use crate::CliError;

/// A configured step law, ready to sample.
#[derive(Clone, Debug)]
pub enum BuiltModel {
    Tree { space: FreeGroup, mu: StepDistribution<FreeGroupWord> },
    Plane { mu: StepDistribution<Moebius> },
}

impl BuiltModel {
    pub fn new(cfg: &ModelConfig) -> Result<Self, CliError> {
        let bad = |e: &dyn std::fmt::Display| CliError::Config(format!("model: {e}"));
        match cfg {
            ModelConfig::Tree { rank, generators, weights } => {
                let space = FreeGroup::new(*rank).map_err(|e| bad(&e))?;
                let support =
                    generators.iter().map(|g| space.word(g)).collect::<Result<Vec<_>, _>>().map_err(|e| bad(&e))?;
                let mu = StepDistribution::new(support, weights.clone()).map_err(|e| bad(&e))?;
                Ok(Self::Tree { space, mu })
            }
            ModelConfig::HyperbolicPlane { matrices, weights } => {
                let support = matrices
                    .iter()
                    .map(|m| Moebius::new(m[0], m[1], m[2], m[3]))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| bad(&e))?;
                let mu = StepDistribution::new(support, weights.clone()).map_err(|e| bad(&e))?;
                Ok(Self::Plane { mu })
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Tree { mu, .. } => pivotwalk::stats::WalkLaw::describe(&TreeLaw::new(mu.clone())),
            Self::Plane { mu } => pivotwalk::stats::WalkLaw::describe(&PlaneLaw::new(mu.clone())),
        }
    }

    /// Constants ladder with `C0` bounding the displacement of every
    /// length-10 pattern in the Schottky pair.
    pub fn constants(&self) -> Result<GromovConstants, CliError> {
        let (delta, d) = match self {
            Self::Tree { space, mu } => {
                let (a, b) = schottky_pair(space, mu.support())?;
                (0.0, space.displacement(a).max(space.displacement(b)))
            }
            Self::Plane { mu } => {
                let h = HyperbolicPlane;
                let (a, b) = schottky_pair(&h, mu.support())?;
                (PLANE_DELTA, h.displacement(a).max(h.displacement(b)))
            }
        };
        GromovConstants::new(delta, PATTERN_LEN as f64 * d).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn tree(&self) -> Result<(&FreeGroup, &StepDistribution<FreeGroupWord>), CliError> {
        match self {
            Self::Tree { space, mu } => Ok((space, mu)),
            Self::Plane { .. } => Err(CliError::Config("this suite needs a tree model".into())),
        }
    }

    pub fn word_power(&self, p: i64) -> Result<WordTracker, CliError> {
        let (space, mu) = self.tree()?;
        let w = space.power(&mu.support()[0], p)?;
        Ok(WordTracker::from(&w))
    }

    pub fn plane_power(mu: &StepDistribution<Moebius>, p: i64) -> Result<PlaneTracker, CliError> {
        Ok(PlaneTracker::new(HyperbolicPlane.power(&mu.support()[0], p)?))
    }
}

/// The first support element and the first later one independent of it.
pub fn schottky_pair<'a, S: SpaceModel>(
    space: &S,
    support: &'a [S::Element],
) -> Result<(&'a S::Element, &'a S::Element), CliError> {
    let a = support.first().ok_or_else(|| CliError::Config("empty support".into()))?;
    for b in &support[1..] {
        if space.are_independent(a, b)? {
            return Ok((a, b));
        }
    }
    Err(CliError::Config("no support element is independent of the first".into()))
}
