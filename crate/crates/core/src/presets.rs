//! Reference experiment setups: the free group of rank 2 with its Schottky
//! set, constants ladder and decomposed models.

use thiserror::Error;

use crate::geometry::{GeometryError, GromovConstants};
use crate::models::{FreeGroup, FreeGroupWord, ModelError};
use crate::schottky::{search_schottky, tree_probes, SchottkyError, SchottkySearch, DEFAULT_POWER_CAP};
use crate::walk::{stream_rng, DecomposedModel, StepDistribution, Stream, WalkError};

/// Size of the searched Schottky set.
pub const SCHOTTKY_TARGET: usize = 310;
/// Size of the subset `S` used by the walk model; the next element is `c`.
pub const SUBSET_SIZE: usize = 305;

#[derive(Debug, Error)]
pub enum PresetError {
    #[error(transparent)]
    Schottky(#[from] SchottkyError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Probe family used by the search and by fresh re-verification.
pub fn standard_probes(
    set: &[FreeGroupWord],
    seed: u64,
    count: usize,
) -> Result<Vec<(FreeGroupWord, FreeGroupWord)>, ModelError> {
    let mut rng = stream_rng(seed, Stream::Auxiliary, 0);
    tree_probes(2, set, 24, count, 4, &mut rng)
}

/// `F₂ = ⟨a, b⟩` with a 310-element Schottky set of `{a, b}`-pattern powers,
/// `C0 = K` and `K′ = L0`.
#[derive(Clone, Debug)]
pub struct TreePreset {
    pub space: FreeGroup,
    pub constants: GromovConstants,
    pub search: SchottkySearch<FreeGroupWord>,
    /// Simple random walk on `{a, a⁻¹, b, b⁻¹}`.
    pub srw: StepDistribution<FreeGroupWord>,
}

impl TreePreset {
    pub fn new(probe_seed: u64, probe_count: usize) -> Result<Self, PresetError> {
        let space = FreeGroup::new(2)?;
        let a = space.word("a")?;
        let b = space.word("b")?;
        // Patterns of length 10 in {a, b} have displacement 10 = K = C0.
        let constants = GromovConstants::new(0.0, 10.0)?;
        let search = search_schottky(&space, &a, &b, SCHOTTKY_TARGET, constants.l0, DEFAULT_POWER_CAP, |set| {
            standard_probes(set, probe_seed, probe_count)
        })?;
        if search.params.k > constants.c0 {
            return Err(GeometryError::Ladder(format!("Schottky K = {} exceeds C0", search.params.k)).into());
        }
        let gens = ["a", "A", "b", "B"].iter().map(|s| space.word(s)).collect::<Result<Vec<_>, _>>()?;
        let srw = StepDistribution::uniform(gens)?;
        Ok(Self { space, constants, search, srw })
    }

    /// The subset `S`.
    pub fn schottky(&self) -> &[FreeGroupWord] {
        &self.search.params.set[..SUBSET_SIZE]
    }

    /// The extra element `c`.
    pub fn c(&self) -> &FreeGroupWord {
        &self.search.params.set[SUBSET_SIZE]
    }

    /// Block-level model: a Schottky block with probability `alpha`, else
    /// six simple-random-walk steps.
    pub fn block_model(&self, alpha: f64) -> Result<DecomposedModel<FreeGroupWord>, PresetError> {
        Ok(DecomposedModel::block(self.schottky().to_vec(), self.c().clone(), alpha, self.srw.clone())?)
    }

    /// The exact decomposition of the simple random walk with `N = |s|`.
    pub fn exact_model(&self) -> Result<DecomposedModel<FreeGroupWord>, PresetError> {
        let index = |l: i32| -> u32 {
            match l {
                1 => 0,
                -1 => 1,
                2 => 2,
                _ => 3,
            }
        };
        let spell = |w: &FreeGroupWord| w.letters().iter().map(|&l| index(l)).collect::<Vec<_>>();
        let s = self.schottky().iter().map(spell).collect();
        Ok(DecomposedModel::from_base(self.srw.clone(), s, spell(self.c()))?)
    }
}
