use num_complex::Complex64;

use super::StepId;
use crate::models::{CayleyArena, FreeGroupWord, HyperbolicPlane, Letter, ModelError, Moebius, NodeId, SpaceModel};

/// Letters of each alphabet element, indexed by step id.
pub fn tree_letters(alphabet: &[FreeGroupWord]) -> Vec<Vec<Letter>> {
    alphabet.iter().map(|w| w.letters().to_vec()).collect()
}

/// Inserts `ω_0 o, …, ω_n o` into the arena, starting from `start`.
pub fn materialize_tree(
    arena: &mut CayleyArena,
    letters: &[Vec<Letter>],
    steps: &[StepId],
    start: NodeId,
) -> Result<Vec<NodeId>, ModelError> {
    let mut out = Vec::with_capacity(steps.len() + 1);
    let mut v = start;
    out.push(v);
    for &s in steps {
        v = arena.walk(v, &letters[s as usize])?;
        out.push(v);
    }
    Ok(out)
}

/// Orbit points `ω_0 i, …, ω_n i` and the final product.
pub fn materialize_plane(alphabet: &[Moebius], steps: &[StepId]) -> (Vec<Complex64>, Moebius) {
    let plane = HyperbolicPlane;
    let o = plane.basepoint();
    let mut g = Moebius::IDENTITY;
    let mut out = Vec::with_capacity(steps.len() + 1);
    out.push(o);
    for &s in steps {
        g = g.mul(&alphabet[s as usize]);
        out.push(g.apply(o));
    }
    (out, g)
}
