use serde::{Deserialize, Serialize};

use super::{PivotError, PivotRun};
use crate::geometry::{gromov_product, strictly_below, GromovConstants, Metric};
use crate::models::{CayleyArena, FreeGroupWord, Letter, NodeId};
use crate::walk::{materialize_tree, tree_letters, BlockDraw, DecomposedModel, Trajectory};

/// A Cayley-tree arena together with the letters of a model alphabet.
#[derive(Clone, Debug)]
pub struct TreeWalk {
    pub arena: CayleyArena,
    letters: Vec<Vec<Letter>>,
}

impl TreeWalk {
    pub fn new(model: &DecomposedModel<FreeGroupWord>) -> Result<Self, PivotError> {
        let rank = model.alphabet().first().map_or(2, |w| w.rank());
        Ok(Self { arena: CayleyArena::new(rank)?, letters: tree_letters(model.alphabet()) })
    }

    /// `ω_0 o, …, ω_n o` from the root.
    pub fn materialize(&mut self, traj: &Trajectory) -> Result<Vec<NodeId>, PivotError> {
        let root = self.arena.root();
        Ok(materialize_tree(&mut self.arena, &self.letters, &traj.steps, root)?)
    }

    pub fn run(&mut self, k: &GromovConstants, traj: &Trajectory) -> Result<PivotRun<NodeId>, PivotError> {
        let pos = self.materialize(traj)?;
        PivotRun::new(&self.arena, k, traj, pos)
    }

    fn walk_steps(&mut self, v: NodeId, steps: &[u32]) -> Result<NodeId, PivotError> {
        let mut v = v;
        for &s in steps {
            v = self.arena.walk(v, &self.letters[s as usize])?;
        }
        Ok(v)
    }
}

/// Context of a pivotal time: the moving point `z_{i−1}` and `y_{i,2}⁻`.
fn pivot_context(run: &PivotRun<NodeId>, i: u32) -> Result<(NodeId, NodeId), PivotError> {
    if !run.pivots().contains(&i) {
        return Err(PivotError::NotPivotal(i));
    }
    let e = run.engine();
    let z = *e.point(e.state_before(i as usize - 1)?.z);
    Ok((z, e.loci()[i as usize - 1].y2m))
}

/// `[(z, ȳ_{i,1}⁻)_{y_{i,2}⁻}, (z, ȳ_{i,0}⁻)_{y_{i,2}⁻}]` for replacement `a_bar`.
fn replacement_products(
    walk: &mut TreeWalk,
    model: &DecomposedModel<FreeGroupWord>,
    z: NodeId,
    y2m: NodeId,
    a_bar: u32,
) -> Result<[f64; 2], PivotError> {
    let steps = model.schottky_alphabet(a_bar).to_vec();
    let y1 = walk.walk_steps(y2m, &steps)?;
    let y0 = walk.walk_steps(y1, &steps)?;
    let a = &walk.arena;
    Ok([gromov_product(a, &y2m, &z, &y1), gromov_product(a, &y2m, &z, &y0)])
}

/// Replacements `ā ∈ S` at pivotal time `i` (1-based) satisfying both
/// pivoting conditions. The arena is left as it was.
pub fn admissible_replacements(
    walk: &mut TreeWalk,
    model: &DecomposedModel<FreeGroupWord>,
    k: &GromovConstants,
    run: &PivotRun<NodeId>,
    i: u32,
) -> Result<Vec<u32>, PivotError> {
    let (z, y2m) = pivot_context(run, i)?;
    let cp = walk.arena.checkpoint();
    let mut out = Vec::new();
    for a_bar in 0..model.schottky_len() as u32 {
        let p = replacement_products(walk, model, z, y2m, a_bar)?;
        if p.iter().all(|&v| strictly_below(&walk.arena, v, k.c0)) {
            out.push(a_bar);
        }
    }
    walk.arena.rollback(cp);
    Ok(out)
}

/// The trajectory with `a_i` replaced by `S[a_bar]`, after checking the
/// pivoting conditions.
pub fn pivot_trajectory(
    walk: &mut TreeWalk,
    model: &DecomposedModel<FreeGroupWord>,
    k: &GromovConstants,
    traj: &Trajectory,
    run: &PivotRun<NodeId>,
    i: u32,
    a_bar: u32,
) -> Result<Trajectory, PivotError> {
    if a_bar as usize >= model.schottky_len() {
        return Err(PivotError::BadReplacement(a_bar));
    }
    let (z, y2m) = pivot_context(run, i)?;
    let cp = walk.arena.checkpoint();
    let p = replacement_products(walk, model, z, y2m, a_bar);
    walk.arena.rollback(cp);
    for (t, &v) in p?.iter().enumerate() {
        if !strictly_below(&walk.arena, v, k.c0) {
            return Err(PivotError::NotPivotingMove { t: 1 - t as u8, value: v });
        }
    }
    let t = run.blocks()[i as usize - 1];
    let mut blocks = traj.blocks.clone();
    let BlockDraw::Schottky { b, .. } = blocks[t - 1] else {
        return Err(PivotError::NotSchottky(t));
    };
    blocks[t - 1] = BlockDraw::Schottky { a: a_bar, b };
    Ok(Trajectory::from_blocks(model, blocks, traj.len(), traj.seed, traj.trial, traj.stream))
}

/// Runs the construction on a pivoted trajectory, reusing the positions
/// before the changed block. New vertices stay in the arena; take a
/// checkpoint first to discard them afterwards.
pub fn rerun_pivoted(
    walk: &mut TreeWalk,
    k: &GromovConstants,
    run: &PivotRun<NodeId>,
    pivoted: &Trajectory,
    i: u32,
) -> Result<PivotRun<NodeId>, PivotError> {
    let start = (run.blocks()[i as usize - 1] - 1) * pivoted.block_len;
    let mut pos = run.positions()[..start].to_vec();
    let from = run.positions()[start];
    pos.extend(materialize_tree(&mut walk.arena, &walk.letters, &pivoted.steps[start..], from)?);
    PivotRun::new(&walk.arena, k, pivoted, pos)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidirectionalReport {
    pub forward_eventual: usize,
    pub backward_eventual: usize,
    /// First index `l` (1-based) where both choice conditions hold for the
    /// `l`-th forward and backward eventual pivots.
    pub m: Option<usize>,
    /// Loci checked, forward and backward together.
    pub checked: usize,
    /// Largest `(ω̌_{k'} o, ω_k o)_x` over checked loci.
    pub max_product: f64,
    /// Largest `d(x, [ω̌_{k'} o, ω_k o])` over checked loci.
    pub max_distance: f64,
    pub passed: bool,
}

/// Distance from `x` to the tree geodesic `[a, b]`, via the projection.
fn distance_to_geodesic(arena: &CayleyArena, x: NodeId, a: NodeId, b: NodeId) -> f64 {
    let along = gromov_product(arena, &a, &x, &b);
    let p = arena.point_on_geodesic(a, b, along.round() as u64);
    arena.distance(&x, &p)
}

/// Eventual pivots of both paths at half their length (horizon = full
/// length), the index `m` from which the pivots pair up, and the closeness
/// of later pivotal loci to the bi-infinite segment `[ω̌ o, ω o]`.
pub fn bidirectional_pivot_check(
    arena: &CayleyArena,
    k: &GromovConstants,
    backward: &mut PivotRun<NodeId>,
    forward: &mut PivotRun<NodeId>,
) -> Result<BidirectionalReport, PivotError> {
    let qf = forward.eventual(arena, forward.len() / 2, forward.len())?.pivots;
    let qb = backward.eventual(arena, backward.len() / 2, backward.len())?.pivots;
    if qf.is_empty() || qb.is_empty() {
        return Err(PivotError::InsufficientPivots { forward: qf.len(), backward: qb.len() });
    }
    let fl = |i: u32| &forward.engine().loci()[i as usize - 1];
    let bl = |i: u32| &backward.engine().loci()[i as usize - 1];
    let c0 = k.c0;
    let m = (0..qf.len().min(qb.len())).find(|&l| {
        let (f, b) = (fl(qf[l]), bl(qb[l]));
        strictly_below(arena, gromov_product(arena, &b.y2m, &b.y0m, &f.y2m), c0)
            && strictly_below(arena, gromov_product(arena, &f.y2m, &b.y0m, &f.y0m), c0)
    });
    let (start, end) = (backward.positions()[backward.len()], forward.positions()[forward.len()]);
    let mut r = BidirectionalReport {
        forward_eventual: qf.len(),
        backward_eventual: qb.len(),
        m: m.map(|l| l + 1),
        checked: 0,
        max_product: 0.0,
        max_distance: 0.0,
        passed: false,
    };
    let Some(m) = m else { return Ok(r) };
    let loci = qf[m..].iter().map(|&i| fl(i)).chain(qb[m..].iter().map(|&i| bl(i)));
    for l in loci {
        for x in [l.y0m, l.y0p] {
            r.checked += 1;
            r.max_product = r.max_product.max(gromov_product(arena, &x, &start, &end));
            r.max_distance = r.max_distance.max(distance_to_geodesic(arena, x, start, end));
        }
    }
    r.passed = r.max_product <= k.f0 && r.max_distance <= k.f0;
    Ok(r)
}
