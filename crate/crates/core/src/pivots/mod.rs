//! Pivotal times of a decomposed random walk: the inductive construction
//! with backtracking, eventual pivots, pivoting moves and the alignment of
//! pivotal loci.

mod engine;
mod run;
mod tree;

pub use engine::{MovingPoint, PivotEngine, StepCase, StepRecord};
pub use run::{compute_loci, AlignmentKind, AlignmentReport, EventualPivots, MarkingReport, PivotRecord, PivotRun};
pub use tree::{
    admissible_replacements, bidirectional_pivot_check, pivot_trajectory, rerun_pivoted, BidirectionalReport, TreeWalk,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{gromov_product, is_witnessed, GeometryError, GromovConstants, Segment};
use crate::models::{ModelError, SpaceModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PivotError {
    #[error("block {0} is not a complete Schottky block")]
    NotSchottky(usize),
    #[error("no loci for pivot index {0}")]
    MissingLoci(usize),
    #[error("step {0} evaluated before its predecessor")]
    OutOfOrder(usize),
    #[error("{0} is not a pivotal time")]
    NotPivotal(u32),
    #[error("not a pivoting move: (z, ȳ_{t})_y = {value} is not below C0")]
    NotPivotingMove { t: u8, value: f64 },
    #[error("replacement {0} is outside the Schottky set")]
    BadReplacement(u32),
    #[error("alignment violated at ({i}, {j}, {k}): {kind:?} = {value}")]
    Alignment { i: usize, j: usize, k: usize, kind: AlignmentKind, value: f64 },
    #[error("marking between pivots {0} and {1} fails")]
    Marking(u32, u32),
    #[error("horizon {horizon} must exceed n = {n} and fit in the path")]
    Horizon { n: usize, horizon: usize },
    #[error("insufficient pivots: {forward} forward, {backward} backward")]
    InsufficientPivots { forward: usize, backward: usize },
    #[error("time {0} beyond the path")]
    Time(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The five loci of a Schottky block `a² c² b²` starting at `y_{i,2}⁻`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Loci<P> {
    pub y2m: P,
    pub y1m: P,
    pub y0m: P,
    pub y0p: P,
    pub y2p: P,
}

/// Trajectory-independent conditions on the middle of a Schottky block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CBlockReport {
    /// `max_a (c o, a⁻² o)_o`.
    pub max_c_a: f64,
    /// `max_b (c⁻¹ o, b² o)_o`.
    pub max_c_b: f64,
    /// `[o, c² o]` is `D0`-witnessed by `([o, c o], [c o, c² o])`.
    pub c_square_witnessed: bool,
    pub passed: bool,
}

pub fn validate_c_block<S: SpaceModel>(
    space: &S,
    schottky: &[S::Element],
    c: &S::Element,
    k: &GromovConstants,
) -> Result<CBlockReport, PivotError> {
    let o = space.basepoint();
    let co = space.orbit_point(c)?;
    let c_inv_o = space.orbit_point(&space.inverse(c))?;
    let mut max_c_a = f64::NEG_INFINITY;
    let mut max_c_b = f64::NEG_INFINITY;
    for s in schottky {
        let s2 = space.power(s, 2)?;
        let a = space.orbit_point(&space.inverse(&s2))?;
        let b = space.orbit_point(&s2)?;
        max_c_a = max_c_a.max(gromov_product(space, &o, &co, &a));
        max_c_b = max_c_b.max(gromov_product(space, &o, &c_inv_o, &b));
    }
    let c2o = space.orbit_point(&space.power(c, 2)?)?;
    let c_square_witnessed = is_witnessed(
        space,
        &Segment::new(o.clone(), c2o.clone()),
        &[Segment::new(o, co.clone()), Segment::new(co, c2o)],
        k.d0,
    )?;
    let passed = max_c_a < k.c0 && max_c_b < k.c0 && c_square_witnessed;
    Ok(CBlockReport { max_c_a, max_c_b, c_square_witnessed, passed })
}
