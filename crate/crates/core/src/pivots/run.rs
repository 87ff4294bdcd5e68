use serde::{Deserialize, Serialize};

use super::{Loci, MovingPoint, PivotEngine, PivotError, StepCase, StepRecord};
use crate::geometry::{is_fully_marked, is_tail_marked, DistanceMatrix, GromovConstants, Metric, Segment};
use crate::walk::Trajectory;

/// Loci of the Schottky block with 1-based block index `t`, read off the
/// materialized positions `ω_0 o, …, ω_n o`.
pub fn compute_loci<P: Clone>(traj: &Trajectory, positions: &[P], t: usize) -> Result<Loci<P>, PivotError> {
    let complete = traj.complete_blocks(traj.len());
    if t == 0 || t > complete || traj.schottky_choice(t).is_none() || positions.len() <= traj.len() {
        return Err(PivotError::NotSchottky(t));
    }
    let n = traj.block_len / 6;
    let s = traj.block_len * (t - 1);
    Ok(Loci {
        y2m: positions[s].clone(),
        y1m: positions[s + n].clone(),
        y0m: positions[s + 2 * n].clone(),
        y0p: positions[s + 4 * n].clone(),
        y2p: positions[s + 6 * n].clone(),
    })
}

/// Snapshot of the construction at the end of a path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PivotRecord<P> {
    /// `P_n` as 1-based Schottky block numbers `i`.
    pub pivots: Vec<u32>,
    pub z: MovingPoint,
    pub z_point: P,
    /// `(T(i), loci)` per Schottky block.
    pub loci: Vec<(usize, Loci<P>)>,
    pub history: Vec<StepRecord>,
}

/// `Q_n` certified up to a horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventualPivots {
    pub n: usize,
    pub horizon: usize,
    pub pivots: Vec<u32>,
    /// Always true: the set is stable on `[n, horizon]`, not beyond.
    pub stable_within_horizon: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentKind {
    /// `(x_i, x_k)_{x_j} < F0` failed.
    Product,
    /// `d(x_i, x_{j+1}) ≥ d(x_i, x_j) + L0/2` failed.
    Growth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub points: usize,
    pub max_product: f64,
    /// Smallest `d(x_i, x_{j+1}) − d(x_i, x_j) − L0/2`.
    pub min_growth_margin: f64,
    pub product_violations: usize,
    pub growth_violations: usize,
    pub first_violation: Option<(usize, usize, usize, AlignmentKind, f64)>,
}

impl AlignmentReport {
    pub fn passed(&self) -> bool {
        self.product_violations == 0 && self.growth_violations == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkingReport {
    /// Consecutive pivot pairs checked for full marking (times two values of `t`).
    pub full_checked: usize,
    pub full_failed: usize,
    pub tail_checked: usize,
    pub tail_failed: usize,
}

/// The construction run over a whole materialized path.
///
/// Steps `0..B−1` are committed with `next = y_{k+1,2}⁻`; the last Schottky
/// block uses `next = ω_n o`. Walk-time states for earlier `t` reuse the
/// committed prefix and re-evaluate only the last step against `ω_t o`.
#[derive(Clone, Debug)]
pub struct PivotRun<P> {
    engine: PivotEngine<P>,
    blocks: Vec<usize>,
    block_len: usize,
    positions: Vec<P>,
}

impl<P: Clone + std::fmt::Debug> PivotRun<P> {
    pub fn new<M>(m: &M, k: &GromovConstants, traj: &Trajectory, positions: Vec<P>) -> Result<Self, PivotError>
    where
        M: Metric<Point = P> + ?Sized,
    {
        if positions.len() != traj.len() + 1 {
            return Err(PivotError::Time(positions.len()));
        }
        let blocks = traj.schottky_blocks();
        let mut engine = PivotEngine::new(k.c0, k.d0, positions[0].clone());
        for &t in &blocks {
            engine.push_loci(compute_loci(traj, &positions, t)?);
        }
        let end = positions[traj.len()].clone();
        for i in 0..blocks.len() {
            let next = match engine.loci().get(i + 1) {
                Some(l) => l.y2m.clone(),
                None => end.clone(),
            };
            engine.commit(m, i, &next)?;
        }
        Ok(Self { engine, blocks, block_len: traj.block_len, positions })
    }

    pub fn engine(&self) -> &PivotEngine<P> {
        &self.engine
    }

    pub fn positions(&self) -> &[P] {
        &self.positions
    }

    /// Walk length `n`.
    pub fn len(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `T(i)` for each Schottky block, 1-based.
    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn schottky_len(&self) -> usize {
        self.blocks.len()
    }

    /// Committed step records, one per complete Schottky block.
    pub fn history(&self) -> &[StepRecord] {
        self.engine.records()
    }

    pub fn final_state(&self) -> StepRecord {
        self.engine.state_before(self.blocks.len()).expect("all steps committed").clone()
    }

    /// `P_n` as 1-based block numbers.
    pub fn pivots(&self) -> Vec<u32> {
        self.one_based(self.final_state().top)
    }

    fn one_based(&self, top: Option<u32>) -> Vec<u32> {
        self.engine.elements(top).into_iter().map(|i| i + 1).collect()
    }

    /// Schottky blocks complete at walk time `t`.
    pub fn schottky_count_at(&self, t: usize) -> usize {
        let complete = t / self.block_len;
        self.blocks.partition_point(|&b| b <= complete)
    }

    /// State of the construction at walk time `t`.
    pub fn state_at<M>(&mut self, m: &M, t: usize) -> Result<StepRecord, PivotError>
    where
        M: Metric<Point = P> + ?Sized,
    {
        if t > self.len() {
            return Err(PivotError::Time(t));
        }
        match self.schottky_count_at(t) {
            0 => Ok(self.engine.state_before(0)?.clone()),
            b if t == self.len() => Ok(self.engine.state_before(b)?.clone()),
            b => {
                let next = self.positions[t].clone();
                self.engine.evaluate(m, b - 1, &next)
            }
        }
    }

    pub fn pivots_at<M>(&mut self, m: &M, t: usize) -> Result<Vec<u32>, PivotError>
    where
        M: Metric<Point = P> + ?Sized,
    {
        let s = self.state_at(m, t)?;
        Ok(self.one_based(s.top))
    }

    /// `|P_t|` for `t = 0..=n`.
    pub fn size_series<M>(&mut self, m: &M) -> Result<Vec<u32>, PivotError>
    where
        M: Metric<Point = P> + ?Sized,
    {
        (0..=self.len()).map(|t| Ok(self.state_at(m, t)?.size)).collect()
    }

    /// The first `min_{n ≤ k ≤ H} |P_k|` elements of `P_n`.
    pub fn eventual<M>(&mut self, m: &M, n: usize, horizon: usize) -> Result<EventualPivots, PivotError>
    where
        M: Metric<Point = P> + ?Sized,
    {
        if horizon <= n || horizon > self.len() {
            return Err(PivotError::Horizon { n, horizon });
        }
        let mut keep = u32::MAX;
        for t in n..=horizon {
            keep = keep.min(self.state_at(m, t)?.size);
        }
        let mut pivots = self.pivots_at(m, n)?;
        pivots.truncate(keep as usize);
        Ok(EventualPivots { n, horizon, pivots, stable_within_horizon: true })
    }

    pub fn record(&self) -> PivotRecord<P> {
        let s = self.final_state();
        PivotRecord {
            pivots: self.one_based(s.top),
            z: s.z,
            z_point: self.engine.point(s.z).clone(),
            loci: self.blocks.iter().copied().zip(self.engine.loci().iter().cloned()).collect(),
            history: self.engine.records().to_vec(),
        }
    }

    /// Marked points `o, y_{j,0}⁻, y_{j,0}⁺, …, end` for 1-based pivots.
    pub fn marked_points(&self, pivots: &[u32], end: &P) -> Vec<P> {
        let mut xs = vec![self.engine.origin().clone()];
        for &j in pivots {
            let l = &self.engine.loci()[j as usize - 1];
            xs.push(l.y0m.clone());
            xs.push(l.y0p.clone());
        }
        xs.push(end.clone());
        xs
    }

    /// Both alignment inequalities over all index triples of the marked
    /// points at walk time `t`.
    pub fn alignment<M>(&mut self, m: &M, k: &GromovConstants, t: usize) -> Result<AlignmentReport, PivotError>
    where
        M: Metric<Point = P> + ?Sized,
    {
        let pivots = self.pivots_at(m, t)?;
        let end = self.positions[t].clone();
        Ok(alignment_report(m, k, &self.marked_points(&pivots, &end)))
    }

    /// Like [`Self::alignment`] but fails on the first violation.
    pub fn pivotal_alignment<M>(&mut self, m: &M, k: &GromovConstants, t: usize) -> Result<AlignmentReport, PivotError>
    where
        M: Metric<Point = P> + ?Sized,
    {
        let r = self.alignment(m, k, t)?;
        match r.first_violation {
            Some((i, j, kk, kind, value)) => Err(PivotError::Alignment { i, j, k: kk, kind, value }),
            None => Ok(r),
        }
    }

    /// Full marking between consecutive pivots of `P_n` and tail marking of
    /// `[o, y_{k,t}⁻]` for `k = min P_n`, both values of `t`.
    pub fn check_marking<M>(&self, m: &M, k: &GromovConstants) -> Result<MarkingReport, PivotError>
    where
        M: Metric<Point = P> + ?Sized,
    {
        let p = self.engine.elements(self.final_state().top);
        let mut r = MarkingReport { full_checked: 0, full_failed: 0, tail_checked: 0, tail_failed: 0 };
        if let Some(&first) = p.first() {
            let l = &self.engine.loci()[first as usize];
            for yt in [&l.y0m, &l.y1m] {
                let seg = Segment::new(self.engine.origin().clone(), yt.clone());
                let eta = Segment::new(l.y2m.clone(), yt.clone());
                r.tail_checked += 1;
                if !is_tail_marked(m, &seg, &[], &[eta], k.c0, k.d0)? {
                    r.tail_failed += 1;
                }
            }
        }
        for w in p.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let before = self.engine.state_before(hi as usize)?;
            let chain = match (&before.case, before.z) {
                (StepCase::Gain, MovingPoint::Plus(i)) if i == lo => vec![lo],
                (StepCase::Backtrack { chain }, _) if chain[0] == lo => chain.clone(),
                _ => return Err(PivotError::Marking(lo + 1, hi + 1)),
            };
            let (gammas, mut etas) = self.engine.chain_segments(&chain);
            let l = &self.engine.loci()[hi as usize];
            for yt in [&l.y0m, &l.y1m] {
                etas.push(Segment::new(l.y2m.clone(), yt.clone()));
                let seg = Segment::new(gammas[0].initial.clone(), yt.clone());
                r.full_checked += 1;
                if !is_fully_marked(m, &seg, &gammas, &etas, k.c0, k.d0)? {
                    r.full_failed += 1;
                }
                etas.pop();
            }
        }
        Ok(r)
    }
}

/// Checks `(x_i, x_k)_{x_j} < F0` for `i ≤ j ≤ k` and
/// `d(x_i, x_{j+1}) ≥ d(x_i, x_j) + L0/2` for `i ≤ j`.
pub fn alignment_report<M: Metric + ?Sized>(m: &M, k: &GromovConstants, xs: &[M::Point]) -> AlignmentReport {
    let dm = DistanceMatrix::new(m, xs);
    let n = xs.len();
    let slack = m.slack();
    let mut r = AlignmentReport {
        points: n,
        max_product: 0.0,
        min_growth_margin: f64::INFINITY,
        product_violations: 0,
        growth_violations: 0,
        first_violation: None,
    };
    for j in 0..n {
        for i in 0..j {
            for kk in j + 1..n {
                let v = dm.product(j, i, kk);
                r.max_product = r.max_product.max(v);
                if !(v < k.f0 - slack) {
                    r.product_violations += 1;
                    r.first_violation.get_or_insert((i, j, kk, super::AlignmentKind::Product, v));
                }
            }
        }
    }
    for j in 0..n.saturating_sub(1) {
        for i in 0..=j {
            let margin = dm.dist(i, j + 1) - dm.dist(i, j) - k.l0 / 2.0;
            r.min_growth_margin = r.min_growth_margin.min(margin);
            if margin < -slack {
                r.growth_violations += 1;
                r.first_violation.get_or_insert((i, j, j + 1, super::AlignmentKind::Growth, margin));
            }
        }
    }
    r
}
