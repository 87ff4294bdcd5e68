use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Loci, PivotError};
use crate::geometry::{gromov_product, is_head_marked, is_witnessed, strictly_below, Metric, Segment};

/// Where the moving point `z` sits, by 0-based pivot index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovingPoint {
    Origin,
    /// `y_{i,0}⁺`.
    Plus(u32),
    /// `y_{i,1}⁻`.
    Minus(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepCase {
    Gain,
    /// Kept `P ∩ {…, i(1)}`; `chain` is `i(1) < … < i(N)`.
    Backtrack {
        chain: Vec<u32>,
    },
    Reset,
}

/// State after one step of the construction, plus how it was reached.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Largest element of `P`, if any.
    pub top: Option<u32>,
    pub size: u32,
    pub z: MovingPoint,
    pub case: StepCase,
    /// `|P_k| − |P_{k−1}|`.
    pub increment: i64,
}

impl StepRecord {
    pub fn backtrack_depth(&self) -> u32 {
        if self.increment < 0 {
            (-self.increment) as u32
        } else {
            0
        }
    }
}

const INITIAL: StepRecord =
    StepRecord { top: None, size: 0, z: MovingPoint::Origin, case: StepCase::Reset, increment: 0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Edge {
    /// `[y_{u,0}⁺, y_{v,1}⁻]` witnessed by `([y_{u,0}⁺, y_{u,2}⁺], [y_{v,2}⁻, y_{v,1}⁻])`.
    Plus,
    /// `[y_{u,1}⁻, y_{v,1}⁻]` witnessed by `([y_{u,1}⁻, y_{u,0}⁻], [y_{v,2}⁻, y_{v,1}⁻])`.
    Minus,
}

/// Incremental pivotal-time construction over a list of block loci.
///
/// `P` is kept as a persistent stack: `below[k]` is the top of `P` when
/// step `k` ran, so any committed state lists its elements by following
/// links from its top. Pivot indices are 0-based positions in the loci
/// list (the `i`-th Schottky block has index `i − 1`).
#[derive(Clone, Debug)]
pub struct PivotEngine<P> {
    c0: f64,
    d0: f64,
    origin: P,
    loci: Vec<Loci<P>>,
    below: Vec<Option<u32>>,
    records: Vec<StepRecord>,
    edges: HashMap<(u32, u32, Edge), bool>,
}

impl<P: Clone + std::fmt::Debug> PivotEngine<P> {
    pub fn new(c0: f64, d0: f64, origin: P) -> Self {
        Self { c0, d0, origin, loci: Vec::new(), below: Vec::new(), records: Vec::new(), edges: HashMap::new() }
    }

    pub fn push_loci(&mut self, l: Loci<P>) {
        self.loci.push(l);
        self.below.push(None);
    }

    pub fn loci(&self) -> &[Loci<P>] {
        &self.loci
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn origin(&self) -> &P {
        &self.origin
    }

    /// Drops loci and records from index `k` on.
    pub fn truncate(&mut self, k: usize) {
        self.loci.truncate(k);
        self.below.truncate(k);
        self.records.truncate(k);
        self.edges.retain(|&(u, v, _), _| (u as usize) < k && (v as usize) < k);
    }

    /// State after step `k − 1`; the empty state for `k = 0`.
    pub fn state_before(&self, k: usize) -> Result<&StepRecord, PivotError> {
        match k {
            0 => Ok(&INITIAL),
            k => self.records.get(k - 1).ok_or(PivotError::OutOfOrder(k)),
        }
    }

    /// Elements of `P` under `top`, ascending.
    pub fn elements(&self, top: Option<u32>) -> Vec<u32> {
        let mut out = Vec::new();
        let mut cur = top;
        while let Some(i) = cur {
            out.push(i);
            cur = self.below[i as usize];
        }
        out.reverse();
        out
    }

    pub fn point(&self, z: MovingPoint) -> &P {
        match z {
            MovingPoint::Origin => &self.origin,
            MovingPoint::Plus(i) => &self.loci[i as usize].y0p,
            MovingPoint::Minus(i) => &self.loci[i as usize].y1m,
        }
    }

    /// Runs step `k` against `next = y_{k+1,2}⁻` without committing it.
    pub fn evaluate<M>(&mut self, m: &M, k: usize, next: &P) -> Result<StepRecord, PivotError>
    where
        M: Metric<Point = P> + ?Sized,
    {
        if k >= self.loci.len() {
            return Err(PivotError::MissingLoci(k));
        }
        let prev = self.state_before(k)?.clone();
        self.below[k] = prev.top;
        let l = &self.loci[k];
        let z = self.point(prev.z);
        let c = self.c0;
        let gain = strictly_below(m, gromov_product(m, &l.y2m, z, &l.y1m), c)
            && strictly_below(m, gromov_product(m, &l.y2m, z, &l.y0m), c)
            && strictly_below(m, gromov_product(m, &l.y2p, &l.y0p, next), c);
        if gain {
            return Ok(StepRecord {
                top: Some(k as u32),
                size: prev.size + 1,
                z: MovingPoint::Plus(k as u32),
                case: StepCase::Gain,
                increment: 1,
            });
        }
        let list = self.elements(prev.top);
        Ok(match self.longest_chain(m, &list, next)? {
            Some(chain) => {
                let pos = list.iter().position(|&i| i == chain[0]).expect("chain lies in P") as u32;
                StepRecord {
                    top: Some(chain[0]),
                    size: pos + 1,
                    z: MovingPoint::Minus(*chain.last().expect("N > 1")),
                    case: StepCase::Backtrack { chain },
                    increment: pos as i64 + 1 - prev.size as i64,
                }
            }
            None => StepRecord {
                top: None,
                size: 0,
                z: MovingPoint::Origin,
                case: StepCase::Reset,
                increment: -(prev.size as i64),
            },
        })
    }

    /// Evaluates and stores step `k`, which must be the next uncommitted one.
    pub fn commit<M>(&mut self, m: &M, k: usize, next: &P) -> Result<&StepRecord, PivotError>
    where
        M: Metric<Point = P> + ?Sized,
    {
        if k != self.records.len() {
            return Err(PivotError::OutOfOrder(k));
        }
        let r = self.evaluate(m, k, next)?;
        self.records.push(r);
        Ok(&self.records[k])
    }

    fn edge<M>(&mut self, m: &M, u: u32, v: u32, kind: Edge) -> Result<bool, PivotError>
    where
        M: Metric<Point = P> + ?Sized,
    {
        if let Some(&b) = self.edges.get(&(u, v, kind)) {
            return Ok(b);
        }
        let (lu, lv) = (&self.loci[u as usize], &self.loci[v as usize]);
        let (seg, gamma) = match kind {
            Edge::Plus => (Segment::new(lu.y0p.clone(), lv.y1m.clone()), Segment::new(lu.y0p.clone(), lu.y2p.clone())),
            Edge::Minus => (Segment::new(lu.y1m.clone(), lv.y1m.clone()), Segment::new(lu.y1m.clone(), lu.y0m.clone())),
        };
        let eta = Segment::new(lv.y2m.clone(), lv.y1m.clone());
        let b = is_witnessed(m, &seg, &[gamma, eta], self.d0)?;
        self.edges.insert((u, v, kind), b);
        Ok(b)
    }

    fn glued<M: Metric<Point = P> + ?Sized>(&self, m: &M, v: u32) -> bool {
        let l = &self.loci[v as usize];
        strictly_below(m, gromov_product(m, &l.y1m, &l.y0m, &l.y2m), self.c0)
    }

    fn closes<M: Metric<Point = P> + ?Sized>(&self, m: &M, v: u32, next: &P) -> bool {
        let l = &self.loci[v as usize];
        strictly_below(m, gromov_product(m, &l.y0m, &l.y1m, next), self.c0)
    }

    /// The backtracking chain `i(1) < … < i(N)` inside `list` such that
    /// `[y_{i(1),0}⁺, next]` is head-marked, with maximal `i(1)` and then
    /// lexicographically maximal `(N, i(2), i(3), …)`.
    ///
    /// Head marking splits into per-link witnessing, gluing at each `i(k)`,
    /// `k ≥ 2`, and a closing product at `i(N)`. So `len[v]`, the most
    /// elements a valid tail starting at `v` can have, satisfies a
    /// longest-path recursion over the DAG of admissible links, and the
    /// lexicographic maximum is read off greedily along it.
    pub fn longest_chain<M>(&mut self, m: &M, list: &[u32], next: &P) -> Result<Option<Vec<u32>>, PivotError>
    where
        M: Metric<Point = P> + ?Sized,
    {
        let n = list.len();
        if n < 2 {
            return Ok(None);
        }
        let mut len = vec![0u32; n];
        for ui in (0..n - 1).rev() {
            let vi = ui + 1;
            let v = list[vi];
            if self.glued(m, v) {
                let mut best = u32::from(self.closes(m, v, next));
                for wi in vi + 1..n {
                    if len[wi] + 1 > best && self.edge(m, v, list[wi], Edge::Minus)? {
                        best = len[wi] + 1;
                    }
                }
                len[vi] = best;
            }
            let u = list[ui];
            let mut pick: Option<usize> = None;
            for wi in ui + 1..n {
                if len[wi] == 0 || pick.is_some_and(|p| len[wi] < len[p]) {
                    continue;
                }
                if self.edge(m, u, list[wi], Edge::Plus)? {
                    pick = Some(wi);
                }
            }
            let Some(mut cur) = pick else { continue };
            let mut chain = vec![u, list[cur]];
            while len[cur] > 1 {
                let want = len[cur] - 1;
                let mut nxt = None;
                for wi in (cur + 1..n).rev() {
                    if len[wi] == want && self.edge(m, list[cur], list[wi], Edge::Minus)? {
                        nxt = Some(wi);
                        break;
                    }
                }
                cur = nxt.expect("longest-path table is consistent");
                chain.push(list[cur]);
            }
            return Ok(Some(chain));
        }
        Ok(None)
    }

    /// Segments `γ` and `η` of the head-marking for `chain`.
    pub fn chain_segments(&self, chain: &[u32]) -> (Vec<Segment<P>>, Vec<Segment<P>>) {
        let first = &self.loci[chain[0] as usize];
        let mut gammas = vec![Segment::new(first.y0p.clone(), first.y2p.clone())];
        let mut etas = Vec::new();
        for &v in &chain[1..] {
            let l = &self.loci[v as usize];
            gammas.push(Segment::new(l.y1m.clone(), l.y0m.clone()));
            etas.push(Segment::new(l.y2m.clone(), l.y1m.clone()));
        }
        (gammas, etas)
    }

    /// Checks head marking of `[y_{i(1),0}⁺, next]` for `chain` with the
    /// generic predicate, independent of the split used by the search.
    pub fn chain_is_head_marked<M>(&self, m: &M, chain: &[u32], next: &P) -> Result<bool, PivotError>
    where
        M: Metric<Point = P> + ?Sized,
    {
        let (gammas, etas) = self.chain_segments(chain);
        let seg = Segment::new(gammas[0].initial.clone(), next.clone());
        Ok(is_head_marked(m, &seg, &gammas, &etas, self.c0, self.d0)?)
    }

    /// Reference search over all subsets of `list` (at most 20 elements).
    pub fn exhaustive_chain<M>(&self, m: &M, list: &[u32], next: &P) -> Result<Option<Vec<u32>>, PivotError>
    where
        M: Metric<Point = P> + ?Sized,
    {
        assert!(list.len() <= 20, "exhaustive search limited to 20 elements");
        let mut best: Option<Vec<u32>> = None;
        for mask in 1u32..(1 << list.len()) {
            if mask.count_ones() < 2 {
                continue;
            }
            let chain: Vec<u32> = (0..list.len()).filter(|b| mask >> b & 1 == 1).map(|b| list[b]).collect();
            let better = match &best {
                None => true,
                Some(b) => chain_key(&chain) > chain_key(b),
            };
            if better && self.chain_is_head_marked(m, &chain, next)? {
                best = Some(chain);
            }
        }
        Ok(best)
    }
}

/// Order of preference: `i(1)`, then length, then `i(2), i(3), …`.
fn chain_key(chain: &[u32]) -> (u32, usize, Vec<u32>) {
    (chain[0], chain.len(), chain[1..].to_vec())
}
