use super::{FreeGroupWord, Letter, ModelError, WORD_CAPACITY};
use crate::geometry::Metric;

/// Index of a vertex stored in a [`CayleyArena`].
pub type NodeId = u32;

const NONE: u32 = u32::MAX;

/// Shared storage for vertices of the Cayley tree of a free group.
///
/// Vertices are created on demand as children of existing ones, so every
/// stored vertex has all its ancestors stored too, and each vertex is
/// stored once. Ancestor queries use skew-binary jump pointers: the jump
/// target of a node depends only on its depth, which gives `O(log n)` level
/// ancestor and LCA queries with three words of overhead per node.
#[derive(Clone, Debug)]
pub struct CayleyArena {
    rank: u32,
    width: usize,
    parent: Vec<u32>,
    jump: Vec<u32>,
    depth: Vec<u32>,
    slot: Vec<u8>,
    children: Vec<u32>,
}

/// Arena size to roll back to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Checkpoint(usize);

fn slot_of(l: Letter) -> usize {
    let i = (l.unsigned_abs() - 1) as usize;
    if l > 0 {
        2 * i
    } else {
        2 * i + 1
    }
}

fn letter_of(slot: u8) -> Letter {
    let i = (slot / 2) as Letter + 1;
    if slot.is_multiple_of(2) {
        i
    } else {
        -i
    }
}

impl CayleyArena {
    pub fn new(rank: u32) -> Result<Self, ModelError> {
        if rank == 0 || rank > 127 {
            return Err(ModelError::BadRank(rank));
        }
        let width = 2 * rank as usize;
        Ok(Self {
            rank,
            width,
            parent: vec![0],
            jump: vec![0],
            depth: vec![0],
            slot: vec![u8::MAX],
            children: vec![NONE; width],
        })
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn root(&self) -> NodeId {
        0
    }

    /// Number of stored vertices.
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn depth(&self, v: NodeId) -> u32 {
        self.depth[v as usize]
    }

    pub fn parent(&self, v: NodeId) -> NodeId {
        self.parent[v as usize]
    }

    /// The vertex `v·l`.
    pub fn step(&mut self, v: NodeId, l: Letter) -> Result<NodeId, ModelError> {
        if l == 0 || l.unsigned_abs() > self.rank {
            return Err(ModelError::BadLetter { letter: l, rank: self.rank });
        }
        let s = slot_of(l);
        let vi = v as usize;
        if v != 0 && self.slot[vi] as usize == s ^ 1 {
            return Ok(self.parent[vi]);
        }
        let c = self.children[vi * self.width + s];
        if c != NONE {
            return Ok(c);
        }
        if self.depth[vi] as usize >= WORD_CAPACITY {
            return Err(ModelError::Capacity(WORD_CAPACITY));
        }
        if self.parent.len() >= NONE as usize {
            return Err(ModelError::Capacity(NONE as usize));
        }
        let id = self.parent.len() as u32;
        let jp = self.jump[vi] as usize;
        let jjp = self.jump[jp] as usize;
        let j = if self.depth[vi] - self.depth[jp] == self.depth[jp] - self.depth[jjp] { jjp as u32 } else { v };
        self.parent.push(v);
        self.jump.push(j);
        self.depth.push(self.depth[vi] + 1);
        self.slot.push(s as u8);
        self.children.extend(std::iter::repeat_n(NONE, self.width));
        self.children[vi * self.width + s] = id;
        Ok(id)
    }

    /// The vertex `v·w` for a word given by its letters.
    pub fn walk(&mut self, mut v: NodeId, letters: &[Letter]) -> Result<NodeId, ModelError> {
        for &l in letters {
            v = self.step(v, l)?;
        }
        Ok(v)
    }

    pub fn insert(&mut self, w: &FreeGroupWord) -> Result<NodeId, ModelError> {
        if w.rank() != self.rank {
            return Err(ModelError::RankMismatch(self.rank, w.rank()));
        }
        self.walk(0, w.letters())
    }

    /// The ancestor of `v` at depth `d ≤ depth(v)`.
    pub fn ancestor_at_depth(&self, mut v: NodeId, d: u32) -> NodeId {
        debug_assert!(d <= self.depth(v));
        while self.depth[v as usize] > d {
            let j = self.jump[v as usize];
            v = if self.depth[j as usize] >= d { j } else { self.parent[v as usize] };
        }
        v
    }

    pub fn lca(&self, u: NodeId, v: NodeId) -> NodeId {
        let (du, dv) = (self.depth(u), self.depth(v));
        let (mut u, mut v) =
            if du > dv { (self.ancestor_at_depth(u, dv), v) } else { (u, self.ancestor_at_depth(v, du)) };
        while u != v {
            let (ju, jv) = (self.jump[u as usize], self.jump[v as usize]);
            if ju != jv {
                u = ju;
                v = jv;
            } else {
                u = self.parent[u as usize];
                v = self.parent[v as usize];
            }
        }
        u
    }

    pub fn distance_between(&self, u: NodeId, v: NodeId) -> u64 {
        let l = self.lca(u, v);
        (self.depth(u) + self.depth(v) - 2 * self.depth(l)) as u64
    }

    /// Vertex at distance `t` from `x` on the geodesic `[x, y]`.
    pub fn point_on_geodesic(&self, x: NodeId, y: NodeId, t: u64) -> NodeId {
        let l = self.lca(x, y);
        let up = (self.depth(x) - self.depth(l)) as u64;
        let total = up + (self.depth(y) - self.depth(l)) as u64;
        let t = t.min(total);
        if t <= up {
            self.ancestor_at_depth(x, self.depth(x) - t as u32)
        } else {
            self.ancestor_at_depth(y, self.depth(l) + (t - up) as u32)
        }
    }

    /// The `k`-th letter (0-based) of the word of `v`.
    pub fn letter_at(&self, v: NodeId, k: u32) -> Letter {
        let a = self.ancestor_at_depth(v, k + 1);
        letter_of(self.slot[a as usize])
    }

    pub fn word(&self, mut v: NodeId) -> FreeGroupWord {
        let mut letters = Vec::with_capacity(self.depth(v) as usize);
        while v != 0 {
            letters.push(letter_of(self.slot[v as usize]));
            v = self.parent[v as usize];
        }
        letters.reverse();
        FreeGroupWord::from_letters(self.rank, &letters).expect("stored words are reduced")
    }

    /// Translation length of the element whose orbit point is `v`.
    pub fn cyclic_length(&self, v: NodeId) -> u64 {
        self.word(v).cyclic_length() as u64
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint(self.len())
    }

    /// Forgets every vertex created after `cp`.
    pub fn rollback(&mut self, cp: Checkpoint) {
        for id in (cp.0..self.len()).rev() {
            let p = self.parent[id] as usize;
            self.children[p * self.width + self.slot[id] as usize] = NONE;
        }
        self.parent.truncate(cp.0);
        self.jump.truncate(cp.0);
        self.depth.truncate(cp.0);
        self.slot.truncate(cp.0);
        self.children.truncate(cp.0 * self.width);
    }
}

impl Metric for CayleyArena {
    type Point = NodeId;

    fn distance(&self, x: &NodeId, y: &NodeId) -> f64 {
        self.distance_between(*x, *y) as f64
    }

    fn delta(&self) -> f64 {
        0.0
    }
}
