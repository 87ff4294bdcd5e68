use std::fmt;

use serde::{Deserialize, Serialize};

use super::{IsometryKind, ModelError, SpaceModel};
use crate::geometry::Metric;

/// Longest word any operation may produce.
pub const WORD_CAPACITY: usize = 1 << 24;

/// A generator `±i` with `1 ≤ i ≤ rank`.
pub type Letter = i32;

/// A freely reduced word in the free group of the given rank. Doubles as
/// the vertex `w·o` of the Cayley tree.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FreeGroupWord {
    rank: u32,
    letters: Vec<Letter>,
}

impl FreeGroupWord {
    pub fn identity(rank: u32) -> Self {
        Self { rank, letters: Vec::new() }
    }

    pub fn generator(rank: u32, letter: Letter) -> Result<Self, ModelError> {
        Self::from_letters(rank, &[letter])
    }

    /// Reduces `letters` freely.
    pub fn from_letters(rank: u32, letters: &[Letter]) -> Result<Self, ModelError> {
        let mut w = Self::identity(rank);
        for &l in letters {
            w.push(l)?;
        }
        Ok(w)
    }

    /// Parses `a`, `b`, `c`, ... for generators and upper case for their
    /// inverses; `1` or the empty string is the identity.
    pub fn parse(rank: u32, s: &str) -> Result<Self, ModelError> {
        let mut w = Self::identity(rank);
        for ch in s.chars().filter(|c| !c.is_whitespace() && *c != '1') {
            let l = if ch.is_ascii_lowercase() {
                (ch as u8 - b'a') as Letter + 1
            } else if ch.is_ascii_uppercase() {
                -((ch as u8 - b'A') as Letter + 1)
            } else {
                return Err(ModelError::Parse(s.to_string()));
            };
            w.push(l)?;
        }
        Ok(w)
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Right multiplication by one letter, cancelling if possible.
    pub fn push(&mut self, l: Letter) -> Result<(), ModelError> {
        if l == 0 || l.unsigned_abs() > self.rank {
            return Err(ModelError::BadLetter { letter: l, rank: self.rank });
        }
        if self.letters.last() == Some(&-l) {
            self.letters.pop();
        } else {
            if self.letters.len() >= WORD_CAPACITY {
                return Err(ModelError::Capacity(WORD_CAPACITY));
            }
            self.letters.push(l);
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, ModelError> {
        check_rank(self.rank, other.rank)?;
        let mut w = self.clone();
        for &l in &other.letters {
            w.push(l)?;
        }
        Ok(w)
    }

    pub fn inverse(&self) -> Self {
        Self { rank: self.rank, letters: self.letters.iter().rev().map(|l| -l).collect() }
    }

    pub fn pow(&self, n: i64) -> Result<Self, ModelError> {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let (head, core, tail) = base.cyclic_split();
        let reps = n.unsigned_abs() as usize;
        let len = head.len() + tail.len() + core.len().saturating_mul(reps);
        if reps > 0 && len > WORD_CAPACITY {
            return Err(ModelError::Capacity(WORD_CAPACITY));
        }
        if reps == 0 {
            return Ok(Self::identity(self.rank));
        }
        let mut letters = Vec::with_capacity(len);
        letters.extend_from_slice(head);
        for _ in 0..reps {
            letters.extend_from_slice(core);
        }
        letters.extend_from_slice(tail);
        Ok(Self { rank: self.rank, letters })
    }

    /// Splits `w = u·c·u⁻¹` with `c` cyclically reduced.
    pub fn cyclic_split(&self) -> (&[Letter], &[Letter], &[Letter]) {
        let n = self.letters.len();
        let mut k = 0;
        while 2 * k + 1 < n && self.letters[k] == -self.letters[n - 1 - k] {
            k += 1;
        }
        (&self.letters[..k], &self.letters[k..n - k], &self.letters[n - k..])
    }

    /// Length of the cyclic reduction.
    pub fn cyclic_length(&self) -> usize {
        self.cyclic_split().1.len()
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.cyclic_length() == self.len()
    }

    /// Length of the longest common prefix: the Gromov product at `o`.
    pub fn common_prefix(&self, other: &Self) -> usize {
        self.letters.iter().zip(&other.letters).take_while(|(a, b)| a == b).count()
    }
}

fn check_rank(a: u32, b: u32) -> Result<(), ModelError> {
    if a == b {
        Ok(())
    } else {
        Err(ModelError::RankMismatch(a, b))
    }
}

impl fmt::Display for FreeGroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        for &l in &self.letters {
            if self.rank <= 26 {
                let base = if l > 0 { b'a' } else { b'A' };
                write!(f, "{}", (base + (l.unsigned_abs() - 1) as u8) as char)?;
            } else {
                write!(f, "[{l}]")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for FreeGroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}<{}>", self.rank, self)
    }
}

/// The free group of a given rank acting on its Cayley tree, basepoint the
/// identity vertex. The tree is 0-hyperbolic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeGroup {
    pub rank: u32,
}

impl FreeGroup {
    pub fn new(rank: u32) -> Result<Self, ModelError> {
        if rank == 0 || rank > 127 {
            return Err(ModelError::BadRank(rank));
        }
        Ok(Self { rank })
    }

    pub fn checked_distance(&self, x: &FreeGroupWord, y: &FreeGroupWord) -> Result<u64, ModelError> {
        check_rank(x.rank, y.rank)?;
        check_rank(self.rank, x.rank)?;
        Ok((x.len() + y.len() - 2 * x.common_prefix(y)) as u64)
    }

    pub fn word(&self, s: &str) -> Result<FreeGroupWord, ModelError> {
        FreeGroupWord::parse(self.rank, s)
    }

    /// `(x, s^i·y)_o` without materializing `s^i`. `s` must be cyclically
    /// reduced.
    fn power_product_lazy(&self, x: &FreeGroupWord, s: &FreeGroupWord, i: i64, y: &FreeGroupWord) -> f64 {
        let base = if i < 0 { s.inverse() } else { s.clone() };
        let reps = i.unsigned_abs() as usize;
        let sl = base.letters();
        let total = sl.len() * reps;
        // Letters of s^reps read from the end, inverted: the prefix of s^{-reps}.
        let inv_at = |k: usize| -sl[sl.len() - 1 - (k % sl.len())];
        let yl = y.letters();
        let mut cancel = 0;
        while cancel < total && cancel < yl.len() && yl[cancel] == inv_at(cancel) {
            cancel += 1;
        }
        let head = total - cancel;
        let word_at = |k: usize| if k < head { sl[k % sl.len()] } else { yl[cancel + k - head] };
        let len = head + yl.len() - cancel;
        let xl = x.letters();
        let mut k = 0;
        while k < xl.len() && k < len && xl[k] == word_at(k) {
            k += 1;
        }
        k as f64
    }
}

impl Metric for FreeGroup {
    type Point = FreeGroupWord;

    fn distance(&self, x: &FreeGroupWord, y: &FreeGroupWord) -> f64 {
        debug_assert_eq!(x.rank, y.rank);
        (x.len() + y.len() - 2 * x.common_prefix(y)) as f64
    }

    fn delta(&self) -> f64 {
        0.0
    }
}

impl SpaceModel for FreeGroup {
    type Element = FreeGroupWord;

    fn basepoint(&self) -> FreeGroupWord {
        FreeGroupWord::identity(self.rank)
    }

    fn identity(&self) -> FreeGroupWord {
        FreeGroupWord::identity(self.rank)
    }

    fn compose(&self, g: &FreeGroupWord, h: &FreeGroupWord) -> Result<FreeGroupWord, ModelError> {
        g.mul(h)
    }

    fn inverse(&self, g: &FreeGroupWord) -> FreeGroupWord {
        g.inverse()
    }

    fn act(&self, g: &FreeGroupWord, x: &FreeGroupWord) -> Result<FreeGroupWord, ModelError> {
        g.mul(x)
    }

    fn power(&self, g: &FreeGroupWord, n: i64) -> Result<FreeGroupWord, ModelError> {
        g.pow(n)
    }

    fn displacement(&self, g: &FreeGroupWord) -> f64 {
        g.len() as f64
    }

    fn translation_length(&self, g: &FreeGroupWord) -> f64 {
        g.cyclic_length() as f64
    }

    fn classify(&self, g: &FreeGroupWord) -> IsometryKind {
        if g.cyclic_length() > 0 {
            IsometryKind::Loxodromic
        } else {
            IsometryKind::Elliptic
        }
    }

    /// Loxodromics of a free group share a fixed point at infinity only if
    /// they commute.
    fn are_independent(&self, g: &FreeGroupWord, h: &FreeGroupWord) -> Result<bool, ModelError> {
        for w in [g, h] {
            if self.classify(w) != IsometryKind::Loxodromic {
                return Err(ModelError::NotLoxodromic(format!("{w}")));
            }
        }
        Ok(g.mul(h)? != h.mul(g)?)
    }

    fn power_orbit_product(
        &self,
        x: &FreeGroupWord,
        s: &FreeGroupWord,
        i: i64,
        y: &FreeGroupWord,
    ) -> Result<f64, ModelError> {
        if s.is_cyclically_reduced() && !s.is_empty() {
            Ok(self.power_product_lazy(x, s, i, y))
        } else {
            let sy = s.pow(i)?.mul(y)?;
            Ok(x.common_prefix(&sy) as f64)
        }
    }

    fn describe(&self, g: &FreeGroupWord) -> String {
        g.to_string()
    }
}
