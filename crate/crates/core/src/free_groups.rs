//! Finite-index subgroups of the free group F = F(a, b).
//!
//! A subgroup of index k is stored as its coset action: two permutations of
//! {0, …, k−1} generating a transitive group, with the subgroup itself the
//! stabiliser of the basepoint 0. Tables are always kept in canonical form
//! (breadth-first numbering from the basepoint, letters scanned in the order
//! a, a⁻¹, b, b⁻¹), so two tables are equal exactly when the subgroups are.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_ENUMERATION_INDEX: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("index {0} exceeds the enumeration cap of {MAX_ENUMERATION_INDEX}")]
    Capacity(usize),
    #[error("index must be positive")]
    ZeroIndex,
    #[error("{0} is not a permutation")]
    NotAPermutation(String),
    #[error("permutations act on different numbers of points")]
    DegreeMismatch,
    #[error("the action is not transitive")]
    NotTransitive,
    #[error("cannot parse word: {0}")]
    BadWord(String),
}

pub type Result<T> = std::result::Result<T, GroupError>;

/// One of a, a⁻¹, b, b⁻¹. The derived order is the tie-break order for words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    A,
    AInv,
    B,
    BInv,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::A, Letter::AInv, Letter::B, Letter::BInv];

    pub fn inverse(self) -> Letter {
        match self {
            Letter::A => Letter::AInv,
            Letter::AInv => Letter::A,
            Letter::B => Letter::BInv,
            Letter::BInv => Letter::B,
        }
    }

    pub fn is_a(self) -> bool {
        matches!(self, Letter::A | Letter::AInv)
    }

    pub fn is_inverse(self) -> bool {
        matches!(self, Letter::AInv | Letter::BInv)
    }

    fn symbol(self) -> char {
        match self {
            Letter::A => 'a',
            Letter::AInv => 'A',
            Letter::B => 'b',
            Letter::BInv => 'B',
        }
    }
}

/// A freely reduced word in a, b. Printed with capitals for inverses
/// (`aB` is a·b⁻¹) and `1` for the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// Freely reduces the given letters.
    pub fn reduced(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for l in &self.0 {
            write!(f, "{}", l.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" || s.is_empty() {
            return Ok(Word::identity());
        }
        let letters = s
            .chars()
            .map(|c| match c {
                'a' => Ok(Letter::A),
                'A' => Ok(Letter::AInv),
                'b' => Ok(Letter::B),
                'B' => Ok(Letter::BInv),
                _ => Err(GroupError::BadWord(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Word::reduced(letters))
    }
}

pub(crate) fn check_permutation(p: &[usize]) -> Result<()> {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || seen[x] {
            return Err(GroupError::NotAPermutation(format!("{p:?}")));
        }
        seen[x] = true;
    }
    Ok(())
}

pub(crate) fn invert(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

/// Breadth-first relabelling from `start`. Returns `None` if not every point is reached.
pub fn canonical_relabeling(perm_a: &[usize], perm_b: &[usize], start: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    let k = perm_a.len();
    let (inv_a, inv_b) = (invert(perm_a), invert(perm_b));
    let mut label = vec![usize::MAX; k];
    let mut order = Vec::with_capacity(k);
    let mut queue = VecDeque::from([start]);
    label[start] = 0;
    order.push(start);
    while let Some(x) = queue.pop_front() {
        for y in [perm_a[x], inv_a[x], perm_b[x], inv_b[x]] {
            if label[y] == usize::MAX {
                label[y] = order.len();
                order.push(y);
                queue.push_back(y);
            }
        }
    }
    if order.len() != k {
        return None;
    }
    let relabel = |p: &[usize]| order.iter().map(|&x| label[p[x]]).collect();
    Some((relabel(perm_a), relabel(perm_b)))
}

/// An index-k subgroup of F(a, b), as its canonical coset table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubgroupTable {
    perm_a: Vec<usize>,
    perm_b: Vec<usize>,
}

impl SubgroupTable {
    /// Accepts any labelling with the subgroup's coset at point 0 and canonicalises it.
    pub fn new(perm_a: Vec<usize>, perm_b: Vec<usize>) -> Result<Self> {
        if perm_a.is_empty() {
            return Err(GroupError::ZeroIndex);
        }
        if perm_a.len() != perm_b.len() {
            return Err(GroupError::DegreeMismatch);
        }
        check_permutation(&perm_a)?;
        check_permutation(&perm_b)?;
        let (perm_a, perm_b) =
            canonical_relabeling(&perm_a, &perm_b, 0).ok_or(GroupError::NotTransitive)?;
        Ok(Self { perm_a, perm_b })
    }

    pub fn trivial() -> Self {
        Self {
            perm_a: vec![0],
            perm_b: vec![0],
        }
    }

    pub fn degree(&self) -> usize {
        self.perm_a.len()
    }

    pub fn basepoint(&self) -> usize {
        0
    }

    pub fn perm_a(&self) -> &[usize] {
        &self.perm_a
    }

    pub fn perm_b(&self) -> &[usize] {
        &self.perm_b
    }

    /// Image of a point under one letter.
    pub fn step(&self, x: usize, l: Letter) -> usize {
        step(&self.perm_a, &self.perm_b, x, l)
    }

    /// End point of the path labelled `w` starting at `x`.
    pub fn trace(&self, x: usize, w: &Word) -> usize {
        w.letters().iter().fold(x, |y, &l| self.step(y, l))
    }

    /// Canonical form of this table; the identity on already canonical tables.
    pub fn canonical(&self) -> Self {
        let (perm_a, perm_b) =
            canonical_relabeling(&self.perm_a, &self.perm_b, 0).expect("tables are transitive");
        Self { perm_a, perm_b }
    }
}

impl fmt::Display for SubgroupTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |p: &[usize]| p.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
        write!(f, "a: [{}]  b: [{}]", row(&self.perm_a), row(&self.perm_b))
    }
}

pub(crate) fn step(perm_a: &[usize], perm_b: &[usize], x: usize, l: Letter) -> usize {
    match l {
        Letter::A => perm_a[x],
        Letter::B => perm_b[x],
        Letter::AInv => perm_a.iter().position(|&y| y == x).expect("permutation"),
        Letter::BInv => perm_b.iter().position(|&y| y == x).expect("permutation"),
    }
}

/// `w ∈ H` iff the path labelled `w` from the basepoint is a loop.
pub fn word_membership(h: &SubgroupTable, w: &Word) -> bool {
    h.trace(h.basepoint(), w) == h.basepoint()
}

/// Number of index-k subgroups of F₂ by Hall's recursion
/// `a_k = k·k! − Σ_{i<k} (k−i)!·a_i`.
pub fn hall_count(k: usize) -> BigUint {
    hall_counts(k).pop().unwrap_or_else(BigUint::zero)
}

/// `[a_1, …, a_k]`.
pub fn hall_counts(k: usize) -> Vec<BigUint> {
    let mut fact = vec![BigUint::one()];
    for i in 1..=k {
        let next = &fact[i - 1] * BigUint::from(i);
        fact.push(next);
    }
    let mut a: Vec<BigUint> = Vec::with_capacity(k);
    for n in 1..=k {
        let mut v = BigUint::from(n) * &fact[n];
        for i in 1..n {
            v -= &fact[n - i] * &a[i - 1];
        }
        a.push(v);
    }
    a
}

/// Every index-k subgroup of F₂, once each, in canonical form.
///
/// Low-index style coset table completion: the first undefined entry in scan
/// order (coset, then a, a⁻¹, b, b⁻¹) is set either to an existing coset whose
/// matching inverse entry is free, or to the next new coset. Because new cosets
/// appear in scan order the completed tables are already canonically numbered,
/// so no table is produced twice.
pub fn enumerate_subgroups(k: usize) -> Result<Vec<SubgroupTable>> {
    if k == 0 {
        return Err(GroupError::ZeroIndex);
    }
    if k > MAX_ENUMERATION_INDEX {
        return Err(GroupError::Capacity(k));
    }
    let mut state = PartialTable::new(k);
    let mut out = Vec::new();
    state.extend(&mut out);
    Ok(out)
}

const UNDEF: usize = usize::MAX;

struct PartialTable {
    k: usize,
    defined: usize,
    // fwd[g][x], inv[g][x] for g ∈ {a, b}
    fwd: [Vec<usize>; 2],
    inv: [Vec<usize>; 2],
}

impl PartialTable {
    fn new(k: usize) -> Self {
        Self {
            k,
            defined: 1,
            fwd: [vec![UNDEF; k], vec![UNDEF; k]],
            inv: [vec![UNDEF; k], vec![UNDEF; k]],
        }
    }

    fn first_gap(&self) -> Option<(usize, usize, bool)> {
        for x in 0..self.defined {
            for g in 0..2 {
                if self.fwd[g][x] == UNDEF {
                    return Some((x, g, false));
                }
                if self.inv[g][x] == UNDEF {
                    return Some((x, g, true));
                }
            }
        }
        None
    }

    fn set(&mut self, x: usize, g: usize, inverse: bool, y: usize) {
        let (src, dst) = if inverse { (y, x) } else { (x, y) };
        self.fwd[g][src] = dst;
        self.inv[g][dst] = src;
    }

    fn extend(&mut self, out: &mut Vec<SubgroupTable>) {
        let Some((x, g, inverse)) = self.first_gap() else {
            if self.defined == self.k {
                out.push(SubgroupTable {
                    perm_a: self.fwd[0].clone(),
                    perm_b: self.fwd[1].clone(),
                });
            }
            return;
        };
        // existing targets y: need the opposite entry of y free
        for y in 0..self.defined {
            let free = if inverse {
                self.fwd[g][y] == UNDEF
            } else {
                self.inv[g][y] == UNDEF
            };
            if free {
                self.set(x, g, inverse, y);
                self.extend(out);
                self.clear(x, g, inverse, y);
            }
        }
        if self.defined < self.k {
            let y = self.defined;
            self.defined += 1;
            self.set(x, g, inverse, y);
            self.extend(out);
            self.clear(x, g, inverse, y);
            self.defined -= 1;
        }
    }

    fn clear(&mut self, x: usize, g: usize, inverse: bool, y: usize) {
        let (src, dst) = if inverse { (y, x) } else { (x, y) };
        self.fwd[g][src] = UNDEF;
        self.inv[g][dst] = UNDEF;
    }
}

/// A shortest word lying in exactly one of the two subgroups, ties broken
/// lexicographically with a < a⁻¹ < b < b⁻¹. `None` iff the subgroups coincide.
///
/// Breadth-first search of the diagonal action on pairs of cosets from
/// (basepoint, basepoint); a target is a pair where exactly one coordinate
/// is back at its basepoint.
pub fn distinguishing_word(h1: &SubgroupTable, h2: &SubgroupTable) -> Option<Word> {
    let (k1, k2) = (h1.degree(), h2.degree());
    let idx = |x: usize, y: usize| x * k2 + y;
    let mut parent: Vec<Option<(usize, Letter)>> = vec![None; k1 * k2];
    let mut seen = vec![false; k1 * k2];
    let start = idx(h1.basepoint(), h2.basepoint());
    seen[start] = true;
    let mut queue = VecDeque::from([(h1.basepoint(), h2.basepoint())]);
    while let Some((x, y)) = queue.pop_front() {
        for l in Letter::ALL {
            let (nx, ny) = (h1.step(x, l), h2.step(y, l));
            let j = idx(nx, ny);
            if seen[j] {
                continue;
            }
            seen[j] = true;
            parent[j] = Some((idx(x, y), l));
            if (nx == h1.basepoint()) != (ny == h2.basepoint()) {
                let mut letters = Vec::new();
                let mut cur = j;
                while let Some((prev, l)) = parent[cur] {
                    letters.push(l);
                    cur = prev;
                }
                letters.reverse();
                let w = Word(letters);
                debug_assert_ne!(word_membership(h1, &w), word_membership(h2, &w));
                return Some(w);
            }
            queue.push_back((nx, ny));
        }
    }
    None
}
