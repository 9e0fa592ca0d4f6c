//! Elements of the full group as finite-level path permutations.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clopen::{same_diagram, suffix_blocks, ClopenSet, LevelSet};
use crate::diagram::{BratteliDiagram, Decision};
use crate::error::{Error, Result};

/// An element of `G_n`: for every level-`n` vertex a permutation of the
/// paths into it, in one-line notation (`perm[i]` is the image of path `i`).
#[derive(Clone)]
pub struct GroupElement {
    diagram: Arc<BratteliDiagram>,
    level: usize,
    perms: Vec<Vec<usize>>,
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement(level {}, {})", self.level, self.cycle_string())
    }
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        if !same_diagram(&self.diagram, &other.diagram) {
            return false;
        }
        let level = self.level.max(other.level);
        match (self.embed(level), other.embed(level)) {
            (Ok(a), Ok(b)) => a.perms == b.perms,
            _ => false,
        }
    }
}

impl Eq for GroupElement {}

impl GroupElement {
    pub fn identity(diagram: &Arc<BratteliDiagram>, level: usize) -> Result<Self> {
        let h = diagram.path_counts(level)?;
        Ok(GroupElement {
            diagram: diagram.clone(),
            level,
            perms: h.iter().map(|&n| (0..n as usize).collect()).collect(),
        })
    }

    pub fn from_perms(diagram: &Arc<BratteliDiagram>, level: usize, perms: Vec<Vec<usize>>) -> Result<Self> {
        let h = diagram.path_counts(level)?;
        if perms.len() != h.len() {
            return Err(Error::InvalidElement(format!("expected {} vertex permutations, got {}", h.len(), perms.len())));
        }
        for (v, (p, &n)) in perms.iter().zip(&h).enumerate() {
            if !is_permutation(p, n as usize) {
                return Err(Error::InvalidElement(format!("vertex {v}: not a permutation of {n} paths")));
            }
        }
        Ok(GroupElement { diagram: diagram.clone(), level, perms })
    }

    /// Identity except at `vertex`, where `perm` acts.
    pub fn at_vertex(diagram: &Arc<BratteliDiagram>, level: usize, vertex: usize, perm: Vec<usize>) -> Result<Self> {
        let mut g = Self::identity(diagram, level)?;
        if vertex >= g.perms.len() {
            return Err(Error::InvalidElement(format!("no vertex {vertex} at level {level}")));
        }
        if !is_permutation(&perm, g.perms[vertex].len()) {
            return Err(Error::InvalidElement(format!("vertex {vertex}: not a permutation")));
        }
        g.perms[vertex] = perm;
        Ok(g)
    }

    /// Builds an element from disjoint cycles at one vertex.
    pub fn from_cycles(diagram: &Arc<BratteliDiagram>, level: usize, vertex: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let h = diagram.path_count(level, vertex)? as usize;
        let mut perm: Vec<usize> = (0..h).collect();
        let mut seen = vec![false; h];
        for c in cycles {
            for (k, &x) in c.iter().enumerate() {
                if x >= h || seen[x] {
                    return Err(Error::InvalidElement(format!("bad cycle entry {x}")));
                }
                seen[x] = true;
                perm[x] = c[(k + 1) % c.len()];
            }
        }
        Self::at_vertex(diagram, level, vertex, perm)
    }

    /// Transposition of two paths into `vertex`.
    pub fn transposition(diagram: &Arc<BratteliDiagram>, level: usize, vertex: usize, a: usize, b: usize) -> Result<Self> {
        Self::from_cycles(diagram, level, vertex, &[vec![a, b]])
    }

    pub fn random<R: Rng + ?Sized>(diagram: &Arc<BratteliDiagram>, level: usize, rng: &mut R) -> Result<Self> {
        let mut g = Self::identity(diagram, level)?;
        for p in &mut g.perms {
            p.shuffle(rng);
        }
        Ok(g)
    }

    pub fn diagram(&self) -> &Arc<BratteliDiagram> {
        &self.diagram
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn image(&self, vertex: usize, index: usize) -> usize {
        self.perms[vertex][index]
    }

    pub fn is_identity(&self) -> bool {
        self.perms.iter().all(|p| p.iter().enumerate().all(|(i, &x)| i == x))
    }

    fn check(&self, other: &GroupElement) -> Result<()> {
        if same_diagram(&self.diagram, &other.diagram) {
            Ok(())
        } else {
            Err(Error::DiagramMismatch)
        }
    }

    /// The same homeomorphism as an element of `G_m`.
    pub fn embed(&self, m: usize) -> Result<GroupElement> {
        if m < self.level {
            return Err(Error::InvalidElement(format!("cannot embed level {} into lower level {m}", self.level)));
        }
        if m == self.level {
            return Ok(self.clone());
        }
        let h = self.diagram.path_counts(m)?;
        let mut perms: Vec<Vec<usize>> = h.iter().map(|&n| (0..n as usize).collect()).collect();
        for (w, perm) in perms.iter_mut().enumerate() {
            for b in suffix_blocks(&self.diagram, self.level, m, w)? {
                for (i, &img) in self.perms[b.vertex].iter().enumerate() {
                    perm[b.start + i] = b.start + img;
                }
            }
        }
        Ok(GroupElement { diagram: self.diagram.clone(), level: m, perms })
    }

    fn common(&self, other: &GroupElement) -> Result<(GroupElement, GroupElement)> {
        self.check(other)?;
        let level = self.level.max(other.level);
        Ok((self.embed(level)?, other.embed(level)?))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        let (a, b) = self.common(other)?;
        let perms = a.perms.iter().zip(&b.perms).map(|(pa, pb)| pb.iter().map(|&x| pa[x]).collect()).collect();
        Ok(GroupElement { diagram: a.diagram, level: a.level, perms })
    }

    pub fn inverse(&self) -> GroupElement {
        let perms = self
            .perms
            .iter()
            .map(|p| {
                let mut inv = vec![0; p.len()];
                for (i, &x) in p.iter().enumerate() {
                    inv[x] = i;
                }
                inv
            })
            .collect();
        GroupElement { diagram: self.diagram.clone(), level: self.level, perms }
    }

    /// `self * other * self^{-1}`.
    pub fn conjugate(&self, other: &GroupElement) -> Result<GroupElement> {
        self.compose(other)?.compose(&self.inverse())
    }

    /// Level-`level` paths moved by the element.
    fn moved(&self) -> LevelSet {
        LevelSet {
            level: self.level,
            members: self.perms.iter().map(|p| p.iter().enumerate().map(|(i, &x)| i != x).collect()).collect(),
        }
    }

    pub fn support(&self) -> Result<ClopenSet> {
        ClopenSet::from_level_set(self.diagram.clone(), self.moved())
    }

    pub fn fix_set(&self) -> Result<ClopenSet> {
        Ok(self.support()?.complement())
    }

    /// Image `g(A)` of a clopen set.
    pub fn apply_set(&self, set: &ClopenSet) -> Result<ClopenSet> {
        if !same_diagram(&self.diagram, set.diagram()) {
            return Err(Error::DiagramMismatch);
        }
        let level = self.level.max(set.level());
        let g = self.embed(level)?;
        let a = set.at_level(level)?;
        let mut out = LevelSet::empty(&self.diagram, level)?;
        for (v, perm) in g.perms.iter().enumerate() {
            for i in a.indices(v) {
                out.members[v][perm[i]] = true;
            }
        }
        ClopenSet::from_level_set(self.diagram.clone(), out)
    }

    pub fn sign_vector(&self) -> SignVector {
        SignVector { level: self.level, odd: self.perms.iter().map(|p| perm_is_odd(p)).collect() }
    }

    pub fn cycle_counts(&self) -> CycleCounts {
        let per_vertex: Vec<Vec<usize>> = self.perms.iter().map(|p| cycle_lengths(p)).collect();
        let total = per_vertex.iter().map(Vec::len).sum();
        CycleCounts { per_vertex, total }
    }

    pub fn is_involution(&self) -> bool {
        self.perms.iter().all(|p| p.iter().enumerate().all(|(i, &x)| p[x] == i))
    }

    /// Certifies membership in the commutator subgroup when the sign vector
    /// becomes all even by some level `<= depth`. Returns that level.
    pub fn in_commutator(&self, depth: usize) -> Result<(Decision, Option<usize>)> {
        let s = self.sign_vector();
        let top = match self.diagram.depth() {
            Some(d) => depth.min(d),
            None => depth,
        };
        for m in self.level..=top.max(self.level) {
            if m > top {
                break;
            }
            if s.propagate(&self.diagram, m)?.is_even() {
                return Ok((Decision::Yes, Some(m)));
            }
        }
        Ok((Decision::Unknown, None))
    }

    pub fn cycle_string(&self) -> String {
        let parts: Vec<String> = self
            .perms
            .iter()
            .enumerate()
            .filter_map(|(v, p)| {
                let cycles = cycles(p);
                let cycles: Vec<String> = cycles
                    .into_iter()
                    .filter(|c| c.len() > 1)
                    .map(|c| format!("({})", c.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")))
                    .collect();
                (!cycles.is_empty()).then(|| format!("v{v}:{}", cycles.join("")))
            })
            .collect();
        if parts.is_empty() {
            "e".into()
        } else {
            parts.join(" ")
        }
    }

    pub fn to_literal(&self) -> ElementLiteral {
        let perms = self
            .perms
            .iter()
            .enumerate()
            .filter(|(_, p)| p.iter().enumerate().any(|(i, &x)| i != x))
            .map(|(v, p)| (v, p.clone()))
            .collect();
        ElementLiteral { level: self.level, perms }
    }

    pub fn from_literal(diagram: &Arc<BratteliDiagram>, lit: &ElementLiteral) -> Result<Self> {
        let mut g = Self::identity(diagram, lit.level)?;
        for (&v, p) in &lit.perms {
            if v >= g.perms.len() {
                return Err(Error::InvalidElement(format!("no vertex {v} at level {}", lit.level)));
            }
            if !is_permutation(p, g.perms[v].len()) {
                return Err(Error::InvalidElement(format!("vertex {v}: not a permutation")));
            }
            g.perms[v] = p.clone();
        }
        Ok(g)
    }
}

/// Element literal: `{"level": n, "perms": {"v": [images...]}}`; omitted
/// vertices act trivially.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementLiteral {
    pub level: usize,
    #[serde(default)]
    pub perms: BTreeMap<usize, Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleCounts {
    /// Cycle lengths per vertex, fixed points included, sorted descending.
    pub per_vertex: Vec<Vec<usize>>,
    /// Total number of cycles `l(g)`.
    pub total: usize,
}

/// Per-vertex permutation parities at one level (`true` = odd).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignVector {
    pub level: usize,
    pub odd: Vec<bool>,
}

impl SignVector {
    pub fn is_even(&self) -> bool {
        self.odd.iter().all(|&b| !b)
    }

    /// Parities after embedding to level `m`: `s_w = Σ_v e(v,w) s_v mod 2`.
    pub fn propagate(&self, diagram: &BratteliDiagram, m: usize) -> Result<SignVector> {
        if m < self.level {
            return Err(Error::InvalidElement(format!("cannot propagate level {} down to {m}", self.level)));
        }
        let mut odd = self.odd.clone();
        for i in self.level + 1..=m {
            let inc = diagram.incidence(i)?;
            odd = (0..inc.rows())
                .map(|w| (0..inc.cols()).filter(|&v| odd[v] && inc.edges(v, w) % 2 == 1).count() % 2 == 1)
                .collect();
        }
        Ok(SignVector { level: m, odd })
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.odd.iter().map(|&o| if o { '-' } else { '+' }).collect();
        write!(f, "level {}: {}", self.level, s)
    }
}

pub fn is_permutation(p: &[usize], n: usize) -> bool {
    if p.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &x in p {
        if x >= n || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

/// Disjoint cycles of a permutation in one-line notation, fixed points
/// included, each starting at its smallest point.
pub fn cycles(p: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; p.len()];
    let mut out = Vec::new();
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut c = Vec::new();
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            c.push(x);
            x = p[x];
        }
        out.push(c);
    }
    out
}

pub fn cycle_lengths(p: &[usize]) -> Vec<usize> {
    let mut l: Vec<usize> = cycles(p).iter().map(Vec::len).collect();
    l.sort_unstable_by(|a, b| b.cmp(a));
    l
}

pub fn perm_is_odd(p: &[usize]) -> bool {
    (p.len() - cycles(p).len()) % 2 == 1
}

/// All permutations of `0..n` (Heap's algorithm), in one-line notation.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Even permutations of `0..n`.
pub fn alternating(n: usize) -> Vec<Vec<usize>> {
    permutations(n).into_iter().filter(|p| !perm_is_odd(p)).collect()
}
