//! Clopen subsets of the path space as unions of cylinder sets.
//!
//! Paths into a vertex `w` at level `n` are numbered `0..h_w^{(n)}`. A path
//! ending with edge `(v, w, c)` whose prefix has index `j` among the paths
//! into `v` gets index `offset(v, c) + j`, where the offsets enumerate the
//! incoming edges of `w` by source vertex and then copy index, each
//! contributing a block of `h_v^{(n-1)}` consecutive indices. In other words
//! paths are ordered lexicographically reading from the terminal edge back
//! to the root. With this order the embedding `G_n -> G_m` is block
//! diagonal: each block is a contiguous run of indices sharing one suffix.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagram::BratteliDiagram;
use crate::error::{Error, Result};

/// Contiguous run of level-`to` path indices into some vertex `w` that share
/// one suffix from level `from` to `to`. The run has length
/// `h_{vertex}^{(from)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuffixBlock {
    pub vertex: usize,
    pub start: usize,
}

/// Incoming edge blocks of `w` at `level`: `(source, copy, offset)`.
pub fn incoming_offsets(d: &BratteliDiagram, level: usize, w: usize) -> Result<Vec<(usize, u64, usize)>> {
    let m = d.incidence(level)?;
    let h = d.path_counts(level - 1)?;
    let mut out = Vec::new();
    let mut off = 0usize;
    for (v, &hv) in h.iter().enumerate() {
        for c in 0..m.edges(v, w) {
            out.push((v, c, off));
            off += hv as usize;
        }
    }
    Ok(out)
}

/// Suffix blocks of the level-`to` paths into `w`, relative to level `from`.
pub fn suffix_blocks(d: &BratteliDiagram, from: usize, to: usize, w: usize) -> Result<Vec<SuffixBlock>> {
    if from > to {
        return Err(Error::InvalidPath(format!("cannot take suffixes from level {from} to {to}")));
    }
    if from == to {
        return Ok(vec![SuffixBlock { vertex: w, start: 0 }]);
    }
    let mut out = Vec::new();
    for (src, _, off) in incoming_offsets(d, to, w)? {
        for b in suffix_blocks(d, from, to - 1, src)? {
            out.push(SuffixBlock { vertex: b.vertex, start: off + b.start });
        }
    }
    Ok(out)
}

/// Membership bits of a set of level-`level` paths, per vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LevelSet {
    pub level: usize,
    pub members: Vec<Vec<bool>>,
}

impl LevelSet {
    pub fn empty(d: &BratteliDiagram, level: usize) -> Result<Self> {
        Self::filled(d, level, false)
    }

    pub fn full(d: &BratteliDiagram, level: usize) -> Result<Self> {
        Self::filled(d, level, true)
    }

    fn filled(d: &BratteliDiagram, level: usize, bit: bool) -> Result<Self> {
        let h = d.path_counts(level)?;
        Ok(LevelSet { level, members: h.iter().map(|&n| vec![bit; n as usize]).collect() })
    }

    pub fn contains(&self, v: usize, idx: usize) -> bool {
        self.members[v][idx]
    }

    pub fn count(&self, v: usize) -> u64 {
        self.members[v].iter().filter(|&&b| b).count() as u64
    }

    /// `K_{C,v}` for every vertex at this level.
    pub fn counts(&self) -> Vec<u64> {
        (0..self.members.len()).map(|v| self.count(v)).collect()
    }

    pub fn indices(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.members[v].iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn is_empty(&self) -> bool {
        self.members.iter().all(|m| m.iter().all(|&b| !b))
    }

    pub fn raise(&self, d: &BratteliDiagram, to: usize) -> Result<LevelSet> {
        if to < self.level {
            return Err(Error::InvalidPath(format!("cannot lower level {} to {to}", self.level)));
        }
        if to == self.level {
            return Ok(self.clone());
        }
        let h = d.path_counts(self.level)?;
        let mut out = LevelSet::empty(d, to)?;
        for (w, bits) in out.members.iter_mut().enumerate() {
            for b in suffix_blocks(d, self.level, to, w)? {
                let len = h[b.vertex] as usize;
                bits[b.start..b.start + len].copy_from_slice(&self.members[b.vertex]);
            }
        }
        Ok(out)
    }

    /// The same set one level up, if it is a union of level-`level-1`
    /// cylinders.
    fn lower_once(&self, d: &BratteliDiagram) -> Result<Option<LevelSet>> {
        if self.level == 0 {
            return Ok(None);
        }
        let below = self.level - 1;
        let h = d.path_counts(below)?;
        let mut candidate: Vec<Option<Vec<bool>>> = vec![None; h.len()];
        for (w, bits) in self.members.iter().enumerate() {
            for b in suffix_blocks(d, below, self.level, w)? {
                let len = h[b.vertex] as usize;
                let run = &bits[b.start..b.start + len];
                match &candidate[b.vertex] {
                    Some(existing) if existing != run => return Ok(None),
                    Some(_) => {}
                    None => candidate[b.vertex] = Some(run.to_vec()),
                }
            }
        }
        let members = candidate
            .into_iter()
            .map(|c| c.ok_or_else(|| Error::InvalidDiagram("vertex without outgoing edges".into())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(LevelSet { level: below, members }))
    }

    pub fn canonical(mut self, d: &BratteliDiagram) -> Result<LevelSet> {
        while let Some(lower) = self.lower_once(d)? {
            self = lower;
        }
        Ok(self)
    }

    fn zip_with(&self, other: &LevelSet, f: impl Fn(bool, bool) -> bool) -> LevelSet {
        debug_assert_eq!(self.level, other.level);
        let members = self
            .members
            .iter()
            .zip(&other.members)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        LevelSet { level: self.level, members }
    }
}

/// A finite path from the root, as per-level edge ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FinitePath(pub Vec<u64>);

impl FinitePath {
    pub fn level(&self) -> usize {
        self.0.len()
    }

    /// Terminal vertex and index among the paths into it.
    pub fn locate(&self, d: &BratteliDiagram) -> Result<(usize, usize)> {
        let mut vertex = 0usize;
        let mut idx = 0usize;
        for (i, &id) in self.0.iter().enumerate() {
            let level = i + 1;
            let (src, dst, copy) = d.edge_at(level, id)?;
            if src != vertex {
                return Err(Error::InvalidPath(format!(
                    "edge {id} at level {level} starts at vertex {src}, path is at vertex {vertex}"
                )));
            }
            let off = incoming_offsets(d, level, dst)?
                .into_iter()
                .find(|&(s, c, _)| s == src && c == copy)
                .map(|(_, _, o)| o)
                .expect("edge exists");
            idx += off;
            vertex = dst;
        }
        Ok((vertex, idx))
    }

    pub fn from_index(d: &BratteliDiagram, level: usize, vertex: usize, index: usize) -> Result<FinitePath> {
        let h = d.path_counts(level)?;
        if vertex >= h.len() || index as u64 >= h[vertex] {
            return Err(Error::InvalidPath(format!("no path {index} into vertex {vertex} at level {level}")));
        }
        let mut ids = vec![0; level];
        let (mut v, mut idx) = (vertex, index);
        for l in (1..=level).rev() {
            let hp = d.path_counts(l - 1)?;
            let (src, copy, off) = incoming_offsets(d, l, v)?
                .into_iter()
                .find(|&(s, _, o)| idx >= o && idx < o + hp[s] as usize)
                .expect("index within tower");
            ids[l - 1] = d.edge_id(l, src, v, copy)?;
            idx -= off;
            v = src;
        }
        Ok(FinitePath(ids))
    }

    pub fn prefix(&self, len: usize) -> FinitePath {
        FinitePath(self.0[..len.min(self.0.len())].to_vec())
    }
}

/// A clopen set, always held in canonical (lowest-level) form.
#[derive(Clone)]
pub struct ClopenSet {
    diagram: Arc<BratteliDiagram>,
    set: LevelSet,
}

impl PartialEq for ClopenSet {
    fn eq(&self, other: &Self) -> bool {
        same_diagram(&self.diagram, &other.diagram) && self.set == other.set
    }
}

impl Eq for ClopenSet {}

impl std::hash::Hash for ClopenSet {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.set.hash(state);
    }
}

impl fmt::Debug for ClopenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClopenSet(level {}, counts {:?})", self.set.level, self.set.counts())
    }
}

pub(crate) fn same_diagram(a: &Arc<BratteliDiagram>, b: &Arc<BratteliDiagram>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// One Kakutani–Rokhlin tower: the cylinders of all level-`n` paths ending
/// at `vertex`, in path order.
#[derive(Clone, Debug)]
pub struct Tower {
    pub vertex: usize,
    pub floors: Vec<ClopenSet>,
}

impl ClopenSet {
    pub fn from_level_set(diagram: Arc<BratteliDiagram>, set: LevelSet) -> Result<Self> {
        let h = diagram.path_counts(set.level)?;
        if set.members.len() != h.len() || set.members.iter().zip(&h).any(|(m, &n)| m.len() as u64 != n) {
            return Err(Error::InvalidPath("membership vector does not match the level".into()));
        }
        let set = set.canonical(&diagram)?;
        Ok(ClopenSet { diagram, set })
    }

    pub fn empty(diagram: &Arc<BratteliDiagram>) -> Self {
        ClopenSet { diagram: diagram.clone(), set: LevelSet { level: 0, members: vec![vec![false]] } }
    }

    pub fn whole(diagram: &Arc<BratteliDiagram>) -> Self {
        ClopenSet { diagram: diagram.clone(), set: LevelSet { level: 0, members: vec![vec![true]] } }
    }

    /// Union of the cylinders of the given `(vertex, index)` paths.
    pub fn from_indices(diagram: &Arc<BratteliDiagram>, level: usize, paths: &[(usize, usize)]) -> Result<Self> {
        let mut set = LevelSet::empty(diagram, level)?;
        for &(v, i) in paths {
            let slot = set
                .members
                .get_mut(v)
                .and_then(|m| m.get_mut(i))
                .ok_or_else(|| Error::InvalidPath(format!("no path {i} into vertex {v} at level {level}")))?;
            *slot = true;
        }
        Self::from_level_set(diagram.clone(), set)
    }

    pub fn cylinder(diagram: &Arc<BratteliDiagram>, path: &FinitePath) -> Result<Self> {
        let (v, i) = path.locate(diagram)?;
        Self::from_indices(diagram, path.level(), &[(v, i)])
    }

    pub fn from_paths(diagram: &Arc<BratteliDiagram>, level: usize, paths: &[FinitePath]) -> Result<Self> {
        let idx = paths
            .iter()
            .map(|p| {
                if p.level() != level {
                    return Err(Error::InvalidPath(format!("path of length {} in a level-{level} set", p.level())));
                }
                p.locate(diagram)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(diagram, level, &idx)
    }

    pub fn diagram(&self) -> &Arc<BratteliDiagram> {
        &self.diagram
    }

    /// Canonical level.
    pub fn level(&self) -> usize {
        self.set.level
    }

    pub fn canonical_set(&self) -> &LevelSet {
        &self.set
    }

    /// Membership at level `m >= self.level()`.
    pub fn at_level(&self, m: usize) -> Result<LevelSet> {
        self.set.raise(&self.diagram, m)
    }

    /// `K_{C,v}` at level `m`.
    pub fn counts_at(&self, m: usize) -> Result<Vec<u64>> {
        Ok(self.at_level(m)?.counts())
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn is_whole(&self) -> bool {
        self.set.level == 0 && self.set.members[0][0]
    }

    fn check(&self, other: &ClopenSet) -> Result<()> {
        if same_diagram(&self.diagram, &other.diagram) {
            Ok(())
        } else {
            Err(Error::DiagramMismatch)
        }
    }

    fn combine(&self, other: &ClopenSet, f: impl Fn(bool, bool) -> bool) -> Result<ClopenSet> {
        self.check(other)?;
        let level = self.level().max(other.level());
        let a = self.at_level(level)?;
        let b = other.at_level(level)?;
        ClopenSet::from_level_set(self.diagram.clone(), a.zip_with(&b, f))
    }

    pub fn union(&self, other: &ClopenSet) -> Result<ClopenSet> {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &ClopenSet) -> Result<ClopenSet> {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &ClopenSet) -> Result<ClopenSet> {
        self.combine(other, |a, b| a && !b)
    }

    pub fn symmetric_difference(&self, other: &ClopenSet) -> Result<ClopenSet> {
        self.combine(other, |a, b| a != b)
    }

    pub fn complement(&self) -> ClopenSet {
        let members = self.set.members.iter().map(|m| m.iter().map(|&b| !b).collect()).collect();
        ClopenSet { diagram: self.diagram.clone(), set: LevelSet { level: self.set.level, members } }
    }

    pub fn is_subset(&self, other: &ClopenSet) -> Result<bool> {
        Ok(self.difference(other)?.is_empty())
    }

    pub fn is_disjoint(&self, other: &ClopenSet) -> Result<bool> {
        Ok(self.intersection(other)?.is_empty())
    }

    /// Member paths at the canonical level.
    pub fn paths(&self) -> Result<Vec<FinitePath>> {
        let mut out = Vec::new();
        for v in 0..self.set.members.len() {
            for i in self.set.indices(v) {
                out.push(FinitePath::from_index(&self.diagram, self.set.level, v, i)?);
            }
        }
        Ok(out)
    }

    pub fn to_literal(&self) -> Result<ClopenLiteral> {
        Ok(ClopenLiteral { level: self.level(), paths: self.paths()?.into_iter().map(|p| p.0).collect() })
    }

    pub fn from_literal(diagram: &Arc<BratteliDiagram>, lit: &ClopenLiteral) -> Result<Self> {
        let paths: Vec<FinitePath> = lit.paths.iter().cloned().map(FinitePath).collect();
        Self::from_paths(diagram, lit.level, &paths)
    }
}

/// Textual clopen-set literal: `{"level": n, "paths": [[e1, ..., en], ...]}`
/// with per-level edge ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClopenLiteral {
    pub level: usize,
    pub paths: Vec<Vec<u64>>,
}

/// The partition of the path space into level-`n` cylinders, grouped into
/// towers by terminal vertex.
pub fn kr_partition(diagram: &Arc<BratteliDiagram>, n: usize) -> Result<Vec<Tower>> {
    if n == 0 {
        return Err(Error::InvalidPath("partitions start at level 1".into()));
    }
    let h = diagram.path_counts(n)?;
    h.iter()
        .enumerate()
        .map(|(v, &hv)| {
            let floors = (0..hv as usize)
                .map(|i| ClopenSet::from_indices(diagram, n, &[(v, i)]))
                .collect::<Result<Vec<_>>>()?;
            Ok(Tower { vertex: v, floors })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn odo() -> Arc<BratteliDiagram> {
        Arc::new(BratteliDiagram::odometer(2))
    }

    #[test]
    fn kr_partition_shapes() {
        let d = odo();
        let p = kr_partition(&d, 2).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].floors.len(), 4);
        let ex = Arc::new(BratteliDiagram::two_level_example());
        let heights: Vec<usize> = kr_partition(&ex, 2).unwrap().iter().map(|t| t.floors.len()).collect();
        assert_eq!(heights, vec![6, 8]);
        let level1: usize = kr_partition(&ex, 1).unwrap().iter().map(|t| t.floors.len()).sum();
        assert_eq!(level1 as u64, ex.edges_at(1).unwrap());
    }

    #[test]
    fn partition_members_are_disjoint_and_cover() {
        let d = Arc::new(BratteliDiagram::fibonacci());
        let floors: Vec<ClopenSet> = kr_partition(&d, 3).unwrap().into_iter().flat_map(|t| t.floors).collect();
        let mut acc = ClopenSet::empty(&d);
        for f in &floors {
            assert!(acc.is_disjoint(f).unwrap());
            acc = acc.union(f).unwrap();
        }
        assert!(acc.is_whole());
    }

    #[test]
    fn boolean_examples() {
        let d = odo();
        let a = ClopenSet::from_indices(&d, 2, &[(0, 1), (0, 2)]).unwrap();
        assert!(a.symmetric_difference(&a).unwrap().is_empty());
        let even = ClopenSet::from_indices(&d, 2, &[(0, 0), (0, 2)]).unwrap();
        let odd = ClopenSet::from_indices(&d, 2, &[(0, 1), (0, 3)]).unwrap();
        let all = even.union(&odd).unwrap();
        assert!(all.is_whole());
        assert_eq!(all.level(), 0);

        let c1 = ClopenSet::from_indices(&d, 1, &[(0, 0)]).unwrap();
        // Level-2 path 2 = prefix 0 followed by edge copy 1.
        let c2 = ClopenSet::from_indices(&d, 2, &[(0, 2)]).unwrap();
        assert_eq!(c1.intersection(&c2).unwrap(), c2);
        assert!(a.union(&a.complement()).unwrap().is_whole());
        assert!(a.intersection(&a.complement()).unwrap().is_empty());
    }

    #[test]
    fn canonical_form_is_lowest_level() {
        let d = odo();
        // Paths 0 and 2 at level 2 both extend level-1 path 0.
        let a = ClopenSet::from_indices(&d, 2, &[(0, 0), (0, 2)]).unwrap();
        assert_eq!(a.level(), 1);
        assert_eq!(a, ClopenSet::from_indices(&d, 1, &[(0, 0)]).unwrap());
        let raised = ClopenSet::from_level_set(d.clone(), a.at_level(5).unwrap()).unwrap();
        assert_eq!(raised, a);
    }

    #[test]
    fn path_index_round_trip() {
        let d = BratteliDiagram::two_level_example();
        for (v, &h) in d.path_counts(2).unwrap().iter().enumerate() {
            for i in 0..h as usize {
                let p = FinitePath::from_index(&d, 2, v, i).unwrap();
                assert_eq!(p.locate(&d).unwrap(), (v, i));
            }
        }
        assert!(FinitePath(vec![0, 5]).locate(&d).is_err());
    }

    #[test]
    fn literal_round_trip() {
        let d = Arc::new(BratteliDiagram::fibonacci());
        let a = ClopenSet::from_indices(&d, 4, &[(0, 1), (0, 4), (1, 2)]).unwrap();
        let lit = a.to_literal().unwrap();
        let json = serde_json::to_string(&lit).unwrap();
        let back = ClopenSet::from_literal(&d, &serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn mismatched_diagrams_are_rejected() {
        let a = ClopenSet::whole(&odo());
        let b = ClopenSet::whole(&Arc::new(BratteliDiagram::fibonacci()));
        assert_eq!(a.union(&b), Err(Error::DiagramMismatch));
    }
}
