//! Bratteli diagrams: leveled multigraphs with a single root.
//!
//! Level `i >= 1` is described by an [`IncidenceMatrix`] whose rows are the
//! level-`i` vertices and whose columns are the level-`(i-1)` vertices. A
//! diagram either ends at its last explicit level or carries a
//! [`StationaryTail`] repeating one square matrix forever.

use std::fmt;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IncidenceMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl IncidenceMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<u64>) -> Self {
        assert_eq!(data.len(), rows * cols, "incidence data has wrong length");
        IncidenceMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IncidenceMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidDiagram("ragged matrix rows".into()));
        }
        Ok(Self::new(r, c, rows.concat()))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.data[row * self.cols + col]
    }

    fn set(&mut self, row: usize, col: usize, v: u64) {
        self.data[row * self.cols + col] = v;
    }

    /// Number of edges from `src` (previous level) to `dst` (this level).
    pub fn edges(&self, src: usize, dst: usize) -> u64 {
        self.get(dst, src)
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.data.chunks(self.cols.max(1)).take(self.rows).map(<[u64]>::to_vec).collect()
    }

    /// `self * rhs`, failing on overflow.
    pub fn checked_mul(&self, rhs: &IncidenceMatrix) -> Option<IncidenceMatrix> {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc: u64 = 0;
                for k in 0..self.cols {
                    acc = acc.checked_add(self.get(i, k).checked_mul(rhs.get(k, j))?)?;
                }
                out.set(i, j, acc);
            }
        }
        Some(out)
    }

    /// `self * v`, failing on overflow.
    pub fn checked_apply(&self, v: &[u64]) -> Option<Vec<u64>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                (0..self.cols).try_fold(0u64, |acc, k| acc.checked_add(self.get(i, k).checked_mul(v[k])?))
            })
            .collect()
    }

    fn pattern(&self) -> BoolMatrix {
        BoolMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x > 0).collect(),
        }
    }

    fn parity(&self) -> BoolMatrix {
        BoolMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x % 2 == 1).collect(),
        }
    }
}

/// Matrix over the Boolean semiring (`or`/`and`) or GF(2) (`xor`/`and`).
#[derive(Clone, Debug, PartialEq, Eq)]
struct BoolMatrix {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl BoolMatrix {
    fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.cols + c]
    }

    fn mul(&self, rhs: &BoolMatrix, xor: bool) -> BoolMatrix {
        let mut data = vec![false; self.rows * rhs.cols];
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = false;
                for k in 0..self.cols {
                    let t = self.get(i, k) && rhs.get(k, j);
                    acc = if xor { acc ^ t } else { acc || t };
                }
                data[i * rhs.cols + j] = acc;
            }
        }
        BoolMatrix { rows: self.rows, cols: rhs.cols, data }
    }

    fn all(&self) -> bool {
        self.data.iter().all(|&b| b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationaryTail {
    /// Every level strictly greater than this one uses `matrix`.
    pub from_level: usize,
    pub matrix: IncidenceMatrix,
}

/// Outcome of a bounded semi-decision procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Yes,
    Unknown,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Yes => "yes",
            Decision::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub level: usize,
    pub vertex: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.vertex {
            Some(v) => write!(f, "level {} vertex {}: {}", self.level, v, self.message),
            None => write!(f, "level {}: {}", self.level, self.message),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, level: usize, vertex: Option<usize>, message: impl Into<String>) {
        self.violations.push(Violation { level, vertex, message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return writeln!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "violation\t{v}")?;
        }
        Ok(())
    }
}

pub struct BratteliDiagram {
    names: Vec<Vec<String>>,
    blocks: Vec<IncidenceMatrix>,
    tail: Option<StationaryTail>,
    counts: RwLock<Vec<Vec<u64>>>,
}

impl Clone for BratteliDiagram {
    fn clone(&self) -> Self {
        BratteliDiagram {
            names: self.names.clone(),
            blocks: self.blocks.clone(),
            tail: self.tail.clone(),
            counts: RwLock::new(Vec::new()),
        }
    }
}

impl PartialEq for BratteliDiagram {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.blocks == other.blocks && self.tail == other.tail
    }
}

impl Eq for BratteliDiagram {}

impl fmt::Debug for BratteliDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BratteliDiagram")
            .field("levels", &self.names)
            .field("blocks", &self.blocks)
            .field("tail", &self.tail)
            .finish()
    }
}

impl BratteliDiagram {
    /// Builds a diagram and validates it.
    pub fn new(
        names: Vec<Vec<String>>,
        blocks: Vec<IncidenceMatrix>,
        tail: Option<StationaryTail>,
    ) -> Result<Self> {
        let d = Self::new_unchecked(names, blocks, tail);
        let report = d.validate();
        if report.is_ok() {
            Ok(d)
        } else {
            Err(Error::InvalidDiagram(report.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")))
        }
    }

    pub fn new_unchecked(
        names: Vec<Vec<String>>,
        blocks: Vec<IncidenceMatrix>,
        tail: Option<StationaryTail>,
    ) -> Self {
        BratteliDiagram { names, blocks, tail, counts: RwLock::new(Vec::new()) }
    }

    /// Stationary diagram with one root edge into every vertex of level 1.
    pub fn stationary(matrix: IncidenceMatrix) -> Result<Self> {
        let n = matrix.rows();
        let names = vec![vec!["root".to_string()], (0..n).map(|i| format!("v{i}")).collect()];
        let first = IncidenceMatrix::new(n, 1, vec![1; n]);
        Self::new(names, vec![first], Some(StationaryTail { from_level: 1, matrix }))
    }

    /// The `k`-odometer: one vertex per level, `k` edges between levels.
    pub fn odometer(k: u64) -> Self {
        let names = vec![vec!["root".to_string()], vec!["v".to_string()]];
        let tail = StationaryTail { from_level: 1, matrix: IncidenceMatrix::new(1, 1, vec![k]) };
        Self::new(names, vec![IncidenceMatrix::new(1, 1, vec![k])], Some(tail)).expect("odometer is valid")
    }

    /// Stationary diagram with incidence `[[1,1],[1,0]]`.
    pub fn fibonacci() -> Self {
        Self::stationary(IncidenceMatrix::new(2, 2, vec![1, 1, 1, 0])).expect("fibonacci is valid")
    }

    /// Finite two-level diagram with `V1 = {a1,a2,a3}` (1, 3, 2 root edges)
    /// and `V2 = {b1,b2}` whose towers have heights 6 and 8.
    pub fn two_level_example() -> Self {
        let names = vec![
            vec!["v0".to_string()],
            vec!["a1".into(), "a2".into(), "a3".into()],
            vec!["b1".into(), "b2".into()],
        ];
        let first = IncidenceMatrix::new(3, 1, vec![1, 3, 2]);
        // rows b1, b2; cols a1, a2, a3
        let second = IncidenceMatrix::new(2, 3, vec![1, 1, 1, 2, 0, 3]);
        Self::new(names, vec![first, second], None).expect("two-level example is valid")
    }

    pub fn tail(&self) -> Option<&StationaryTail> {
        self.tail.as_ref()
    }

    /// Last explicitly described level.
    pub fn explicit_depth(&self) -> usize {
        self.names.len() - 1
    }

    /// `None` for infinite (stationary) diagrams.
    pub fn depth(&self) -> Option<usize> {
        match self.tail {
            Some(_) => None,
            None => Some(self.explicit_depth()),
        }
    }

    pub fn check_level(&self, level: usize) -> Result<()> {
        match self.depth() {
            Some(d) if level > d => Err(Error::LevelOutOfRange { level, depth: d }),
            _ => Ok(()),
        }
    }

    pub fn num_vertices(&self, level: usize) -> Result<usize> {
        self.check_level(level)?;
        Ok(match self.names.get(level) {
            Some(v) => v.len(),
            None => self.tail.as_ref().expect("checked").matrix.rows(),
        })
    }

    pub fn vertex_name(&self, level: usize, v: usize) -> String {
        match self.names.get(level) {
            Some(names) => names.get(v).cloned().unwrap_or_else(|| format!("#{v}")),
            None => {
                let t = self.tail.as_ref().map_or(0, |t| t.from_level);
                match self.names.get(t).and_then(|n| n.get(v)) {
                    Some(n) => format!("{n}@{level}"),
                    None => format!("#{v}@{level}"),
                }
            }
        }
    }

    /// Incidence matrix between levels `level-1` and `level`.
    pub fn incidence(&self, level: usize) -> Result<&IncidenceMatrix> {
        if level == 0 {
            return Err(Error::InvalidDiagram("level 0 has no incoming edges".into()));
        }
        self.check_level(level)?;
        if let Some(t) = &self.tail {
            if level > t.from_level {
                return Ok(&t.matrix);
            }
        }
        Ok(&self.blocks[level - 1])
    }

    pub fn edge_count(&self, level: usize, src: usize, dst: usize) -> Result<u64> {
        Ok(self.incidence(level)?.edges(src, dst))
    }

    /// `h_v^{(n)}` for every vertex at level `n`.
    pub fn path_counts(&self, level: usize) -> Result<Vec<u64>> {
        self.check_level(level)?;
        if let Some(c) = self.counts.read().expect("lock").get(level) {
            return Ok(c.clone());
        }
        let mut cache = self.counts.write().expect("lock");
        if cache.is_empty() {
            cache.push(vec![1]);
        }
        while cache.len() <= level {
            let i = cache.len();
            let next = self.incidence(i)?.checked_apply(&cache[i - 1]).ok_or(Error::Overflow(i))?;
            cache.push(next);
        }
        Ok(cache[level].clone())
    }

    pub fn path_count(&self, level: usize, v: usize) -> Result<u64> {
        Ok(self.path_counts(level)?[v])
    }

    pub fn total_paths(&self, level: usize) -> Result<u64> {
        self.path_counts(level)?
            .iter()
            .try_fold(0u64, |a, &b| a.checked_add(b))
            .ok_or(Error::Overflow(level))
    }

    /// Inter-level path counts `K_{v,w}`: rows are level-`to` vertices,
    /// columns level-`from` vertices.
    pub fn transfer(&self, from: usize, to: usize) -> Result<IncidenceMatrix> {
        if from > to {
            return Err(Error::InvalidCuts(format!("{from} > {to}")));
        }
        let mut acc = IncidenceMatrix::identity(self.num_vertices(from)?);
        for i in from + 1..=to {
            acc = self.incidence(i)?.checked_mul(&acc).ok_or(Error::Overflow(i))?;
        }
        Ok(acc)
    }

    fn transfer_pattern(&self, from: usize, to: usize, parity: bool) -> Result<BoolMatrix> {
        let n = self.num_vertices(from)?;
        let mut acc = BoolMatrix { rows: n, cols: n, data: (0..n * n).map(|k| k / n == k % n).collect() };
        for i in from + 1..=to {
            let m = self.incidence(i)?;
            let step = if parity { m.parity() } else { m.pattern() };
            acc = step.mul(&acc, parity);
        }
        Ok(acc)
    }

    /// Number of level-`level` edges; edges are numbered by
    /// `(range, source, copy)`.
    pub fn edges_at(&self, level: usize) -> Result<u64> {
        let m = self.incidence(level)?;
        Ok(m.data.iter().sum())
    }

    /// Global id of an edge within its level.
    pub fn edge_id(&self, level: usize, src: usize, dst: usize, copy: u64) -> Result<u64> {
        let m = self.incidence(level)?;
        if dst >= m.rows() || src >= m.cols() || copy >= m.edges(src, dst) {
            return Err(Error::InvalidPath(format!("no edge ({src},{dst},{copy}) at level {level}")));
        }
        let before_dst: u64 = (0..dst).flat_map(|w| (0..m.cols()).map(move |v| (v, w))).map(|(v, w)| m.edges(v, w)).sum();
        let before_src: u64 = (0..src).map(|v| m.edges(v, dst)).sum();
        Ok(before_dst + before_src + copy)
    }

    /// Inverse of [`edge_id`](Self::edge_id): `(source, range, copy)`.
    pub fn edge_at(&self, level: usize, id: u64) -> Result<(usize, usize, u64)> {
        let m = self.incidence(level)?;
        let mut rest = id;
        for w in 0..m.rows() {
            for v in 0..m.cols() {
                let e = m.edges(v, w);
                if rest < e {
                    return Ok((v, w, rest));
                }
                rest -= e;
            }
        }
        Err(Error::InvalidPath(format!("edge id {id} out of range at level {level}")))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.names.is_empty() {
            report.push(0, None, "no levels");
            return report;
        }
        if self.names[0].len() != 1 {
            report.push(0, None, format!("level 0 must have exactly one vertex, found {}", self.names[0].len()));
        }
        let last = self.explicit_depth();
        if self.blocks.len() != last {
            report.push(last, None, format!("expected {} edge blocks, found {}", last, self.blocks.len()));
            return report;
        }
        for (i, names) in self.names.iter().enumerate() {
            if names.is_empty() {
                report.push(i, None, "empty level");
            }
        }
        for i in 1..=last {
            let m = &self.blocks[i - 1];
            if m.rows() != self.names[i].len() || m.cols() != self.names[i - 1].len() {
                report.push(i, None, format!("edge block shape {}x{} does not match levels", m.rows(), m.cols()));
                continue;
            }
            for w in 0..m.rows() {
                if (0..m.cols()).all(|v| m.edges(v, w) == 0) {
                    report.push(i, Some(w), "no incoming edge");
                }
            }
            for v in 0..m.cols() {
                if (0..m.rows()).all(|w| m.edges(v, w) == 0) {
                    report.push(i - 1, Some(v), "no outgoing edge");
                }
            }
        }
        if let Some(t) = &self.tail {
            let m = &t.matrix;
            if m.rows() != m.cols() {
                report.push(t.from_level, None, "stationary matrix is not square");
                return report;
            }
            if t.from_level > last {
                report.push(t.from_level, None, format!("stationary tail starts after the last explicit level {last}"));
                return report;
            }
            if self.names[t.from_level].len() != m.rows() {
                report.push(t.from_level, None, "stationary matrix size does not match the level it repeats");
            }
            for w in 0..m.rows() {
                if (0..m.cols()).all(|v| m.edges(v, w) == 0) {
                    report.push(t.from_level + 1, Some(w), "no incoming edge");
                }
            }
            for v in 0..m.cols() {
                if (0..m.rows()).all(|w| m.edges(v, w) == 0) {
                    report.push(t.from_level, Some(v), "no outgoing edge");
                }
            }
            for i in t.from_level + 1..=last {
                if self.blocks[i - 1] != *m {
                    report.push(i, None, "explicit edges disagree with the stationary tail");
                }
            }
        } else {
            // The last explicit level of a finite diagram has no outgoing
            // edges to check; nothing else to do.
        }
        report
    }

    fn budget(&self, depth: usize) -> usize {
        match self.depth() {
            Some(d) => depth.min(d),
            None => depth,
        }
    }

    /// Bounded check that every level connects fully to some later level.
    /// Stationary tails are decided exactly via the Wielandt bound.
    pub fn is_simple(&self, depth: usize) -> Decision {
        if let Some(t) = &self.tail {
            return if is_primitive(&t.matrix) { Decision::Yes } else { Decision::Unknown };
        }
        let depth = self.budget(depth);
        // The root always connects to everything; at least one later level
        // has to be checked for the answer to carry information.
        if depth < 2 {
            return Decision::Unknown;
        }
        for n in 0..depth {
            let connected = (n + 1..=depth).any(|m| self.transfer_pattern(n, m, false).map(|p| p.all()).unwrap_or(false));
            if !connected {
                return Decision::Unknown;
            }
        }
        Decision::Yes
    }

    /// Greedy search for a level chain whose inter-level path counts are all
    /// nonzero and even. Returns the decision and the chain found.
    pub fn group_simplicity_chain(&self, depth: usize) -> (Decision, Vec<usize>) {
        let depth = self.budget(depth);
        let mut chain = vec![0];
        let mut current = 0;
        loop {
            let next = (current + 1..=depth).find(|&m| {
                let nonzero = self.transfer_pattern(current, m, false).map(|p| p.all()).unwrap_or(false);
                let odd = self.transfer_pattern(current, m, true).map(|p| p.data.iter().any(|&b| b)).unwrap_or(true);
                nonzero && !odd
            });
            let Some(m) = next else { break };
            chain.push(m);
            if let Some(t) = &self.tail {
                if current >= t.from_level {
                    // The same gap repeats forever on a stationary tail.
                    return (Decision::Yes, chain);
                }
            }
            current = m;
        }
        let done = match self.depth() {
            Some(d) => current == d && chain.len() > 1,
            None => false,
        };
        (if done { Decision::Yes } else { Decision::Unknown }, chain)
    }

    pub fn group_simplicity_criterion(&self, depth: usize) -> Decision {
        self.group_simplicity_chain(depth).0
    }

    /// Telescopes to the given strictly increasing cut levels (starting at 0).
    /// The result is finite with `cuts.len() - 1` levels.
    pub fn telescope(&self, cuts: &[usize]) -> Result<BratteliDiagram> {
        self.check_cuts(cuts)?;
        let names = cuts.iter().map(|&c| self.level_names(c)).collect::<Result<Vec<_>>>()?;
        let blocks = cuts.windows(2).map(|w| self.transfer(w[0], w[1])).collect::<Result<Vec<_>>>()?;
        Ok(Self::new_unchecked(names, blocks, None))
    }

    /// Telescopes to `cuts` followed by every `step`-th level after the last
    /// cut. Requires a stationary tail starting at or before the last cut.
    pub fn telescope_periodic(&self, cuts: &[usize], step: usize) -> Result<BratteliDiagram> {
        self.check_cuts(cuts)?;
        let t = self.tail.as_ref().ok_or(Error::NoStationaryTail)?;
        let last = *cuts.last().expect("non-empty");
        if step == 0 || last < t.from_level {
            return Err(Error::InvalidCuts("periodic cuts must start inside the stationary tail with a positive step".into()));
        }
        let mut all = cuts.to_vec();
        all.push(last + step);
        let finite = self.telescope(&all)?;
        let matrix = self.transfer(last, last + step)?;
        Ok(Self::new_unchecked(
            finite.names,
            finite.blocks,
            Some(StationaryTail { from_level: cuts.len() - 1, matrix }),
        ))
    }

    fn check_cuts(&self, cuts: &[usize]) -> Result<()> {
        if cuts.first() != Some(&0) {
            return Err(Error::InvalidCuts("cuts must start at level 0".into()));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidCuts("cuts must be strictly increasing".into()));
        }
        self.check_level(*cuts.last().expect("non-empty"))
    }

    fn level_names(&self, level: usize) -> Result<Vec<String>> {
        let n = self.num_vertices(level)?;
        Ok((0..n).map(|v| self.vertex_name(level, v)).collect())
    }

    pub fn to_file(&self) -> DiagramFile {
        let mut edges = Vec::new();
        for (i, m) in self.blocks.iter().enumerate() {
            for w in 0..m.rows() {
                for v in 0..m.cols() {
                    let c = m.edges(v, w);
                    if c > 0 {
                        edges.push(EdgeSpec { level: i + 1, src: v, dst: w, count: c });
                    }
                }
            }
        }
        DiagramFile {
            levels: self.names.clone(),
            edges,
            stationary: self.tail.as_ref().map(|t| StationarySpec { from_level: t.from_level, matrix: t.matrix.to_rows() }),
        }
    }
}

/// Primitivity of a non-negative square matrix: `M^k > 0` for
/// `k = (n-1)^2 + 1`.
pub fn is_primitive(m: &IncidenceMatrix) -> bool {
    let n = m.rows();
    if n == 0 || m.cols() != n {
        return false;
    }
    let p = m.pattern();
    let k = (n - 1) * (n - 1) + 1;
    let mut acc = p.clone();
    for _ in 1..k {
        acc = p.mul(&acc, false);
    }
    acc.all()
}

/// On-disk diagram description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramFile {
    pub levels: Vec<Vec<String>>,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary: Option<StationarySpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub level: usize,
    pub src: usize,
    pub dst: usize,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationarySpec {
    pub from_level: usize,
    pub matrix: Vec<Vec<u64>>,
}

impl DiagramFile {
    /// Assembles the diagram without validating its invariants; index
    /// errors are returned as a report.
    pub fn assemble(&self) -> std::result::Result<BratteliDiagram, ValidationReport> {
        let mut report = ValidationReport::default();
        if self.levels.is_empty() {
            report.push(0, None, "no levels");
            return Err(report);
        }
        let mut blocks: Vec<IncidenceMatrix> =
            (1..self.levels.len()).map(|i| IncidenceMatrix::zeros(self.levels[i].len(), self.levels[i - 1].len())).collect();
        for e in &self.edges {
            if e.level == 0 || e.level >= self.levels.len() {
                report.push(e.level, None, format!("edge level {} out of range", e.level));
                continue;
            }
            let m = &mut blocks[e.level - 1];
            if e.dst >= m.rows() {
                report.push(e.level, Some(e.dst), "edge destination index out of range");
                continue;
            }
            if e.src >= m.cols() {
                report.push(e.level - 1, Some(e.src), "edge source index out of range");
                continue;
            }
            let cur = m.get(e.dst, e.src);
            m.set(e.dst, e.src, cur + e.count);
        }
        let tail = match &self.stationary {
            Some(s) => match IncidenceMatrix::from_rows(&s.matrix) {
                Ok(matrix) => Some(StationaryTail { from_level: s.from_level, matrix }),
                Err(_) => {
                    report.push(s.from_level, None, "stationary matrix rows are ragged");
                    None
                }
            },
            None => None,
        };
        if !report.is_ok() {
            return Err(report);
        }
        Ok(BratteliDiagram::new_unchecked(self.levels.clone(), blocks, tail))
    }

    pub fn validate(&self) -> ValidationReport {
        match self.assemble() {
            Ok(d) => d.validate(),
            Err(r) => r,
        }
    }

    pub fn build(&self) -> Result<BratteliDiagram> {
        let d = self
            .assemble()
            .map_err(|r| Error::InvalidDiagram(r.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")))?;
        let r = d.validate();
        if r.is_ok() {
            Ok(d)
        } else {
            Err(Error::InvalidDiagram(r.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")))
        }
    }
}
