//! Explicit constructions inside the full group: Rokhlin towers, splitting
//! and comparing clopen sets, involutions pushed towards the center, and
//! invariant approximations of a set.
//!
//! Whenever a construction may pick "any" paths, it takes the lowest-index
//! ones in path order. Every witness has a `verify` method that recomputes
//! its post-conditions from scratch.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::clopen::{same_diagram, ClopenSet, FinitePath, LevelSet};
use crate::diagram::BratteliDiagram;
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::measure::{check_measures, max_measure, set_distance, InvariantMeasure};
use crate::scalar::{serialize_display, Value};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

/// Outcome of re-verifying a witness.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Verification {
    pub checks: Vec<Check>,
}

impl Verification {
    fn push(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), ok, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.ok)
    }
}

impl fmt::Display for Verification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "check\t{}\t{}\t{}", c.name, if c.ok { "ok" } else { "FAILED" }, c.detail)?;
        }
        Ok(())
    }
}

fn ensure_same(diagram: &Arc<BratteliDiagram>, sets: &[&ClopenSet], measures: &[InvariantMeasure]) -> Result<()> {
    if sets.iter().any(|s| !same_diagram(s.diagram(), diagram)) {
        return Err(Error::DiagramMismatch);
    }
    if !same_diagram(check_measures(measures)?, diagram) {
        return Err(Error::DiagramMismatch);
    }
    Ok(())
}

fn sum_of_weights(mu: &InvariantMeasure, level: usize) -> Result<Value> {
    Ok(crate::scalar::sum(&mu.weights(level)?))
}

/// Member indices of `set` at `level`, per vertex.
fn members(set: &ClopenSet, level: usize) -> Result<Vec<Vec<usize>>> {
    let s = set.at_level(level)?;
    Ok((0..s.members.len()).map(|v| s.indices(v).collect()).collect())
}

fn set_from(diagram: &Arc<BratteliDiagram>, level: usize, per_vertex: &[Vec<usize>]) -> Result<ClopenSet> {
    let mut s = LevelSet::empty(diagram, level)?;
    for (v, idx) in per_vertex.iter().enumerate() {
        for &i in idx {
            s.members[v][i] = true;
        }
    }
    ClopenSet::from_level_set(diagram.clone(), s)
}

/// Involution at `level` made of the given transpositions per vertex.
fn involution(diagram: &Arc<BratteliDiagram>, level: usize, pairs: &[Vec<(usize, usize)>]) -> Result<GroupElement> {
    let h = diagram.path_counts(level)?;
    let perms = h
        .iter()
        .zip(pairs)
        .map(|(&hv, ps)| {
            let mut p: Vec<usize> = (0..hv as usize).collect();
            for &(a, b) in ps {
                p.swap(a, b);
            }
            p
        })
        .collect();
    GroupElement::from_perms(diagram, level, perms)
}

/// `B, g(B), …, g^{m-1}(B)` disjoint inside the ambient set, up to a
/// residual.
#[derive(Clone, Debug)]
pub struct TowerWitness {
    pub level: usize,
    pub ambient: ClopenSet,
    pub base: ClopenSet,
    pub g: GroupElement,
    pub height: usize,
    pub residual: ClopenSet,
}

impl TowerWitness {
    pub fn verify(&self, measures: &[InvariantMeasure], eps: f64) -> Result<Verification> {
        let mut out = Verification::default();
        let mut floors = vec![self.base.clone()];
        for _ in 1..self.height {
            let next = self.g.apply_set(floors.last().expect("non-empty"))?;
            floors.push(next);
        }
        let mut disjoint = true;
        let mut inside = true;
        for (i, f) in floors.iter().enumerate() {
            inside &= f.is_subset(&self.ambient)?;
            for other in &floors[i + 1..] {
                disjoint &= f.is_disjoint(other)?;
            }
            disjoint &= f.is_disjoint(&self.residual)?;
        }
        out.push("floors-disjoint", disjoint, format!("{} floors", floors.len()));
        out.push("floors-inside", inside, "");
        let mut cover = self.residual.clone();
        for f in &floors {
            cover = cover.union(f)?;
        }
        out.push("cover", cover == self.ambient, "floors and residual make up the ambient set");
        out.push("g-support", self.g.support()?.is_subset(&self.ambient)?, "");
        for (i, mu) in measures.iter().enumerate() {
            let r = mu.measure_of(&self.residual)?;
            out.push(format!("residual[{i}]"), r.certainly_lt(&Value::approx(eps, 0.0)), format!("{r} < {eps}"));
        }
        Ok(out)
    }
}

/// Rokhlin tower of height `m` inside `a`. With `level = None` the level is
/// the first one where every nonempty tower of `a` is at least `m⌈1/ε⌉`
/// high, which forces the residual below `ε`.
pub fn rokhlin_tower(
    a: &ClopenSet,
    m: usize,
    eps: f64,
    measures: &[InvariantMeasure],
    level: Option<usize>,
    depth: usize,
) -> Result<TowerWitness> {
    let d = a.diagram().clone();
    ensure_same(&d, &[a], measures)?;
    if a.is_empty() {
        return Err(Error::Precondition("ambient set is empty".into()));
    }
    if m < 2 || eps.is_nan() || eps <= 0.0 {
        return Err(Error::Precondition("need m >= 2 and eps > 0".into()));
    }
    let needed = m as u64 * (1.0 / eps).ceil() as u64;
    let n = match level {
        Some(n) => {
            if n < a.level() {
                return Err(Error::LevelOutOfRange { level: a.level(), depth: n });
            }
            n
        }
        None => (a.level()..=depth)
            .find(|&n| {
                a.counts_at(n).map(|k| k.iter().filter(|&&x| x > 0).all(|&x| x >= needed)).unwrap_or(false)
            })
            .ok_or_else(|| Error::DepthExhausted { depth, reason: format!("tower heights inside the set must reach {needed}") })?,
    };
    let idx = members(a, n)?;
    let h = d.path_counts(n)?;
    let mut base = vec![Vec::new(); idx.len()];
    let mut residual = vec![Vec::new(); idx.len()];
    let mut perms: Vec<Vec<usize>> = h.iter().map(|&hv| (0..hv as usize).collect()).collect();
    for (v, list) in idx.iter().enumerate() {
        let k = list.len();
        let full = k / m;
        for i in 0..full {
            base[v].push(list[i * m]);
        }
        residual[v].extend_from_slice(&list[full * m..]);
        for j in 0..k {
            perms[v][list[j]] = list[(j + 1) % k];
        }
    }
    Ok(TowerWitness {
        level: n,
        ambient: a.clone(),
        base: set_from(&d, n, &base)?,
        g: GroupElement::from_perms(&d, n, perms)?,
        height: m,
        residual: set_from(&d, n, &residual)?,
    })
}

#[derive(Clone, Debug)]
pub struct SplitWitness {
    pub level: usize,
    pub lambda: Value,
    pub source: ClopenSet,
    pub subset: ClopenSet,
}

impl SplitWitness {
    /// `λμ(A) − ε < μ(A') ≤ λμ(A)` for every measure, and `A' ⊆ A`.
    pub fn verify(&self, measures: &[InvariantMeasure], eps: f64) -> Result<Verification> {
        let mut out = Verification::default();
        out.push("subset", self.subset.is_subset(&self.source)?, "");
        for (i, mu) in measures.iter().enumerate() {
            let target = self.lambda.mul(&mu.measure_of(&self.source)?);
            let got = mu.measure_of(&self.subset)?;
            let low = target.sub(&Value::approx(eps, 0.0));
            out.push(format!("lower[{i}]"), low.certainly_lt(&got), format!("{low} < {got}"));
            out.push(format!("upper[{i}]"), got.certainly_le(&target), format!("{got} <= {target}"));
        }
        Ok(out)
    }
}

fn floor_times(lambda: &Value, k: u64) -> u64 {
    let x = lambda.scale(k);
    match x.as_exact() {
        Some(r) => r.floor().to_integer().try_into().unwrap_or(0),
        None => x.to_f64().floor().max(0.0) as u64,
    }
}

/// `A' ⊆ A` with `λμ(A) − ε < μ(A') ≤ λμ(A)`: at a level where the tower
/// bases weigh less than `ε` in total, keep `⌊λK_{A,v}⌋` paths of `A` per
/// vertex.
pub fn split_subset(a: &ClopenSet, lambda: &Value, eps: f64, measures: &[InvariantMeasure], depth: usize) -> Result<SplitWitness> {
    let d = a.diagram().clone();
    ensure_same(&d, &[a], measures)?;
    if lambda.lower() < 0.0 || lambda.upper() > 1.0 + lambda.err() {
        return Err(Error::Precondition(format!("lambda {lambda} outside [0, 1]")));
    }
    let bound = Value::approx(eps, 0.0);
    let mut chosen = None;
    for n in a.level()..=depth {
        let mut ok = true;
        for mu in measures {
            ok &= sum_of_weights(mu, n)?.certainly_lt(&bound);
        }
        if ok {
            chosen = Some(n);
            break;
        }
    }
    let n = chosen.ok_or_else(|| Error::DepthExhausted { depth, reason: format!("tower bases never weigh less than {eps}") })?;
    let keep: Vec<Vec<usize>> = members(a, n)?
        .into_iter()
        .map(|list| {
            let c = floor_times(lambda, list.len() as u64).min(list.len() as u64) as usize;
            list[..c].to_vec()
        })
        .collect();
    Ok(SplitWitness { level: n, lambda: lambda.clone(), source: a.clone(), subset: set_from(&d, n, &keep)? })
}

#[derive(Clone, Debug)]
pub struct CompareWitness {
    pub a: ClopenSet,
    pub b: ClopenSet,
    pub level: usize,
    pub g: GroupElement,
    /// Transpositions used per vertex, padding included.
    pub transpositions: Vec<u64>,
}

impl CompareWitness {
    pub fn is_even(&self) -> bool {
        self.transpositions.iter().all(|t| t % 2 == 0)
    }

    pub fn verify(&self) -> Result<Verification> {
        let mut out = Verification::default();
        out.push("involution", self.g.compose(&self.g)?.is_identity(), "");
        let image = self.g.apply_set(&self.a)?;
        out.push("image-inside", image.is_subset(&self.b)?, "g(A) within B");
        let union = self.a.union(&self.b)?;
        out.push("support", self.g.support()?.is_subset(&union)?, "supp(g) within A u B");
        Ok(out)
    }
}

/// Involution `g` with `g(A) ⊆ B` and `supp(g) ⊆ A ∪ B`, found at the first
/// level where `A∖B` has no more paths than `B∖A` at any vertex.
pub fn compare_sets(a: &ClopenSet, b: &ClopenSet, measures: &[InvariantMeasure], depth: usize) -> Result<CompareWitness> {
    let d = a.diagram().clone();
    ensure_same(&d, &[a, b], measures)?;
    if a.is_empty() {
        return Ok(CompareWitness { a: a.clone(), b: b.clone(), level: 0, g: GroupElement::identity(&d, 0)?, transpositions: vec![0] });
    }
    for mu in measures {
        let (ma, mb) = (mu.measure_of(a)?, mu.measure_of(b)?);
        if !ma.certainly_lt(&mb) {
            return Err(Error::Precondition(format!("need mu(A) < mu(B), got {ma} and {mb}")));
        }
    }
    pair_into(a, b, depth)
}

/// The pairing step of [`compare_sets`] without the measure precondition.
fn pair_into(a: &ClopenSet, b: &ClopenSet, depth: usize) -> Result<CompareWitness> {
    let d = a.diagram().clone();
    let amb = a.difference(b)?;
    let bma = b.difference(a)?;
    let both = a.intersection(b)?;
    let start = a.level().max(b.level());
    let mut last = None;
    for n in start..=depth {
        let from = members(&amb, n)?;
        let to = members(&bma, n)?;
        if let Some(v) = (0..from.len()).find(|&v| from[v].len() > to[v].len()) {
            last = Some((v, n));
            continue;
        }
        let shared = members(&both, n)?;
        let mut pairs = Vec::with_capacity(from.len());
        for v in 0..from.len() {
            let mut p: Vec<(usize, usize)> = from[v].iter().zip(&to[v]).map(|(&x, &y)| (x, y)).collect();
            if p.len() % 2 == 1 {
                let spare = &to[v][from[v].len()..];
                if spare.len() >= 2 {
                    p.push((spare[0], spare[1]));
                } else if shared[v].len() >= 2 {
                    p.push((shared[v][0], shared[v][1]));
                }
            }
            pairs.push(p);
        }
        let transpositions = pairs.iter().map(|p| p.len() as u64).collect();
        let g = involution(&d, n, &pairs)?;
        return Ok(CompareWitness { a: a.clone(), b: b.clone(), level: n, g, transpositions });
    }
    let (v, n) = last.unwrap_or((0, depth));
    Err(Error::DepthExhausted { depth, reason: format!("vertex {v} at level {n} has more paths in A\\B than in B\\A") })
}

#[derive(Clone, Debug)]
pub struct MoveWitness {
    pub a: ClopenSet,
    pub b: ClopenSet,
    pub g: GroupElement,
    pub lambda: Value,
    pub distance: Value,
    pub eps: f64,
}

impl MoveWitness {
    pub fn verify(&self, measures: &[InvariantMeasure]) -> Result<Verification> {
        let mut out = Verification::default();
        let d = set_distance(measures, &self.g.apply_set(&self.a)?, &self.b)?;
        let bound = Value::approx(4.0 * self.eps, 0.0);
        out.push("distance", d.certainly_lt(&bound), format!("d(g(A),B) = {d} < {}", 4.0 * self.eps));
        out.push("reported", d == self.distance, "");
        Ok(out)
    }
}

/// `g` with `d(g(A), B) < 4ε` when `|μ(A) − μ(B)| < ε` for every measure.
/// A part `A'` of `A` is paired into `B`; several split
/// ratios are tried, including `1 − ε/min μ(A)`, and the closest image wins.
pub fn move_set_close(a: &ClopenSet, b: &ClopenSet, eps: f64, measures: &[InvariantMeasure], depth: usize) -> Result<MoveWitness> {
    let d = a.diagram().clone();
    ensure_same(&d, &[a, b], measures)?;
    let tol = Value::approx(eps, 0.0);
    let mut min_a: Option<Value> = None;
    for mu in measures {
        let (ma, mb) = (mu.measure_of(a)?, mu.measure_of(b)?);
        if !ma.sub(&mb).abs().certainly_lt(&tol) {
            return Err(Error::Precondition(format!("need |mu(A) - mu(B)| < {eps}, got {ma} and {mb}")));
        }
        min_a = Some(match min_a {
            None => ma,
            Some(x) => if ma.certainly_lt(&x) { ma } else { x },
        });
    }
    let identity = GroupElement::identity(&d, 0)?;
    if a == b || a.is_empty() {
        let distance = set_distance(measures, a, b)?;
        return Ok(MoveWitness { a: a.clone(), b: b.clone(), g: identity, lambda: Value::one(), distance, eps });
    }
    let min_a = min_a.expect("measures are non-empty");
    let exact_eps = Value::from_f64_exact(eps)?;
    let lambda0 = Value::one().sub(&exact_eps.div(&min_a)?);
    // λ = 1 pairs A into B directly when the path counts allow it.
    let mut candidates: Vec<Value> = (0..=16).rev().map(|j| Value::ratio(j, 16)).collect();
    if lambda0.lower() >= 0.0 {
        candidates.insert(0, lambda0);
    } else {
        candidates.insert(0, Value::zero());
    }
    let mut best: Option<MoveWitness> = None;
    let mut last_err = None;
    for lambda in candidates {
        let split = match split_subset(a, &lambda, eps / 2.0, measures, depth) {
            Ok(s) => s,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let g = match pair_into(&split.subset, b, depth) {
            Ok(c) => c.g,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let distance = set_distance(measures, &g.apply_set(a)?, b)?;
        let better = match &best {
            None => true,
            Some(w) => distance.certainly_lt(&w.distance),
        };
        if better {
            best = Some(MoveWitness { a: a.clone(), b: b.clone(), g, lambda, distance, eps });
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::DepthExhausted { depth, reason: "no split ratio led to a comparison".into() }))
}

/// `K` counts used by the center-involution construction, between levels
/// `n` and `l`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathCountTable {
    pub n: usize,
    pub l: usize,
    /// `K_{A,v0,v}` at level `n`.
    pub k_ambient: Vec<u64>,
    /// `K_{supp(h),v0,v}` at level `n`.
    pub k_support: Vec<u64>,
    /// `K_{v,w}`, indexed `[v][w]`.
    pub k_between: Vec<Vec<u64>>,
    pub n_vw: Vec<Vec<u64>>,
    pub m_vw: Vec<Vec<u64>>,
}

impl PathCountTable {
    /// `Σ_v K_{C,v} K_{v,w}` for per-vertex counts `K_{C,v}` at level `n`.
    pub fn push_forward(&self, counts: &[u64]) -> Vec<u64> {
        let width = self.k_between.first().map_or(0, Vec::len);
        (0..width).map(|w| counts.iter().zip(&self.k_between).map(|(c, row)| c * row[w]).sum()).collect()
    }

    /// Predicted `K_{supp(t_n h),v0,w}`.
    pub fn predicted_twisted(&self) -> Vec<u64> {
        let base = self.push_forward(&self.k_support);
        base.iter().enumerate().map(|(w, x)| x + self.n_vw.iter().map(|row| 2 * row[w]).sum::<u64>()).collect()
    }

    /// Predicted `K_{supp(h_n),v0,w}`.
    pub fn predicted_center(&self) -> Vec<u64> {
        let width = self.k_between.first().map_or(0, Vec::len);
        (0..width).map(|w| self.k_ambient.iter().zip(&self.m_vw).map(|(k, row)| 2 * k * row[w]).sum()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct CenterWitness {
    pub ambient: ClopenSet,
    pub h: GroupElement,
    pub x: FinitePath,
    pub t: GroupElement,
    pub h_n: GroupElement,
    pub table: PathCountTable,
    /// `(K_{supp(t_n h),v0,w}, K_{supp(h_n),v0,w})` counted on the elements.
    pub certificate: Vec<(u64, u64)>,
}

/// Adjacent transpositions of the ambient paths at each level-`n` vertex;
/// they generate `G_{A,n}`.
pub fn local_generators(a: &ClopenSet, n: usize) -> Result<Vec<GroupElement>> {
    let d = a.diagram();
    let mut out = Vec::new();
    for (v, list) in members(a, n)?.iter().enumerate() {
        for w in list.windows(2) {
            out.push(GroupElement::transposition(d, n, v, w[0], w[1])?);
        }
    }
    Ok(out)
}

impl CenterWitness {
    pub fn verify(&self) -> Result<Verification> {
        let mut out = Verification::default();
        let n = self.table.n;
        let l = self.table.l;
        out.push("t-involution", self.t.compose(&self.t)?.is_identity(), "");
        out.push("h_n-involution", self.h_n.compose(&self.h_n)?.is_identity(), "");
        let st = self.t.support()?;
        let sh = self.h.support()?;
        out.push("t-disjoint-h", st.is_disjoint(&sh)?, "supp(t) and supp(h) are disjoint");
        if n >= 1 {
            let outer = ClopenSet::cylinder(self.h.diagram(), &self.x.prefix(n - 1))?;
            let inner = ClopenSet::cylinder(self.h.diagram(), &self.x.prefix(n))?;
            out.push("t-near-x", st.is_subset(&outer.difference(&inner)?)?, "supp(t) within U(q_{n-1}) \\ U(q_n)");
        }
        out.push("inside-ambient", st.union(&self.h_n.support()?)?.is_subset(&self.ambient)?, "");
        let gens = local_generators(&self.ambient, n)?;
        let mut commuting = 0;
        for s in &gens {
            if self.h_n.compose(s)?.compose(&s.compose(&self.h_n)?.inverse())?.is_identity() {
                commuting += 1;
            }
        }
        out.push("commutes", commuting == gens.len(), format!("{commuting}/{} generators of G_(A,{n})", gens.len()));
        let twisted = self.t.compose(&self.h)?.support()?.counts_at(l)?;
        let center = self.h_n.support()?.counts_at(l)?;
        out.push("certificate", twisted == center, format!("{twisted:?} = {center:?} at level {l}"));
        out.push(
            "certificate-formula",
            twisted == self.table.predicted_twisted() && center == self.table.predicted_center(),
            "counted supports agree with the K-table",
        );
        let k_h = sh.counts_at(l)?;
        out.push("push-forward", k_h == self.table.push_forward(&self.table.k_support), "K_(C,w) = sum_v K_(C,v) K_(v,w)");
        Ok(out)
    }
}

/// Extends a finite path by the lowest edge out of its end vertex until it
/// reaches `level`.
pub fn extend_path(d: &BratteliDiagram, x: &FinitePath, level: usize) -> Result<FinitePath> {
    let mut ids = x.0.clone();
    let (mut v, _) = x.locate(d)?;
    for k in x.level() + 1..=level {
        let inc = d.incidence(k)?;
        let w = (0..inc.rows()).find(|&w| inc.edges(v, w) > 0).ok_or_else(|| Error::InvalidPath(format!("vertex {v} has no outgoing edge")))?;
        ids.push(d.edge_id(k, v, w, 0)?);
        v = w;
    }
    Ok(FinitePath(ids))
}

/// Involutions `t_n` near `x` and `h_n` commuting with `G_{A,n}` such that
/// `t_n h` and `h_n` have equal support counts at level `l`, which makes
/// them conjugate. The first admissible `l' >= l` (all required paths
/// between levels `n` and `l'` exist) is used.
pub fn center_involutions(a: &ClopenSet, h: &GroupElement, x: &FinitePath, n: usize, l: usize, depth: usize) -> Result<CenterWitness> {
    let d = a.diagram().clone();
    if !same_diagram(&d, h.diagram()) {
        return Err(Error::DiagramMismatch);
    }
    if !h.is_involution() {
        return Err(Error::Precondition("h is not an involution".into()));
    }
    let sh = h.support()?;
    if sh.is_empty() || !sh.is_subset(a)? || sh == *a {
        return Err(Error::Precondition("supp(h) must be a non-empty proper subset of A".into()));
    }
    if n == 0 || h.level() > n || a.level() > n {
        return Err(Error::Precondition(format!("h and A must live at level n = {n} >= 1")));
    }
    if x.level() < n {
        return Err(Error::Precondition(format!("the point prefix needs at least {n} edges")));
    }
    let q_prev = x.prefix(n - 1);
    if !ClopenSet::cylinder(&d, &q_prev)?.is_subset(a)? {
        return Err(Error::Precondition("U(q_{n-1}) is not inside A".into()));
    }
    let (u, _) = q_prev.locate(&d)?;
    let x_edge = x.0[n - 1];
    let inc = d.incidence(n)?;
    let width_n = d.num_vertices(n)?;
    // Index at level n of p_{n,v} = q_{n-1} followed by an edge other than x_n.
    let mut p_index: Vec<Option<usize>> = Vec::with_capacity(width_n);
    for v in 0..width_n {
        let mut found = None;
        for c in 0..inc.edges(u, v) {
            let id = d.edge_id(n, u, v, c)?;
            if id != x_edge {
                let mut ids = q_prev.0.clone();
                ids.push(id);
                found = Some(FinitePath(ids).locate(&d)?.1);
                break;
            }
        }
        p_index.push(found);
    }
    let k_ambient = a.counts_at(n)?;
    let k_support = sh.counts_at(n)?;
    let mut chosen = None;
    for lp in l.max(n + 1)..=depth {
        let tr = d.transfer(n, lp)?;
        let width_l = tr.rows();
        let mut n_vw = vec![vec![0u64; width_l]; width_n];
        let mut m_vw = vec![vec![0u64; width_l]; width_n];
        let mut ok = true;
        for v in 0..width_n {
            let ka = k_ambient[v];
            if ka == 0 {
                continue;
            }
            for w in 0..width_l {
                let kvw = tr.get(w, v);
                let half = k_support[v] / 2 * kvw;
                let nn = (ka - half % ka) % ka;
                let mm = (half + nn) / ka;
                ok &= 2 * nn <= kvw && 2 * mm <= kvw && (nn == 0 || p_index[v].is_some());
                n_vw[v][w] = nn;
                m_vw[v][w] = mm;
            }
        }
        if ok {
            let k_between = (0..width_n).map(|v| (0..width_l).map(|w| tr.get(w, v)).collect()).collect();
            chosen = Some(PathCountTable { n, l: lp, k_ambient: k_ambient.clone(), k_support: k_support.clone(), k_between, n_vw, m_vw });
            break;
        }
    }
    let table = chosen.ok_or_else(|| Error::DepthExhausted { depth, reason: format!("no admissible level l >= {l} for n = {n}") })?;
    let lp = table.l;
    let ambient_idx = members(a, n)?;
    let width_l = d.num_vertices(lp)?;
    let mut t_pairs = vec![Vec::new(); width_l];
    let mut h_pairs = vec![Vec::new(); width_l];
    for w in 0..width_l {
        let blocks = crate::clopen::suffix_blocks(&d, n, lp, w)?;
        for v in 0..width_n {
            let suffixes: Vec<usize> = blocks.iter().filter(|b| b.vertex == v).map(|b| b.start).collect();
            let nn = table.n_vw[v][w] as usize;
            if nn > 0 {
                let j = p_index[v].expect("checked above");
                for i in 0..nn {
                    t_pairs[w].push((suffixes[i] + j, suffixes[i + nn] + j));
                }
            }
            let mm = table.m_vw[v][w] as usize;
            for i in 0..mm {
                for &pre in &ambient_idx[v] {
                    h_pairs[w].push((suffixes[i] + pre, suffixes[i + mm] + pre));
                }
            }
        }
    }
    let t = involution(&d, lp, &t_pairs)?;
    let h_n = involution(&d, lp, &h_pairs)?;
    if !t.support()?.is_disjoint(&sh)? {
        return Err(Error::Precondition("the paths next to q_{n-1} meet supp(h); choose another point".into()));
    }
    let twisted = t.compose(h)?.support()?.counts_at(lp)?;
    let center = h_n.support()?.counts_at(lp)?;
    let certificate = twisted.into_iter().zip(center).collect();
    Ok(CenterWitness { ambient: a.clone(), h: h.clone(), x: x.clone(), t, h_n, table, certificate })
}

/// `c` with `c u c⁻¹ = v` for involutions `u`, `v` at a common level whose
/// supports have equal counts at every vertex.
pub fn conjugate_involutions(u: &GroupElement, v: &GroupElement) -> Result<GroupElement> {
    let level = u.level().max(v.level());
    let (u, v) = (u.embed(level)?, v.embed(level)?);
    let split = |p: &[usize]| {
        let pairs: Vec<(usize, usize)> = p.iter().enumerate().filter(|(i, &x)| *i < x).map(|(i, &x)| (i, x)).collect();
        let fixed: Vec<usize> = p.iter().enumerate().filter(|(i, &x)| *i == x).map(|(i, _)| i).collect();
        (pairs, fixed)
    };
    let mut perms = Vec::with_capacity(u.perms().len());
    for (pu, pv) in u.perms().iter().zip(v.perms()) {
        let (cu, fu) = split(pu);
        let (cv, fv) = split(pv);
        if cu.len() != cv.len() {
            return Err(Error::Precondition("supports differ in size".into()));
        }
        let mut c = vec![0; pu.len()];
        for (&(a, b), &(x, y)) in cu.iter().zip(&cv) {
            c[a] = x;
            c[b] = y;
        }
        for (&a, &x) in fu.iter().zip(&fv) {
            c[a] = x;
        }
        perms.push(c);
    }
    GroupElement::from_perms(u.diagram(), level, perms)
}

fn is_invariant(set: &ClopenSet, n: usize) -> Result<bool> {
    let whole = ClopenSet::whole(set.diagram());
    for s in local_generators(&whole, n)? {
        if s.apply_set(set)? != *set {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug)]
pub struct Centralized {
    pub source: ClopenSet,
    pub n: usize,
    pub b_n: ClopenSet,
    pub g: GroupElement,
    pub distance: Value,
    /// Level at which the involution was pushed to the center, and the level
    /// carrying the count certificate; `None` when `B` was already invariant.
    pub levels: Option<(usize, usize)>,
}

impl Centralized {
    pub fn verify(&self, measures: &[InvariantMeasure]) -> Result<Verification> {
        let mut out = Verification::default();
        out.push("invariant", is_invariant(&self.b_n, self.n)?, format!("B_n is G_{}-invariant", self.n));
        let d = set_distance(measures, &self.g.apply_set(&self.source)?, &self.b_n)?;
        out.push("distance", d == self.distance, format!("d(g(B), B_n) = {d}"));
        Ok(out)
    }
}

/// A `G_n`-invariant set `B_n` and `g` with `g(B)` close to `B_n`. An
/// involution supported in `B` comes from a height-2 Rokhlin tower with
/// residual below `2^{-n}`; it is pushed to the center next to a point
/// outside its support, and `B_n` is the support of the central
/// involution.
pub fn centralize_set(b: &ClopenSet, n: usize, measures: &[InvariantMeasure], depth: usize) -> Result<Centralized> {
    let d = b.diagram().clone();
    ensure_same(&d, &[b], measures)?;
    if b.level() <= n && is_invariant(b, n)? {
        let g = GroupElement::identity(&d, 0)?;
        return Ok(Centralized { source: b.clone(), n, b_n: b.clone(), g, distance: Value::zero(), levels: None });
    }
    let eps = 0.5f64.powi(n as i32);
    let tower = rokhlin_tower(b, 2, eps, measures, None, depth)?;
    let lt = tower.level;
    let base = members(&tower.base, lt)?;
    let mut pairs: Vec<Vec<(usize, usize)>> = base.iter().enumerate().map(|(v, list)| list.iter().map(|&p| (p, tower.g.image(v, p))).collect()).collect();
    let h_lt = d.path_counts(lt)?;
    let used = |pairs: &Vec<Vec<(usize, usize)>>, v: usize, i: usize| pairs[v].iter().any(|&(a, c)| a == i || c == i);
    let mut free = (0..h_lt.len()).flat_map(|v| (0..h_lt[v] as usize).map(move |i| (v, i))).find(|&(v, i)| !used(&pairs, v, i));
    if free.is_none() {
        // The involution covers everything: give up its last pair.
        let v = (0..pairs.len()).rev().find(|&v| !pairs[v].is_empty()).expect("tower is non-empty");
        let (p, _) = pairs[v].pop().expect("non-empty");
        free = Some((v, p));
    }
    let (fv, fi) = free.expect("set above");
    let q = involution(&d, lt, &pairs)?;
    if q.is_identity() {
        return Err(Error::DepthExhausted { depth, reason: "tower too short to carry an involution".into() });
    }
    let center_level = n.max(lt + 1);
    let x = extend_path(&d, &FinitePath::from_index(&d, lt, fv, fi)?, center_level)?;
    let whole = ClopenSet::whole(&d);
    let c = center_involutions(&whole, &q, &x, center_level, center_level + 1, depth)?;
    let conj = conjugate_involutions(&c.t.compose(&q)?, &c.h_n)?;
    let b_n = c.h_n.support()?;
    let distance = set_distance(measures, &conj.apply_set(b)?, &b_n)?;
    Ok(Centralized { source: b.clone(), n, b_n, g: conj, distance, levels: Some((center_level, c.table.l)) })
}

/// Largest measure of `set` over the list, for reports.
pub fn heaviest(measures: &[InvariantMeasure], set: &ClopenSet) -> Result<Value> {
    max_measure(measures, set)
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceRow {
    pub n: usize,
    #[serde(serialize_with = "serialize_display")]
    pub distance: Value,
}
