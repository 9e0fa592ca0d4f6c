//! Finite truncations of the groupoid representation: traces are weight
//! sums over level-`n` paths and never materialize operators.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::clopen::{same_diagram, ClopenSet};
use crate::diagram::BratteliDiagram;
use crate::error::{Error, Result};
use crate::group::{alternating, GroupElement};
use crate::measure::InvariantMeasure;
use crate::scalar::{serialize_display, sum, Value};

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug)]
pub struct FiniteRepContext {
    diagram: Arc<BratteliDiagram>,
    level: usize,
    /// Weight `p_v` of each level-`n` path ending at `v`.
    weights: Vec<Value>,
    path_counts: Vec<u64>,
}

impl FiniteRepContext {
    pub fn new(mu: &InvariantMeasure, level: usize) -> Result<Self> {
        let diagram = mu.diagram().clone();
        let weights = mu.weights(level)?;
        let path_counts = diagram.path_counts(level)?;
        Ok(Self { diagram, level, weights, path_counts })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn diagram(&self) -> &Arc<BratteliDiagram> {
        &self.diagram
    }

    pub fn weights(&self) -> &[Value] {
        &self.weights
    }

    /// `Σ_paths p_{r(path)}`.
    pub fn total_weight(&self) -> Value {
        sum(&self.weights.iter().zip(&self.path_counts).map(|(w, &h)| w.scale(h)).collect::<Vec<_>>())
    }

    fn weight_of(&self, counts: &[u64]) -> Value {
        sum(&self.weights.iter().zip(counts).filter(|(_, &c)| c > 0).map(|(w, &c)| w.scale(c)).collect::<Vec<_>>())
    }
}

/// Weight of the level-`n` paths fixed by `g`.
pub fn diag_trace(ctx: &FiniteRepContext, g: &GroupElement) -> Result<Value> {
    if !same_diagram(&ctx.diagram, g.diagram()) {
        return Err(Error::DiagramMismatch);
    }
    if g.level() > ctx.level {
        return Err(Error::LevelOutOfRange { level: g.level(), depth: ctx.level });
    }
    let g = g.embed(ctx.level)?;
    let fixed: Vec<u64> = g.perms().iter().map(|p| p.iter().enumerate().filter(|(i, &x)| *i == x).count() as u64).collect();
    Ok(ctx.weight_of(&fixed))
}

/// Trace on the tensor product of the contexts, one factor per context.
pub fn product_trace(ctxs: &[FiniteRepContext], g: &GroupElement) -> Result<Value> {
    if let Some(first) = ctxs.first() {
        if ctxs.iter().any(|c| c.level != first.level || !same_diagram(&c.diagram, &first.diagram)) {
            return Err(Error::DiagramMismatch);
        }
    }
    let mut acc = Value::one();
    for c in ctxs {
        acc = acc.mul(&diag_trace(c, g)?);
    }
    Ok(acc)
}

/// Number of orbits of `Alt(k)` on `k` points.
pub fn orbit_count(k: u64) -> u64 {
    match k {
        0 => 0,
        1 => 1,
        2 => 2,
        _ => 1,
    }
}

fn members_at(ctx: &FiniteRepContext, a: &ClopenSet) -> Result<Vec<u64>> {
    if !same_diagram(&ctx.diagram, a.diagram()) {
        return Err(Error::DiagramMismatch);
    }
    if a.level() > ctx.level {
        return Err(Error::LevelOutOfRange { level: a.level(), depth: ctx.level });
    }
    a.counts_at(ctx.level)
}

/// Trace of the average of `π(h)` over `∏_v Alt(K_{A,v})`, by counting
/// orbits.
pub fn projector_trace(ctx: &FiniteRepContext, a: &ClopenSet) -> Result<Value> {
    let k = members_at(ctx, a)?;
    let outside: Vec<u64> = ctx.path_counts.iter().zip(&k).map(|(h, k)| h - k).collect();
    let orbits: Vec<u64> = k.iter().map(|&x| orbit_count(x)).collect();
    Ok(ctx.weight_of(&outside).add(&ctx.weight_of(&orbits)))
}

/// The same average by enumerating the group.
pub fn projector_trace_bruteforce(ctx: &FiniteRepContext, a: &ClopenSet, budget: u64) -> Result<Value> {
    let k = members_at(ctx, a)?;
    let mut size: u64 = 1;
    for &kv in &k {
        let alt = (3..=kv).try_fold(1u64, |acc, j| acc.checked_mul(j)).unwrap_or(u64::MAX);
        size = size.saturating_mul(alt.max(1));
        if size > budget {
            return Err(Error::BudgetExceeded(format!("alternating product group exceeds {budget} elements")));
        }
    }
    // Fixed-point counts of each alternating permutation, per vertex.
    let fixed: Vec<Vec<u64>> = k
        .iter()
        .map(|&kv| alternating(kv as usize).iter().map(|p| p.iter().enumerate().filter(|(i, &x)| *i == x).count() as u64).collect())
        .collect();
    let outside: Vec<u64> = ctx.path_counts.iter().zip(&k).map(|(h, k)| h - k).collect();
    let base = ctx.weight_of(&outside);
    let mut total = Value::zero();
    let mut idx = vec![0usize; k.len()];
    'outer: loop {
        let counts: Vec<u64> = idx.iter().zip(&fixed).map(|(&i, f)| f[i]).collect();
        total = total.add(&base.add(&ctx.weight_of(&counts)));
        for v in 0..idx.len() {
            idx[v] += 1;
            if idx[v] < fixed[v].len() {
                continue 'outer;
            }
            idx[v] = 0;
        }
        break;
    }
    total.div(&Value::int(size as i64))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub level: usize,
    #[serde(serialize_with = "serialize_display")]
    pub trace: Value,
    #[serde(serialize_with = "serialize_display")]
    pub gap: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceTable {
    #[serde(serialize_with = "serialize_display")]
    pub character: Value,
    pub rows: Vec<TraceRow>,
}

impl TraceTable {
    /// Gap never increases from one row to the next.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].gap.certainly_le(&w[0].gap))
    }
}

impl fmt::Display for TraceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "level\ttrace\tgap")?;
        for r in &self.rows {
            writeln!(f, "{}\t{}\t{}", r.level, r.trace, r.gap)?;
        }
        Ok(())
    }
}

/// Projector traces of `supp(g)` at levels `from..=to` against
/// `χ(g) = μ(Fix(g))`.
pub fn trace_theorem_check(mu: &InvariantMeasure, g: &GroupElement, from: usize, to: usize) -> Result<TraceTable> {
    if from > to {
        return Err(Error::Precondition("empty level range".into()));
    }
    let support = g.support()?;
    let character = mu.measure_of(&g.fix_set()?)?;
    let rows = (from.max(support.level())..=to)
        .map(|n| {
            let trace = projector_trace(&FiniteRepContext::new(mu, n)?, &support)?;
            let gap = trace.sub(&character).abs();
            Ok(TraceRow { level: n, trace, gap })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceTable { character, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn odo() -> (Arc<BratteliDiagram>, InvariantMeasure) {
        let d = Arc::new(BratteliDiagram::odometer(2));
        let mu = InvariantMeasure::stationary_ergodic(&d).unwrap();
        (d, mu)
    }

    #[test]
    fn diagonal_traces() {
        let (d, mu) = odo();
        let ctx = FiniteRepContext::new(&mu, 4).unwrap();
        assert_eq!(ctx.total_weight(), Value::one());
        assert_eq!(diag_trace(&ctx, &GroupElement::identity(&d, 0).unwrap()).unwrap(), Value::one());
        let c = GroupElement::from_cycles(&d, 2, 0, &[vec![0, 1, 2]]).unwrap();
        assert_eq!(diag_trace(&ctx, &c).unwrap(), Value::ratio(1, 4));
        let t = GroupElement::transposition(&d, 1, 0, 0, 1).unwrap();
        assert_eq!(diag_trace(&ctx, &t).unwrap(), Value::zero());
        assert_eq!(product_trace(&[ctx.clone(), ctx.clone()], &c).unwrap(), Value::ratio(1, 16));
        assert_eq!(product_trace(&[], &c).unwrap(), Value::one());
        let deep = GroupElement::identity(&d, 5).unwrap();
        assert!(diag_trace(&ctx, &deep).is_err());
    }

    #[test]
    fn trace_matches_measure_and_is_class_function() {
        let (d, mu) = odo();
        let ctx = FiniteRepContext::new(&mu, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = GroupElement::random(&d, 3, &mut rng).unwrap();
            let q = GroupElement::random(&d, 4, &mut rng).unwrap();
            let t = diag_trace(&ctx, &g).unwrap();
            assert_eq!(t, mu.measure_of(&g.fix_set().unwrap()).unwrap());
            assert_eq!(t, diag_trace(&ctx, &q.conjugate(&g).unwrap()).unwrap());
        }
    }

    #[test]
    fn projector_examples() {
        let (d, mu) = odo();
        let a = ClopenSet::from_indices(&d, 2, &[(0, 0), (0, 1)]).unwrap();
        let at = |n| projector_trace(&FiniteRepContext::new(&mu, n).unwrap(), &a).unwrap();
        assert_eq!(at(3), Value::ratio(5, 8));
        assert_eq!(at(2), Value::one());
        assert_eq!(at(6), Value::ratio(33, 64));
        for n in 2..=4 {
            let ctx = FiniteRepContext::new(&mu, n).unwrap();
            assert_eq!(projector_trace_bruteforce(&ctx, &a, DEFAULT_BUDGET).unwrap(), at(n));
        }
        let ctx = FiniteRepContext::new(&mu, 5).unwrap();
        assert!(matches!(projector_trace_bruteforce(&ctx, &a, DEFAULT_BUDGET), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn bruteforce_small_alternating_groups() {
        let (d, mu) = odo();
        let ctx = FiniteRepContext::new(&mu, 2).unwrap();
        for k in 1..=4 {
            let idx: Vec<(usize, usize)> = (0..k).map(|i| (0, i)).collect();
            let a = ClopenSet::from_indices(&d, 2, &idx).unwrap();
            assert_eq!(projector_trace_bruteforce(&ctx, &a, DEFAULT_BUDGET).unwrap(), projector_trace(&ctx, &a).unwrap());
        }
    }

    #[test]
    fn trace_tables() {
        let (d, mu) = odo();
        let t = GroupElement::transposition(&d, 1, 0, 0, 1).unwrap();
        // At level 1 the support holds only two paths and Alt(2) is trivial.
        let table = trace_theorem_check(&mu, &t, 2, 8).unwrap();
        for r in &table.rows {
            assert_eq!(r.gap, Value::pow_ratio(1, 2, r.level as i32));
        }
        assert!(table.is_monotone());
        let c = GroupElement::from_cycles(&d, 2, 0, &[vec![0, 1, 2]]).unwrap();
        let table = trace_theorem_check(&mu, &c, 3, 8).unwrap();
        assert_eq!(table.character, Value::ratio(1, 4));
        for r in &table.rows {
            assert_eq!(r.trace, Value::ratio(1, 4).add(&Value::pow_ratio(1, 2, r.level as i32)));
        }
        let e = GroupElement::identity(&d, 0).unwrap();
        assert!(trace_theorem_check(&mu, &e, 0, 4).unwrap().rows.iter().all(|r| r.trace == Value::one()));
    }
}
