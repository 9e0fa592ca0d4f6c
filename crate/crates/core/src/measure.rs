//! Invariant probability measures on the path space.
//!
//! A measure is described by its per-level weight vectors `p^{(n)}`: the
//! measure of any single level-`n` cylinder ending at `v` is `p_v^{(n)}`.
//! The vectors satisfy `p_v^{(n)} = Σ_w e(v,w) p_w^{(n+1)}` and
//! `Σ_v h_v^{(n)} p_v^{(n)} = 1`.

use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::clopen::{same_diagram, ClopenSet};
use crate::diagram::{is_primitive, BratteliDiagram, IncidenceMatrix};
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::scalar::{sum, Value};

/// Tolerance applied when validating user-supplied float weights.
pub const FLOAT_LOAD_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        })
    }
}

#[derive(Clone, Debug)]
enum Source {
    /// Weights for levels `0..=levels.len()-1`.
    Explicit(Vec<Vec<Value>>),
    /// Weights for levels `0..=start` plus a geometric tail
    /// `p^{(n)} = p^{(start)} * ratio^(n-start)`.
    Stationary { prefix: Vec<Vec<Value>>, start: usize, ratio: Value, root: Value },
}

pub struct InvariantMeasure {
    diagram: Arc<BratteliDiagram>,
    mode: Mode,
    source: Source,
    cache: RwLock<Vec<Vec<Value>>>,
}

impl Clone for InvariantMeasure {
    fn clone(&self) -> Self {
        InvariantMeasure {
            diagram: self.diagram.clone(),
            mode: self.mode,
            source: self.source.clone(),
            cache: RwLock::new(self.cache.read().expect("lock").clone()),
        }
    }
}

impl fmt::Debug for InvariantMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InvariantMeasure").field("mode", &self.mode).field("source", &self.source).finish()
    }
}

/// Perron root and positive eigenvector of `Mᵀ` for a primitive matrix,
/// the eigenvector normalized to sum 1.
#[derive(Clone, Debug)]
pub struct PerronData {
    pub root: Value,
    pub vector: Vec<Value>,
    pub mode: Mode,
}

impl InvariantMeasure {
    /// The unique invariant measure of a diagram with a primitive stationary
    /// tail.
    pub fn stationary_ergodic(diagram: &Arc<BratteliDiagram>) -> Result<Self> {
        let tail = diagram.tail().ok_or(Error::NoStationaryTail)?;
        if !is_primitive(&tail.matrix) {
            return Err(Error::NotPrimitive);
        }
        let perron = perron(&tail.matrix)?;
        let start = tail.from_level;
        let mut prefix = vec![Vec::new(); start + 1];
        prefix[start] = perron.vector.clone();
        for n in (0..start).rev() {
            let inc = diagram.incidence(n + 1)?;
            prefix[n] = pull_back(inc, &prefix[n + 1]);
        }
        let root_weight = prefix[0][0].clone();
        for level in &mut prefix {
            for w in level.iter_mut() {
                *w = w.div(&root_weight)?;
            }
        }
        let ratio = Value::one().div(&perron.root)?;
        Ok(InvariantMeasure {
            diagram: diagram.clone(),
            mode: perron.mode,
            source: Source::Stationary { prefix, start, ratio, root: perron.root },
            cache: RwLock::new(Vec::new()),
        })
    }

    /// A measure given by explicit weight vectors for levels `0..levels.len()`,
    /// validated against the recursion, normalization and positivity.
    pub fn from_levels(diagram: &Arc<BratteliDiagram>, levels: Vec<Vec<Value>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidMeasure("no levels".into()));
        }
        let mode = if levels.iter().flatten().all(Value::is_exact) { Mode::Exact } else { Mode::Float };
        let tol = if mode == Mode::Exact { 0.0 } else { FLOAT_LOAD_TOL };
        for (n, w) in levels.iter().enumerate() {
            let k = diagram.num_vertices(n)?;
            if w.len() != k {
                return Err(Error::InvalidMeasure(format!("level {n}: expected {k} weights, got {}", w.len())));
            }
            if let Some(v) = w.iter().position(|x| x.to_f64() <= 0.0) {
                return Err(Error::InvalidMeasure(format!("level {n} vertex {v}: weight must be positive")));
            }
        }
        let m = InvariantMeasure {
            diagram: diagram.clone(),
            mode,
            source: Source::Explicit(levels.clone()),
            cache: RwLock::new(Vec::new()),
        };
        for n in 0..levels.len() {
            let total = m.normalization(n)?;
            if !total.close_to(&Value::one(), tol) {
                return Err(Error::InvalidMeasure(format!("level {n}: total mass {total} is not 1")));
            }
            if n + 1 < levels.len() {
                let dev = m.recursion_defect(n)?;
                if !dev.close_to(&Value::zero(), tol) {
                    return Err(Error::InvalidMeasure(format!("levels {n}/{}: recursion defect {dev}", n + 1)));
                }
            }
        }
        Ok(m)
    }

    pub fn diagram(&self) -> &Arc<BratteliDiagram> {
        &self.diagram
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Last level with known weights, `None` if unbounded.
    pub fn depth(&self) -> Option<usize> {
        match &self.source {
            Source::Explicit(l) => Some(l.len() - 1),
            Source::Stationary { .. } => self.diagram.depth(),
        }
    }

    pub fn perron_root(&self) -> Option<&Value> {
        match &self.source {
            Source::Stationary { root, .. } => Some(root),
            Source::Explicit(_) => None,
        }
    }

    /// Weight vector `p^{(n)}`.
    pub fn weights(&self, n: usize) -> Result<Vec<Value>> {
        if let Some(w) = self.cache.read().expect("lock").get(n) {
            return Ok(w.clone());
        }
        self.diagram.check_level(n)?;
        let mut cache = self.cache.write().expect("lock");
        while cache.len() <= n {
            let level = cache.len();
            cache.push(self.compute(level)?);
        }
        Ok(cache[n].clone())
    }

    fn compute(&self, n: usize) -> Result<Vec<Value>> {
        match &self.source {
            Source::Explicit(levels) => levels.get(n).cloned().ok_or(Error::LevelOutOfRange { level: n, depth: levels.len() - 1 }),
            Source::Stationary { prefix, start, ratio, .. } => {
                if n <= *start {
                    return Ok(prefix[n].clone());
                }
                let k = (n - start) as u32;
                let factor = match ratio {
                    Value::Exact(r) => Value::Exact(r.pow(k as i32)),
                    Value::Approx { .. } => {
                        let v = ratio.to_f64().powi(k as i32);
                        let rel = ratio.err() / ratio.to_f64().abs();
                        Value::approx(v, v * (k as f64 * rel + (k as f64 + 1.0) * f64::EPSILON))
                    }
                };
                Ok(prefix[*start].iter().map(|x| x.mul(&factor)).collect())
            }
        }
    }

    /// `Σ_v h_v^{(n)} p_v^{(n)}`.
    pub fn normalization(&self, n: usize) -> Result<Value> {
        let h = self.diagram.path_counts(n)?;
        let w = self.weights(n)?;
        Ok(sum(&h.iter().zip(&w).map(|(&c, x)| x.scale(c)).collect::<Vec<_>>()))
    }

    /// Largest `|p_v^{(n)} - Σ_w e(v,w) p_w^{(n+1)}|` over level-`n` vertices.
    pub fn recursion_defect(&self, n: usize) -> Result<Value> {
        let lower = self.weights(n)?;
        let upper = self.weights(n + 1)?;
        let pulled = pull_back(self.diagram.incidence(n + 1)?, &upper);
        Ok(lower.iter().zip(&pulled).map(|(a, b)| a.sub(b).abs()).fold(Value::zero(), Value::max))
    }

    pub fn measure_of(&self, set: &ClopenSet) -> Result<Value> {
        if !same_diagram(&self.diagram, set.diagram()) {
            return Err(Error::DiagramMismatch);
        }
        self.measure_at(set, set.level())
    }

    /// Evaluates `set` after raising it to `level`.
    pub fn measure_at(&self, set: &ClopenSet, level: usize) -> Result<Value> {
        let counts = set.counts_at(level)?;
        let w = self.weights(level)?;
        Ok(sum(&counts.iter().zip(&w).filter(|(&c, _)| c > 0).map(|(&c, x)| x.scale(c)).collect::<Vec<_>>()))
    }

    pub fn to_literal(&self, levels: usize) -> Result<MeasureLiteral> {
        let levels = (0..levels).map(|n| Ok(self.weights(n)?.iter().map(WeightLiteral::from_value).collect())).collect::<Result<Vec<_>>>()?;
        Ok(MeasureLiteral { mode: self.mode, levels })
    }

    pub fn from_literal(diagram: &Arc<BratteliDiagram>, lit: &MeasureLiteral) -> Result<Self> {
        let levels = lit
            .levels
            .iter()
            .map(|l| {
                l.iter()
                    .map(|w| {
                        let v = w.to_value()?;
                        Ok(match lit.mode {
                            Mode::Exact => v,
                            Mode::Float => Value::approx(v.to_f64(), v.to_f64().abs() * f64::EPSILON),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_levels(diagram, levels)
    }
}

/// `p^{(n)} = Mᵀ p^{(n+1)}` for the incidence matrix between `n` and `n+1`.
fn pull_back(inc: &IncidenceMatrix, upper: &[Value]) -> Vec<Value> {
    (0..inc.cols())
        .map(|v| {
            let terms: Vec<Value> =
                (0..inc.rows()).filter(|&w| inc.edges(v, w) > 0).map(|w| upper[w].scale(inc.edges(v, w))).collect();
            sum(&terms)
        })
        .collect()
}

/// Perron data for the transpose action `x ↦ Mᵀ x`. Exact when the Perron
/// root is an integer root of the characteristic polynomial; otherwise a
/// power iteration with Collatz–Wielandt bounds.
pub fn perron(m: &IncidenceMatrix) -> Result<PerronData> {
    if !is_primitive(m) {
        return Err(Error::NotPrimitive);
    }
    let (lambda, x, lo, hi) = power_iteration(m);
    let candidate = lambda.round();
    if candidate >= 1.0 && (candidate - lambda).abs() < 1e-6 {
        let r = BigRational::from_integer(BigInt::from(candidate as i64));
        if charpoly(m).iter().rev().fold(BigRational::zero(), |acc, c| acc * &r + c).is_zero() {
            if let Some(v) = positive_kernel_vector(m, &r) {
                return Ok(PerronData {
                    root: Value::Exact(r),
                    vector: v.into_iter().map(Value::Exact).collect(),
                    mode: Mode::Exact,
                });
            }
        }
    }
    let width = (hi - lo).max(0.0);
    let root_err = width + lambda * 4.0 * f64::EPSILON;
    // Eigenvector error: residual over spectral gap is not available, so use
    // the Collatz width relative to lambda as a first-order bound.
    let n = x.len() as f64;
    let vec_err = (width / lambda) * n + 8.0 * n * f64::EPSILON;
    Ok(PerronData {
        root: Value::approx(lambda, root_err),
        vector: x.iter().map(|&xi| Value::approx(xi, xi * vec_err + f64::EPSILON)).collect(),
        mode: Mode::Float,
    })
}

/// Power iteration on `Mᵀ`; returns `(lambda, x, collatz_lo, collatz_hi)`
/// with `x` summing to 1.
fn power_iteration(m: &IncidenceMatrix) -> (f64, Vec<f64>, f64, f64) {
    let n = m.rows();
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..n).map(|v| (0..n).map(|w| m.edges(v, w) as f64 * x[w]).sum()).collect()
    };
    let mut x = vec![1.0 / n as f64; n];
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..100_000 {
        let y = apply(&x);
        let ratios: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a / b).collect();
        lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        hi = ratios.iter().cloned().fold(0.0, f64::max);
        let s: f64 = y.iter().sum();
        // Averaging with the previous iterate damps periodic oscillation.
        let next: Vec<f64> = y.iter().zip(&x).map(|(a, b)| 0.5 * (a / s + b)).collect();
        let t: f64 = next.iter().sum();
        x = next.into_iter().map(|a| a / t).collect();
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let y = apply(&x);
    let ratios: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a / b).collect();
    lo = lo.min(ratios.iter().cloned().fold(f64::INFINITY, f64::min));
    hi = hi.max(ratios.iter().cloned().fold(0.0, f64::max));
    let lambda = y.iter().sum::<f64>() / x.iter().sum::<f64>();
    (lambda, x, lo, hi)
}

/// Characteristic polynomial coefficients `c_0..c_n` of `det(xI - M)` via
/// Faddeev–LeVerrier.
pub fn charpoly(m: &IncidenceMatrix) -> Vec<BigRational> {
    let n = m.rows();
    let a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| (0..n).map(|j| BigRational::from_integer(BigInt::from(m.get(i, j)))).collect())
        .collect();
    let mut coeffs = vec![BigRational::zero(); n + 1];
    coeffs[n] = BigRational::one();
    let mut mk: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); n]; n];
    for k in 1..=n {
        // M_k = A * M_{k-1} + c_{n-k+1} I
        let mut next = vec![vec![BigRational::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = BigRational::zero();
                for l in 0..n {
                    acc += &a[i][l] * &mk[l][j];
                }
                if i == j {
                    acc += &coeffs[n - k + 1];
                }
                next[i][j] = acc;
            }
        }
        mk = next;
        let mut tr = BigRational::zero();
        for i in 0..n {
            for l in 0..n {
                tr += &a[i][l] * &mk[l][i];
            }
        }
        coeffs[n - k] = -tr / BigRational::from_integer(BigInt::from(k as i64));
    }
    coeffs
}

/// Strictly positive vector spanning `ker(Mᵀ - r I)`, normalized to sum 1.
fn positive_kernel_vector(m: &IncidenceMatrix, r: &BigRational) -> Option<Vec<BigRational>> {
    let n = m.rows();
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|v| {
            (0..n)
                .map(|w| {
                    let mut x = BigRational::from_integer(BigInt::from(m.edges(v, w)));
                    if v == w {
                        x -= r;
                    }
                    x
                })
                .collect()
        })
        .collect();
    let kernel = crate::linalg::exact_kernel(&mut a);
    if kernel.len() != 1 {
        return None;
    }
    let mut v = kernel.into_iter().next()?;
    if v.iter().all(|x| !x.is_positive()) {
        v.iter_mut().for_each(|x| *x = -x.clone());
    }
    if !v.iter().all(|x| x.is_positive()) {
        return None;
    }
    let s: BigRational = v.iter().cloned().sum();
    Some(v.into_iter().map(|x| x / &s).collect())
}

pub fn check_measures(measures: &[InvariantMeasure]) -> Result<&Arc<BratteliDiagram>> {
    let first = measures.first().ok_or(Error::EmptyMeasureList)?;
    if measures.iter().any(|m| !same_diagram(m.diagram(), first.diagram())) {
        return Err(Error::DiagramMismatch);
    }
    Ok(first.diagram())
}

/// `d(A,B) = max_μ μ(A Δ B)` over the supplied measures.
pub fn set_distance(measures: &[InvariantMeasure], a: &ClopenSet, b: &ClopenSet) -> Result<Value> {
    check_measures(measures)?;
    let diff = a.symmetric_difference(b)?;
    max_measure(measures, &diff)
}

/// `D(g,h) = max_μ μ({x : gx ≠ hx})`.
pub fn group_metric(measures: &[InvariantMeasure], g: &GroupElement, h: &GroupElement) -> Result<Value> {
    check_measures(measures)?;
    let differ = h.inverse().compose(g)?.support()?;
    max_measure(measures, &differ)
}

pub fn max_measure(measures: &[InvariantMeasure], set: &ClopenSet) -> Result<Value> {
    check_measures(measures)?;
    let mut best: Option<Value> = None;
    for m in measures {
        let v = m.measure_of(set)?;
        best = Some(match best {
            None => v,
            Some(b) => Value::max(b, v),
        });
    }
    Ok(best.expect("non-empty"))
}

/// `(μ_1(A), ..., μ_k(A))`.
pub fn evaluation_profile(measures: &[InvariantMeasure], set: &ClopenSet) -> Result<Vec<Value>> {
    check_measures(measures)?;
    measures.iter().map(|m| m.measure_of(set)).collect()
}

/// Measure literal: `{"mode": "exact"|"float", "levels": [[w, ...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureLiteral {
    pub mode: Mode,
    pub levels: Vec<Vec<WeightLiteral>>,
}

/// A weight written as a JSON number or a string such as `"1/4"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightLiteral {
    Number(f64),
    Text(String),
}

impl WeightLiteral {
    pub fn to_value(&self) -> Result<Value> {
        match self {
            WeightLiteral::Number(x) => x.to_string().parse(),
            WeightLiteral::Text(s) => s.parse(),
        }
    }

    pub fn from_value(v: &Value) -> Self {
        match v {
            Value::Exact(_) => WeightLiteral::Text(v.to_string()),
            Value::Approx { value, .. } => WeightLiteral::Number(*value),
        }
    }
}
