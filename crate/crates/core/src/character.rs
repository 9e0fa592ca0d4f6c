//! Characters of the full group: the catalog of products of measures of
//! fixed-point sets, optionally twisted by a sign homomorphism, plus the
//! checks that can be run on them at finite levels.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::Serialize;

use crate::clopen::same_diagram;
use crate::diagram::BratteliDiagram;
use crate::error::{Error, Result};
use crate::group::{cycle_lengths, perm_is_odd, permutations, GroupElement};
use crate::linalg::{psd_check, psd_check_complex, PsdReport};
use crate::measure::InvariantMeasure;
use crate::scalar::{sum, Value};

pub const DEFAULT_TOL: f64 = 1e-9;
const SIGN_RANK_BUDGET: usize = 16;
const PROBE_BUDGET: usize = 7;
const POLY_BUDGET: usize = 9;
const DISTINCT_BUDGET: u64 = 20_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Integer(u32),
    /// Only meaningful for probes; never part of the catalog.
    Real(f64),
}

impl Exponent {
    fn apply(&self, x: &Value) -> Value {
        match *self {
            Exponent::Integer(a) => x.powi(a),
            Exponent::Real(a) => x.powf(a),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Integer(a) => write!(f, "{a}"),
            Exponent::Real(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Factor {
    pub measure: InvariantMeasure,
    pub exponent: Exponent,
}

pub type RhoCallback = Arc<dyn Fn(&GroupElement) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub enum Rho {
    Parity(SignHomomorphism),
    Callback(RhoCallback),
}

impl fmt::Debug for Rho {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rho::Parity(s) => f.debug_tuple("Parity").field(s).finish(),
            Rho::Callback(_) => f.write_str("Callback(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum CharacterSpec {
    /// The trivial character, constantly 1.
    Identity,
    /// `δ_{e,g}`.
    Regular,
    Product { factors: Vec<Factor>, rho: Option<Rho> },
}

impl CharacterSpec {
    pub fn product(factors: Vec<(InvariantMeasure, u32)>) -> Self {
        CharacterSpec::Product {
            factors: factors.into_iter().map(|(measure, a)| Factor { measure, exponent: Exponent::Integer(a) }).collect(),
            rho: None,
        }
    }

    pub fn power(measure: &InvariantMeasure, alpha: u32) -> Self {
        Self::product(vec![(measure.clone(), alpha)])
    }

    pub fn with_rho(self, r: Rho) -> Self {
        match self {
            CharacterSpec::Product { factors, .. } => CharacterSpec::Product { factors, rho: Some(r) },
            CharacterSpec::Identity => CharacterSpec::Product { factors: Vec::new(), rho: Some(r) },
            other => other,
        }
    }

    /// False when a real exponent appears.
    pub fn is_catalog(&self) -> bool {
        match self {
            CharacterSpec::Product { factors, .. } => factors.iter().all(|f| matches!(f.exponent, Exponent::Integer(_))),
            _ => true,
        }
    }

    fn has_callback(&self) -> bool {
        matches!(self, CharacterSpec::Product { rho: Some(Rho::Callback(_)), .. })
    }

    fn check_diagram(&self, g: &GroupElement) -> Result<()> {
        if let CharacterSpec::Product { factors, rho } = self {
            if factors.iter().any(|f| !same_diagram(f.measure.diagram(), g.diagram())) {
                return Err(Error::DiagramMismatch);
            }
            if let Some(Rho::Parity(s)) = rho {
                if !same_diagram(&s.diagram, g.diagram()) {
                    return Err(Error::DiagramMismatch);
                }
            }
        }
        Ok(())
    }

    fn modulus(&self, g: &GroupElement) -> Result<Value> {
        match self {
            CharacterSpec::Identity => Ok(Value::one()),
            CharacterSpec::Regular => Ok(if g.is_identity() { Value::one() } else { Value::zero() }),
            CharacterSpec::Product { factors, .. } => {
                let fix = g.fix_set()?;
                let mut acc = Value::one();
                for f in factors {
                    acc = acc.mul(&f.exponent.apply(&f.measure.measure_of(&fix)?));
                }
                Ok(acc)
            }
        }
    }

    /// Real value of the character. Fails with `ComplexValued` if a callback
    /// twist returns a non-real number.
    pub fn evaluate(&self, g: &GroupElement) -> Result<Value> {
        self.check_diagram(g)?;
        let m = self.modulus(g)?;
        match self {
            CharacterSpec::Product { rho: Some(Rho::Parity(s)), .. } => Ok(if s.value(g)? < 0 { m.neg() } else { m }),
            CharacterSpec::Product { rho: Some(Rho::Callback(f)), .. } => {
                let z = f(g);
                if z.im.abs() > 1e-12 {
                    return Err(Error::ComplexValued);
                }
                Ok(m.mul(&Value::approx(z.re, z.re.abs() * f64::EPSILON)))
            }
            _ => Ok(m),
        }
    }

    pub fn evaluate_complex(&self, g: &GroupElement) -> Result<Complex64> {
        self.check_diagram(g)?;
        let m = self.modulus(g)?.to_f64();
        Ok(match self {
            CharacterSpec::Product { rho: Some(Rho::Parity(s)), .. } => Complex64::new(m * f64::from(s.value(g)?), 0.0),
            CharacterSpec::Product { rho: Some(Rho::Callback(f)), .. } => f(g) * m,
            _ => Complex64::new(m, 0.0),
        })
    }
}

impl fmt::Display for CharacterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CharacterSpec::Identity => f.write_str("identity"),
            CharacterSpec::Regular => f.write_str("regular"),
            CharacterSpec::Product { factors, rho } => {
                let parts: Vec<String> = factors.iter().enumerate().map(|(i, x)| format!("mu{i}(Fix)^{}", x.exponent)).collect();
                let mut s = if parts.is_empty() { "1".to_string() } else { parts.join("*") };
                match rho {
                    Some(Rho::Parity(_)) => s.push_str("*rho"),
                    Some(Rho::Callback(_)) => s.push_str("*rho(callback)"),
                    None => {}
                }
                f.write_str(&s)
            }
        }
    }
}

fn check_elements(elements: &[GroupElement]) -> Result<()> {
    let first = elements.first().ok_or_else(|| Error::Precondition("empty element list".into()))?;
    if elements.iter().any(|g| !same_diagram(g.diagram(), first.diagram())) {
        return Err(Error::DiagramMismatch);
    }
    Ok(())
}

/// `[χ(g_i g_j⁻¹)]`.
pub fn gram_matrix(chi: &CharacterSpec, elements: &[GroupElement]) -> Result<Vec<Vec<Value>>> {
    check_elements(elements)?;
    let inverses: Vec<GroupElement> = elements.iter().map(GroupElement::inverse).collect();
    elements
        .iter()
        .map(|gi| inverses.iter().map(|hj| chi.evaluate(&gi.compose(hj)?)).collect())
        .collect()
}

pub fn gram_matrix_complex(chi: &CharacterSpec, elements: &[GroupElement]) -> Result<Vec<Vec<Complex64>>> {
    check_elements(elements)?;
    let inverses: Vec<GroupElement> = elements.iter().map(GroupElement::inverse).collect();
    elements
        .iter()
        .map(|gi| inverses.iter().map(|hj| chi.evaluate_complex(&gi.compose(hj)?)).collect())
        .collect()
}

/// Gram matrix followed by the PSD check, on the complex route when the
/// character may take non-real values.
pub fn gram_psd(chi: &CharacterSpec, elements: &[GroupElement], tol: f64) -> Result<PsdReport> {
    if chi.has_callback() {
        psd_check_complex(&gram_matrix_complex(chi, elements)?, tol)
    } else {
        psd_check(&gram_matrix(chi, elements)?, tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomFailure {
    pub sample: usize,
    pub axiom: &'static str,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub checked: usize,
    pub catalog: bool,
    pub failures: Vec<AxiomFailure>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

enum Eval {
    Real(Value),
    Complex(Complex64),
}

impl Eval {
    fn of(chi: &CharacterSpec, g: &GroupElement) -> Result<Eval> {
        if chi.has_callback() {
            chi.evaluate_complex(g).map(Eval::Complex)
        } else {
            chi.evaluate(g).map(Eval::Real)
        }
    }

    /// `|a - conj?(b)|` as a value; exact when both sides are.
    fn distance(a: &Eval, b: &Eval, conjugate: bool) -> Value {
        match (a, b) {
            (Eval::Real(x), Eval::Real(y)) => x.sub(y).abs(),
            (Eval::Complex(x), Eval::Complex(y)) => {
                let y = if conjugate { y.conj() } else { *y };
                Value::approx((x - y).norm(), 1e-15)
            }
            _ => unreachable!("evaluation route is fixed per character"),
        }
    }
}

/// Centrality `χ(gh) = χ(hg)`, `χ(g⁻¹) = conj χ(g)`, conjugation invariance
/// `χ(hgh⁻¹) = χ(g)` and `χ(e) = 1` on each sample pair.
pub fn axiom_check(chi: &CharacterSpec, samples: &[(GroupElement, GroupElement)], tol: f64) -> Result<AxiomReport> {
    let mut failures = Vec::new();
    let mut record = |sample: usize, axiom: &'static str, d: Value| {
        if !d.close_to(&Value::zero(), tol) {
            failures.push(AxiomFailure { sample, axiom, deviation: d.to_f64() });
        }
    };
    for (i, (g, h)) in samples.iter().enumerate() {
        let gh = Eval::of(chi, &g.compose(h)?)?;
        let hg = Eval::of(chi, &h.compose(g)?)?;
        record(i, "centrality", Eval::distance(&gh, &hg, false));
        let gi = Eval::of(chi, &g.inverse())?;
        let gv = Eval::of(chi, g)?;
        record(i, "inverse", Eval::distance(&gi, &gv, true));
        let conj = Eval::of(chi, &h.conjugate(g)?)?;
        record(i, "conjugation", Eval::distance(&conj, &gv, false));
        let e = GroupElement::identity(g.diagram(), g.level())?;
        let one = match Eval::of(chi, &e)? {
            Eval::Real(v) => v.sub(&Value::one()).abs(),
            Eval::Complex(z) => Value::approx((z - 1.0).norm(), 1e-15),
        };
        record(i, "normalization", one);
    }
    Ok(AxiomReport { checked: samples.len(), catalog: chi.is_catalog(), failures })
}

/// `Σ_{s ∈ Sym(n)} x^{l(s)}` by enumeration, and the rising factorial
/// `x(x+1)…(x+n-1)`.
pub fn cycle_count_polynomial(n: usize, x: &Value) -> Result<(Value, Value)> {
    if n == 0 {
        return Err(Error::Precondition("n must be positive".into()));
    }
    if n > POLY_BUDGET {
        return Err(Error::BudgetExceeded(format!("Sym({n}) enumeration exceeds n <= {POLY_BUDGET}")));
    }
    let mut by_cycles = vec![0u64; n + 1];
    for p in permutations(n) {
        by_cycles[cycle_lengths(&p).len()] += 1;
    }
    let enumerated = sum(&by_cycles.iter().enumerate().filter(|(_, &c)| c > 0).map(|(l, &c)| x.powi(l as u32).scale(c)).collect::<Vec<_>>());
    let mut rising = Value::one();
    for j in 0..n {
        rising = rising.mul(&x.add(&Value::int(j as i64)));
    }
    Ok((enumerated, rising))
}

/// Parity functionals `c^{(n)}` on consecutive levels satisfying
/// `c^{(n)}_v = Σ_w e(v,w) c^{(n+1)}_w mod 2`.
#[derive(Clone, Debug)]
pub struct SignHomomorphism {
    diagram: Arc<BratteliDiagram>,
    pub from_level: usize,
    pub functionals: Vec<Vec<bool>>,
}

impl SignHomomorphism {
    pub fn new(diagram: &Arc<BratteliDiagram>, from_level: usize, functionals: Vec<Vec<bool>>) -> Result<Self> {
        if functionals.is_empty() {
            return Err(Error::InconsistentSign("no levels given".into()));
        }
        for (i, c) in functionals.iter().enumerate() {
            if c.len() != diagram.num_vertices(from_level + i)? {
                return Err(Error::InconsistentSign(format!("level {} has the wrong width", from_level + i)));
            }
        }
        for i in 0..functionals.len() - 1 {
            let n = from_level + i;
            if pull_parity(diagram, n + 1, &functionals[i + 1])? != functionals[i] {
                return Err(Error::InconsistentSign(format!("rule fails between levels {n} and {}", n + 1)));
            }
        }
        Ok(Self { diagram: diagram.clone(), from_level, functionals })
    }

    pub fn top_level(&self) -> usize {
        self.from_level + self.functionals.len() - 1
    }

    pub fn is_trivial(&self) -> bool {
        self.functionals.iter().flatten().all(|&b| !b)
    }

    /// `±1`, evaluated at the lowest level covered by both `g` and the
    /// functional.
    pub fn value(&self, g: &GroupElement) -> Result<i8> {
        self.value_at(g, g.level().max(self.from_level))
    }

    pub fn value_at(&self, g: &GroupElement, level: usize) -> Result<i8> {
        if level < self.from_level || level > self.top_level() || level < g.level() {
            return Err(Error::LevelOutOfRange { level, depth: self.top_level() });
        }
        let s = g.sign_vector().propagate(&self.diagram, level)?;
        let c = &self.functionals[level - self.from_level];
        let odd = s.odd.iter().zip(c).filter(|(&a, &b)| a && b).count() % 2 == 1;
        Ok(if odd { -1 } else { 1 })
    }
}

impl fmt::Display for SignHomomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .functionals
            .iter()
            .map(|c| c.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .collect();
        write!(f, "from {}: {}", self.from_level, parts.join(" "))
    }
}

/// `c^{(n-1)}` from `c^{(n)}`.
fn pull_parity(d: &BratteliDiagram, n: usize, upper: &[bool]) -> Result<Vec<bool>> {
    let inc = d.incidence(n)?;
    Ok((0..inc.cols())
        .map(|v| (0..inc.rows()).filter(|&w| upper[w] && inc.edges(v, w) % 2 == 1).count() % 2 == 1)
        .collect())
}

/// Parity functionals at `depth` that can be continued to every further
/// level examined, extended back to level 1. The continuation is checked
/// for `|V_depth| + 1` levels beyond `depth` (or up to the end of a finite
/// diagram); over GF(2) the reachable subspace stabilizes within that many
/// steps on a stationary tail.
pub fn enumerate_sign_homomorphisms(diagram: &Arc<BratteliDiagram>, depth: usize) -> Result<Vec<SignHomomorphism>> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    diagram.check_level(depth)?;
    let width = diagram.num_vertices(depth)?;
    let mut top = depth + width + 1;
    if let Some(d) = diagram.depth() {
        top = top.min(d);
    }
    // Images of unit vectors at `top` pulled back to `depth` span the set of
    // continuable functionals.
    let mut span: Vec<Vec<bool>> = (0..diagram.num_vertices(top)?)
        .map(|i| (0..diagram.num_vertices(top).unwrap_or(0)).map(|j| i == j).collect())
        .collect();
    for n in (depth + 1..=top).rev() {
        span = span.iter().map(|c| pull_parity(diagram, n, c)).collect::<Result<_>>()?;
    }
    let basis = gf2_basis(span);
    if basis.len() > SIGN_RANK_BUDGET {
        return Err(Error::BudgetExceeded(format!("{} independent parity functionals", basis.len())));
    }
    let mut out = Vec::with_capacity(1 << basis.len());
    for mask in 0u32..(1 << basis.len()) {
        let mut c = vec![false; width];
        for (b, v) in basis.iter().enumerate() {
            if mask >> b & 1 == 1 {
                for (x, &y) in c.iter_mut().zip(v) {
                    *x ^= y;
                }
            }
        }
        let mut levels = vec![c];
        for n in (2..=depth).rev() {
            let lower = pull_parity(diagram, n, levels.last().expect("non-empty"))?;
            levels.push(lower);
        }
        levels.reverse();
        out.push(SignHomomorphism { diagram: diagram.clone(), from_level: 1, functionals: levels });
    }
    Ok(out)
}

fn gf2_basis(mut rows: Vec<Vec<bool>>) -> Vec<Vec<bool>> {
    let width = rows.first().map_or(0, Vec::len);
    let mut basis = Vec::new();
    for col in 0..width {
        let Some(p) = rows.iter().position(|r| r[col]) else { continue };
        let pivot = rows.swap_remove(p);
        for r in rows.iter_mut() {
            if r[col] {
                for (x, &y) in r.iter_mut().zip(&pivot) {
                    *x ^= y;
                }
            }
        }
        basis.push(pivot);
    }
    basis
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaProbe {
    pub alpha: f64,
    pub k: u64,
    pub n: usize,
    pub level: usize,
    #[serde(serialize_with = "crate::scalar::serialize_display")]
    pub signed_sum: Value,
    #[serde(serialize_with = "crate::scalar::serialize_display")]
    pub closed_form: Value,
    #[serde(serialize_with = "crate::scalar::serialize_display")]
    pub rising_factorial: Value,
    #[serde(serialize_with = "crate::scalar::serialize_display")]
    pub r_cov: Value,
    /// `|signed_sum - closed_form| <= 1e-9`.
    pub consistent: bool,
    /// The signed sum is certainly negative, so the Gram matrix of
    /// `μ(Fix)^α` over the coordinate-permuting group is not PSD.
    pub negative: bool,
}

/// Castle of `k^n` equal-measure pieces at `level`: every vertex contributes
/// `⌊h_v / k^n⌋` consecutive blocks of `k^n` paths, the position inside a
/// block read as `n` base-`k` digits. Returns the number of blocks per vertex.
pub fn castle_blocks(diagram: &BratteliDiagram, k: u64, n: usize, level: usize) -> Result<Vec<u64>> {
    let cells = k.checked_pow(n as u32).ok_or(Error::Overflow(level))?;
    let blocks: Vec<u64> = diagram.path_counts(level)?.iter().map(|h| h / cells).collect();
    if blocks.iter().all(|&b| b == 0) {
        return Err(Error::NoCastle { cells: cells as usize, level });
    }
    Ok(blocks)
}

/// The element of the level group that permutes the digit coordinates of
/// every castle block by `s` (coordinate `i` moves to `s(i)`).
pub fn coordinate_permutation(diagram: &Arc<BratteliDiagram>, k: u64, s: &[usize], level: usize) -> Result<GroupElement> {
    let n = s.len();
    let blocks = castle_blocks(diagram, k, n, level)?;
    let cells = k.pow(n as u32) as usize;
    let k = k as usize;
    let h = diagram.path_counts(level)?;
    let perms = h
        .iter()
        .zip(&blocks)
        .map(|(&hv, &b)| {
            let mut p: Vec<usize> = (0..hv as usize).collect();
            for blk in 0..b as usize {
                let base = blk * cells;
                for x in 0..cells {
                    let mut y = 0;
                    let mut rest = x;
                    for &target in s.iter() {
                        y += (rest % k) * k.pow(target as u32);
                        rest /= k;
                    }
                    p[base + x] = base + y;
                }
            }
            p
        })
        .collect();
    GroupElement::from_perms(diagram, level, perms)
}

/// Signed sum `Σ_{s ∈ Sym(n)} sign(s) μ(Fix(s))^α` over the
/// coordinate-permuting copy of `Sym(n)`, against its closed form.
pub fn alpha_probe(diagram: &Arc<BratteliDiagram>, mu: &InvariantMeasure, alpha: f64, k: u64, n: usize, level: usize) -> Result<AlphaProbe> {
    if !same_diagram(diagram, mu.diagram()) {
        return Err(Error::DiagramMismatch);
    }
    if !(alpha >= 0.0 && alpha.is_finite()) || k < 2 || n == 0 {
        return Err(Error::Precondition("need alpha >= 0, k >= 2, n >= 1".into()));
    }
    if n > PROBE_BUDGET {
        return Err(Error::BudgetExceeded(format!("Sym({n}) enumeration exceeds n <= {PROBE_BUDGET}")));
    }
    let blocks = castle_blocks(diagram, k, n, level)?;
    let cells = k.pow(n as u32);
    let weights = mu.weights(level)?;
    let piece = sum(&blocks.iter().zip(&weights).map(|(&b, w)| w.scale(b)).collect::<Vec<_>>());
    let r_cov = Value::one().sub(&piece.scale(cells));

    let power = |x: &Value| x.powf(alpha);
    let mut signed = Vec::new();
    let mut closed = Vec::new();
    for s in permutations(n) {
        let g = coordinate_permutation(diagram, k, &s, level)?;
        let direct = power(&mu.measure_of(&g.fix_set()?)?);
        let l = cycle_lengths(&s).len();
        let share = Value::Exact(BigRational::new(BigInt::from(1), BigInt::from(k).pow((n - l) as u32)));
        let formula = power(&share.mul(&Value::one().sub(&r_cov)).add(&r_cov));
        let odd = perm_is_odd(&s);
        signed.push(if odd { direct.neg() } else { direct });
        closed.push(if odd { formula.neg() } else { formula });
    }
    let signed_sum = sum(&signed);
    let closed_form = sum(&closed);

    let rising_factorial = if alpha.fract() == 0.0 && alpha <= 64.0 {
        let ka = BigInt::from(k).pow(alpha as u32);
        let mut num = BigInt::from(1);
        for j in 0..n {
            num *= &ka - BigInt::from(j);
        }
        Value::Exact(BigRational::new(num, ka.pow(n as u32)))
    } else {
        let ka = (k as f64).powf(alpha);
        let v = (0..n).map(|j| ka - j as f64).product::<f64>() / ka.powi(n as i32);
        Value::approx(v, v.abs() * 16.0 * n as f64 * f64::EPSILON + f64::MIN_POSITIVE)
    };
    let consistent = signed_sum.close_to(&closed_form, 1e-9);
    let negative = signed_sum.certainly_lt(&Value::zero());
    Ok(AlphaProbe { alpha, k, n, level, signed_sum, closed_form, rising_factorial, r_cov, consistent, negative })
}

#[derive(Clone, Debug)]
pub struct DistinctWitness {
    pub element: GroupElement,
    pub value_a: Value,
    pub value_b: Value,
}

/// Derangement of `m` points with even parity whenever `m != 2`.
fn even_derangement(points: &[usize]) -> Vec<Vec<usize>> {
    let m = points.len();
    match m {
        0 => Vec::new(),
        1 => unreachable!("a single point cannot be moved"),
        2 => vec![points.to_vec()],
        4 => vec![vec![points[0], points[1]], vec![points[2], points[3]]],
        _ if m.is_multiple_of(2) => vec![points[..3].to_vec(), points[3..].to_vec()],
        _ => vec![points.to_vec()],
    }
}

/// Searches, level by level, for `g` with `|χA(g) - χB(g)| > tol`. Candidate
/// fixed sets take the first `j_v` paths at each vertex; the remaining paths
/// are deranged. Candidates are visited in order of increasing fixed mass.
pub fn distinctness_probe(a: &CharacterSpec, b: &CharacterSpec, diagram: &Arc<BratteliDiagram>, depth: usize, tol: f64) -> Result<DistinctWitness> {
    for level in 1..=depth {
        let h = diagram.path_counts(level)?;
        let total: u64 = h.iter().map(|&x| x + 1).try_fold(1u64, |acc, x| acc.checked_mul(x)).unwrap_or(u64::MAX);
        if total > DISTINCT_BUDGET {
            break;
        }
        let mut candidates: Vec<Vec<u64>> = vec![Vec::new()];
        for &hv in &h {
            candidates = candidates
                .into_iter()
                .flat_map(|c| (0..=hv).filter(move |&j| hv - j != 1).map(move |j| [c.clone(), vec![j]].concat()))
                .collect();
        }
        candidates.sort_by_key(|c| (c.iter().sum::<u64>(), c.clone()));
        for fixed in candidates {
            let mut g = GroupElement::identity(diagram, level)?;
            for (v, (&j, &hv)) in fixed.iter().zip(&h).enumerate() {
                let moved: Vec<usize> = (j as usize..hv as usize).collect();
                let c = GroupElement::from_cycles(diagram, level, v, &even_derangement(&moved))?;
                g = g.compose(&c)?;
            }
            let value_a = a.evaluate(&g)?;
            let value_b = b.evaluate(&g)?;
            if value_a.sub(&value_b).abs().lower() > tol {
                return Ok(DistinctWitness { element: g, value_a, value_b });
            }
        }
    }
    Err(Error::NotFound(depth))
}
