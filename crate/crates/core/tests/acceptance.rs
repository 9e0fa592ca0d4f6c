//! Acceptance suite: one PASS/FAIL line per criterion. Every value is
//! checked against an oracle written here, independent of the library code
//! path under test.

#![allow(clippy::needless_range_loop)]

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bratteli::character::{
    alpha_probe, axiom_check, cycle_count_polynomial, distinctness_probe, enumerate_sign_homomorphisms, gram_matrix, CharacterSpec, Rho,
};
use bratteli::construct::{center_involutions, compare_sets, local_generators, move_set_close, rokhlin_tower, split_subset};
use bratteli::linalg::{psd_check, Verdict};
use bratteli::representation::{diag_trace, projector_trace, trace_theorem_check, FiniteRepContext};
use bratteli::{BratteliDiagram, ClopenSet, FinitePath, GroupElement, InvariantMeasure, LevelSet, Value};

const PSD_TOL: f64 = 1e-9;
const ALPHA_TOL: f64 = 1e-9;
const ALPHA_HALF: f64 = -0.1213203;
const FIB_ENTRY_TOL: f64 = 1e-10;
const PERRON_TOL: f64 = 1e-12;
const GOLDEN: f64 = 1.618_033_988_749_895;
const DISTINCT_GAP: (i64, i64) = (3, 16);

type Criterion = (&'static str, fn() -> Outcome, Duration);

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn odometer(k: u64) -> (Arc<BratteliDiagram>, InvariantMeasure) {
    let d = Arc::new(BratteliDiagram::odometer(k));
    let mu = InvariantMeasure::stationary_ergodic(&d).unwrap();
    (d, mu)
}

fn fibonacci() -> (Arc<BratteliDiagram>, InvariantMeasure) {
    let d = Arc::new(BratteliDiagram::fibonacci());
    let mu = InvariantMeasure::stationary_ergodic(&d).unwrap();
    (d, mu)
}

fn q(n: i64, d: i64) -> Value {
    Value::ratio(n, d)
}

fn pow2(n: usize) -> Value {
    Value::Exact(BigRational::new(BigInt::from(1), BigInt::from(1u64) << n))
}

fn fixed_points(p: &[usize]) -> usize {
    p.iter().enumerate().filter(|(i, &x)| *i == x).count()
}

fn all_perms(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in all_perms(n - 1) {
        for pos in 0..=p.len() {
            let mut x = p.clone();
            x.insert(pos, n - 1);
            out.push(x);
        }
    }
    out
}

fn cycle_number(p: &[usize]) -> usize {
    let mut seen = vec![false; p.len()];
    let mut c = 0;
    for i in 0..p.len() {
        if !seen[i] {
            c += 1;
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                j = p[j];
            }
        }
    }
    c
}

fn is_odd(p: &[usize]) -> bool {
    (p.len() - cycle_number(p)) % 2 == 1
}

/// `μ(Fix(g))` from the permutations and the level weights.
fn fix_measure(mu: &InvariantMeasure, g: &GroupElement) -> Value {
    let w = mu.weights(g.level()).unwrap();
    let mut total = Value::zero();
    for (v, p) in g.perms().iter().enumerate() {
        total = total.add(&w[v].scale(fixed_points(p) as u64));
    }
    total
}

/// Measure of a level set from its member flags.
fn level_set_measure(mu: &InvariantMeasure, s: &LevelSet) -> Value {
    let w = mu.weights(s.level).unwrap();
    let mut total = Value::zero();
    for (v, m) in s.members.iter().enumerate() {
        total = total.add(&w[v].scale(m.iter().filter(|&&b| b).count() as u64));
    }
    total
}

/// Cyclic Jacobi eigenvalue sweep; returns the smallest eigenvalue.
fn jacobi_min_eigenvalue(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                if m[p][r].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[r][r] - m[p][p]) / (2.0 * m[p][r]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkr) = (m[k][p], m[k][r]);
                    m[k][p] = c * mkp - s * mkr;
                    m[k][r] = s * mkp + c * mkr;
                }
                for k in 0..n {
                    let (mpk, mrk) = (m[p][k], m[r][k]);
                    m[p][k] = c * mpk - s * mrk;
                    m[r][k] = s * mpk + c * mrk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).fold(f64::INFINITY, f64::min)
}

fn to_float(m: &[Vec<Value>]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(Value::to_f64).collect()).collect()
}

fn floatify(m: &[Vec<Value>]) -> Vec<Vec<Value>> {
    m.iter().map(|r| r.iter().map(|x| Value::approx(x.to_f64(), 0.0)).collect()).collect()
}

fn random_set(d: &Arc<BratteliDiagram>, rng: &mut ChaCha8Rng) -> ClopenSet {
    let level = rng.gen_range(2..=4);
    let h = d.path_counts(level).unwrap();
    loop {
        let members: Vec<Vec<bool>> = h.iter().map(|&hv| (0..hv).map(|_| rng.gen_bool(0.4)).collect()).collect();
        if members.iter().flatten().any(|&b| b) {
            return ClopenSet::from_level_set(d.clone(), LevelSet { level, members }).unwrap();
        }
    }
}

// 1
fn trace_identity() -> Outcome {
    let (d, mu) = odometer(2);
    let ctx = FiniteRepContext::new(&mu, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = 0;
    for _ in 0..200 {
        let g = GroupElement::random(&d, 5, &mut rng).unwrap();
        let oracle = q(fixed_points(&g.perms()[0]) as i64, 32);
        let t = diag_trace(&ctx, &g).unwrap();
        let m = mu.measure_of(&g.fix_set().unwrap()).unwrap();
        if !(t.is_exact() && t == oracle && m == oracle) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("200 elements of Sym(32), {bad} mismatches"))
}

// 2
fn catalog_psd() -> Outcome {
    let (d, mu) = odometer(2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let els: Vec<GroupElement> = (0..25).map(|_| GroupElement::random(&d, 4, &mut rng).unwrap()).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 1..=3u32 {
        let chi = CharacterSpec::power(&mu, k);
        let gram = gram_matrix(&chi, &els).unwrap();
        // Entries recomputed from fixed points of g_i^{-1} g_j.
        for i in 0..els.len() {
            for j in 0..els.len() {
                let x = els[i].inverse().compose(&els[j]).unwrap();
                ok &= gram[i][j] == fix_measure(&mu, &x).powi(k);
            }
        }
        let float = psd_check(&floatify(&gram), PSD_TOL).unwrap();
        let exact = psd_check(&gram, PSD_TOL).unwrap();
        let oracle = jacobi_min_eigenvalue(&to_float(&gram));
        ok &= float.verdict == Verdict::Psd && float.min_eigenvalue_bound >= -PSD_TOL;
        ok &= exact.verdict == Verdict::Psd && exact.method == "exact";
        ok &= oracle >= -PSD_TOL && float.min_eigenvalue_bound <= oracle + 1e-12;
        parts.push(format!("k={k} bound={:.3e} jacobi={oracle:.3e}", float.min_eigenvalue_bound));
    }
    outcome(ok, parts.join(", "))
}

// 3
fn alpha_obstruction() -> Outcome {
    let (d, mu) = odometer(2);
    let perms = all_perms(3);
    let oracle = |alpha: f64| -> f64 {
        perms.iter().map(|p| if is_odd(p) { -1.0 } else { 1.0 } * 2f64.powf((cycle_number(p) as f64 - 3.0) * alpha)).sum()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
        let p = alpha_probe(&d, &mu, alpha, 2, 3, 3).unwrap();
        let enumerated_matches = p.consistent && p.signed_sum.close_to(&p.closed_form, ALPHA_TOL);
        let oracle_matches = (p.signed_sum.to_f64() - oracle(alpha)).abs() <= ALPHA_TOL;
        ok &= enumerated_matches && oracle_matches;
        if alpha == 0.5 {
            let s = p.signed_sum.to_f64();
            ok &= (s - (2.0 - 3.0 * 2f64.powf(-0.5))).abs() <= ALPHA_TOL && (s - ALPHA_HALF).abs() <= 1e-7 && p.negative;
            parts.push(format!("alpha=0.5 sum={s:.9} negative={}", p.negative));
        }
        if alpha == 1.0 {
            ok &= p.signed_sum == Value::zero();
            parts.push(format!("alpha=1 sum={}", p.signed_sum));
        }
        if alpha == 2.0 {
            ok &= p.signed_sum == q(3, 8);
            parts.push(format!("alpha=2 sum={}", p.signed_sum));
        }
    }
    outcome(ok, parts.join(", "))
}

// 4
fn cycle_polynomial() -> Outcome {
    let mut ok = true;
    for n in 1..=7usize {
        for x in 1..=3i64 {
            let (enumerated, rising) = cycle_count_polynomial(n, &Value::int(x)).unwrap();
            let oracle: i64 = (0..n as i64).map(|i| x + i).product();
            ok &= enumerated == Value::int(oracle) && rising == Value::int(oracle);
        }
    }
    let (e, _) = cycle_count_polynomial(3, &Value::int(2)).unwrap();
    ok &= e == Value::int(24);
    outcome(ok, format!("n <= 7, x in {{1,2,3}}; n=3, x=2 gives {e}"))
}

// 5
fn projector_law() -> Outcome {
    let (d, mu) = odometer(2);
    let a = ClopenSet::from_indices(&d, 2, &[(0, 0), (0, 1)]).unwrap();
    let mut ok = true;
    let mut prev: Option<Value> = None;
    for n in 3..=10 {
        let t = projector_trace(&FiniteRepContext::new(&mu, n).unwrap(), &a).unwrap();
        ok &= t == q(1, 2).add(&pow2(n));
        if let Some(p) = &prev {
            ok &= t.certainly_lt(p);
        }
        prev = Some(t);
    }
    // Alt(4) on the four level-3 paths of A: average of the fixed-point measure.
    let even: Vec<Vec<usize>> = all_perms(4).into_iter().filter(|p| !is_odd(p)).collect();
    let total: usize = even.iter().map(|p| fixed_points(p) + 4).sum();
    let brute = q(total as i64, 8 * even.len() as i64);
    let lib = projector_trace(&FiniteRepContext::new(&mu, 3).unwrap(), &a).unwrap();
    ok &= even.len() == 12 && brute == lib;
    let g = GroupElement::from_cycles(&d, 2, 0, &[vec![0, 1, 2]]).unwrap();
    let table = trace_theorem_check(&mu, &g, 3, 10).unwrap();
    ok &= table.character == q(1, 4);
    ok &= table.rows.len() == 8 && table.rows.iter().all(|r| r.gap == pow2(r.level));
    outcome(ok, format!("levels 3..10 = 1/2 + 2^-n, Alt(4) average {brute}, 3-cycle gaps 2^-n"))
}

/// Post-condition failures of one construction, recomputed from raw
/// permutations and member flags.
fn rokhlin_failures(mu: &InvariantMeasure, a: &ClopenSet, m: usize, eps: f64) -> Result<usize, String> {
    let w = rokhlin_tower(a, m, eps, std::slice::from_ref(mu), None, 18).map_err(|e| e.to_string())?;
    let n = w.level;
    let base = w.base.at_level(n).unwrap();
    let amb = a.at_level(n).unwrap();
    let res = w.residual.at_level(n).unwrap();
    let g = w.g.embed(n).unwrap();
    let mut failures = 0;
    let mut covered: Vec<Vec<u32>> = amb.members.iter().map(|r| vec![0; r.len()]).collect();
    for (v, row) in base.members.iter().enumerate() {
        for (i, &b) in row.iter().enumerate() {
            if !b {
                continue;
            }
            let mut p = i;
            for _ in 0..m {
                covered[v][p] += 1;
                p = g.perms()[v][p];
            }
        }
        for (i, &r) in res.members[v].iter().enumerate() {
            if r {
                covered[v][i] += 1;
            }
        }
        for (i, &inside) in amb.members[v].iter().enumerate() {
            if covered[v][i] != u32::from(inside) {
                failures += 1;
            }
        }
    }
    if !level_set_measure(mu, &res).certainly_lt(&Value::approx(eps, 0.0)) {
        failures += 1;
    }
    Ok(failures)
}

fn split_failures(mu: &InvariantMeasure, a: &ClopenSet, lambda: &Value, eps: f64) -> Result<usize, String> {
    let w = split_subset(a, lambda, eps, std::slice::from_ref(mu), 18).map_err(|e| e.to_string())?;
    let n = w.level;
    let sub = w.subset.at_level(n).unwrap();
    let amb = a.at_level(n).unwrap();
    let mut failures = 0;
    for (r, s) in amb.members.iter().zip(&sub.members) {
        failures += r.iter().zip(s).filter(|(&x, &y)| y && !x).count();
    }
    let target = lambda.mul(&level_set_measure(mu, &amb));
    let got = level_set_measure(mu, &sub);
    if !target.sub(&Value::approx(eps, 0.0)).certainly_lt(&got) || !got.certainly_le(&target) {
        failures += 1;
    }
    Ok(failures)
}

fn compare_failures(a: &ClopenSet, b: &ClopenSet, mu: &InvariantMeasure) -> Result<usize, String> {
    let w = compare_sets(a, b, std::slice::from_ref(mu), 18).map_err(|e| e.to_string())?;
    let n = w.level.max(a.level()).max(b.level());
    let g = w.g.embed(n).unwrap();
    let (sa, sb) = (a.at_level(n).unwrap(), b.at_level(n).unwrap());
    let mut failures = 0;
    for (v, p) in g.perms().iter().enumerate() {
        for i in 0..p.len() {
            if p[p[i]] != i {
                failures += 1;
            }
            if sa.members[v][i] && !sb.members[v][p[i]] {
                failures += 1;
            }
            if p[i] != i && !(sa.members[v][i] || sb.members[v][i]) {
                failures += 1;
            }
        }
    }
    Ok(failures)
}

fn move_failures(a: &ClopenSet, b: &ClopenSet, mu: &InvariantMeasure, eps: f64) -> Result<usize, String> {
    let w = move_set_close(a, b, eps, std::slice::from_ref(mu), 18).map_err(|e| e.to_string())?;
    let n = w.g.level().max(a.level()).max(b.level());
    let g = w.g.embed(n).unwrap();
    let (sa, sb) = (a.at_level(n).unwrap(), b.at_level(n).unwrap());
    let mut diff = sb.clone();
    for row in &mut diff.members {
        row.iter_mut().for_each(|x| *x = false);
    }
    for (v, p) in g.perms().iter().enumerate() {
        let mut image = vec![false; p.len()];
        for i in 0..p.len() {
            if sa.members[v][i] {
                image[p[i]] = true;
            }
        }
        for i in 0..p.len() {
            diff.members[v][i] = image[i] != sb.members[v][i];
        }
    }
    let dist = level_set_measure(mu, &diff);
    Ok(usize::from(!dist.certainly_lt(&Value::approx(4.0 * eps, 0.0))))
}

// 6
fn constructions() -> Outcome {
    let mut failures = 0;
    let mut errors = Vec::new();
    let mut counts = [0usize; 4];
    for (name, (d, mu)) in [("odometer", odometer(2)), ("fibonacci", fibonacci())] {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let eps_choices = [0.1, 0.15, 0.2, 0.25, 0.3];
        for _ in 0..100 {
            let a = random_set(&d, &mut rng);
            let eps = eps_choices[rng.gen_range(0..eps_choices.len())];
            let m = rng.gen_range(2..=3);
            match rokhlin_failures(&mu, &a, m, eps) {
                Ok(f) => failures += f,
                Err(e) => errors.push(format!("{name} rokhlin: {e}")),
            }
            counts[0] += 1;
            let lambda = q(rng.gen_range(0..=7), 7);
            match split_failures(&mu, &a, &lambda, eps) {
                Ok(f) => failures += f,
                Err(e) => errors.push(format!("{name} split: {e}")),
            }
            counts[1] += 1;
        }
        let mut done = 0;
        while done < 100 {
            let a = random_set(&d, &mut rng);
            let b = random_set(&d, &mut rng);
            let (ma, mb) = (mu.measure_of(&a).unwrap(), mu.measure_of(&b).unwrap());
            if !ma.certainly_lt(&mb) {
                continue;
            }
            done += 1;
            match compare_failures(&a, &b, &mu) {
                Ok(f) => failures += f,
                Err(e) => errors.push(format!("{name} compare: {e}")),
            }
            counts[2] += 1;
        }
        for _ in 0..100 {
            let a = random_set(&d, &mut rng);
            let b = random_set(&d, &mut rng);
            let gap = mu.measure_of(&a).unwrap().sub(&mu.measure_of(&b).unwrap()).abs().upper();
            let eps = gap + rng.gen_range(0.02..0.2);
            match move_failures(&a, &b, &mu, eps) {
                Ok(f) => failures += f,
                Err(e) => errors.push(format!("{name} move: {e}")),
            }
            counts[3] += 1;
        }
    }
    let detail = format!(
        "instances rokhlin={} split={} compare={} move={}, post-condition failures {failures}, errors {}{}",
        counts[0],
        counts[1],
        counts[2],
        counts[3],
        errors.len(),
        errors.first().map(|e| format!(" (first: {e})")).unwrap_or_default()
    );
    outcome(failures == 0 && errors.is_empty(), detail)
}

// 7
fn center_certificate() -> Outcome {
    let (d, _) = odometer(2);
    let x = ClopenSet::whole(&d);
    let h = GroupElement::transposition(&d, 2, 0, 0, 1).unwrap();
    let point = FinitePath::from_index(&d, 2, 0, 3).unwrap();
    let w = match center_involutions(&x, &h, &point, 2, 4, 12) {
        Ok(w) => w,
        Err(e) => return outcome(false, e.to_string()),
    };
    let l = w.table.l;
    let lift = |g: &GroupElement| g.embed(l).unwrap().perms()[0].clone();
    let hn = lift(&w.h_n);
    let mut commuting = true;
    let gens = local_generators(&x, 2).unwrap();
    for s in &gens {
        let s = lift(s);
        commuting &= (0..hn.len()).all(|i| hn[s[i]] == s[hn[i]]);
    }
    let (t, hh) = (lift(&w.t), lift(&h));
    let th: Vec<usize> = (0..t.len()).map(|i| t[hh[i]]).collect();
    let moved = |p: &[usize]| p.iter().enumerate().filter(|(i, &x)| *i != x).count();
    let (k_th, k_hn) = (moved(&th), moved(&hn));
    let ok = l == 4 && commuting && gens.len() == 3 && k_th == k_hn && w.certificate == vec![(k_th as u64, k_hn as u64)];
    outcome(ok, format!("l={l}, N={:?} M={:?}, commutes with {} generators: {commuting}, K = {k_th} / {k_hn}", w.table.n_vw, w.table.m_vw, gens.len()))
}

// 8
fn measure_integrity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, (d, mu)) in [("odometer", odometer(2)), ("3-shift", odometer(3)), ("fibonacci", fibonacci())] {
        let exact = name != "fibonacci";
        let mut h = vec![1u64];
        let mut worst = 0f64;
        for n in 0..10 {
            let inc = d.incidence(n + 1).unwrap();
            let p = mu.weights(n).unwrap();
            let p1 = mu.weights(n + 1).unwrap();
            for v in 0..inc.cols() {
                let mut s = Value::zero();
                for w in 0..inc.rows() {
                    s = s.add(&p1[w].scale(inc.edges(v, w)));
                }
                if exact {
                    ok &= s == p[v] && p[v].is_exact();
                } else {
                    worst = worst.max((s.to_f64() - p[v].to_f64()).abs());
                }
            }
            let mut norm = Value::zero();
            for (v, hv) in h.iter().enumerate() {
                norm = norm.add(&p[v].scale(*hv));
            }
            if exact {
                ok &= norm == Value::one();
            } else {
                worst = worst.max((norm.to_f64() - 1.0).abs());
            }
            h = (0..inc.rows()).map(|w| (0..inc.cols()).map(|v| h[v] * inc.edges(v, w)).sum()).collect();
        }
        if exact {
            parts.push(format!("{name} exact"));
        } else {
            let root = mu.perron_root().map(Value::to_f64).unwrap_or(f64::NAN);
            ok &= worst <= FIB_ENTRY_TOL && (root - GOLDEN).abs() <= PERRON_TOL;
            parts.push(format!("{name} max defect {worst:.1e}, root {root:.13}"));
        }
    }
    outcome(ok, parts.join(", "))
}

// 9
fn character_hygiene() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let (d, mu) = odometer(2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pairs: Vec<(GroupElement, GroupElement)> = (0..100)
        .map(|_| {
            let (la, lb) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
            (GroupElement::random(&d, la, &mut rng).unwrap(), GroupElement::random(&d, lb, &mut rng).unwrap())
        })
        .collect();
    for chi in [CharacterSpec::power(&mu, 1), CharacterSpec::product(vec![(mu.clone(), 2), (mu.clone(), 1)])] {
        let rep = axiom_check(&chi, &pairs, 0.0).unwrap();
        // Exact oracle: χ(h g h^-1) = χ(g) and χ(gh) = χ(hg) from fixed points.
        for (g, h) in &pairs {
            let x = chi.evaluate(&h.compose(g).unwrap().compose(&h.inverse()).unwrap()).unwrap();
            let y = chi.evaluate(&g.compose(h).unwrap()).unwrap();
            let z = chi.evaluate(&h.compose(g).unwrap()).unwrap();
            ok &= x == chi.evaluate(g).unwrap() && y == z && x.is_exact();
        }
        ok &= rep.passed() && rep.checked == 100;
    }
    parts.push("axioms exact on 100 pairs".to_string());

    let (d3, mu3) = odometer(3);
    let homs = enumerate_sign_homomorphisms(&d3, 6).unwrap();
    let nontrivial: Vec<_> = homs.iter().filter(|s| !s.is_trivial()).cloned().collect();
    ok &= !nontrivial.is_empty();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for s in &nontrivial {
        for _ in 0..20 {
            let g = GroupElement::random(&d3, rng.gen_range(1..=3), &mut rng).unwrap();
            let base = s.value_at(&g, g.level()).unwrap();
            // On the 3-odometer parity is preserved by embedding.
            ok &= base == if is_odd(&g.perms()[0]) { -1 } else { 1 };
            for level in g.level() + 1..=s.top_level() {
                ok &= s.value_at(&g, level).unwrap() == base;
            }
        }
    }
    parts.push(format!("{} nontrivial sign homomorphisms level-independent", nontrivial.len()));
    if let Some(s) = nontrivial.first() {
        let chi = CharacterSpec::power(&mu3, 1).with_rho(Rho::Parity(s.clone()));
        let els: Vec<GroupElement> = (0..25).map(|_| GroupElement::random(&d3, 3, &mut rng).unwrap()).collect();
        let gram = gram_matrix(&chi, &els).unwrap();
        let rep = psd_check(&gram, PSD_TOL).unwrap();
        let oracle = jacobi_min_eigenvalue(&to_float(&gram));
        ok &= rep.verdict == Verdict::Psd && oracle >= -PSD_TOL;
        parts.push(format!("chi*rho Gram psd, jacobi min {oracle:.3e}"));
    }

    let a = CharacterSpec::power(&mu, 1);
    let b = CharacterSpec::power(&mu, 2);
    match distinctness_probe(&a, &b, &d, 8, PSD_TOL) {
        Ok(w) => {
            let f = fix_measure(&mu, &w.element);
            let gap = f.sub(&f.powi(2)).abs();
            ok &= w.value_a == f && w.value_b == f.powi(2) && !gap.certainly_lt(&q(DISTINCT_GAP.0, DISTINCT_GAP.1));
            parts.push(format!("distinct gap {gap}"));
        }
        Err(e) => {
            ok = false;
            parts.push(format!("distinct: {e}"));
        }
    }
    outcome(ok, parts.join(", "))
}

// 10
fn embedding_structure() -> Outcome {
    let (d, _) = odometer(2);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut ok = true;
    for _ in 0..500 {
        let (la, lb) = (rng.gen_range(0..=5), rng.gen_range(0..=5));
        let top = la.max(lb);
        let target = rng.gen_range(top..=5);
        let g = GroupElement::random(&d, la, &mut rng).unwrap();
        let h = GroupElement::random(&d, lb, &mut rng).unwrap();
        let (ge, he) = (g.embed(target).unwrap(), h.embed(target).unwrap());
        let gh = g.compose(&h).unwrap().embed(target).unwrap();
        let (pg, ph) = (&ge.perms()[0], &he.perms()[0]);
        ok &= (0..pg.len()).all(|i| gh.perms()[0][i] == pg[ph[i]]);
        ok &= g.fix_set().unwrap() == ge.fix_set().unwrap();
        // An embedded permutation only rewrites the first `la` edges.
        ok &= (0..pg.len()).all(|i| pg[i] >> la == i >> la);
    }
    let fig = BratteliDiagram::two_level_example();
    let counts = fig.path_counts(2).unwrap();
    ok &= counts == vec![6, 8] && fig.path_counts(1).unwrap() == vec![1, 3, 2];
    outcome(ok, format!("500 pairs at levels <= 5; example diagram level-2 counts {counts:?}"))
}

#[test]
fn acceptance() {
    let criteria: Vec<Criterion> = vec![
        ("1 trace identity", trace_identity, Duration::from_secs(5)),
        ("2 catalog psd", catalog_psd, Duration::from_secs(30)),
        ("3 alpha obstruction", alpha_obstruction, Duration::from_secs(1)),
        ("4 cycle polynomial", cycle_polynomial, Duration::from_secs(5)),
        ("5 projector-trace law", projector_law, Duration::from_secs(5)),
        ("6 construction post-conditions", constructions, Duration::from_secs(60)),
        ("7 center-involution certificate", center_certificate, Duration::from_secs(5)),
        ("8 measure integrity", measure_integrity, Duration::from_secs(1)),
        ("9 character hygiene", character_hygiene, Duration::from_secs(30)),
        ("10 embedding and structure", embedding_structure, Duration::from_secs(10)),
    ];
    let mut failed = Vec::new();
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let pass = o.ok && took <= budget;
        println!("{} criterion {name}: {} [{:.2}s / {}s]", if pass { "PASS" } else { "FAIL" }, o.detail, took.as_secs_f64(), budget.as_secs());
        if !pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
