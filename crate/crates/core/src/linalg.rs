//! Dense linear algebra for Gram-matrix certification.
//!
//! Two independent routes decide positive semi-definiteness:
//! exact symmetric elimination over the rationals, and Householder
//! tridiagonalization followed by Sturm-sequence bisection in floating
//! point with an explicit backward-error allowance.

#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{ratio_to_f64, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Psd,
    Violated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsdReport {
    pub verdict: Verdict,
    /// Certified lower bound on the smallest eigenvalue (floating route).
    pub min_eigenvalue_bound: f64,
    /// Estimate of the smallest eigenvalue.
    pub min_eigenvalue_estimate: f64,
    /// `exact` when the verdict comes from rational elimination.
    pub method: &'static str,
    /// Vector `x` with `xᵀ A x < 0` on violation.
    pub witness: Option<Vec<f64>>,
}

/// Certifies `A ⪰ 0`. Exact matrices are decided by rational elimination
/// (tolerance unused); otherwise the verdict is `psd` iff the certified
/// eigenvalue lower bound is `>= -tol`.
pub fn psd_check(matrix: &[Vec<Value>], tol: f64) -> Result<PsdReport> {
    let n = matrix.len();
    if matrix.iter().any(|r| r.len() != n) {
        return Err(Error::Precondition("matrix is not square".into()));
    }
    let exact = matrix.iter().flatten().all(Value::is_exact);
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (&matrix[i][j], &matrix[j][i]);
            let symmetric = if exact { a == b } else { a.close_to(b, 0.0) };
            if !symmetric {
                return Err(Error::NotHermitian(i, j));
            }
        }
    }
    let dense: Vec<Vec<f64>> = matrix.iter().map(|r| r.iter().map(Value::to_f64).collect()).collect();
    // Input uncertainty: ||E||_2 <= ||E||_F.
    let input_err = matrix.iter().flatten().map(|v| v.err() * v.err()).sum::<f64>().sqrt();
    let (estimate, bound) = min_eigenvalue_bound(&dense, input_err);
    if exact {
        let rat: Vec<Vec<BigRational>> =
            matrix.iter().map(|r| r.iter().map(|v| v.as_exact().expect("exact").clone()).collect()).collect();
        let witness = exact_psd_witness(&rat);
        return Ok(PsdReport {
            verdict: if witness.is_none() { Verdict::Psd } else { Verdict::Violated },
            min_eigenvalue_bound: bound,
            min_eigenvalue_estimate: estimate,
            method: "exact",
            witness: witness.map(|w| w.iter().map(ratio_to_f64).collect()),
        });
    }
    let verdict = if bound >= -tol { Verdict::Psd } else { Verdict::Violated };
    let witness = match verdict {
        Verdict::Violated => Some(min_eigenvector(&dense, estimate)),
        Verdict::Psd => None,
    };
    Ok(PsdReport { verdict, min_eigenvalue_bound: bound, min_eigenvalue_estimate: estimate, method: "tridiagonal-bisection", witness })
}

/// Hermitian complex matrices are checked through the real symmetric
/// embedding `[[Re, -Im], [Im, Re]]`, which has the same eigenvalues
/// (each doubled).
pub fn psd_check_complex(matrix: &[Vec<Complex64>], tol: f64) -> Result<PsdReport> {
    let n = matrix.len();
    for i in 0..n {
        if matrix[i].len() != n {
            return Err(Error::Precondition("matrix is not square".into()));
        }
        for j in 0..=i {
            if (matrix[i][j] - matrix[j][i].conj()).norm() > 1e-12 {
                return Err(Error::NotHermitian(i, j));
            }
        }
    }
    let mut real = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = matrix[i][j];
            real[i][j] = z.re;
            real[i + n][j + n] = z.re;
            real[i][j + n] = -z.im;
            real[i + n][j] = z.im;
        }
    }
    let (estimate, bound) = min_eigenvalue_bound(&real, 0.0);
    let verdict = if bound >= -tol { Verdict::Psd } else { Verdict::Violated };
    let witness = (verdict == Verdict::Violated).then(|| min_eigenvector(&real, estimate));
    Ok(PsdReport { verdict, min_eigenvalue_bound: bound, min_eigenvalue_estimate: estimate, method: "tridiagonal-bisection", witness })
}

/// `(estimate, certified lower bound)` for the smallest eigenvalue of a
/// symmetric matrix.
pub fn min_eigenvalue_bound(a: &[Vec<f64>], input_err: f64) -> (f64, f64) {
    let n = a.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let frob = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let (d, e) = tridiagonalize(a);
    let (lo, _hi) = smallest_eigenvalue_interval(&d, &e);
    // Householder reduction is backward stable: the computed tridiagonal
    // matrix is similar to A + E with ||E||_2 <= c n^2 u ||A||_F; the
    // bisection itself contributes a further O(n u ||T||).
    let u = f64::EPSILON;
    let nf = n as f64;
    let backward = 4.0 * nf * nf * u * frob + 8.0 * nf * u * frob;
    (lo, lo - backward - input_err)
}

/// Householder reduction of a symmetric matrix to tridiagonal form;
/// returns `(diagonal, off_diagonal)`.
pub fn tridiagonalize(a: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for k in 0..n.saturating_sub(2) {
        let alpha_sq: f64 = (k + 1..n).map(|i| m[i][k] * m[i][k]).sum();
        if alpha_sq == 0.0 {
            continue;
        }
        let x0 = m[k + 1][k];
        let alpha = if x0 >= 0.0 { -alpha_sq.sqrt() } else { alpha_sq.sqrt() };
        let mut v = vec![0.0; n];
        v[k + 1] = x0 - alpha;
        for i in k + 2..n {
            v[i] = m[i][k];
        }
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        // M <- H M H with H = I - 2 v vᵀ / (vᵀ v).
        let p: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[i][j] * v[j]).sum::<f64>() * 2.0 / vnorm_sq).collect();
        let kk: f64 = (0..n).map(|i| v[i] * p[i]).sum::<f64>() / vnorm_sq;
        let q: Vec<f64> = (0..n).map(|i| p[i] - kk * v[i]).collect();
        for i in 0..n {
            for j in 0..n {
                m[i][j] -= v[i] * q[j] + q[i] * v[j];
            }
        }
    }
    let d = (0..n).map(|i| m[i][i]).collect();
    let e = (1..n).map(|i| 0.5 * (m[i][i - 1] + m[i - 1][i])).collect();
    (d, e)
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let prev = if q == 0.0 { f64::EPSILON * (d[i - 1].abs() + e[i - 1].abs()).max(f64::MIN_POSITIVE) } else { q };
        q = d[i] - x - e[i - 1] * e[i - 1] / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Bracket `[lo, hi]` around the smallest eigenvalue with no eigenvalue
/// below `lo`.
pub fn smallest_eigenvalue_interval(d: &[f64], e: &[f64]) -> (f64, f64) {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let pad = 1e-300_f64.max((hi - lo).abs() * f64::EPSILON + f64::EPSILON);
    lo -= pad;
    hi += pad;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Inverse iteration near `shift` for an approximate eigenvector.
fn min_eigenvector(a: &[Vec<f64>], shift: f64) -> Vec<f64> {
    let n = a.len();
    let scale = a.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    let sigma = shift - 1e-10 * scale;
    let mut x = vec![1.0; n];
    for _ in 0..50 {
        let mut m: Vec<Vec<f64>> = a.to_vec();
        for (i, row) in m.iter_mut().enumerate() {
            row[i] -= sigma;
        }
        match solve_f64(m, x.clone()) {
            Some(y) => {
                let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 || !norm.is_finite() {
                    break;
                }
                x = y.into_iter().map(|v| v / norm).collect();
            }
            None => break,
        }
    }
    x
}

fn solve_f64(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = m.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))?;
        if m[p][k] == 0.0 {
            m[p][k] = f64::EPSILON;
        }
        m.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / m[i][i];
    }
    Some(x)
}

/// Exact positive semi-definiteness by symmetric elimination with diagonal
/// pivoting. Returns `None` when `A ⪰ 0`, otherwise a rational vector with
/// `xᵀ A x < 0`.
pub fn exact_psd_witness(a: &[Vec<BigRational>]) -> Option<Vec<BigRational>> {
    let n = a.len();
    let mut s: Vec<Vec<BigRational>> = a.to_vec();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut pivots: Vec<usize> = Vec::new();
    loop {
        if remaining.is_empty() {
            return None;
        }
        if let Some(&i) = remaining.iter().find(|&&i| s[i][i].is_negative()) {
            let mut y = vec![BigRational::zero(); n];
            y[i] = BigRational::from_integer(1.into());
            return Some(lift_witness(a, &pivots, &remaining, y));
        }
        match remaining.iter().copied().find(|&i| s[i][i].is_positive()) {
            Some(k) => {
                remaining.retain(|&i| i != k);
                for &i in &remaining {
                    if s[i][k].is_zero() {
                        continue;
                    }
                    let f = &s[i][k] / &s[k][k];
                    for &j in &remaining {
                        let delta = &f * &s[k][j];
                        s[i][j] -= delta;
                    }
                }
                pivots.push(k);
            }
            None => {
                // All remaining diagonal entries vanish; A ⪰ 0 iff the rest
                // of the Schur complement does.
                for &i in &remaining {
                    for &j in &remaining {
                        if !s[i][j].is_zero() {
                            let t = -(&s[j][j] + BigRational::from_integer(1.into()))
                                / (BigRational::from_integer(2.into()) * &s[i][j]);
                            let mut y = vec![BigRational::zero(); n];
                            y[i] = t;
                            y[j] = BigRational::from_integer(1.into());
                            return Some(lift_witness(a, &pivots, &remaining, y));
                        }
                    }
                }
                return None;
            }
        }
    }
}

/// Extends a Schur-complement witness `y` (supported on `remaining`) to a
/// witness for `A` by solving `A_PP x_P = -A_PR y`.
fn lift_witness(a: &[Vec<BigRational>], pivots: &[usize], remaining: &[usize], y: Vec<BigRational>) -> Vec<BigRational> {
    let mut x = y;
    if pivots.is_empty() {
        return x;
    }
    let app: Vec<Vec<BigRational>> = pivots.iter().map(|&i| pivots.iter().map(|&j| a[i][j].clone()).collect()).collect();
    let rhs: Vec<BigRational> = pivots
        .iter()
        .map(|&i| -remaining.iter().map(|&j| &a[i][j] * &x[j]).fold(BigRational::zero(), |acc, t| acc + t))
        .collect();
    let sol = exact_solve(app, rhs).expect("pivot block is positive definite");
    for (k, &i) in pivots.iter().enumerate() {
        x[i] = sol[k].clone();
    }
    x
}

/// Solves a nonsingular rational system.
pub fn exact_solve(mut m: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = m.len();
    for k in 0..n {
        let p = (k..n).find(|&i| !m[i][k].is_zero())?;
        m.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            if m[i][k].is_zero() {
                continue;
            }
            let f = &m[i][k] / &m[k][k];
            for j in k..n {
                let delta = &f * &m[k][j];
                m[i][j] -= delta;
            }
            let delta = &f * &b[k];
            b[i] -= delta;
        }
    }
    let mut x = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i].clone();
        for j in i + 1..n {
            s -= &m[i][j] * &x[j];
        }
        x[i] = s / &m[i][i];
    }
    Some(x)
}

/// Basis of the right kernel of a rational matrix (reduced in place).
pub fn exact_kernel(a: &mut [Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].clone();
        for j in 0..cols {
            a[r][j] = &a[r][j] / &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let delta = &f * &a[r][j];
                    a[i][j] -= delta;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::from_integer(1.into());
            for (row, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = -a[row][f].clone();
            }
            v
        })
        .collect()
}

/// `xᵀ A x` over the rationals.
pub fn quadratic_form(a: &[Vec<BigRational>], x: &[BigRational]) -> BigRational {
    let mut acc = BigRational::zero();
    for i in 0..a.len() {
        for j in 0..a.len() {
            acc += &x[i] * &a[i][j] * &x[j];
        }
    }
    acc
}
