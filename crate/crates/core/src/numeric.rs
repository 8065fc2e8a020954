//! Small numerical kernels shared across the crate: guarded logistic
//! evaluation, symmetric solves and chi-square tails.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Above this |W| the logistic is evaluated through its exponential tail.
pub const SATURATION: f64 = 36.0;

/// Success probability and its complement, both kept strictly positive
/// for |W| well beyond the double-precision saturation point.
#[inline]
pub fn logistic_pair(w: f64) -> (f64, f64) {
    if w > SATURATION {
        let q = (-w).exp();
        (1.0 - q, q)
    } else if w < -SATURATION {
        let p = w.exp();
        (p, 1.0 - p)
    } else if w >= 0.0 {
        let q = (-w).exp();
        (1.0 / (1.0 + q), q / (1.0 + q))
    } else {
        let p = w.exp();
        (p / (1.0 + p), 1.0 / (1.0 + p))
    }
}

#[inline]
pub fn logistic(w: f64) -> f64 {
    logistic_pair(w).0
}

/// log(1 + e^w) without overflow.
#[inline]
pub fn log1p_exp(w: f64) -> f64 {
    if w > 0.0 {
        w + (-w).exp().ln_1p()
    } else {
        w.exp().ln_1p()
    }
}

/// log C(m, y).
pub fn ln_binomial(m: u32, y: u32) -> f64 {
    statrs::function::factorial::ln_binomial(m as u64, y as u64)
}

/// Upper tail P(chi2_df > x).
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("df >= 1");
    dist.sf(x).clamp(0.0, 1.0)
}

pub fn chi2_cdf(x: f64, df: usize) -> f64 {
    1.0 - chi2_sf(x, df)
}

/// Upper-tail quantile: the u with P(chi2_df > u) = alpha.
pub fn chi2_upper_quantile(alpha: f64, df: usize) -> f64 {
    let dist = ChiSquared::new(df as f64).expect("df >= 1");
    dist.inverse_cdf(1.0 - alpha)
}

/// Solve `a x = b` for symmetric positive definite `a`.
pub fn spd_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().cholesky().map(|c| c.solve(b))
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().cholesky().map(|c| c.inverse())
}

/// Quadratic form `s' a^{-1} s` for symmetric positive semidefinite `a`.
///
/// Uses Cholesky; falls back to an SVD pseudo-inverse and reports that in
/// the returned flag. Rank is judged relative to the largest eigenvalue.
pub fn psd_quadratic_form(a: &DMatrix<f64>, s: &DVector<f64>) -> Result<(f64, bool)> {
    if a.nrows() == 0 {
        return Ok((0.0, false));
    }
    if a.iter().any(|v| !v.is_finite()) || s.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric(None, "non-finite entries in quadratic form"));
    }
    let eig = a.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if max <= 0.0 {
        return Err(Error::Singular("information matrix is zero".into()));
    }
    if min < -1e-10 * max.max(1.0) {
        return Err(Error::numeric(
            None,
            format!("information matrix not positive semidefinite (min eigenvalue {min:e})"),
        ));
    }
    if min > 1e-12 * max {
        if let Some(x) = spd_solve(a, s) {
            return Ok((s.dot(&x), false));
        }
    }
    let tol = 1e-10 * max;
    let mut q = 0.0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > tol {
            let proj = eig.eigenvectors.column(k).dot(s);
            q += proj * proj / lambda;
        }
    }
    Ok((q, true))
}

/// Moduli of the roots of `1 - sum_j c_j z^j` where `coef` pairs lag j with c_j.
///
/// Returns an empty vector for the trivial polynomial.
pub fn ar_root_moduli(coef: &[(usize, f64)]) -> Vec<f64> {
    let p = coef
        .iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|(j, _)| *j)
        .max()
        .unwrap_or(0);
    if p == 0 {
        return Vec::new();
    }
    // Companion matrix of z^p - c_1 z^{p-1} - ... - c_p; its eigenvalues are
    // the reciprocals of the roots of the lag polynomial.
    let mut comp = DMatrix::<f64>::zeros(p, p);
    for &(j, c) in coef {
        comp[(0, j - 1)] += c;
    }
    for i in 1..p {
        comp[(i, i - 1)] = 1.0;
    }
    comp.complex_eigenvalues()
        .iter()
        .map(|ev| {
            let m = ev.norm();
            if m == 0.0 {
                f64::INFINITY
            } else {
                1.0 / m
            }
        })
        .collect()
}
