//! Score test against logistic BARMA alternatives.
//!
//! Under the alternative `W_t = x_t'beta + sum phi_j Y_{t-j} + sum theta_j e_{t-j}`
//! with identity residuals `e_t = Y_t - m_t pi_t`. At the null fit the
//! derivative of `W_t` is `D_t = [x_t; Y_{t-J_phi}; e_{t-J_theta}]` and the
//! information is `n^{-1} sum sigma_t^2 E[D_t D_t']`, partitioned as
//! `[[E, F'], [F, G]]`. The statistic uses the Schur complement
//! `G - F E^{-1} F'` so that `beta` is treated as estimated.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{BinomialSeries, Family, ModelSpec};
use crate::error::{Error, Result};
use crate::glm::GlmFit;
use crate::numeric::spd_inverse;
use crate::result::{Method, TestResult};

/// Relative eigenvalue floor below which the Schur complement counts as singular.
const SCHUR_TOLERANCE: f64 = 1e-10;

/// Score and information blocks, rows ordered `J_phi` then `J_theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarmaScoreParts {
    pub s_phi: DVector<f64>,
    pub s_theta: DVector<f64>,
    /// `r x r` regression block.
    pub e: DMatrix<f64>,
    /// `L x r` cross block.
    pub f: DMatrix<f64>,
    /// `L x L` dependence block.
    pub g: DMatrix<f64>,
}

impl BarmaScoreParts {
    pub fn new(series: &BinomialSeries, glm: &GlmFit, spec: &ModelSpec) -> Result<Self> {
        let (s_phi, s_theta) = barma_score_vector(series, glm, spec)?;
        let (e, f, g) = barma_info(series, glm, spec)?;
        Ok(Self {
            s_phi,
            s_theta,
            e,
            f,
            g,
        })
    }

    pub fn score(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.s_phi.len() + self.s_theta.len(),
            self.s_phi.iter().chain(self.s_theta.iter()).copied(),
        )
    }

    /// `G - F E^{-1} F'`, symmetrized.
    pub fn schur_complement(&self) -> Result<DMatrix<f64>> {
        let e_inv = spd_inverse(&self.e)
            .ok_or_else(|| Error::Singular("regression information is not positive definite".into()))?;
        let s = &self.g - &self.f * e_inv * self.f.transpose();
        Ok((&s + s.transpose()) * 0.5)
    }
}

fn check(series: &BinomialSeries, glm: &GlmFit, spec: &ModelSpec) -> Result<()> {
    spec.require_family(Family::Barma)?;
    spec.require_dependence()?;
    if glm.n() != series.n() {
        return Err(Error::Parameter("GLM fit does not belong to this series".into()));
    }
    Ok(())
}

/// `(S_phi, S_theta)`, each scaled by `n^{-1/2}`; pre-sample `Y` and `e` are zero.
pub fn barma_score_vector(
    series: &BinomialSeries,
    glm: &GlmFit,
    spec: &ModelSpec,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check(series, glm, spec)?;
    let n = series.n();
    let u = glm.identity_residuals(series);
    let y: Vec<f64> = series.y().iter().map(|&v| v as f64).collect();
    let scale = 1.0 / (n as f64).sqrt();
    let lagged = |lags: &[usize], v: &[f64]| {
        DVector::from_iterator(
            lags.len(),
            lags.iter()
                .map(|&j| (j..n).map(|t| u[t] * v[t - j]).sum::<f64>() * scale),
        )
    };
    Ok((lagged(spec.j_phi(), &y), lagged(spec.j_theta(), &u)))
}

/// `(E, F, G)`, each scaled by `n^{-1}`.
pub fn barma_info(
    series: &BinomialSeries,
    glm: &GlmFit,
    spec: &ModelSpec,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    check(series, glm, spec)?;
    let (n, r) = (series.n(), series.r());
    let x = series.x();
    let s2 = &glm.sigma2;
    let mean: Vec<f64> = series.m().iter().zip(&glm.pi).map(|(&m, &p)| m as f64 * p).collect();
    let phi = spec.j_phi();
    let theta = spec.j_theta();
    let (kp, l) = (phi.len(), phi.len() + theta.len());
    let at = |v: &[f64], t: usize, j: usize| if j <= t { v[t - j] } else { 0.0 };

    let mut e = DMatrix::zeros(r, r);
    let mut f = DMatrix::zeros(l, r);
    let mut g = DMatrix::zeros(l, l);
    for t in 0..n {
        let w = s2[t];
        for a in 0..r {
            for b in 0..=a {
                e[(a, b)] += w * x[(t, a)] * x[(t, b)];
            }
        }
        for (i, &j) in phi.iter().enumerate() {
            let mu = at(&mean, t, j);
            for a in 0..r {
                f[(i, a)] += w * x[(t, a)] * mu;
            }
            for (k, &h) in phi.iter().enumerate().take(i + 1) {
                let diag = if h == j { at(s2, t, j) } else { 0.0 };
                g[(i, k)] += w * (diag + mu * at(&mean, t, h));
            }
        }
        for (i, &j) in theta.iter().enumerate() {
            let v = at(s2, t, j);
            if phi.contains(&j) {
                let k = phi.binary_search(&j).unwrap();
                g[(kp + i, k)] += w * v;
            }
            g[(kp + i, kp + i)] += w * v;
        }
    }
    let inv_n = 1.0 / n as f64;
    e *= inv_n;
    f *= inv_n;
    g *= inv_n;
    mirror_lower(&mut e);
    mirror_lower(&mut g);
    Ok((e, f, g))
}

fn mirror_lower(m: &mut DMatrix<f64>) {
    for a in 0..m.nrows() {
        for b in 0..a {
            m[(b, a)] = m[(a, b)];
        }
    }
}

/// Constant mean and trials with a lag shared by both parts make `Y_{t-j}`
/// and `e_{t-j}` differ only by a constant absorbed by the intercept.
fn structurally_singular(series: &BinomialSeries, glm: &GlmFit, spec: &ModelSpec) -> bool {
    let shared = spec.j_phi().iter().any(|j| spec.j_theta().contains(j));
    if !shared {
        return false;
    }
    let m0 = series.m()[0];
    let p0 = glm.pi[0];
    series.m().iter().all(|&m| m == m0) && glm.pi.iter().all(|&p| (p - p0).abs() <= 1e-9 * p0.max(1.0 - p0))
}

/// `Q = S' (G - F E^{-1} F')^{-1} S` with a chi-square(|J_phi| + |J_theta|) p-value.
pub fn barma_stat(series: &BinomialSeries, glm: &GlmFit, spec: &ModelSpec) -> Result<TestResult> {
    let parts = BarmaScoreParts::new(series, glm, spec)?;
    if structurally_singular(series, glm, spec) {
        return Err(Error::Singular(
            "constant mean with a lag in both J_phi and J_theta: BARMA information is not invertible".into(),
        ));
    }
    let schur = parts.schur_complement()?;
    let eig = schur.clone().symmetric_eigen();
    let max = eig.eigenvalues.amax();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= SCHUR_TOLERANCE * max {
        return Err(Error::Singular(format!(
            "BARMA Schur complement not positive definite (eigenvalues in [{min:e}, {max:e}])"
        )));
    }
    let s = parts.score();
    let chol = schur
        .cholesky()
        .ok_or_else(|| Error::Singular("BARMA Schur complement factorization failed".into()))?;
    let q = s.dot(&chol.solve(&s)).max(0.0);
    Ok(TestResult::new(Method::ScoreBarma, q, s.len()).with_chi2_p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::fit_glm;

    fn fixture() -> BinomialSeries {
        let x = DMatrix::from_row_slice(
            8,
            2,
            &[
                1., 0.3, 1., -0.2, 1., 0.9, 1., -0.7, 1., 0.1, 1., 0.5, 1., -0.4, 1., 0.0,
            ],
        );
        BinomialSeries::new(vec![2, 0, 3, 1, 1, 2, 0, 2], vec![3, 2, 3, 3, 2, 3, 2, 3], x).unwrap()
    }

    #[test]
    fn blocks_are_exactly_symmetric() {
        let s = fixture();
        let glm = fit_glm(&s).unwrap();
        let spec = ModelSpec::barma(vec![1, 2], vec![1, 3]).unwrap();
        let p = BarmaScoreParts::new(&s, &glm, &spec).unwrap();
        assert_eq!(p.e, p.e.transpose());
        assert_eq!(p.g, p.g.transpose());
        assert_eq!(p.f.nrows(), 4);
        assert_eq!(p.f.row(2).amax(), 0.0);
    }

    #[test]
    fn theta_only_has_no_cross_block() {
        let s = fixture();
        let glm = fit_glm(&s).unwrap();
        let spec = ModelSpec::barma(vec![], vec![1]).unwrap();
        let (_, f, g) = barma_info(&s, &glm, &spec).unwrap();
        assert_eq!(f.amax(), 0.0);
        let want: f64 = (1..8).map(|t| glm.sigma2[t] * glm.sigma2[t - 1]).sum::<f64>() / 8.0;
        assert!((g[(0, 0)] - want).abs() < 1e-15);
    }

    #[test]
    fn constant_mean_with_shared_lag_is_singular() {
        let x = DMatrix::from_element(10, 1, 1.0);
        let s = BinomialSeries::new(vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 1], vec![1; 10], x).unwrap();
        let glm = fit_glm(&s).unwrap();
        let spec = ModelSpec::barma(vec![1], vec![1]).unwrap();
        assert!(matches!(barma_stat(&s, &glm, &spec), Err(Error::Singular(_))));
    }

    #[test]
    fn rejects_glarma_spec() {
        let s = fixture();
        let glm = fit_glm(&s).unwrap();
        let spec = ModelSpec::glarma(vec![1], vec![], crate::dataset::Residuals::Identity).unwrap();
        assert!(barma_stat(&s, &glm, &spec).is_err());
    }
}
