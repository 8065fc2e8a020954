//! Null-model logistic-binomial regression (no serial dependence).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dataset::{BinomialSeries, Residuals};
use crate::error::{Error, Result};
use crate::numeric::{ln_binomial, log1p_exp, logistic_pair};

pub const MAX_ITERATIONS: usize = 100;
pub const GRADIENT_TOLERANCE: f64 = 1e-10;
pub const LOGLIK_TOLERANCE: f64 = 1e-12;
/// `||beta||_inf` beyond this is treated as divergence to infinity.
pub const SEPARATION_BOUND: f64 = 1e3;
/// Fitted probabilities closer than this to 0 or 1 indicate separation.
pub const SATURATED_PROBABILITY: f64 = 1e-10;
const MAX_HALVINGS: usize = 30;
/// Newton decrement `g' H^{-1} g` below which the quadratic model is trusted.
const POLISH_DECREMENT: f64 = 1e-8;

/// Maximum-likelihood fit of the independent logistic-binomial model.
#[derive(Debug, Clone, Serialize)]
pub struct GlmFit {
    pub beta_hat: Vec<f64>,
    /// Fitted linear predictor `x_t' beta_hat`.
    pub w: Vec<f64>,
    pub pi: Vec<f64>,
    /// `m_t pi_t (1 - pi_t)`.
    pub sigma2: Vec<f64>,
    pub loglik: f64,
    /// Fisher information `sum_t sigma_t^2 x_t x_t'`.
    pub info: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl GlmFit {
    /// Null-model quantities at a given `beta` without fitting; used when the
    /// true coefficients are known, as in simulation oracles.
    pub fn at(series: &BinomialSeries, beta: &[f64]) -> Result<Self> {
        if beta.len() != series.r() || beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Parameter(format!("beta must hold {} finite values", series.r())));
        }
        let ev = evaluate(series, beta);
        Ok(Self {
            beta_hat: beta.to_vec(),
            w: ev.w,
            pi: ev.pi,
            sigma2: ev.sigma2,
            loglik: ev.loglik,
            info: ev.info,
            converged: false,
            iterations: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    /// `y_t - m_t pi_t`.
    pub fn identity_residuals(&self, series: &BinomialSeries) -> Vec<f64> {
        series
            .y()
            .iter()
            .zip(series.m())
            .zip(&self.pi)
            .map(|((&y, &m), &p)| y as f64 - m as f64 * p)
            .collect()
    }

    /// `sigma_t^{-gamma} (y_t - m_t pi_t)`.
    pub fn residuals(&self, series: &BinomialSeries, kind: Residuals) -> Vec<f64> {
        self.identity_residuals(series)
            .into_iter()
            .zip(&self.sigma2)
            .map(|(u, &s2)| u * kind.scale(s2))
            .collect()
    }

    /// Inverse Fisher information.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        self.info
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| Error::Singular("GLM information matrix".into()))
    }

    pub fn std_errors(&self) -> Result<Vec<f64>> {
        let cov = self.covariance()?;
        Ok((0..cov.nrows()).map(|k| cov[(k, k)].sqrt()).collect())
    }
}

/// Binomial log-likelihood at `beta`, including the `log C(m_t, y_t)` terms.
pub fn loglik_at(series: &BinomialSeries, beta: &[f64]) -> f64 {
    series
        .linear_predictor(beta)
        .iter()
        .zip(series.y().iter().zip(series.m()))
        .map(|(&w, (&y, &m))| y as f64 * w - m as f64 * log1p_exp(w) + ln_binomial(m, y))
        .sum()
}

struct Evaluation {
    w: Vec<f64>,
    pi: Vec<f64>,
    sigma2: Vec<f64>,
    loglik: f64,
    grad: DVector<f64>,
    info: DMatrix<f64>,
}

fn evaluate(series: &BinomialSeries, beta: &[f64]) -> Evaluation {
    let (n, r) = (series.n(), series.r());
    let x = series.x();
    let w = series.linear_predictor(beta);
    let mut pi = Vec::with_capacity(n);
    let mut sigma2 = Vec::with_capacity(n);
    let mut grad = DVector::zeros(r);
    let mut info = DMatrix::zeros(r, r);
    let mut loglik = 0.0;
    for t in 0..n {
        let (y, m) = (series.y()[t] as f64, series.m()[t] as f64);
        let (p, q) = logistic_pair(w[t]);
        let s2 = m * p * q;
        let u = y - m * p;
        loglik += y * w[t] - m * log1p_exp(w[t]) + ln_binomial(series.m()[t], series.y()[t]);
        for a in 0..r {
            grad[a] += u * x[(t, a)];
            for b in 0..=a {
                info[(a, b)] += s2 * x[(t, a)] * x[(t, b)];
            }
        }
        pi.push(p);
        sigma2.push(s2);
    }
    for a in 0..r {
        for b in 0..a {
            info[(b, a)] = info[(a, b)];
        }
    }
    Evaluation {
        w,
        pi,
        sigma2,
        loglik,
        grad,
        info,
    }
}

/// Log-likelihood, gradient `X'(y - m pi)` and Fisher information at `beta`.
pub fn loglik_grad_info(series: &BinomialSeries, beta: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
    let ev = evaluate(series, beta);
    (ev.loglik, ev.grad, ev.info)
}

/// Newton-Raphson with step-halving from `beta = 0`.
///
/// Stops when `||grad||_inf <= 1e-10` and the log-likelihood changed by at
/// most `1e-12`, or when the Newton step has shrunk to rounding level.
pub fn fit_glm(series: &BinomialSeries) -> Result<GlmFit> {
    let r = series.r();
    let mut beta = vec![0.0; r];
    let mut cur = evaluate(series, &beta);
    let mut prev_loglik = f64::NEG_INFINITY;
    for iter in 0..=MAX_ITERATIONS {
        let gmax = cur.grad.amax();
        let small_grad = gmax <= GRADIENT_TOLERANCE;
        if small_grad && (cur.loglik - prev_loglik).abs() <= LOGLIK_TOLERANCE {
            return finish(series, beta, cur, iter);
        }
        if iter == MAX_ITERATIONS {
            break;
        }
        let chol = cur.info.clone().cholesky().ok_or_else(|| {
            if beta.iter().any(|b| b.abs() > 20.0) {
                Error::Separation("information matrix became singular while |beta| grew".into())
            } else {
                Error::Singular("GLM information matrix".into())
            }
        })?;
        let step = chol.solve(&cur.grad);
        let decrement = cur.grad.dot(&step);
        let bnorm = beta.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if step.amax() <= 1e-14 * (1.0 + bnorm) && gmax <= 1e-6 {
            // Newton step below rounding of beta: nothing left to gain.
            return finish(series, beta, cur, iter);
        }
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + scale * s).collect();
            let ev = evaluate(series, &trial);
            // Near the optimum log-likelihood changes fall below rounding;
            // a full step that shrinks the gradient is then taken as is.
            let polish = scale == 1.0 && decrement <= POLISH_DECREMENT && ev.grad.amax() < gmax;
            if ev.loglik.is_finite() && (ev.loglik >= cur.loglik || polish) {
                accepted = Some((trial, ev));
                break;
            }
            scale *= 0.5;
        }
        let Some((trial, ev)) = accepted else {
            if decrement <= POLISH_DECREMENT {
                return finish(series, beta, cur, iter);
            }
            return Err(Error::Convergence {
                iterations: iter,
                last: beta,
            });
        };
        if trial.iter().any(|b| b.abs() > SEPARATION_BOUND) {
            return Err(Error::Separation(format!(
                "|beta| exceeded {SEPARATION_BOUND} at iteration {}",
                iter + 1
            )));
        }
        prev_loglik = cur.loglik;
        beta = trial;
        cur = ev;
    }
    Err(Error::Convergence {
        iterations: MAX_ITERATIONS,
        last: beta,
    })
}

fn finish(series: &BinomialSeries, beta: Vec<f64>, ev: Evaluation, iterations: usize) -> Result<GlmFit> {
    let saturated = ev
        .pi
        .iter()
        .any(|&p| p < SATURATED_PROBABILITY || 1.0 - p < SATURATED_PROBABILITY);
    if saturated {
        return Err(Error::Separation("fitted probabilities numerically 0 or 1".into()));
    }
    debug_assert_eq!(ev.pi.len(), series.n());
    Ok(GlmFit {
        beta_hat: beta,
        w: ev.w,
        pi: ev.pi,
        sigma2: ev.sigma2,
        loglik: ev.loglik,
        info: ev.info,
        converged: true,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intercept_series(y: Vec<u32>, m: Vec<u32>) -> BinomialSeries {
        let n = y.len();
        BinomialSeries::new(y, m, DMatrix::from_element(n, 1, 1.0)).unwrap()
    }

    #[test]
    fn intercept_only_mle_is_logit_of_proportion() {
        let s = intercept_series(vec![1, 1, 0, 1], vec![1; 4]);
        let fit = fit_glm(&s).unwrap();
        assert!((fit.beta_hat[0] - 3f64.ln()).abs() < 1e-12);
        assert!(fit.converged);
        assert!(fit.pi.iter().all(|&p| (p - 0.75).abs() < 1e-12));
    }

    #[test]
    fn all_zero_responses_are_separated() {
        let s = intercept_series(vec![0; 4], vec![1; 4]);
        assert!(matches!(fit_glm(&s), Err(Error::Separation(_))));
        let s = intercept_series(vec![3; 5], vec![3; 5]);
        assert!(matches!(fit_glm(&s), Err(Error::Separation(_))));
    }

    #[test]
    fn complete_separation_by_regressor() {
        let x = DMatrix::from_row_slice(6, 2, &[1., -3., 1., -2., 1., -1., 1., 1., 1., 2., 1., 3.]);
        let s = BinomialSeries::new(vec![0, 0, 0, 1, 1, 1], vec![1; 6], x).unwrap();
        assert!(matches!(fit_glm(&s), Err(Error::Separation(_))));
    }

    #[test]
    fn loglik_hand_values() {
        let s = intercept_series(vec![1, 0], vec![1, 1]);
        assert!((loglik_at(&s, &[0.0]) - 2.0 * 0.5f64.ln()).abs() < 1e-12);
        let s = intercept_series(vec![2, 0], vec![2, 2]);
        assert!((loglik_at(&s, &[0.0]) - 4.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn score_identity_at_optimum() {
        let x = DMatrix::from_fn(30, 2, |t, k| if k == 0 { 1.0 } else { (t as f64 / 7.0).sin() });
        let y: Vec<u32> = (0..30).map(|t| ((t * 7 + 3) % 4) as u32).collect();
        let s = BinomialSeries::new(y, vec![3; 30], x).unwrap();
        let fit = fit_glm(&s).unwrap();
        let u = fit.identity_residuals(&s);
        for k in 0..2 {
            let g: f64 = (0..30).map(|t| u[t] * s.x()[(t, k)]).sum();
            assert!(g.abs() / 30f64.sqrt() < 1e-8);
        }
        assert!((fit.loglik - loglik_at(&s, &fit.beta_hat)).abs() < 1e-10);
        assert_eq!(fit.std_errors().unwrap().len(), 2);
    }
}
