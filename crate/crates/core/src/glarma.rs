//! GLARMA state recursion, conditional likelihood with exact derivatives,
//! Newton maximum likelihood at a fixed nuisance value, and simulation.
//!
//! The dependence term is written in the reparametrized form
//!
//! ```text
//! Z_t = sum_{j in overlap} omega_j Z_{t-j}
//!     + sum_{j in AR-only} psi_j Z_{t-j}
//!     + sum_{j in union}   psi_j e_{t-j}
//! ```
//!
//! where `overlap = J_phi ∩ J_theta`, `union = J_phi ∪ J_theta`, and
//! `psi = 0` is the hypothesis of no serial dependence. `psi` is ordered by
//! ascending lag over the union; `omega` by ascending lag over the overlap.
//! All pre-sample values (`Z`, `e` and their derivatives) are zero.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::dataset::{BinomialSeries, Family, ModelSpec, Residuals};
use crate::error::{Error, Result};
use crate::glm::{fit_glm, GlmFit};
use crate::numeric::{ar_root_moduli, ln_binomial, log1p_exp, logistic_pair};
use crate::rng::binomial;

pub const MAX_ITERATIONS: usize = 200;
const MAX_HALVINGS: usize = 30;
/// Newton decrement `g' (-H)^{-1} g` below which the fit has converged.
const DECREMENT_TOLERANCE: f64 = 1e-12;

/// Regression, tested dependence and nuisance coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlarmaParams {
    pub beta: Vec<f64>,
    /// One entry per lag of `J_phi ∪ J_theta`, ascending.
    pub psi: Vec<f64>,
    /// One entry per lag of `J_phi ∩ J_theta`, ascending.
    pub omega: Vec<f64>,
}

impl GlarmaParams {
    /// `psi = 0` with the given regression and nuisance values.
    pub fn null(beta: Vec<f64>, spec: &ModelSpec, omega: Vec<f64>) -> Self {
        let psi = vec![0.0; spec.psi_len()];
        Self { beta, psi, omega }
    }

    /// Builds the reparametrized values from `(phi, theta)` aligned with the spec's lag sets.
    pub fn from_phi_theta(beta: Vec<f64>, phi: &[f64], theta: &[f64], spec: &ModelSpec) -> Self {
        let part = spec.partition();
        let coef =
            |lags: &[usize], vals: &[f64], j: usize| lags.iter().position(|&l| l == j).map(|k| vals[k]).unwrap_or(0.0);
        let psi = part
            .union
            .iter()
            .map(|&j| coef(spec.j_phi(), phi, j) + coef(spec.j_theta(), theta, j))
            .collect();
        let omega = part.overlap.iter().map(|&j| coef(spec.j_phi(), phi, j)).collect();
        Self { beta, psi, omega }
    }

    /// `(phi, theta)` aligned with `spec.j_phi()` and `spec.j_theta()`.
    pub fn to_phi_theta(&self, spec: &ModelSpec) -> (Vec<f64>, Vec<f64>) {
        let part = spec.partition();
        let psi_at = |j: usize| self.psi[part.union.iter().position(|&l| l == j).unwrap()];
        let omega_at = |j: usize| part.overlap.iter().position(|&l| l == j).map(|k| self.omega[k]);
        let phi = spec
            .j_phi()
            .iter()
            .map(|&j| omega_at(j).unwrap_or_else(|| psi_at(j)))
            .collect();
        let theta = spec
            .j_theta()
            .iter()
            .map(|&j| psi_at(j) - omega_at(j).unwrap_or(0.0))
            .collect();
        (phi, theta)
    }

    /// Root moduli of the full autoregressive polynomial `1 - sum_j phi_j z^j`.
    pub fn ar_root_moduli(&self, spec: &ModelSpec) -> Vec<f64> {
        let (phi, _) = self.to_phi_theta(spec);
        let coef: Vec<(usize, f64)> = spec.j_phi().iter().copied().zip(phi).collect();
        ar_root_moduli(&coef)
    }

    pub(crate) fn check(&self, r: usize, spec: &ModelSpec) -> Result<()> {
        let part = spec.partition();
        if self.beta.len() != r {
            return Err(Error::Parameter(format!(
                "beta has length {}, regressors have {r} columns",
                self.beta.len()
            )));
        }
        if self.psi.len() != part.psi_len {
            return Err(Error::Parameter(format!(
                "psi has length {}, expected {}",
                self.psi.len(),
                part.psi_len
            )));
        }
        check_nuisance(&part.overlap, &self.omega)?;
        if self.beta.iter().chain(&self.psi).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite parameter value".into()));
        }
        Ok(())
    }
}

/// Rejects nuisance values whose lag polynomial `1 - sum omega_j z^j` has a
/// root on or inside the unit circle.
pub fn check_nuisance(overlap: &[usize], omega: &[f64]) -> Result<()> {
    if omega.len() != overlap.len() {
        return Err(Error::Parameter(format!(
            "omega has length {}, expected {} (one per overlapping lag)",
            omega.len(),
            overlap.len()
        )));
    }
    if omega.iter().any(|w| !w.is_finite()) {
        return Err(Error::Parameter("non-finite omega".into()));
    }
    let coef: Vec<(usize, f64)> = overlap.iter().copied().zip(omega.iter().copied()).collect();
    if let Some(m) = ar_root_moduli(&coef).into_iter().find(|&m| m <= 1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "omega = {omega:?} has a lag-polynomial root of modulus {m:.6} (must exceed 1)"
        )));
    }
    Ok(())
}

/// Power-series coefficients of `(1 - sum_j omega_j z^j)^{-1}` up to `z^k_max`.
pub fn tau_coefficients(lags: &[usize], omega: &[f64], k_max: usize) -> Result<Vec<f64>> {
    check_nuisance(lags, omega)?;
    let mut tau = vec![0.0; k_max + 1];
    tau[0] = 1.0;
    for k in 1..=k_max {
        tau[k] = lags
            .iter()
            .zip(omega)
            .filter(|(&j, _)| j <= k)
            .map(|(&j, &w)| w * tau[k - j])
            .sum();
    }
    Ok(tau)
}

/// Filtered quantities along the series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlarmaState {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub e: Vec<f64>,
    pub pi: Vec<f64>,
    pub sigma2: Vec<f64>,
}

/// Recursion coefficients resolved from a spec and a parameter value.
struct Layout {
    r: usize,
    /// (lag, coefficient) multiplying past Z.
    z_terms: Vec<(usize, f64)>,
    /// (lag, psi index) for AR-only lags, whose psi multiplies past Z.
    ar_only: Vec<(usize, usize)>,
    /// (lag, psi index) for every union lag, whose psi multiplies past e.
    e_terms: Vec<(usize, usize)>,
    residuals: Residuals,
}

impl Layout {
    fn new(spec: &ModelSpec, params: &GlarmaParams) -> Self {
        let part = spec.partition();
        let mut z_terms: Vec<(usize, f64)> = part.overlap.iter().copied().zip(params.omega.iter().copied()).collect();
        let mut ar_only = Vec::new();
        for (k, &j) in part.union.iter().enumerate() {
            if spec.j_phi().contains(&j) && !part.overlap.contains(&j) {
                z_terms.push((j, params.psi[k]));
                ar_only.push((j, k));
            }
        }
        let e_terms = part.union.iter().copied().enumerate().map(|(k, j)| (j, k)).collect();
        Self {
            r: params.beta.len(),
            z_terms,
            ar_only,
            e_terms,
            residuals: spec.residuals(),
        }
    }
}

/// Runs the filter forward over `t = 1..n` from zero pre-sample values.
pub fn recurse_state(series: &BinomialSeries, params: &GlarmaParams, spec: &ModelSpec) -> Result<GlarmaState> {
    spec.require_family(Family::Glarma)?;
    params.check(series.r(), spec)?;
    let layout = Layout::new(spec, params);
    let xb = series.linear_predictor(&params.beta);
    let n = series.n();
    let mut st = GlarmaState {
        z: Vec::with_capacity(n),
        w: Vec::with_capacity(n),
        e: Vec::with_capacity(n),
        pi: Vec::with_capacity(n),
        sigma2: Vec::with_capacity(n),
    };
    for t in 0..n {
        let z = state_z(&layout, &params.psi, &st.z, &st.e, t);
        let w = xb[t] + z;
        let (p, q) = logistic_pair(w);
        let m = series.m()[t] as f64;
        let s2 = m * p * q;
        let e = layout.residuals.scale(s2) * (series.y()[t] as f64 - m * p);
        if !(w.is_finite() && s2 > 0.0 && e.is_finite()) {
            return Err(Error::numeric(Some(t + 1), "non-finite GLARMA state"));
        }
        st.z.push(z);
        st.w.push(w);
        st.e.push(e);
        st.pi.push(p);
        st.sigma2.push(s2);
    }
    Ok(st)
}

#[inline]
fn state_z(layout: &Layout, psi: &[f64], z: &[f64], e: &[f64], t: usize) -> f64 {
    let mut acc = 0.0;
    for &(j, c) in &layout.z_terms {
        if j <= t {
            acc += c * z[t - j];
        }
    }
    for &(j, k) in &layout.e_terms {
        if j <= t {
            acc += psi[k] * e[t - j];
        }
    }
    acc
}

/// Conditional log-likelihood, including the binomial-coefficient terms.
pub fn loglik(series: &BinomialSeries, params: &GlarmaParams, spec: &ModelSpec) -> Result<f64> {
    let st = recurse_state(series, params, spec)?;
    Ok(loglik_from_state(series, &st))
}

fn loglik_from_state(series: &BinomialSeries, st: &GlarmaState) -> f64 {
    st.w.iter()
        .zip(series.y().iter().zip(series.m()))
        .map(|(&w, (&y, &m))| y as f64 * w - m as f64 * log1p_exp(w) + ln_binomial(m, y))
        .sum()
}

/// Log-likelihood with gradient and Hessian over `(beta, psi)` at fixed `omega`.
#[derive(Debug, Clone)]
pub struct LikelihoodDerivatives {
    pub loglik: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

/// First and second derivatives of `e_t` with respect to `W_t`.
#[inline]
fn residual_derivatives(kind: Residuals, y: f64, m: f64, p: f64, q: f64) -> (f64, f64, f64) {
    let s2 = m * p * q;
    let u = y - m * p;
    let g = kind.gamma() as f64;
    let s = kind.scale(s2);
    let d = q - p; // 1 - 2 pi
    let du = -s2;
    let d2u = -s2 * d;
    let ds = -0.5 * g * d * s;
    let d2s = 0.5 * g * s * (2.0 * p * q + 0.5 * g * d * d);
    (s * u, ds * u + s * du, d2s * u + 2.0 * ds * du + s * d2u)
}

/// Exact derivatives by forward recursion of `dZ_t` and `d2Z_t`.
pub fn loglik_and_derivs(
    series: &BinomialSeries,
    params: &GlarmaParams,
    spec: &ModelSpec,
) -> Result<LikelihoodDerivatives> {
    spec.require_family(Family::Glarma)?;
    params.check(series.r(), spec)?;
    let layout = Layout::new(spec, params);
    let (n, r) = (series.n(), layout.r);
    let p = r + params.psi.len();
    let pp = p * p;
    let x = series.x();
    let xb = series.linear_predictor(&params.beta);

    let mut z = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut dz = vec![0.0; n * p];
    let mut de = vec![0.0; n * p];
    let mut d2z = vec![0.0; n * pp];
    let mut d2e = vec![0.0; n * pp];

    let mut ll = 0.0;
    let mut grad: DVector<f64> = DVector::zeros(p);
    let mut hess: DMatrix<f64> = DMatrix::zeros(p, p);
    let mut dw = vec![0.0; p];

    for t in 0..n {
        let (cur_dz, past_dz) = {
            let (past, rest) = dz.split_at_mut(t * p);
            (&mut rest[..p], past)
        };
        let (cur_d2z, past_d2z) = {
            let (past, rest) = d2z.split_at_mut(t * pp);
            (&mut rest[..pp], past)
        };
        let mut zt = 0.0;
        for &(j, c) in &layout.z_terms {
            if j <= t {
                let s = t - j;
                zt += c * z[s];
                for a in 0..p {
                    cur_dz[a] += c * past_dz[s * p + a];
                }
                for ab in 0..pp {
                    cur_d2z[ab] += c * past_d2z[s * pp + ab];
                }
            }
        }
        for &(j, k) in &layout.ar_only {
            if j <= t {
                let s = t - j;
                let col = r + k;
                cur_dz[col] += z[s];
                for a in 0..p {
                    let v = past_dz[s * p + a];
                    cur_d2z[col * p + a] += v;
                    cur_d2z[a * p + col] += v;
                }
            }
        }
        for &(j, k) in &layout.e_terms {
            if j <= t {
                let s = t - j;
                let col = r + k;
                let psi = params.psi[k];
                zt += psi * e[s];
                cur_dz[col] += e[s];
                for a in 0..p {
                    cur_dz[a] += psi * de[s * p + a];
                    let v = de[s * p + a];
                    cur_d2z[col * p + a] += v;
                    cur_d2z[a * p + col] += v;
                }
                for ab in 0..pp {
                    cur_d2z[ab] += psi * d2e[s * pp + ab];
                }
            }
        }
        z[t] = zt;

        let w = xb[t] + zt;
        let (pr, qr) = logistic_pair(w);
        let (y, m) = (series.y()[t] as f64, series.m()[t] as f64);
        let s2 = m * pr * qr;
        let u = y - m * pr;
        let (et, d1, d2) = residual_derivatives(layout.residuals, y, m, pr, qr);
        if !(w.is_finite() && s2 > 0.0 && et.is_finite() && d1.is_finite() && d2.is_finite()) {
            return Err(Error::numeric(Some(t + 1), "non-finite GLARMA state"));
        }
        e[t] = et;

        for a in 0..p {
            dw[a] = cur_dz[a] + if a < r { x[(t, a)] } else { 0.0 };
        }
        ll += y * w - m * log1p_exp(w) + ln_binomial(series.m()[t], series.y()[t]);
        for a in 0..p {
            grad[a] += u * dw[a];
            de[t * p + a] = d1 * dw[a];
        }
        for a in 0..p {
            for b in 0..p {
                let d2w = cur_d2z[a * p + b];
                hess[(a, b)] += -s2 * dw[a] * dw[b] + u * d2w;
                d2e[t * pp + a * p + b] = d2 * dw[a] * dw[b] + d1 * d2w;
            }
        }
    }
    if !ll.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::numeric(None, "non-finite likelihood derivatives"));
    }
    // Symmetrize away rounding differences between (a,b) and (b,a).
    let hess = (&hess + hess.transpose()) * 0.5;
    Ok(LikelihoodDerivatives { loglik: ll, grad, hess })
}

/// Maximum-likelihood fit over `(beta, psi)` with `omega` held fixed.
#[derive(Debug, Clone, Serialize)]
pub struct GlarmaFit {
    pub params: GlarmaParams,
    pub loglik: f64,
    /// Inverse observed information over `(beta, psi)`.
    pub cov: DMatrix<f64>,
    pub iterations: usize,
    /// Root moduli of the fitted autoregressive polynomial (diagnostic only).
    pub ar_root_moduli: Vec<f64>,
}

impl GlarmaFit {
    /// Marginal covariance block of `psi_hat`.
    pub fn psi_cov(&self) -> DMatrix<f64> {
        let r = self.params.beta.len();
        let l = self.params.psi.len();
        self.cov.view((r, r), (l, l)).into_owned()
    }

    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.cov.nrows())
            .map(|k| self.cov[(k, k)].max(0.0).sqrt())
            .collect()
    }
}

/// Newton-Raphson with step-halving, starting from `init` or from the GLM
/// estimate with `psi = 0`.
///
/// Where the Hessian is not negative definite the step is regularized
/// (Levenberg style) until it is an ascent direction; convergence is only
/// declared at a point with negative definite Hessian.
pub fn fit_glarma(
    series: &BinomialSeries,
    spec: &ModelSpec,
    omega_fixed: &[f64],
    init: Option<&GlarmaParams>,
) -> Result<GlarmaFit> {
    spec.require_family(Family::Glarma)?;
    spec.require_dependence()?;
    let part = spec.partition();
    check_nuisance(&part.overlap, omega_fixed)?;
    let mut params = match init {
        Some(p) => GlarmaParams {
            beta: p.beta.clone(),
            psi: p.psi.clone(),
            omega: omega_fixed.to_vec(),
        },
        None => {
            let glm = fit_glm(series)?;
            GlarmaParams::null(glm.beta_hat, spec, omega_fixed.to_vec())
        }
    };
    fit_from(series, spec, &mut params)
}

/// Same as [`fit_glarma`] with the GLM fit already in hand.
pub fn fit_glarma_from_glm(
    series: &BinomialSeries,
    spec: &ModelSpec,
    omega_fixed: &[f64],
    glm: &GlmFit,
) -> Result<GlarmaFit> {
    let init = GlarmaParams::null(glm.beta_hat.clone(), spec, omega_fixed.to_vec());
    fit_glarma(series, spec, omega_fixed, Some(&init))
}

fn fit_from(series: &BinomialSeries, spec: &ModelSpec, params: &mut GlarmaParams) -> Result<GlarmaFit> {
    let r = series.r();
    let flat = |p: &GlarmaParams| -> Vec<f64> { p.beta.iter().chain(&p.psi).copied().collect() };
    let unflat = |v: &[f64], omega: &[f64]| GlarmaParams {
        beta: v[..r].to_vec(),
        psi: v[r..].to_vec(),
        omega: omega.to_vec(),
    };
    let omega = params.omega.clone();
    let mut ev = loglik_and_derivs(series, params, spec)?;
    for iter in 0..=MAX_ITERATIONS {
        let neg_h = -&ev.hess;
        let plain = neg_h.clone().cholesky();
        let regular = plain.is_some();
        let chol = match plain {
            Some(c) => c,
            None => regularized_cholesky(&neg_h)?,
        };
        let step = chol.solve(&ev.grad);
        let decrement = ev.grad.dot(&step);
        if regular && decrement <= DECREMENT_TOLERANCE {
            return finish(series, spec, params.clone(), ev, iter);
        }
        if iter == MAX_ITERATIONS {
            break;
        }
        let theta = flat(params);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, s)| a + scale * s).collect();
            let tp = unflat(&trial, &omega);
            if let Ok(tev) = loglik_and_derivs(series, &tp, spec) {
                if tev.loglik >= ev.loglik {
                    accepted = Some((tp, tev));
                    break;
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some((tp, tev)) => {
                *params = tp;
                ev = tev;
            }
            None if regular && decrement <= 1e-8 => {
                return finish(series, spec, params.clone(), ev, iter);
            }
            None => {
                return Err(Error::Convergence {
                    iterations: iter,
                    last: theta,
                })
            }
        }
    }
    Err(Error::Convergence {
        iterations: MAX_ITERATIONS,
        last: flat(params),
    })
}

fn regularized_cholesky(neg_h: &DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let p = neg_h.nrows();
    let scale = (0..p).map(|k| neg_h[(k, k)].abs()).fold(1.0f64, f64::max);
    let mut lambda = 1e-8 * scale;
    while lambda < 1e20 * scale {
        let shifted = neg_h + DMatrix::identity(p, p) * lambda;
        if let Some(c) = shifted.cholesky() {
            return Ok(c);
        }
        lambda *= 10.0;
    }
    Err(Error::Singular("GLARMA Hessian could not be regularized".into()))
}

fn finish(
    series: &BinomialSeries,
    spec: &ModelSpec,
    params: GlarmaParams,
    ev: LikelihoodDerivatives,
    iterations: usize,
) -> Result<GlarmaFit> {
    let cov = (-&ev.hess)
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Singular("observed information at the GLARMA estimate".into()))?;
    debug_assert_eq!(cov.nrows(), series.r() + params.psi.len());
    let ar_root_moduli = params.ar_root_moduli(spec);
    Ok(GlarmaFit {
        params,
        loglik: ev.loglik,
        cov,
        iterations,
        ar_root_moduli,
    })
}

/// Forward-simulates responses from the GLARMA model using the trials and
/// regressors of `template` (its responses are ignored).
pub fn simulate_glarma<R: Rng + ?Sized>(
    template: &BinomialSeries,
    params: &GlarmaParams,
    spec: &ModelSpec,
    rng: &mut R,
) -> Result<BinomialSeries> {
    spec.require_family(Family::Glarma)?;
    params.check(template.r(), spec)?;
    let layout = Layout::new(spec, params);
    let xb = template.linear_predictor(&params.beta);
    let n = template.n();
    let mut z = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for t in 0..n {
        let zt = state_z(&layout, &params.psi, &z, &e, t);
        let (p, q) = logistic_pair(xb[t] + zt);
        let m = template.m()[t];
        let s2 = m as f64 * p * q;
        let yt = binomial(rng, m, p);
        let et = layout.residuals.scale(s2) * (yt as f64 - m as f64 * p);
        if !et.is_finite() {
            return Err(Error::numeric(Some(t + 1), "simulated residual is not finite"));
        }
        z.push(zt);
        e.push(et);
        y.push(yt);
    }
    template.with_responses(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::loglik_at;
    use crate::rng::stream_rng;

    fn fixture(n: usize) -> BinomialSeries {
        let x = DMatrix::from_fn(n, 2, |t, k| if k == 0 { 1.0 } else { (t as f64 * 0.37).cos() });
        let y: Vec<u32> = (0..n).map(|t| ((t * 5 + t / 3) % 3) as u32).collect();
        BinomialSeries::new(y, vec![2; n], x).unwrap()
    }

    #[test]
    fn null_state_reduces_to_regression() {
        let s = fixture(12);
        let spec = ModelSpec::glarma(vec![1, 2], vec![1], Residuals::Pearson).unwrap();
        let p = GlarmaParams::null(vec![0.2, -0.4], &spec, vec![0.6]);
        let st = recurse_state(&s, &p, &spec).unwrap();
        assert!(st.z.iter().all(|&z| z == 0.0));
        let xb = s.linear_predictor(&p.beta);
        assert_eq!(st.w, xb);
        assert_eq!(loglik(&s, &p, &spec).unwrap(), loglik_at(&s, &p.beta));
    }

    #[test]
    fn three_point_hand_recursion() {
        let x = DMatrix::from_element(3, 1, 1.0);
        let s = BinomialSeries::new(vec![1, 0, 1], vec![1, 1, 1], x).unwrap();
        let spec = ModelSpec::glarma(vec![1], vec![1], Residuals::Pearson).unwrap();
        let p = GlarmaParams {
            beta: vec![0.0],
            psi: vec![0.5],
            omega: vec![0.0],
        };
        let st = recurse_state(&s, &p, &spec).unwrap();
        assert_eq!(st.z[0], 0.0);
        assert!((st.e[0] - 1.0).abs() < 1e-15);
        assert!((st.z[1] - 0.5).abs() < 1e-15);
        let pi2 = 1.0 / (1.0 + (-0.5f64).exp());
        assert!((st.pi[1] - pi2).abs() < 1e-15);
        let e2 = (0.0 - pi2) / (pi2 * (1.0 - pi2)).sqrt();
        assert!((st.z[2] - 0.5 * e2).abs() < 1e-15);
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau_coefficients(&[1], &[0.0], 3).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(tau_coefficients(&[1], &[0.5], 3).unwrap(), vec![1.0, 0.5, 0.25, 0.125]);
        let tau = tau_coefficients(&[1, 2], &[0.3, 0.2], 3).unwrap();
        for (a, b) in tau.iter().zip([1.0, 0.3, 0.29, 0.147]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(tau_coefficients(&[1], &[1.0], 3).is_err());
        assert!(tau_coefficients(&[1, 2], &[0.5, 0.6], 3).is_err());
    }

    #[test]
    fn phi_theta_round_trip() {
        let spec = ModelSpec::glarma(vec![1, 3], vec![1, 2], Residuals::Score).unwrap();
        let p = GlarmaParams::from_phi_theta(vec![0.1], &[0.4, -0.2], &[0.3, 0.05], &spec);
        assert_eq!(p.omega, vec![0.4]);
        for (a, b) in p.psi.iter().zip([0.7, 0.05, -0.2]) {
            assert!((a - b).abs() < 1e-15);
        }
        let (phi, theta) = p.to_phi_theta(&spec);
        assert!((phi[0] - 0.4).abs() < 1e-15 && (phi[1] + 0.2).abs() < 1e-15);
        assert!((theta[0] - 0.3).abs() < 1e-15 && (theta[1] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn fit_increases_likelihood_over_null() {
        let spec = ModelSpec::glarma(vec![1], vec![1], Residuals::Pearson).unwrap();
        let truth = GlarmaParams::null(vec![0.2, 0.8], &spec, vec![0.3]);
        let truth = GlarmaParams {
            psi: vec![0.4],
            ..truth
        };
        let s = simulate_glarma(&fixture(300), &truth, &spec, &mut stream_rng(11, 0)).unwrap();
        let glm = fit_glm(&s).unwrap();
        let fit = fit_glarma(&s, &spec, &[0.3], None).unwrap();
        assert!(fit.loglik >= glm.loglik - 1e-10);
        assert_eq!(fit.psi_cov().nrows(), 1);
        let ev = loglik_and_derivs(&s, &fit.params, &spec).unwrap();
        assert!(ev.grad.amax() < 1e-5);
    }

    #[test]
    fn rejects_nonstationary_nuisance() {
        let s = fixture(20);
        let spec = ModelSpec::glarma(vec![1], vec![1], Residuals::Pearson).unwrap();
        assert!(matches!(fit_glarma(&s, &spec, &[1.2], None), Err(Error::Parameter(_))));
        let barma = ModelSpec::barma(vec![1], vec![]).unwrap();
        assert!(fit_glarma(&s, &barma, &[], None).is_err());
    }

    #[test]
    fn simulation_under_null_is_deterministic() {
        let s = fixture(40);
        let spec = ModelSpec::glarma(vec![1], vec![1], Residuals::Pearson).unwrap();
        let p = GlarmaParams::null(vec![0.0, 1.0], &spec, vec![0.9]);
        let a = simulate_glarma(&s, &p, &spec, &mut stream_rng(5, 0)).unwrap();
        let b = simulate_glarma(&s, &p, &spec, &mut stream_rng(5, 0)).unwrap();
        assert_eq!(a, b);
        let alt = GlarmaParams { psi: vec![0.4], ..p };
        let c = simulate_glarma(&s, &alt, &spec, &mut stream_rng(5, 0)).unwrap();
        assert_eq!(c.n(), 40);
    }
}
