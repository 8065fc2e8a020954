//! Score tests against GLARMA alternatives.
//!
//! For a fixed nuisance value `omega` the score for `psi` at the null fit is
//!
//! ```text
//! S_l = n^{-1/2} sum_t u_t F_{t - a_l},   F_s = e_s + sum_k omega_k F_{s - k}
//! ```
//!
//! where `u_t = y_t - m_t pi_t`, `e_t = sigma_t^{-gamma} u_t`, `a_l` runs over
//! `J_phi ∪ J_theta` and `k` over `J_phi ∩ J_theta`. `F` expands to the
//! tau-weighted sum of lagged residuals. The information matrix is the exact
//! finite-sample covariance of `S` under the null with zero pre-sample values:
//! `I[l, m] = n^{-1} sum_t sigma_t^2 Cov(F_{t-a_l}, F_{t-a_m})`.

mod davies;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{BinomialSeries, Family, ModelSpec, Residuals};
use crate::error::{Error, Result};
use crate::glarma::check_nuisance;
use crate::glm::GlmFit;
use crate::numeric::psd_quadratic_form;
use crate::result::{argmax, product_grid, Method, PValueKind, ProfilePoint, TestResult};

pub use davies::{davies_quantile, davies_tail_bound, QUANTILE_BRACKET, QUANTILE_TOLERANCE};

const MAX_GRID_POINTS: usize = 1_000_000;

/// Evenly spaced nuisance values `lower, lower + step, ..., upper`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuisanceGrid {
    pub lower: f64,
    pub upper: f64,
    pub step: f64,
    pub points: Vec<f64>,
}

impl NuisanceGrid {
    pub fn new(lower: f64, upper: f64, step: f64) -> Result<Self> {
        if !(lower > -1.0 && lower <= upper && upper < 1.0) {
            return Err(Error::Parameter(format!(
                "grid bounds [{lower}, {upper}] must satisfy -1 < lower <= upper < 1"
            )));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Parameter(format!("grid step {step} must be positive")));
        }
        let count = ((upper - lower) / step + 1e-9).floor();
        if count >= MAX_GRID_POINTS as f64 {
            return Err(Error::Parameter("grid has too many points".into()));
        }
        let points = (0..=count as usize)
            .map(|k| ((lower + k as f64 * step) * 1e12).round() / 1e12)
            .collect();
        Ok(Self {
            lower,
            upper,
            step,
            points,
        })
    }

    pub fn single(omega: f64) -> Result<Self> {
        Self::new(omega, omega, 1.0)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for NuisanceGrid {
    /// `-0.9(0.1)0.9`.
    fn default() -> Self {
        Self::new(-0.9, 0.9, 0.1).expect("valid default grid")
    }
}

impl FromStr for NuisanceGrid {
    type Err = Error;

    /// Parses `lower:upper:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parameter(format!("grid '{s}' is not lower:upper:step")));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parameter(format!("'{t}' is not a number")))
        };
        Self::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

impl fmt::Display for NuisanceGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lower, self.upper, self.step)
    }
}

/// Null-fit quantities reused across nuisance values.
#[derive(Debug, Clone)]
pub struct GlarmaScore {
    n: usize,
    union: Vec<usize>,
    overlap: Vec<usize>,
    residuals: Residuals,
    /// `y_t - m_t pi_t`.
    u: Vec<f64>,
    /// `sigma_t^{-gamma} u_t`.
    e: Vec<f64>,
    sigma2: Vec<f64>,
    /// `Var(e_t) = sigma_t^{2 - 2 gamma}`.
    var_e: Vec<f64>,
}

impl GlarmaScore {
    pub fn new(series: &BinomialSeries, glm: &GlmFit, spec: &ModelSpec) -> Result<Self> {
        spec.require_family(Family::Glarma)?;
        spec.require_dependence()?;
        if glm.n() != series.n() {
            return Err(Error::Parameter("GLM fit does not belong to this series".into()));
        }
        let part = spec.partition();
        let kind = spec.residuals();
        let u = glm.identity_residuals(series);
        let e = glm.residuals(series, kind);
        let var_e = glm.sigma2.iter().map(|&s2| kind.variance(s2)).collect();
        Ok(Self {
            n: series.n(),
            union: part.union,
            overlap: part.overlap,
            residuals: kind,
            u,
            e,
            sigma2: glm.sigma2.clone(),
            var_e,
        })
    }

    pub fn df(&self) -> usize {
        self.union.len()
    }

    pub fn overlap(&self) -> &[usize] {
        &self.overlap
    }

    pub fn residuals(&self) -> Residuals {
        self.residuals
    }

    /// `F_s = e_s + sum_k omega_k F_{s-k}`, zero before the sample.
    fn filtered(&self, omega: &[f64]) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.n);
        for s in 0..self.n {
            let mut v = self.e[s];
            for (&j, &w) in self.overlap.iter().zip(omega) {
                if j <= s {
                    v += w * f[s - j];
                }
            }
            f.push(v);
        }
        f
    }

    pub fn score_vector(&self, omega: &[f64]) -> Result<DVector<f64>> {
        check_nuisance(&self.overlap, omega)?;
        let f = self.filtered(omega);
        let scale = 1.0 / (self.n as f64).sqrt();
        Ok(DVector::from_iterator(
            self.union.len(),
            self.union
                .iter()
                .map(|&a| (a..self.n).map(|t| self.u[t] * f[t - a]).sum::<f64>() * scale),
        ))
    }

    pub fn info_matrix(&self, omega: &[f64]) -> Result<DMatrix<f64>> {
        check_nuisance(&self.overlap, omega)?;
        let n = self.n;
        let l = self.union.len();
        let spread = self.union.last().unwrap() - self.union[0];
        let kmax = self.overlap.last().copied().unwrap_or(0);
        let width = spread.max(kmax) + 1;
        // g[s * width + d] = Cov(F_s, F_{s-d}), zero when s - d < 0.
        let mut g = vec![0.0; n * width];
        for s in 0..n {
            for d in 1..width.min(s + 1) {
                let mut c = 0.0;
                for (&j, &w) in self.overlap.iter().zip(omega) {
                    if j <= d {
                        if j <= s {
                            c += w * g[(s - j) * width + (d - j)];
                        }
                    } else {
                        c += w * g[(s - d) * width + (j - d)];
                    }
                }
                g[s * width + d] = c;
            }
            let mut v = self.var_e[s];
            for (&j, &w) in self.overlap.iter().zip(omega) {
                if j <= s {
                    v += w * g[s * width + j];
                }
            }
            g[s * width] = v;
        }
        let mut info = DMatrix::zeros(l, l);
        for a in 0..l {
            for b in 0..=a {
                let (hi, lo) = (self.union[a], self.union[b]);
                let d = hi - lo;
                let sum: f64 = (hi..n).map(|t| self.sigma2[t] * g[(t - lo) * width + d]).sum();
                info[(a, b)] = sum / n as f64;
                info[(b, a)] = info[(a, b)];
            }
        }
        Ok(info)
    }

    /// `Q(omega) = S' I^{-1} S`, with a flag set when a pseudo-inverse was needed.
    pub fn statistic(&self, omega: &[f64]) -> Result<(f64, bool)> {
        let s = self.score_vector(omega)?;
        let info = self.info_matrix(omega)?;
        let (q, pinv) = psd_quadratic_form(&info, &s)?;
        Ok((q.max(0.0), pinv))
    }
}

pub fn score_vector(series: &BinomialSeries, glm: &GlmFit, spec: &ModelSpec, omega: &[f64]) -> Result<DVector<f64>> {
    GlarmaScore::new(series, glm, spec)?.score_vector(omega)
}

pub fn info_matrix(series: &BinomialSeries, glm: &GlmFit, spec: &ModelSpec, omega: &[f64]) -> Result<DMatrix<f64>> {
    GlarmaScore::new(series, glm, spec)?.info_matrix(omega)
}

/// Score statistic at a fixed nuisance value; chi-square(L) p-value.
pub fn score_stat(series: &BinomialSeries, glm: &GlmFit, spec: &ModelSpec, omega: &[f64]) -> Result<TestResult> {
    let ctx = GlarmaScore::new(series, glm, spec)?;
    let (q, pinv) = ctx.statistic(omega)?;
    let mut res = TestResult::new(Method::ScoreGlarma, q, ctx.df()).with_chi2_p();
    res.omega = Some(omega.to_vec());
    if pinv {
        res.warnings
            .push("information matrix near singular; pseudo-inverse used".into());
    }
    Ok(res)
}

/// Autocorrelation form of the statistic at `omega = 0`:
/// `sum_l n C(l)^2 / B(l)` with
/// `C(l) = n^{-1} sum_{t > j_l} sigma_{t-j_l}^{-gamma} u_t u_{t-j_l}` and
/// `B(l) = n^{-1} sum_{t > j_l} sigma_t^2 sigma_{t-j_l}^{2(1-gamma)}`.
pub fn score_stat_at_zero(series: &BinomialSeries, glm: &GlmFit, spec: &ModelSpec) -> Result<f64> {
    spec.require_family(Family::Glarma)?;
    spec.require_dependence()?;
    let n = series.n();
    let kind = spec.residuals();
    let u = glm.identity_residuals(series);
    let s2 = &glm.sigma2;
    let mut q = 0.0;
    for &j in &spec.partition().union {
        let c: f64 = (j..n).map(|t| kind.scale(s2[t - j]) * u[t] * u[t - j]).sum::<f64>() / n as f64;
        let b: f64 = (j..n).map(|t| s2[t] * kind.variance(s2[t - j])).sum::<f64>() / n as f64;
        if b <= 0.0 {
            return Err(Error::Singular(format!("B({j}) is zero")));
        }
        q += n as f64 * c * c / b;
    }
    Ok(q)
}

/// Supremum of the score statistic over the nuisance grid.
///
/// With more than one overlapping lag the grid is swept over every
/// coordinate and points violating the root condition are skipped. The
/// Davies bound is reported as a conservative p-value only for a single
/// tested lag that is also the single overlapping lag with Pearson
/// residuals; otherwise the p-value is left empty and must be calibrated
/// by simulation.
pub fn sup_score(series: &BinomialSeries, glm: &GlmFit, spec: &ModelSpec, grid: &NuisanceGrid) -> Result<TestResult> {
    let ctx = GlarmaScore::new(series, glm, spec)?;
    sup_score_with(&ctx, grid)
}

pub fn sup_score_with(ctx: &GlarmaScore, grid: &NuisanceGrid) -> Result<TestResult> {
    if ctx.overlap().is_empty() {
        return Err(Error::Parameter(
            "no overlapping AR/MA lags: there is no nuisance parameter, use the score test at omega = 0".into(),
        ));
    }
    let points = product_grid(&grid.points, ctx.overlap().len());
    let evals: Vec<(Option<f64>, bool)> = points
        .par_iter()
        .map(|w| match ctx.statistic(w) {
            Ok((q, pinv)) => (Some(q), pinv),
            Err(_) => (None, false),
        })
        .collect();
    let values: Vec<Option<f64>> = evals.iter().map(|(v, _)| *v).collect();
    let best = argmax(&values).ok_or_else(|| Error::numeric(None, "score statistic failed at every grid point"))?;
    let mut res = TestResult::new(Method::SupScoreGlarma, values[best].unwrap(), ctx.df());
    res.omega_argmax = Some(points[best].clone());
    let failed = values.iter().filter(|v| v.is_none()).count();
    if failed > 0 {
        res.warnings
            .push(format!("{failed} of {} grid points skipped", points.len()));
    }
    let pinv = evals.iter().filter(|(_, p)| *p).count();
    if pinv > 0 {
        res.warnings.push(format!("pseudo-inverse used at {pinv} grid points"));
    }
    if ctx.df() == 1 && ctx.overlap().len() == 1 && ctx.residuals() == Residuals::Pearson {
        res.p_value = Some(davies_tail_bound(res.statistic, grid.lower, grid.upper)?);
        res.p_value_kind = Some(PValueKind::DaviesBound);
    } else {
        res.warnings
            .push("no analytic null distribution for this supremum; calibrate by simulation".into());
    }
    res.profile = Some(
        points
            .into_iter()
            .zip(values)
            .map(|(omega, statistic)| ProfilePoint { omega, statistic })
            .collect(),
    );
    Ok(res)
}
