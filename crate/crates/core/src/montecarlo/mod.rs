//! Seeded null-distribution simulation.
//!
//! Replicate `k` draws from its own ChaCha20 stream `(seed, k)`, so results
//! depend only on the master seed and the replicate count, never on the
//! number of worker threads or on scheduling.

mod tables;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::BinomialSeries;
use crate::error::{Error, Result};
use crate::numeric::logistic;
use crate::rng::{binomial, stream_rng};

pub use crate::rng::DEFAULT_SEED;
pub use tables::{
    boat_race_design, court_design, recession_design, reproduce_table, trend_design, Report, ReportRow, TableId,
    REPORT_SCHEMA_VERSION,
};

/// Upper-tail probabilities reported by default.
pub const DEFAULT_PROBS: [f64; 4] = [0.10, 0.05, 0.025, 0.01];

/// Largest tolerated fraction of failed evaluations.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// How the design matrix is built.
#[derive(Debug, Clone, PartialEq)]
pub enum RegressorRecipe {
    /// `x_t = (1, t/n)` for `t = 1..n`.
    TimeTrend,
    Fixed(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Trials {
    Constant(u32),
    Varying(Vec<u32>),
}

/// Null data-generating design `y_t ~ B(m_t, logistic(x_t' beta0))`.
#[derive(Debug, Clone)]
pub struct SimDesign {
    template: BinomialSeries,
    beta0: Vec<f64>,
    pi: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
}

impl SimDesign {
    pub fn new(
        n: usize,
        m: Trials,
        beta0: Vec<f64>,
        regressors: RegressorRecipe,
        replications: usize,
        seed: u64,
    ) -> Result<Self> {
        let x = match regressors {
            RegressorRecipe::TimeTrend => {
                DMatrix::from_fn(n, 2, |t, k| if k == 0 { 1.0 } else { (t + 1) as f64 / n as f64 })
            }
            RegressorRecipe::Fixed(x) => x,
        };
        if x.nrows() != n {
            return Err(Error::Design(format!("design has {} rows, expected {n}", x.nrows())));
        }
        let m = match m {
            Trials::Constant(m) => vec![m; n],
            Trials::Varying(m) => m,
        };
        let template = BinomialSeries::new(vec![0; n], m, x)?;
        Self::from_template(template, beta0, replications, seed)
    }

    /// Uses the trials and regressors of an existing series.
    pub fn from_template(template: BinomialSeries, beta0: Vec<f64>, replications: usize, seed: u64) -> Result<Self> {
        if replications == 0 {
            return Err(Error::Parameter("replications must be at least 1".into()));
        }
        if beta0.len() != template.r() || beta0.iter().any(|b| !b.is_finite()) {
            return Err(Error::Parameter(format!(
                "beta0 must hold {} finite values",
                template.r()
            )));
        }
        let pi = template.linear_predictor(&beta0).into_iter().map(logistic).collect();
        Ok(Self {
            template,
            beta0,
            pi,
            replications,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.template.n()
    }

    pub fn beta0(&self) -> &[f64] {
        &self.beta0
    }

    /// Null success probabilities.
    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn template(&self) -> &BinomialSeries {
        &self.template
    }
}

/// Replicate `index` of the design.
pub fn simulate_null(design: &SimDesign, index: u64) -> BinomialSeries {
    let mut rng = stream_rng(design.seed, index);
    let y = design
        .template
        .m()
        .iter()
        .zip(&design.pi)
        .map(|(&m, &p)| binomial(&mut rng, m, p))
        .collect();
    design
        .template
        .with_responses(y)
        .expect("responses are bounded by trials")
}

/// Evaluates `f` on every replicate, in replicate order.
pub fn run_replicates<T, F>(design: &SimDesign, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&BinomialSeries) -> T + Sync,
{
    (0..design.replications as u64)
        .into_par_iter()
        .map(|k| f(&simulate_null(design, k)))
        .collect()
}

/// Empirical upper-tail quantiles of a simulated statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullQuantiles {
    pub statistic: String,
    pub probs: Vec<f64>,
    pub values: Vec<f64>,
    /// Order-statistic standard errors, `sqrt(p(1-p)/R) / f(q)`.
    pub se: Vec<f64>,
    pub replications: usize,
    pub failures: usize,
    /// Kolmogorov-Smirnov p-value against the reference CDF, if one was given.
    pub ks_p: Option<f64>,
}

impl NullQuantiles {
    /// Summarizes raw evaluations; `None` marks a failed replicate.
    pub fn from_values(
        statistic: impl Into<String>,
        values: &[Option<f64>],
        probs: &[f64],
        reference: Option<&dyn Fn(f64) -> f64>,
    ) -> Result<Self> {
        let statistic = statistic.into();
        if probs.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::Parameter("tail probabilities must lie in (0, 1)".into()));
        }
        let failures = values.iter().filter(|v| v.is_none()).count();
        if failures as f64 > MAX_FAILURE_RATE * values.len() as f64 {
            return Err(Error::numeric(
                None,
                format!("{statistic}: {failures} of {} replicates failed", values.len()),
            ));
        }
        let mut sorted: Vec<f64> = values.iter().flatten().copied().collect();
        if sorted.is_empty() {
            return Err(Error::numeric(None, format!("{statistic}: no successful replicates")));
        }
        if sorted.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(None, format!("{statistic}: non-finite statistic")));
        }
        sorted.sort_by(f64::total_cmp);
        let q: Vec<f64> = probs.iter().map(|&p| upper_quantile(&sorted, p)).collect();
        let se = probs
            .iter()
            .zip(&q)
            .map(|(&p, &v)| order_statistic_se(&sorted, p, v))
            .collect();
        let ks_p = reference.map(|cdf| ks_test(&sorted, cdf).1);
        Ok(Self {
            statistic,
            probs: probs.to_vec(),
            values: q,
            se,
            replications: values.len(),
            failures,
            ks_p,
        })
    }
}

/// Runs the design and summarizes one scalar statistic.
pub fn null_quantiles<F>(
    design: &SimDesign,
    statistic: &str,
    evaluator: F,
    probs: &[f64],
    reference: Option<&dyn Fn(f64) -> f64>,
) -> Result<NullQuantiles>
where
    F: Fn(&BinomialSeries) -> Result<f64> + Sync,
{
    let values: Vec<Option<f64>> = run_replicates(design, |s| evaluator(s).ok());
    NullQuantiles::from_values(statistic, &values, probs, reference)
}

/// Order statistic `ceil((1 - p) R)` (1-based) of ascending `sorted`.
pub fn upper_quantile(sorted: &[f64], p: f64) -> f64 {
    let r = sorted.len();
    let k = ((1.0 - p) * r as f64 - 1e-9).ceil().max(1.0) as usize;
    sorted[k.min(r) - 1]
}

/// Gaussian kernel density estimate at `x` with Silverman's bandwidth.
pub fn kde(sorted: &[f64], x: f64) -> f64 {
    let r = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / r;
    let sd = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0).max(1.0)).sqrt();
    let iqr = upper_quantile(sorted, 0.25) - upper_quantile(sorted, 0.75);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(spread > 0.0) {
        return f64::INFINITY;
    }
    let h = 0.9 * spread * r.powf(-0.2);
    let norm = 1.0 / (r * h * (2.0 * std::f64::consts::PI).sqrt());
    sorted.iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum::<f64>() * norm
}

fn order_statistic_se(sorted: &[f64], p: f64, q: f64) -> f64 {
    let f = kde(sorted, q);
    if f.is_infinite() {
        return 0.0;
    }
    (p * (1.0 - p) / sorted.len() as f64).sqrt() / f
}

/// One-sample Kolmogorov-Smirnov statistic and asymptotic p-value (with
/// the finite-sample adjustment `sqrt(n) + 0.12 + 0.11/sqrt(n)`).
pub fn ks_test(sorted: &[f64], cdf: &dyn Fn(f64) -> f64) -> (f64, f64) {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    (d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d))
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// `(1 + #{simulated >= observed}) / (R + 1)` over successful replicates.
pub fn monte_carlo_p_value(values: &[Option<f64>], observed: f64) -> f64 {
    let ok: Vec<f64> = values.iter().flatten().copied().collect();
    let exceed = ok.iter().filter(|&&v| v >= observed).count();
    (1 + exceed) as f64 / (ok.len() + 1) as f64
}
