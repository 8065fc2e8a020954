//! Oracle metrics shared by the oracle and acceptance targets. Each returns
//! the worst discrepancy it found so callers choose how to report it.
#![allow(dead_code)]

use binseq_core::glm::loglik_at;
use binseq_core::montecarlo::{run_replicates, RegressorRecipe, SimDesign, Trials};
use binseq_core::{
    barma_score_vector, fit_glm, info_matrix, loglik, loglik_and_derivs, loglik_grad_info, score_stat,
    score_stat_at_zero, score_vector, BarmaScoreParts, BinomialSeries, GlarmaParams, GlmFit, ModelSpec, Residuals,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const KINDS: [Residuals; 3] = [Residuals::Identity, Residuals::Pearson, Residuals::Score];

pub fn logistic(w: f64) -> f64 {
    1.0 / (1.0 + (-w).exp())
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Relative error with an absolute floor of one, for derivatives near zero.
fn rel_floor(approx: f64, exact: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(1.0)
}

pub fn random_series(rng: &mut ChaCha8Rng, n: usize, r: usize) -> BinomialSeries {
    let x = DMatrix::from_fn(n, r, |_, k| if k == 0 { 1.0 } else { rng.random_range(-1.0..1.0) });
    let beta: Vec<f64> = (0..r).map(|_| rng.random_range(-0.8..0.8)).collect();
    let m: Vec<u32> = (0..n).map(|_| rng.random_range(1..=4)).collect();
    let y = (0..n)
        .map(|t| {
            let p = logistic((0..r).map(|k| x[(t, k)] * beta[k]).sum());
            (0..m[t]).filter(|_| rng.random::<f64>() < p).count() as u32
        })
        .collect();
    BinomialSeries::new(y, m, x).unwrap()
}

fn random_lags(rng: &mut ChaCha8Rng, max: usize) -> Vec<usize> {
    (1..=max).filter(|_| rng.random_bool(0.4)).collect()
}

/// Largest relative gap between the quadratic form at `omega = 0` and the
/// per-lag closed form, over `instances` random problems and all residual types.
pub fn closed_form_gap(instances: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < instances {
        let n = rng.random_range(20..80);
        let series = random_series(&mut rng, n, 2);
        let (phi, theta) = (random_lags(&mut rng, 4), random_lags(&mut rng, 4));
        if phi.is_empty() && theta.is_empty() {
            continue;
        }
        let Ok(glm) = fit_glm(&series) else { continue };
        for kind in KINDS {
            let spec = ModelSpec::glarma(phi.clone(), theta.clone(), kind).unwrap();
            let zeros = vec![0.0; spec.partition().overlap.len()];
            let quad = score_stat(&series, &glm, &spec, &zeros).unwrap().statistic;
            let closed = score_stat_at_zero(&series, &glm, &spec).unwrap();
            worst = worst.max(rel(quad, closed));
        }
        done += 1;
    }
    worst
}

/// Step for [`central`]. Richardson extrapolation makes the truncation error
/// `O(h^4)`, which matters where the recursion is nearly explosive and third
/// derivatives are large.
const STEP: f64 = 2e-5;

/// Central difference of `f` at zero, extrapolated from steps `h` and `h/2`.
fn central(f: impl Fn(f64) -> DVector<f64>) -> DVector<f64> {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(STEP / 2.0) - d(STEP)) / 3.0
}

fn scalar(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}

/// Worst central-difference error of the GLM gradient and information.
pub fn glm_derivative_gap(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let series = random_series(&mut rng, 40, 3);
        let beta: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, grad, info) = loglik_grad_info(&series, &beta);
        for a in 0..3 {
            let shifted = |d: f64| {
                let mut b = beta.clone();
                b[a] += d;
                b
            };
            let fd = central(|d| scalar(loglik_at(&series, &shifted(d))))[0];
            worst = worst.max(rel_floor(fd, grad[a]));
            let dg = central(|d| loglik_grad_info(&series, &shifted(d)).1);
            for b in 0..3 {
                worst = worst.max(rel_floor(-dg[b], info[(a, b)]));
            }
        }
    }
    worst
}

/// Worst central-difference error of the GLARMA gradient and Hessian.
pub fn glarma_derivative_gap(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for kind in KINDS {
        for _ in 0..5 {
            let series = random_series(&mut rng, 50, 2);
            let spec = ModelSpec::glarma(vec![1, 2], vec![1, 3], kind).unwrap();
            let params = GlarmaParams {
                beta: vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)],
                psi: (0..3).map(|_| rng.random_range(-0.2..0.2)).collect(),
                omega: vec![rng.random_range(-0.5..0.5)],
            };
            let d = loglik_and_derivs(&series, &params, &spec).unwrap();
            worst = worst.max(rel(d.loglik, loglik(&series, &params, &spec).unwrap()));
            let flat: Vec<f64> = params.beta.iter().chain(&params.psi).copied().collect();
            let unflat = |v: &[f64]| GlarmaParams {
                beta: v[..2].to_vec(),
                psi: v[2..].to_vec(),
                omega: params.omega.clone(),
            };
            for a in 0..flat.len() {
                let shifted = |h: f64| {
                    let mut v = flat.clone();
                    v[a] += h;
                    unflat(&v)
                };
                let fd = central(|h| scalar(loglik(&series, &shifted(h), &spec).unwrap()))[0];
                worst = worst.max(rel_floor(fd, d.grad[a]));
                let col = central(|h| loglik_and_derivs(&series, &shifted(h), &spec).unwrap().grad);
                for b in 0..flat.len() {
                    worst = worst.max(rel_floor(col[b], d.hess[(a, b)]));
                }
            }
        }
    }
    worst
}

/// Textbook IRLS: `beta <- (X'WX)^{-1} X'W z` with working response `z`.
pub fn irls(series: &BinomialSeries) -> Vec<f64> {
    let x = series.x();
    let (n, r) = (series.n(), series.r());
    let mut beta = DVector::zeros(r);
    for _ in 0..100 {
        let eta = x * &beta;
        let mut xtwx = DMatrix::zeros(r, r);
        let mut xtwz = DVector::zeros(r);
        for t in 0..n {
            let m = series.m()[t] as f64;
            let p = logistic(eta[t]);
            let w = m * p * (1.0 - p);
            let z = eta[t] + (series.y()[t] as f64 - m * p) / w;
            let xt = x.row(t).transpose();
            xtwx += w * &xt * xt.transpose();
            xtwz += w * z * xt;
        }
        let next = xtwx.lu().solve(&xtwz).unwrap();
        let delta = (&next - &beta).amax();
        beta = next;
        if delta < 1e-14 {
            break;
        }
    }
    beta.iter().copied().collect()
}

/// Largest `||beta_fit - beta_irls||_inf` over `count` random problems.
pub fn irls_gap(count: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < count {
        let series = random_series(&mut rng, 60, 3);
        let Ok(fit) = fit_glm(&series) else { continue };
        let oracle = irls(&series);
        for (a, b) in fit.beta_hat.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
        checked += 1;
    }
    worst
}

/// Efficient BARMA score `S - F E^{-1} S_beta` with `S_beta = n^{-1/2} X'u`;
/// `reference` supplies the response-free blocks `E` and `F`.
pub fn efficient_barma_score(
    series: &BinomialSeries,
    glm: &GlmFit,
    spec: &ModelSpec,
    reference: &BarmaScoreParts,
) -> DVector<f64> {
    let u = DVector::from_vec(glm.identity_residuals(series));
    let s_beta = series.x().transpose() * u / (series.n() as f64).sqrt();
    let (s_phi, s_theta) = barma_score_vector(series, glm, spec).unwrap();
    let s = DVector::from_iterator(s_phi.len() + s_theta.len(), s_phi.iter().chain(s_theta.iter()).copied());
    s - &reference.f * reference.e.clone().lu().solve(&s_beta).unwrap()
}

pub fn sine_design(n: usize, m: u32, beta: Vec<f64>, reps: usize, seed: u64) -> SimDesign {
    let x = DMatrix::from_fn(n, 2, |t, k| if k == 0 { 1.0 } else { (0.37 * t as f64).sin() });
    SimDesign::new(n, Trials::Constant(m), beta, RegressorRecipe::Fixed(x), reps, seed).unwrap()
}

/// Largest `|E[S S'] - target| / se` over the lower triangle, for zero-mean draws.
fn max_z(draws: &[DVector<f64>], target: &DMatrix<f64>) -> f64 {
    let k = target.nrows();
    let r = draws.len() as f64;
    let mut mean = DMatrix::zeros(k, k);
    let mut sq = DMatrix::zeros(k, k);
    for d in draws {
        let outer = d * d.transpose();
        sq += outer.component_mul(&outer);
        mean += outer;
    }
    mean /= r;
    sq /= r;
    let mut worst: f64 = 0.0;
    for a in 0..k {
        for b in 0..=a {
            let se = ((sq[(a, b)] - mean[(a, b)].powi(2)).max(0.0) / r).sqrt();
            worst = worst.max((mean[(a, b)] - target[(a, b)]).abs() / se);
        }
    }
    worst
}

/// Worst standardized gap between `info_matrix` and simulated score second
/// moments, GLARMA with one nuisance lag, every residual type.
pub fn info_matrix_mc_z(reps: usize) -> f64 {
    let beta = vec![-0.2, 0.7];
    let design = sine_design(60, 3, beta.clone(), reps, 77);
    let truth = GlmFit::at(design.template(), &beta).unwrap();
    let mut worst: f64 = 0.0;
    for kind in KINDS {
        let spec = ModelSpec::glarma(vec![1, 2], vec![1, 3], kind).unwrap();
        let omega = [0.5];
        let draws = run_replicates(&design, |s| {
            let glm = GlmFit::at(s, &beta).unwrap();
            score_vector(s, &glm, &spec, &omega).unwrap()
        });
        let info = info_matrix(design.template(), &truth, &spec, &omega).unwrap();
        worst = worst.max(max_z(&draws, &info));
    }
    worst
}

/// Worst standardized gap between the BARMA Schur complement and the
/// simulated covariance of the efficient score.
pub fn schur_mc_z(reps: usize) -> f64 {
    let beta = vec![0.3, -0.6];
    let design = sine_design(80, 2, beta.clone(), reps, 78);
    let truth = GlmFit::at(design.template(), &beta).unwrap();
    let spec = ModelSpec::barma(vec![1], vec![1, 2]).unwrap();
    let reference = BarmaScoreParts::new(design.template(), &truth, &spec).unwrap();
    let draws = run_replicates(&design, |s| {
        let glm = GlmFit::at(s, &beta).unwrap();
        efficient_barma_score(s, &glm, &spec, &reference)
    });
    max_z(&draws, &reference.schur_complement().unwrap())
}
