//! Independent oracles: closed forms, finite differences, exact enumeration,
//! a reference IRLS and Monte Carlo score covariances.

mod support;

use binseq_core::{
    barma_stat, blp_stat, fit_glm, info_matrix, score_vector, tau_coefficients, BarmaScoreParts, BinomialSeries,
    GlmFit, ModelSpec, Residuals,
};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{efficient_barma_score, random_series, rel, KINDS};

#[test]
fn closed_form_equals_quadratic_form_at_zero() {
    let gap = support::closed_form_gap(100, 1);
    assert!(gap <= 1e-12, "{gap}");
}

#[test]
fn glm_gradient_and_information_match_central_differences() {
    let gap = support::glm_derivative_gap(2);
    assert!(gap <= 1e-6, "{gap}");
}

#[test]
fn glarma_gradient_and_hessian_match_central_differences() {
    let gap = support::glarma_derivative_gap(3);
    assert!(gap <= 1e-6, "{gap}");
}

#[test]
fn glm_agrees_with_reference_irls() {
    let gap = support::irls_gap(25, 4);
    assert!(gap <= 1e-8, "{gap}");
}

/// Score vector by the power-series route: `F_s = sum_k tau_k e_{s-k}`.
fn tau_route_score(series: &BinomialSeries, glm: &GlmFit, spec: &ModelSpec, omega: &[f64]) -> Vec<f64> {
    let n = series.n();
    let part = spec.partition();
    let tau = tau_coefficients(&part.overlap, omega, n).unwrap();
    let u = glm.identity_residuals(series);
    let e: Vec<f64> = (0..n).map(|t| spec.residuals().scale(glm.sigma2[t]) * u[t]).collect();
    part.union
        .iter()
        .map(|&a| {
            (a..n)
                .map(|t| u[t] * (0..=t - a).map(|k| tau[k] * e[t - a - k]).sum::<f64>())
                .sum::<f64>()
                / (n as f64).sqrt()
        })
        .collect()
}

/// Information by double summation over `tau` weights of independent residuals.
fn direct_info(glm: &GlmFit, spec: &ModelSpec, omega: &[f64]) -> DMatrix<f64> {
    let n = glm.n();
    let part = spec.partition();
    let tau = tau_coefficients(&part.overlap, omega, n).unwrap();
    let v: Vec<f64> = glm.sigma2.iter().map(|&s| spec.residuals().variance(s)).collect();
    let l = part.union.len();
    DMatrix::from_fn(l, l, |i, j| {
        let (a, b) = (part.union[i], part.union[j]);
        let mut acc = 0.0;
        for t in a.max(b)..n {
            for s in 0..=(t - a.max(b)) {
                acc += glm.sigma2[t] * tau[t - a - s] * tau[t - b - s] * v[s];
            }
        }
        acc / n as f64
    })
}

#[test]
fn small_series_match_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [6, 8] {
        let series = random_series(&mut rng, n, 2);
        let glm = GlmFit::at(&series, &[0.1, -0.3]).unwrap();
        for kind in KINDS {
            let spec = ModelSpec::glarma(vec![1, 2], vec![1, 3], kind).unwrap();
            for w in [-0.6, 0.0, 0.45] {
                let s = score_vector(&series, &glm, &spec, &[w]).unwrap();
                let oracle = tau_route_score(&series, &glm, &spec, &[w]);
                for (a, b) in s.iter().zip(&oracle) {
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
                }
                let info = info_matrix(&series, &glm, &spec, &[w]).unwrap();
                assert!((&info - direct_info(&glm, &spec, &[w])).amax() <= 1e-12 * info.amax());
            }
        }
    }
}

#[test]
fn tau_route_agrees_on_longer_series_with_two_nuisance_lags() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let series = random_series(&mut rng, 120, 2);
    let glm = fit_glm(&series).unwrap();
    let spec = ModelSpec::glarma(vec![1, 2, 4], vec![1, 2], Residuals::Pearson).unwrap();
    let omega = [0.3, -0.25];
    let s = score_vector(&series, &glm, &spec, &omega).unwrap();
    let oracle = tau_route_score(&series, &glm, &spec, &omega);
    for (a, b) in s.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }
    let info = info_matrix(&series, &glm, &spec, &omega).unwrap();
    assert!((&info - direct_info(&glm, &spec, &omega)).amax() <= 1e-12 * info.amax());
}

#[test]
fn blp_matches_direct_formula_on_eight_points() {
    let x = DMatrix::from_fn(8, 2, |t, k| if k == 0 { 1.0 } else { (t as f64 * 0.7).cos() });
    let series = BinomialSeries::new(vec![1, 0, 2, 2, 0, 1, 3, 1], vec![2, 1, 3, 2, 2, 3, 3, 2], x).unwrap();
    let glm = fit_glm(&series).unwrap();
    let e: Vec<f64> = (0..8)
        .map(|t| (series.y()[t] as f64 - series.m()[t] as f64 * glm.pi[t]) / glm.sigma2[t].sqrt())
        .collect();
    let c = |l: usize| (l..8).map(|t| e[t] * e[t - l]).sum::<f64>() / 8.0;
    let want = 8.0 * 10.0 * (1..=3).map(|l| (c(l) / c(0)).powi(2) / (8 - l) as f64).sum::<f64>();
    let got = blp_stat(&series, &glm, 3).unwrap().statistic;
    assert!(rel(got, want) <= 1e-12, "{got} vs {want}");
}

/// Every response vector with `0 <= y_t <= m_t`, with its probability.
fn outcomes(m: &[u32], pi: &[f64]) -> Vec<(Vec<u32>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for (&mt, &p) in m.iter().zip(pi) {
        let mut next = Vec::new();
        for (y, prob) in &out {
            for k in 0..=mt {
                let c = (0..k).fold(1.0, |acc, i| acc * (mt - i) as f64 / (i + 1) as f64);
                let pk = c * p.powi(k as i32) * (1.0 - p).powi((mt - k) as i32);
                let mut y = y.clone();
                y.push(k);
                next.push((y, prob * pk));
            }
        }
        out = next;
    }
    out
}

#[test]
fn information_is_the_exact_score_covariance() {
    let x = DMatrix::from_fn(6, 2, |t, k| {
        if k == 0 {
            1.0
        } else {
            [0.4, -0.9, 0.2, 1.1, -0.3, 0.6][t]
        }
    });
    let m = vec![2, 1, 2, 2, 1, 2];
    let template = BinomialSeries::new(vec![0; 6], m.clone(), x).unwrap();
    let beta = [0.2, 0.8];
    let truth = GlmFit::at(&template, &beta).unwrap();
    for kind in KINDS {
        let spec = ModelSpec::glarma(vec![1], vec![1, 2], kind).unwrap();
        let omega = [0.55];
        let mut cov = DMatrix::zeros(2, 2);
        let mut mean = DVector::zeros(2);
        for (y, prob) in outcomes(&m, &truth.pi) {
            let s = template.with_responses(y).unwrap();
            let glm = GlmFit::at(&s, &beta).unwrap();
            let v = score_vector(&s, &glm, &spec, &omega).unwrap();
            mean += prob * &v;
            cov += prob * &v * v.transpose();
        }
        let info = info_matrix(&template, &truth, &spec, &omega).unwrap();
        assert!(mean.amax() <= 1e-14);
        assert!((&cov - &info).amax() <= 1e-12, "{kind:?}\n{cov}\n{info}");
    }
}

#[test]
fn barma_blocks_are_exact_score_covariances() {
    let x = DMatrix::from_fn(6, 2, |t, k| {
        if k == 0 {
            1.0
        } else {
            [0.4, -0.9, 0.2, 1.1, -0.3, 0.6][t]
        }
    });
    let m = vec![2, 1, 2, 2, 1, 2];
    let template = BinomialSeries::new(vec![0; 6], m.clone(), x).unwrap();
    let beta = [-0.1, 0.9];
    let truth = GlmFit::at(&template, &beta).unwrap();
    let spec = ModelSpec::barma(vec![1, 2], vec![1]).unwrap();
    let reference = BarmaScoreParts::new(&template, &truth, &spec).unwrap();
    let schur = reference.schur_complement().unwrap();
    let mut g = DMatrix::zeros(3, 3);
    let mut eff = DMatrix::zeros(3, 3);
    for (y, prob) in outcomes(&m, &truth.pi) {
        let s = template.with_responses(y).unwrap();
        let glm = GlmFit::at(&s, &beta).unwrap();
        let parts = BarmaScoreParts::new(&s, &glm, &spec).unwrap();
        let v = parts.score();
        g += prob * &v * v.transpose();
        let w = efficient_barma_score(&s, &glm, &spec, &reference);
        eff += prob * &w * w.transpose();
    }
    assert!((&g - &reference.g).amax() <= 1e-12, "\n{g}\n{}", reference.g);
    assert!((&eff - &schur).amax() <= 1e-12, "\n{eff}\n{schur}");
}

#[test]
fn info_matrix_matches_monte_carlo_score_covariance() {
    let z = support::info_matrix_mc_z(20_000);
    assert!(z <= 3.0, "{z} standard errors");
}

#[test]
fn barma_schur_complement_matches_monte_carlo_covariance() {
    let z = support::schur_mc_z(20_000);
    assert!(z <= 3.0, "{z} standard errors");
}

#[test]
fn barma_statistic_is_invariant_to_regressor_reparametrization() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let series = random_series(&mut rng, 150, 3);
    let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, -2.0, 0.0, 2.0, 0.3, 0.0, -0.4, 1.5]);
    let moved = BinomialSeries::new(series.y().to_vec(), series.m().to_vec(), series.x() * a).unwrap();
    let spec = ModelSpec::barma(vec![1, 2], vec![1]).unwrap();
    let q0 = barma_stat(&series, &fit_glm(&series).unwrap(), &spec)
        .unwrap()
        .statistic;
    let q1 = barma_stat(&moved, &fit_glm(&moved).unwrap(), &spec).unwrap().statistic;
    assert!(rel(q0, q1) <= 1e-8, "{q0} vs {q1}");
}
