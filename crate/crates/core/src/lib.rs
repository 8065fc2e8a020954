//! Tests for serial dependence in binomial and binary time series.
//!
//! The null model is a logistic regression `y_t ~ B(m_t, pi_t)` with
//! `logit(pi_t) = x_t' beta`. Alternatives add an observation-driven term to
//! the linear predictor, either GLARMA (lagged scaled residuals) or BARMA
//! (lagged responses and identity residuals). Score tests need only the null
//! fit; likelihood-ratio and Wald tests fit the GLARMA alternative.

pub mod dataset;
pub mod error;
pub mod glarma;
pub mod glm;
pub mod montecarlo;
pub mod numeric;
pub mod result;
pub mod rng;
pub mod score_barma;
pub mod score_glarma;

pub use classic_tests::{blp_stat, lrt_stat, sup_lrt, sup_wald, wald_stat, AcfEstimates, WaldCovariance};
pub use dataset::{
    lag_sets_partition, load_csv, parse_lags, read_csv, save_csv, BinomialSeries, CsvSchema, Family, LagPartition,
    ModelSpec, Residuals,
};
pub use error::{Error, Result};
pub use glarma::{
    fit_glarma, fit_glarma_from_glm, loglik, loglik_and_derivs, recurse_state, simulate_glarma, tau_coefficients,
    GlarmaFit, GlarmaParams, GlarmaState,
};
pub use glm::{fit_glm, loglik_grad_info, GlmFit};
pub use montecarlo::{
    null_quantiles, reproduce_table, run_replicates, simulate_null, NullQuantiles, Report, SimDesign, TableId,
};
pub use result::{Method, PValueKind, ProfilePoint, TestResult};
pub use score_barma::{barma_info, barma_score_vector, barma_stat, BarmaScoreParts};
pub use score_glarma::{
    davies_quantile, davies_tail_bound, info_matrix, score_stat, score_stat_at_zero, score_vector, sup_score,
    GlarmaScore, NuisanceGrid,
};
