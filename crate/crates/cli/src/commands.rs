use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use binseq_core::classic_tests::{blp_stat, lrt_stat, sup_lrt, sup_wald, wald_stat};
use binseq_core::dataset::format_float;
use binseq_core::montecarlo::{monte_carlo_p_value, run_replicates, NullQuantiles, SimDesign, DEFAULT_PROBS};
use binseq_core::numeric::chi2_cdf;
use binseq_core::score_glarma::{score_stat, sup_score};
use binseq_core::{
    barma_stat, fit_glarma_from_glm, fit_glm, load_csv, reproduce_table, BinomialSeries, ModelSpec, TestResult,
};
use serde::Serialize;

use crate::error::CliError;
use crate::resolve::{Input, Nuisance, RunConfig, Task, TestPlan};
use crate::SCHEMA_VERSION;

fn load(input: &Input) -> Result<BinomialSeries, CliError> {
    Ok(load_csv(&input.path, &input.schema)?)
}

/// Runs one planned test on a series, fitting the null model first.
pub(crate) fn evaluate(plan: &TestPlan, series: &BinomialSeries) -> binseq_core::Result<TestResult> {
    match plan {
        TestPlan::Score { spec, nuisance } => {
            let glm = fit_glm(series)?;
            match nuisance {
                Nuisance::Fixed(omega) => score_stat(series, &glm, spec, omega),
                Nuisance::Sup(grid) => sup_score(series, &glm, spec, grid),
            }
        }
        TestPlan::Barma { spec } => barma_stat(series, &fit_glm(series)?, spec),
        TestPlan::Blp { max_lag } => blp_stat(series, &fit_glm(series)?, *max_lag),
        TestPlan::Lrt { spec, nuisance } => match nuisance {
            Nuisance::Fixed(omega) => lrt_stat(series, spec, omega),
            Nuisance::Sup(grid) => sup_lrt(series, spec, grid),
        },
        TestPlan::Wald { spec, nuisance, cov } => match nuisance {
            Nuisance::Fixed(omega) => wald_stat(series, spec, omega, *cov),
            Nuisance::Sup(grid) => sup_wald(series, spec, grid, *cov),
        },
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct GlmOutput<'a> {
    n: usize,
    regressors: &'a [String],
    beta: &'a [f64],
    std_errors: Vec<f64>,
    loglik: f64,
    iterations: usize,
    converged: bool,
}

#[derive(Serialize)]
struct GlarmaOutput<'a> {
    n: usize,
    spec: &'a ModelSpec,
    regressors: &'a [String],
    beta: &'a [f64],
    psi: &'a [f64],
    omega: &'a [f64],
    phi: Vec<f64>,
    theta: Vec<f64>,
    std_errors: Vec<f64>,
    loglik: f64,
    glm_loglik: f64,
    iterations: usize,
    ar_root_moduli: &'a [f64],
}

#[derive(Serialize)]
struct TestOutput<'a> {
    n: usize,
    spec: Option<&'a ModelSpec>,
    result: &'a TestResult,
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    n: usize,
    spec: Option<&'a ModelSpec>,
    seed: u64,
    beta0: &'a [f64],
    observed: &'a TestResult,
    null: &'a NullQuantiles,
    monte_carlo_p_value: f64,
}

fn emit<T: Serialize>(command: &str, body: T, out: Option<&Path>) -> Result<(), CliError> {
    let doc = Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        body,
    };
    write_json(&doc, out)
}

fn write_json<T: Serialize>(doc: &T, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn report_warnings(result: &TestResult) {
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
}

fn write_profile(result: &TestResult, path: &Path) -> Result<(), CliError> {
    let profile = result
        .profile
        .as_deref()
        .ok_or_else(|| CliError::Usage("result has no profile".into()))?;
    let k = profile.first().map_or(1, |p| p.omega.len());
    let mut text = String::new();
    let header: Vec<String> = if k == 1 {
        vec!["omega".into()]
    } else {
        (1..=k).map(|i| format!("omega_{i}")).collect()
    };
    let _ = writeln!(text, "{},statistic", header.join(","));
    for p in profile {
        let omega: Vec<String> = p.omega.iter().map(|&w| format_float(w)).collect();
        let stat = p.statistic.map(format_float).unwrap_or_default();
        let _ = writeln!(text, "{},{stat}", omega.join(","));
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Chi-square reference for statistics calibrated that way (not the suprema).
fn reference_df(plan: &TestPlan, observed: &TestResult) -> Option<usize> {
    (!plan.is_sup()).then_some(observed.df)
}

impl RunConfig {
    pub fn execute(self) -> Result<(), CliError> {
        match self.threads {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?;
                pool.install(|| self.dispatch())
            }
            None => self.dispatch(),
        }
    }

    fn dispatch(&self) -> Result<(), CliError> {
        let out = self.out.as_deref();
        match &self.task {
            Task::FitGlm { input } => {
                let series = load(input)?;
                let fit = fit_glm(&series)?;
                let body = GlmOutput {
                    n: series.n(),
                    regressors: series.regressor_names(),
                    beta: &fit.beta_hat,
                    std_errors: fit.std_errors()?,
                    loglik: fit.loglik,
                    iterations: fit.iterations,
                    converged: fit.converged,
                };
                emit("fit-glm", body, out)
            }
            Task::FitGlarma { input, spec, omega } => {
                let series = load(input)?;
                let glm = fit_glm(&series)?;
                let fit = fit_glarma_from_glm(&series, spec, omega, &glm)?;
                let (phi, theta) = fit.params.to_phi_theta(spec);
                if fit.ar_root_moduli.iter().any(|&m| m <= 1.0) {
                    eprintln!("warning: fitted autoregressive polynomial has a root on or inside the unit circle");
                }
                let body = GlarmaOutput {
                    n: series.n(),
                    spec,
                    regressors: series.regressor_names(),
                    beta: &fit.params.beta,
                    psi: &fit.params.psi,
                    omega: &fit.params.omega,
                    phi,
                    theta,
                    std_errors: fit.std_errors(),
                    loglik: fit.loglik,
                    glm_loglik: glm.loglik,
                    iterations: fit.iterations,
                    ar_root_moduli: &fit.ar_root_moduli,
                };
                emit("fit-glarma", body, out)
            }
            Task::Test { name, input, plan } => {
                let series = load(input)?;
                let result = evaluate(plan, &series)?;
                report_warnings(&result);
                if let Some(path) = &self.profile_csv {
                    write_profile(&result, path)?;
                }
                emit(
                    name,
                    TestOutput {
                        n: series.n(),
                        spec: plan.spec(),
                        result: &result,
                    },
                    out,
                )
            }
            Task::Simulate {
                input,
                plan,
                reps,
                seed,
            } => {
                let series = load(input)?;
                let glm = fit_glm(&series)?;
                let observed = evaluate(plan, &series)?;
                report_warnings(&observed);
                let design = SimDesign::from_template(series.clone(), glm.beta_hat.clone(), *reps, *seed)?;
                let values: Vec<Option<f64>> = run_replicates(&design, |s| evaluate(plan, s).ok().map(|r| r.statistic));
                let df = reference_df(plan, &observed);
                let cdf = move |x: f64| chi2_cdf(x, df.unwrap_or(1));
                let reference: Option<&dyn Fn(f64) -> f64> = df.map(|_| &cdf as &dyn Fn(f64) -> f64);
                let null = NullQuantiles::from_values(observed.method.to_string(), &values, &DEFAULT_PROBS, reference)?;
                if null.failures > 0 {
                    eprintln!(
                        "warning: {} of {reps} replicates failed and were dropped",
                        null.failures
                    );
                }
                let body = SimulateOutput {
                    n: series.n(),
                    spec: plan.spec(),
                    seed: *seed,
                    beta0: &glm.beta_hat,
                    observed: &observed,
                    null: &null,
                    monte_carlo_p_value: monte_carlo_p_value(&values, observed.statistic),
                };
                emit("simulate", body, out)
            }
            Task::Reproduce {
                table,
                reps,
                seed,
                data,
            } => {
                let series = data.as_ref().map(load).transpose()?;
                let report = reproduce_table(*table, *reps, *seed, series.as_ref())?;
                for row in &report.rows {
                    let verdict = match row.pass {
                        Some(true) => "pass",
                        Some(false) => "FAIL",
                        None => "info",
                    };
                    eprintln!("{verdict:>4}  {}", row.label);
                }
                write_json(&report, out)
            }
        }
    }
}
