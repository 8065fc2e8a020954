//! Turns parsed flags plus an optional config file into a validated plan.

use std::path::PathBuf;

use binseq_core::montecarlo::DEFAULT_SEED;
use binseq_core::{parse_lags, CsvSchema, Family, ModelSpec, NuisanceGrid, Residuals, TableId, WaldCovariance};

use crate::args::{BlpArgs, Cli, Command, DataArgs, ModelArgs, OmegaArgs, RunArgs, TestArgs, TestKind};
use crate::config::ConfigFile;
use crate::error::CliError;

/// Default Monte Carlo replications for `simulate`.
pub const DEFAULT_SIM_REPS: usize = 1000;

/// Where the series comes from and how its columns are read.
#[derive(Debug, Clone, PartialEq)]
pub struct Input {
    pub path: PathBuf,
    pub schema: CsvSchema,
}

/// Nuisance handling for GLARMA alternatives with overlapping lags.
#[derive(Debug, Clone, PartialEq)]
pub enum Nuisance {
    /// One value per overlapping lag (empty without overlap).
    Fixed(Vec<f64>),
    Sup(NuisanceGrid),
}

impl Nuisance {
    pub fn is_sup(&self) -> bool {
        matches!(self, Nuisance::Sup(_))
    }
}

/// A fully specified test, independent of the data.
#[derive(Debug, Clone, PartialEq)]
pub enum TestPlan {
    Score {
        spec: ModelSpec,
        nuisance: Nuisance,
    },
    Barma {
        spec: ModelSpec,
    },
    Blp {
        max_lag: usize,
    },
    Lrt {
        spec: ModelSpec,
        nuisance: Nuisance,
    },
    Wald {
        spec: ModelSpec,
        nuisance: Nuisance,
        cov: WaldCovariance,
    },
}

impl TestPlan {
    pub fn spec(&self) -> Option<&ModelSpec> {
        match self {
            TestPlan::Score { spec, .. }
            | TestPlan::Barma { spec }
            | TestPlan::Lrt { spec, .. }
            | TestPlan::Wald { spec, .. } => Some(spec),
            TestPlan::Blp { .. } => None,
        }
    }

    pub fn is_sup(&self) -> bool {
        match self {
            TestPlan::Score { nuisance, .. } | TestPlan::Lrt { nuisance, .. } | TestPlan::Wald { nuisance, .. } => {
                nuisance.is_sup()
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    FitGlm {
        input: Input,
    },
    FitGlarma {
        input: Input,
        spec: ModelSpec,
        omega: Vec<f64>,
    },
    Test {
        name: &'static str,
        input: Input,
        plan: TestPlan,
    },
    Simulate {
        input: Input,
        plan: TestPlan,
        reps: usize,
        seed: u64,
    },
    Reproduce {
        table: TableId,
        reps: Option<usize>,
        seed: u64,
        data: Option<Input>,
    },
}

/// Validated run: every flag has been checked before any computation starts.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub out: Option<PathBuf>,
    pub profile_csv: Option<PathBuf>,
    /// `None` uses the global pool sized to the available parallelism.
    pub threads: Option<usize>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_config(run: &RunArgs) -> Result<ConfigFile, CliError> {
    match &run.config {
        Some(path) => ConfigFile::load(path),
        None => Ok(ConfigFile::default()),
    }
}

fn input(data: &DataArgs, cfg: &ConfigFile) -> Result<Input, CliError> {
    let path = data
        .data
        .clone()
        .or_else(|| cfg.data.clone())
        .ok_or_else(|| usage("missing DATA (positional argument or `data` in --config)"))?;
    let defaults = CsvSchema::default();
    Ok(Input {
        path,
        schema: CsvSchema {
            y: data.y_col.clone().or_else(|| cfg.y_col.clone()).unwrap_or(defaults.y),
            m: data.m_col.clone().or_else(|| cfg.m_col.clone()).unwrap_or(defaults.m),
            regressors: data.regressors.clone().or_else(|| cfg.regressors.clone()),
            intercept: data.intercept || cfg.intercept.unwrap_or(false),
        },
    })
}

fn lags(flag: &Option<String>, file: &Option<Vec<usize>>) -> Result<Vec<usize>, CliError> {
    match (flag, file) {
        (Some(text), _) => Ok(parse_lags(text)?),
        (None, Some(list)) => {
            let text: Vec<String> = list.iter().map(usize::to_string).collect();
            Ok(parse_lags(&text.join(","))?)
        }
        (None, None) => Ok(Vec::new()),
    }
}

fn family(flag: &Option<String>, cfg: &ConfigFile) -> Result<Family, CliError> {
    Ok(flag.as_deref().or(cfg.family.as_deref()).unwrap_or("glarma").parse()?)
}

fn spec(family: Family, model: &ModelArgs, cfg: &ConfigFile) -> Result<ModelSpec, CliError> {
    let phi = lags(&model.phi_lags, &cfg.phi_lags)?;
    let theta = lags(&model.theta_lags, &cfg.theta_lags)?;
    let spec = match family {
        Family::Glarma => {
            let residuals: Residuals = model
                .residuals
                .as_deref()
                .or(cfg.residuals.as_deref())
                .unwrap_or("pearson")
                .parse()?;
            ModelSpec::glarma(phi, theta, residuals)?
        }
        Family::Barma => {
            if model.residuals.is_some() {
                return Err(usage("--residuals applies to GLARMA alternatives only"));
            }
            ModelSpec::barma(phi, theta)?
        }
    };
    spec.require_dependence()?;
    Ok(spec)
}

fn parse_omega(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|w| w.is_finite())
                .ok_or_else(|| usage(format!("'{t}' is not a nuisance value")))
        })
        .collect()
}

fn fixed_omega(values: Option<Vec<f64>>, spec: &ModelSpec) -> Result<Vec<f64>, CliError> {
    let k = spec.partition().overlap.len();
    match values {
        None => Ok(vec![0.0; k]),
        Some(v) if v.len() == k => Ok(v),
        Some(v) => Err(usage(format!(
            "--omega has {} value(s) but the model has {k} overlapping lag(s)",
            v.len()
        ))),
    }
}

fn nuisance(flags: &OmegaArgs, cfg: &ConfigFile, spec: &ModelSpec) -> Result<Nuisance, CliError> {
    let from_cli = flags.omega.is_some() || flags.omega_grid.is_some() || flags.sup;
    let (omega, grid, sup) = if from_cli {
        (
            flags.omega.as_deref().map(parse_omega).transpose()?,
            flags.omega_grid.clone(),
            flags.sup,
        )
    } else {
        (cfg.omega.clone(), cfg.omega_grid.clone(), cfg.sup.unwrap_or(false))
    };
    if sup || grid.is_some() {
        if spec.partition().overlap.is_empty() {
            return Err(usage(
                "supremum tests need an overlapping AR/MA lag; without one there is no nuisance parameter",
            ));
        }
        let grid = match grid {
            Some(text) => text.parse::<NuisanceGrid>()?,
            None => NuisanceGrid::default(),
        };
        return Ok(Nuisance::Sup(grid));
    }
    Ok(Nuisance::Fixed(fixed_omega(omega, spec)?))
}

fn wald_cov(flag: &Option<String>, cfg: &ConfigFile) -> Result<WaldCovariance, CliError> {
    match flag.as_deref().or(cfg.wald_cov.as_deref()) {
        Some(text) => Ok(text.parse()?),
        None => Ok(WaldCovariance::default()),
    }
}

fn blp_lag(flag: Option<usize>, model: &ModelArgs, cfg: &ConfigFile) -> Result<usize, CliError> {
    if let Some(l) = flag.or(cfg.max_lag) {
        return if l == 0 {
            Err(usage("--max-lag must be at least 1"))
        } else {
            Ok(l)
        };
    }
    let phi = lags(&model.phi_lags, &cfg.phi_lags)?;
    let theta = lags(&model.theta_lags, &cfg.theta_lags)?;
    phi.into_iter()
        .chain(theta)
        .max()
        .ok_or_else(|| usage("blp needs --max-lag (or model lags to take it from)"))
}

struct PlanFlags<'a> {
    kind: TestKind,
    family: &'a Option<String>,
    model: &'a ModelArgs,
    omega: &'a OmegaArgs,
    max_lag: Option<usize>,
    wald_cov: &'a Option<String>,
}

fn plan(f: PlanFlags<'_>, cfg: &ConfigFile) -> Result<TestPlan, CliError> {
    let omega_given = f.omega.omega.is_some() || f.omega.omega_grid.is_some() || f.omega.sup;
    if f.wald_cov.is_some() && f.kind != TestKind::Wald {
        return Err(usage("--wald-cov applies to the Wald test only"));
    }
    if f.max_lag.is_some() && f.kind != TestKind::Blp {
        return Err(usage("--max-lag applies to the portmanteau test only"));
    }
    let fam = family(f.family, cfg)?;
    if fam == Family::Barma && f.kind != TestKind::Score {
        return Err(usage("BARMA alternatives are available for the score test only"));
    }
    match f.kind {
        TestKind::Blp => {
            if omega_given {
                return Err(usage("the portmanteau test has no nuisance parameter"));
            }
            Ok(TestPlan::Blp {
                max_lag: blp_lag(f.max_lag, f.model, cfg)?,
            })
        }
        TestKind::Score if fam == Family::Barma => {
            if omega_given {
                return Err(usage("BARMA score tests have no nuisance parameter"));
            }
            Ok(TestPlan::Barma {
                spec: spec(fam, f.model, cfg)?,
            })
        }
        kind => {
            let spec = spec(fam, f.model, cfg)?;
            let nuisance = nuisance(f.omega, cfg, &spec)?;
            Ok(match kind {
                TestKind::Score => TestPlan::Score { spec, nuisance },
                TestKind::Lrt => TestPlan::Lrt { spec, nuisance },
                _ => TestPlan::Wald {
                    spec,
                    nuisance,
                    cov: wald_cov(f.wald_cov, cfg)?,
                },
            })
        }
    }
}

fn test_task(
    name: &'static str,
    kind: TestKind,
    a: &TestArgs,
    cfg: &ConfigFile,
) -> Result<(Task, Option<PathBuf>), CliError> {
    let plan = plan(
        PlanFlags {
            kind,
            family: &a.family,
            model: &a.model,
            omega: &a.omega,
            max_lag: None,
            wald_cov: &a.wald_cov,
        },
        cfg,
    )?;
    let profile = a.profile_csv.clone().or_else(|| cfg.profile_csv.clone());
    if profile.is_some() && !plan.is_sup() {
        return Err(usage("--profile-csv needs a supremum test (--sup or --omega-grid)"));
    }
    Ok((
        Task::Test {
            name,
            input: input(&a.data, cfg)?,
            plan,
        },
        profile,
    ))
}

fn blp_task(a: &BlpArgs, cfg: &ConfigFile) -> Result<Task, CliError> {
    let plan = plan(
        PlanFlags {
            kind: TestKind::Blp,
            family: &None,
            model: &a.model,
            omega: &OmegaArgs::default(),
            max_lag: a.max_lag,
            wald_cov: &None,
        },
        cfg,
    )?;
    Ok(Task::Test {
        name: "blp",
        input: input(&a.data, cfg)?,
        plan,
    })
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let run = match &cli.command {
            Command::FitGlm(a) => &a.run,
            Command::FitGlarma(a) => &a.run,
            Command::ScoreTest(a) | Command::Lrt(a) | Command::Wald(a) => &a.run,
            Command::Blp(a) => &a.run,
            Command::Simulate(a) => &a.run,
            Command::Reproduce(a) => &a.run,
        }
        .clone();
        let cfg = load_config(&run)?;
        let mut profile_csv = None;
        let task = match &cli.command {
            Command::FitGlm(a) => Task::FitGlm {
                input: input(&a.data, &cfg)?,
            },
            Command::FitGlarma(a) => {
                let spec = spec(Family::Glarma, &a.model, &cfg)?;
                let given = match &a.omega {
                    Some(text) => Some(parse_omega(text)?),
                    None => cfg.omega.clone(),
                };
                let omega = fixed_omega(given, &spec)?;
                Task::FitGlarma {
                    input: input(&a.data, &cfg)?,
                    spec,
                    omega,
                }
            }
            Command::ScoreTest(a) => {
                let (task, profile) = test_task("score-test", TestKind::Score, a, &cfg)?;
                profile_csv = profile;
                task
            }
            Command::Lrt(a) => {
                let (task, profile) = test_task("lrt", TestKind::Lrt, a, &cfg)?;
                profile_csv = profile;
                task
            }
            Command::Wald(a) => {
                let (task, profile) = test_task("wald", TestKind::Wald, a, &cfg)?;
                profile_csv = profile;
                task
            }
            Command::Blp(a) => blp_task(a, &cfg)?,
            Command::Simulate(a) => {
                let kind = match a.test.as_deref().or(cfg.test.as_deref()) {
                    None => TestKind::Score,
                    Some(t) => TestKind::parse(t)
                        .ok_or_else(|| usage(format!("unknown test '{t}' (score, blp, lrt, wald)")))?,
                };
                let plan = plan(
                    PlanFlags {
                        kind,
                        family: &a.family,
                        model: &a.model,
                        omega: &a.omega,
                        max_lag: a.max_lag,
                        wald_cov: &a.wald_cov,
                    },
                    &cfg,
                )?;
                let reps = a.reps.or(cfg.reps).unwrap_or(DEFAULT_SIM_REPS);
                if reps == 0 {
                    return Err(usage("--reps must be at least 1 for simulate"));
                }
                Task::Simulate {
                    input: input(&a.data, &cfg)?,
                    plan,
                    reps,
                    seed: a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
                }
            }
            Command::Reproduce(a) => {
                let table: TableId = a.table.parse()?;
                let data = a.data.clone().or_else(|| cfg.data.clone()).map(|path| Input {
                    path,
                    schema: CsvSchema::default().with_intercept(a.intercept || cfg.intercept.unwrap_or(false)),
                });
                Task::Reproduce {
                    table,
                    reps: a.reps.or(cfg.reps),
                    seed: a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
                    data,
                }
            }
        };
        let threads = run.threads.or(cfg.threads);
        if threads == Some(0) {
            return Err(usage("--threads must be at least 1"));
        }
        Ok(Self {
            task,
            out: run.out.or_else(|| cfg.out.clone()),
            profile_csv,
            threads,
        })
    }
}
