//! Side-by-side reports of published null quantiles against simulation.
//!
//! Only published numbers and the simulation protocol are used. Where the
//! published design depends on data that is not distributed (boat race,
//! recession and court series) a synthetic regressor with the published
//! null coefficients stands in, and rows say so.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{run_replicates, NullQuantiles, RegressorRecipe, SimDesign, Trials, DEFAULT_PROBS};
use crate::classic_tests::{blp_stat, sup_lrt, sup_wald, WaldCovariance};
use crate::dataset::{BinomialSeries, ModelSpec, Residuals};
use crate::error::{Error, Result};
use crate::glm::fit_glm;
use crate::numeric::chi2_upper_quantile;
use crate::score_barma::barma_stat;
use crate::score_glarma::{davies_quantile, sup_score_with, GlarmaScore, NuisanceGrid};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Absolute tolerance for deterministic rows printed to two decimals.
const PRINTED_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TableId {
    T1,
    T2,
    T4,
    T5,
}

impl TableId {
    pub fn default_replications(self) -> usize {
        match self {
            TableId::T1 => 10_000,
            _ => 1_000,
        }
    }
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "T1" | "1" => Ok(TableId::T1),
            "T2" | "2" => Ok(TableId::T2),
            "T4" | "4" => Ok(TableId::T4),
            "T5" | "5" => Ok(TableId::T5),
            "T3" | "3" => Err(Error::Parameter(
                "table T3 holds observed statistics of an undistributed dataset and is not reproducible".into(),
            )),
            other => Err(Error::Parameter(format!(
                "unknown table '{other}' (expected T1, T2, T4 or T5)"
            ))),
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One compared quantity. `pass` is `None` for informational rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub paper_value: Option<f64>,
    pub simulated: Option<f64>,
    pub se: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub pass: Option<bool>,
    pub note: Option<String>,
}

impl ReportRow {
    fn new(label: impl Into<String>, paper_value: Option<f64>) -> Self {
        Self {
            label: label.into(),
            paper_value,
            simulated: None,
            se: None,
            lower: None,
            upper: None,
            pass: None,
            note: None,
        }
    }

    fn value(mut self, v: f64, se: Option<f64>) -> Self {
        self.simulated = Some(v);
        self.se = se;
        self
    }

    /// Pass iff `lower <= simulated <= upper`, open ends allowed.
    fn band(mut self, lower: Option<f64>, upper: Option<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        if let Some(v) = self.simulated {
            self.pass = Some(lower.is_none_or(|l| v >= l) && upper.is_none_or(|u| v <= u));
        }
        self
    }

    fn around(self, centre: f64, tol: f64) -> Self {
        self.band(Some(centre - tol), Some(centre + tol))
    }

    fn note(mut self, text: impl Into<String>) -> Self {
        self.note = Some(text.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub table: TableId,
    pub seed: u64,
    pub replications: usize,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

fn pct(p: f64) -> String {
    format!("{}%", (p * 1000.0).round() / 10.0)
}

fn theory_rows(name: &str, published: [f64; 4], f: impl Fn(f64) -> Result<f64>) -> Result<Vec<ReportRow>> {
    DEFAULT_PROBS
        .iter()
        .zip(published)
        .map(|(&p, pv)| {
            Ok(ReportRow::new(format!("{name} {}", pct(p)), Some(pv))
                .value(f(p)?, None)
                .around(pv, PRINTED_TOLERANCE))
        })
        .collect()
}

/// Per-quantile acceptance rule for a simulated row.
#[derive(Clone, Copy)]
enum Rule {
    Tol(f64),
    Band(Option<f64>, Option<f64>),
    Info,
}

fn simulated_rows(
    name: &str,
    published: Option<[f64; 4]>,
    rules: [Rule; 4],
    values: &[Option<f64>],
    note: Option<&str>,
) -> Result<Vec<ReportRow>> {
    let q = NullQuantiles::from_values(name, values, &DEFAULT_PROBS, None)?;
    let mut rows = Vec::with_capacity(4);
    for (k, &p) in DEFAULT_PROBS.iter().enumerate() {
        let pv = published.map(|a| a[k]);
        let mut row = ReportRow::new(format!("{name} {}", pct(p)), pv).value(q.values[k], Some(q.se[k]));
        row = match (rules[k], pv) {
            (Rule::Tol(t), Some(c)) => row.around(c, t),
            (Rule::Band(l, u), _) => row.band(l, u),
            _ => row,
        };
        if q.failures > 0 {
            row = row.note(format!("{} of {} replicates failed", q.failures, q.replications));
        }
        if let Some(n) = note {
            row = row.note(n);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn skipped(name: &str, published: Option<[f64; 4]>, why: &str) -> Vec<ReportRow> {
    DEFAULT_PROBS
        .iter()
        .enumerate()
        .map(|(k, &p)| ReportRow::new(format!("{name} {}", pct(p)), published.map(|a| a[k])).note(why))
        .collect()
}

const NO_REPS: &str = "skipped: zero replications requested";

/// Builds the report for `table`. `replications` defaults per table;
/// zero keeps only deterministic rows. `data` supplies the series behind
/// observed-statistic rows (T2, T5).
pub fn reproduce_table(
    table: TableId,
    replications: Option<usize>,
    seed: u64,
    data: Option<&BinomialSeries>,
) -> Result<Report> {
    let reps = replications.unwrap_or_else(|| table.default_replications());
    let rows = match table {
        TableId::T1 => table1(reps, seed)?,
        TableId::T2 => table2(reps, seed, data)?,
        TableId::T4 => table4(reps, seed)?,
        TableId::T5 => table5(reps, seed, data)?,
    };
    Ok(Report {
        schema_version: REPORT_SCHEMA_VERSION,
        table,
        seed,
        replications: reps,
        rows,
    })
}

fn glarma11() -> ModelSpec {
    ModelSpec::glarma(vec![1], vec![1], Residuals::Pearson).expect("valid lags")
}

/// `n = 200`, `m = 2`, `W_t = -0.5 + t/n`.
pub fn trend_design(replications: usize, seed: u64) -> Result<SimDesign> {
    SimDesign::new(
        200,
        Trials::Constant(2),
        vec![-0.5, 1.0],
        RegressorRecipe::TimeTrend,
        replications,
        seed,
    )
}

/// Binary, `n = 153`, null coefficients of the boat-race fit with a
/// bounded oscillating stand-in for the weight difference.
pub fn boat_race_design(replications: usize, seed: u64) -> Result<SimDesign> {
    let n = 153;
    let x = DMatrix::from_fn(n, 2, |t, k| {
        if k == 0 {
            1.0
        } else {
            5.0 * (2.4 * (t + 1) as f64).sin()
        }
    });
    SimDesign::new(
        n,
        Trials::Constant(1),
        vec![0.1937, 0.1176],
        RegressorRecipe::Fixed(x),
        replications,
        seed,
    )
}

/// Binary, `n = 201`, null coefficients of the recession fit with a
/// cyclical stand-in for the lagged interest-rate spread.
pub fn recession_design(replications: usize, seed: u64) -> Result<SimDesign> {
    let n = 201;
    let x = DMatrix::from_fn(n, 2, |t, k| {
        if k == 0 {
            1.0
        } else {
            1.0 + 1.5 * (2.0 * std::f64::consts::PI * (t + 1) as f64 / 32.0).sin()
        }
    });
    SimDesign::new(
        n,
        Trials::Constant(1),
        vec![-0.223, -1.904],
        RegressorRecipe::Fixed(x),
        replications,
        seed,
    )
}

fn table1(reps: usize, seed: u64) -> Result<Vec<ReportRow>> {
    const BOUNDS: [f64; 3] = [0.99, 0.80, 0.50];
    const THEORY: [[f64; 4]; 3] = [
        [5.96, 7.33, 8.69, 10.51],
        [4.63, 5.95, 7.29, 9.08],
        [3.86, 5.15, 6.45, 8.20],
    ];
    const SIMULATED: [[f64; 4]; 3] = [
        [5.47, 7.73, 11.05, 17.00],
        [4.46, 5.85, 7.52, 9.77],
        [3.81, 5.21, 6.73, 8.58],
    ];
    const TOL: [f64; 4] = [0.35, 0.45, 0.7, 1.2];
    let mut rows = Vec::new();
    for (k, &b) in BOUNDS.iter().enumerate() {
        let mut part = theory_rows(&format!("F_Omega [-{b:.2},{b:.2}]"), THEORY[k], |p| {
            davies_quantile(p, -b, b)
        })?;
        if k == 1 {
            for row in &mut part {
                row.note = Some("published row agrees with the bound at about +-0.797 rather than +-0.80".into());
            }
        }
        rows.extend(part);
    }
    let spec = glarma11();
    let grids: Vec<NuisanceGrid> = BOUNDS
        .iter()
        .map(|&b| NuisanceGrid::new(-b, b, 0.01))
        .collect::<Result<_>>()?;
    let sims: Vec<Vec<Option<f64>>> = if reps == 0 {
        Vec::new()
    } else {
        let design = trend_design(reps, seed)?;
        let per_rep = run_replicates(&design, |s| {
            let out = fit_glm(s).and_then(|glm| GlarmaScore::new(s, &glm, &spec));
            grids
                .iter()
                .map(|g| {
                    out.as_ref()
                        .ok()
                        .and_then(|ctx| sup_score_with(ctx, g).ok())
                        .map(|r| r.statistic)
                })
                .collect::<Vec<_>>()
        });
        (0..BOUNDS.len())
            .map(|g| per_rep.iter().map(|v| v[g]).collect())
            .collect()
    };
    for (k, &b) in BOUNDS.iter().enumerate() {
        let name = format!("sup Q1ST [-{b:.2},{b:.2}]");
        if reps == 0 {
            rows.extend(skipped(&name, Some(SIMULATED[k]), NO_REPS));
            continue;
        }
        let mut rules = TOL.map(Rule::Tol);
        if k == 0 {
            rules[3] = Rule::Tol(3.0);
        }
        let mut part = simulated_rows(&name, Some(SIMULATED[k]), rules, &sims[k], None)?;
        if k == 0 {
            for row in &mut part[2..] {
                row.note = Some("bound breaks down as |omega| approaches 1 at this n".into());
            }
        }
        rows.extend(part);
    }
    Ok(rows)
}

fn table2(reps: usize, seed: u64, data: Option<&BinomialSeries>) -> Result<Vec<ReportRow>> {
    const Q0: [f64; 4] = [2.68, 3.65, 4.55, 5.85];
    const SUP_ST: [f64; 4] = [4.59, 5.76, 7.72, 10.82];
    const SUP_LR: [f64; 4] = [5.20, 6.76, 8.57, 11.32];
    const SUP_W: [f64; 4] = [18.87, 25.01, 32.73, 48.00];
    const OBSERVED: [(&str, f64); 4] = [
        ("Q1ST(0)", 5.69),
        ("sup Q1ST", 11.53),
        ("sup Q1LR", 10.43),
        ("sup Q1W", 40.65),
    ];
    let tol_st = [0.3, 0.35, 0.5, 0.8].map(Rule::Tol);
    let tol_sup = [0.5, 0.6, 1.0, 2.0].map(Rule::Tol);
    let wald_rules = [Rule::Info, Rule::Band(Some(18.0), Some(35.0)), Rule::Info, Rule::Info];

    let mut rows = theory_rows("chi2_1", [2.71, 3.84, 5.02, 6.63], |p| Ok(chi2_upper_quantile(p, 1)))?;
    rows.extend(theory_rows("F_Omega [-0.90,0.90]", [5.04, 6.39, 7.74, 9.53], |p| {
        davies_quantile(p, -0.9, 0.9)
    })?);

    let regular = ModelSpec::glarma(vec![1], vec![], Residuals::Pearson)?;
    let irregular = glarma11();
    let grid = NuisanceGrid::default();
    let eval = |s: &BinomialSeries| -> [Option<f64>; 4] {
        let glm = fit_glm(s).ok();
        let q0 = glm.as_ref().and_then(|g| {
            GlarmaScore::new(s, g, &regular)
                .and_then(|c| c.statistic(&[]))
                .ok()
                .map(|(q, _)| q)
        });
        let st = glm.as_ref().and_then(|g| {
            GlarmaScore::new(s, g, &irregular)
                .and_then(|c| sup_score_with(&c, &grid))
                .ok()
                .map(|r| r.statistic)
        });
        let lr = sup_lrt(s, &irregular, &grid).ok().map(|r| r.statistic);
        let w = sup_wald(s, &irregular, &grid, WaldCovariance::Observed)
            .ok()
            .map(|r| r.statistic);
        [q0, st, lr, w]
    };
    let groups: [(&str, [f64; 4], [Rule; 4]); 4] = [
        ("Q1ST(0)", Q0, tol_st),
        ("sup Q1ST", SUP_ST, tol_sup),
        ("sup Q1LR", SUP_LR, tol_sup),
        ("sup Q1W", SUP_W, wald_rules),
    ];
    if reps == 0 {
        for (name, published, _) in groups {
            rows.extend(skipped(name, Some(published), NO_REPS));
        }
    } else {
        let sims = run_replicates(&boat_race_design(reps, seed)?, eval);
        for (g, (name, published, rules)) in groups.into_iter().enumerate() {
            let values: Vec<Option<f64>> = sims.iter().map(|v| v[g]).collect();
            let note = (g == 3).then_some("heavy-tailed; only the 5% quantile is checked");
            rows.extend(simulated_rows(name, Some(published), rules, &values, note)?);
        }
    }
    let observed = data.map(eval);
    for (k, (name, pv)) in OBSERVED.iter().enumerate() {
        let row = ReportRow::new(format!("observed {name}"), Some(*pv));
        rows.push(match observed.as_ref().map(|o| o[k]) {
            Some(Some(v)) => row.value(v, None).note("computed on the supplied series"),
            Some(None) => row.note("evaluation failed on the supplied series"),
            None => row.note("skipped: requires the boat race series (--data)"),
        });
    }
    Ok(rows)
}

fn table4(reps: usize, seed: u64) -> Result<Vec<ReportRow>> {
    const BLP: [f64; 4] = [6.95, 9.74, 11.79, 14.72];
    const SCORE: [f64; 4] = [6.24, 7.89, 9.33, 11.18];
    const LR: [f64; 4] = [7.54, 9.63, 11.31, 13.99];
    const WALD: [f64; 4] = [19.96, 32.04, 53.25, 71.93];
    let chi3 = [6.25, 7.81, 9.35, 11.34];
    let mut rows = theory_rows("chi2_3", chi3, |p| Ok(chi2_upper_quantile(p, 3)))?;
    let spec = ModelSpec::barma(vec![1], vec![1, 2])?;
    if reps == 0 {
        rows.extend(skipped("Q3BLP", Some(BLP), NO_REPS));
        rows.extend(skipped("Q3S", Some(SCORE), NO_REPS));
    } else {
        let sims = run_replicates(&recession_design(reps, seed)?, |s| {
            let glm = fit_glm(s).ok();
            let blp = glm.as_ref().and_then(|g| blp_stat(s, g, 3).ok()).map(|r| r.statistic);
            let sc = glm
                .as_ref()
                .and_then(|g| barma_stat(s, g, &spec).ok())
                .map(|r| r.statistic);
            [blp, sc]
        });
        let blp: Vec<Option<f64>> = sims.iter().map(|v| v[0]).collect();
        let sc: Vec<Option<f64>> = sims.iter().map(|v| v[1]).collect();
        let blp_rules = [
            Rule::Band(Some(chi3[0] + 0.4), None),
            Rule::Info,
            Rule::Info,
            Rule::Info,
        ];
        rows.extend(simulated_rows(
            "Q3BLP",
            Some(BLP),
            blp_rules,
            &blp,
            Some("checked: 90% quantile exceeds the chi-square(3) value by more than 0.4"),
        )?);
        rows.extend(simulated_rows(
            "Q3S",
            Some(SCORE),
            [0.5, 0.6, 0.9, 1.4].map(Rule::Tol),
            &sc,
            None,
        )?);
    }
    let why = "skipped: requires BARMA maximum likelihood fits, which are not implemented";
    rows.extend(skipped("Q3LR", Some(LR), why));
    rows.extend(skipped("Q3W", Some(WALD), why));
    Ok(rows)
}

struct Crime {
    name: &'static str,
    m_min: u32,
    m_mean: f64,
    m_max: u32,
    sup: [f64; 4],
}

const CRIMES: [Crime; 6] = [
    Crime {
        name: "Assault",
        m_min: 8,
        m_mean: 85.55,
        m_max: 138,
        sup: [5.89, 8.01, 9.39, 13.08],
    },
    Crime {
        name: "SexAssault",
        m_min: 7,
        m_mean: 113.37,
        m_max: 250,
        sup: [6.15, 7.72, 8.70, 12.45],
    },
    Crime {
        name: "BreakEnter",
        m_min: 4,
        m_mean: 53.61,
        m_max: 108,
        sup: [5.71, 7.19, 9.50, 12.98],
    },
    Crime {
        name: "Robbery",
        m_min: 6,
        m_mean: 90.23,
        m_max: 162,
        sup: [5.93, 7.62, 9.29, 11.06],
    },
    Crime {
        name: "MotorTheft",
        m_min: 1,
        m_mean: 15.21,
        m_max: 36,
        sup: [6.61, 8.68, 11.03, 14.01],
    },
    Crime {
        name: "OtherTheft",
        m_min: 1,
        m_mean: 10.80,
        m_max: 31,
        sup: [6.50, 8.33, 10.20, 12.47],
    },
];

/// Monthly design of length 150 with trials oscillating inside the
/// published range and regressors `(1, t/12, max(t - 73, 0))`.
pub fn court_design(m_min: u32, m_mean: f64, m_max: u32, replications: usize, seed: u64) -> Result<SimDesign> {
    let n = 150;
    let amp = (m_mean - m_min as f64).min(m_max as f64 - m_mean);
    let m: Vec<u32> = (1..=n)
        .map(|t| {
            let v = m_mean + amp * (2.0 * std::f64::consts::PI * t as f64 / 37.0).sin();
            (v.round() as u32).clamp(m_min.max(1), m_max)
        })
        .collect();
    let x = DMatrix::from_fn(n, 3, |t, k| {
        let t = (t + 1) as f64;
        match k {
            0 => 1.0,
            1 => t / 12.0,
            _ => (t - 73.0).max(0.0),
        }
    });
    SimDesign::new(
        n,
        Trials::Varying(m),
        vec![0.4, -0.03, 0.005],
        RegressorRecipe::Fixed(x),
        replications,
        seed,
    )
}

fn table5(reps: usize, seed: u64, data: Option<&BinomialSeries>) -> Result<Vec<ReportRow>> {
    let printed = [4.61, 7.38, 5.99, 9.21];
    let mut rows = Vec::new();
    for (k, &p) in DEFAULT_PROBS.iter().enumerate() {
        let v = chi2_upper_quantile(p, 2);
        let mut row = ReportRow::new(format!("chi2_2 {}", pct(p)), Some(printed[k]))
            .value(v, None)
            .around((v * 100.0).round() / 100.0, PRINTED_TOLERANCE);
        if k == 1 || k == 2 {
            row = row.note("printed 5% and 2.5% entries are transposed; compared with the chi-square(2) quantile");
        }
        rows.push(row);
    }
    let spec = ModelSpec::glarma(vec![1], vec![1, 2], Residuals::Pearson)?;
    let grid = NuisanceGrid::default();
    let eval = |s: &BinomialSeries| -> [Option<f64>; 2] {
        let ctx = fit_glm(s).and_then(|g| GlarmaScore::new(s, &g, &spec)).ok();
        let q0 = ctx.as_ref().and_then(|c| c.statistic(&[0.0]).ok()).map(|(q, _)| q);
        let sup = ctx
            .as_ref()
            .and_then(|c| sup_score_with(c, &grid).ok())
            .map(|r| r.statistic);
        [q0, sup]
    };
    for crime in &CRIMES {
        let name = format!("{} sup Q2ST", crime.name);
        if reps == 0 {
            rows.extend(skipped(&name, Some(crime.sup), NO_REPS));
            continue;
        }
        let design = court_design(crime.m_min, crime.m_mean, crime.m_max, reps, seed)?;
        let values: Vec<Option<f64>> = run_replicates(&design, |s| eval(s)[1]);
        rows.extend(simulated_rows(
            &name,
            Some(crime.sup),
            [Rule::Info; 4],
            &values,
            Some("synthetic stand-in design; published values come from an undistributed fit"),
        )?);
    }
    match data {
        None => {
            rows.push(ReportRow::new("observed Q2ST(0)", None).note("skipped: requires a court series (--data)"));
            rows.push(ReportRow::new("observed sup Q2ST", None).note("skipped: requires a court series (--data)"));
        }
        Some(series) => {
            let glm = fit_glm(series)?;
            let obs = eval(series);
            for (label, v) in [("observed Q2ST(0)", obs[0]), ("observed sup Q2ST", obs[1])] {
                let row = ReportRow::new(label, None);
                rows.push(match v {
                    Some(v) => row.value(v, None).note("chi-square(2) reference for Q2ST(0)"),
                    None => row.note("evaluation failed on the supplied series"),
                });
            }
            if reps > 0 {
                let design = SimDesign::from_template(series.clone(), glm.beta_hat.clone(), reps, seed)?;
                let values: Vec<Option<f64>> = run_replicates(&design, |s| eval(s)[1]);
                rows.extend(simulated_rows(
                    "supplied series sup Q2ST",
                    None,
                    [Rule::Info; 4],
                    &values,
                    Some("null simulated from the GLM fit of the supplied series"),
                )?);
            }
        }
    }
    Ok(rows)
}
