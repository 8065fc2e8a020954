use std::fmt;

use serde::Serialize;

/// Which statistic a [`TestResult`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ScoreGlarma,
    SupScoreGlarma,
    ScoreBarma,
    BoxPierceLjung,
    LikelihoodRatio,
    SupLikelihoodRatio,
    Wald,
    SupWald,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::ScoreGlarma => "score_glarma",
            Method::SupScoreGlarma => "sup_score_glarma",
            Method::ScoreBarma => "score_barma",
            Method::BoxPierceLjung => "box_pierce_ljung",
            Method::LikelihoodRatio => "likelihood_ratio",
            Method::SupLikelihoodRatio => "sup_likelihood_ratio",
            Method::Wald => "wald",
            Method::SupWald => "sup_wald",
        };
        f.write_str(s)
    }
}

/// Reference distribution behind a reported p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueKind {
    ChiSquare,
    /// Upper bound on the supremum tail probability; conservative.
    DaviesBound,
}

/// Statistic value at one nuisance grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub omega: Vec<f64>,
    /// `None` where the evaluation failed and was skipped.
    pub statistic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub method: Method,
    pub statistic: f64,
    pub df: usize,
    pub p_value: Option<f64>,
    pub p_value_kind: Option<PValueKind>,
    pub omega: Option<Vec<f64>>,
    pub omega_argmax: Option<Vec<f64>>,
    pub profile: Option<Vec<ProfilePoint>>,
    pub warnings: Vec<String>,
}

impl TestResult {
    pub(crate) fn new(method: Method, statistic: f64, df: usize) -> Self {
        Self {
            method,
            statistic,
            df,
            p_value: None,
            p_value_kind: None,
            omega: None,
            omega_argmax: None,
            profile: None,
            warnings: Vec::new(),
        }
    }

    pub(crate) fn with_chi2_p(mut self) -> Self {
        self.p_value = Some(crate::numeric::chi2_sf(self.statistic, self.df));
        self.p_value_kind = Some(PValueKind::ChiSquare);
        self
    }
}

/// Cartesian sweep of `values` over `dims` coordinates, in lexicographic order.
pub(crate) fn product_grid(values: &[f64], dims: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..dims {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Index of the largest finite value, ties broken towards the earliest
/// (lexicographically smallest) grid point.
pub(crate) fn argmax(values: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in values.iter().enumerate() {
        if let Some(v) = *v {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
    }
    best.map(|(k, _)| k)
}
