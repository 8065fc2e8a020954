//! Binomial time-series regression data and model lag specifications.
//!
//! A series is a sequence of success counts `y_t` out of `m_t` trials with a
//! regressor row `x_t` per time point. Row order in files is time order.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Successes, trials and regressors for a binomial time series.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialSeries {
    y: Vec<u32>,
    m: Vec<u32>,
    x: DMatrix<f64>,
    names: Vec<String>,
}

impl BinomialSeries {
    /// Validates `0 <= y_t <= m_t`, `m_t >= 1`, `n > r` and full column rank.
    pub fn new(y: Vec<u32>, m: Vec<u32>, x: DMatrix<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|k| format!("x{k}")).collect();
        Self::with_names(y, m, x, names)
    }

    pub fn with_names(y: Vec<u32>, m: Vec<u32>, x: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        let n = y.len();
        if m.len() != n || x.nrows() != n {
            return Err(Error::Design(format!(
                "length mismatch: y has {n} rows, m has {}, X has {}",
                m.len(),
                x.nrows()
            )));
        }
        if names.len() != x.ncols() {
            return Err(Error::Design("one name per regressor column required".into()));
        }
        for t in 0..n {
            if m[t] == 0 {
                return Err(Error::Validation {
                    row: t + 1,
                    msg: "trial count m must be at least 1".into(),
                });
            }
            if y[t] > m[t] {
                return Err(Error::Validation {
                    row: t + 1,
                    msg: format!("y = {} exceeds m = {}", y[t], m[t]),
                });
            }
            if let Some(k) = (0..x.ncols()).find(|&k| !x[(t, k)].is_finite()) {
                return Err(Error::Validation {
                    row: t + 1,
                    msg: format!("regressor {} is not finite", names[k]),
                });
            }
        }
        let r = x.ncols();
        if r == 0 {
            return Err(Error::Design(
                "no regressor columns (add an intercept column or use --intercept)".into(),
            ));
        }
        if n <= r {
            return Err(Error::Design(format!("need n > r, got n = {n}, r = {r}")));
        }
        let rank = column_rank(&x);
        if rank < r {
            return Err(Error::Design(format!(
                "regressor matrix is rank deficient (rank {rank} < {r})"
            )));
        }
        Ok(Self { y, m, x, names })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn r(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &[u32] {
        &self.y
    }

    pub fn m(&self) -> &[u32] {
        &self.m
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn regressor_names(&self) -> &[String] {
        &self.names
    }

    /// Linear predictor `x_t' beta` for every t.
    pub fn linear_predictor(&self, beta: &[f64]) -> Vec<f64> {
        debug_assert_eq!(beta.len(), self.r());
        (0..self.n())
            .map(|t| (0..self.r()).map(|k| self.x[(t, k)] * beta[k]).sum())
            .collect()
    }

    /// Same trials and regressors, new responses.
    pub fn with_responses(&self, y: Vec<u32>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::Design("response length differs from template".into()));
        }
        if let Some(t) = (0..y.len()).find(|&t| y[t] > self.m[t]) {
            return Err(Error::Validation {
                row: t + 1,
                msg: format!("y = {} exceeds m = {}", y[t], self.m[t]),
            });
        }
        // m and X were validated when `self` was built.
        Ok(Self {
            y,
            m: self.m.clone(),
            x: self.x.clone(),
            names: self.names.clone(),
        })
    }

    /// Writes the `y,m,<regressors>` CSV layout read back by [`read_csv`].
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["y".to_string(), "m".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).map_err(csv_io)?;
        for t in 0..self.n() {
            let mut rec = vec![self.y[t].to_string(), self.m[t].to_string()];
            rec.extend((0..self.r()).map(|k| format_float(self.x[(t, k)])));
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Numerical column rank of `x` via singular values.
pub fn column_rank(x: &DMatrix<f64>) -> usize {
    if x.ncols() == 0 || x.nrows() == 0 {
        return 0;
    }
    let sv = x.clone().singular_values();
    let max = sv.max();
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * max).count()
}

/// Shortest representation that parses back to the same double.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Which CSV columns hold the counts and regressors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub y: String,
    pub m: String,
    /// Regressor columns in order; `None` takes every other column in header order.
    pub regressors: Option<Vec<String>>,
    /// Prepend a constant-one column named `intercept`.
    pub intercept: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            y: "y".into(),
            m: "m".into(),
            regressors: None,
            intercept: false,
        }
    }
}

impl CsvSchema {
    pub fn with_intercept(mut self, on: bool) -> Self {
        self.intercept = on;
        self
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<BinomialSeries> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), schema)
}

pub fn save_csv(series: &BinomialSeries, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    series.write_csv(std::io::BufWriter::new(file))
}

/// Parses a headed CSV into a validated series. Rows are numbered from 1
/// (the first data row) in error messages.
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<BinomialSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            msg: format!("header: {e}"),
        })?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            row: 0,
            msg: format!("missing column '{name}'"),
        })
    };
    let iy = find(&schema.y)?;
    let im = find(&schema.m)?;
    if iy == im {
        return Err(Error::Parse {
            row: 0,
            msg: "y and m must be distinct columns".into(),
        });
    }
    let reg_idx: Vec<usize> = match &schema.regressors {
        Some(cols) => cols.iter().map(|c| find(c)).collect::<Result<_>>()?,
        None => (0..headers.len()).filter(|&i| i != iy && i != im).collect(),
    };
    let mut names: Vec<String> = Vec::new();
    if schema.intercept {
        names.push("intercept".into());
    }
    names.extend(reg_idx.iter().map(|&i| headers[i].to_string()));
    let dup = names.iter().collect::<BTreeSet<_>>().len() != names.len();
    if dup {
        return Err(Error::Parse {
            row: 0,
            msg: "duplicate regressor column names".into(),
        });
    }

    let mut y = Vec::new();
    let mut m = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            msg: e.to_string(),
        })?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let count = |i: usize, what: &str| -> Result<u32> {
            field(i).parse::<u32>().map_err(|_| Error::Parse {
                row,
                msg: format!("{what} = '{}' is not a non-negative integer", field(i)),
            })
        };
        y.push(count(iy, "y")?);
        m.push(count(im, "m")?);
        if schema.intercept {
            xs.push(1.0);
        }
        for &i in &reg_idx {
            let v = field(i).parse::<f64>().map_err(|_| Error::Parse {
                row,
                msg: format!("column '{}' = '{}' is not a number", &headers[i], field(i)),
            })?;
            xs.push(v);
        }
    }
    let r = names.len();
    let x = DMatrix::from_row_slice(y.len(), r, &xs);
    BinomialSeries::with_names(y, m, x, names)
}

/// Residual scaling exponent: `e_t = sigma_t^{-gamma} (y_t - m_t pi_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Residuals {
    Identity,
    Pearson,
    Score,
}

impl Residuals {
    pub fn gamma(self) -> u8 {
        match self {
            Residuals::Identity => 0,
            Residuals::Pearson => 1,
            Residuals::Score => 2,
        }
    }

    /// `sigma^{-gamma}` given `sigma^2`.
    #[inline]
    pub fn scale(self, sigma2: f64) -> f64 {
        match self {
            Residuals::Identity => 1.0,
            Residuals::Pearson => 1.0 / sigma2.sqrt(),
            Residuals::Score => 1.0 / sigma2,
        }
    }

    /// `Var(e_t) = sigma^{2 - 2 gamma}` given `sigma^2`.
    #[inline]
    pub fn variance(self, sigma2: f64) -> f64 {
        match self {
            Residuals::Identity => sigma2,
            Residuals::Pearson => 1.0,
            Residuals::Score => 1.0 / sigma2,
        }
    }
}

impl FromStr for Residuals {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" | "0" => Ok(Residuals::Identity),
            "pearson" | "1" => Ok(Residuals::Pearson),
            "score" | "2" => Ok(Residuals::Score),
            other => Err(Error::Parameter(format!(
                "unknown residual type '{other}' (identity|pearson|score)"
            ))),
        }
    }
}

impl fmt::Display for Residuals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Residuals::Identity => "identity",
            Residuals::Pearson => "pearson",
            Residuals::Score => "score",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Glarma,
    Barma,
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "glarma" => Ok(Family::Glarma),
            "barma" => Ok(Family::Barma),
            other => Err(Error::Parameter(format!(
                "unknown model family '{other}' (glarma|barma)"
            ))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Glarma => "glarma",
            Family::Barma => "barma",
        })
    }
}

/// Lag sets and residual type of the serial-dependence alternative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    j_phi: Vec<usize>,
    j_theta: Vec<usize>,
    residuals: Residuals,
    family: Family,
}

/// Overlap and union of the AR and MA lag sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LagPartition {
    /// `J_phi ∩ J_theta`: lags carrying a nuisance coefficient.
    pub overlap: Vec<usize>,
    /// `J_phi ∪ J_theta`: lags of the tested coefficients, ascending.
    pub union: Vec<usize>,
    pub psi_len: usize,
}

impl ModelSpec {
    /// Sorts both lag sets; rejects zero and repeated lags.
    pub fn new(mut j_phi: Vec<usize>, mut j_theta: Vec<usize>, residuals: Residuals, family: Family) -> Result<Self> {
        for (name, lags) in [("AR", &mut j_phi), ("MA", &mut j_theta)] {
            lags.sort_unstable();
            if lags.first() == Some(&0) {
                return Err(Error::Parameter(format!("{name} lags must be positive")));
            }
            if lags.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Parameter(format!("{name} lags contain duplicates")));
            }
        }
        Ok(Self {
            j_phi,
            j_theta,
            residuals,
            family,
        })
    }

    pub fn glarma(j_phi: Vec<usize>, j_theta: Vec<usize>, residuals: Residuals) -> Result<Self> {
        Self::new(j_phi, j_theta, residuals, Family::Glarma)
    }

    /// BARMA models always use identity residuals.
    pub fn barma(j_phi: Vec<usize>, j_theta: Vec<usize>) -> Result<Self> {
        Self::new(j_phi, j_theta, Residuals::Identity, Family::Barma)
    }

    pub fn j_phi(&self) -> &[usize] {
        &self.j_phi
    }

    pub fn j_theta(&self) -> &[usize] {
        &self.j_theta
    }

    pub fn residuals(&self) -> Residuals {
        self.residuals
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn partition(&self) -> LagPartition {
        lag_sets_partition(self)
    }

    /// Number of tested dependence parameters `L = |J_phi ∪ J_theta|`.
    pub fn psi_len(&self) -> usize {
        self.partition().psi_len
    }

    pub fn max_lag(&self) -> usize {
        self.j_phi.iter().chain(&self.j_theta).copied().max().unwrap_or(0)
    }

    /// Errors unless at least one dependence lag is present.
    pub fn require_dependence(&self) -> Result<()> {
        if self.j_phi.is_empty() && self.j_theta.is_empty() {
            Err(Error::Parameter(
                "at least one AR or MA lag is required for a dependence test".into(),
            ))
        } else {
            Ok(())
        }
    }

    pub(crate) fn require_family(&self, family: Family) -> Result<()> {
        if self.family != family {
            return Err(Error::Parameter(format!(
                "operation needs a {family} specification, got {}",
                self.family
            )));
        }
        Ok(())
    }
}

pub fn lag_sets_partition(spec: &ModelSpec) -> LagPartition {
    let phi: BTreeSet<usize> = spec.j_phi.iter().copied().collect();
    let theta: BTreeSet<usize> = spec.j_theta.iter().copied().collect();
    let overlap: Vec<usize> = phi.intersection(&theta).copied().collect();
    let union: Vec<usize> = phi.union(&theta).copied().collect();
    let psi_len = union.len();
    LagPartition {
        overlap,
        union,
        psi_len,
    }
}

/// Parses a comma-separated lag list such as `"1,2,4"`; empty input is the empty set.
pub fn parse_lags(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let mut lags = text
        .split(',')
        .map(|tok| {
            let tok = tok.trim();
            match tok.parse::<usize>() {
                Ok(0) => Err(Error::Parameter("lags must be positive".into())),
                Ok(l) if l > 100_000 => Err(Error::Parameter(format!("lag {l} is unreasonably large"))),
                Ok(l) => Ok(l),
                Err(_) => Err(Error::Parameter(format!("'{tok}' is not a lag"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    lags.sort_unstable();
    if lags.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Parameter("duplicate lag".into()));
    }
    Ok(lags)
}
