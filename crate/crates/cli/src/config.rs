//! TOML run configuration. Every key is optional; command-line flags take
//! precedence over file values, which take precedence over built-in defaults.

use std::path::PathBuf;

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub data: Option<PathBuf>,
    pub y_col: Option<String>,
    pub m_col: Option<String>,
    pub regressors: Option<Vec<String>>,
    pub intercept: Option<bool>,
    pub family: Option<String>,
    pub phi_lags: Option<Vec<usize>>,
    pub theta_lags: Option<Vec<usize>>,
    pub residuals: Option<String>,
    pub omega: Option<Vec<f64>>,
    pub omega_grid: Option<String>,
    pub sup: Option<bool>,
    pub max_lag: Option<usize>,
    pub wald_cov: Option<String>,
    pub test: Option<String>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub profile_csv: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Checks that do not depend on the command line.
    fn validate(&self) -> Result<(), CliError> {
        if self.omega.is_some() && (self.omega_grid.is_some() || self.sup == Some(true)) {
            return Err(CliError::Usage("config sets both omega and omega-grid/sup".into()));
        }
        for lags in [&self.phi_lags, &self.theta_lags].into_iter().flatten() {
            if lags.contains(&0) {
                return Err(CliError::Usage("config lags must be positive".into()));
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::Usage("threads must be at least 1".into()));
        }
        Ok(())
    }
}
