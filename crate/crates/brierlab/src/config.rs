//! Run configuration: TOML file with model parameters and run-scale knobs,
//! overridable by CLI flags.

use crate::error::{Error, Result};
use crate::model::{GaussianBinaryModel, InformationScope};
use serde::Deserialize;
use std::path::Path;

/// Experiment configuration. The covariance matrix is given row-major as
/// four reals.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub prior: f64,
    pub mean_neg: [f64; 2],
    pub mean_pos: [f64; 2],
    pub cov: [f64; 4],
    pub seed: u64,
    pub n: usize,
    pub grid_points: usize,
    pub tolerance: f64,
    pub scopes: Vec<String>,
}

impl Default for RunConfig {
    /// Correlated two-component reference setup.
    fn default() -> Self {
        Self {
            prior: 0.1,
            mean_neg: [0.0, 0.0],
            mean_pos: [1.0, 2.0],
            cov: [1.0, 0.5, 0.5, 1.0],
            seed: 1,
            n: 1_000_000,
            grid_points: 1001,
            tolerance: 1e-3,
            scopes: InformationScope::ALL.iter().map(|s| s.label().to_string()).collect(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| text[..s.start].lines().count()),
            msg: e.message().to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        if self.grid_points < 3 {
            return Err(Error::Domain("grid_points must be at least 3".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Domain("tolerance must be nonnegative".into()));
        }
        self.model()?;
        self.scope_list()?;
        Ok(())
    }

    pub fn model(&self) -> Result<GaussianBinaryModel> {
        let [a, b, c, d] = self.cov;
        GaussianBinaryModel::new(self.prior, self.mean_neg, self.mean_pos, [[a, b], [c, d]])
    }

    pub fn scope_list(&self) -> Result<Vec<InformationScope>> {
        if self.scopes.is_empty() {
            return Err(Error::Domain("scopes must be nonempty".into()));
        }
        self.scopes.iter().map(|s| InformationScope::parse(s)).collect()
    }
}
