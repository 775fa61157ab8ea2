//! Calibration analysis for binary probabilistic classifiers: Brier-score
//! decomposition into refinement, grouping and group-wise calibration terms,
//! cost-weighted Brier curves, a probing reduction with certified error
//! bounds, and sufficiency diagnostics — validated against analytic
//! bivariate-Gaussian populations.

pub mod config;
pub mod curves;
pub mod error;
pub mod metrics;
pub mod model;
pub mod num;
pub mod probing;
pub mod report;
pub mod sufficiency;
pub mod verify;

pub use config::RunConfig;
pub use curves::{CurveKind, LossCurve, RefinementBounds};
pub use error::{Error, Result};
pub use metrics::{BrierDecomposition, IsotonicFit, Prediction};
pub use model::{GaussianBinaryModel, InformationScope, PopulationSample, ScoreLaw};
pub use probing::{ClassifierFamily, Crossing, Dominant, ProbingReport};
pub use sufficiency::{DominanceVerdict, HarnessReport, Relation};
pub use verify::CheckResult;
