//! Quadratic-form and power-enhanced tests for the linear part of a
//! high-dimensional partially linear model
//!
//! ```text
//! Y = Xᵀβ + g(Z) + ε,    H₀: β = 0,
//! ```
//!
//! with the nuisance function `g` estimated by a machine-learning method on
//! one half of the sample and the test statistic evaluated on the other half.
//!
//! The crate is organised as the pipeline runs:
//!
//! * [`datamodel`]: datasets, validation, standardization, sample splits
//! * [`simgen`]: simulated designs (Toeplitz covariates, three nuisance models)
//! * [`nuisance`]: cross-validated Lasso and a regression forest
//! * [`qtest`]: the normalized quadratic-form statistic and split-based inference
//! * [`penhance`]: power enhancement with hard or bootstrap thresholds
//! * [`harness`]: Monte Carlo grids, real-data runs, CSV and text reports
//!
//! Work over replicates runs on a rayon pool when the `parallel` feature is
//! enabled (the default) and sequentially otherwise; results do not depend on
//! the number of workers.

pub mod datamodel;
pub mod error;
pub mod harness;
pub mod normal;
pub mod nuisance;
pub mod oracle;
pub mod parallel;
pub mod penhance;
pub mod qtest;
pub mod seed;
pub mod simgen;

pub use datamodel::{random_split, standardize, Dataset, SplitPlan};
pub use error::{Error, Result};
pub use harness::{run_grid, ExperimentConfig, TestKind};
pub use nuisance::{fit_nuisance, NuisanceEstimator, NuisanceMethod, NuisanceModel};
pub use penhance::{PeSettings, ThresholdKind};
pub use qtest::{multi_split_test, single_split_test, Aggregation, FoldStatistics, TestOutcome, TestSettings};
pub use simgen::{generate, GenConfig, Model, Scenario};
