//! Estimators of the nuisance function g from `(z, y)` pairs.
//!
//! Estimators see only the nuisance covariates and the response; the interest
//! covariates never enter this module.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod forest;
pub mod lasso;

pub use forest::{forest_fit, ForestParams, RandomForest};
pub use lasso::{lasso_cv, lasso_cv_path, lasso_fit, LassoCv, LassoFit, LassoParams};

/// A fitted predictor of g evaluated on a single nuisance-covariate row.
pub trait Predictor: Send + Sync + fmt::Debug {
    fn predict_row(&self, z: ArrayView1<f64>) -> f64;
}

/// Anything that can fit a [`NuisanceModel`] from `(z, y)`.
///
/// Implement this to plug additional learners into the tests.
pub trait NuisanceEstimator: Send + Sync {
    fn name(&self) -> String;
    fn fit(&self, z: ArrayView2<f64>, y: ArrayView1<f64>, seed: u64) -> Result<NuisanceModel>;
}

/// Fitted ĝ plus what was chosen while fitting it.
#[derive(Debug)]
pub struct NuisanceModel {
    predictor: Box<dyn Predictor>,
    pub estimator: String,
    pub hyperparameters: BTreeMap<String, f64>,
    /// Which half of a split the model was trained on, when known.
    pub fold: Option<usize>,
}

impl NuisanceModel {
    pub fn new(estimator: impl Into<String>, predictor: Box<dyn Predictor>) -> Self {
        NuisanceModel {
            predictor,
            estimator: estimator.into(),
            hyperparameters: BTreeMap::new(),
            fold: None,
        }
    }

    pub fn with_hyperparameter(mut self, key: &str, value: f64) -> Self {
        self.hyperparameters.insert(key.to_string(), value);
        self
    }

    pub fn predict_row(&self, z: ArrayView1<f64>) -> f64 {
        self.predictor.predict_row(z)
    }

    pub fn predict(&self, z: ArrayView2<f64>) -> Array1<f64> {
        z.rows().into_iter().map(|r| self.predictor.predict_row(r)).collect()
    }
}

/// The built-in estimators, selectable from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum NuisanceMethod {
    Lasso(LassoParams),
    Forest(ForestParams),
}

impl NuisanceMethod {
    /// Default-parameter estimator from its name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "lasso" => Ok(NuisanceMethod::Lasso(LassoParams::default())),
            "forest" | "rf" => Ok(NuisanceMethod::Forest(ForestParams::default())),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            NuisanceMethod::Lasso(_) => "lasso",
            NuisanceMethod::Forest(_) => "forest",
        }
    }
}

impl Default for NuisanceMethod {
    fn default() -> Self {
        NuisanceMethod::Lasso(LassoParams::default())
    }
}

impl NuisanceEstimator for NuisanceMethod {
    fn name(&self) -> String {
        self.short_name().to_string()
    }

    fn fit(&self, z: ArrayView2<f64>, y: ArrayView1<f64>, seed: u64) -> Result<NuisanceModel> {
        if y.is_empty() {
            return Err(Error::TooFewRows { needed: 1, got: 0 });
        }
        if z.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "z has {} rows, y has {}",
                z.nrows(),
                y.len()
            )));
        }
        match self {
            NuisanceMethod::Lasso(p) => lasso_cv(z, y, p, &mut crate::seed::rng_from(seed)),
            NuisanceMethod::Forest(p) => forest_fit(z, y, p, seed),
        }
    }
}

/// Dispatches a named estimator on the fitting half.
pub fn fit_nuisance(
    method: &str,
    z: ArrayView2<f64>,
    y: ArrayView1<f64>,
    seed: u64,
) -> Result<NuisanceModel> {
    NuisanceMethod::from_name(method)?.fit(z, y, seed)
}

/// Dot product with four independent accumulators; fixed summation order.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}
