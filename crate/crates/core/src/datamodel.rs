//! Data containers, validation, standardization and random sample splitting.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed::Rng;

/// Minimum number of rows for the split-based tests (four per half).
pub const MIN_TEST_ROWS: usize = 8;

/// Response `y`, interest covariates `x` (n × p1) and nuisance covariates `z` (n × p2).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    z: Array2<f64>,
    y: Array1<f64>,
}

impl Dataset {
    /// Builds a dataset, checking shapes and finiteness.
    pub fn new(x: Array2<f64>, z: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let d = Dataset { x, z, y };
        validate(&d)?;
        Ok(d)
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn z(&self) -> &Array2<f64> {
        &self.z
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn p1(&self) -> usize {
        self.x.ncols()
    }

    pub fn p2(&self) -> usize {
        self.z.ncols()
    }

    /// Copies the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), rows),
            z: self.z.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
        }
    }

    /// Exchanges the roles of `x` and `z`, for testing the nuisance block instead.
    pub fn swap_roles(self) -> Dataset {
        Dataset {
            x: self.z,
            z: self.x,
            y: self.y,
        }
    }

    pub fn into_parts(self) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
        (self.x, self.z, self.y)
    }
}

pub fn validate(d: &Dataset) -> Result<()> {
    let n = d.y.len();
    if d.x.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "x has {} rows but y has length {n}",
            d.x.nrows()
        )));
    }
    if d.z.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "z has {} rows but y has length {n}",
            d.z.nrows()
        )));
    }
    if d.x.ncols() == 0 {
        return Err(Error::DimensionMismatch("x has no columns".into()));
    }
    if d.z.ncols() == 0 {
        return Err(Error::DimensionMismatch("z has no columns".into()));
    }
    check_finite("x", &d.x)?;
    check_finite("z", &d.z)?;
    if let Some(row) = d.y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteEntry { field: "y", row, col: 0 });
    }
    Ok(())
}

fn check_finite(field: &'static str, m: &Array2<f64>) -> Result<()> {
    for ((row, col), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFiniteEntry { field, row, col });
        }
    }
    Ok(())
}

/// Mean and sample standard deviation (divisor n − 1).
fn mean_sd(v: ArrayView1<f64>) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    let ss: f64 = v.iter().map(|a| (a - mean) * (a - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn standardize_columns(field: &'static str, m: &Array2<f64>) -> Result<Array2<f64>> {
    let mut out = m.clone();
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        let (mean, sd) = mean_sd(col.view());
        if !(sd > 0.0) || sd <= 1e-12 * mean.abs().max(1.0) {
            return Err(Error::ConstantColumn { field, index: j });
        }
        col.mapv_inplace(|v| (v - mean) / sd);
    }
    Ok(out)
}

/// Centers every column of `x`, `z` and the response to mean 0 and scales to sample variance 1.
pub fn standardize(d: &Dataset) -> Result<Dataset> {
    if d.n_rows() < 2 {
        return Err(Error::TooFewRows { needed: 2, got: d.n_rows() });
    }
    let x = standardize_columns("x", &d.x)?;
    let z = standardize_columns("z", &d.z)?;
    let (mean, sd) = mean_sd(d.y.view());
    if !(sd > 0.0) || sd <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::ConstantColumn { field: "y", index: 0 });
    }
    let y = d.y.mapv(|v| (v - mean) / sd);
    Ok(Dataset { x, z, y })
}

/// Equal-size partition of `0..n_total` into two halves.
///
/// Indices within each half are kept in ascending order. For odd `n_total`
/// one uniformly chosen row is left out and recorded in `dropped`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub d1: Vec<usize>,
    pub d2: Vec<usize>,
    pub dropped: Option<usize>,
}

impl SplitPlan {
    pub fn half_size(&self) -> usize {
        self.d1.len()
    }

    /// Fitting half and evaluation half for fold `k` (1 or 2): the model is fit on `D_k`
    /// and evaluated on `D_{3-k}`.
    pub fn fold(&self, k: usize) -> (&[usize], &[usize]) {
        match k {
            1 => (&self.d1, &self.d2),
            _ => (&self.d2, &self.d1),
        }
    }
}

pub fn random_split(n_total: usize, rng: &mut Rng) -> Result<SplitPlan> {
    if n_total < MIN_TEST_ROWS {
        return Err(Error::TooFewRows { needed: MIN_TEST_ROWS, got: n_total });
    }
    let mut idx: Vec<usize> = (0..n_total).collect();
    let dropped = if n_total % 2 == 1 {
        let k = rng.random_range(0..n_total);
        Some(idx.remove(k))
    } else {
        None
    };
    idx.shuffle(rng);
    let n = idx.len() / 2;
    let mut d1 = idx[..n].to_vec();
    let mut d2 = idx[n..].to_vec();
    d1.sort_unstable();
    d2.sort_unstable();
    Ok(SplitPlan { d1, d2, dropped })
}
