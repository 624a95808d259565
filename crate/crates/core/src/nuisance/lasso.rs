//! Lasso by cyclic coordinate descent with warm-started λ paths and K-fold
//! cross-validation.
//!
//! Columns are centered and scaled to unit variance (divisor n) before
//! fitting; the response is centered. The penalized objective is
//! `(1/2n)‖y − b₀ − Z b‖² + λ‖b‖₁` on that standardized scale, and
//! coefficients are mapped back to the original scale afterwards.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{dot, NuisanceModel, Predictor};
use crate::error::{Error, Result};
use crate::seed::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoParams {
    pub folds: usize,
    pub n_lambda: usize,
    pub lambda_min_ratio: f64,
    /// Stop when the largest standardized coefficient change in a sweep is below this.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoParams {
    fn default() -> Self {
        LassoParams {
            folds: 10,
            n_lambda: 100,
            lambda_min_ratio: 1e-3,
            tol: 1e-7,
            max_sweeps: 1000,
        }
    }
}

// Path early stopping, as in glmnet: stop once the fit is saturated or the
// deviance explained stops moving.
const SATURATED_DEV_RATIO: f64 = 0.999;
const MIN_FRACTIONAL_DEV_CHANGE: f64 = 1e-5;
const MIN_PATH_POINTS: usize = 5;

/// A solve that runs out of sweeps is still accepted when its KKT violation is below this.
const KKT_ACCEPT: f64 = 1e-5;

/// Column-major standardized design.
struct Standardized {
    n: usize,
    p: usize,
    cols: Vec<f64>,
    /// ‖col_j‖²/n; zero marks a constant column that never enters the model.
    sq: Vec<f64>,
    centers: Vec<f64>,
    scales: Vec<f64>,
    y_mean: f64,
    yc: Vec<f64>,
}

impl Standardized {
    fn new(z: ArrayView2<f64>, y: ArrayView1<f64>) -> Self {
        let (n, p) = z.dim();
        let nf = n as f64;
        let mut cols = vec![0.0; n * p];
        let mut sq = vec![0.0; p];
        let mut centers = vec![0.0; p];
        let mut scales = vec![0.0; p];
        for j in 0..p {
            let col = z.column(j);
            let mean = col.sum() / nf;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
            let sd = var.sqrt();
            centers[j] = mean;
            let dst = &mut cols[j * n..(j + 1) * n];
            if sd > 1e-12 * mean.abs().max(1.0) {
                scales[j] = sd;
                for (d, v) in dst.iter_mut().zip(col.iter()) {
                    *d = (v - mean) / sd;
                }
                sq[j] = dot(dst, dst) / nf;
            }
        }
        let y_mean = y.sum() / nf;
        let yc = y.iter().map(|v| v - y_mean).collect();
        Standardized { n, p, cols, sq, centers, scales, y_mean, yc }
    }

    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.n..(j + 1) * self.n]
    }

    fn lambda_max(&self) -> f64 {
        let nf = self.n as f64;
        (0..self.p)
            .filter(|&j| self.sq[j] > 0.0)
            .map(|j| dot(self.col(j), &self.yc).abs() / nf)
            .fold(0.0, f64::max)
    }

    fn tss(&self) -> f64 {
        dot(&self.yc, &self.yc)
    }
}

#[inline]
fn soft(u: f64, lambda: f64) -> f64 {
    if u > lambda {
        u - lambda
    } else if u < -lambda {
        u + lambda
    } else {
        0.0
    }
}

/// Coefficients and residuals `yc − Z·beta` of the standardized problem.
#[derive(Clone)]
struct CdState {
    beta: Vec<f64>,
    resid: Vec<f64>,
    gram: GramCache,
}

impl CdState {
    fn zero(prob: &Standardized) -> Self {
        CdState { beta: vec![0.0; prob.p], resid: prob.yc.clone(), gram: GramCache::new(prob.p) }
    }

    fn objective(&self, lambda: f64) -> f64 {
        let n = self.resid.len() as f64;
        dot(&self.resid, &self.resid) / (2.0 * n) + lambda * self.beta.iter().map(|b| b.abs()).sum::<f64>()
    }
}

/// Inner products z_jᵀz_k/n among every column that has been active, filled lazily.
#[derive(Clone)]
struct GramCache {
    slot: Vec<usize>,
    columns: Vec<usize>,
    /// Row `a` holds the products of slot `a` with slots `0..=a`.
    rows: Vec<Vec<f64>>,
}

impl GramCache {
    fn new(p: usize) -> Self {
        GramCache { slot: vec![usize::MAX; p], columns: Vec::new(), rows: Vec::new() }
    }

    fn slot_of(&mut self, prob: &Standardized, j: usize) -> usize {
        if self.slot[j] == usize::MAX {
            let nf = prob.n as f64;
            let col = prob.col(j);
            let mut row: Vec<f64> = self.columns.iter().map(|&k| dot(col, prob.col(k)) / nf).collect();
            row.push(prob.sq[j]);
            self.slot[j] = self.columns.len();
            self.columns.push(j);
            self.rows.push(row);
        }
        self.slot[j]
    }

    fn get(&self, a: usize, b: usize) -> f64 {
        if b <= a { self.rows[a][b] } else { self.rows[b][a] }
    }
}

fn update(prob: &Standardized, lambda: f64, st: &mut CdState, j: usize) -> f64 {
    let sq = prob.sq[j];
    if sq == 0.0 {
        return 0.0;
    }
    let col = prob.col(j);
    let old = st.beta[j];
    let g = dot(col, &st.resid) / prob.n as f64;
    let new = soft(g + sq * old, lambda) / sq;
    let delta = new - old;
    if delta != 0.0 {
        st.beta[j] = new;
        for (r, c) in st.resid.iter_mut().zip(col) {
            *r -= delta * c;
        }
    }
    delta.abs()
}


/// Active-set cycling: sweeps over the working set alternate with sweeps over
/// its nonzero coordinates until a working-set sweep moves nothing by more
/// than `tol`.
///
/// With `previous_lambda` set, the working set starts from the sequential
/// strong rule (nonzero coordinates plus those with |z_jᵀr|/n ≥ 2λ − λ_prev);
/// coordinates outside it are checked against the KKT conditions at the end
/// and added if they violate them. Without it every coordinate is swept.
fn solve(
    prob: &Standardized,
    lambda: f64,
    st: &mut CdState,
    params: &LassoParams,
    mut trace: Option<&mut Vec<f64>>,
    previous_lambda: Option<f64>,
) -> Result<usize> {
    let nf = prob.n as f64;
    let mut working: Vec<bool> = match previous_lambda {
        None => vec![true; prob.p],
        Some(prev) => {
            let cut = 2.0 * lambda - prev;
            (0..prob.p)
                .map(|j| st.beta[j] != 0.0 || (prob.sq[j] > 0.0 && dot(prob.col(j), &st.resid).abs() / nf >= cut))
                .collect()
        }
    };
    let mut sweeps = 0;
    let mut last_change = f64::INFINITY;
    let record = |st: &CdState, trace: &mut Option<&mut Vec<f64>>| {
        if let Some(t) = trace.as_deref_mut() {
            t.push(st.objective(lambda));
        }
    };
    'outer: while sweeps < params.max_sweeps {
        let set: Vec<usize> = (0..prob.p).filter(|&j| working[j]).collect();
        let full = set.iter().map(|&j| update(prob, lambda, st, j)).fold(0.0, f64::max);
        sweeps += 1;
        record(st, &mut trace);
        last_change = full;
        if full < params.tol {
            let mut added = false;
            for j in 0..prob.p {
                if !working[j] && prob.sq[j] > 0.0 && dot(prob.col(j), &st.resid).abs() / nf > lambda {
                    working[j] = true;
                    added = true;
                }
            }
            if !added {
                return Ok(sweeps);
            }
            continue 'outer;
        }
        let active: Vec<usize> = set.into_iter().filter(|&j| st.beta[j] != 0.0).collect();
        let mut inner = 0;
        while sweeps < params.max_sweeps {
            let change = active.iter().map(|&j| update(prob, lambda, st, j)).fold(0.0, f64::max);
            sweeps += 1;
            inner += 1;
            record(st, &mut trace);
            last_change = change;
            if change < params.tol {
                break;
            }
            if inner % NEWTON_EVERY == 0 && orthant_step(prob, lambda, st, &active) {
                record(st, &mut trace);
            }
        }
    }
    let kkt = kkt_violation(prob, lambda, &st.beta, &st.resid);
    if kkt <= KKT_ACCEPT {
        log::trace!("lasso stopped at {sweeps} sweeps (max change {last_change:.2e}, KKT {kkt:.2e})");
        return Ok(sweeps);
    }
    Err(Error::NonConvergence { sweeps, max_change: last_change, kkt })
}

/// Active-set sweeps between attempts at an exact step within the current orthant.
const NEWTON_EVERY: usize = 10;

/// Relative ridge added to the active Gram matrix in `orthant_step`.
const RIDGE: f64 = 1e-9;

/// Moves the active coefficients along a Newton direction for the objective
/// restricted to their current sign pattern, stopping at the exact minimizer
/// along that line or where the first coefficient reaches zero.
///
/// Within one orthant the objective is a convex quadratic, so the step never
/// raises it. The step helps where coordinate descent crawls on strongly
/// correlated columns. A small ridge keeps the system solvable when the active
/// set is as large as the sample; the direction then mostly pushes
/// coefficients toward zero. Returns false if no step is taken.
fn orthant_step(prob: &Standardized, lambda: f64, st: &mut CdState, active: &[usize]) -> bool {
    let mut moved = false;
    // Each blocked step zeroes at least one coefficient, so this terminates.
    for _ in 0..=active.len() {
        match orthant_step_once(prob, lambda, st, active) {
            Step::Interior => return true,
            Step::Boundary => moved = true,
            Step::None => break,
        }
    }
    moved
}

enum Step {
    /// Reached the minimizer along the direction.
    Interior,
    /// Stopped where a coefficient reached zero.
    Boundary,
    None,
}

fn orthant_step_once(prob: &Standardized, lambda: f64, st: &mut CdState, active: &[usize]) -> Step {
    let active: Vec<usize> = active.iter().copied().filter(|&j| st.beta[j] != 0.0).collect();
    let k = active.len();
    if k == 0 {
        return Step::None;
    }
    let nf = prob.n as f64;
    let slots: Vec<usize> = active.iter().map(|&j| st.gram.slot_of(prob, j)).collect();
    let mut gram = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for (a, &ja) in active.iter().enumerate() {
        for b in 0..=a {
            let v = st.gram.get(slots[a], slots[b]);
            gram[a * k + b] = v;
            gram[b * k + a] = v;
        }
        // Negative gradient of the objective within this orthant.
        let c = dot(prob.col(ja), &st.resid) / nf;
        rhs[a] = c - lambda * st.beta[ja].signum();
    }
    let ridge = RIDGE * (0..k).map(|a| gram[a * k + a]).fold(0.0, f64::max).max(1e-300);
    let mut g = gram.clone();
    for a in 0..k {
        g[a * k + a] += ridge;
    }
    // Solve (G + μI)·dir = rhs by Cholesky (lower factor, row-major).
    for j in 0..k {
        let row_j = &mut g[j * k..(j + 1) * k];
        let d = row_j[j] - dot(&row_j[..j], &row_j[..j]);
        if !(d > 0.0) {
            return Step::None;
        }
        let d = d.sqrt();
        row_j[j] = d;
        let lj: Vec<f64> = row_j[..j].to_vec();
        for i in (j + 1)..k {
            let row_i = &mut g[i * k..(i + 1) * k];
            row_i[j] = (row_i[j] - dot(&row_i[..j], &lj)) / d;
        }
    }
    let mut dir = rhs.clone();
    for i in 0..k {
        let row = &g[i * k..i * k + i];
        dir[i] = (dir[i] - dot(row, &dir[..i])) / g[i * k + i];
    }
    for i in (0..k).rev() {
        let mut v = dir[i];
        for m in (i + 1)..k {
            v -= g[m * k + i] * dir[m];
        }
        dir[i] = v / g[i * k + i];
    }
    let slope = dot(&rhs, &dir);
    let curvature: f64 = (0..k).map(|a| dir[a] * dot(&gram[a * k..(a + 1) * k], &dir)).sum();
    if !(slope > 0.0) {
        return Step::None;
    }
    let interior = if curvature > 0.0 { slope / curvature } else { f64::INFINITY };
    let mut t = interior;
    for (a, &j) in active.iter().enumerate() {
        let b = st.beta[j];
        if b * dir[a] < 0.0 {
            t = f64::min(t, -b / dir[a]);
        }
    }
    if !t.is_finite() {
        return Step::None;
    }
    for (a, &j) in active.iter().enumerate() {
        let old = st.beta[j];
        let mut new = old + t * dir[a];
        if old * new <= 0.0 {
            new = 0.0;
        }
        let delta = new - old;
        if delta != 0.0 {
            st.beta[j] = new;
            for (r, c) in st.resid.iter_mut().zip(prob.col(j)) {
                *r -= delta * c;
            }
        }
    }
    if t < interior { Step::Boundary } else { Step::Interior }
}

fn kkt_violation(prob: &Standardized, lambda: f64, beta: &[f64], resid: &[f64]) -> f64 {
    let nf = prob.n as f64;
    (0..prob.p)
        .filter(|&j| prob.sq[j] > 0.0)
        .map(|j| {
            let g = dot(prob.col(j), resid) / nf;
            if beta[j] != 0.0 {
                (g - lambda * beta[j].signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

fn lambda_grid(lambda_max: f64, params: &LassoParams) -> Vec<f64> {
    let k = params.n_lambda.max(1);
    if k == 1 || lambda_max == 0.0 {
        return vec![lambda_max];
    }
    let ratio = params.lambda_min_ratio.ln();
    (0..k)
        .map(|i| lambda_max * (ratio * i as f64 / (k - 1) as f64).exp())
        .collect()
}

/// Warm-started path; stops early once saturated. Returns standardized
/// coefficients for each fitted λ.
fn fit_path(prob: &Standardized, lambdas: &[f64], params: &LassoParams) -> Result<Vec<Vec<f64>>> {
    let tss = prob.tss();
    let mut st = CdState::zero(prob);
    let mut out = Vec::with_capacity(lambdas.len());
    let mut prev_dev = 0.0;
    for (k, &lam) in lambdas.iter().enumerate() {
        let previous = if k == 0 { prob.lambda_max() } else { lambdas[k - 1] };
        solve(prob, lam, &mut st, params, None, Some(previous))?;
        out.push(st.beta.clone());
        if tss <= 0.0 {
            break;
        }
        let dev = 1.0 - dot(&st.resid, &st.resid) / tss;
        if k + 1 >= MIN_PATH_POINTS
            && (dev > SATURATED_DEV_RATIO || dev - prev_dev < MIN_FRACTIONAL_DEV_CHANGE * dev)
        {
            break;
        }
        prev_dev = dev;
    }
    Ok(out)
}

/// A Lasso solution mapped back to the original covariate scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub intercept: f64,
    pub coefficients: Array1<f64>,
    pub lambda: f64,
    pub centers: Array1<f64>,
    pub scales: Array1<f64>,
    /// Coefficients on the standardized scale.
    pub standardized: Array1<f64>,
}

impl LassoFit {
    fn from_standardized(prob: &Standardized, beta: &[f64], lambda: f64) -> Self {
        let coefficients: Array1<f64> = (0..prob.p)
            .map(|j| if prob.scales[j] > 0.0 { beta[j] / prob.scales[j] } else { 0.0 })
            .collect();
        let intercept = prob.y_mean
            - coefficients.iter().zip(&prob.centers).map(|(c, m)| c * m).sum::<f64>();
        LassoFit {
            intercept,
            coefficients,
            lambda,
            centers: Array1::from(prob.centers.clone()),
            scales: Array1::from(prob.scales.clone()),
            standardized: Array1::from(beta.to_vec()),
        }
    }

    pub fn active_set(&self) -> Vec<usize> {
        (0..self.coefficients.len()).filter(|&j| self.coefficients[j] != 0.0).collect()
    }

    /// Largest KKT violation of the standardized problem on `(z, y)`.
    pub fn kkt_residual(&self, z: ArrayView2<f64>, y: ArrayView1<f64>) -> f64 {
        let prob = Standardized::new(z, y);
        let mut resid = prob.yc.clone();
        for j in 0..prob.p {
            let b = self.standardized[j];
            if b != 0.0 {
                for (r, c) in resid.iter_mut().zip(prob.col(j)) {
                    *r -= b * c;
                }
            }
        }
        kkt_violation(&prob, self.lambda, self.standardized.as_slice().unwrap(), &resid)
    }
}

impl Predictor for LassoFit {
    fn predict_row(&self, z: ArrayView1<f64>) -> f64 {
        self.intercept + z.dot(&self.coefficients)
    }
}

fn check_inputs(z: ArrayView2<f64>, y: ArrayView1<f64>, min_rows: usize) -> Result<()> {
    if z.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "z has {} rows, y has {}",
            z.nrows(),
            y.len()
        )));
    }
    if y.len() < min_rows {
        return Err(Error::TooFewRows { needed: min_rows, got: y.len() });
    }
    Ok(())
}

/// Lasso at a single λ, cold-started from zero.
pub fn lasso_fit(
    z: ArrayView2<f64>,
    y: ArrayView1<f64>,
    lambda: f64,
    params: &LassoParams,
) -> Result<LassoFit> {
    check_inputs(z, y, 2)?;
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("lambda must be >= 0, got {lambda}")));
    }
    let prob = Standardized::new(z, y);
    let mut st = CdState::zero(&prob);
    solve(&prob, lambda, &mut st, params, None, None)?;
    Ok(LassoFit::from_standardized(&prob, &st.beta, lambda))
}

/// Objective value after every coordinate-descent sweep at a single λ.
pub fn lasso_objective_trace(
    z: ArrayView2<f64>,
    y: ArrayView1<f64>,
    lambda: f64,
    params: &LassoParams,
) -> Result<Vec<f64>> {
    check_inputs(z, y, 2)?;
    let prob = Standardized::new(z, y);
    let mut st = CdState::zero(&prob);
    let mut trace = vec![st.objective(lambda)];
    solve(&prob, lambda, &mut st, params, Some(&mut trace), None)?;
    Ok(trace)
}

/// Smallest λ for which the all-zero solution is optimal.
pub fn lambda_max(z: ArrayView2<f64>, y: ArrayView1<f64>) -> f64 {
    Standardized::new(z, y).lambda_max()
}

/// Every point of a warm-started path, mapped to the original scale.
pub fn lasso_path(
    z: ArrayView2<f64>,
    y: ArrayView1<f64>,
    params: &LassoParams,
) -> Result<Vec<LassoFit>> {
    check_inputs(z, y, 2)?;
    let prob = Standardized::new(z, y);
    let lambdas = lambda_grid(prob.lambda_max(), params);
    let path = fit_path(&prob, &lambdas, params)?;
    Ok(path
        .iter()
        .zip(&lambdas)
        .map(|(b, &l)| LassoFit::from_standardized(&prob, b, l))
        .collect())
}

/// Outcome of cross-validated λ selection.
#[derive(Debug, Clone)]
pub struct LassoCv {
    pub fit: LassoFit,
    pub lambdas: Vec<f64>,
    /// Mean out-of-fold squared error at each λ.
    pub cv_errors: Vec<f64>,
    pub best: usize,
}

pub fn lasso_cv_path(
    z: ArrayView2<f64>,
    y: ArrayView1<f64>,
    params: &LassoParams,
    rng: &mut Rng,
) -> Result<LassoCv> {
    let folds = params.folds;
    if folds < 2 {
        return Err(Error::Config(format!("lasso needs at least 2 folds, got {folds}")));
    }
    check_inputs(z, y, folds.max(2))?;
    let n = y.len();

    let full = Standardized::new(z, y);
    let mut lambdas = lambda_grid(full.lambda_max(), params);
    let full_path = fit_path(&full, &lambdas, params)?;
    lambdas.truncate(full_path.len());

    let mut assignment: Vec<usize> = (0..n).map(|i| i % folds).collect();
    assignment.shuffle(rng);

    let mut sse = vec![0.0; lambdas.len()];
    for f in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| assignment[i] == f).collect();
        let zt = z.select(ndarray::Axis(0), &train);
        let yt = y.select(ndarray::Axis(0), &train);
        let prob = Standardized::new(zt.view(), yt.view());
        let path = fit_path(&prob, &lambdas, params)?;
        for (k, err) in sse.iter_mut().enumerate() {
            let beta = &path[k.min(path.len() - 1)];
            let active: Vec<usize> = (0..prob.p).filter(|&j| beta[j] != 0.0).collect();
            for &i in &test {
                let row = z.row(i);
                let pred = prob.y_mean
                    + active
                        .iter()
                        .map(|&j| (row[j] - prob.centers[j]) / prob.scales[j] * beta[j])
                        .sum::<f64>();
                *err += (y[i] - pred).powi(2);
            }
        }
    }
    let cv_errors: Vec<f64> = sse.iter().map(|s| s / n as f64).collect();
    let best = cv_errors
        .iter()
        .enumerate()
        .fold(0, |b, (k, e)| if *e < cv_errors[b] { k } else { b });
    let fit = LassoFit::from_standardized(&full, &full_path[best], lambdas[best]);
    Ok(LassoCv { fit, lambdas, cv_errors, best })
}

/// Cross-validated Lasso as a nuisance model (λ minimizing CV error, refit on all rows).
pub fn lasso_cv(
    z: ArrayView2<f64>,
    y: ArrayView1<f64>,
    params: &LassoParams,
    rng: &mut Rng,
) -> Result<NuisanceModel> {
    let cv = lasso_cv_path(z, y, params, rng)?;
    let nnz = cv.fit.active_set().len() as f64;
    Ok(NuisanceModel::new("lasso", Box::new(cv.fit.clone()))
        .with_hyperparameter("lambda", cv.fit.lambda)
        .with_hyperparameter("cv_error", cv.cv_errors[cv.best])
        .with_hyperparameter("nonzero", nnz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use ndarray::Array2;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng_from(seed);
        Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn above_lambda_max_everything_is_zero() {
        let z = gaussian(40, 15, 1);
        let y = z.column(0).to_owned() + 0.5 * &z.column(3);
        let lmax = lambda_max(z.view(), y.view());
        let fit = lasso_fit(z.view(), y.view(), lmax * 1.0001, &LassoParams::default()).unwrap();
        assert!(fit.coefficients.iter().all(|&c| c == 0.0));
        assert!((fit.intercept - y.mean().unwrap()).abs() < 1e-12);
        let below = lasso_fit(z.view(), y.view(), lmax * 0.9, &LassoParams::default()).unwrap();
        assert!(!below.active_set().is_empty());
    }

    #[test]
    fn single_feature_closed_form() {
        // Standardize z (divisor n) and center y so the standardized problem is the raw one.
        let n = 30;
        let raw = gaussian(n, 1, 4);
        let m = raw.mean().unwrap();
        let sd = (raw.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        let z = raw.mapv(|v| (v - m) / sd);
        let mut y = 2.0 * &z.column(0) + gaussian(n, 1, 5).column(0);
        let ym = y.mean().unwrap();
        y.mapv_inplace(|v| v - ym);
        for lambda in [0.0, 0.3, 1.0, 5.0] {
            let fit = lasso_fit(z.view(), y.view(), lambda, &LassoParams::default()).unwrap();
            let u = z.column(0).dot(&y) / n as f64;
            let expected = u.signum() * (u.abs() - lambda).max(0.0);
            // ‖z‖²/n = 1 up to rounding.
            assert!((fit.coefficients[0] - expected).abs() < 1e-10, "lambda {lambda}");
        }
    }

    #[test]
    fn zero_lambda_matches_least_squares() {
        let z = gaussian(60, 6, 8);
        let noise = gaussian(60, 1, 9);
        let y = 1.5 - &z.column(1) + 0.7 * &z.column(4) + 0.3 * &noise.column(0);
        let fit = lasso_fit(z.view(), y.view(), 0.0, &LassoParams::default()).unwrap();
        let (b0, b) = crate::oracle::least_squares(z.view(), y.view());
        assert!((fit.intercept - b0).abs() < 1e-6);
        for (a, e) in fit.coefficients.iter().zip(&b) {
            assert!((a - e).abs() < 1e-6, "{a} vs {e}");
        }
    }

    #[test]
    fn objective_never_increases() {
        let z = gaussian(50, 80, 12);
        let y = z.column(0).to_owned() - &z.column(7) + gaussian(50, 1, 13).column(0);
        let lmax = lambda_max(z.view(), y.view());
        for frac in [0.5, 0.1, 0.01] {
            let params = LassoParams { max_sweeps: 50_000, ..Default::default() };
            let trace = lasso_objective_trace(z.view(), y.view(), frac * lmax, &params).unwrap();
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn path_points_satisfy_kkt() {
        let z = gaussian(60, 100, 21);
        let y = z.column(2).to_owned() * 2.0 + gaussian(60, 1, 22).column(0);
        let path = lasso_path(z.view(), y.view(), &LassoParams::default()).unwrap();
        assert!(path.len() >= MIN_PATH_POINTS);
        for fit in &path {
            assert!(fit.kkt_residual(z.view(), y.view()) <= 1e-4);
        }
    }

    #[test]
    fn constant_column_is_ignored() {
        let mut z = gaussian(30, 4, 31);
        z.column_mut(2).fill(3.0);
        let y = z.column(0).to_owned();
        let fit = lasso_fit(z.view(), y.view(), 0.01, &LassoParams::default()).unwrap();
        assert_eq!(fit.coefficients[2], 0.0);
        assert!(fit.coefficients[0] > 0.9);
    }

    #[test]
    fn non_convergence_is_reported() {
        let z = gaussian(30, 10, 41);
        let y = z.column(0).to_owned() + z.column(1).to_owned();
        let params = LassoParams { max_sweeps: 1, tol: 0.0, ..Default::default() };
        assert!(matches!(
            lasso_fit(z.view(), y.view(), 0.01, &params),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn cv_pure_noise_selects_near_null_model() {
        let z = gaussian(200, 500, 51);
        let y = gaussian(200, 1, 52).column(0).to_owned();
        let cv = lasso_cv_path(z.view(), y.view(), &LassoParams::default(), &mut rng_from(53)).unwrap();
        let m = y.mean().unwrap();
        let var = y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 199.0;
        let err = cv.cv_errors[cv.best];
        assert!((err - var).abs() <= 0.15 * var, "cv error {err}, var {var}");
    }

    #[test]
    fn cv_recovers_exact_signal() {
        let z = gaussian(200, 50, 61);
        let y = z.column(0).to_owned();
        let model = lasso_cv(z.view(), y.view(), &LassoParams::default(), &mut rng_from(62)).unwrap();
        let zt = gaussian(200, 50, 63);
        let yt = zt.column(0).to_owned();
        let pred = model.predict(zt.view());
        let ss_res: f64 = yt.iter().zip(&pred).map(|(a, b)| (a - b).powi(2)).sum();
        let m = yt.mean().unwrap();
        let ss_tot: f64 = yt.iter().map(|a| (a - m).powi(2)).sum();
        assert!(1.0 - ss_res / ss_tot >= 0.99);
    }

    #[test]
    fn cv_is_deterministic() {
        let z = gaussian(80, 40, 71);
        let y = z.column(0).to_owned() + gaussian(80, 1, 72).column(0);
        let a = lasso_cv_path(z.view(), y.view(), &LassoParams::default(), &mut rng_from(5)).unwrap();
        let b = lasso_cv_path(z.view(), y.view(), &LassoParams::default(), &mut rng_from(5)).unwrap();
        assert_eq!(a.fit.lambda, b.fit.lambda);
        assert_eq!(a.cv_errors, b.cv_errors);
    }

    #[test]
    fn cv_requires_enough_rows() {
        let z = gaussian(5, 3, 1);
        let y = z.column(0).to_owned();
        assert!(matches!(
            lasso_cv_path(z.view(), y.view(), &LassoParams::default(), &mut rng_from(0)),
            Err(Error::TooFewRows { .. })
        ));
    }
}
