//! Synthetic partially linear data: Toeplitz-correlated Gaussian covariates,
//! sparse coefficient vectors, three nuisance functions and Gaussian noise.

use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::datamodel::Dataset;
use crate::error::{Error, Result};
use crate::seed::{rng_from, Rng};

/// Form of the nuisance function g.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    /// g(z) = zᵀγ / 3
    M1,
    /// g(z) = cos(zᵀγ / 2) · log(|zᵀγ| + 1)
    M2,
    /// g(z) = (z₁ + z₂ + z₃) / (1 + exp(z₄ + z₅ + z₆)); γ unused
    M3,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::M1 => "M1",
            Model::M2 => "M2",
            Model::M3 => "M3",
        }
    }
}

/// Coefficient pattern of β.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// β = 0.
    S1,
    /// Sparse: `s1` entries equal to s1^(-2/3).
    S2,
    /// Dense: `s1` entries equal to s1^(-1/2), so ‖β‖₂ = 1.
    S3,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::S1 => "S1",
            Scenario::S2 => "S2",
            Scenario::S3 => "S3",
        }
    }

    /// Nonzero value c₁ for sparsity `s1`.
    pub fn signal(&self, s1: usize) -> f64 {
        match self {
            Scenario::S1 => 0.0,
            _ if s1 == 0 => 0.0,
            Scenario::S2 => 1.0 / (s1 as f64).powf(2.0 / 3.0),
            Scenario::S3 => 1.0 / (s1 as f64).sqrt(),
        }
    }
}

/// Number of nonzero entries of a dense β: ⌊fraction · p1⌋.
pub fn dense_sparsity(p1: usize, fraction: f64) -> usize {
    // Small epsilon guards against 0.3 * 500 = 149.99999...
    (fraction * p1 as f64 + 1e-9).floor() as usize
}

pub const DEFAULT_S2: usize = 20;
pub const DEFAULT_C2: f64 = 0.5;

fn default_noise_sd() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_total: usize,
    pub p1: usize,
    pub p2: usize,
    pub rho: f64,
    pub model: Model,
    pub s1: usize,
    pub c1: f64,
    pub s2: usize,
    pub c2: f64,
    pub seed: u64,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::RhoOutOfRange(self.rho));
        }
        if self.n_total == 0 || self.p1 == 0 || self.p2 == 0 {
            return Err(Error::Config("n_total, p1 and p2 must be positive".into()));
        }
        if self.s1 > self.p1 {
            return Err(Error::SparsityExceedsDimension { s: self.s1, p: self.p1 });
        }
        if self.s2 > self.p2 {
            return Err(Error::SparsityExceedsDimension { s: self.s2, p: self.p2 });
        }
        if self.model == Model::M3 && self.p2 < 6 {
            return Err(Error::DimensionTooSmall(format!(
                "model M3 needs p2 >= 6, got {}",
                self.p2
            )));
        }
        if !(self.noise_sd >= 0.0) || !self.c1.is_finite() || !self.c2.is_finite() {
            return Err(Error::Config("noise_sd, c1 and c2 must be finite, noise_sd >= 0".into()));
        }
        Ok(())
    }

    pub fn beta(&self) -> Result<Array1<f64>> {
        make_coeffs(self.p1, self.s1, self.c1)
    }

    pub fn gamma(&self) -> Result<Array1<f64>> {
        make_coeffs(self.p2, self.s2, self.c2)
    }
}

/// Lower Cholesky factor of Σ with Σᵢⱼ = ρ^|i−j|.
pub fn toeplitz_chol(rho: f64, p: usize) -> Result<Array2<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::RhoOutOfRange(rho));
    }
    if p == 0 {
        return Err(Error::DimensionTooSmall("p must be at least 1".into()));
    }
    let sigma = |i: usize, j: usize| rho.powi(i.abs_diff(j) as i32);
    let mut l = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let mut d = sigma(j, j);
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..p {
            let mut s = sigma(i, j);
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    Ok(l)
}

/// Maps i.i.d. standard normals `w` in place to a draw from N(0, Σ), Σᵢⱼ = ρ^|i−j|.
///
/// Σ is the AR(1) covariance, whose Cholesky factor has the closed form
/// Lᵢ₁ = ρ^(i−1), Lᵢⱼ = ρ^(i−j)·√(1−ρ²) for j ≥ 2, so L·w is the recursion below.
pub fn correlate_in_place(rho: f64, w: &mut [f64]) {
    let innov = (1.0 - rho * rho).sqrt();
    for j in 1..w.len() {
        w[j] = rho * w[j - 1] + innov * w[j];
    }
}

/// Draws `n_total` rows of N(0, Σ) over p = p1 + p2 coordinates; the first p1 form `x`.
pub fn sample_covariates(cfg: &GenConfig, rng: &mut Rng) -> Result<(Array2<f64>, Array2<f64>)> {
    cfg.validate()?;
    let p = cfg.p1 + cfg.p2;
    let mut x = Array2::<f64>::zeros((cfg.n_total, cfg.p1));
    let mut z = Array2::<f64>::zeros((cfg.n_total, cfg.p2));
    let mut row = vec![0.0; p];
    for i in 0..cfg.n_total {
        for w in row.iter_mut() {
            *w = StandardNormal.sample(rng);
        }
        correlate_in_place(cfg.rho, &mut row);
        x.row_mut(i).iter_mut().zip(&row[..cfg.p1]).for_each(|(d, s)| *d = *s);
        z.row_mut(i).iter_mut().zip(&row[cfg.p1..]).for_each(|(d, s)| *d = *s);
    }
    Ok((x, z))
}

pub fn g_eval(model: Model, z_row: ArrayView1<f64>, gamma: ArrayView1<f64>) -> Result<f64> {
    match model {
        Model::M3 if z_row.len() < 6 => Err(Error::DimensionTooSmall(format!(
            "model M3 needs at least 6 nuisance covariates, got {}",
            z_row.len()
        ))),
        Model::M1 | Model::M2 if z_row.len() != gamma.len() => Err(Error::DimensionMismatch(
            format!("z has {} entries, gamma has {}", z_row.len(), gamma.len()),
        )),
        _ => Ok(g_unchecked(model, z_row, gamma)),
    }
}

fn g_unchecked(model: Model, z: ArrayView1<f64>, gamma: ArrayView1<f64>) -> f64 {
    match model {
        Model::M1 => z.dot(&gamma) / 3.0,
        Model::M2 => {
            let u = z.dot(&gamma);
            (u / 2.0).cos() * (u.abs() + 1.0).ln()
        }
        Model::M3 => (z[0] + z[1] + z[2]) / (1.0 + (z[3] + z[4] + z[5]).exp()),
    }
}

/// First `s` entries equal `c`, the rest zero.
pub fn make_coeffs(p: usize, s: usize, c: f64) -> Result<Array1<f64>> {
    if s > p {
        return Err(Error::SparsityExceedsDimension { s, p });
    }
    Ok(Array1::from_shape_fn(p, |j| if j < s { c } else { 0.0 }))
}

/// Draws a dataset Y = Xᵀβ + g(Z) + ε; a pure function of `cfg` including its seed.
pub fn generate(cfg: &GenConfig) -> Result<Dataset> {
    cfg.validate()?;
    let beta = cfg.beta()?;
    let gamma = cfg.gamma()?;
    let mut rng = rng_from(cfg.seed);
    let (x, z) = sample_covariates(cfg, &mut rng)?;
    let mut y = x.dot(&beta);
    for (i, yi) in y.iter_mut().enumerate() {
        let eps: f64 = StandardNormal.sample(&mut rng);
        *yi += g_unchecked(cfg.model, z.row(i), gamma.view()) + cfg.noise_sd * eps;
    }
    Dataset::new(x, z, y)
}

/// Writes `y, x1..x_p1, z1..z_p2` with a header row.
pub fn write_csv(d: &Dataset, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = vec!["y".to_string()];
    header.extend((1..=d.p1()).map(|j| format!("x{j}")));
    header.extend((1..=d.p2()).map(|j| format!("z{j}")));
    writeln!(w, "{}", header.join(","))?;
    for i in 0..d.n_rows() {
        let mut fields = vec![format!("{:e}", d.y()[i])];
        fields.extend(d.x().row(i).iter().map(|v| format!("{v:e}")));
        fields.extend(d.z().row(i).iter().map(|v| format!("{v:e}")));
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}
