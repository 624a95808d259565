//! Power enhancement for sparse alternatives.
//!
//! Marginal degenerate U-statistics T_lk are screened against a threshold
//! δ_k; the survivors form a nonnegative component
//! T_0k = a · Σ_l |T_lk| 1{|T_lk| > δ_k} that is added to the normalized
//! fold statistic. δ_k is either analytic (hard) or the maximum of bootstrap
//! maxima with Gaussian multipliers (soft).

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qtest::FoldStatistics;
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdKind {
    Hard,
    Soft,
}

/// Which analytic threshold the hard rule uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardRule {
    /// λ_k · log log n · (log p₁)² / n
    LogLog,
    /// (log p₁)² / n
    Theory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeSettings {
    pub lambda: f64,
    pub a_np: f64,
    pub r_boot: usize,
    pub hard_rule: HardRule,
}

impl Default for PeSettings {
    fn default() -> Self {
        PeSettings { lambda: 0.9, a_np: 5.0, r_boot: 30, hard_rule: HardRule::LogLog }
    }
}

impl PeSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::Config(format!("pe.lambda must lie in (0, 1], got {}", self.lambda)));
        }
        if !(self.a_np > 0.0 && self.a_np.is_finite()) {
            return Err(Error::Config(format!("pe.a_np must be positive, got {}", self.a_np)));
        }
        if self.r_boot == 0 {
            return Err(Error::Config("pe.r_boot must be at least 1".into()));
        }
        Ok(())
    }

    pub fn hard_threshold(&self, n: usize, p1: usize) -> Result<f64> {
        match self.hard_rule {
            HardRule::LogLog => hard_threshold(n, p1, self.lambda),
            HardRule::Theory => theory_threshold(n, p1),
        }
    }
}

/// T_lk = [(Σᵢ rᵢ x_il)² − Σᵢ rᵢ² x_il²] / (n(n−1)) for every column l.
pub fn marginal_stats(r: ArrayView1<f64>, x: ArrayView2<f64>) -> Array1<f64> {
    let (n, p1) = x.dim();
    assert_eq!(r.len(), n, "residual length must match rows of x");
    let mut lin = Array1::<f64>::zeros(p1);
    let mut sq = Array1::<f64>::zeros(p1);
    for (row, &ri) in x.rows().into_iter().zip(r.iter()) {
        let ri2 = ri * ri;
        for ((l, s), &v) in lin.iter_mut().zip(sq.iter_mut()).zip(row.iter()) {
            *l += ri * v;
            *s += ri2 * v * v;
        }
    }
    let denom = (n * (n - 1)) as f64;
    lin.iter().zip(sq.iter()).map(|(l, s)| (l * l - s) / denom).collect()
}

/// δ = λ_k · log(log n) · (log p₁)² / n, natural logarithms.
pub fn hard_threshold(n: usize, p1: usize, lambda_k: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("hard threshold needs n >= 3 (log log n > 0), got {n}")));
    }
    if p1 < 2 {
        return Err(Error::Domain(format!("hard threshold needs p1 >= 2, got {p1}")));
    }
    if !(lambda_k > 0.0 && lambda_k <= 1.0) {
        return Err(Error::Domain(format!("lambda_k must lie in (0, 1], got {lambda_k}")));
    }
    let nf = n as f64;
    let lp = (p1 as f64).ln();
    Ok(lambda_k * nf.ln().ln() * lp * lp / nf)
}

/// δ = (log p₁)² / n.
pub fn theory_threshold(n: usize, p1: usize) -> Result<f64> {
    if n == 0 || p1 < 2 {
        return Err(Error::Domain(format!("theory threshold needs n >= 1, p1 >= 2 (got {n}, {p1})")));
    }
    let lp = (p1 as f64).ln();
    Ok(lp * lp / n as f64)
}

/// Marginal statistics of the multiplier-scaled residuals rᵢ·e*ᵢ.
pub fn bootstrap_marginal(r: ArrayView1<f64>, x: ArrayView2<f64>, e_star: ArrayView1<f64>) -> Result<Array1<f64>> {
    if e_star.len() != r.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} multipliers for {} residuals",
            e_star.len(),
            r.len()
        )));
    }
    let scaled = &r * &e_star;
    Ok(marginal_stats(scaled.view(), x))
}

/// δ*_r = max_l |T*_lk| for each of `r_boot` multiplier draws, in draw order.
pub fn bootstrap_maxima(r: ArrayView1<f64>, x: ArrayView2<f64>, r_boot: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    let n = r.len();
    (0..r_boot)
        .map(|_| {
            let e: Array1<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            let t = bootstrap_marginal(r, x, e.view())?;
            Ok(t.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        })
        .collect()
}

/// Soft threshold: the largest of `r_boot` bootstrap maxima.
pub fn soft_threshold(r: ArrayView1<f64>, x: ArrayView2<f64>, r_boot: usize, rng: &mut Rng) -> Result<f64> {
    if r_boot == 0 {
        return Err(Error::Config("r_boot must be at least 1".into()));
    }
    Ok(bootstrap_maxima(r, x, r_boot, rng)?.into_iter().fold(0.0, f64::max))
}

/// T_0 = a · Σ_l |T_l| · 1{|T_l| > δ}.
pub fn enhancement_component(t: ArrayView1<f64>, delta: f64, a_np: f64) -> f64 {
    a_np * t.iter().map(|v| v.abs()).filter(|&v| v > delta).sum::<f64>()
}

/// T_PE,k = T̃_nk + T_0k.
pub fn pe_statistic(fold: &FoldStatistics, t0: f64) -> f64 {
    fold.t_tilde + t0
}

/// (T_PE,1 + T_PE,2)/√2.
pub fn pe_cross_fit(pe1: f64, pe2: f64) -> f64 {
    (pe1 + pe2) / std::f64::consts::SQRT_2
}

/// a·δ/√p₁; the enhancement is only guaranteed to help when this grows without bound.
pub fn growth_ratio(a_np: f64, delta: f64, p1: usize) -> f64 {
    a_np * delta / (p1 as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::qtest::quad_stat;
    use crate::seed::rng_from;
    use ndarray::{array, Array2};

    fn gaussian(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng_from(seed);
        Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn marginal_examples() {
        let x = array![[1.0], [1.0]];
        assert_eq!(marginal_stats(array![0.0, 0.0].view(), x.view())[0], 0.0);
        assert!((marginal_stats(array![1.0, 2.0].view(), x.view())[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn marginal_matches_literal_sum() {
        for case in 0..20u64 {
            let n = 2 + (case as usize * 5) % 49;
            let x = gaussian(n, 6, case);
            let r = gaussian(n, 1, 77 + case).column(0).to_owned();
            let fast = marginal_stats(r.view(), x.view());
            let slow = oracle::marginal_stats_literal(r.view(), x.view());
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn marginal_agrees_with_quad_stat_per_column() {
        let x = gaussian(20, 4, 1);
        let r = gaussian(20, 1, 2).column(0).to_owned();
        let m = marginal_stats(r.view(), x.view());
        for l in 0..4 {
            let col = x.slice(ndarray::s![.., l..l + 1]);
            let q = quad_stat(r.view(), col);
            assert!((m[l] - q / 19.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hard_threshold_value() {
        // 0.9 · ln(ln 100) · (ln 1000)² / 100, evaluated independently
        let expected = 0.9 * (100f64).ln().ln() * (1000f64).ln().powi(2) / 100.0;
        let got = hard_threshold(100, 1000, 0.9).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.6558).abs() < 1e-4);
        assert!(hard_threshold(100, 1000, 0.0).is_err());
        assert!(hard_threshold(2, 1000, 0.5).is_err());
        assert!(hard_threshold(200, 1000, 0.9).unwrap() < got);
    }

    #[test]
    fn bootstrap_multiplier_identities() {
        let x = gaussian(15, 5, 3);
        let r = gaussian(15, 1, 4).column(0).to_owned();
        let ones = Array1::<f64>::ones(15);
        assert_eq!(bootstrap_marginal(r.view(), x.view(), ones.view()).unwrap(), marginal_stats(r.view(), x.view()));
        let zeros = Array1::<f64>::zeros(15);
        assert!(bootstrap_marginal(r.view(), x.view(), zeros.view()).unwrap().iter().all(|&v| v == 0.0));
        let e = gaussian(15, 1, 5).column(0).to_owned();
        let a = bootstrap_marginal(r.view(), x.view(), e.view()).unwrap();
        let b = bootstrap_marginal(r.view(), x.view(), (-&e).view()).unwrap();
        assert_eq!(a, b);
        let lit = oracle::bootstrap_marginal_literal(r.view(), x.view(), e.view());
        for (u, v) in a.iter().zip(&lit) {
            assert!((u - v).abs() <= 1e-10 * v.abs().max(1e-300));
        }
    }

    #[test]
    fn soft_threshold_properties() {
        let x = gaussian(20, 10, 6);
        let zero = Array1::<f64>::zeros(20);
        assert_eq!(soft_threshold(zero.view(), x.view(), 5, &mut rng_from(1)).unwrap(), 0.0);
        let r = gaussian(20, 1, 7).column(0).to_owned();
        let maxima = bootstrap_maxima(r.view(), x.view(), 1, &mut rng_from(9)).unwrap();
        assert_eq!(soft_threshold(r.view(), x.view(), 1, &mut rng_from(9)).unwrap(), maxima[0]);
        let mut prev = 0.0;
        for rb in 1..12 {
            let d = soft_threshold(r.view(), x.view(), rb, &mut rng_from(9)).unwrap();
            assert!(d >= prev);
            prev = d;
        }
    }

    #[test]
    fn enhancement_component_examples() {
        let t = array![0.1, -0.2, 0.3];
        assert_eq!(enhancement_component(t.view(), 0.5, 5.0), 0.0);
        assert!((enhancement_component(array![0.8, 0.1].view(), 0.5, 5.0) - 4.0).abs() < 1e-15);
        let t = array![0.9, -0.6, 0.3];
        let mut prev = f64::INFINITY;
        for d in [0.0, 0.2, 0.4, 0.7, 1.0] {
            let v = enhancement_component(t.view(), d, 2.0);
            assert!(v <= prev);
            assert!((enhancement_component(t.view(), d, 4.0) - 2.0 * v).abs() < 1e-15);
            prev = v;
        }
    }

    #[test]
    fn pe_statistic_examples() {
        let f = FoldStatistics { t_nk: 1.0, sigma2_hat: 1.0, tr_hat: 0.5, lambda_hat: 1.0, t_tilde: 1.0 };
        assert_eq!(pe_statistic(&f, 0.0), 1.0);
        assert_eq!(pe_statistic(&f, 4.0), 5.0);
        assert_eq!(pe_cross_fit(1.0, 1.0), 2.0 / std::f64::consts::SQRT_2);
    }
}
