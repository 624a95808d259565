//! The cross-fitted quadratic-form test.
//!
//! For a random split into halves D₁, D₂, a nuisance model ĝ_k is fit on D_k
//! and residuals rᵢ = yᵢ − ĝ_k(zᵢ) are formed on the other half. The fold
//! statistic
//!
//! ```text
//! T_nk   = (1/n) Σ_{i≠j} rᵢ rⱼ xᵢᵀxⱼ
//! Λ̂_k    = 2 σ̂_k⁴ tr̂(Σ_X²)_k,      σ̂_k² = (1/n) Σ rᵢ²
//! T̃_nk   = T_nk / √Λ̂_k
//! ```
//!
//! is asymptotically standard normal under β = 0, and the two folds are
//! combined as T̃_n = (T̃_n1 + T̃_n2)/√2 with a one-sided p-value 1 − Φ(T̃_n).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::datamodel::{random_split, Dataset, SplitPlan};
use crate::error::{Error, Result};
use crate::normal::one_sided_p_value;
use crate::nuisance::{NuisanceEstimator, NuisanceModel};
use crate::penhance::{self, PeSettings, ThresholdKind};
use crate::seed::{derive, purpose, rng_from};

/// rᵢ = yᵢ − ĝ(zᵢ) over the evaluation rows.
pub fn residuals(model: &NuisanceModel, z_eval: ArrayView2<f64>, y_eval: ArrayView1<f64>) -> Array1<f64> {
    &y_eval - &model.predict(z_eval)
}

/// (1/n)·[‖Σᵢ rᵢxᵢ‖² − Σᵢ rᵢ²‖xᵢ‖²], the i ≠ j double sum in O(n·p₁).
pub fn quad_stat(r: ArrayView1<f64>, x: ArrayView2<f64>) -> f64 {
    let n = r.len();
    let weighted = x.t().dot(&r);
    let diag: f64 = x
        .rows()
        .into_iter()
        .zip(r.iter())
        .map(|(row, ri)| ri * ri * row.dot(&row))
        .sum();
    (weighted.dot(&weighted) - diag) / n as f64
}

/// Mean squared residual (divisor n).
pub fn sigma2_hat(r: ArrayView1<f64>) -> f64 {
    r.dot(&r) / r.len() as f64
}

/// Fourth-order U-statistic estimate of tr(Σ_X²) over the rows of `x`.
///
/// Computed from the Gram matrix G = XXᵀ in O(n²p₁ + n³). For each middle
/// pair b < c, the kernel factors into terms that depend on the outer index
/// a < b alone, on d > c alone, and on G_ad; the last is handled with prefix
/// column sums and suffix row sums of G. The value equals the literal sum over
/// i₁ < i₂ < i₃ < i₄, which depends on row order.
pub fn trace_sigma2_hat(x: ArrayView2<f64>) -> Result<f64> {
    let n = x.nrows();
    if n < 4 {
        return Err(Error::TooFewRows { needed: 4, got: n });
    }
    let g: Array2<f64> = x.dot(&x.t());
    // pre[[b, d]] = Σ_{a<b} G[a][d];  suf[[a, c]] = Σ_{d>c} G[a][d]
    let mut pre = Array2::<f64>::zeros((n + 1, n));
    for b in 0..n {
        for d in 0..n {
            pre[[b + 1, d]] = pre[[b, d]] + g[[b, d]];
        }
    }
    let mut suf = Array2::<f64>::zeros((n, n));
    for a in 0..n {
        for c in (0..n - 1).rev() {
            suf[[a, c]] = suf[[a, c + 1]] + g[[a, c + 1]];
        }
    }
    let mut total = 0.0;
    for b in 1..n - 2 {
        for c in (b + 1)..n - 1 {
            let k = g[[b, c]];
            let na = b as f64;
            let nd = (n - 1 - c) as f64;
            let (mut us, mut u_sum, mut s_sum, mut cross) = (0.0, 0.0, 0.0, 0.0);
            for a in 0..b {
                let u = g[[a, c]] - k;
                let s = g[[a, c]] - g[[a, b]];
                us += u * s;
                u_sum += u;
                s_sum += s;
                cross += s * suf[[a, c]];
            }
            let (mut v_sum, mut t_sum, mut vt) = (0.0, 0.0, 0.0);
            for d in (c + 1)..n {
                let v = g[[b, d]];
                let t = g[[b, d]] - g[[c, d]];
                v_sum += v;
                t_sum += t;
                vt += v * t;
                cross += t * pre[[b, d]];
            }
            total += us * nd + u_sum * t_sum + s_sum * v_sum + na * vt - cross;
        }
    }
    let nf = n as f64;
    let choose4 = nf * (nf - 1.0) * (nf - 2.0) * (nf - 3.0) / 24.0;
    Ok(total / (2.0 * choose4))
}

/// Λ̂ = 2σ̂⁴·tr̂; an error when the result cannot normalize a statistic.
pub fn lambda_hat(sigma2: f64, tr_hat: f64) -> Result<f64> {
    let l = 2.0 * sigma2 * sigma2 * tr_hat;
    if l > 0.0 && l.is_finite() {
        Ok(l)
    } else {
        Err(Error::NonPositiveVarianceEstimate(l))
    }
}

/// T / √Λ̂.
pub fn normalize(t_nk: f64, lambda_hat: f64) -> Result<f64> {
    if lambda_hat > 0.0 && lambda_hat.is_finite() {
        Ok(t_nk / lambda_hat.sqrt())
    } else {
        Err(Error::NonPositiveVarianceEstimate(lambda_hat))
    }
}

/// The scalars of one cross-fitting fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldStatistics {
    pub t_nk: f64,
    pub sigma2_hat: f64,
    pub tr_hat: f64,
    pub lambda_hat: f64,
    pub t_tilde: f64,
}

impl FoldStatistics {
    pub fn from_residuals(r: ArrayView1<f64>, x: ArrayView2<f64>) -> Result<Self> {
        if r.len() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} residuals for {} rows of x",
                r.len(),
                x.nrows()
            )));
        }
        let t_nk = quad_stat(r, x);
        let sigma2_hat = sigma2_hat(r);
        let tr_hat = trace_sigma2_hat(x)?;
        let lambda_hat = lambda_hat(sigma2_hat, tr_hat)?;
        let t_tilde = normalize(t_nk, lambda_hat)?;
        Ok(FoldStatistics { t_nk, sigma2_hat, tr_hat, lambda_hat, t_tilde })
    }
}

/// Fold statistics of `model` on an evaluation half.
pub fn fold_statistic(model: &NuisanceModel, d_eval: &Dataset) -> Result<FoldStatistics> {
    let r = residuals(model, d_eval.z().view(), d_eval.y().view());
    FoldStatistics::from_residuals(r.view(), d_eval.x().view())
}

/// (T̃₁ + T̃₂)/√2.
pub fn cross_fit(t1: &FoldStatistics, t2: &FoldStatistics) -> f64 {
    (t1.t_tilde + t2.t_tilde) / std::f64::consts::SQRT_2
}

/// Power-enhancement quantities of one fold for one threshold kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enhancement {
    pub delta: f64,
    pub t0: f64,
    pub t_pe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    /// Half the nuisance model was trained on (1 or 2).
    pub fold: usize,
    pub stats: FoldStatistics,
    pub hard: Option<Enhancement>,
    pub soft: Option<Enhancement>,
    pub nuisance_hyperparameters: Vec<(String, f64)>,
}

/// How per-split p-values are combined across multiple random splits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum Aggregation {
    /// min(1, (1 − log γ_min) · inf_{γ ∈ [γ_min, 1]} Q_γ / γ), Q_γ the empirical γ-quantile.
    AdaptiveQuantile { gamma_min: f64 },
    /// min(1, 2 · median).
    TwiceMedian,
}

impl Default for Aggregation {
    fn default() -> Self {
        Aggregation::AdaptiveQuantile { gamma_min: 0.05 }
    }
}

/// Type-7 empirical quantile of sorted data.
fn quantile_sorted(sorted: &[f64], gamma: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * gamma;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Aggregation {
    pub fn aggregate(&self, p_values: &[f64]) -> f64 {
        assert!(!p_values.is_empty(), "no p-values to aggregate");
        let mut sorted = p_values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len();
        match *self {
            Aggregation::TwiceMedian => (2.0 * quantile_sorted(&sorted, 0.5)).min(1.0),
            Aggregation::AdaptiveQuantile { gamma_min } => {
                // Q_γ/γ is monotone between quantile knots k/(m−1), so the
                // infimum is attained at a knot or at γ_min.
                let mut candidates = vec![gamma_min, 1.0];
                if m > 1 {
                    candidates.extend(
                        (0..m)
                            .map(|k| k as f64 / (m - 1) as f64)
                            .filter(|&g| g > gamma_min),
                    );
                }
                let inf = candidates
                    .into_iter()
                    .map(|g| (quantile_sorted(&sorted, g) / g).min(1.0))
                    .fold(f64::INFINITY, f64::min);
                ((1.0 - gamma_min.ln()) * inf).min(1.0)
            }
        }
    }
}

/// Everything a test run needs besides the data and the estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestSettings {
    pub alpha: f64,
    /// Threshold kinds for which power-enhanced statistics are computed.
    pub enhance: Vec<ThresholdKind>,
    pub pe: PeSettings,
    pub aggregation: Aggregation,
}

impl Default for TestSettings {
    fn default() -> Self {
        TestSettings {
            alpha: 0.05,
            enhance: vec![ThresholdKind::Hard, ThresholdKind::Soft],
            pe: PeSettings::default(),
            aggregation: Aggregation::default(),
        }
    }
}

impl TestSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if let Aggregation::AdaptiveQuantile { gamma_min } = self.aggregation {
            if !(gamma_min > 0.0 && gamma_min < 1.0) {
                return Err(Error::Config(format!("gamma_min must lie in (0, 1), got {gamma_min}")));
            }
        }
        self.pe.validate()
    }

    fn wants(&self, kind: ThresholdKind) -> bool {
        self.enhance.contains(&kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejections {
    pub tilde: bool,
    pub pe_hard: Option<bool>,
    pub pe_soft: Option<bool>,
}

/// Result of a single- or multiple-split test.
///
/// For multiple splits the statistics are medians over splits, the p-values
/// are aggregated, and `per_fold` is empty; the individual outcomes are in
/// `split_outcomes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub stat_tilde_n: f64,
    pub stat_pe_hard: Option<f64>,
    pub stat_pe_soft: Option<f64>,
    pub per_fold: Vec<FoldRecord>,
    pub p_value: f64,
    pub p_value_pe_hard: Option<f64>,
    pub p_value_pe_soft: Option<f64>,
    pub alpha: f64,
    pub reject: Rejections,
    pub dropped_row: Option<usize>,
    pub split_outcomes: Vec<TestOutcome>,
}

impl TestOutcome {
    fn from_stats(
        tilde: f64,
        hard: Option<f64>,
        soft: Option<f64>,
        per_fold: Vec<FoldRecord>,
        alpha: f64,
        dropped_row: Option<usize>,
    ) -> Self {
        let p_value = one_sided_p_value(tilde);
        let p_hard = hard.map(one_sided_p_value);
        let p_soft = soft.map(one_sided_p_value);
        TestOutcome {
            stat_tilde_n: tilde,
            stat_pe_hard: hard,
            stat_pe_soft: soft,
            per_fold,
            p_value,
            p_value_pe_hard: p_hard,
            p_value_pe_soft: p_soft,
            alpha,
            reject: Rejections {
                tilde: p_value <= alpha,
                pe_hard: p_hard.map(|p| p <= alpha),
                pe_soft: p_soft.map(|p| p <= alpha),
            },
            dropped_row,
            split_outcomes: Vec::new(),
        }
    }

    /// Human-readable summary block.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let line = |name: &str, stat: f64, p: f64, rej: bool| {
            format!("  {name:<10} stat = {stat:>9.4}   p = {p:.4}   reject = {rej}\n")
        };
        s.push_str(&format!("test outcome (alpha = {})\n", self.alpha));
        s.push_str(&line("T~n", self.stat_tilde_n, self.p_value, self.reject.tilde));
        if let (Some(t), Some(p), Some(r)) = (self.stat_pe_hard, self.p_value_pe_hard, self.reject.pe_hard) {
            s.push_str(&line("T_PE hard", t, p, r));
        }
        if let (Some(t), Some(p), Some(r)) = (self.stat_pe_soft, self.p_value_pe_soft, self.reject.pe_soft) {
            s.push_str(&line("T_PE soft", t, p, r));
        }
        for f in &self.per_fold {
            s.push_str(&format!(
                "  fold {}: T_nk = {:.4}, sigma2 = {:.4}, tr = {:.4}, Lambda = {:.4}, T~ = {:.4}\n",
                f.fold, f.stats.t_nk, f.stats.sigma2_hat, f.stats.tr_hat, f.stats.lambda_hat, f.stats.t_tilde
            ));
            for (name, e) in [("hard", f.hard), ("soft", f.soft)] {
                if let Some(e) = e {
                    s.push_str(&format!(
                        "          {name}: delta = {:.4e}, T0 = {:.4}, T_PE = {:.4}\n",
                        e.delta, e.t0, e.t_pe
                    ));
                }
            }
        }
        if !self.split_outcomes.is_empty() {
            s.push_str(&format!("  aggregated over {} splits\n", self.split_outcomes.len()));
        }
        s
    }
}

fn run_fold(
    d: &Dataset,
    plan: &SplitPlan,
    k: usize,
    estimator: &dyn NuisanceEstimator,
    settings: &TestSettings,
    seed: u64,
) -> Result<FoldRecord> {
    let (fit_rows, eval_rows) = plan.fold(k);
    let z_fit = d.z().select(Axis(0), fit_rows);
    let y_fit = d.y().select(Axis(0), fit_rows);
    let mut model = estimator.fit(z_fit.view(), y_fit.view(), derive(seed, &[purpose::NUISANCE, k as u64]))?;
    model.fold = Some(k);

    let x_eval = d.x().select(Axis(0), eval_rows);
    let z_eval = d.z().select(Axis(0), eval_rows);
    let y_eval = d.y().select(Axis(0), eval_rows);
    let r = residuals(&model, z_eval.view(), y_eval.view());
    let stats = FoldStatistics::from_residuals(r.view(), x_eval.view())?;

    let (mut hard, mut soft) = (None, None);
    if !settings.enhance.is_empty() {
        let marginal = penhance::marginal_stats(r.view(), x_eval.view());
        let enhance = |delta: f64| {
            let t0 = penhance::enhancement_component(marginal.view(), delta, settings.pe.a_np);
            Enhancement { delta, t0, t_pe: penhance::pe_statistic(&stats, t0) }
        };
        if settings.wants(ThresholdKind::Hard) {
            let delta = settings.pe.hard_threshold(eval_rows.len(), d.p1())?;
            hard = Some(enhance(delta));
        }
        if settings.wants(ThresholdKind::Soft) {
            let mut rng = rng_from(derive(seed, &[purpose::BOOTSTRAP, k as u64]));
            let delta = penhance::soft_threshold(r.view(), x_eval.view(), settings.pe.r_boot, &mut rng)?;
            soft = Some(enhance(delta));
        }
    }
    Ok(FoldRecord {
        fold: k,
        stats,
        hard,
        soft,
        nuisance_hyperparameters: model.hyperparameters.into_iter().collect(),
    })
}

/// One random split, two cross-fitted folds, one-sided p-values.
///
/// All randomness (split, nuisance fits, bootstrap multipliers) is derived from `seed`.
pub fn single_split_test(
    d: &Dataset,
    estimator: &dyn NuisanceEstimator,
    settings: &TestSettings,
    seed: u64,
) -> Result<TestOutcome> {
    settings.validate()?;
    let plan = random_split(d.n_rows(), &mut rng_from(derive(seed, &[purpose::SPLIT])))?;
    let f1 = run_fold(d, &plan, 1, estimator, settings, seed)?;
    let f2 = run_fold(d, &plan, 2, estimator, settings, seed)?;
    let tilde = cross_fit(&f1.stats, &f2.stats);
    let pe = |a: Option<Enhancement>, b: Option<Enhancement>| {
        a.zip(b).map(|(a, b)| penhance::pe_cross_fit(a.t_pe, b.t_pe))
    };
    let hard = pe(f1.hard, f2.hard);
    let soft = pe(f1.soft, f2.soft);
    Ok(TestOutcome::from_stats(tilde, hard, soft, vec![f1, f2], settings.alpha, plan.dropped))
}

/// Attempts per split before a numerical failure is propagated.
const SPLIT_ATTEMPTS: u64 = 4;

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Repeats [`single_split_test`] over `m_splits` independent splits and aggregates the p-values.
///
/// A split whose statistics cannot be normalized is redrawn (up to three times).
pub fn multi_split_test(
    d: &Dataset,
    estimator: &dyn NuisanceEstimator,
    settings: &TestSettings,
    m_splits: usize,
    seed: u64,
) -> Result<TestOutcome> {
    if m_splits == 0 {
        return Err(Error::Config("m_splits must be at least 1".into()));
    }
    if m_splits == 1 {
        return single_split_test(d, estimator, settings, seed);
    }
    let mut outcomes = Vec::with_capacity(m_splits);
    for m in 0..m_splits {
        let mut attempt = 0;
        let outcome = loop {
            let s = derive(seed, &[purpose::MULTI_SPLIT, m as u64, attempt]);
            match single_split_test(d, estimator, settings, s) {
                Err(e) if e.is_numerical() && attempt + 1 < SPLIT_ATTEMPTS => attempt += 1,
                other => break other?,
            }
        };
        outcomes.push(outcome);
    }
    let agg = |f: &dyn Fn(&TestOutcome) -> Option<f64>| -> Option<f64> {
        outcomes.iter().map(f).collect::<Option<Vec<f64>>>().map(|ps| settings.aggregation.aggregate(&ps))
    };
    let med = |f: &dyn Fn(&TestOutcome) -> Option<f64>| -> Option<f64> {
        outcomes.iter().map(f).collect::<Option<Vec<f64>>>().map(|v| median(&v))
    };
    let p_value = agg(&|o| Some(o.p_value)).unwrap();
    let p_hard = agg(&|o| o.p_value_pe_hard);
    let p_soft = agg(&|o| o.p_value_pe_soft);
    let alpha = settings.alpha;
    Ok(TestOutcome {
        stat_tilde_n: med(&|o| Some(o.stat_tilde_n)).unwrap(),
        stat_pe_hard: med(&|o| o.stat_pe_hard),
        stat_pe_soft: med(&|o| o.stat_pe_soft),
        per_fold: Vec::new(),
        p_value,
        p_value_pe_hard: p_hard,
        p_value_pe_soft: p_soft,
        alpha,
        reject: Rejections {
            tilde: p_value <= alpha,
            pe_hard: p_hard.map(|p| p <= alpha),
            pe_soft: p_soft.map(|p| p <= alpha),
        },
        dropped_row: None,
        split_outcomes: outcomes,
    })
}
