//! Built-in checks: fast statistics against literal sums, solver optimality,
//! bootstrap identity, enhancement dominance and seed determinism.

use ndarray::{Array1, Array2};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::nuisance::lasso::{lasso_fit, lasso_path, LassoParams};
use crate::nuisance::NuisanceMethod;
use crate::oracle;
use crate::penhance::{bootstrap_marginal, marginal_stats};
use crate::qtest::{quad_stat, single_split_test, trace_sigma2_hat, TestSettings};
use crate::seed::{rng_from, Rng};
use crate::simgen::{generate, GenConfig, Model};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTestCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn gaussian(n: usize, p: usize, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| StandardNormal.sample(rng))
}

fn rel_err(fast: f64, slow: f64) -> f64 {
    (fast - slow).abs() / slow.abs().max(1e-300)
}

fn check(name: &'static str, passed: bool, detail: String) -> SelfTestCheck {
    SelfTestCheck { name, passed, detail }
}

/// Largest relative error of the fast trace estimator over `cases` random matrices.
pub fn trace_oracle_max_error(cases: usize, seed: u64) -> f64 {
    let mut rng = rng_from(seed);
    (0..cases)
        .map(|_| {
            let n = rng.random_range(4..=12);
            let p = rng.random_range(1..=20);
            let x = gaussian(n, p, &mut rng);
            rel_err(trace_sigma2_hat(x.view()).expect("n >= 4"), oracle::trace_sigma2_literal(x.view()))
        })
        .fold(0.0, f64::max)
}

/// Largest relative error of quad_stat and marginal_stats against literal double sums.
pub fn double_sum_oracle_max_error(cases: usize, seed: u64) -> f64 {
    let mut rng = rng_from(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(2..=50);
        let p = rng.random_range(1..=20);
        let x = gaussian(n, p, &mut rng);
        let r: Array1<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        worst = worst.max(rel_err(quad_stat(r.view(), x.view()), oracle::quad_stat_literal(r.view(), x.view())));
        let fast = marginal_stats(r.view(), x.view());
        for (f, s) in fast.iter().zip(oracle::marginal_stats_literal(r.view(), x.view())) {
            worst = worst.max(rel_err(*f, s));
        }
    }
    worst
}

/// Largest difference in ulps between unit-multiplier bootstrap and marginal statistics.
pub fn bootstrap_identity_max_ulps(cases: usize, seed: u64) -> u64 {
    let mut rng = rng_from(seed);
    let mut worst = 0;
    for _ in 0..cases {
        let n = rng.random_range(2..=60);
        let p = rng.random_range(1..=30);
        let x = gaussian(n, p, &mut rng);
        let r: Array1<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let ones = Array1::ones(n);
        let boot = bootstrap_marginal(r.view(), x.view(), ones.view()).expect("shapes agree");
        let plain = marginal_stats(r.view(), x.view());
        for (a, b) in boot.iter().zip(plain.iter()) {
            worst = worst.max(ulps(*a, *b));
        }
    }
    worst
}

pub fn ulps(a: f64, b: f64) -> u64 {
    if a == b {
        return 0;
    }
    let key = |v: f64| {
        let bits = v.to_bits() as i64;
        if bits < 0 { i64::MIN - bits } else { bits }
    };
    key(a).abs_diff(key(b))
}

/// Largest KKT violation over every path point of `cases` random Lasso problems.
pub fn lasso_kkt_max(cases: usize, seed: u64) -> f64 {
    let mut rng = rng_from(seed);
    let params = LassoParams { n_lambda: 30, ..Default::default() };
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(20..=80);
        let p = rng.random_range(5..=120);
        let z = gaussian(n, p, &mut rng);
        let noise: Array1<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y = 2.0 * &z.column(0) - &z.column(p / 2) + noise;
        for fit in lasso_path(z.view(), y.view(), &params).expect("lasso path") {
            worst = worst.max(fit.kkt_residual(z.view(), y.view()));
        }
    }
    worst
}

/// Largest coefficient difference between unpenalized Lasso and least squares.
pub fn lasso_ls_max_diff(seed: u64) -> f64 {
    let mut rng = rng_from(seed);
    let z = gaussian(100, 8, &mut rng);
    let noise: Array1<f64> = (0..100).map(|_| StandardNormal.sample(&mut rng)).collect();
    let y = &z.column(1) * 1.5 + noise;
    let params = LassoParams { tol: 1e-12, max_sweeps: 100_000, ..Default::default() };
    let fit = lasso_fit(z.view(), y.view(), 0.0, &params).expect("lasso at lambda = 0");
    let (b0, b) = oracle::least_squares(z.view(), y.view());
    b.iter()
        .zip(fit.coefficients.iter())
        .map(|(a, c)| (a - c).abs())
        .fold((fit.intercept - b0).abs(), f64::max)
}

fn small_gen(seed: u64) -> GenConfig {
    GenConfig {
        n_total: 80,
        p1: 30,
        p2: 30,
        rho: 0.5,
        model: Model::M1,
        s1: 2,
        c1: 0.6,
        s2: 5,
        c2: 0.5,
        seed,
        noise_sd: 1.0,
    }
}

pub fn run_selftest() -> Vec<SelfTestCheck> {
    let mut out = Vec::new();

    let e = trace_oracle_max_error(100, 1);
    out.push(check("trace estimator vs quadruple sum", e <= 1e-10, format!("max relative error {e:.2e} over 100 cases")));

    let e = double_sum_oracle_max_error(100, 2);
    out.push(check("quadratic and marginal statistics vs double sums", e <= 1e-10, format!("max relative error {e:.2e}")));

    let u = bootstrap_identity_max_ulps(50, 3);
    out.push(check("unit-multiplier bootstrap identity", u <= 1, format!("max difference {u} ulp")));

    let k = lasso_kkt_max(20, 4);
    out.push(check("lasso path KKT conditions", k <= 1e-4, format!("max violation {k:.2e}")));

    let d = lasso_ls_max_diff(5);
    out.push(check("unpenalized lasso vs least squares", d <= 1e-6, format!("max difference {d:.2e}")));

    let settings = TestSettings::default();
    let method = NuisanceMethod::Lasso(LassoParams { folds: 5, n_lambda: 30, ..Default::default() });
    let mut violations = 0;
    let mut runs = 0;
    let mut failures = Vec::new();
    for s in 0..10 {
        match generate(&small_gen(100 + s)).and_then(|d| single_split_test(&d, &method, &settings, s)) {
            Ok(o) => {
                runs += 1;
                for (stat, rej) in [(o.stat_pe_hard, o.reject.pe_hard), (o.stat_pe_soft, o.reject.pe_soft)] {
                    let (stat, rej) = (stat.unwrap_or(f64::NAN), rej.unwrap_or(false));
                    if !(stat >= o.stat_tilde_n) || (o.reject.tilde && !rej) {
                        violations += 1;
                    }
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    out.push(check(
        "enhanced statistics dominate",
        violations == 0 && runs > 0,
        format!("{violations} violations in {runs} runs{}", if failures.is_empty() { String::new() } else { format!(", errors: {failures:?}") }),
    ));

    let a = generate(&small_gen(7)).and_then(|d| single_split_test(&d, &method, &settings, 9));
    let b = generate(&small_gen(7)).and_then(|d| single_split_test(&d, &method, &settings, 9));
    let same = matches!((&a, &b), (Ok(x), Ok(y)) if x == y);
    out.push(check("same seed, same outcome", same, if same { "identical".into() } else { format!("{a:?} vs {b:?}") }));

    out
}
