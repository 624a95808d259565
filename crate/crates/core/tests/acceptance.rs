//! Acceptance suite: one check per criterion, each printed as a PASS/FAIL line.
//!
//! The Monte Carlo cells run at full size (500 replicates), so this target
//! takes tens of minutes on one core. Run it alone with
//! `cargo test -p plmtest --test acceptance -- --nocapture`.

mod common;

use common::*;
use plmtest::harness::config::{GammaSpec, GridSpec, ScenarioSpec};
use plmtest::harness::report::csv_string;
use plmtest::harness::{run_grid, CellResult, ExperimentConfig, TestKind};
use plmtest::nuisance::forest::ForestParams;
use plmtest::nuisance::lasso::{lasso_fit, lasso_path, LassoParams};
use plmtest::nuisance::NuisanceMethod;
use plmtest::penhance::{bootstrap_marginal, marginal_stats};
use plmtest::qtest::{quad_stat, trace_sigma2_hat};
use plmtest::simgen::Model;
use rand::Rng as _;

const REPS: usize = 500;

struct Outcome {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn record(log: &mut Vec<Outcome>, id: usize, name: &'static str, passed: bool, detail: String) {
    println!("criterion {id:>2} [{}] {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    log.push(Outcome { id, name, passed, detail });
}

fn all_tests() -> Vec<TestKind> {
    vec![TestKind::Tilde, TestKind::PeHard, TestKind::PeSoft]
}

fn grid(n: usize, p: usize, model: Model) -> GridSpec {
    GridSpec { n_total: vec![n], p: vec![p], rho: vec![0.5], model: vec![model] }
}

fn cell<'a>(cells: &'a [CellResult], scenario: &str, s1: usize) -> &'a CellResult {
    cells
        .iter()
        .find(|c| c.spec.scenario.as_str() == scenario && c.spec.gen.s1 == s1)
        .expect("cell present")
}

fn err(c: &CellResult, t: TestKind) -> f64 {
    c.err(t).expect("test was run")
}

#[test]
fn acceptance() {
    let mut log = Vec::new();
    let mut mc_cells: Vec<CellResult> = Vec::new();

    // Model 1, N = 200, p = 1000, Lasso: size, dense power, sparse power.
    let m1 = ExperimentConfig {
        grid: grid(200, 1000, Model::M1),
        scenarios: vec![ScenarioSpec::null(), ScenarioSpec::sparse(&[5]), ScenarioSpec::dense_fractions(&[0.3])],
        tests: all_tests(),
        replicates: REPS,
        master_seed: 2024,
        ..Default::default()
    };
    let m1 = run_grid(&m1).expect("model 1 grid").cells;

    let null = cell(&m1, "S1", 0);
    let e = err(null, TestKind::Tilde);
    record(&mut log, 1, "size of T~n, M1 N=200 p=1000", (0.02..=0.08).contains(&e),
        format!("ERR = {e:.3} over {} replicates (band [0.02, 0.08])", null.tally(TestKind::Tilde).unwrap().replicates));

    let dense = cell(&m1, "S3", 150);
    let e = err(dense, TestKind::Tilde);
    record(&mut log, 2, "dense power, S3 s1=150", e >= 0.95, format!("ERR = {e:.3} (need >= 0.95)"));

    let sparse = cell(&m1, "S2", 5);
    let e = err(sparse, TestKind::Tilde);
    record(&mut log, 3, "sparse power, S2 s1=5", e >= 0.90, format!("ERR = {e:.3} (need >= 0.90)"));

    // Null T~n values for the normality check.
    let null_stats: Vec<f64> = null.records.iter().filter(|r| r.succeeded()).map(|r| r.stat_tilde).collect();

    // Forest nuisance estimator under the null.
    let rf = ExperimentConfig {
        grid: grid(200, 1000, Model::M1),
        scenarios: vec![ScenarioSpec::null()],
        nuisance: NuisanceMethod::Forest(ForestParams::default()),
        tests: all_tests(),
        replicates: REPS,
        master_seed: 2025,
        ..Default::default()
    };
    let rf = run_grid(&rf).expect("forest grid").cells;
    let e = err(&rf[0], TestKind::Tilde);
    record(&mut log, 4, "size with random forest", (0.02..=0.09).contains(&e), format!("ERR = {e:.3} (band [0.02, 0.09])"));

    // Model 2, N = 200, p = 2000: power enhancement.
    let m2 = ExperimentConfig {
        grid: grid(200, 2000, Model::M2),
        scenarios: vec![ScenarioSpec::null(), ScenarioSpec::sparse(&[1])],
        tests: all_tests(),
        replicates: REPS,
        master_seed: 2026,
        ..Default::default()
    };
    let m2 = run_grid(&m2).expect("model 2 grid").cells;
    let alt = cell(&m2, "S2", 1);
    let h0 = cell(&m2, "S1", 0);
    let gain = err(alt, TestKind::PeSoft) - err(alt, TestKind::Tilde);
    let (size_hard, size_soft) = (err(h0, TestKind::PeHard), err(h0, TestKind::PeSoft));
    record(&mut log, 5, "power enhancement, M2 N=200 p=2000",
        gain >= 0.10 && size_hard <= 0.08 && size_soft <= 0.08,
        format!(
            "S2 s1=1: ERR(T~n) = {:.3}, ERR(PE soft) = {:.3}, ERR(PE hard) = {:.3}, gain {gain:.3} (need >= 0.10); S1 sizes hard {size_hard:.3}, soft {size_soft:.3} (need <= 0.08)",
            err(alt, TestKind::Tilde), err(alt, TestKind::PeSoft), err(alt, TestKind::PeHard)
        ));

    mc_cells.extend(m1);
    mc_cells.extend(rf);
    mc_cells.extend(m2);

    // Dominance, checked independently of the runner's own counter.
    let mut checked = 0;
    let mut violations = 0;
    for c in &mc_cells {
        for r in c.records.iter().filter(|r| r.succeeded()) {
            for (stat, rej) in [(r.stat_pe_hard, r.reject.pe_hard), (r.stat_pe_soft, r.reject.pe_soft)] {
                let (stat, rej) = (stat.expect("PE statistic"), rej.expect("PE decision"));
                checked += 1;
                if stat < r.stat_tilde || (r.reject.tilde && !rej) {
                    violations += 1;
                }
            }
        }
    }
    let runner_count: usize = mc_cells.iter().map(|c| c.dominance_violations).sum();
    record(&mut log, 6, "T_PE >= T~n in every replicate", violations == 0 && runner_count == 0 && checked > 0,
        format!("{violations} violations in {checked} comparisons"));

    let d = ks_statistic(&null_stats, normal_cdf);
    let p = ks_p_value(d, null_stats.len());
    let mean = null_stats.iter().sum::<f64>() / null_stats.len() as f64;
    let sd = (null_stats.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (null_stats.len() - 1) as f64).sqrt();
    record(&mut log, 7, "null T~n is N(0,1) (KS, level 0.01)", p >= 0.01,
        format!("n = {}, D = {d:.4}, p = {p:.4}, mean {mean:.3}, sd {sd:.3}", null_stats.len()));

    // Oracle equivalence.
    let mut rng = seeded(8);
    let mut worst_trace: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(4..=12);
        let p = rng.random_range(1..=20);
        let x = gaussian(n, p, &mut rng);
        worst_trace = worst_trace.max(rel_err(trace_sigma2_hat(x.view()).unwrap(), trace_quadruple_sum(x.view())));
    }
    let mut worst_double: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=50);
        let p = rng.random_range(1..=20);
        let x = gaussian(n, p, &mut rng);
        let r = gaussian_vec(n, &mut rng);
        worst_double = worst_double.max(rel_err(quad_stat(r.view(), x.view()), quad_double_sum(r.view(), x.view())));
        let fast = marginal_stats(r.view(), x.view());
        for (a, b) in fast.iter().zip(marginal_double_sum(r.view(), x.view(), None)) {
            worst_double = worst_double.max(rel_err(*a, b));
        }
    }
    record(&mut log, 8, "fast statistics match literal sums", worst_trace <= 1e-10 && worst_double <= 1e-10,
        format!("trace max rel err {worst_trace:.2e}; quad/marginal max rel err {worst_double:.2e}"));

    // Lasso optimality.
    let mut rng = seeded(9);
    let mut worst_kkt: f64 = 0.0;
    let params = LassoParams::default();
    for _ in 0..50 {
        let n = rng.random_range(30..=120);
        let p = rng.random_range(5..=300);
        let z = gaussian(n, p, &mut rng);
        let y = &z.column(0) * 1.5 - &z.column(p - 1) + gaussian_vec(n, &mut rng);
        for fit in lasso_path(z.view(), y.view(), &params).unwrap() {
            worst_kkt = worst_kkt.max(lasso_kkt(z.view(), y.view(), fit.intercept, fit.coefficients.view(), fit.lambda));
        }
    }
    let z = gaussian(150, 10, &mut rng);
    let y = &z.column(3) * 2.0 + gaussian_vec(150, &mut rng);
    let tight = LassoParams { tol: 1e-12, max_sweeps: 100_000, ..Default::default() };
    let fit = lasso_fit(z.view(), y.view(), 0.0, &tight).unwrap();
    let ls = ols(z.view(), y.view());
    let ls_diff = std::iter::once((fit.intercept - ls[0]).abs())
        .chain(fit.coefficients.iter().zip(&ls[1..]).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    record(&mut log, 9, "lasso KKT and least-squares limit", worst_kkt <= 1e-4 && ls_diff <= 1e-6,
        format!("max KKT violation {worst_kkt:.2e} over 50 paths; |lambda=0 - OLS| = {ls_diff:.2e}"));

    // Bootstrap identity.
    let mut rng = seeded(10);
    let mut worst_ulps = 0u64;
    for _ in 0..100 {
        let n = rng.random_range(2..=80);
        let p = rng.random_range(1..=40);
        let x = gaussian(n, p, &mut rng);
        let r = gaussian_vec(n, &mut rng);
        let ones = ndarray::Array1::ones(n);
        let boot = bootstrap_marginal(r.view(), x.view(), ones.view()).unwrap();
        let plain = marginal_stats(r.view(), x.view());
        for (a, b) in boot.iter().zip(plain.iter()) {
            let (ia, ib) = (a.to_bits() as i64, b.to_bits() as i64);
            let ulps = if a == b { 0 } else if (ia < 0) == (ib < 0) { ia.abs_diff(ib) } else { u64::MAX };
            worst_ulps = worst_ulps.max(ulps);
        }
    }
    record(&mut log, 10, "unit multipliers reproduce marginal statistics", worst_ulps <= 1,
        format!("max difference {worst_ulps} ulp over 100 cases"));

    // Reproducibility across worker counts.
    let small = |workers: usize| ExperimentConfig {
        grid: GridSpec { n_total: vec![120], p: vec![200, 300], rho: vec![0.5], model: vec![Model::M1, Model::M3] },
        scenarios: vec![ScenarioSpec::null(), ScenarioSpec::sparse(&[3])],
        gamma: GammaSpec::default(),
        nuisance: NuisanceMethod::Lasso(LassoParams { folds: 5, ..Default::default() }),
        tests: all_tests(),
        replicates: 12,
        master_seed: 77,
        workers,
        record_timing: false,
        ..Default::default()
    };
    let a = csv_string(&run_grid(&small(1)).unwrap().rows()).unwrap();
    let b = csv_string(&run_grid(&small(4)).unwrap().rows()).unwrap();
    record(&mut log, 11, "byte-identical CSV for 1 and 4 workers", a == b && !a.is_empty(),
        format!("{} bytes, {} rows, identical = {}", a.len(), a.lines().count() - 1, a == b));

    println!();
    println!("acceptance summary");
    for o in &log {
        println!("  {:>2} {} {}", o.id, if o.passed { "PASS" } else { "FAIL" }, o.name);
    }
    let failed: Vec<String> = log.iter().filter(|o| !o.passed).map(|o| format!("{} ({})", o.id, o.detail)).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
