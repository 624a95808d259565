//! Reference implementations shared by the integration tests. Nothing here
//! calls into the library's own fast paths.
#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use plmtest::seed::{rng_from, Rng};
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(n: usize, p: usize, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| StandardNormal.sample(rng))
}

pub fn gaussian_vec(n: usize, rng: &mut Rng) -> Array1<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn seeded(seed: u64) -> Rng {
    rng_from(seed)
}

fn inner(x: ArrayView2<f64>, a: usize, b: usize) -> f64 {
    (0..x.ncols()).map(|l| x[[a, l]] * x[[b, l]]).sum()
}

/// (1/n) Σ_{i≠j} r_i r_j x_iᵀx_j, term by term.
pub fn quad_double_sum(r: ArrayView1<f64>, x: ArrayView2<f64>) -> f64 {
    let n = r.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += r[i] * r[j] * inner(x, i, j);
            }
        }
    }
    s / n as f64
}

/// Per-column [1/(n(n−1))] Σ_{i≠j} e_i e_j r_i r_j x_il x_jl, term by term.
pub fn marginal_double_sum(r: ArrayView1<f64>, x: ArrayView2<f64>, e: Option<ArrayView1<f64>>) -> Vec<f64> {
    let n = r.len();
    let w = |i: usize| e.map_or(1.0, |e| e[i]);
    (0..x.ncols())
        .map(|l| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        s += w(i) * w(j) * r[i] * r[j] * x[[i, l]] * x[[j, l]];
                    }
                }
            }
            s / (n * (n - 1)) as f64
        })
        .collect()
}

/// Quadruple sum over i1<i2<i3<i4 of (X1−X2)ᵀ(X3−X4)·(X2−X3)ᵀ(X4−X1), divided by 2·C(n,4).
pub fn trace_quadruple_sum(x: ArrayView2<f64>) -> f64 {
    let n = x.nrows();
    let p = x.ncols();
    let d = |a: usize, b: usize, c: usize, e: usize| -> f64 {
        (0..p).map(|l| (x[[a, l]] - x[[b, l]]) * (x[[c, l]] - x[[e, l]])).sum()
    };
    let mut s = 0.0;
    let mut count = 0u64;
    for i1 in 0..n {
        for i2 in i1 + 1..n {
            for i3 in i2 + 1..n {
                for i4 in i3 + 1..n {
                    s += d(i1, i2, i3, i4) * d(i2, i3, i4, i1);
                    count += 1;
                }
            }
        }
    }
    s / (2.0 * count as f64)
}

/// Least squares with intercept by the normal equations (Gauss–Jordan, partial pivoting).
pub fn ols(z: ArrayView2<f64>, y: ArrayView1<f64>) -> Vec<f64> {
    let (n, p) = z.dim();
    let q = p + 1;
    let design = |i: usize, c: usize| if c == 0 { 1.0 } else { z[[i, c - 1]] };
    let mut m = vec![vec![0.0; q + 1]; q];
    for (r, row) in m.iter_mut().enumerate() {
        for c in 0..q {
            row[c] = (0..n).map(|i| design(i, r) * design(i, c)).sum();
        }
        row[q] = (0..n).map(|i| design(i, r) * y[i]).sum();
    }
    for col in 0..q {
        let piv = (col..q).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        let pv = m[col][col];
        for c in 0..=q {
            m[col][c] /= pv;
        }
        for r in 0..q {
            if r != col {
                let f = m[r][col];
                for c in 0..=q {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    m.iter().map(|row| row[q]).collect()
}

/// Largest KKT violation of a Lasso solution, checked on columns standardized
/// with divisor n and a centered response.
pub fn lasso_kkt(z: ArrayView2<f64>, y: ArrayView1<f64>, intercept: f64, coef: ArrayView1<f64>, lambda: f64) -> f64 {
    let (n, p) = z.dim();
    let nf = n as f64;
    let resid: Vec<f64> = (0..n)
        .map(|i| y[i] - intercept - (0..p).map(|j| z[[i, j]] * coef[j]).sum::<f64>())
        .collect();
    let mut worst: f64 = 0.0;
    for j in 0..p {
        let mean = z.column(j).sum() / nf;
        let sd = (z.column(j).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf).sqrt();
        let g = (0..n).map(|i| (z[[i, j]] - mean) / sd * resid[i]).sum::<f64>() / nf;
        let v = if coef[j] != 0.0 { (g - lambda * coef[j].signum()).abs() } else { (g.abs() - lambda).max(0.0) };
        worst = worst.max(v);
    }
    worst
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

fn erf(x: f64) -> f64 {
    // Maclaurin series for |x| < 3, continued fraction for the tail.
    if x.abs() < 3.0 {
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= -x2 / k;
            let add = term / (2.0 * k + 1.0);
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    } else {
        let a = x.abs();
        let mut f = 0.0;
        for k in (1..60).rev() {
            f = (k as f64 / 2.0) / (a + f);
        }
        let tail = (-a * a).exp() / std::f64::consts::PI.sqrt() / (a + f);
        (1.0 - tail) * x.signum()
    }
}

/// One-sample Kolmogorov–Smirnov statistic D_n.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            f64::max(f - i as f64 / n, (i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of D_n with Stephens' small-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let t = (sn + 0.12 + 0.11 / sn) * d;
    let mut s = 0.0;
    for k in 1..200 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let k = k as f64;
        s += 2.0 * sign * (-2.0 * k * k * t * t).exp();
    }
    s.clamp(0.0, 1.0)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
