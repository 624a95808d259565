//! Literal-sum reference implementations.
//!
//! These evaluate the statistics term by term, exactly as the sums are
//! written, with no algebraic shortcuts. They exist to check the fast paths
//! in [`crate::qtest`] and [`crate::penhance`] and are far too slow for real use.

use ndarray::{ArrayView1, ArrayView2};

/// (1/n) Σ_{i≠j} r_i r_j x_iᵀx_j.
pub fn quad_stat_literal(r: ArrayView1<f64>, x: ArrayView2<f64>) -> f64 {
    let n = r.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += r[i] * r[j] * x.row(i).dot(&x.row(j));
            }
        }
    }
    s / n as f64
}

/// [1/(n(n−1))] Σ_{i≠j} r_i r_j x_il x_jl for each column l.
pub fn marginal_stats_literal(r: ArrayView1<f64>, x: ArrayView2<f64>) -> Vec<f64> {
    let n = r.len();
    (0..x.ncols())
        .map(|l| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        s += r[i] * r[j] * x[[i, l]] * x[[j, l]];
                    }
                }
            }
            s / (n * (n - 1)) as f64
        })
        .collect()
}

/// [1/(n(n−1))] Σ_{i≠j} r_i r_j x_il x_jl e_i e_j for each column l.
pub fn bootstrap_marginal_literal(
    r: ArrayView1<f64>,
    x: ArrayView2<f64>,
    e: ArrayView1<f64>,
) -> Vec<f64> {
    let n = r.len();
    (0..x.ncols())
        .map(|l| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        s += r[i] * r[j] * x[[i, l]] * x[[j, l]] * e[i] * e[j];
                    }
                }
            }
            s / (n * (n - 1)) as f64
        })
        .collect()
}

/// [1/(2·C(n,4))] Σ_{i1<i2<i3<i4} (X_{i1}−X_{i2})ᵀ(X_{i3}−X_{i4}) · (X_{i2}−X_{i3})ᵀ(X_{i4}−X_{i1}).
pub fn trace_sigma2_literal(x: ArrayView2<f64>) -> f64 {
    let n = x.nrows();
    assert!(n >= 4, "need at least four rows");
    let diff = |a: usize, b: usize| &x.row(a) - &x.row(b);
    let mut s = 0.0;
    for i1 in 0..n {
        for i2 in (i1 + 1)..n {
            for i3 in (i2 + 1)..n {
                for i4 in (i3 + 1)..n {
                    let first = diff(i1, i2).dot(&diff(i3, i4));
                    let second = diff(i2, i3).dot(&diff(i4, i1));
                    s += first * second;
                }
            }
        }
    }
    let nf = n as f64;
    let choose4 = nf * (nf - 1.0) * (nf - 2.0) * (nf - 3.0) / 24.0;
    s / (2.0 * choose4)
}

/// Normal-equations solve with intercept, via Gaussian elimination with partial pivoting.
pub fn least_squares(z: ArrayView2<f64>, y: ArrayView1<f64>) -> (f64, Vec<f64>) {
    let (n, p) = z.dim();
    let q = p + 1;
    let mut a = vec![vec![0.0; q + 1]; q];
    for i in 0..n {
        let row: Vec<f64> = std::iter::once(1.0).chain(z.row(i).iter().copied()).collect();
        for r in 0..q {
            for c in 0..q {
                a[r][c] += row[r] * row[c];
            }
            a[r][q] += row[r] * y[i];
        }
    }
    for k in 0..q {
        let piv = (k..q).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        for i in (k + 1)..q {
            let f = a[i][k] / a[k][k];
            for c in k..=q {
                a[i][c] -= f * a[k][c];
            }
        }
    }
    let mut x = vec![0.0; q];
    for k in (0..q).rev() {
        let s: f64 = ((k + 1)..q).map(|c| a[k][c] * x[c]).sum();
        x[k] = (a[k][q] - s) / a[k][k];
    }
    (x[0], x[1..].to_vec())
}
