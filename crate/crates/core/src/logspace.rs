//! Log-domain reductions and dense products.

use nalgebra::{DMatrix, DVector};

/// `log Σ exp(x)`, `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let max = a.max(b);
    max + ((a - max).exp() + (b - max).exp()).ln()
}

/// `C_ij = log Σ_k exp(A_ik + B_kj)`.
///
/// Uses a row/column-scaled linear product and falls back to the exact
/// per-entry reduction where the scaled sum underflows.
pub fn log_matmul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.nrows());
    let (rows, inner, cols) = (a.nrows(), a.ncols(), b.ncols());
    let row_max: Vec<f64> = (0..rows)
        .map(|i| a.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let col_max: Vec<f64> = (0..cols)
        .map(|j| {
            b.column(j)
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let sa = DMatrix::from_fn(rows, inner, |i, k| (a[(i, k)] - row_max[i]).exp());
    let sb = DMatrix::from_fn(inner, cols, |k, j| (b[(k, j)] - col_max[j]).exp());
    let prod = sa * sb;
    DMatrix::from_fn(rows, cols, |i, j| {
        let v = prod[(i, j)];
        if v > 1e-200 {
            row_max[i] + col_max[j] + v.ln()
        } else {
            log_sum_exp((0..inner).map(|k| a[(i, k)] + b[(k, j)]))
        }
    })
}

/// `y_i = log Σ_j exp(A_ij + x_j)`.
pub fn log_matvec(a: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(a.nrows(), |i, _| {
        log_sum_exp((0..a.ncols()).map(|j| a[(i, j)] + x[j]))
    })
}

/// `y_j = log Σ_i exp(x_i + A_ij)`.
pub fn log_vecmat(x: &DVector<f64>, a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(a.ncols(), |j, _| {
        log_sum_exp((0..a.nrows()).map(|i| x[i] + a[(i, j)]))
    })
}

/// Shannon entropy in bits with `0·log 0 = 0`.
pub fn entropy_bits<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    let s: f64 = probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| p * p.log2())
        .sum();
    if s == 0.0 {
        0.0
    } else {
        -s
    }
}
