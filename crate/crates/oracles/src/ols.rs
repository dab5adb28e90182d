//! Least squares solved exactly over the rationals through the normal
//! equations, with the variance formulas written out by hand.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

#[derive(Debug, Clone)]
pub struct ExactFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub rss: f64,
    pub tss: f64,
    pub r2: f64,
}

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

fn f(x: &BigRational) -> f64 {
    x.to_f64().expect("representable")
}

/// Gauss-Jordan inverse of a small symmetric positive-definite matrix.
fn invert(mut a: Vec<Vec<BigRational>>) -> Vec<Vec<BigRational>> {
    let k = a.len();
    let mut inv: Vec<Vec<BigRational>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    if i == j {
                        BigRational::from_integer(BigInt::from(1))
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..k {
        let pivot_row = (col..k).find(|&r| !a[r][col].is_zero()).expect("singular");
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let p = a[col][col].clone();
        for j in 0..k {
            a[col][j] = &a[col][j] / &p;
            inv[col][j] = &inv[col][j] / &p;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for j in 0..k {
                    let d = &factor * &a[col][j];
                    a[r][j] = &a[r][j] - d;
                    let d = &factor * &inv[col][j];
                    inv[r][j] = &inv[r][j] - d;
                }
            }
        }
    }
    inv
}

/// `columns` is column-major; include a column of ones for an intercept and
/// set `centered` so TSS is taken about the mean.
pub fn exact_ols(y: &[f64], columns: &[Vec<f64>], centered: bool) -> ExactFit {
    let n = y.len();
    let k = columns.len();
    let x: Vec<Vec<BigRational>> = columns
        .iter()
        .map(|c| c.iter().map(|&v| q(v)).collect())
        .collect();
    let yq: Vec<BigRational> = y.iter().map(|&v| q(v)).collect();

    let mut xtx = vec![vec![BigRational::zero(); k]; k];
    let mut xty = vec![BigRational::zero(); k];
    for i in 0..k {
        for j in 0..k {
            let mut s = BigRational::zero();
            for r in 0..n {
                s += &x[i][r] * &x[j][r];
            }
            xtx[i][j] = s;
        }
        let mut s = BigRational::zero();
        for r in 0..n {
            s += &x[i][r] * &yq[r];
        }
        xty[i] = s;
    }
    let inv = invert(xtx);
    let beta: Vec<BigRational> = (0..k)
        .map(|i| {
            let mut s = BigRational::zero();
            for j in 0..k {
                s += &inv[i][j] * &xty[j];
            }
            s
        })
        .collect();

    let mut rss = BigRational::zero();
    for r in 0..n {
        let mut fitted = BigRational::zero();
        for j in 0..k {
            fitted += &x[j][r] * &beta[j];
        }
        let e = &yq[r] - fitted;
        rss += &e * &e;
    }
    let tss = if centered {
        let mut sum = BigRational::zero();
        for v in &yq {
            sum += v;
        }
        let mean = sum / BigRational::from_integer(BigInt::from(n));
        let mut s = BigRational::zero();
        for v in &yq {
            let d = v - &mean;
            s += &d * &d;
        }
        s
    } else {
        let mut s = BigRational::zero();
        for v in &yq {
            s += v * v;
        }
        s
    };
    let one = BigRational::from_integer(BigInt::from(1));
    let r2 = &one - &rss / &tss;
    let sigma2 = &rss / BigRational::from_integer(BigInt::from(n - k));

    let coefficients: Vec<f64> = beta.iter().map(f).collect();
    let std_errors: Vec<f64> = (0..k).map(|i| f(&(&sigma2 * &inv[i][i])).sqrt()).collect();
    let t_stats = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, s)| b / s)
        .collect();
    ExactFit {
        coefficients,
        std_errors,
        t_stats,
        rss: f(&rss),
        tss: f(&tss),
        r2: f(&r2),
    }
}
