//! Householder QR least squares on column-equilibrated designs.

use super::sum::{dot, sum};

/// A pivot below this fraction of the largest pivot marks a column as
/// collinear with the ones before it.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// Diagonal of (XᵀX)⁻¹ in the original column scale.
    pub xtx_inv_diag: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Collinear {
    pub column: usize,
}

/// Solves min ‖y − Xβ‖ for a column-major `columns` matrix.
///
/// Columns are scaled to unit norm before factorisation so the rank test is
/// invariant to the units of each regressor.
pub(crate) fn solve(columns: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares, Collinear> {
    let k = columns.len();
    let n = y.len();
    debug_assert!(columns.iter().all(|c| c.len() == n));

    let norms: Vec<f64> = columns.iter().map(|c| dot(c, c).sqrt()).collect();
    if let Some(column) = norms.iter().position(|&s| s == 0.0 || !s.is_finite()) {
        return Err(Collinear { column });
    }
    let mut a: Vec<Vec<f64>> = columns
        .iter()
        .zip(&norms)
        .map(|(c, s)| c.iter().map(|v| v / s).collect())
        .collect();
    let mut qty = y.to_vec();
    let mut r = vec![vec![0.0; k]; k];

    for j in 0..k {
        let col = &a[j][j..];
        let norm = dot(col, col).sqrt();
        let alpha = if col[0] > 0.0 { -norm } else { norm };
        let mut v = col.to_vec();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        r[j][j] = alpha;
        if vnorm2 > 0.0 {
            for c in (j + 1)..k {
                let s = 2.0 * dot(&v, &a[c][j..]) / vnorm2;
                for (ai, vi) in a[c][j..].iter_mut().zip(&v) {
                    *ai -= s * vi;
                }
            }
            let s = 2.0 * dot(&v, &qty[j..]) / vnorm2;
            for (yi, vi) in qty[j..].iter_mut().zip(&v) {
                *yi -= s * vi;
            }
        }
        for c in (j + 1)..k {
            r[j][c] = a[c][j];
        }
    }

    let largest = (0..k).map(|j| r[j][j].abs()).fold(0.0, f64::max);
    if let Some(column) = (0..k).find(|&j| r[j][j].abs() < RANK_TOLERANCE * largest) {
        return Err(Collinear { column });
    }

    // Back substitution for the scaled coefficients.
    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let tail = sum(((i + 1)..k).map(|c| r[i][c] * beta[c]));
        beta[i] = (qty[i] - tail) / r[i][i];
    }

    // R⁻¹ column by column; diag((RᵀR)⁻¹) is the squared row norms of R⁻¹.
    let mut rinv = vec![vec![0.0; k]; k];
    for c in 0..k {
        rinv[c][c] = 1.0 / r[c][c];
        for i in (0..c).rev() {
            let s = sum(((i + 1)..=c).map(|m| r[i][m] * rinv[m][c]));
            rinv[i][c] = -s / r[i][i];
        }
    }

    let coefficients = beta.iter().zip(&norms).map(|(b, s)| b / s).collect();
    let xtx_inv_diag = (0..k)
        .map(|i| sum(rinv[i].iter().map(|v| v * v)) / (norms[i] * norms[i]))
        .collect();
    Ok(LeastSquares {
        coefficients,
        xtx_inv_diag,
    })
}
