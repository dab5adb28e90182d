//! Reference computations for the `asiaudit` test suites.
//!
//! Everything here deliberately takes a different route from the library:
//! exact rational normal equations instead of Householder QR, adaptive
//! quadrature of densities instead of continued fractions, full sorts instead
//! of selection. Nothing in this crate depends on `asiaudit`.

pub mod dist;
pub mod ols;
pub mod quad;

/// Hyndman-Fan type 7 percentile by full sort.
pub fn percentile_sorted(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Through-origin slope written out as Σxy / Σx².
pub fn origin_slope(x: &[f64], y: &[f64]) -> f64 {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    sxy / sxx
}

/// 2-norm condition number of a column-major design via SVD.
pub fn condition_number(columns: &[Vec<f64>]) -> f64 {
    let n = columns[0].len();
    let k = columns.len();
    let m = nalgebra::DMatrix::from_fn(n, k, |i, j| columns[j][i]);
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_percentile_matches_hand_values() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile_sorted(&v, 0.0), 1.0);
        assert_eq!(percentile_sorted(&v, 1.0), 5.0);
        assert_eq!(percentile_sorted(&v, 0.5), 3.0);
        assert!((percentile_sorted(&v, 0.1) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn identity_matrix_is_perfectly_conditioned() {
        let cols = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!((condition_number(&cols) - 1.0).abs() < 1e-12);
    }
}
