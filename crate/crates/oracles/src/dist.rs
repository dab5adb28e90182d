//! Student t and F distribution functions by numerical integration of the
//! densities. Normalising constants come from statrs' log-gamma.

use crate::quad::integrate;
use statrs::function::gamma::ln_gamma;

const TOL: f64 = 1e-14;

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub fn t_density(t: f64, df: f64) -> f64 {
    let ln_norm = -0.5 * df.ln() - ln_beta(0.5, 0.5 * df);
    (ln_norm - 0.5 * (df + 1.0) * (1.0 + t * t / df).ln()).exp()
}

pub fn f_density(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln = 0.5 * d1 * d1.ln() + 0.5 * d2 * d2.ln() + (0.5 * d1 - 1.0) * x.ln()
        - 0.5 * (d1 + d2) * (d2 + d1 * x).ln()
        - ln_beta(0.5 * d1, 0.5 * d2);
    ln.exp()
}

/// ln(1 + e^v) without overflow.
fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

fn ln_t_density(ln_t: f64, df: f64) -> f64 {
    let ln_norm = -0.5 * df.ln() - ln_beta(0.5, 0.5 * df);
    ln_norm - 0.5 * (df + 1.0) * softplus(2.0 * ln_t - df.ln())
}

/// ln of the F density at e^ln_x, with d2^(d2/2) cancelled analytically so
/// large d2 does not leave noise between neighbouring points.
fn ln_f_density(ln_x: f64, d1: f64, d2: f64) -> f64 {
    let ln_ratio = (d1 / d2).ln();
    0.5 * d1 * ln_ratio - ln_beta(0.5 * d1, 0.5 * d2) + (0.5 * d1 - 1.0) * ln_x
        - 0.5 * (d1 + d2) * softplus(ln_ratio + ln_x)
}

/// ∫ of a density over (lo, ∞), lo > 0, on s = y^(−q). For a density
/// decaying like y^(−1−p), any 0 < q ≤ p keeps the integrand bounded at
/// s = 0.
fn upper_tail<D: Fn(f64) -> f64>(ln_density: D, lo: f64, q: f64) -> f64 {
    let top = (-q * lo.ln()).exp();
    integrate(
        |s| {
            let ln_s = s.ln();
            let ln_y = -ln_s / q;
            (ln_density(ln_y) - q.ln() + (-1.0 / q - 1.0) * ln_s).exp()
        },
        0.0,
        top,
        TOL,
    )
}

/// P(T > x) for x >= 0.
fn t_upper(x: f64, df: f64) -> f64 {
    if x <= 1.0 {
        0.5 - integrate(|t| t_density(t, df), 0.0, x, TOL)
    } else {
        upper_tail(|ln_t| ln_t_density(ln_t, df), x, df.min(1.0))
    }
}

pub fn t_cdf(x: f64, df: f64) -> f64 {
    if x >= 0.0 {
        1.0 - t_upper(x, df)
    } else {
        t_upper(-x, df)
    }
}

/// P(F <= x) on x = s^(1/q), q = min(d1/2, 1), which removes the x^(d1/2 − 1)
/// singularity at the origin.
fn f_lower(x: f64, d1: f64, d2: f64) -> f64 {
    let q = (0.5 * d1).min(1.0);
    let top = (q * x.ln()).exp();
    integrate(
        |s| {
            let ln_s = s.ln();
            (ln_f_density(ln_s / q, d1, d2) - q.ln() + (1.0 / q - 1.0) * ln_s).exp()
        },
        0.0,
        top,
        TOL,
    )
}

pub fn f_cdf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x <= 1.0 {
        f_lower(x, d1, d2)
    } else {
        1.0 - upper_tail(|ln_x| ln_f_density(ln_x, d1, d2), x, (0.5 * d2).min(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_closed_form() {
        for &x in &[-3.0, -0.5, 0.0, 0.7, 1.0, 5.0, 40.0] {
            let exact = 0.5 + f64::atan(x) / std::f64::consts::PI;
            assert!((t_cdf(x, 1.0) - exact).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn f22_closed_form() {
        for &x in &[0.1, 0.5, 1.0, 3.0, 20.0, 500.0] {
            assert!((f_cdf(x, 2.0, 2.0) - x / (1.0 + x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn f11_median_is_one() {
        assert!((f_cdf(1.0, 1.0, 1.0) - 0.5).abs() < 1e-12);
        // F(1,1) is the square of a standard Cauchy: P(F <= x) = (2/π) atan(√x)
        for &x in &[0.01f64, 0.3, 4.0, 100.0] {
            let exact = 2.0 / std::f64::consts::PI * x.sqrt().atan();
            assert!((f_cdf(x, 1.0, 1.0) - exact).abs() < 1e-11, "x={x}");
        }
    }

    #[test]
    fn densities_normalise() {
        let t_mass = integrate(|t| t_density(t, 5.0), -60.0, 60.0, 1e-14);
        assert!((t_mass - 1.0).abs() < 1e-5);
        assert!((f_cdf(1e9, 4.0, 7.0) - 1.0).abs() < 1e-6);
    }
}
