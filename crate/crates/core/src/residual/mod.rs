//! Derivative-free sequential residual driver with a nonmonotone double
//! backtracking line search.
//!
//! Each iteration scales a residual-related direction `v` (with
//! `||v|| = ||F(x)||`) by `sigma`, tries `x - alpha sigma v` and
//! `x + alpha sigma v` against the nonmonotone test
//!
//! ```text
//! f(x + alpha d) <= max_{last M} f + eta_k - gamma alpha^2 f(x)
//! ```
//!
//! shrinking `alpha` by safeguarded quadratic interpolation, and hands the
//! accepted trial point to an [`Accelerator`](crate::secant::Accelerator)
//! which may return something better.

mod line_search;
mod memory;
mod safeguard;
mod solve;

pub use line_search::{line_search, LineSearchError, LineSearchOutcome, ALPHA_FLOOR};
pub use memory::NonmonotoneMemory;
pub use safeguard::random_direction;
pub use solve::{solve, Clock, NoClock, NoObserver, SolveObserver, Solver, StepEvent};

use crate::linalg;

/// Forcing term `2^-k min{ ||F(x^0)|| / 2, sqrt(||F(x^0)||) }`.
///
/// Underflows to zero for large `k`; the acceptance test then reduces to
/// plain nonmonotone decrease.
pub fn eta_schedule(k: usize, f0_norm: f64) -> f64 {
    let base = (0.5 * f0_norm).min(libm::sqrt(f0_norm));
    let k = k.min(i32::MAX as usize) as i32;
    base * libm::exp2(-(k as f64))
}

/// Barzilai-Borwein factor `||s||^2 / (y^T s)`, with `|sigma|` clamped into
/// `[sigma_min, sigma_max]` keeping its sign. A zero denominator yields 1.
pub fn spectral_sigma(s_prev: &[f64], y_prev: &[f64], sigma_min: f64, sigma_max: f64) -> f64 {
    let ys = linalg::dot(y_prev, s_prev);
    let raw = if ys == 0.0 {
        1.0
    } else {
        linalg::norm2_sq(s_prev) / ys
    };
    let raw = if raw.is_finite() { raw } else { raw.signum() * sigma_max };
    let mag = raw.abs().clamp(sigma_min, sigma_max);
    if raw < 0.0 {
        -mag
    } else {
        mag
    }
}

/// Conservative scaling for accelerated runs.
///
/// `k = 0` gives 1. Otherwise `h_init ||x_cur - x_prev|| / ||F||` is used when
/// it lies in `[max{1, ||x_cur||} sigma_min, sigma_max]`; if not,
/// `h_init ||x_cur|| / ||F||` projected onto that interval.
pub fn conservative_sigma(
    k: usize,
    x_prev: &[f64],
    x_cur: &[f64],
    f_norm: f64,
    h_init: f64,
    sigma_min: f64,
    sigma_max: f64,
) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let x_norm = linalg::norm2(x_cur);
    let lo = x_norm.max(1.0) * sigma_min;
    let hi = sigma_max;
    let bar = h_init * linalg::dist2(x_cur, x_prev) / f_norm;
    if bar >= lo && bar <= hi {
        return bar;
    }
    let barbar = h_init * x_norm / f_norm;
    // An empty interval (huge ||x||) collapses onto sigma_max.
    if barbar.is_nan() {
        hi
    } else {
        barbar.max(lo).min(hi)
    }
}

/// Safeguarded minimizer of the quadratic through `f(0) = f_x`,
/// `f(alpha) = f_trial` with unit slope model.
pub fn reduce_alpha(alpha: f64, f_x: f64, f_trial: f64, tau_min: f64, tau_max: f64) -> f64 {
    let quotient = alpha * alpha * f_x / (f_trial + (2.0 * alpha - 1.0) * f_x);
    if !quotient.is_finite() {
        return tau_max * alpha;
    }
    (tau_min * alpha).max(quotient.min(tau_max * alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_examples() {
        assert_eq!(eta_schedule(0, 4.0), 2.0);
        assert_eq!(eta_schedule(1, 4.0), 1.0);
        assert!((eta_schedule(0, 0.01) - 0.005).abs() < 1e-18);
        assert_eq!(eta_schedule(5000, 4.0), 0.0);
    }

    #[test]
    fn spectral_examples() {
        assert_eq!(spectral_sigma(&[1.0, 0.0], &[2.0, 0.0], 1e-8, 1e8), 0.5);
        assert_eq!(spectral_sigma(&[1.0, 0.0], &[-2.0, 0.0], 1e-8, 1e8), -0.5);
        assert_eq!(spectral_sigma(&[1.0, 0.0], &[0.0, 1.0], 1e-8, 1e8), 1.0);
        assert_eq!(spectral_sigma(&[1.0], &[1e-20], 1e-8, 1e8), 1e8);
        assert_eq!(spectral_sigma(&[1e-10], &[-1.0], 1e-8, 1e8), -1e-8);
    }

    #[test]
    fn conservative_examples() {
        let s = 1.49e-8;
        assert_eq!(conservative_sigma(0, &[0.0], &[3.0], 2.0, 0.01, s, 1.0), 1.0);
        // ||x_cur - x_prev|| = 1, F_norm = 2, ||x_cur|| = 1
        let v = conservative_sigma(1, &[0.0, 0.0], &[1.0, 0.0], 2.0, 0.01, s, 1.0);
        assert!((v - 0.005).abs() < 1e-18);
        // ||x_cur - x_prev|| = 10, ||x_cur|| = 5: 100 out of range, 50 projected to 1.
        let v = conservative_sigma(1, &[-3.0, -4.0], &[3.0, 4.0], 0.1, 1.0, s, 1.0);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn reduce_alpha_examples() {
        assert!((reduce_alpha(1.0, 1.0, 2.0, 0.1, 0.5) - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(reduce_alpha(1.0, 1.0, 100.0, 0.1, 0.5), 0.1);
        assert_eq!(reduce_alpha(1.0, 1.0, 0.9, 0.1, 0.5), 0.5);
        assert_eq!(reduce_alpha(1.0, 1.0, f64::INFINITY, 0.1, 0.5), 0.1);
        assert_eq!(reduce_alpha(0.5, 1.0, -0.0, 0.1, 0.5), 0.25);
    }
}
