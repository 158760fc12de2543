//! Closed-form reference quantities for Brownian motion with generator `½Δ`.
//!
//! * the free Gaussian kernel,
//! * the Dirichlet kernel of the half-space (defined as zero across the
//!   hyperplane, so it is also the kernel of `R^d` minus the hyperplane),
//! * half-space survival, its large-time limit and a lower bound.

use crate::geometry::Point;
use std::f64::consts::{PI, SQRT_2};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("dimension mismatch between {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("{0}")]
    Domain(String),
}

fn check_time(t: f64) -> Result<(), KernelError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(KernelError::NonPositiveTime(t))
    }
}

fn check_dims(x: &Point, y: &Point) -> Result<(), KernelError> {
    if x.dim() != y.dim() {
        return Err(KernelError::DimensionMismatch(x.dim(), y.dim()));
    }
    Ok(())
}

/// `(2πt)^{-d/2}`.
pub fn gaussian_bound(t: f64, d: usize) -> f64 {
    (2.0 * PI * t).powf(-(d as f64) / 2.0)
}

/// `(2πt)^{-d/2} exp(-|x-y|²/2t)`.
pub fn free_kernel(t: f64, x: &Point, y: &Point) -> Result<f64, KernelError> {
    check_time(t)?;
    check_dims(x, y)?;
    Ok(gaussian_bound(t, x.dim()) * (-x.distance_sq(y) / (2.0 * t)).exp())
}

/// Dirichlet heat kernel of the half-space containing `x`; zero when `x` and
/// `y` are not strictly on the same side of `x_d = 0`.
pub fn halfspace_kernel(t: f64, x: &Point, y: &Point) -> Result<f64, KernelError> {
    check_time(t)?;
    check_dims(x, y)?;
    Ok(halfspace_kernel_raw(t, x.coords(), y.coords()))
}

/// Unchecked form on raw coordinate slices, for hot loops.
#[inline]
pub fn halfspace_kernel_raw(t: f64, x: &[f64], y: &[f64]) -> f64 {
    let d = x.len();
    let (xd, yd) = (x[d - 1], y[d - 1]);
    if xd * yd <= 0.0 {
        return 0.0;
    }
    let tang: f64 = x[..d - 1]
        .iter()
        .zip(&y[..d - 1])
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    // 2 e^{-(xd²+yd²)/2t} sinh(xd yd/t) = e^{-(xd-yd)²/2t} (1 - e^{-2 xd yd/t})
    let diff = xd - yd;
    let gap = -(-2.0 * xd * yd / t).exp_m1();
    gaussian_bound(t, d) * (-(tang + diff * diff) / (2.0 * t)).exp() * gap
}

/// Standard normal CDF, `Φ(z) = ½ erfc(-z/√2)`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Survival of the half-space started at height `x_d`:
/// `Φ(|x_d|/√t) - Φ(-|x_d|/√t) = erf(|x_d|/√(2t))`.
pub fn halfspace_survival(t: f64, xd: f64) -> Result<f64, KernelError> {
    check_time(t)?;
    Ok(libm::erf(xd.abs() / (2.0 * t).sqrt()))
}

/// `lim t^{1+d/2} p^H_t(x, y) = 2 x_d y_d / (2π)^{d/2}`.
pub fn halfspace_kernel_limit(x: &Point, y: &Point) -> Result<f64, KernelError> {
    check_dims(x, y)?;
    let (xd, yd) = (x.xd(), y.xd());
    if !(xd > 0.0 && yd > 0.0) {
        return Err(KernelError::Domain(format!(
            "limit needs x_d > 0 and y_d > 0, got {xd} and {yd}"
        )));
    }
    Ok(2.0 * xd * yd / (2.0 * PI).powf(x.dim() as f64 / 2.0))
}

/// `1 - (2/√(2π)) (√s / x_d) e^{-x_d²/2s}`, a lower bound on half-space
/// survival over time `s`.
pub fn halfspace_survival_lower_bound(s: f64, xd: f64) -> Result<f64, KernelError> {
    check_time(s)?;
    if !(xd > 0.0) {
        return Err(KernelError::Domain(format!("x_d must be positive, got {xd}")));
    }
    Ok(1.0 - (2.0 / (2.0 * PI).sqrt()) * (s.sqrt() / xd) * (-xd * xd / (2.0 * s)).exp())
}
