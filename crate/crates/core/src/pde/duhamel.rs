//! Boundary-integral representation of the kernel:
//!
//! `p_t(x,y) = p^H_t(x,y)·1{x_2 y_2 > 0}
//!     + x_2/(2π) ∫_0^t ds (t-s)^{-2} ∫_D exp(-(x_2² + |x_1-ξ|²)/2(t-s)) p_s((ξ,0),y) dξ`.
//!
//! With `u = x_2²/(2(t-s))` the time integral becomes
//! `(1/(π x_2)) ∫_{u0}^∞ e^{-u} ∫_D exp(-u|x_1-ξ|²/x_2²) p_{s(u)}(ξ,y) dξ du`,
//! which has no endpoint singularity.

use super::{KernelInit, KernelRun, PdeError};
use crate::geometry::Point;
use crate::kernels::halfspace_kernel_raw;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuhamelOptions {
    /// Trapezoid step in `u`.
    pub du: f64,
    /// Upper cutoff in `u`; the neglected tail is below `e^{-u_max}`.
    pub u_max: f64,
}

impl Default for DuhamelOptions {
    fn default() -> Self {
        Self {
            du: 0.01,
            u_max: 40.0,
        }
    }
}

/// Evaluates the right-hand side at `(x, t)` using the line history of a
/// kernel run started at `y` (which must have `record_line` set and reach `t`).
/// For `x_2 < 0` the mirrored formula is used; grid domains are symmetric.
pub fn duhamel_rhs(run: &KernelRun, x: &Point, t: f64, opts: &DuhamelOptions) -> Result<f64, PdeError> {
    let line = run
        .solution
        .line
        .as_ref()
        .ok_or_else(|| PdeError::InvalidInput("kernel run has no line history".into()))?;
    let last = *line.times.last().unwrap_or(&0.0);
    if !(t > 0.0) || t > last + 1e-12 {
        return Err(PdeError::InvalidInput(format!(
            "t = {t} is outside the recorded history (up to {last})"
        )));
    }
    let (x1, x2) = (x.coords()[0], x.coords()[1]);
    if x2 == 0.0 {
        return Err(PdeError::InvalidInput("x must be off the line".into()));
    }
    let y = run.x.coords();
    let grid = run.solution.snapshots[0].grid();
    let xd = x2.abs();
    let dx = grid.dx();
    let jl = grid.line_row();
    let open: Vec<usize> = (1..grid.n() - 1).filter(|&i| !grid.is_masked(i, jl)).collect();

    let head = if x2 * y[1] > 0.0 {
        halfspace_kernel_raw(t, x.coords(), y)
    } else {
        0.0
    };
    if open.is_empty() {
        return Ok(head);
    }

    let t0 = line.start().unwrap_or(run.t0);
    let early = |s: f64, xi: f64| -> f64 {
        match run.init {
            KernelInit::HalfSpace => 0.0,
            KernelInit::Free => {
                if s <= 0.0 {
                    return 0.0;
                }
                let r2 = (xi - y[0]).powi(2) + y[1] * y[1];
                (-r2 / (2.0 * s)).exp() / (2.0 * PI * s)
            }
        }
    };
    let inner = |u: f64| -> f64 {
        let s = t - xd * xd / (2.0 * u);
        let scale = u / (xd * xd);
        let mut acc = 0.0;
        for &i in &open {
            let xi = grid.coord(i);
            let w = (-scale * (x1 - xi).powi(2)).exp();
            if w < 1e-300 {
                continue;
            }
            let p = if s < t0 {
                early(s, xi)
            } else {
                line.value(s, i).unwrap_or(0.0)
            };
            acc += w * p;
        }
        acc * dx * (-u).exp()
    };

    let u0 = xd * xd / (2.0 * t);
    if u0 >= opts.u_max {
        return Ok(head);
    }
    let steps = ((opts.u_max - u0) / opts.du).ceil() as usize;
    let h = (opts.u_max - u0) / steps as f64;
    let mut sum = 0.5 * (inner(u0) + inner(opts.u_max));
    for k in 1..steps {
        sum += inner(u0 + k as f64 * h);
    }
    Ok(head + sum * h / (PI * xd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BenedicksDomain;
    use crate::pde::{kernel_field, Grid, HeatOptions};
    use std::sync::Arc;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(vec![x, y]).unwrap()
    }

    fn opts() -> HeatOptions {
        HeatOptions {
            record_line: true,
            ..HeatOptions::default()
        }
    }

    #[test]
    fn empty_window_set_gives_halfspace_kernel() {
        let g = Arc::new(Grid::build(&BenedicksDomain::two_halfspace(2), 4.0, 0.1).unwrap());
        let y = pt(0.5, 1.5);
        let run = kernel_field(&g, &y, &[1.0], &opts(), None).unwrap();
        let x = pt(0.0, 1.0);
        let v = duhamel_rhs(&run, &x, 1.0, &DuhamelOptions::default()).unwrap();
        assert_eq!(v, halfspace_kernel_raw(1.0, x.coords(), y.coords()));
    }

    #[test]
    fn window_gap_matches_solver() {
        let g = Arc::new(Grid::build(&BenedicksDomain::window_gap(1.0), 8.0, 0.05).unwrap());
        let y = pt(0.0, 1.5);
        let run = kernel_field(&g, &y, &[1.0], &opts(), None).unwrap();
        for x in [pt(0.5, 1.0), pt(0.0, -1.0)] {
            let rhs = duhamel_rhs(&run, &x, 1.0, &DuhamelOptions::default()).unwrap();
            let direct = run.value(1.0, &x).unwrap();
            assert!(((rhs - direct) / direct).abs() < 0.05, "{x}: {rhs} vs {direct}");
        }
    }

    #[test]
    fn requires_history() {
        let g = Arc::new(Grid::build(&BenedicksDomain::slit_plane(), 4.0, 0.05).unwrap());
        let run = kernel_field(&g, &pt(0.0, 1.0), &[1.0], &HeatOptions::default(), None).unwrap();
        assert!(duhamel_rhs(&run, &pt(0.0, 1.0), 1.0, &DuhamelOptions::default()).is_err());
    }
}
