//! Kernel and survival fields on a grid.

use super::{heat_solve, Field, Grid, HeatOptions, HeatSolution, PdeError};
use crate::geometry::Point;
use crate::kernels::halfspace_kernel_raw;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Closed form used as data at the start time `t0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelInit {
    HalfSpace,
    Free,
}

#[derive(Clone, Debug)]
pub struct KernelRun {
    pub x: Point,
    pub t0: f64,
    pub init: KernelInit,
    pub solution: HeatSolution,
}

impl KernelRun {
    pub fn at(&self, t: f64) -> Option<&Field> {
        self.solution
            .snapshots
            .iter()
            .find(|f| (f.t - t).abs() <= 1e-12 * t.max(1.0))
    }

    /// `p_t(x, y)` by bilinear interpolation of the snapshot at `t`.
    pub fn value(&self, t: f64, y: &Point) -> Result<f64, PdeError> {
        let f = self
            .at(t)
            .ok_or_else(|| PdeError::InvalidInput(format!("no snapshot at t = {t}")))?;
        f.value_at(y.coords()[0], y.coords()[1])
    }
}

/// Admissible start-time window for an initial kernel of either type.
fn start_window(grid: &Grid, x: f64, y: f64, init: KernelInit) -> f64 {
    let wrong = match init {
        KernelInit::HalfSpace if y != 0.0 => grid.line_distance(x, y, false),
        KernelInit::HalfSpace => 0.0,
        KernelInit::Free => grid.line_distance(x, y, true),
    };
    let dist = wrong.min(grid.box_distance(x, y));
    (dist / 4.0).powi(2)
}

/// Evolves the kernel `p_t(x, ·)` from closed-form data at a small `t0`.
///
/// `t0` must satisfy `√t0 ≥ 4·dx` and `t0 ≤ (dist/4)²`, where `dist` is the
/// distance from `x` to the part of the line or box that the initial closed
/// form ignores. The half-space form is preferred when both qualify.
pub fn kernel_field(
    grid: &Arc<Grid>,
    x: &Point,
    t_grid: &[f64],
    opts: &HeatOptions,
    t0: Option<f64>,
) -> Result<KernelRun, PdeError> {
    if x.dim() != 2 {
        return Err(PdeError::InvalidInput("kernel fields are planar".into()));
    }
    let (x1, x2) = (x.coords()[0], x.coords()[1]);
    if grid.locate(x1, x2).is_none() {
        return Err(PdeError::OutsideBox(x1, x2));
    }
    if x2 == 0.0 && grid.line_distance(x1, 0.0, true) < 0.5 * grid.dx() {
        return Err(PdeError::InvalidInput(format!("{x} lies on a hole node")));
    }
    let t_min = 16.0 * grid.dx() * grid.dx();
    let half = start_window(grid, x1, x2, KernelInit::HalfSpace);
    let free = start_window(grid, x1, x2, KernelInit::Free);
    let (init, t_max) = if half >= free {
        (KernelInit::HalfSpace, half)
    } else {
        (KernelInit::Free, free)
    };
    let t0 = t0.unwrap_or(t_min);
    if t0 < t_min * (1.0 - 1e-12) || t0 > t_max {
        return Err(PdeError::NoStartTime(format!(
            "need (4·dx)² = {t_min} ≤ t0 ≤ (dist/4)² = {t_max} for x = {x}, got t0 = {t0}"
        )));
    }
    let field = match init {
        KernelInit::HalfSpace => {
            Field::from_fn(Arc::clone(grid), t0, |a, b| halfspace_kernel_raw(t0, &[x1, x2], &[a, b]))
        }
        KernelInit::Free => Field::from_fn(Arc::clone(grid), t0, |a, b| {
            let r2 = (a - x1).powi(2) + (b - x2).powi(2);
            (-r2 / (2.0 * t0)).exp() / (2.0 * PI * t0)
        }),
    };
    let solution = heat_solve(&field, t_grid, opts)?;
    Ok(KernelRun {
        x: x.clone(),
        t0,
        init,
        solution,
    })
}

/// `P_x(T > t)` for every node, from initial data 1.
pub fn survival_field(
    grid: &Arc<Grid>,
    t_grid: &[f64],
    opts: &HeatOptions,
) -> Result<HeatSolution, PdeError> {
    let init = Field::from_fn(Arc::clone(grid), 0.0, |_, _| 1.0);
    heat_solve(&init, t_grid, opts)
}
