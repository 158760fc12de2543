//! Harmonic profiles by red-black SOR on the 5-point stencil.
//!
//! Hole nodes are pinned to 0 and the outer box carries the far-field data,
//! so fields returned here are nonzero on the outer boundary.

use super::{Field, Grid, PdeError};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Boundary data on the outer box.
#[derive(Clone)]
pub enum FarData {
    /// `|x_2|`, for the symmetric profile.
    AbsXd,
    /// `max(x_2, 0)`.
    XdPlus,
    /// `max(-x_2, 0)`.
    XdMinus,
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for FarData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FarData::AbsXd => f.write_str("AbsXd"),
            FarData::XdPlus => f.write_str("XdPlus"),
            FarData::XdMinus => f.write_str("XdMinus"),
            FarData::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl FarData {
    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            FarData::AbsXd => y.abs(),
            FarData::XdPlus => y.max(0.0),
            FarData::XdMinus => (-y).max(0.0),
            FarData::Custom(f) => f(x, y),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceOptions {
    /// Stop when `max |avg(neighbours) - u| < tol · max|u|`.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Relaxation factor; the square-box optimum when absent.
    pub omega: Option<f64>,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 200_000,
            omega: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceReport {
    pub sweeps: usize,
    pub residual: f64,
    pub omega: f64,
    /// Relative residual every 100 sweeps.
    pub history: Vec<f64>,
}

const CHECK_EVERY: usize = 25;

fn residual(u: &[f64], mask: &[bool], n: usize) -> f64 {
    let mut r = 0.0f64;
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let k = j * n + i;
            if !mask[k] {
                let avg = 0.25 * (u[k - 1] + u[k + 1] + u[k - n] + u[k + n]);
                r = r.max((avg - u[k]).abs());
            }
        }
    }
    r
}

/// Solves `Δu = 0` with `u = 0` on hole nodes and `u = far` on the box.
pub fn laplace_harmonic(
    grid: &Arc<Grid>,
    far: &FarData,
    opts: &LaplaceOptions,
) -> Result<(Field, LaplaceReport), PdeError> {
    let n = grid.n();
    let mask = grid.mask();
    let jl = grid.line_row();
    // Start from the far data continued inward, zero on the holes.
    let mut u = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let k = grid.index(i, j);
            let on_box = i == 0 || j == 0 || i == n - 1 || j == n - 1;
            if on_box || !(mask[k] && j == jl) {
                u[k] = far.eval(grid.coord(i), grid.coord(j));
            }
        }
    }
    let omega = opts
        .omega
        .unwrap_or_else(|| 2.0 / (1.0 + (std::f64::consts::PI / (n - 1) as f64).sin()));
    let mut history = Vec::new();
    let mut sweeps = 0;
    loop {
        if sweeps % CHECK_EVERY == 0 {
            let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            let r = residual(&u, mask, n) / scale;
            if sweeps % 100 == 0 {
                history.push(r);
            }
            if r < opts.tol {
                let field = Field {
                    grid: Arc::clone(grid),
                    values: u,
                    t: f64::INFINITY,
                };
                return Ok((
                    field,
                    LaplaceReport {
                        sweeps,
                        residual: r,
                        omega,
                        history,
                    },
                ));
            }
            if sweeps >= opts.max_sweeps {
                return Err(PdeError::NoConvergence {
                    iterations: sweeps,
                    history,
                });
            }
        }
        for color in 0..2 {
            for j in 1..n - 1 {
                let start = 1 + (j + 1 + color) % 2;
                let row = j * n;
                for i in (start..n - 1).step_by(2) {
                    let k = row + i;
                    if mask[k] {
                        continue;
                    }
                    let avg = 0.25 * (u[k - 1] + u[k + 1] + u[k - n] + u[k + n]);
                    u[k] += omega * (avg - u[k]);
                }
            }
        }
        sweeps += 1;
    }
}

/// Invariant residuals of a computed profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileChecks {
    /// `min (v_s - |x_2|)`; should be ≥ -tolerance.
    pub min_vs_minus_abs: f64,
    /// `max |v_s - u1 - u2|`.
    pub max_sum_residual: f64,
    /// `max |u2(x, y) - u1(x, -y)|`.
    pub max_mirror_residual: f64,
    /// `max |u1 - u2 - x_2|` over the inner half box.
    pub max_antisym_residual: f64,
}

#[derive(Clone, Debug)]
pub struct HarmonicProfile {
    pub vs: Field,
    pub u1: Field,
    pub u2: Field,
    pub reports: [LaplaceReport; 3],
    pub checks: ProfileChecks,
}

impl HarmonicProfile {
    pub fn vs_at(&self, x: f64, y: f64) -> Result<f64, PdeError> {
        self.vs.value_at(x, y)
    }

    pub fn u1_at(&self, x: f64, y: f64) -> Result<f64, PdeError> {
        self.u1.value_at(x, y)
    }

    pub fn u2_at(&self, x: f64, y: f64) -> Result<f64, PdeError> {
        self.u2.value_at(x, y)
    }
}

/// Solves for `v_s`, `u1` and `u2` on one grid and evaluates their invariants.
pub fn harmonic_profile(grid: &Arc<Grid>, opts: &LaplaceOptions) -> Result<HarmonicProfile, PdeError> {
    let (vs, rv) = laplace_harmonic(grid, &FarData::AbsXd, opts)?;
    let (u1, r1) = laplace_harmonic(grid, &FarData::XdPlus, opts)?;
    let (u2, r2) = laplace_harmonic(grid, &FarData::XdMinus, opts)?;
    let n = grid.n();
    let mut checks = ProfileChecks {
        min_vs_minus_abs: f64::INFINITY,
        max_sum_residual: 0.0,
        max_mirror_residual: 0.0,
        max_antisym_residual: 0.0,
    };
    let quarter = n / 4;
    for j in 0..n {
        let y = grid.coord(j);
        for i in 0..n {
            let k = grid.index(i, j);
            let m = grid.index(i, n - 1 - j);
            checks.min_vs_minus_abs = checks.min_vs_minus_abs.min(vs.values[k] - y.abs());
            checks.max_sum_residual = checks
                .max_sum_residual
                .max((vs.values[k] - u1.values[k] - u2.values[k]).abs());
            checks.max_mirror_residual = checks
                .max_mirror_residual
                .max((u2.values[k] - u1.values[m]).abs());
            if i >= quarter && i <= n - 1 - quarter && j >= quarter && j <= n - 1 - quarter {
                checks.max_antisym_residual = checks
                    .max_antisym_residual
                    .max((u1.values[k] - u2.values[k] - y).abs());
            }
        }
    }
    Ok(HarmonicProfile {
        vs,
        u1,
        u2,
        reports: [rv, r1, r2],
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BenedicksDomain;

    #[test]
    fn two_halfspace_is_exact() {
        let g = Arc::new(Grid::build(&BenedicksDomain::two_halfspace(2), 4.0, 0.1).unwrap());
        let (f, rep) = laplace_harmonic(&g, &FarData::AbsXd, &LaplaceOptions::default()).unwrap();
        assert_eq!(rep.sweeps, 0);
        for j in 0..g.n() {
            assert!((f.node(7, j) - g.coord(j).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn slit_plane_matches_conformal_map() {
        // Im √z with the branch cut on the slit: r^{1/2} sin(θ/2), θ ∈ (0, 2π).
        let u = |x: f64, y: f64| {
            let r = x.hypot(y);
            let mut th = y.atan2(x);
            if th < 0.0 {
                th += 2.0 * std::f64::consts::PI;
            }
            r.sqrt() * (0.5 * th).sin()
        };
        // The tip singularity makes the error first order in dx.
        let g = Arc::new(Grid::build(&BenedicksDomain::slit_plane(), 5.0, 0.025).unwrap());
        let (f, rep) =
            laplace_harmonic(&g, &FarData::Custom(Arc::new(u)), &LaplaceOptions::default()).unwrap();
        assert!(rep.residual < 1e-10);
        for (x, y) in [(0.0, 1.0), (0.0, 2.0), (0.5, 0.5), (-2.0, 0.0), (3.0, -1.0), (1.0, 0.1)] {
            let got = f.value_at(x, y).unwrap();
            let exact = u(x, y);
            assert!(((got - exact) / exact).abs() < 0.01, "({x},{y}) {got} vs {exact}");
        }
    }

    #[test]
    fn profile_invariants_on_window_gap() {
        let g = Arc::new(Grid::build(&BenedicksDomain::window_gap(1.0), 6.0, 0.1).unwrap());
        let p = harmonic_profile(&g, &LaplaceOptions::default()).unwrap();
        let c = &p.checks;
        assert!(c.min_vs_minus_abs > -1e-8, "{c:?}");
        assert!(c.max_sum_residual < 1e-6, "{c:?}");
        assert!(c.max_mirror_residual < 1e-6, "{c:?}");
        // The window lifts v_s above |x_2| near it.
        assert!(p.vs_at(0.0, 0.0).unwrap() > 0.1);
    }

    #[test]
    fn cap_reports_history() {
        let g = Arc::new(Grid::build(&BenedicksDomain::slit_plane(), 4.0, 0.1).unwrap());
        let opts = LaplaceOptions {
            max_sweeps: 50,
            ..LaplaceOptions::default()
        };
        match laplace_harmonic(&g, &FarData::AbsXd, &opts) {
            Err(PdeError::NoConvergence { iterations, history }) => {
                assert_eq!(iterations, 50);
                assert!(!history.is_empty());
            }
            other => panic!("{other:?}"),
        }
    }
}
