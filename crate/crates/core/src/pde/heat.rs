//! `∂_t u = ½Δu` with `u = 0` on the mask.
//!
//! Compact ADI in D'Yakonov form: with `B = I + δ²/12` and `a = dt/(4dx²)`,
//! `(B_x - aδ_x²)(B_y - aδ_y²) u' = (B_x + aδ_x²)(B_y + aδ_y²) u`.
//! Second order in time, fourth order in space away from the slits, and
//! unconditionally stable. Every solve is a constant-coefficient tridiagonal
//! system on a run of open nodes. The first few steps are replaced by pairs
//! of implicit-Euler half steps to damp rough initial data.

use super::{Field, Grid, PdeError};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatOptions {
    pub dt: f64,
    /// When positive, the step is `max(dt, dt_growth · t)`.
    #[serde(default)]
    pub dt_growth: f64,
    /// Number of implicit-Euler startup steps.
    #[serde(default = "default_startup")]
    pub startup_steps: usize,
    /// Keep the line `x_2 = 0` after every step.
    #[serde(default)]
    pub record_line: bool,
}

fn default_startup() -> usize {
    2
}

impl Default for HeatOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            dt_growth: 0.0,
            startup_steps: 2,
            record_line: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HeatReport {
    pub steps: usize,
    /// `(t, Σu·dx²)` at every snapshot.
    pub mass: Vec<(f64, f64)>,
    pub mass_monotone: bool,
    pub max_mass_increase: f64,
    /// Largest negative value seen (as a positive number); never clipped.
    pub max_undershoot: f64,
    /// Largest step-to-step ratio of the max norm.
    pub max_norm_ratio: f64,
}

/// Values on the line `x_2 = 0` after each step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LineHistory {
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl LineHistory {
    /// Linear interpolation in time at node `i`; `None` outside the record.
    pub fn value(&self, s: f64, i: usize) -> Option<f64> {
        let (first, last) = (*self.times.first()?, *self.times.last()?);
        if s < first || s > last {
            return None;
        }
        let k = self.times.partition_point(|&t| t < s);
        if k == 0 || self.times[k] == s {
            return Some(self.rows[k][i]);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (s - t0) / (t1 - t0);
        Some((1.0 - w) * self.rows[k - 1][i] + w * self.rows[k][i])
    }

    pub fn start(&self) -> Option<f64> {
        self.times.first().copied()
    }
}

#[derive(Clone, Debug)]
pub struct HeatSolution {
    pub snapshots: Vec<Field>,
    pub report: HeatReport,
    pub line: Option<LineHistory>,
}

/// Constant-coefficient tridiagonal `(c, b, c)` factors by offset from the
/// start of a run of open nodes (Dirichlet zero on both sides of the run).
struct Factors {
    c: f64,
    inv: Vec<f64>,
    up: Vec<f64>,
}

impl Factors {
    fn new(b: f64, c: f64, n: usize) -> Self {
        let mut inv = vec![0.0; n];
        let mut up = vec![0.0; n];
        inv[0] = 1.0 / b;
        up[0] = c * inv[0];
        for k in 1..n {
            inv[k] = 1.0 / (b - c * up[k - 1]);
            up[k] = c * inv[k];
        }
        Self { c, inv, up }
    }

    /// `B - a δ²` with `B = I + δ²/12`.
    fn implicit(a: f64, n: usize) -> Self {
        let off = 1.0 / 12.0 - a;
        Self::new(1.0 - 2.0 * off, off, n)
    }
}

const OFF: u32 = u32::MAX;

struct Adi<'g> {
    grid: &'g Grid,
    rows: Vec<u32>,
    cols: Vec<u32>,
    f: Factors,
    a: f64,
}

impl<'g> Adi<'g> {
    fn solve_rows(&self, rhs: &[f64], out: &mut [f64]) {
        let n = self.grid.n();
        let (c, inv, up) = (self.f.c, &self.f.inv, &self.f.up);
        for j in 0..n {
            let base = j * n;
            for i in 0..n {
                let idx = base + i;
                let k = self.rows[idx];
                out[idx] = if k == OFF {
                    0.0
                } else {
                    let prev = if k == 0 { 0.0 } else { out[idx - 1] };
                    (rhs[idx] - c * prev) * inv[k as usize]
                };
            }
            for i in (0..n - 1).rev() {
                let idx = base + i;
                let k = self.rows[idx];
                if k != OFF && self.rows[idx + 1] != OFF {
                    out[idx] -= up[k as usize] * out[idx + 1];
                }
            }
        }
    }

    fn solve_cols(&self, rhs: &[f64], out: &mut [f64]) {
        let n = self.grid.n();
        let (c, inv, up) = (self.f.c, &self.f.inv, &self.f.up);
        for j in 0..n {
            for i in 0..n {
                let idx = j * n + i;
                let k = self.cols[idx];
                out[idx] = if k == OFF {
                    0.0
                } else {
                    let prev = if k == 0 { 0.0 } else { out[idx - n] };
                    (rhs[idx] - c * prev) * inv[k as usize]
                };
            }
        }
        for j in (0..n - 1).rev() {
            for i in 0..n {
                let idx = j * n + i;
                let k = self.cols[idx];
                if k != OFF && self.cols[idx + n] != OFF {
                    out[idx] -= up[k as usize] * out[idx + n];
                }
            }
        }
    }

    /// `(I + coef·δ²)` along x (`stride` 1) or y (`stride` n).
    fn explicit(&self, u: &[f64], out: &mut [f64], stride: usize, coef: f64) {
        let mask = self.grid.mask();
        for idx in 0..u.len() {
            out[idx] = if mask[idx] {
                0.0
            } else {
                let v = u[idx];
                v + coef * (u[idx + stride] + u[idx - stride] - 2.0 * v)
            };
        }
    }
}

/// Evolves `init` (time stamp `init.t`) to each time in `t_grid`.
pub fn heat_solve(init: &Field, t_grid: &[f64], opts: &HeatOptions) -> Result<HeatSolution, PdeError> {
    if !(opts.dt > 0.0) || !(opts.dt_growth >= 0.0) {
        return Err(PdeError::InvalidInput("dt must be positive".into()));
    }
    if !init.respects_mask() {
        return Err(PdeError::InvalidInput(
            "initial data must be finite and vanish on the mask".into(),
        ));
    }
    let mut prev_t = init.t;
    for &t in t_grid {
        if !(t > prev_t) {
            return Err(PdeError::InvalidInput(
                "snapshot times must increase past the initial time".into(),
            ));
        }
        prev_t = t;
    }
    let grid: &Arc<Grid> = init.grid_arc();
    let n = grid.n();
    let dx = grid.dx();
    let mut adi = Adi {
        grid,
        rows: grid.segment_positions(true),
        cols: grid.segment_positions(false),
        f: Factors::implicit(0.0, n),
        a: 0.0,
    };
    let mut h_current = f64::NAN;
    let mut u = init.values.clone();
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n * n];
    let nonneg = u.iter().all(|&v| v >= 0.0);
    let mut t = init.t;
    let mut report = HeatReport {
        mass_monotone: true,
        ..HeatReport::default()
    };
    let mut line = opts.record_line.then(|| {
        let j = grid.line_row();
        LineHistory {
            times: vec![t],
            rows: vec![u[j * n..(j + 1) * n].to_vec()],
        }
    });
    let mut last_mass = init.mass();
    let mut last_max = init.max_abs();
    let mut snapshots = Vec::with_capacity(t_grid.len());

    for &target in t_grid {
        while target - t > 1e-12 * target.abs().max(1.0) {
            let base = opts.dt.max(opts.dt_growth * t);
            let rem = target - t;
            let h = if rem <= base * (1.0 + 1e-9) {
                rem
            } else if rem < 2.0 * base {
                0.5 * rem
            } else {
                base
            };
            if h != h_current {
                adi.a = h / (4.0 * dx * dx);
                adi.f = Factors::implicit(adi.a, n);
                h_current = h;
            }
            if report.steps < opts.startup_steps {
                for _ in 0..2 {
                    adi.explicit(&u, &mut a, 1, 1.0 / 12.0);
                    adi.solve_rows(&a, &mut b);
                    adi.explicit(&b, &mut a, n, 1.0 / 12.0);
                    adi.solve_cols(&a, &mut u);
                }
            } else {
                let coef = 1.0 / 12.0 + adi.a;
                adi.explicit(&u, &mut a, n, coef);
                adi.explicit(&a, &mut b, 1, coef);
                adi.solve_rows(&b, &mut a);
                adi.solve_cols(&a, &mut u);
            }
            t = if h == rem { target } else { t + h };
            report.steps += 1;

            let mut max = 0.0f64;
            let mut min = 0.0f64;
            let mut sum = 0.0;
            for &v in &u {
                max = max.max(v.abs());
                min = min.min(v);
                sum += v;
            }
            if !sum.is_finite() {
                return Err(PdeError::Unstable { t, growth: f64::INFINITY });
            }
            let ratio = if last_max > 0.0 { max / last_max } else { 1.0 };
            report.max_norm_ratio = report.max_norm_ratio.max(ratio);
            if nonneg && ratio > 1.0 + 1e-3 {
                return Err(PdeError::Unstable { t, growth: ratio });
            }
            last_max = max;
            report.max_undershoot = report.max_undershoot.max(-min);
            let mass = sum * dx * dx;
            if nonneg && mass > last_mass {
                let inc = (mass - last_mass) / last_mass.abs().max(f64::MIN_POSITIVE);
                report.max_mass_increase = report.max_mass_increase.max(inc);
                if inc > 1e-12 {
                    report.mass_monotone = false;
                }
            }
            last_mass = mass;
            if let Some(l) = line.as_mut() {
                let j = grid.line_row();
                l.times.push(t);
                l.rows.push(u[j * n..(j + 1) * n].to_vec());
            }
        }
        report.mass.push((target, last_mass));
        snapshots.push(Field {
            grid: Arc::clone(grid),
            values: u.clone(),
            t: target,
        });
    }
    Ok(HeatSolution {
        snapshots,
        report,
        line,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BenedicksDomain, Point};
    use crate::kernels::{free_kernel, halfspace_kernel};

    fn pt(x: f64, y: f64) -> Point {
        Point::new(vec![x, y]).unwrap()
    }

    #[test]
    fn tridiagonal_factors_solve_constant_system() {
        // Forward and back substitution, then the residual in the original system.
        let a = 0.7;
        let f = Factors::implicit(a, 5);
        let rhs = [1.0, -2.0, 0.5, 3.0, 0.25];
        let mut d = [0.0; 5];
        for k in 0..5 {
            let prev = if k == 0 { 0.0 } else { d[k - 1] };
            d[k] = (rhs[k] - f.c * prev) * f.inv[k];
        }
        for k in (0..4).rev() {
            d[k] -= f.up[k] * d[k + 1];
        }
        let off = 1.0 / 12.0 - a;
        for k in 0..5 {
            let l = if k > 0 { d[k - 1] } else { 0.0 };
            let r = if k < 4 { d[k + 1] } else { 0.0 };
            let lhs = (1.0 - 2.0 * off) * d[k] + off * (l + r);
            assert!((lhs - rhs[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_stays_zero() {
        let g = Arc::new(Grid::build(&BenedicksDomain::slit_plane(), 2.0, 0.1).unwrap());
        let sol = heat_solve(&Field::zeros(g, 0.0), &[0.5, 1.0], &HeatOptions::default()).unwrap();
        assert!(sol.snapshots.iter().all(|f| f.max_abs() == 0.0));
    }

    #[test]
    fn free_gaussian_oracle() {
        // The free case is approximated by a domain whose only hole is a
        // short slit far from the data.
        let dom = BenedicksDomain::new(
            2,
            crate::geometry::HoleSpec::FiniteHoles(vec![crate::geometry::HyperBox::interval(7.0, 7.5)]),
            "",
        )
        .unwrap();
        let g = Arc::new(Grid::build(&dom, 8.0, 0.05).unwrap());
        let x0 = pt(-2.0, 1.0);
        let t0 = 0.05;
        let init = Field::from_fn(g, t0, |x, y| free_kernel(t0, &x0, &pt(x, y)).unwrap());
        let sol = heat_solve(&init, &[1.0 + t0], &HeatOptions { dt: 0.005, ..HeatOptions::default() }).unwrap();
        let f = &sol.snapshots[0];
        for (x, y) in [(-2.0, 1.0), (-1.0, 0.5), (-3.0, 2.0), (-2.5, 0.0)] {
            let exact = free_kernel(1.0 + t0, &x0, &pt(x, y)).unwrap();
            let got = f.value_at(x, y).unwrap();
            assert!(((got - exact) / exact).abs() < 0.01, "({x},{y}) {got} vs {exact}");
        }
        assert!(sol.report.mass_monotone);
    }

    #[test]
    fn halfspace_oracle() {
        let g = Arc::new(Grid::build(&BenedicksDomain::two_halfspace(2), 6.0, 0.05).unwrap());
        let x0 = pt(0.0, 1.0);
        let t0 = 0.05;
        let init = Field::from_fn(g, t0, |x, y| halfspace_kernel(t0, &x0, &pt(x, y)).unwrap());
        let sol = heat_solve(&init, &[1.0 + t0], &HeatOptions { dt: 0.005, ..HeatOptions::default() }).unwrap();
        let f = &sol.snapshots[0];
        for (x, y) in [(0.0, 1.0), (0.5, 2.0), (-1.0, 0.5)] {
            let exact = halfspace_kernel(1.0 + t0, &x0, &pt(x, y)).unwrap();
            let got = f.value_at(x, y).unwrap();
            assert!(((got - exact) / exact).abs() < 0.01, "({x},{y}) {got} vs {exact}");
        }
        assert_eq!(f.value_at(0.3, -1.0).unwrap(), 0.0);
        assert!(sol.report.mass_monotone);
    }

    #[test]
    fn survival_with_growing_steps_stays_bounded() {
        let g = Arc::new(Grid::build(&BenedicksDomain::slit_plane(), 10.0, 0.1).unwrap());
        let init = Field::from_fn(g, 0.0, |_, _| 1.0);
        let opts = HeatOptions {
            dt: 0.01,
            dt_growth: 0.05,
            ..HeatOptions::default()
        };
        let sol = heat_solve(&init, &[1.0, 5.0, 20.0], &opts).unwrap();
        assert!(sol.report.mass_monotone, "{:?}", sol.report);
        for f in &sol.snapshots {
            assert!(f.max_abs() <= 1.0 + 1e-6);
            assert!(f.respects_mask());
        }
        assert!(sol.report.max_undershoot < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = Arc::new(Grid::build(&BenedicksDomain::slit_plane(), 2.0, 0.1).unwrap());
        let f = Field::zeros(Arc::clone(&g), 1.0);
        assert!(heat_solve(&f, &[0.5], &HeatOptions::default()).is_err());
        let mut bad = Field::zeros(g, 0.0);
        bad.values[0] = 1.0;
        assert!(heat_solve(&bad, &[0.5], &HeatOptions::default()).is_err());
    }

    #[test]
    fn line_history_interpolates() {
        let h = LineHistory {
            times: vec![0.0, 1.0, 3.0],
            rows: vec![vec![0.0], vec![2.0], vec![6.0]],
        };
        assert_eq!(h.value(0.5, 0), Some(1.0));
        assert_eq!(h.value(2.0, 0), Some(4.0));
        assert_eq!(h.value(3.0, 0), Some(6.0));
        assert_eq!(h.value(-0.1, 0), None);
        assert_eq!(h.value(3.5, 0), None);
    }
}
