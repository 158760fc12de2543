//! Planar finite-difference lab: heat flow with Dirichlet slits, harmonic
//! profiles and the boundary-integral representation of the kernel.

mod duhamel;
mod export;
mod fields;
mod grid;
mod heat;
mod laplace;

pub use duhamel::{duhamel_rhs, DuhamelOptions};
pub use export::{read_binary, write_binary, write_csv};
pub use fields::{kernel_field, survival_field, KernelInit, KernelRun};
pub use grid::{Grid, SnapEntry, SnapReport};
pub use heat::{heat_solve, HeatOptions, HeatReport, HeatSolution, LineHistory};
pub use laplace::{
    harmonic_profile, laplace_harmonic, FarData, HarmonicProfile, LaplaceOptions, LaplaceReport,
    ProfileChecks,
};

use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("instability at t = {t}: max norm grew by a factor {growth}")]
    Unstable { t: f64, growth: f64 },
    #[error("no admissible start time t0: {0}")]
    NoStartTime(String),
    #[error("relaxation did not converge in {iterations} sweeps; residual history {history:?}")]
    NoConvergence { iterations: usize, history: Vec<f64> },
    #[error("point ({0}, {1}) lies outside the grid box")]
    OutsideBox(f64, f64),
}

/// Nodal values on a grid at time `t`.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub t: f64,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        *self.grid == *other.grid && self.values == other.values && self.t == other.t
    }
}

impl Field {
    pub fn zeros(grid: Arc<Grid>, t: f64) -> Field {
        let n = grid.n();
        Field {
            grid,
            values: vec![0.0; n * n],
            t,
        }
    }

    /// Samples `f(x, y)` at open nodes; masked nodes get 0.
    pub fn from_fn(grid: Arc<Grid>, t: f64, f: impl Fn(f64, f64) -> f64) -> Field {
        let n = grid.n();
        let mut values = vec![0.0; n * n];
        for j in 0..n {
            let y = grid.coord(j);
            for i in 0..n {
                let k = grid.index(i, j);
                if !grid.mask()[k] {
                    values[k] = f(grid.coord(i), y);
                }
            }
        }
        Field { grid, values, t }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Bilinear interpolation.
    pub fn value_at(&self, x: f64, y: f64) -> Result<f64, PdeError> {
        let (i, j, fx, fy) = self.grid.locate(x, y).ok_or(PdeError::OutsideBox(x, y))?;
        let v00 = self.node(i, j);
        let v10 = self.node(i + 1, j);
        let v01 = self.node(i, j + 1);
        let v11 = self.node(i + 1, j + 1);
        Ok((1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Σ u · dx²`.
    pub fn mass(&self) -> f64 {
        let dx = self.grid.dx();
        self.values.iter().sum::<f64>() * dx * dx
    }

    pub fn respects_mask(&self) -> bool {
        self.values
            .iter()
            .zip(self.grid.mask())
            .all(|(v, &m)| !m || *v == 0.0)
            && self.values.iter().all(|v| v.is_finite())
    }
}
