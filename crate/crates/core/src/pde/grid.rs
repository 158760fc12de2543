use super::PdeError;
use crate::geometry::{BenedicksDomain, HoleSpec};
use serde::{Deserialize, Serialize};

/// Where each hole interval landed after snapping its ends to nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapEntry {
    pub hole: (f64, f64),
    pub snapped: (f64, f64),
    pub snap_distance: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SnapReport {
    pub entries: Vec<SnapEntry>,
    pub max_snap: f64,
    /// Windows left without any open node (narrower than the spacing).
    pub closed_windows: Vec<(f64, f64)>,
}

/// Uniform grid on `[-L, L]²` with `x_2 = 0` as a grid line. Dirichlet nodes are
/// the outer boundary and the hole nodes on the line.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    l: f64,
    dx: f64,
    n: usize,
    mask: Vec<bool>,
    snap: SnapReport,
    label: String,
}

/// Hole intervals of a planar domain, clipped to `[-l, l]`, closed.
fn hole_intervals(domain: &BenedicksDomain, l: f64) -> Vec<(f64, f64)> {
    let clip = |a: f64, b: f64| (a.max(-l), b.min(l));
    match domain.holes() {
        HoleSpec::FiniteHoles(b) => b
            .iter()
            .map(|bx| clip(bx.lo[0], bx.hi[0]))
            .filter(|(a, b)| a <= b)
            .collect(),
        HoleSpec::FiniteWindows(w) => {
            let mut out = Vec::new();
            let mut start = -l;
            for bx in w {
                let (a, b) = (bx.lo[0], bx.hi[0]);
                if b <= -l || a >= l {
                    continue;
                }
                if a > start {
                    out.push((start, a));
                }
                start = start.max(b);
            }
            if start < l {
                out.push((start, l));
            }
            out
        }
    }
}

impl Grid {
    pub fn build(domain: &BenedicksDomain, l: f64, dx: f64) -> Result<Grid, PdeError> {
        if domain.d() != 2 {
            return Err(PdeError::InvalidGrid(format!(
                "the grid solver is planar, got d = {}",
                domain.d()
            )));
        }
        if !(l > 0.0 && dx > 0.0 && l.is_finite() && dx.is_finite()) {
            return Err(PdeError::InvalidGrid("L and dx must be positive".into()));
        }
        let cells = l / dx;
        if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) || cells.round() < 2.0 {
            return Err(PdeError::InvalidGrid(format!(
                "L/dx must be an integer ≥ 2, got {cells}"
            )));
        }
        let half = cells.round() as usize;
        let n = 2 * half + 1;
        let mut mask = vec![false; n * n];
        for k in 0..n {
            mask[k] = true;
            mask[(n - 1) * n + k] = true;
            mask[k * n] = true;
            mask[k * n + n - 1] = true;
        }
        let mut snap = SnapReport::default();
        let x_of = |i: usize| -l + i as f64 * dx;
        for (a, b) in hole_intervals(domain, l) {
            let finite_in_box = a > -l && b < l;
            if finite_in_box && b - a < dx {
                return Err(PdeError::InvalidGrid(format!(
                    "hole [{a}, {b}] is narrower than dx = {dx}; refine the grid"
                )));
            }
            let ia = ((a + l) / dx).round() as usize;
            let ib = (((b + l) / dx).round() as usize).min(n - 1);
            for i in ia..=ib {
                mask[half * n + i] = true;
            }
            let (sa, sb) = (x_of(ia), x_of(ib));
            let dist = (sa - a).abs().max((sb - b).abs());
            snap.max_snap = snap.max_snap.max(dist);
            snap.entries.push(SnapEntry {
                hole: (a, b),
                snapped: (sa, sb),
                snap_distance: dist,
            });
        }
        if let HoleSpec::FiniteWindows(w) = domain.holes() {
            for bx in w {
                let (a, b) = (bx.lo[0].max(-l), bx.hi[0].min(l));
                if a >= b {
                    continue;
                }
                let open = (1..n - 1).any(|i| {
                    let x = x_of(i);
                    x > a && x < b && !mask[half * n + i]
                });
                if !open {
                    snap.closed_windows.push((bx.lo[0], bx.hi[0]));
                }
            }
        }
        Ok(Grid {
            l,
            dx,
            n,
            mask,
            snap,
            label: domain.label().to_string(),
        })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Nodes per side.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Row index of the line `x_2 = 0`.
    pub fn line_row(&self) -> usize {
        self.n / 2
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn snap_report(&self) -> &SnapReport {
        &self.snap
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn coord(&self, k: usize) -> f64 {
        -self.l + k as f64 * self.dx
    }

    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        self.mask[self.index(i, j)]
    }

    /// Masked nodes on the line, outer boundary excluded.
    pub fn masked_line_nodes(&self) -> usize {
        let j = self.line_row();
        (1..self.n - 1).filter(|&i| self.is_masked(i, j)).count()
    }

    /// Distance from `(x, y)` to the nearest line node satisfying `pick(masked)`.
    pub(crate) fn line_distance(&self, x: f64, y: f64, masked: bool) -> f64 {
        let j = self.line_row();
        (1..self.n - 1)
            .filter(|&i| self.is_masked(i, j) == masked)
            .map(|i| (self.coord(i) - x).hypot(y))
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn box_distance(&self, x: f64, y: f64) -> f64 {
        (self.l - x.abs()).min(self.l - y.abs())
    }

    /// Cell containing `(x, y)` and the fractional offsets inside it.
    pub(crate) fn locate(&self, x: f64, y: f64) -> Option<(usize, usize, f64, f64)> {
        if !(x.abs() <= self.l && y.abs() <= self.l) {
            return None;
        }
        let fx = (x + self.l) / self.dx;
        let fy = (y + self.l) / self.dx;
        let i = (fx.floor() as usize).min(self.n - 2);
        let j = (fy.floor() as usize).min(self.n - 2);
        Some((i, j, fx - i as f64, fy - j as f64))
    }

    /// Position of each open node within its run of open nodes along rows
    /// (`by_rows`) or columns; `u32::MAX` on masked nodes.
    pub(crate) fn segment_positions(&self, by_rows: bool) -> Vec<u32> {
        let n = self.n;
        let mut pos = vec![u32::MAX; n * n];
        for a in 0..n {
            let mut k = 0u32;
            for b in 0..n {
                let idx = if by_rows { a * n + b } else { b * n + a };
                if self.mask[idx] {
                    k = 0;
                } else {
                    pos[idx] = k;
                    k += 1;
                }
            }
        }
        pos
    }
}
