//! Kernel and survival estimates from Monte Carlo ensembles.
//!
//! The kernel estimate smooths survivors at `t - h_f` with the half-space
//! kernel over the last `h_f`. Because the half-space kernel is dominated by
//! the domain kernel, the estimator is biased low, with bias vanishing as
//! `h_f -> 0` for points off the hyperplane.
//!
//! Sums are accumulated in fixed point so that merging partial estimates is
//! exactly associative and commutative.

use crate::geometry::{BenedicksDomain, Point};
use crate::kernels::halfspace_kernel_raw;
use crate::mc::Ensemble;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("smoothing window h_f = {h_f} must satisfy 0 < h_f < t = {t}")]
    BadWindow { h_f: f64, t: f64 },
    #[error("ensemble has no recorded endpoints at time {0}")]
    MissingCheckpoint(f64),
    #[error("{0}")]
    Mismatch(String),
    #[error("kernel estimate value {0} is outside the fixed-point range")]
    Overflow(f64),
}

const VALUE_SHIFT: i32 = 80;
const SQUARE_SHIFT: i32 = 64;

fn to_fixed(v: f64, shift: i32) -> Result<i128, EstimateError> {
    let s = (v * 2f64.powi(shift)).round();
    if s.abs() >= 2f64.powi(120) || !s.is_finite() {
        return Err(EstimateError::Overflow(v));
    }
    Ok(s as i128)
}

fn from_fixed(s: i128, shift: i32) -> f64 {
    s as f64 * 2f64.powi(-shift)
}

/// Default smoothing window `0.1·min(1, x_d², y_d²)`.
pub fn default_smoothing_window(x: &Point, y: &Point) -> f64 {
    0.1 * 1f64.min(x.xd().powi(2)).min(y.xd().powi(2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimate {
    pub t: f64,
    pub x: Point,
    pub y: Point,
    pub value: f64,
    pub stderr: f64,
    pub smoothing_window: f64,
    pub n: u64,
    pub config_hash: String,
    sum: i128,
    sum_sq: i128,
}

impl KernelEstimate {
    #[allow(clippy::too_many_arguments)]
    fn from_sums(
        t: f64,
        x: Point,
        y: Point,
        h_f: f64,
        n: u64,
        config_hash: String,
        sum: i128,
        sum_sq: i128,
    ) -> Self {
        let (value, stderr) = if n == 0 {
            (0.0, 0.0)
        } else {
            let nf = n as f64;
            let mean = from_fixed(sum, VALUE_SHIFT) / nf;
            let msq = from_fixed(sum_sq, SQUARE_SHIFT) / nf;
            let var = if n > 1 {
                ((msq - mean * mean) * nf / (nf - 1.0)).max(0.0)
            } else {
                0.0
            };
            (mean.max(0.0), (var / nf).sqrt())
        };
        Self {
            t,
            x,
            y,
            value,
            stderr,
            smoothing_window: h_f,
            n,
            config_hash,
            sum,
            sum_sq,
        }
    }

    /// Pools two estimates of the same quantity from disjoint path sets.
    pub fn merge(&self, other: &KernelEstimate) -> Result<KernelEstimate, EstimateError> {
        if self.config_hash != other.config_hash {
            return Err(EstimateError::Mismatch(format!(
                "config hash {} vs {}",
                self.config_hash, other.config_hash
            )));
        }
        if self.t != other.t
            || self.x != other.x
            || self.y != other.y
            || self.smoothing_window != other.smoothing_window
        {
            return Err(EstimateError::Mismatch(
                "estimates differ in (t, x, y, h_f)".into(),
            ));
        }
        Ok(Self::from_sums(
            self.t,
            self.x.clone(),
            self.y.clone(),
            self.smoothing_window,
            self.n + other.n,
            self.config_hash.clone(),
            self.sum + other.sum,
            self.sum_sq + other.sum_sq,
        ))
    }
}

/// `(1/N) Σ 1{T > t-h_f} · p^H_{h_f}(X_{t-h_f}, y)` over an ensemble started at `x`
/// whose checkpoints include `t - h_f`.
pub fn kernel_estimate(
    domain: &BenedicksDomain,
    x: &Point,
    y: &Point,
    t: f64,
    h_f: f64,
    ensemble: &Ensemble,
) -> Result<KernelEstimate, EstimateError> {
    if !(h_f > 0.0 && h_f < t) {
        return Err(EstimateError::BadWindow { h_f, t });
    }
    if y.dim() != domain.d() || ensemble.d != domain.d() {
        return Err(EstimateError::Mismatch("dimension mismatch".into()));
    }
    if &ensemble.x0 != x {
        return Err(EstimateError::Mismatch(format!(
            "ensemble starts at {} but x = {}",
            ensemble.x0, x
        )));
    }
    let tc = t - h_f;
    let k = ensemble
        .checkpoint_index(tc)
        .ok_or(EstimateError::MissingCheckpoint(tc))?;
    let set = ensemble
        .endpoints
        .get(k)
        .ok_or(EstimateError::MissingCheckpoint(tc))?;
    let mut sum = 0i128;
    let mut sum_sq = 0i128;
    if y.xd() != 0.0 {
        for pos in set.iter(ensemble.d) {
            let v = halfspace_kernel_raw(h_f, pos, y.coords());
            if v > 0.0 {
                sum += to_fixed(v, VALUE_SHIFT)?;
                sum_sq += to_fixed(v * v, SQUARE_SHIFT)?;
            }
        }
    }
    Ok(KernelEstimate::from_sums(
        t,
        x.clone(),
        y.clone(),
        h_f,
        ensemble.n_paths,
        ensemble.config_hash.clone(),
        sum,
        sum_sq,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRow {
    pub t: f64,
    pub survivors: u64,
    pub n: u64,
}

impl SurvivalRow {
    pub fn estimate(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.survivors as f64 / self.n as f64
        }
    }

    /// Binomial standard error.
    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let p = self.estimate();
        (p * (1.0 - p) / self.n as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub x0: Point,
    pub config_hash: String,
    pub rows: Vec<SurvivalRow>,
}

impl SurvivalCurve {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.estimate()).collect()
    }

    pub fn at(&self, t: f64) -> Option<&SurvivalRow> {
        self.rows
            .iter()
            .find(|r| (r.t - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    pub fn merge(&self, other: &SurvivalCurve) -> Result<SurvivalCurve, EstimateError> {
        if self.config_hash != other.config_hash {
            return Err(EstimateError::Mismatch(format!(
                "config hash {} vs {}",
                self.config_hash, other.config_hash
            )));
        }
        if self.times() != other.times() {
            return Err(EstimateError::Mismatch("checkpoint grids differ".into()));
        }
        Ok(SurvivalCurve {
            x0: self.x0.clone(),
            config_hash: self.config_hash.clone(),
            rows: self
                .rows
                .iter()
                .zip(&other.rows)
                .map(|(a, b)| SurvivalRow {
                    t: a.t,
                    survivors: a.survivors + b.survivors,
                    n: a.n + b.n,
                })
                .collect(),
        })
    }
}

pub fn survival_estimate(ensemble: &Ensemble) -> SurvivalCurve {
    SurvivalCurve {
        x0: ensemble.x0.clone(),
        config_hash: ensemble.config_hash.clone(),
        rows: ensemble
            .checkpoints
            .iter()
            .zip(&ensemble.survivors)
            .map(|(&t, &s)| SurvivalRow {
                t,
                survivors: s,
                n: ensemble.n_paths,
            })
            .collect(),
    }
}
