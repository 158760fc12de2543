//! Rate fits, cone-dimension classification and limit predictions.
//!
//! All fits are linear least squares on `ln value`:
//!
//! | model | regressors |
//! |---|---|
//! | `PurePower` | `1, -ln t` |
//! | `LogCorrectedPower` | `1, -ln t, -ln ln t` |
//! | `Plateau` | `1` |
//!
//! The model with the lowest AIC wins; the residual sum of squares is
//! floored so that exact data selects the model with fewer parameters.

use crate::estimators::SurvivalCurve;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

const BOOTSTRAP_RESAMPLES: usize = 200;
const BOOTSTRAP_SEED: u64 = 0xB007_5712;
const MIN_POINTS: usize = 8;
const RSS_FLOOR: f64 = 1e-24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("value {0} at t = {1} is not positive")]
    NonPositive(f64, f64),
    #[error("fit window [{0}, {1}] holds {2} points; at least {MIN_POINTS} are needed")]
    DegenerateWindow(f64, f64, usize),
    #[error("invalid input: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateModel {
    PurePower,
    LogCorrectedPower,
    Plateau,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
}

impl SeriesPoint {
    pub fn exact(t: f64, value: f64) -> Self {
        Self { t, value, stderr: 0.0 }
    }
}

/// One candidate model fitted to the window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub model: RateModel,
    pub p: f64,
    pub q: Option<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    pub ci_p: (f64, f64),
    pub ci_q: Option<(f64, f64)>,
    pub aic: f64,
    pub rss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    pub p: f64,
    pub q: Option<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    pub ci_p: (f64, f64),
    pub ci_q: Option<(f64, f64)>,
    pub window: (f64, f64),
    pub criterion_scores: Vec<(RateModel, f64)>,
    pub candidates: Vec<ModelFit>,
}

impl RateFit {
    pub fn candidate(&self, model: RateModel) -> Option<&ModelFit> {
        self.candidates.iter().find(|m| m.model == model)
    }
}

/// Weighted least squares via normal equations (at most 3 unknowns).
fn wls(rows: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let k = rows[0].len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for ((r, &yi), &wi) in rows.iter().zip(y).zip(w) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += wi * r[i] * r[j];
            }
            a[i][k] += wi * r[i] * yi;
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                let pivot_row = a[col].clone();
                for (dst, &src) in a[r][col..=k].iter_mut().zip(&pivot_row[col..=k]) {
                    *dst -= f * src;
                }
            }
        }
    }
    Some((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

fn design(model: RateModel, t: f64) -> Vec<f64> {
    match model {
        RateModel::PurePower => vec![1.0, -t.ln()],
        RateModel::LogCorrectedPower => vec![1.0, -t.ln(), -t.ln().ln()],
        RateModel::Plateau => vec![1.0],
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn fit_model(model: RateModel, t: &[f64], y: &[f64], w: &[f64]) -> Option<ModelFit> {
    let rows: Vec<Vec<f64>> = t.iter().map(|&ti| design(model, ti)).collect();
    let beta = wls(&rows, y, w)?;
    let fitted: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum())
        .collect();
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let n = t.len() as f64;
    let wmean = w.iter().sum::<f64>() / n;
    let rss: f64 = resid.iter().zip(w).map(|(r, wi)| wi * r * r).sum();
    let k = beta.len() as f64;
    let aic = n * (rss / n).max(RSS_FLOOR * wmean).ln() + 2.0 * k;

    // Residual bootstrap.
    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let mut ps = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut qs = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut ystar = vec![0.0; y.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for (i, ys) in ystar.iter_mut().enumerate() {
            *ys = fitted[i] + resid[rng.random_range(0..resid.len())];
        }
        if let Some(b) = wls(&rows, &ystar, w) {
            ps.push(b.get(1).copied().unwrap_or(0.0));
            qs.push(b.get(2).copied().unwrap_or(0.0));
        }
    }
    ps.sort_by(f64::total_cmp);
    qs.sort_by(f64::total_cmp);
    let p = beta.get(1).copied().unwrap_or(0.0);
    let ci = |v: &[f64], centre: f64| {
        if v.is_empty() {
            (centre, centre)
        } else {
            (percentile(v, 0.025).min(centre), percentile(v, 0.975).max(centre))
        }
    };
    let (q, ci_q) = match model {
        RateModel::LogCorrectedPower => (Some(beta[2]), Some(ci(&qs, beta[2]))),
        _ => (None, None),
    };
    Some(ModelFit {
        model,
        p,
        q,
        c: beta[0].exp(),
        ci_p: ci(&ps, p),
        ci_q,
        aic,
        rss,
    })
}

/// Fits the three models on `window` and selects one by AIC.
pub fn fit_rate(series: &[SeriesPoint], window: (f64, f64)) -> Result<RateFit, FitError> {
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(FitError::Invalid(format!("window [{lo}, {hi}] is empty")));
    }
    let pts: Vec<&SeriesPoint> = series
        .iter()
        .filter(|s| s.t >= lo * (1.0 - 1e-12) && s.t <= hi * (1.0 + 1e-12))
        .collect();
    if pts.len() < MIN_POINTS {
        return Err(FitError::DegenerateWindow(lo, hi, pts.len()));
    }
    for s in &pts {
        if !(s.value > 0.0) || !s.t.is_finite() || !(s.t > 0.0) {
            return Err(FitError::NonPositive(s.value, s.t));
        }
    }
    let t: Vec<f64> = pts.iter().map(|s| s.t).collect();
    let y: Vec<f64> = pts.iter().map(|s| s.value.ln()).collect();
    let rel: Vec<f64> = pts.iter().map(|s| (s.stderr / s.value).abs()).collect();
    let w: Vec<f64> = if rel.iter().all(|&r| r == 0.0) {
        vec![1.0; rel.len()]
    } else {
        let floor = rel.iter().copied().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min);
        rel.iter().map(|&r| 1.0 / r.max(floor).powi(2)).collect()
    };
    let mut candidates = Vec::new();
    for model in [RateModel::Plateau, RateModel::PurePower, RateModel::LogCorrectedPower] {
        if model == RateModel::LogCorrectedPower && t.iter().any(|&ti| ti <= 1.0) {
            continue;
        }
        if let Some(f) = fit_model(model, &t, &y, &w) {
            candidates.push(f);
        }
    }
    // Ties go to the earlier (simpler) model.
    let best = candidates
        .iter()
        .fold(None::<&ModelFit>, |b, m| match b {
            Some(b) if b.aic <= m.aic + 1e-9 => Some(b),
            _ => Some(m),
        })
        .ok_or_else(|| FitError::Invalid("no model could be fitted".into()))?
        .clone();
    Ok(RateFit {
        model: best.model,
        p: best.p,
        q: best.q,
        c: best.c,
        ci_p: best.ci_p,
        ci_q: best.ci_q,
        window,
        criterion_scores: candidates.iter().map(|m| (m.model, m.aic)).collect(),
        candidates,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeDimension {
    One,
    Two,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeOptions {
    pub slope_tol: f64,
    pub slope_min: f64,
    /// Times below this are pre-asymptotic and ignored.
    pub t_mix: f64,
    /// Required span of usable data, in decades beyond `t_mix`.
    pub min_decades: f64,
}

impl Default for ConeOptions {
    fn default() -> Self {
        Self {
            slope_tol: 0.05,
            slope_min: 0.10,
            t_mix: 1.0,
            min_decades: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub dimension: ConeDimension,
    /// `(t, √t·P)` for every usable checkpoint.
    pub g: Vec<(f64, f64)>,
    /// Log-log slopes of `g` between consecutive checkpoints.
    pub slopes: Vec<f64>,
    /// Least-squares slope of `ln g` over the final decade.
    pub final_slope: f64,
    pub thresholds: ConeOptions,
    pub hint: Option<String>,
}

/// Classifies the cone from the growth of `g(t) = √t·P(T > t)`.
pub fn classify_cone_dimension(curve: &SurvivalCurve, opts: &ConeOptions) -> ConeReport {
    let series: Vec<SeriesPoint> = curve
        .rows
        .iter()
        .map(|r| SeriesPoint {
            t: r.t,
            value: r.estimate(),
            stderr: r.stderr(),
        })
        .collect();
    classify_series(&series, opts)
}

/// As [`classify_cone_dimension`] for a plain `(t, P, stderr)` series.
pub fn classify_series(series: &[SeriesPoint], opts: &ConeOptions) -> ConeReport {
    let mut report = ConeReport {
        dimension: ConeDimension::Inconclusive,
        g: Vec::new(),
        slopes: Vec::new(),
        final_slope: f64::NAN,
        thresholds: opts.clone(),
        hint: None,
    };
    let usable: Vec<&SeriesPoint> = series.iter().filter(|s| s.t >= opts.t_mix).collect();
    report.g = usable.iter().map(|s| (s.t, s.t.sqrt() * s.value)).collect();
    report.slopes = report
        .g
        .windows(2)
        .map(|w| {
            if w[0].1 > 0.0 && w[1].1 > 0.0 {
                (w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln()
            } else {
                f64::NAN
            }
        })
        .collect();
    let Some(t_max) = usable.last().map(|s| s.t) else {
        report.hint = Some("no checkpoints beyond the mixing time".into());
        return report;
    };
    if (t_max / opts.t_mix).log10() < opts.min_decades {
        report.hint = Some(format!(
            "data spans {:.2} decades beyond t_mix; {} needed",
            (t_max / opts.t_mix).log10(),
            opts.min_decades
        ));
        return report;
    }
    let last: Vec<&SeriesPoint> = usable
        .iter()
        .copied()
        .filter(|s| s.t >= t_max / 10.0 * (1.0 - 1e-12))
        .collect();
    if last.len() < 3 || last.iter().any(|s| !(s.value > 0.0)) {
        report.hint = Some(
            "too few positive points in the final decade; more paths or a larger box may help".into(),
        );
        return report;
    }
    let rows: Vec<Vec<f64>> = last.iter().map(|s| vec![1.0, s.t.ln()]).collect();
    let y: Vec<f64> = last.iter().map(|s| (s.t.sqrt() * s.value).ln()).collect();
    let w: Vec<f64> = last
        .iter()
        .map(|s| {
            let r = s.stderr / s.value;
            if r > 0.0 {
                1.0 / (r * r)
            } else {
                1.0
            }
        })
        .collect();
    let slope = wls(&rows, &y, &w).map(|b| b[1]).unwrap_or(f64::NAN);
    report.final_slope = slope;
    report.dimension = if slope.abs() < opts.slope_tol {
        ConeDimension::Two
    } else if slope >= opts.slope_min {
        ConeDimension::One
    } else {
        report.hint = Some(
            "final-decade slope between thresholds; box truncation or short horizon may bind".into(),
        );
        ConeDimension::Inconclusive
    };
    report
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("profile values must be nonnegative")]
pub struct NegativeProfile;

/// `2(2π)^{-d/2}(u1(x)u1(y) + u2(x)u2(y))`.
pub fn thm1_prediction(d: usize, u1x: f64, u1y: f64, u2x: f64, u2y: f64) -> Result<f64, NegativeProfile> {
    if [u1x, u1y, u2x, u2y].iter().any(|&v| !(v >= 0.0)) {
        return Err(NegativeProfile);
    }
    Ok(2.0 * (2.0 * PI).powf(-(d as f64) / 2.0) * (u1x * u1y + u2x * u2y))
}

/// `√(2/π)·v_s(x)`.
pub fn thm2_prediction(vs: f64) -> Result<f64, NegativeProfile> {
    if !(vs >= 0.0) {
        return Err(NegativeProfile);
    }
    Ok((2.0 / PI).sqrt() * vs)
}

/// A series of kernel or survival samples at fixed points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSeries {
    pub label: String,
    pub vs_x: f64,
    /// Present for kernel series, absent for survival series.
    pub vs_y: Option<f64>,
    /// `(t, value)`.
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundFitReport {
    pub applicable: bool,
    pub gamma_hat: f64,
    pub k_hat: f64,
    pub growth_trend: bool,
    /// Labels of series whose normalized values keep growing.
    pub growing: Vec<String>,
    pub samples: usize,
}

/// Slope above which a normalized series counts as still growing.
const GROWTH_SLOPE: f64 = 0.1;

/// Empirical suprema of `t^{1+d/2} p_t(x,y) / ((1+v_s(x))(1+v_s(y)))` and
/// `√t P_x(T>t) / (1+v_s(x))` over samples with `t > 1`.
pub fn fit_bound_constants(d: usize, series: &[BoundSeries], dimension: ConeDimension) -> BoundFitReport {
    let mut r = BoundFitReport {
        applicable: dimension == ConeDimension::Two,
        gamma_hat: 0.0,
        k_hat: 0.0,
        growth_trend: false,
        growing: Vec::new(),
        samples: 0,
    };
    for s in series {
        let normalized: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|(t, _)| *t > 1.0)
            .map(|&(t, v)| match s.vs_y {
                Some(vy) => (t, t.powf(1.0 + d as f64 / 2.0) * v / ((1.0 + s.vs_x) * (1.0 + vy))),
                None => (t, t.sqrt() * v / (1.0 + s.vs_x)),
            })
            .collect();
        r.samples += normalized.len();
        for &(_, v) in &normalized {
            if s.vs_y.is_some() {
                r.gamma_hat = r.gamma_hat.max(v);
            } else {
                r.k_hat = r.k_hat.max(v);
            }
        }
        let tail = &normalized[normalized.len() - normalized.len().div_ceil(3)..];
        if tail.len() >= 3 && tail.iter().all(|(_, v)| *v > 0.0) {
            let rows: Vec<Vec<f64>> = tail.iter().map(|(t, _)| vec![1.0, t.ln()]).collect();
            let y: Vec<f64> = tail.iter().map(|(_, v)| v.ln()).collect();
            if let Some(b) = wls(&rows, &y, &vec![1.0; y.len()]) {
                if b[1] > GROWTH_SLOPE {
                    r.growth_trend = true;
                    r.growing.push(s.label.clone());
                }
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::SurvivalRow;
    use crate::geometry::Point;
    use crate::kernels::{halfspace_kernel_limit, halfspace_survival};

    fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
            .collect()
    }

    fn series(ts: &[f64], f: impl Fn(f64) -> f64) -> Vec<SeriesPoint> {
        ts.iter().map(|&t| SeriesPoint::exact(t, f(t))).collect()
    }

    #[test]
    fn recovers_pure_power() {
        let s = series(&logspace(10.0, 1e4, 25), |t| 3.0 * t.powf(-1.5));
        let fit = fit_rate(&s, (10.0, 1e4)).unwrap();
        assert_eq!(fit.model, RateModel::PurePower);
        assert!((fit.p - 1.5).abs() < 1e-6);
        assert!((fit.c - 3.0).abs() < 1e-6);
        assert!(fit.ci_p.0 <= fit.p && fit.p <= fit.ci_p.1);
    }

    #[test]
    fn prefers_log_correction() {
        let s = series(&logspace(1e2, 1e6, 30), |t| 1.0 / (t * t.ln().powi(2)));
        let fit = fit_rate(&s, (1e2, 1e6)).unwrap();
        assert_eq!(fit.model, RateModel::LogCorrectedPower);
        assert!((fit.p - 1.0).abs() < 0.05);
        assert!((fit.q.unwrap() - 2.0).abs() < 0.3);
        let pure = fit.candidate(RateModel::PurePower).unwrap();
        assert!(pure.p > 1.0 && pure.p < 1.5, "{}", pure.p);
        assert!(pure.aic > fit.candidate(RateModel::LogCorrectedPower).unwrap().aic);
    }

    #[test]
    fn plateau_after_rescaling() {
        let s = series(&logspace(1.0, 100.0, 12), |t| t.sqrt() * (0.8 / t.sqrt()));
        let fit = fit_rate(&s, (1.0, 100.0)).unwrap();
        assert_eq!(fit.model, RateModel::Plateau);
        assert!((fit.c - 0.8).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let ts = logspace(1.0, 10.0, 10);
        assert!(matches!(
            fit_rate(&series(&ts, |_| -1.0), (1.0, 10.0)),
            Err(FitError::NonPositive(..))
        ));
        assert!(matches!(
            fit_rate(&series(&ts, |t| t), (1.0, 2.0)),
            Err(FitError::DegenerateWindow(..))
        ));
        assert!(fit_rate(&series(&ts, |t| t), (5.0, 5.0)).is_err());
    }

    #[test]
    fn noisy_fit_with_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ts = logspace(10.0, 1000.0, 20);
        let s: Vec<SeriesPoint> = ts
            .iter()
            .map(|&t| {
                let v = 2.0 * t.powf(-0.5);
                let se = 0.01 * v;
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                SeriesPoint { t, value: v + se * z, stderr: se }
            })
            .collect();
        let fit = fit_rate(&s, (10.0, 1000.0)).unwrap();
        assert_eq!(fit.model, RateModel::PurePower);
        assert!(fit.ci_p.0 < 0.5 && 0.5 < fit.ci_p.1, "{:?}", fit.ci_p);
    }

    fn curve(ts: &[f64], f: impl Fn(f64) -> f64) -> SurvivalCurve {
        let n = 1u64 << 40;
        SurvivalCurve {
            x0: Point::new(vec![0.0, 1.0]).unwrap(),
            config_hash: String::new(),
            rows: ts
                .iter()
                .map(|&t| SurvivalRow {
                    t,
                    survivors: (f(t) * n as f64).round() as u64,
                    n,
                })
                .collect(),
        }
    }

    #[test]
    fn cone_dimension_anchors() {
        let ts = logspace(1.0, 1000.0, 16);
        let o = ConeOptions::default();
        assert_eq!(classify_cone_dimension(&curve(&ts, |t| 0.3 / t.sqrt()), &o).dimension, ConeDimension::Two);
        assert_eq!(classify_cone_dimension(&curve(&ts, |t| 0.3 * t.powf(-0.25)), &o).dimension, ConeDimension::One);
        let half = curve(&ts, |t| halfspace_survival(t, 1.0).unwrap());
        assert_eq!(classify_cone_dimension(&half, &o).dimension, ConeDimension::Two);
        let short = curve(&logspace(1.0, 20.0, 10), |t| 0.3 / t.sqrt());
        let rep = classify_cone_dimension(&short, &o);
        assert_eq!(rep.dimension, ConeDimension::Inconclusive);
        assert!(rep.hint.is_some());
        let between = curve(&ts, |t| 0.3 * t.powf(-0.43));
        assert_eq!(classify_cone_dimension(&between, &o).dimension, ConeDimension::Inconclusive);
    }

    #[test]
    fn predictions() {
        assert!((thm1_prediction(2, 1.0, 2.0, 0.0, 0.0).unwrap() - 0.636_619_772_367_581_3).abs() < 1e-15);
        assert!((thm1_prediction(2, 1.0, 1.0, 1.0, 1.0).unwrap() - 0.636_619_772_367_581_3).abs() < 1e-15);
        assert_eq!(thm1_prediction(3, 0.0, 0.0, 0.0, 0.0).unwrap(), 0.0);
        assert!(thm1_prediction(2, -1.0, 0.0, 0.0, 0.0).is_err());
        assert!((thm2_prediction(1.0).unwrap() - 0.797_884_560_802_865_4).abs() < 1e-15);
        assert_eq!(thm2_prediction(0.0).unwrap(), 0.0);
        // Half-space survival approaches the prediction from below.
        let g4 = 2.0 * halfspace_survival(4.0, 1.0).unwrap();
        assert!((g4 - 0.765_849_845_096_052_4).abs() < 1e-12);
        let mut prev = 0.0;
        for t in [1.0f64, 4.0, 16.0, 64.0, 256.0] {
            let g = t.sqrt() * halfspace_survival(t, 1.0).unwrap();
            assert!(g > prev && g < thm2_prediction(1.0).unwrap());
            prev = g;
        }
    }

    #[test]
    fn thm1_matches_halfspace_limit() {
        for (a, b) in [(1.0, 2.0), (0.5, 3.0), (2.5, 0.1)] {
            let x = Point::new(vec![0.3, a]).unwrap();
            let y = Point::new(vec![-1.0, b]).unwrap();
            let lim = halfspace_kernel_limit(&x, &y).unwrap();
            assert!((thm1_prediction(2, a, b, 0.0, 0.0).unwrap() - lim).abs() < 1e-15);
        }
    }

    #[test]
    fn bound_constants() {
        let ts = logspace(1.5, 200.0, 12);
        let surv: Vec<BoundSeries> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&xd| BoundSeries {
                label: format!("x_d={xd}"),
                vs_x: xd,
                vs_y: None,
                points: ts.iter().map(|&t| (t, halfspace_survival(t, xd).unwrap())).collect(),
            })
            .collect();
        let r = fit_bound_constants(2, &surv, ConeDimension::Two);
        assert!(r.applicable && r.k_hat < 0.8 && !r.growth_trend);

        let bad = BoundSeries {
            label: "bad".into(),
            vs_x: 1.0,
            vs_y: Some(1.0),
            points: ts.iter().map(|&t| (t, 1.0 / t)).collect(),
        };
        let r = fit_bound_constants(2, std::slice::from_ref(&bad), ConeDimension::Two);
        assert!(r.growth_trend);
        assert_eq!(r.growing, vec!["bad".to_string()]);
        assert!(r.gamma_hat >= 200.0 / 4.0 - 1e-9);
        assert!(!fit_bound_constants(2, &[bad], ConeDimension::One).applicable);
    }

    #[test]
    fn fit_is_scale_equivariant() {
        let ts = logspace(20.0, 2e4, 20);
        let base = series(&ts, |t| 1.0 / (t * t.ln().powi(2)));
        let scaled: Vec<SeriesPoint> = base
            .iter()
            .map(|s| SeriesPoint { value: 7.5 * s.value, ..*s })
            .collect();
        let a = fit_rate(&base, (20.0, 2e4)).unwrap();
        let b = fit_rate(&scaled, (20.0, 2e4)).unwrap();
        assert_eq!(a.model, b.model);
        assert!((a.p - b.p).abs() < 1e-9 && (a.q.unwrap() - b.q.unwrap()).abs() < 1e-9);
        assert!((b.c / a.c - 7.5).abs() < 1e-9);
    }
}
