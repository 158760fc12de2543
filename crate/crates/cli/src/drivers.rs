//! Computations behind the subcommands. Each driver takes explicit points and
//! times so that callers other than the CLI can reuse it.
//!
//! On the two-half-space domain every kernel, survival and profile value comes
//! from its closed form; elsewhere kernels and profiles come from the planar
//! grid solvers and survival curves from Monte Carlo ensembles.

use crate::config::{McConfig, PdeConfig};
use crate::InputError;
use anyhow::{bail, Result};
use benedicks::asymptotics::{classify_cone_dimension, ConeOptions, ConeReport, SeriesPoint};
use benedicks::estimators::{survival_estimate, SurvivalCurve};
use benedicks::geometry::{mirror_across_hyperplane, BenedicksDomain, Point, ReflectionFrame};
use benedicks::kernels::{halfspace_kernel_raw, halfspace_survival};
use benedicks::mc::{run_ensemble, McError};
use benedicks::pde::{
    duhamel_rhs, harmonic_profile, kernel_field, survival_field, DuhamelOptions, Grid, HarmonicProfile,
    KernelRun, LaplaceOptions, PdeError, ProfileChecks,
};
use benedicks::verify::{
    check_lemma_a, CheckReport, DuhamelSample, Lemma3Triple, Measured, ReflectionSample,
};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

pub(crate) fn pde_err(e: PdeError) -> anyhow::Error {
    match e {
        PdeError::InvalidGrid(_) | PdeError::InvalidInput(_) | PdeError::NoStartTime(_) | PdeError::OutsideBox(..) => {
            InputError(e.to_string()).into()
        }
        other => other.into(),
    }
}

pub(crate) fn mc_err(e: McError) -> anyhow::Error {
    match e {
        McError::InvalidConfig(_) | McError::StartOnHole(_) | McError::DimensionTooLarge(_) | McError::Geometry(_) => {
            InputError(e.to_string()).into()
        }
    }
}

fn planar(domain: &BenedicksDomain) -> Result<()> {
    if domain.d() != 2 {
        bail!(InputError(format!(
            "grid solvers are planar; domain has d = {}",
            domain.d()
        )));
    }
    Ok(())
}

pub fn grid(domain: &BenedicksDomain, pde: &PdeConfig) -> Result<Arc<Grid>> {
    planar(domain)?;
    Ok(Arc::new(Grid::build(domain, pde.l, pde.dx).map_err(pde_err)?))
}

fn horizon(pde: &PdeConfig, t_max: f64) -> Result<()> {
    pde.check_horizon(&[t_max]).map_err(|e| InputError(e.to_string()).into())
}

/// Kernel runs from each source, reduced by `f` inside the worker so that only
/// the extracted values stay in memory.
pub fn with_kernel_runs<T: Send>(
    grid: &Arc<Grid>,
    pde: &PdeConfig,
    sources: &[Point],
    times: &[f64],
    record_line: bool,
    f: impl Fn(&Point, &KernelRun) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    horizon(pde, times.iter().copied().fold(0.0, f64::max))?;
    sources
        .par_iter()
        .map(|x| {
            let run = kernel_field(grid, x, times, &pde.heat(record_line), pde.t0).map_err(pde_err)?;
            f(x, &run)
        })
        .collect()
}

fn field_value(run: &KernelRun, t: f64, y: &Point) -> Result<f64> {
    run.value(t, y).map_err(pde_err)
}

/// `P_x(T > t)` at every point and time from one survival solve: `[point][time]`.
pub fn pde_survival(grid: &Arc<Grid>, pde: &PdeConfig, points: &[Point], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    horizon(pde, times.iter().copied().fold(0.0, f64::max))?;
    let sol = survival_field(grid, times, &pde.heat(false)).map_err(pde_err)?;
    points
        .iter()
        .map(|p| {
            sol.snapshots
                .iter()
                .map(|f| f.value_at(p.coords()[0], p.coords()[1]).map_err(pde_err))
                .collect()
        })
        .collect()
}

/// All `(x, y, t)` triples with `p_{3t}(x,y)`, `P_x(T>t)` and `P_y(T>t)`.
pub fn lemma3_triples(
    domain: &BenedicksDomain,
    pde: &PdeConfig,
    xs: &[Point],
    ys: &[Point],
    ts: &[f64],
) -> Result<Vec<Lemma3Triple>> {
    let mut out = Vec::new();
    if domain.is_two_halfspace() {
        for x in xs {
            for y in ys {
                for &t in ts {
                    out.push(Lemma3Triple {
                        x: x.clone(),
                        y: y.clone(),
                        t,
                        p3t: Measured::exact(halfspace_kernel_raw(3.0 * t, x.coords(), y.coords())),
                        px: Measured::exact(halfspace_survival(t, x.xd())?),
                        py: Measured::exact(halfspace_survival(t, y.xd())?),
                    });
                }
            }
        }
        return Ok(out);
    }
    let g = grid(domain, pde)?;
    let all: Vec<Point> = xs.iter().chain(ys).cloned().collect();
    let surv = pde_survival(&g, pde, &all, ts)?;
    let t3: Vec<f64> = ts.iter().map(|t| 3.0 * t).collect();
    let kern = with_kernel_runs(&g, pde, xs, &t3, false, |_, run| {
        ys.iter()
            .map(|y| t3.iter().map(|&t| field_value(run, t, y)).collect::<Result<Vec<f64>>>())
            .collect::<Result<Vec<_>>>()
    })?;
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            for (k, &t) in ts.iter().enumerate() {
                out.push(Lemma3Triple {
                    x: x.clone(),
                    y: y.clone(),
                    t,
                    p3t: Measured::exact(kern[i][j][k]),
                    px: Measured::exact(surv[i][k]),
                    py: Measured::exact(surv[xs.len() + j][k]),
                });
            }
        }
    }
    Ok(out)
}

/// Axis frames `S_l^±` at `y` for every tangential direction.
pub fn axis_frames(y: &Point) -> Result<Vec<ReflectionFrame>> {
    let mut v = Vec::new();
    for l in 0..y.dim() - 1 {
        for sign in [1.0, -1.0] {
            v.push(ReflectionFrame::axis(y.clone(), l, sign)?);
        }
    }
    Ok(v)
}

/// 24 points of Ω⁺ off the line: `x⃗ = y⃗ + a·n`, `x_d = b` with `|b| < a`.
pub fn omega_plus_samples(frame: &ReflectionFrame) -> Vec<Point> {
    let y = frame.y();
    let mut v = Vec::new();
    for a in [1.0, 2.0, 3.0, 4.0] {
        for frac in [-0.75, -0.5, -0.25, 0.25, 0.5, 0.75] {
            let mut c: Vec<f64> = y
                .tangential()
                .iter()
                .zip(frame.n())
                .map(|(yi, ni)| yi + a * ni)
                .collect();
            c.push(frac * a);
            v.push(Point::new(c).expect("finite sample"));
        }
    }
    v
}

/// Lemma A over the axis frames at each base point and each time.
pub fn lemma_a_report(
    domain: &BenedicksDomain,
    pde: &PdeConfig,
    bases: &[Point],
    ts: &[f64],
    solver_tol: f64,
) -> Result<CheckReport> {
    let label = domain.label().to_string();
    let mut frames = Vec::new();
    for b in bases {
        frames.extend(axis_frames(b)?);
    }
    let samples: Vec<Vec<Point>> = frames.iter().map(omega_plus_samples).collect();
    let mut reports = Vec::new();
    if domain.is_two_halfspace() {
        for &t in ts {
            let k = |x: &Point, y: &Point| Some(Measured::exact(halfspace_kernel_raw(t, x.coords(), y.coords())));
            for (f, s) in frames.iter().zip(&samples) {
                reports.push(check_lemma_a(&label, t, std::slice::from_ref(f), s, &k, solver_tol));
            }
        }
    } else {
        let g = grid(domain, pde)?;
        // p_t(x, y) = p_t(y, x): one run from each base point.
        let per_base = with_kernel_runs(&g, pde, bases, ts, false, |b, run| {
            let mut out = Vec::new();
            for &t in ts {
                let k = |x: &Point, _y: &Point| run.value(t, x).ok().map(Measured::exact);
                for (f, s) in frames.iter().zip(&samples) {
                    if f.y() == b {
                        out.push(check_lemma_a(&label, t, std::slice::from_ref(f), s, &k, solver_tol));
                    }
                }
            }
            Ok(out)
        })?;
        reports = per_base.into_iter().flatten().collect();
    }
    CheckReport::combine(&reports).ok_or_else(|| anyhow::anyhow!("no Lemma A frames"))
}

pub fn reflection_samples(
    domain: &BenedicksDomain,
    pde: &PdeConfig,
    xs: &[Point],
    ys: &[Point],
    ts: &[f64],
) -> Result<Vec<ReflectionSample>> {
    let pairs = |x: &Point| -> Vec<Point> { ys.iter().filter(|y| x.xd() * y.xd() > 0.0).cloned().collect() };
    if domain.is_two_halfspace() {
        let mut out = Vec::new();
        for x in xs {
            for y in pairs(x) {
                for &t in ts {
                    let ph = halfspace_kernel_raw(t, x.coords(), y.coords());
                    out.push(ReflectionSample {
                        x: x.clone(),
                        y: y.clone(),
                        t,
                        p: ph,
                        p_mirror: 0.0,
                        p_half: ph,
                    });
                }
            }
        }
        return Ok(out);
    }
    let g = grid(domain, pde)?;
    let per = with_kernel_runs(&g, pde, xs, ts, false, |x, run| {
        let mut out = Vec::new();
        for y in pairs(x) {
            let ystar = mirror_across_hyperplane(&y);
            for &t in ts {
                out.push(ReflectionSample {
                    x: x.clone(),
                    y: y.clone(),
                    t,
                    p: field_value(run, t, &y)?,
                    p_mirror: field_value(run, t, &ystar)?,
                    p_half: halfspace_kernel_raw(t, x.coords(), y.coords()),
                });
            }
        }
        Ok(out)
    })?;
    Ok(per.into_iter().flatten().collect())
}

/// Boundary-integral right side at each target from runs started at each source.
pub fn duhamel_samples(
    domain: &BenedicksDomain,
    pde: &PdeConfig,
    sources: &[Point],
    targets: &[Point],
    ts: &[f64],
) -> Result<Vec<DuhamelSample>> {
    let g = grid(domain, pde)?;
    let exact = domain.is_two_halfspace();
    let opts = DuhamelOptions::default();
    let per = with_kernel_runs(&g, pde, sources, ts, true, |y, run| {
        let mut out = Vec::new();
        for x in targets.iter().filter(|x| x.xd() != 0.0) {
            for &t in ts {
                let direct = if exact {
                    halfspace_kernel_raw(t, x.coords(), y.coords())
                } else {
                    field_value(run, t, x)?
                };
                out.push(DuhamelSample {
                    x: x.clone(),
                    y: y.clone(),
                    t,
                    direct,
                    rhs: duhamel_rhs(run, x, t, &opts).map_err(pde_err)?,
                });
            }
        }
        Ok(out)
    })?;
    Ok(per.into_iter().flatten().collect())
}

pub fn mc_survival(domain: &BenedicksDomain, mc: &McConfig, x: &Point, checkpoints: Vec<f64>) -> Result<SurvivalCurve> {
    let ens = run_ensemble(domain, x, &mc.sim(checkpoints)).map_err(mc_err)?;
    Ok(survival_estimate(&ens))
}

pub fn classify(domain: &BenedicksDomain, mc: &McConfig, x: &Point, opts: &ConeOptions) -> Result<(SurvivalCurve, ConeReport)> {
    let curve = mc_survival(domain, mc, x, mc.checkpoints.resolve()?)?;
    let report = classify_cone_dimension(&curve, opts);
    Ok((curve, report))
}

pub fn survival_series(curve: &SurvivalCurve) -> Vec<SeriesPoint> {
    curve
        .rows
        .iter()
        .map(|r| SeriesPoint {
            t: r.t,
            value: r.estimate(),
            stderr: r.stderr(),
        })
        .collect()
}

/// `p_t(x, x)` at each time.
pub fn diagonal_kernel(domain: &BenedicksDomain, pde: &PdeConfig, x: &Point, ts: &[f64]) -> Result<Vec<SeriesPoint>> {
    if domain.is_two_halfspace() {
        return Ok(ts
            .iter()
            .map(|&t| SeriesPoint::exact(t, halfspace_kernel_raw(t, x.coords(), x.coords())))
            .collect());
    }
    let g = grid(domain, pde)?;
    let v = with_kernel_runs(&g, pde, std::slice::from_ref(x), ts, false, |x, run| {
        ts.iter()
            .map(|&t| Ok(SeriesPoint::exact(t, field_value(run, t, x)?)))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(v.into_iter().next().unwrap_or_default())
}

/// Harmonic profile values `(v_s, u1, u2)` at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileAt {
    pub vs: f64,
    pub u1: f64,
    pub u2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileValues {
    pub points: Vec<Point>,
    /// Values used downstream: extrapolated when `richardson` is set.
    pub values: Vec<ProfileAt>,
    /// Values on the configured grid.
    pub fine: Vec<ProfileAt>,
    /// Values on the grid with twice the spacing, when extrapolating.
    pub coarse: Option<Vec<ProfileAt>>,
    pub checks: Option<ProfileChecks>,
}

fn sample_profile(p: &HarmonicProfile, points: &[Point]) -> Result<Vec<ProfileAt>> {
    points
        .iter()
        .map(|x| {
            let (a, b) = (x.coords()[0], x.coords()[1]);
            Ok(ProfileAt {
                vs: p.vs_at(a, b).map_err(pde_err)?,
                u1: p.u1_at(a, b).map_err(pde_err)?,
                u2: p.u2_at(a, b).map_err(pde_err)?,
            })
        })
        .collect()
}

/// Profile values at `points`, plus the full profile on the configured grid.
pub fn profile_values(
    domain: &BenedicksDomain,
    pde: &PdeConfig,
    points: &[Point],
) -> Result<(ProfileValues, Option<HarmonicProfile>)> {
    if domain.is_two_halfspace() {
        let values: Vec<ProfileAt> = points
            .iter()
            .map(|x| ProfileAt {
                vs: x.xd().abs(),
                u1: x.xd().max(0.0),
                u2: (-x.xd()).max(0.0),
            })
            .collect();
        return Ok((
            ProfileValues {
                points: points.to_vec(),
                values: values.clone(),
                fine: values,
                coarse: None,
                checks: None,
            },
            None,
        ));
    }
    let opts = LaplaceOptions::default();
    let g = grid(domain, pde)?;
    let prof = harmonic_profile(&g, &opts).map_err(pde_err)?;
    let fine = sample_profile(&prof, points)?;
    let coarse = if pde.richardson {
        let cfg = PdeConfig {
            dx: 2.0 * pde.dx,
            ..pde.clone()
        };
        let gc = grid(domain, &cfg)?;
        Some(sample_profile(&harmonic_profile(&gc, &opts).map_err(pde_err)?, points)?)
    } else {
        None
    };
    // The error is first order in dx near the hole ends.
    let values = match &coarse {
        Some(c) => fine
            .iter()
            .zip(c)
            .map(|(f, c)| ProfileAt {
                vs: 2.0 * f.vs - c.vs,
                u1: 2.0 * f.u1 - c.u1,
                u2: 2.0 * f.u2 - c.u2,
            })
            .collect(),
        None => fine.clone(),
    };
    Ok((
        ProfileValues {
            points: points.to_vec(),
            values,
            fine,
            coarse,
            checks: Some(prof.checks.clone()),
        },
        Some(prof),
    ))
}
