//! Subcommand implementations.

use crate::config::{ExperimentConfig, FitSource, PdeConfig};
use crate::drivers::{self, mc_err, pde_err, ProfileAt};
use crate::output::{coord_names, strs, Artifacts};
use crate::{CheckName, Command, Common, DomainCmd, InputError, McCmd, PdeCmd, Status, StudyCmd};
use anyhow::{Context, Result};
use benedicks::asymptotics::{fit_rate, thm1_prediction, thm2_prediction, ConeDimension, SeriesPoint};
use benedicks::estimators::{default_smoothing_window, kernel_estimate, SurvivalCurve};
use benedicks::geometry::{validate_domain, BenedicksDomain, DomainSpec, Point};
use benedicks::kernels::{halfspace_kernel_raw, halfspace_survival};
use benedicks::mc::run_ensemble;
use benedicks::pde::{kernel_field, survival_field, write_csv};
use benedicks::verify::{
    check_duhamel, check_lemma3, check_reflection, check_thm_limits, check_time_ratio, CheckReport, LimitSample,
    Measured,
};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// A loaded config with its hash and resolved output directory.
pub struct RunContext {
    pub cfg: ExperimentConfig,
    pub hash: String,
    pub out: PathBuf,
}

fn input<E: std::fmt::Display>(e: E) -> anyhow::Error {
    InputError(e.to_string()).into()
}

fn load(common: &Common) -> Result<RunContext> {
    let cfg = ExperimentConfig::load(&common.config).map_err(input)?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| Path::new("runs").join(&cfg.label));
    Ok(RunContext {
        hash: cfg.hash(),
        cfg,
        out,
    })
}

impl RunContext {
    fn artifacts(&self, sub: &str) -> Result<Artifacts> {
        Artifacts::create(&self.out.join(sub))
    }

    fn finish(&self, a: Artifacts, sub: &str, status: Status) -> Result<Status> {
        a.finish(sub, &self.cfg.label, &self.hash, self.cfg.mc.seed, status.label())?;
        Ok(status)
    }

    fn domain(&self) -> Result<BenedicksDomain> {
        self.cfg.validate().map_err(input)
    }
}

pub fn execute(cmd: &Command) -> Result<Status> {
    match cmd {
        Command::Domain {
            action: DomainCmd::Validate(c),
        } => domain_validate(&load(c)?),
        Command::Mc { action } => match action {
            McCmd::Survive(c) => mc_survive(&load(c)?),
            McCmd::Kernel(c) => mc_kernel(&load(c)?),
        },
        Command::Pde { action } => match action {
            PdeCmd::Kernel { common, fields } => pde_kernel(&load(common)?, fields.fields),
            PdeCmd::Survive { common, fields } => pde_survive(&load(common)?, fields.fields),
            PdeCmd::Harmonic { common, fields } => pde_harmonic(&load(common)?, fields.fields),
        },
        Command::Classify(c) => classify(&load(c)?),
        Command::Fit { common, input } => fit(&load(common)?, input.as_deref()),
        Command::Verify { check, common } => verify(&load(common)?, *check),
        Command::Study {
            action: StudyCmd::Convergence(c),
        } => study_convergence(&load(c)?),
    }
}

fn domain_validate(ctx: &RunContext) -> Result<Status> {
    let sub = "domain_validate";
    let spec = match ctx.cfg.domain.spec(&ctx.cfg.label) {
        Some(s) => s,
        None => {
            let d = ctx.cfg.domain().map_err(input)?;
            DomainSpec {
                d: d.d(),
                holes: d.holes().clone(),
                label: ctx.cfg.label.clone(),
            }
        }
    };
    let report = validate_domain(&spec);
    let mut a = ctx.artifacts(sub)?;
    a.json("validation.json", &report)?;
    if !report.valid {
        ctx.finish(a, sub, Status::CheckFailed)?;
        return Err(input(format!("invalid domain: {}", report.summary())));
    }
    ctx.domain()?;
    println!("{}: valid", ctx.cfg.label);
    ctx.finish(a, sub, Status::Success)
}

fn survival_rows(curve: &SurvivalCurve) -> Vec<Vec<f64>> {
    curve
        .rows
        .iter()
        .map(|r| vec![r.t, r.estimate(), r.stderr(), r.n as f64])
        .collect()
}

fn survival_header() -> Vec<String> {
    strs(&["t", "estimate", "stderr", "n"])
}

fn kernel_header(d: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(coord_names("x", d));
    h.extend(coord_names("y", d));
    h.extend(strs(&["value", "stderr"]));
    h
}

fn kernel_row(t: f64, x: &Point, y: &Point, value: f64, stderr: f64) -> Vec<f64> {
    let mut r = vec![t];
    r.extend_from_slice(x.coords());
    r.extend_from_slice(y.coords());
    r.push(value);
    r.push(stderr);
    r
}

fn mc_survive(ctx: &RunContext) -> Result<Status> {
    let sub = "mc_survive";
    let domain = ctx.domain()?;
    let xs = ctx.cfg.xs().map_err(input)?;
    let checkpoints = ctx.cfg.mc.checkpoints.resolve().map_err(input)?;
    let mut a = ctx.artifacts(sub)?;
    let mut hashes = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        let curve = drivers::mc_survival(&domain, &ctx.cfg.mc, x, checkpoints.clone())?;
        a.csv(&format!("survival_{i}.csv"), &survival_header(), survival_rows(&curve))?;
        hashes.push((x.clone(), curve.config_hash.clone()));
    }
    a.json("ensembles.json", &hashes)?;
    ctx.finish(a, sub, Status::Success)
}

fn mc_kernel(ctx: &RunContext) -> Result<Status> {
    let sub = "mc_kernel";
    let domain = ctx.domain()?;
    let xs = ctx.cfg.xs().map_err(input)?;
    let ys = ctx.cfg.ys().map_err(input)?;
    let times = ctx.cfg.mc.kernel_times.resolve().map_err(input)?;
    let window = |x: &Point, y: &Point| ctx.cfg.mc.h_f.unwrap_or_else(|| default_smoothing_window(x, y));
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    for x in &xs {
        let mut cps: Vec<f64> = Vec::new();
        for y in &ys {
            let hf = window(x, y);
            cps.extend(times.iter().filter(|&&t| t > hf).map(|&t| t - hf));
        }
        cps.sort_by(f64::total_cmp);
        cps.dedup();
        if cps.is_empty() {
            continue;
        }
        let mut sim = ctx.cfg.mc.sim(cps);
        sim.record_endpoints = true;
        let ens = run_ensemble(&domain, x, &sim).map_err(mc_err)?;
        for y in &ys {
            let hf = window(x, y);
            for &t in times.iter().filter(|&&t| t > hf) {
                let e = kernel_estimate(&domain, x, y, t, hf, &ens).map_err(input)?;
                rows.push(kernel_row(t, x, y, e.value, e.stderr));
                estimates.push(e);
            }
        }
    }
    let mut a = ctx.artifacts(sub)?;
    a.csv("kernel.csv", &kernel_header(domain.d()), rows)?;
    a.json("kernel.json", &estimates)?;
    ctx.finish(a, sub, Status::Success)
}

#[derive(Serialize)]
struct RunSummary<'a> {
    x: &'a Point,
    t0: f64,
    init: benedicks::pde::KernelInit,
    report: &'a benedicks::pde::HeatReport,
}

fn pde_kernel(ctx: &RunContext, fields: bool) -> Result<Status> {
    let sub = "pde_kernel";
    let domain = ctx.domain()?;
    let xs = ctx.cfg.xs().map_err(input)?;
    let ys = ctx.cfg.ys().map_err(input)?;
    let times = ctx.cfg.pde.t_grid.resolve().map_err(input)?;
    let grid = drivers::grid(&domain, &ctx.cfg.pde)?;
    let mut a = ctx.artifacts(sub)?;
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        let run = kernel_field(&grid, x, &times, &ctx.cfg.pde.heat(false), ctx.cfg.pde.t0).map_err(pde_err)?;
        for y in &ys {
            for &t in &times {
                rows.push(kernel_row(t, x, y, run.value(t, y).map_err(pde_err)?, 0.0));
            }
        }
        if fields {
            for (k, f) in run.solution.snapshots.iter().enumerate() {
                a.with_writer(&format!("field_{i}_{k}.csv"), |w| write_csv(f, w))?;
            }
        }
        let summary = serde_json::to_value(RunSummary {
            x,
            t0: run.t0,
            init: run.init,
            report: &run.solution.report,
        })?;
        runs.push(summary);
    }
    a.csv("kernel.csv", &kernel_header(2), rows)?;
    a.json("runs.json", &runs)?;
    a.json("grid.json", grid.snap_report())?;
    ctx.finish(a, sub, Status::Success)
}

fn pde_survive(ctx: &RunContext, fields: bool) -> Result<Status> {
    let sub = "pde_survive";
    let domain = ctx.domain()?;
    let xs = ctx.cfg.xs().map_err(input)?;
    let times = ctx.cfg.pde.t_grid.resolve().map_err(input)?;
    let grid = drivers::grid(&domain, &ctx.cfg.pde)?;
    let sol = survival_field(&grid, &times, &ctx.cfg.pde.heat(false)).map_err(pde_err)?;
    let mut a = ctx.artifacts(sub)?;
    for (i, x) in xs.iter().enumerate() {
        let rows = sol
            .snapshots
            .iter()
            .map(|f| Ok(vec![f.t, f.value_at(x.coords()[0], x.coords()[1]).map_err(pde_err)?, 0.0, 0.0]))
            .collect::<Result<Vec<_>>>()?;
        a.csv(&format!("survival_{i}.csv"), &survival_header(), rows)?;
    }
    if fields {
        for (k, f) in sol.snapshots.iter().enumerate() {
            a.with_writer(&format!("field_{k}.csv"), |w| write_csv(f, w))?;
        }
    }
    a.json("report.json", &sol.report)?;
    ctx.finish(a, sub, Status::Success)
}

fn pde_harmonic(ctx: &RunContext, fields: bool) -> Result<Status> {
    let sub = "pde_harmonic";
    let domain = ctx.domain()?;
    let mut pts = ctx.cfg.xs().map_err(input)?;
    pts.extend(ctx.cfg.ys().map_err(input)?);
    let (values, profile) = drivers::profile_values(&domain, &ctx.cfg.pde, &pts)?;
    let mut a = ctx.artifacts(sub)?;
    a.json("profile.json", &values)?;
    if let Some(p) = profile {
        a.json("solver.json", &p.reports)?;
        if fields {
            a.with_writer("vs.csv", |w| write_csv(&p.vs, w))?;
            a.with_writer("u1.csv", |w| write_csv(&p.u1, w))?;
            a.with_writer("u2.csv", |w| write_csv(&p.u2, w))?;
        }
    }
    ctx.finish(a, sub, Status::Success)
}

fn classify(ctx: &RunContext) -> Result<Status> {
    let sub = "classify";
    let domain = ctx.domain()?;
    let x = &ctx.cfg.xs().map_err(input)?[0];
    let (curve, report) = drivers::classify(&domain, &ctx.cfg.mc, x, &ctx.cfg.asymptotics.cone())?;
    let mut a = ctx.artifacts(sub)?;
    a.csv("survival.csv", &survival_header(), survival_rows(&curve))?;
    a.json("classify.json", &report)?;
    println!(
        "{}: dimension {:?} (final-decade slope of √t·P: {:.4})",
        ctx.cfg.label, report.dimension, report.final_slope
    );
    if let Some(h) = &report.hint {
        println!("  {h}");
    }
    let status = match report.dimension {
        ConeDimension::Inconclusive => Status::Inconclusive,
        _ => Status::Success,
    };
    ctx.finish(a, sub, status)
}

/// Reads `t` and `value` (or `estimate`) columns, with `stderr` when present.
pub fn read_series(path: &Path) -> Result<Vec<SeriesPoint>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    let col = |names: &[&str]| header.iter().position(|h| names.contains(h));
    let (Some(ti), Some(vi)) = (col(&["t"]), col(&["value", "estimate"])) else {
        return Err(input(format!(
            "{}: need a `t` column and a `value` or `estimate` column",
            path.display()
        )));
    };
    let si = col(&["stderr"]);
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            let get = |i: usize| -> Result<f64> {
                cells
                    .get(i)
                    .and_then(|c| c.trim().parse().ok())
                    .ok_or_else(|| input(format!("{}: bad row {l:?}", path.display())))
            };
            Ok(SeriesPoint {
                t: get(ti)?,
                value: get(vi)?,
                stderr: si.map(get).transpose()?.unwrap_or(0.0),
            })
        })
        .collect()
}

fn fit(ctx: &RunContext, input_csv: Option<&Path>) -> Result<Status> {
    let sub = "fit";
    let domain = ctx.domain()?;
    let series = match input_csv {
        Some(p) => read_series(p)?,
        None => {
            let x = &ctx.cfg.xs().map_err(input)?[0];
            match ctx.cfg.asymptotics.fit_source {
                FitSource::PdeKernel => {
                    let ts = ctx.cfg.pde.t_grid.resolve().map_err(input)?;
                    drivers::diagonal_kernel(&domain, &ctx.cfg.pde, x, &ts)?
                }
                FitSource::McSurvival => {
                    let cps = ctx.cfg.mc.checkpoints.resolve().map_err(input)?;
                    drivers::survival_series(&drivers::mc_survival(&domain, &ctx.cfg.mc, x, cps)?)
                }
            }
        }
    };
    let fit = fit_rate(&series, ctx.cfg.asymptotics.fit_window).map_err(input)?;
    let mut a = ctx.artifacts(sub)?;
    a.csv(
        "series.csv",
        &strs(&["t", "value", "stderr"]),
        series.iter().map(|s| vec![s.t, s.value, s.stderr]),
    )?;
    a.json("fit.json", &fit)?;
    println!(
        "{}: {:?}, p = {:.4} [{:.4}, {:.4}]{}",
        ctx.cfg.label,
        fit.model,
        fit.p,
        fit.ci_p.0,
        fit.ci_p.1,
        fit.q.map(|q| format!(", q = {q:.3}")).unwrap_or_default()
    );
    ctx.finish(a, sub, Status::Success)
}

/// Survival plateaus from every `x` and kernel limits for every `(x, y)`.
/// `first` is the survival curve already computed from `x[0]`.
pub fn thm_limit_samples(ctx_cfg: &ExperimentConfig, domain: &BenedicksDomain, first: &SurvivalCurve) -> Result<Vec<LimitSample>> {
    let xs = ctx_cfg.xs().map_err(input)?;
    let ys = ctx_cfg.ys().map_err(input)?;
    let mut pts = xs.clone();
    pts.extend(ys.iter().cloned());
    let (profile, _) = drivers::profile_values(domain, &ctx_cfg.pde, &pts)?;
    let (px, py) = profile.values.split_at(xs.len());
    let mut out = Vec::new();
    let cps = ctx_cfg.mc.checkpoints.resolve().map_err(input)?;
    for (i, x) in xs.iter().enumerate() {
        let curve = if i == 0 {
            first.clone()
        } else {
            drivers::mc_survival(domain, &ctx_cfg.mc, x, cps.clone())?
        };
        let last = curve.rows.last().ok_or_else(|| input("empty survival curve"))?;
        let s = last.t.sqrt();
        out.push(LimitSample {
            x: x.clone(),
            y: None,
            t: last.t,
            measured: Measured {
                value: s * last.estimate(),
                stderr: s * last.stderr(),
            },
            predicted: thm2_prediction(px[i].vs)?,
        });
    }
    out.extend(kernel_limit_samples(ctx_cfg, domain, &xs, &ys, px, py)?);
    Ok(out)
}

/// `t^{1+d/2} p_t(x, y)` at `verify.limit_kernel_time` against the profile
/// prediction, for profile values `px`, `py` at `xs`, `ys`.
pub fn kernel_limit_samples(
    cfg: &ExperimentConfig,
    domain: &BenedicksDomain,
    xs: &[Point],
    ys: &[Point],
    px: &[ProfileAt],
    py: &[ProfileAt],
) -> Result<Vec<LimitSample>> {
    let t = match cfg.verify.limit_kernel_time {
        Some(t) => t,
        None => *cfg.pde.t_grid.resolve().map_err(input)?.last().expect("nonempty grid"),
    };
    let d = domain.d();
    let scale = t.powf(1.0 + d as f64 / 2.0);
    let kern: Vec<Vec<f64>> = if domain.is_two_halfspace() {
        xs.iter()
            .map(|x| ys.iter().map(|y| halfspace_kernel_raw(t, x.coords(), y.coords())).collect())
            .collect()
    } else {
        let matrix = |pde: &PdeConfig| -> Result<Vec<Vec<f64>>> {
            let g = drivers::grid(domain, pde)?;
            drivers::with_kernel_runs(&g, pde, xs, &[t], false, |_, run| {
                ys.iter().map(|y| run.value(t, y).map_err(pde_err)).collect()
            })
        };
        let fine = matrix(&cfg.pde)?;
        if cfg.pde.richardson {
            // Flux through the windows converges at first order in dx, as the profiles do.
            let coarse = matrix(&PdeConfig {
                dx: 2.0 * cfg.pde.dx,
                ..cfg.pde.clone()
            })?;
            fine.iter()
                .zip(&coarse)
                .map(|(f, c)| f.iter().zip(c).map(|(f, c)| 2.0 * f - c).collect())
                .collect()
        } else {
            fine
        }
    };
    let mut out = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            out.push(LimitSample {
                x: x.clone(),
                y: Some(y.clone()),
                t,
                measured: Measured::exact(scale * kern[i][j]),
                predicted: thm1_prediction(d, px[i].u1, py[j].u1, px[i].u2, py[j].u2)?,
            });
        }
    }
    Ok(out)
}

fn verify(ctx: &RunContext, check: CheckName) -> Result<Status> {
    let sub = format!("verify_{}", check.as_str());
    let domain = ctx.domain()?;
    let cfg = &ctx.cfg;
    let v = &cfg.verify;
    let xs = cfg.xs().map_err(input)?;
    let ys = cfg.ys().map_err(input)?;
    let label = domain.label().to_string();
    let times = |t: &crate::config::Times| t.resolve().map_err(input);
    let report: CheckReport = match check {
        CheckName::Lemma3 => {
            let tr = drivers::lemma3_triples(&domain, &cfg.pde, &xs, &ys, &times(&v.lemma3_times)?)?;
            check_lemma3(&label, domain.d(), &tr, v.solver_tol)
        }
        CheckName::LemmaA => drivers::lemma_a_report(&domain, &cfg.pde, &xs, &times(&v.lemma_a_times)?, v.solver_tol)?,
        CheckName::Reflection => {
            let s = drivers::reflection_samples(&domain, &cfg.pde, &xs, &ys, &times(&v.reflection_times)?)?;
            check_reflection(&label, &s, v.reflection_tol)
        }
        CheckName::Duhamel => {
            let s = drivers::duhamel_samples(&domain, &cfg.pde, &xs, &ys, &times(&v.duhamel_times)?)?;
            check_duhamel(&label, &s, v.duhamel_tol)
        }
        CheckName::TimeRatio => {
            let s = v.time_ratio_s;
            let mut cps = cfg.mc.checkpoints.resolve().map_err(input)?;
            let shifted: Vec<f64> = cps.iter().map(|t| t + s).collect();
            cps.extend(shifted);
            cps.sort_by(f64::total_cmp);
            cps.dedup();
            let curve = if domain.is_two_halfspace() {
                exact_halfspace_curve(&xs[0], &cps)?
            } else {
                drivers::mc_survival(&domain, &cfg.mc, &xs[0], cps)?
            };
            let mut r = check_time_ratio(&curve, s, v.time_ratio_tol);
            r.domain = label.clone();
            r
        }
        CheckName::ThmLimits => {
            let (curve, cone) = drivers::classify(&domain, &cfg.mc, &xs[0], &cfg.asymptotics.cone())?;
            let samples = if cone.dimension == ConeDimension::Two {
                thm_limit_samples(cfg, &domain, &curve)?
            } else {
                Vec::new()
            };
            check_thm_limits(&label, cone.dimension, &samples, v.limit_tol)
        }
    };
    let status = if !report.applicable {
        Status::Inconclusive
    } else if report.pass {
        Status::Success
    } else {
        Status::CheckFailed
    };
    let mut a = ctx.artifacts(&sub)?;
    a.json("report.json", &report)?;
    println!(
        "{} on {}: {} (max violation {:.3e}, tolerance {:.3e}, margin {:.3e}, {} entries, {} skipped)",
        check.as_str(),
        label,
        if !report.applicable {
            "not applicable"
        } else if report.pass {
            "pass"
        } else {
            "FAIL"
        },
        report.max_violation,
        report.tolerance,
        report.stat_margin,
        report.inventory.len(),
        report.skipped
    );
    ctx.finish(a, &sub, status)
}

/// Survival curve with counts `round(P·2^52)` from the closed form.
fn exact_halfspace_curve(x: &Point, ts: &[f64]) -> Result<SurvivalCurve> {
    let n = 1u64 << 52;
    let rows = ts
        .iter()
        .map(|&t| {
            Ok(benedicks::estimators::SurvivalRow {
                t,
                survivors: (halfspace_survival(t, x.xd())? * n as f64).round() as u64,
                n,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SurvivalCurve {
        x0: x.clone(),
        config_hash: String::new(),
        rows,
    })
}

fn study_convergence(ctx: &RunContext) -> Result<Status> {
    let sub = "study_convergence";
    let domain = ctx.domain()?;
    let x = &ctx.cfg.xs().map_err(input)?[0];
    let cps = ctx.cfg.mc.checkpoints.resolve().map_err(input)?;
    let exact = domain.is_two_halfspace();
    let mut header = strs(&["h", "t", "estimate", "stderr", "n"]);
    if exact {
        header.push("reference".into());
    }
    let mut rows = Vec::new();
    for k in 0..3 {
        let mut mc = ctx.cfg.mc.clone();
        mc.h /= (1u32 << k) as f64;
        let curve = drivers::mc_survival(&domain, &mc, x, cps.clone())?;
        for r in &curve.rows {
            let mut row = vec![mc.h, r.t, r.estimate(), r.stderr(), r.n as f64];
            if exact {
                row.push(halfspace_survival(r.t, x.xd())?);
            }
            rows.push(row);
        }
    }
    let mut a = ctx.artifacts(sub)?;
    a.csv("convergence.csv", &header, rows)?;
    ctx.finish(a, sub, Status::Success)
}
