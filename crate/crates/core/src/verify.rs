//! Pass/fail checks of exact identities and inequalities.
//!
//! Every check reduces to a list of inventory entries, each with a signed
//! `violation` (positive means the statement is violated) and a statistical
//! `margin` of three combined standard errors. The report carries the
//! entry with the largest `violation - margin`, so that
//! `pass ⟺ max_violation ≤ tolerance + stat_margin` holds for the whole
//! inventory.

use crate::asymptotics::ConeDimension;
use crate::estimators::SurvivalCurve;
use crate::geometry::{in_omega_plus, oblique_reflections, Point, ReflectionFrame};
use crate::kernels::gaussian_bound;
use serde::{Deserialize, Serialize};

pub const SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InventoryEntry {
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub violation: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub domain: String,
    pub inventory: Vec<InventoryEntry>,
    pub max_violation: f64,
    pub tolerance: f64,
    pub stat_margin: f64,
    pub sigmas: f64,
    pub pass: bool,
    /// False when the statement does not apply (for example a
    /// dimension-two limit on a dimension-one domain).
    pub applicable: bool,
    /// Samples dropped before evaluation, such as points outside Ω⁺.
    pub skipped: usize,
}

impl CheckReport {
    fn build(name: &str, domain: &str, inventory: Vec<InventoryEntry>, tolerance: f64, skipped: usize) -> Self {
        let worst = inventory
            .iter()
            .max_by(|a, b| (a.violation - a.margin).total_cmp(&(b.violation - b.margin)));
        let (max_violation, stat_margin) = worst.map_or((0.0, 0.0), |e| (e.violation, e.margin));
        let pass = !inventory.is_empty()
            && inventory.iter().all(|e| e.violation.is_finite())
            && max_violation <= tolerance + stat_margin;
        Self {
            check_name: name.into(),
            domain: domain.into(),
            inventory,
            max_violation,
            tolerance,
            stat_margin,
            sigmas: SIGMAS,
            pass,
            applicable: true,
            skipped,
        }
    }

    fn not_applicable(name: &str, domain: &str) -> Self {
        Self {
            check_name: name.into(),
            domain: domain.into(),
            inventory: Vec::new(),
            max_violation: 0.0,
            tolerance: 0.0,
            stat_margin: 0.0,
            sigmas: SIGMAS,
            pass: false,
            applicable: false,
            skipped: 0,
        }
    }

    /// Pools the inventories of reports of one check; the first report's
    /// name, domain and tolerance are kept.
    pub fn combine(reports: &[CheckReport]) -> Option<CheckReport> {
        let first = reports.first()?;
        let inventory = reports.iter().flat_map(|r| r.inventory.iter().cloned()).collect();
        let skipped = reports.iter().map(|r| r.skipped).sum();
        let mut r = Self::build(&first.check_name, &first.domain, inventory, first.tolerance, skipped);
        r.applicable = reports.iter().all(|r| r.applicable);
        r.pass &= r.applicable;
        Some(r)
    }

    /// Number of entries whose violation exceeds tolerance plus margin.
    pub fn violations(&self) -> usize {
        self.inventory
            .iter()
            .filter(|e| !(e.violation <= self.tolerance + e.margin))
            .count()
    }
}

fn rel(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.abs().max(f64::MIN_POSITIVE)
    }
}

/// A value with its standard error (zero for deterministic sources).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub stderr: f64,
}

impl Measured {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Triple {
    pub x: Point,
    pub y: Point,
    pub t: f64,
    /// `p_{3t}(x, y)`.
    pub p3t: Measured,
    /// `P_x(T > t)` and `P_y(T > t)`.
    pub px: Measured,
    pub py: Measured,
}

/// `p_{3t}(x,y) ≤ (2πt)^{-d/2} P_x(T>t) P_y(T>t)`, relative to the right side.
pub fn check_lemma3(domain: &str, d: usize, triples: &[Lemma3Triple], solver_tol: f64) -> CheckReport {
    let inventory = triples
        .iter()
        .map(|tr| {
            let g = gaussian_bound(tr.t, d);
            let rhs = g * tr.px.value * tr.py.value;
            let sd_rhs = g
                * ((tr.py.value * tr.px.stderr).powi(2) + (tr.px.value * tr.py.stderr).powi(2)).sqrt();
            let sd = (tr.p3t.stderr.powi(2) + sd_rhs.powi(2)).sqrt();
            let scale = rhs.max(tr.p3t.value);
            InventoryEntry {
                x: tr.x.coords().to_vec(),
                y: Some(tr.y.coords().to_vec()),
                t: tr.t,
                lhs: tr.p3t.value,
                rhs,
                violation: rel(tr.p3t.value - rhs, scale),
                margin: rel(SIGMAS * sd, scale),
            }
        })
        .collect();
    CheckReport::build("lemma3", domain, inventory, solver_tol, 0)
}

/// `p_t(x,y) ≤ p_t(S⁺x,y) + p_t(S⁻x,y)` for sample points of Ω⁺ in each frame.
///
/// `kernel(x, y)` returns `p_t(x, y)`, or `None` when it cannot be evaluated
/// (for instance outside a solver box); such samples are skipped and counted.
pub fn check_lemma_a(
    domain: &str,
    t: f64,
    frames: &[ReflectionFrame],
    points: &[Point],
    kernel: &dyn Fn(&Point, &Point) -> Option<Measured>,
    solver_tol: f64,
) -> CheckReport {
    let mut inventory = Vec::new();
    let mut skipped = 0;
    for frame in frames {
        let y = frame.y();
        for x in points {
            if !in_omega_plus(frame, x) {
                skipped += 1;
                continue;
            }
            let Ok((sp, sm)) = oblique_reflections(frame, x) else {
                skipped += 1;
                continue;
            };
            let (Some(a), Some(b), Some(c)) = (kernel(x, y), kernel(&sp, y), kernel(&sm, y)) else {
                skipped += 1;
                continue;
            };
            let rhs = b.value + c.value;
            let scale = a.value.max(rhs);
            let sd = (a.stderr.powi(2) + b.stderr.powi(2) + c.stderr.powi(2)).sqrt();
            inventory.push(InventoryEntry {
                x: x.coords().to_vec(),
                y: Some(y.coords().to_vec()),
                t,
                lhs: a.value,
                rhs,
                violation: rel(a.value - rhs, scale),
                margin: rel(SIGMAS * sd, scale),
            });
        }
    }
    CheckReport::build("lemma_a", domain, inventory, solver_tol, skipped)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSample {
    pub x: Point,
    pub y: Point,
    pub t: f64,
    /// `p_t(x, y)`, `p_t(x, y*)` and `p^H_t(x, y)`.
    pub p: f64,
    pub p_mirror: f64,
    pub p_half: f64,
}

/// `|p_t(x,y) - p^H_t(x,y) - p_t(x,y*)| / p_t(x,y) < tol`.
pub fn check_reflection(domain: &str, samples: &[ReflectionSample], tol: f64) -> CheckReport {
    let inventory = samples
        .iter()
        .map(|s| {
            let rhs = s.p_half + s.p_mirror;
            InventoryEntry {
                x: s.x.coords().to_vec(),
                y: Some(s.y.coords().to_vec()),
                t: s.t,
                lhs: s.p,
                rhs,
                violation: rel((s.p - rhs).abs(), s.p),
                margin: 0.0,
            }
        })
        .collect();
    CheckReport::build("reflection", domain, inventory, tol, 0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuhamelSample {
    pub x: Point,
    pub y: Point,
    pub t: f64,
    /// Solver value `p_t(x, y)` and the boundary-integral right side.
    pub direct: f64,
    pub rhs: f64,
}

pub fn check_duhamel(domain: &str, samples: &[DuhamelSample], tol: f64) -> CheckReport {
    let inventory = samples
        .iter()
        .map(|s| InventoryEntry {
            x: s.x.coords().to_vec(),
            y: Some(s.y.coords().to_vec()),
            t: s.t,
            lhs: s.direct,
            rhs: s.rhs,
            violation: rel((s.direct - s.rhs).abs(), s.direct),
            margin: 0.0,
        })
        .collect();
    CheckReport::build("duhamel", domain, inventory, tol, 0)
}

/// `P(T > t+s) / P(T > t) → 1`.
///
/// Uses every checkpoint pair `(t, t+s)` in the curve. The final ratio must be
/// within `tol` of 1, and `|1 - ratio|` may not grow between successive pairs
/// by more than `tol` plus noise. Survivors at `t+s` are a subset of those at
/// `t`, so the ratio has binomial error `√(r(1-r)/S_t)`.
pub fn check_time_ratio(curve: &SurvivalCurve, s: f64, tol: f64) -> CheckReport {
    let x = curve.x0.coords().to_vec();
    let mut pairs = Vec::new();
    for a in &curve.rows {
        let target = a.t + s;
        if let Some(b) = curve.rows.iter().find(|r| (r.t - target).abs() <= 1e-9 * target.max(1.0)) {
            if a.survivors == 0 {
                continue;
            }
            let r = b.estimate() / a.estimate();
            let se = if a.n == b.n {
                (r * (1.0 - r)).max(0.0).sqrt() / (a.survivors as f64).sqrt()
            } else {
                0.0
            };
            pairs.push((a.t, a.estimate(), b.estimate(), r, se));
        }
    }
    let mut inventory = Vec::new();
    for w in pairs.windows(2) {
        let (d0, d1) = ((1.0 - w[0].3).abs(), (1.0 - w[1].3).abs());
        inventory.push(InventoryEntry {
            x: x.clone(),
            y: None,
            t: w[1].0,
            lhs: w[1].2,
            rhs: w[1].1,
            violation: d1 - d0,
            margin: SIGMAS * (w[0].4.powi(2) + w[1].4.powi(2)).sqrt(),
        });
    }
    if let Some(&(t, pa, pb, r, se)) = pairs.last() {
        inventory.push(InventoryEntry {
            x,
            y: None,
            t,
            lhs: pb,
            rhs: pa,
            violation: (1.0 - r).abs(),
            margin: SIGMAS * se,
        });
    }
    CheckReport::build("time_ratio", "", inventory, tol, 0)
}

/// A measured normalized quantity against its predicted limit: `√t·P` against
/// `√(2/π)v_s(x)` or `t^{1+d/2}p_t` against the kernel prefactor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSample {
    pub x: Point,
    pub y: Option<Point>,
    pub t: f64,
    pub measured: Measured,
    pub predicted: f64,
}

/// Relative agreement with the limits; a zero prediction is compared in
/// absolute terms. Not applicable unless the cone has dimension two.
pub fn check_thm_limits(domain: &str, dimension: ConeDimension, samples: &[LimitSample], tol: f64) -> CheckReport {
    if dimension != ConeDimension::Two {
        return CheckReport::not_applicable("thm_limits", domain);
    }
    let inventory = samples
        .iter()
        .map(|s| {
            let (violation, margin) = if s.predicted == 0.0 {
                (s.measured.value.abs(), SIGMAS * s.measured.stderr)
            } else {
                (
                    (s.measured.value / s.predicted - 1.0).abs(),
                    SIGMAS * s.measured.stderr / s.predicted,
                )
            };
            InventoryEntry {
                x: s.x.coords().to_vec(),
                y: s.y.as_ref().map(|p| p.coords().to_vec()),
                t: s.t,
                lhs: s.measured.value,
                rhs: s.predicted,
                violation,
                margin,
            }
        })
        .collect();
    CheckReport::build("thm_limits", domain, inventory, tol, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::thm2_prediction;
    use crate::estimators::SurvivalRow;
    use crate::kernels::{halfspace_kernel, halfspace_kernel_raw, halfspace_survival};

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn halfspace_triple(x: Point, y: Point, t: f64) -> Lemma3Triple {
        let same = x.xd() * y.xd() > 0.0;
        Lemma3Triple {
            p3t: Measured::exact(if same { halfspace_kernel(3.0 * t, &x, &y).unwrap() } else { 0.0 }),
            px: Measured::exact(halfspace_survival(t, x.xd()).unwrap()),
            py: Measured::exact(halfspace_survival(t, y.xd()).unwrap()),
            x,
            y,
            t,
        }
    }

    #[test]
    fn lemma3_halfspace_line() {
        let tr = halfspace_triple(p(&[1.0]), p(&[1.0]), 1.0);
        assert!((tr.p3t.value - 0.112_07).abs() < 1e-5, "{}", tr.p3t.value);
        let r = check_lemma3("two_halfspace", 1, std::slice::from_ref(&tr), 0.0);
        assert!(r.pass);
        assert!((r.inventory[0].rhs - 0.185_93).abs() < 1e-5, "{}", r.inventory[0].rhs);
        assert!(r.max_violation < 0.0);

        let mut bad = tr;
        bad.py.value *= 0.25;
        let r = check_lemma3("two_halfspace", 1, &[bad], 0.0);
        assert!(!r.pass);
        assert_eq!(r.violations(), 1);
    }

    #[test]
    fn lemma3_saturating_inputs() {
        let t = 2.0;
        let tr = Lemma3Triple {
            x: p(&[0.0, 1.0]),
            y: p(&[0.0, 1.0]),
            t,
            p3t: Measured::exact(gaussian_bound(t, 2)),
            px: Measured::exact(1.0),
            py: Measured::exact(1.0),
        };
        let r = check_lemma3("any", 2, &[tr], 0.0);
        assert!(r.pass && r.max_violation == 0.0);
    }

    #[test]
    fn lemma3_halved_rhs_fails() {
        let x = p(&[0.0, 2.0]);
        let t = 1.0;
        let tr = Lemma3Triple {
            x: x.clone(),
            y: x.clone(),
            t,
            p3t: Measured::exact(0.5 * gaussian_bound(t, 2) * 0.9 * 0.9 + 1e-3),
            px: Measured::exact(0.9 * 0.5),
            py: Measured::exact(0.9),
        };
        assert!(!check_lemma3("synthetic", 2, &[tr], 0.0).pass);
    }

    #[test]
    fn bias_direction_is_conservative() {
        // Lower-biased kernel estimates shrink the left side, so a true
        // violation larger than the bias is still reported.
        let t = 1.0;
        let rhs_p = 0.5;
        let truth = gaussian_bound(t, 2) * rhs_p * rhs_p * 1.2;
        for bias in [0.0, 0.05, 0.1] {
            let tr = Lemma3Triple {
                x: p(&[0.0, 1.0]),
                y: p(&[0.0, 1.0]),
                t,
                p3t: Measured { value: truth * (1.0 - bias), stderr: 0.001 * truth },
                px: Measured::exact(rhs_p),
                py: Measured::exact(rhs_p),
            };
            assert!(!check_lemma3("synthetic", 2, &[tr], 0.0).pass, "bias {bias}");
        }
    }

    fn halfspace_p(t: f64) -> impl Fn(&Point, &Point) -> Option<Measured> {
        move |x: &Point, y: &Point| Some(Measured::exact(halfspace_kernel_raw(t, x.coords(), y.coords())))
    }

    #[test]
    fn lemma_a_halfspace() {
        let frame = ReflectionFrame::new(p(&[0.0, 5.0]), vec![1.0]).unwrap();
        let x = p(&[3.0, 1.0]);
        let (sp, sm) = oblique_reflections(&frame, &x).unwrap();
        assert_eq!(sp.coords(), &[1.0, 3.0]);
        assert_eq!(sm.coords(), &[-1.0, -3.0]);
        let k = halfspace_p(2.0);
        let r = check_lemma_a("two_halfspace", 2.0, std::slice::from_ref(&frame), &[x], &k, 0.0);
        assert!(r.pass && r.inventory.len() == 1);
        assert_eq!(r.inventory[0].rhs, k(&sp, frame.y()).unwrap().value);

        // Fixed point of S⁺ and a sample outside Ω⁺.
        let on = p(&[1.0, 1.0]);
        assert_eq!(oblique_reflections(&frame, &on).unwrap().0, on);
        let r = check_lemma_a("two_halfspace", 2.0, &[frame], &[on, p(&[0.2, 1.0])], &k, 0.0);
        assert!(r.pass);
        assert_eq!((r.inventory.len(), r.skipped), (1, 1));
    }

    #[test]
    fn lemma_a_detects_violation_and_skips_unevaluable() {
        let frame = ReflectionFrame::axis(p(&[0.0, 2.0]), 0, 1.0).unwrap();
        let pts = [p(&[3.0, 0.5]), p(&[5.0, -1.0])];
        let broken = |x: &Point, _y: &Point| Some(Measured::exact(if x.xd() == 0.5 { 1.0 } else { 0.0 }));
        assert!(!check_lemma_a("synthetic", 1.0, std::slice::from_ref(&frame), &pts, &broken, 0.0).pass);
        let none = |_: &Point, _: &Point| None;
        let r = check_lemma_a("synthetic", 1.0, &[frame], &pts, &none, 0.0);
        assert_eq!(r.skipped, 2);
        assert!(!r.pass, "empty inventory never passes");
    }

    #[test]
    fn reflection_and_duhamel_on_halfspace() {
        let (x, y) = (p(&[0.0, 1.0]), p(&[0.5, 2.0]));
        let ph = halfspace_kernel(1.0, &x, &y).unwrap();
        let s = ReflectionSample { x: x.clone(), y: y.clone(), t: 1.0, p: ph, p_mirror: 0.0, p_half: ph };
        let r = check_reflection("two_halfspace", &[s], 0.02);
        assert!(r.pass && r.max_violation == 0.0);
        let d = DuhamelSample { x, y, t: 1.0, direct: ph, rhs: ph };
        let r = check_duhamel("two_halfspace", std::slice::from_ref(&d), 0.05);
        assert!(r.pass && r.max_violation == 0.0);
        let off = DuhamelSample { rhs: 0.9 * ph, ..d };
        assert!(!check_duhamel("two_halfspace", &[off], 0.05).pass);
    }

    fn exact_curve(ts: &[f64], f: impl Fn(f64) -> f64) -> SurvivalCurve {
        let n = 1u64 << 50;
        SurvivalCurve {
            x0: p(&[0.0, 1.0]),
            config_hash: String::new(),
            rows: ts
                .iter()
                .map(|&t| SurvivalRow { t, survivors: (f(t) * n as f64).round() as u64, n })
                .collect(),
        }
    }

    #[test]
    fn time_ratio_halfspace() {
        let mut ts = Vec::new();
        for t in [1.0, 10.0, 100.0] {
            ts.push(t);
            ts.push(t + 1.0);
        }
        let c = exact_curve(&ts, |t| halfspace_survival(t, 1.0).unwrap());
        let r = check_time_ratio(&c, 1.0, 0.01);
        let last = r.inventory.last().unwrap();
        assert!((1.0 - last.violation - 0.99504).abs() < 1e-4, "{}", last.violation);
        assert!(r.pass);
        assert!(!check_time_ratio(&c, 1.0, 0.001).pass);

        let r = check_time_ratio(&c, 0.0, 0.0);
        assert!(r.pass && r.inventory.iter().all(|e| e.violation <= 0.0));
    }

    #[test]
    fn thm_limits_applicability_and_zero_prediction() {
        let x = p(&[0.0, 1.0]);
        let sample = |t: f64, predicted: f64| LimitSample {
            x: x.clone(),
            y: None,
            t,
            measured: Measured::exact(t.sqrt() * halfspace_survival(t, 1.0).unwrap()),
            predicted,
        };
        let pred = thm2_prediction(1.0).unwrap();
        let r = check_thm_limits("two_halfspace", ConeDimension::Two, &[sample(64.0, pred)], 0.05);
        assert!(r.pass);
        assert!(!check_thm_limits("two_halfspace", ConeDimension::Two, &[sample(1.0, pred)], 0.05).pass);
        let na = check_thm_limits("slit_plane", ConeDimension::One, &[sample(64.0, pred)], 0.05);
        assert!(!na.applicable && !na.pass);

        let decaying = LimitSample {
            x: x.clone(),
            y: None,
            t: 1e4,
            measured: Measured::exact(1e-3),
            predicted: 0.0,
        };
        assert!(check_thm_limits("synthetic", ConeDimension::Two, &[decaying], 0.01).pass);
    }

    #[test]
    fn reports_roundtrip_and_are_order_free() {
        let trs: Vec<Lemma3Triple> = [(1.0, 2.0, 0.5), (0.5, -1.0, 4.0), (2.0, 2.0, 10.0)]
            .iter()
            .map(|&(a, b, t)| halfspace_triple(p(&[0.0, a]), p(&[1.0, b]), t))
            .collect();
        let r = check_lemma3("two_halfspace", 2, &trs, 1e-3);
        let json = serde_json::to_string(&r).unwrap();
        let back: CheckReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        let mut rev = trs.clone();
        rev.reverse();
        let r2 = check_lemma3("two_halfspace", 2, &rev, 1e-3);
        assert_eq!((r2.max_violation, r2.stat_margin, r2.pass), (r.max_violation, r.stat_margin, r.pass));
    }

    #[test]
    fn combine_pools_inventories() {
        let a = check_lemma3("d", 2, &[halfspace_triple(p(&[0.0, 1.0]), p(&[0.0, 1.0]), 1.0)], 0.0);
        let mut bad = halfspace_triple(p(&[0.0, 1.0]), p(&[0.0, 1.0]), 2.0);
        bad.px.value *= 0.1;
        let b = check_lemma3("d", 2, &[bad], 0.0);
        let c = CheckReport::combine(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(c.inventory.len(), 2);
        assert!(!c.pass && c.max_violation == b.max_violation);
        assert!(CheckReport::combine(&[]).is_none());
        assert_eq!(CheckReport::combine(std::slice::from_ref(&a)).unwrap(), a);
    }
}
