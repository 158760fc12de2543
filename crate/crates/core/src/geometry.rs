//! Benedicks domains: `R^d` minus a closed set of holes lying in the
//! hyperplane `x_d = 0`.
//!
//! A point is written `x = (x⃗, x_d)` with `x⃗ ∈ R^{d-1}`. The holes are
//! described either directly (a finite union of closed boxes in the
//! hyperplane) or through their complement (a finite union of open
//! windows). Boundary points of the windows are holes, so membership of a
//! hyperplane point is always resolved in favour of killing.
//!
//! The module also carries the reflections used by the symmetry arguments:
//! the mirror `y ↦ y*` across the hyperplane and the pair of oblique
//! reflections `S⁺`, `S⁻` attached to a [`ReflectionFrame`].

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Tolerance on `|n| = 1` for reflection frames.
pub const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point has non-finite coordinate {0}")]
    NonFinite(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid reflection frame: {0}")]
    InvalidFrame(String),
}

/// A point of `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if let Some(&bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite(bad));
        }
        Ok(Self { coords })
    }

    /// Builds a point from `(x⃗, x_d)`.
    pub fn from_parts(tangential: &[f64], xd: f64) -> Result<Self, GeometryError> {
        let mut coords = tangential.to_vec();
        coords.push(xd);
        Self::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The last coordinate `x_d`.
    pub fn xd(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }

    /// The hyperplane part `x⃗`.
    pub fn tangential(&self) -> &[f64] {
        &self.coords[..self.coords.len() - 1]
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    fn check_dim(&self, d: usize) -> Result<(), GeometryError> {
        if self.dim() != d {
            return Err(GeometryError::DimensionMismatch {
                expected: d,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = GeometryError;
    fn try_from(coords: Vec<f64>) -> Result<Self, Self::Error> {
        Point::new(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.coords
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Axis-aligned box in the hyperplane `R^{d-1}`. Bounds may be infinite,
/// which is how half-lines and the whole hyperplane are written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl HyperBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { lo, hi }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn contains_closed(&self, p: &[f64]) -> bool {
        self.lo.iter().zip(&self.hi).zip(p).all(|((l, h), x)| l <= x && x <= h)
    }

    fn contains_open(&self, p: &[f64]) -> bool {
        self.lo.iter().zip(&self.hi).zip(p).all(|((l, h), x)| l < x && x < h)
    }

    /// `[lo, hi] ⊂ self` with `self` closed.
    fn covers_closed(&self, lo: &[f64], hi: &[f64]) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= lo[i] && hi[i] <= self.hi[i])
    }

    /// `[lo, hi] ⊂ self` with `self` open.
    fn covers_open(&self, lo: &[f64], hi: &[f64]) -> bool {
        (0..self.dim()).all(|i| self.lo[i] < lo[i] && hi[i] < self.hi[i])
    }

    fn meets_closed(&self, lo: &[f64], hi: &[f64]) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= hi[i] && lo[i] <= self.hi[i])
    }

    fn meets_open(&self, lo: &[f64], hi: &[f64]) -> bool {
        (0..self.dim()).all(|i| self.lo[i] < hi[i] && lo[i] < self.hi[i])
    }

    fn covers_box(&self, other: &HyperBox) -> bool {
        self.covers_closed(&other.lo, &other.hi)
    }
}

/// The hole set `D^c`, given directly or through the windows `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "boxes", rename_all = "snake_case")]
pub enum HoleSpec {
    /// `D^c` is the union of these closed boxes.
    FiniteHoles(Vec<HyperBox>),
    /// `D` is the union of these open boxes; `D^c` is the complement.
    FiniteWindows(Vec<HyperBox>),
}

impl HoleSpec {
    pub fn boxes(&self) -> &[HyperBox] {
        match self {
            HoleSpec::FiniteHoles(b) | HoleSpec::FiniteWindows(b) => b,
        }
    }
}

/// Classification of a hyperplane point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HyperplaneClass {
    InD,
    InHoles,
}

/// Classification of a hyperplane region, used to decide whether a crossing
/// needs to be localized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionClass {
    /// Entirely inside the windows.
    Windows,
    /// Entirely inside the holes.
    Holes,
    Mixed,
}

/// Raw, unvalidated description of a domain as it comes from a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub d: usize,
    pub holes: HoleSpec,
    #[serde(default)]
    pub label: String,
}

/// A validated Benedicks domain with canonically merged boxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenedicksDomain {
    d: usize,
    holes: HoleSpec,
    label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationCheck {
    pub name: String,
    pub pass: bool,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub checks: Vec<ValidationCheck>,
    /// Canonical (merged, sorted) box list; present when the domain is valid.
    pub canonical: Option<HoleSpec>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &ValidationCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn summary(&self) -> String {
        let msgs: Vec<&str> = self.failures().map(|c| c.message.as_str()).collect();
        if msgs.is_empty() {
            "valid".to_string()
        } else {
            msgs.join("; ")
        }
    }
}

/// Checks the domain invariants and computes the canonical hole list.
/// Never panics; malformed input shows up as failed checks.
pub fn validate_domain(spec: &DomainSpec) -> ValidationReport {
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let mut push = |name: &str, pass: bool, message: String| {
        checks.push(ValidationCheck {
            name: name.to_string(),
            pass,
            message,
        })
    };

    let d_ok = spec.d >= 2;
    push(
        "dimension",
        d_ok,
        if d_ok {
            format!("d = {}", spec.d)
        } else {
            format!("dimension must be at least 2, got {}", spec.d)
        },
    );

    let boxes = spec.holes.boxes();
    let (list_name, empty_msg) = match spec.holes {
        HoleSpec::FiniteHoles(_) => ("holes", "D^c empty: hole list is empty"),
        HoleSpec::FiniteWindows(_) => ("windows", "D empty: window list is empty"),
    };
    push(
        "nonempty",
        !boxes.is_empty(),
        if boxes.is_empty() {
            empty_msg.to_string()
        } else {
            format!("{} {}", boxes.len(), list_name)
        },
    );

    let mut shape_ok = true;
    for (k, b) in boxes.iter().enumerate() {
        if d_ok && (b.lo.len() != spec.d - 1 || b.hi.len() != spec.d - 1) {
            shape_ok = false;
            push(
                "box_dimension",
                false,
                format!(
                    "box {k} has dimension {}/{}, expected {}",
                    b.lo.len(),
                    b.hi.len(),
                    spec.d - 1
                ),
            );
            continue;
        }
        if b.lo.iter().chain(&b.hi).any(|v| v.is_nan()) {
            shape_ok = false;
            push("box_finite", false, format!("box {k} has a NaN bound"));
            continue;
        }
        if b.lo.contains(&f64::INFINITY) || b.hi.contains(&f64::NEG_INFINITY)
        {
            shape_ok = false;
            push(
                "box_finite",
                false,
                format!("box {k} has an empty infinite side"),
            );
            continue;
        }
        if b.lo.iter().zip(&b.hi).any(|(l, h)| !(h > l)) {
            shape_ok = false;
            let kind = match spec.holes {
                HoleSpec::FiniteHoles(_) => "degenerate hole",
                HoleSpec::FiniteWindows(_) => "degenerate window",
            };
            push(
                "box_nondegenerate",
                false,
                format!("{kind}: box {k} = {:?}..{:?} has a side of non-positive length", b.lo, b.hi),
            );
        }
    }
    if shape_ok && !boxes.is_empty() {
        push(
            "boxes",
            true,
            "all boxes non-degenerate with positive (d-1)-volume".into(),
        );
    }

    let mut canonical = None;
    if d_ok && shape_ok && !boxes.is_empty() {
        let spec_canon = match &spec.holes {
            HoleSpec::FiniteHoles(b) => HoleSpec::FiniteHoles(merge_boxes(b.clone(), true)),
            HoleSpec::FiniteWindows(b) => HoleSpec::FiniteWindows(merge_boxes(b.clone(), false)),
        };
        if let HoleSpec::FiniteHoles(b) = &spec_canon {
            if b.iter().any(|bx| bx.lo.iter().chain(&bx.hi).all(|v| v.is_infinite())) {
                notes.push(
                    "D is empty: the holes cover the whole hyperplane (two half-spaces); \
                     accepted as the degenerate anchor case"
                        .into(),
                );
            }
        }
        if let HoleSpec::FiniteWindows(b) = &spec_canon {
            if b.iter().any(|bx| bx.lo.iter().chain(&bx.hi).all(|v| v.is_infinite())) {
                push(
                    "holes_nonempty",
                    false,
                    "D^c empty: a window covers the whole hyperplane".into(),
                );
            }
        }
        canonical = Some(spec_canon);
    }

    let valid = checks.iter().all(|c| c.pass);
    ValidationReport {
        valid,
        checks,
        canonical: if valid { canonical } else { None },
        notes,
    }
}

/// Merges boxes whose union is again a box, then sorts lexicographically.
/// `closed` selects whether touching boxes merge (holes) or not (windows).
fn merge_boxes(mut boxes: Vec<HyperBox>, closed: bool) -> Vec<HyperBox> {
    loop {
        let mut merged = false;
        'outer: for i in 0..boxes.len() {
            for j in (i + 1)..boxes.len() {
                if let Some(u) = union_if_box(&boxes[i], &boxes[j], closed) {
                    boxes[i] = u;
                    boxes.swap_remove(j);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    boxes.sort_by(|a, b| {
        a.lo.iter()
            .chain(&a.hi)
            .zip(b.lo.iter().chain(&b.hi))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    boxes
}

fn union_if_box(a: &HyperBox, b: &HyperBox, closed: bool) -> Option<HyperBox> {
    if a.covers_box(b) {
        return Some(a.clone());
    }
    if b.covers_box(a) {
        return Some(b.clone());
    }
    let n = a.dim();
    let mut differing = None;
    for k in 0..n {
        if a.lo[k] != b.lo[k] || a.hi[k] != b.hi[k] {
            if differing.is_some() {
                return None;
            }
            differing = Some(k);
        }
    }
    let k = differing?;
    let joined = if closed {
        a.lo[k] <= b.hi[k] && b.lo[k] <= a.hi[k]
    } else {
        a.lo[k] < b.hi[k] && b.lo[k] < a.hi[k]
    };
    if !joined {
        return None;
    }
    let mut u = a.clone();
    u.lo[k] = a.lo[k].min(b.lo[k]);
    u.hi[k] = a.hi[k].max(b.hi[k]);
    Some(u)
}

impl BenedicksDomain {
    pub fn new(d: usize, holes: HoleSpec, label: impl Into<String>) -> Result<Self, GeometryError> {
        Self::from_spec(&DomainSpec {
            d,
            holes,
            label: label.into(),
        })
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Self, GeometryError> {
        let report = validate_domain(spec);
        match report.canonical {
            Some(holes) if report.valid => Ok(Self {
                d: spec.d,
                holes,
                label: spec.label.clone(),
            }),
            _ => Err(GeometryError::InvalidDomain(report.summary())),
        }
    }

    /// `R^d` minus the whole hyperplane.
    pub fn two_halfspace(d: usize) -> Self {
        let n = d - 1;
        Self::new(
            d,
            HoleSpec::FiniteHoles(vec![HyperBox::new(
                vec![f64::NEG_INFINITY; n],
                vec![f64::INFINITY; n],
            )]),
            "two half-spaces",
        )
        .expect("two half-space domain is valid")
    }

    /// The plane minus the half-line `[0, ∞) × {0}`.
    pub fn slit_plane() -> Self {
        Self::new(
            2,
            HoleSpec::FiniteHoles(vec![HyperBox::interval(0.0, f64::INFINITY)]),
            "slit plane",
        )
        .expect("slit plane is valid")
    }

    /// The plane minus the segment `[-a, a] × {0}`.
    pub fn segment_exterior(a: f64) -> Self {
        Self::new(
            2,
            HoleSpec::FiniteHoles(vec![HyperBox::interval(-a, a)]),
            format!("exterior of segment [-{a}, {a}]"),
        )
        .expect("segment exterior is valid")
    }

    /// The plane minus the hyperplane except the window `(-a, a)`.
    pub fn window_gap(a: f64) -> Self {
        Self::new(
            2,
            HoleSpec::FiniteWindows(vec![HyperBox::interval(-a, a)]),
            format!("window gap D = (-{a}, {a})"),
        )
        .expect("window gap is valid")
    }

    /// Windows `(n - ε_n, n + ε_n)` with `ε_n = 2^{-|n|}`, truncated to `|n| ≤ n_max`.
    pub fn shrinking_windows(n_max: u32) -> Self {
        let n_max = n_max as i64;
        let windows = (-n_max..=n_max)
            .map(|n| {
                let eps = 0.5f64.powi(n.unsigned_abs() as i32);
                HyperBox::interval(n as f64 - eps, n as f64 + eps)
            })
            .collect();
        Self::new(
            2,
            HoleSpec::FiniteWindows(windows),
            format!("shrinking windows (n - 2^-|n|, n + 2^-|n|), truncated to |n| <= {n_max}"),
        )
        .expect("shrinking windows are valid")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn holes(&self) -> &HoleSpec {
        &self.holes
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// True when every hyperplane point is a hole.
    pub fn is_two_halfspace(&self) -> bool {
        match &self.holes {
            HoleSpec::FiniteHoles(b) => b
                .iter()
                .any(|bx| bx.lo.iter().all(|v| *v == f64::NEG_INFINITY) && bx.hi.iter().all(|v| *v == f64::INFINITY)),
            HoleSpec::FiniteWindows(_) => false,
        }
    }

    /// Whether the hole set is invariant under `x⃗ ↦ -x⃗`.
    pub fn is_tangentially_symmetric(&self) -> bool {
        let boxes = self.holes.boxes();
        let mirrored: Vec<HyperBox> = boxes
            .iter()
            .map(|b| HyperBox::new(b.hi.iter().map(|v| -v).collect(), b.lo.iter().map(|v| -v).collect()))
            .collect();
        let closed = matches!(self.holes, HoleSpec::FiniteHoles(_));
        merge_boxes(mirrored, closed) == boxes
    }

    /// Classifies `ξ ∈ R^{d-1}`; boundary points of `D` are holes.
    pub fn classify_hyperplane_point(&self, xi: &[f64]) -> Result<HyperplaneClass, GeometryError> {
        if xi.len() + 1 != self.d {
            return Err(GeometryError::DimensionMismatch {
                expected: self.d - 1,
                got: xi.len(),
            });
        }
        if let Some(&bad) = xi.iter().find(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(bad));
        }
        Ok(self.classify_unchecked(xi))
    }

    pub(crate) fn classify_unchecked(&self, xi: &[f64]) -> HyperplaneClass {
        match &self.holes {
            HoleSpec::FiniteHoles(b) => {
                if b.iter().any(|bx| bx.contains_closed(xi)) {
                    HyperplaneClass::InHoles
                } else {
                    HyperplaneClass::InD
                }
            }
            HoleSpec::FiniteWindows(b) => {
                if b.iter().any(|bx| bx.contains_open(xi)) {
                    HyperplaneClass::InD
                } else {
                    HyperplaneClass::InHoles
                }
            }
        }
    }

    /// Classifies the closed box `[lo, hi] ⊂ R^{d-1}`. `Holes` and `Windows`
    /// are only returned when certain; otherwise `Mixed`.
    pub fn classify_region(&self, lo: &[f64], hi: &[f64]) -> RegionClass {
        match &self.holes {
            HoleSpec::FiniteHoles(b) => {
                if b.iter().any(|bx| bx.covers_closed(lo, hi)) {
                    RegionClass::Holes
                } else if b.iter().all(|bx| !bx.meets_closed(lo, hi)) {
                    RegionClass::Windows
                } else {
                    RegionClass::Mixed
                }
            }
            HoleSpec::FiniteWindows(b) => {
                if b.iter().any(|bx| bx.covers_open(lo, hi)) {
                    RegionClass::Windows
                } else if b.iter().all(|bx| !bx.meets_open(lo, hi)) {
                    RegionClass::Holes
                } else {
                    RegionClass::Mixed
                }
            }
        }
    }

    /// True when `x` is in `Ω`: off the hyperplane, or on it inside `D`.
    pub fn contains(&self, x: &Point) -> Result<bool, GeometryError> {
        x.check_dim(self.d)?;
        if x.xd() != 0.0 {
            return Ok(true);
        }
        Ok(self.classify_unchecked(x.tangential()) == HyperplaneClass::InD)
    }
}

/// `(x⃗, x_d) ↦ (x⃗, -x_d)`.
pub fn mirror_across_hyperplane(p: &Point) -> Point {
    let mut coords = p.coords.clone();
    let last = coords.len() - 1;
    coords[last] = -coords[last];
    Point { coords }
}

/// A base point `y` off the hyperplane and a unit direction `n ∈ R^{d-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionFrame {
    y: Point,
    n: Vec<f64>,
}

impl ReflectionFrame {
    pub fn new(y: Point, n: Vec<f64>) -> Result<Self, GeometryError> {
        if n.len() + 1 != y.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: y.dim() - 1,
                got: n.len(),
            });
        }
        if y.xd() == 0.0 {
            return Err(GeometryError::InvalidFrame("y_d must be nonzero".into()));
        }
        let norm = n.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(GeometryError::InvalidFrame(format!("|n| = {norm}, expected 1")));
        }
        Ok(Self { y, n })
    }

    /// Frame with `n = ±e_l`, the axis reflections `S_l^±`.
    pub fn axis(y: Point, l: usize, sign: f64) -> Result<Self, GeometryError> {
        let mut n = vec![0.0; y.dim().saturating_sub(1)];
        if l >= n.len() {
            return Err(GeometryError::InvalidFrame(format!("axis {l} out of range")));
        }
        n[l] = sign.signum();
        Self::new(y, n)
    }

    pub fn y(&self) -> &Point {
        &self.y
    }

    pub fn n(&self) -> &[f64] {
        &self.n
    }

    /// `(x⃗ - y⃗)·n⃗`.
    pub fn offset(&self, x: &Point) -> f64 {
        x.tangential()
            .iter()
            .zip(self.y.tangential())
            .zip(&self.n)
            .map(|((a, b), n)| (a - b) * n)
            .sum()
    }
}

/// Returns `(S⁺(x), S⁻(x))`.
pub fn oblique_reflections(
    frame: &ReflectionFrame,
    x: &Point,
) -> Result<(Point, Point), GeometryError> {
    x.check_dim(frame.y.dim())?;
    let s = frame.offset(x);
    let xd = x.xd();
    let build = |shift: f64, last: f64| {
        let mut coords: Vec<f64> = x
            .tangential()
            .iter()
            .zip(&frame.n)
            .map(|(xi, ni)| xi + shift * ni)
            .collect();
        coords.push(last);
        Point { coords }
    };
    let plus = build(xd - s, s);
    let minus = build(-(xd + s), -s);
    Ok((plus, minus))
}

/// `|x_d| ≤ (x⃗ - y⃗)·n⃗`.
pub fn in_omega_plus(frame: &ReflectionFrame, x: &Point) -> bool {
    x.xd().abs() <= frame.offset(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn holes_1d(b: &[(f64, f64)]) -> BenedicksDomain {
        BenedicksDomain::new(
            2,
            HoleSpec::FiniteHoles(b.iter().map(|&(l, h)| HyperBox::interval(l, h)).collect()),
            "",
        )
        .unwrap()
    }

    fn windows_1d(b: &[(f64, f64)]) -> BenedicksDomain {
        BenedicksDomain::new(
            2,
            HoleSpec::FiniteWindows(b.iter().map(|&(l, h)| HyperBox::interval(l, h)).collect()),
            "",
        )
        .unwrap()
    }

    #[test]
    fn classify_examples() {
        let d = holes_1d(&[(-1.0, 1.0)]);
        assert_eq!(d.classify_hyperplane_point(&[0.5]).unwrap(), HyperplaneClass::InHoles);
        assert_eq!(d.classify_hyperplane_point(&[1.0]).unwrap(), HyperplaneClass::InHoles);
        assert_eq!(d.classify_hyperplane_point(&[1.5]).unwrap(), HyperplaneClass::InD);
        let w = windows_1d(&[(-1.0, 1.0)]);
        assert_eq!(w.classify_hyperplane_point(&[0.5]).unwrap(), HyperplaneClass::InD);
        assert_eq!(w.classify_hyperplane_point(&[1.0]).unwrap(), HyperplaneClass::InHoles);
        assert!(matches!(
            d.classify_hyperplane_point(&[0.0, 1.0]),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mirror_examples() {
        assert_eq!(mirror_across_hyperplane(&p(&[2.0, -3.0])), p(&[2.0, 3.0]));
        assert_eq!(mirror_across_hyperplane(&p(&[0.0, 0.0])).coords(), &[0.0, -0.0]);
        assert_eq!(mirror_across_hyperplane(&p(&[1.5, 2.0, -0.25])), p(&[1.5, 2.0, 0.25]));
    }

    #[test]
    fn oblique_examples() {
        let frame = ReflectionFrame::new(p(&[0.0, 5.0]), vec![1.0]).unwrap();
        let x = p(&[3.0, 1.0]);
        let (sp, sm) = oblique_reflections(&frame, &x).unwrap();
        assert_eq!(sp, p(&[1.0, 3.0]));
        assert_eq!(sm, p(&[-1.0, -3.0]));
        let (spp, _) = oblique_reflections(&frame, &sp).unwrap();
        assert_eq!(spp, x);
        // Fixed hyperplane of S⁺: x_d = (x⃗ - y⃗)·n⃗.
        let fixed = p(&[2.0, 2.0]);
        assert_eq!(oblique_reflections(&frame, &fixed).unwrap().0, fixed);
        let fixed_minus = p(&[2.0, -2.0]);
        assert_eq!(oblique_reflections(&frame, &fixed_minus).unwrap().1, fixed_minus);
    }

    #[test]
    fn omega_plus_examples() {
        let frame = ReflectionFrame::new(p(&[0.0, 5.0]), vec![1.0]).unwrap();
        assert!(in_omega_plus(&frame, &p(&[3.0, 1.0])));
        assert!(!in_omega_plus(&frame, &p(&[0.5, 1.0])));
        assert!(in_omega_plus(&frame, &p(&[2.0, -2.0])));
    }

    #[test]
    fn frame_validation() {
        assert!(ReflectionFrame::new(p(&[0.0, 0.0]), vec![1.0]).is_err());
        assert!(ReflectionFrame::new(p(&[0.0, 1.0]), vec![0.5]).is_err());
        assert!(ReflectionFrame::new(p(&[0.0, 0.0, 1.0]), vec![0.6, 0.8]).is_ok());
        let ax = ReflectionFrame::axis(p(&[1.0, 2.0, 1.0]), 1, -1.0).unwrap();
        assert_eq!(ax.n(), &[0.0, -1.0]);
    }

    #[test]
    fn validation_examples() {
        let ok = validate_domain(&DomainSpec {
            d: 2,
            holes: HoleSpec::FiniteHoles(vec![HyperBox::interval(-1.0, 1.0)]),
            label: String::new(),
        });
        assert!(ok.valid, "{}", ok.summary());

        let degenerate = validate_domain(&DomainSpec {
            d: 2,
            holes: HoleSpec::FiniteHoles(vec![HyperBox::interval(0.0, 0.0)]),
            label: String::new(),
        });
        assert!(!degenerate.valid);
        assert!(degenerate.summary().contains("degenerate hole"));

        let empty = validate_domain(&DomainSpec {
            d: 2,
            holes: HoleSpec::FiniteWindows(vec![]),
            label: String::new(),
        });
        assert!(!empty.valid);
        assert!(empty.summary().contains("D empty"));

        let low_d = validate_domain(&DomainSpec {
            d: 1,
            holes: HoleSpec::FiniteHoles(vec![HyperBox::interval(-1.0, 1.0)]),
            label: String::new(),
        });
        assert!(!low_d.valid);

        let nan = validate_domain(&DomainSpec {
            d: 2,
            holes: HoleSpec::FiniteHoles(vec![HyperBox::interval(f64::NAN, 1.0)]),
            label: String::new(),
        });
        assert!(!nan.valid);
    }

    #[test]
    fn merging_is_canonical() {
        let a = holes_1d(&[(2.0, 3.0), (-1.0, 1.0), (0.5, 2.0)]);
        assert_eq!(a.holes().boxes(), &[HyperBox::interval(-1.0, 3.0)]);
        // Touching open windows stay separate: the shared endpoint is a hole.
        let w = windows_1d(&[(1.0, 2.0), (0.0, 1.0)]);
        assert_eq!(
            w.holes().boxes(),
            &[HyperBox::interval(0.0, 1.0), HyperBox::interval(1.0, 2.0)]
        );
        let sw = BenedicksDomain::shrinking_windows(3);
        assert_eq!(sw.holes().boxes()[2], HyperBox::interval(-1.5, 1.5));
        assert_eq!(sw.holes().boxes().len(), 5);
        assert!(sw.is_tangentially_symmetric());
        assert!(!BenedicksDomain::slit_plane().is_tangentially_symmetric());
    }

    #[test]
    fn merging_boxes_in_the_plane() {
        let d = BenedicksDomain::new(
            3,
            HoleSpec::FiniteHoles(vec![
                HyperBox::new(vec![0.0, 0.0], vec![1.0, 1.0]),
                HyperBox::new(vec![1.0, 0.0], vec![2.0, 1.0]),
                HyperBox::new(vec![0.2, 0.2], vec![0.4, 0.4]),
                HyperBox::new(vec![5.0, 5.0], vec![6.0, 7.0]),
            ]),
            "",
        )
        .unwrap();
        assert_eq!(
            d.holes().boxes(),
            &[
                HyperBox::new(vec![0.0, 0.0], vec![2.0, 1.0]),
                HyperBox::new(vec![5.0, 5.0], vec![6.0, 7.0])
            ]
        );
    }

    #[test]
    fn region_classification() {
        let s = BenedicksDomain::slit_plane();
        assert_eq!(s.classify_region(&[1.0], &[2.0]), RegionClass::Holes);
        assert_eq!(s.classify_region(&[-2.0], &[-1.0]), RegionClass::Windows);
        assert_eq!(s.classify_region(&[-1.0], &[0.0]), RegionClass::Mixed);
        let w = windows_1d(&[(-1.0, 1.0)]);
        assert_eq!(w.classify_region(&[-0.5], &[0.5]), RegionClass::Windows);
        assert_eq!(w.classify_region(&[1.0], &[2.0]), RegionClass::Holes);
        assert_eq!(w.classify_region(&[0.5], &[1.5]), RegionClass::Mixed);
        assert!(BenedicksDomain::two_halfspace(3).is_two_halfspace());
    }

    fn frame_strategy() -> impl Strategy<Value = (ReflectionFrame, Point, Point)> {
        (
            -5.0..5.0f64,
            -5.0..5.0f64,
            0.1..5.0f64,
            0.0..std::f64::consts::TAU,
            prop::array::uniform3(-10.0..10.0f64),
            prop::array::uniform3(-10.0..10.0f64),
        )
            .prop_map(|(y1, y2, y3, ang, a, b)| {
                let frame =
                    ReflectionFrame::new(p(&[y1, y2, y3]), vec![ang.cos(), ang.sin()]).unwrap();
                (frame, p(&a), p(&b))
            })
    }

    proptest! {
        #[test]
        fn mirror_is_involution(c in prop::collection::vec(-1e6..1e6f64, 2..5)) {
            let x = p(&c);
            prop_assert_eq!(mirror_across_hyperplane(&mirror_across_hyperplane(&x)), x);
        }

        #[test]
        fn oblique_reflections_are_isometric_involutions((frame, a, b) in frame_strategy()) {
            let (ap, am) = oblique_reflections(&frame, &a).unwrap();
            let (bp, bm) = oblique_reflections(&frame, &b).unwrap();
            let dab = a.distance(&b);
            prop_assert!((ap.distance(&bp) - dab).abs() <= 1e-12 * (1.0 + dab) * 10.0);
            prop_assert!((am.distance(&bm) - dab).abs() <= 1e-12 * (1.0 + dab) * 10.0);
            let app = oblique_reflections(&frame, &ap).unwrap().0;
            let amm = oblique_reflections(&frame, &am).unwrap().1;
            prop_assert!(app.distance(&a) < 1e-11);
            prop_assert!(amm.distance(&a) < 1e-11);
        }

        #[test]
        fn holes_and_windows_agree_off_edges(x in -5.0..5.0f64) {
            // Holes [-3,-1] ∪ [1,3] inside [-4,4] versus the complementary windows.
            let holes = holes_1d(&[(-3.0, -1.0), (1.0, 3.0), (-1e9, -4.0), (4.0, 1e9)]);
            let windows = windows_1d(&[(-4.0, -3.0), (-1.0, 1.0), (3.0, 4.0)]);
            let edges = [-4.0, -3.0, -1.0, 1.0, 3.0, 4.0];
            prop_assume!(edges.iter().all(|e| (x - e).abs() > 1e-9));
            prop_assert_eq!(
                holes.classify_hyperplane_point(&[x]).unwrap(),
                windows.classify_hyperplane_point(&[x]).unwrap()
            );
        }
    }
}
