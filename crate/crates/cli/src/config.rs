//! Experiment configuration files (TOML).

use benedicks::asymptotics::ConeOptions;
use benedicks::geometry::{validate_domain, BenedicksDomain, DomainSpec, HoleSpec, HyperBox, Point};
use benedicks::mc::SimConfig;
use benedicks::pde::HeatOptions;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("cannot parse {0}: {1}")]
    Parse(PathBuf, String),
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    TwoHalfspace,
    SlitPlane,
    SegmentExterior,
    WindowGap,
    ShrinkingWindows,
}

/// Either a named preset or an explicit hole list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub d: usize,
    pub preset: Option<Preset>,
    /// Half-width of the segment or window for the presets that take one.
    pub a: Option<f64>,
    pub n_max: Option<u32>,
    /// `finite_holes` or `finite_windows`.
    pub kind: Option<String>,
    pub boxes: Option<Vec<HyperBox>>,
}

impl DomainConfig {
    pub fn build(&self, label: &str) -> Result<BenedicksDomain, ConfigError> {
        let domain = match (self.preset, &self.kind, &self.boxes) {
            (Some(p), None, None) => {
                if p != Preset::TwoHalfspace && self.d != 2 {
                    return Err(ConfigError::Domain(format!("preset {p:?} is planar, got d = {}", self.d)));
                }
                let a = self.a.unwrap_or(1.0);
                if !(a > 0.0 && a.is_finite()) {
                    return Err(ConfigError::Domain(format!("a must be positive, got {a}")));
                }
                match p {
                    Preset::TwoHalfspace => {
                        if self.d < 2 {
                            return Err(ConfigError::Domain(format!(
                                "dimension must be at least 2, got {}",
                                self.d
                            )));
                        }
                        BenedicksDomain::two_halfspace(self.d)
                    }
                    Preset::SlitPlane => BenedicksDomain::slit_plane(),
                    Preset::SegmentExterior => BenedicksDomain::segment_exterior(a),
                    Preset::WindowGap => BenedicksDomain::window_gap(a),
                    Preset::ShrinkingWindows => BenedicksDomain::shrinking_windows(self.n_max.unwrap_or(20)),
                }
            }
            (None, Some(kind), Some(boxes)) => {
                let holes = match kind.as_str() {
                    "finite_holes" => HoleSpec::FiniteHoles(boxes.clone()),
                    "finite_windows" => HoleSpec::FiniteWindows(boxes.clone()),
                    other => {
                        return Err(ConfigError::Domain(format!(
                            "unknown kind {other:?}; expected finite_holes or finite_windows"
                        )))
                    }
                };
                let spec = DomainSpec {
                    d: self.d,
                    holes,
                    label: label.to_string(),
                };
                let report = validate_domain(&spec);
                if !report.valid {
                    return Err(ConfigError::Domain(report.summary()));
                }
                BenedicksDomain::from_spec(&spec).map_err(|e| ConfigError::Domain(e.to_string()))?
            }
            _ => {
                return Err(ConfigError::Domain(
                    "give either `preset` or both `kind` and `boxes`".into(),
                ))
            }
        };
        Ok(domain.with_label(label))
    }

    /// The raw spec, for `domain validate`.
    pub fn spec(&self, label: &str) -> Option<DomainSpec> {
        let holes = match self.kind.as_deref()? {
            "finite_holes" => HoleSpec::FiniteHoles(self.boxes.clone()?),
            "finite_windows" => HoleSpec::FiniteWindows(self.boxes.clone()?),
            _ => return None,
        };
        Some(DomainSpec {
            d: self.d,
            holes,
            label: label.to_string(),
        })
    }
}

/// A time grid: explicit list or `per_decade` log-spaced points from `from` to `to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Times {
    List(Vec<f64>),
    Log { from: f64, to: f64, per_decade: u32 },
}

impl Times {
    pub fn resolve(&self) -> Result<Vec<f64>, ConfigError> {
        let v = match self {
            Times::List(v) => v.clone(),
            Times::Log { from, to, per_decade } => {
                if !(*from > 0.0 && to > from && *per_decade > 0) {
                    return Err(ConfigError::Invalid(format!(
                        "log grid needs 0 < from < to and per_decade > 0, got {from}, {to}, {per_decade}"
                    )));
                }
                let n = ((to / from).log10() * *per_decade as f64).round().max(1.0) as usize;
                let mut v: Vec<f64> = (0..=n).map(|k| from * (to / from).powf(k as f64 / n as f64)).collect();
                v[n] = *to;
                v
            }
        };
        if v.is_empty() || v.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(ConfigError::Invalid("times must be positive and finite".into()));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::Invalid("times must be strictly increasing".into()));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsConfig {
    pub x: Vec<Vec<f64>>,
    #[serde(default)]
    pub y: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub h: f64,
    pub delta_geo: f64,
    pub n_paths: u64,
    pub seed: u64,
    pub checkpoints: Times,
    /// Kernel estimate times.
    pub kernel_times: Times,
    /// Smoothing window; the default rule when absent.
    pub h_f: Option<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            h: 0.1,
            delta_geo: 1e-3,
            n_paths: 20_000,
            seed: 1,
            checkpoints: Times::Log {
                from: 0.5,
                to: 256.0,
                per_decade: 10,
            },
            kernel_times: Times::List(vec![1.0, 2.0, 4.0]),
            h_f: None,
        }
    }
}

impl McConfig {
    pub fn sim(&self, checkpoints: Vec<f64>) -> SimConfig {
        SimConfig {
            h: self.h,
            delta_geo: self.delta_geo,
            n_paths: self.n_paths,
            seed: self.seed,
            checkpoints,
            first_path: 0,
            record_endpoints: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdeConfig {
    #[serde(rename = "L")]
    pub l: f64,
    pub dx: f64,
    pub dt: f64,
    pub dt_growth: f64,
    pub t_grid: Times,
    pub t0: Option<f64>,
    /// Also solve the Laplace problems at `2·dx` and extrapolate linearly in `dx`.
    pub richardson: bool,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            l: 20.0,
            dx: 0.1,
            dt: 0.01,
            dt_growth: 0.0,
            t_grid: Times::List(vec![1.0, 2.0, 4.0, 8.0]),
            t0: None,
            richardson: false,
        }
    }
}

impl PdeConfig {
    pub fn heat(&self, record_line: bool) -> HeatOptions {
        HeatOptions {
            dt: self.dt,
            dt_growth: self.dt_growth,
            record_line,
            ..HeatOptions::default()
        }
    }

    /// Largest time for which the box edge is at least two diffusion
    /// lengths `√t` away from the origin.
    pub fn horizon(&self) -> f64 {
        (self.l / 2.0).powi(2)
    }

    pub fn check_horizon(&self, times: &[f64]) -> Result<(), ConfigError> {
        match times.iter().copied().find(|&t| t > self.horizon() * (1.0 + 1e-12)) {
            Some(t) => Err(ConfigError::Invalid(format!(
                "t = {t} exceeds the box horizon (L/2)² = {} for L = {}",
                self.horizon(),
                self.l
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSource {
    /// Diagonal PDE kernel `p_t(x, x)` at the first point.
    PdeKernel,
    /// Monte Carlo survival from the first point.
    McSurvival,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsymptoticsConfig {
    pub fit_window: (f64, f64),
    pub fit_source: FitSource,
    pub slope_tol: f64,
    pub slope_min: f64,
    pub t_mix: f64,
    pub min_decades: f64,
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        let c = ConeOptions::default();
        Self {
            fit_window: (10.0, 100.0),
            fit_source: FitSource::PdeKernel,
            slope_tol: c.slope_tol,
            slope_min: c.slope_min,
            t_mix: c.t_mix,
            min_decades: c.min_decades,
        }
    }
}

impl AsymptoticsConfig {
    pub fn cone(&self) -> ConeOptions {
        ConeOptions {
            slope_tol: self.slope_tol,
            slope_min: self.slope_min,
            t_mix: self.t_mix,
            min_decades: self.min_decades,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub solver_tol: f64,
    pub reflection_tol: f64,
    pub duhamel_tol: f64,
    pub limit_tol: f64,
    pub time_ratio_tol: f64,
    pub time_ratio_s: f64,
    pub lemma3_times: Times,
    pub lemma_a_times: Times,
    pub reflection_times: Times,
    pub duhamel_times: Times,
    /// Time at which `t^{1+d/2} p_t` is compared with its limit; the end of
    /// the PDE grid when absent.
    pub limit_kernel_time: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            solver_tol: 0.01,
            reflection_tol: 0.02,
            duhamel_tol: 0.05,
            limit_tol: 0.05,
            time_ratio_tol: 0.01,
            time_ratio_s: 1.0,
            lemma3_times: Times::List(vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 35.0, 50.0]),
            lemma_a_times: Times::List(vec![1.0, 2.0, 4.0]),
            reflection_times: Times::List(vec![1.0, 2.0, 4.0, 8.0]),
            duhamel_times: Times::List(vec![1.0, 2.0, 4.0]),
            limit_kernel_time: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub label: String,
    /// Output directory; not part of the hash.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    pub domain: DomainConfig,
    pub points: PointsConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub pde: PdeConfig,
    #[serde(default)]
    pub asymptotics: AsymptoticsConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(origin.to_path_buf(), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        Self::parse(&text, path)
    }

    pub fn domain(&self) -> Result<BenedicksDomain, ConfigError> {
        self.domain.build(&self.label)
    }

    fn points(&self, raw: &[Vec<f64>], what: &str) -> Result<Vec<Point>, ConfigError> {
        raw.iter()
            .map(|c| {
                if c.len() != self.domain.d {
                    return Err(ConfigError::Invalid(format!(
                        "{what} point {c:?} has dimension {}, domain has {}",
                        c.len(),
                        self.domain.d
                    )));
                }
                Point::new(c.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))
            })
            .collect()
    }

    pub fn xs(&self) -> Result<Vec<Point>, ConfigError> {
        let v = self.points(&self.points.x, "x")?;
        if v.is_empty() {
            return Err(ConfigError::Invalid("points.x must not be empty".into()));
        }
        Ok(v)
    }

    pub fn ys(&self) -> Result<Vec<Point>, ConfigError> {
        self.points(&self.points.y, "y")
    }

    /// Checks everything that can be checked without running anything.
    pub fn validate(&self) -> Result<BenedicksDomain, ConfigError> {
        let domain = self.domain()?;
        let xs = self.xs()?;
        let ys = self.ys()?;
        for p in xs.iter().chain(&ys) {
            if !domain.contains(p).map_err(|e| ConfigError::Invalid(e.to_string()))? {
                return Err(ConfigError::Invalid(format!("point {p} lies on a hole")));
            }
        }
        let checkpoints = self.mc.checkpoints.resolve()?;
        self.mc.sim(checkpoints).validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.mc.kernel_times.resolve()?;
        if let Some(h_f) = self.mc.h_f {
            if !(h_f > 0.0) {
                return Err(ConfigError::Invalid(format!("h_f must be positive, got {h_f}")));
            }
        }
        let p = &self.pde;
        if !(p.l > 0.0 && p.dx > 0.0 && p.dt > 0.0 && p.dt_growth >= 0.0) {
            return Err(ConfigError::Invalid("pde: L, dx and dt must be positive".into()));
        }
        let ratio = p.l / p.dx;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(ConfigError::Invalid(format!("pde: L/dx = {ratio} is not an integer")));
        }
        let t_grid = p.t_grid.resolve()?;
        if domain.d() == 2 && !domain.is_two_halfspace() {
            p.check_horizon(&t_grid)?;
        }
        let (lo, hi) = self.asymptotics.fit_window;
        if !(lo > 0.0 && hi > lo) {
            return Err(ConfigError::Invalid(format!("fit window [{lo}, {hi}] is empty")));
        }
        let v = &self.verify;
        for t in [
            &v.lemma3_times,
            &v.lemma_a_times,
            &v.reflection_times,
            &v.duhamel_times,
        ] {
            t.resolve()?;
        }
        if !(v.time_ratio_s >= 0.0) {
            return Err(ConfigError::Invalid("time_ratio_s must be nonnegative".into()));
        }
        Ok(domain)
    }

    /// SHA-256 of the canonical JSON serialization (output directory excluded).
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The reference configurations shipped with the crate, as `(file name, text)`.
pub const BUNDLED: [(&str, &str); 5] = [
    ("two_halfspace.cfg", include_str!("../configs/two_halfspace.cfg")),
    ("slit_plane.cfg", include_str!("../configs/slit_plane.cfg")),
    ("segment_exterior.cfg", include_str!("../configs/segment_exterior.cfg")),
    ("window_gap.cfg", include_str!("../configs/window_gap.cfg")),
    ("shrinking_windows.cfg", include_str!("../configs/shrinking_windows.cfg")),
];

pub fn bundled(name: &str) -> Option<ExperimentConfig> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name || n.trim_end_matches(".cfg") == name)
        .map(|(n, text)| ExperimentConfig::parse(text, Path::new(n)).expect("bundled configs parse"))
}
