//! Killed Brownian motion in a Benedicks domain.
//!
//! Increments are exact Gaussians with variance `h` per coordinate (generator
//! `½Δ`). Between two macro-step endpoints the `x_d` coordinate is a
//! Brownian bridge, so whether it touched the hyperplane is decided exactly
//! with the reflection-principle probability `exp(-2ab/h)`.
//!
//! A touch only kills if it happens on a hole. When the tangential footprint
//! of a sub-interval (endpoints widened by six standard deviations of the
//! bridge) lies entirely in the holes or entirely in the windows, the
//! decision needs no localization. Otherwise the interval is bisected by
//! sampling the bridge midpoint, in time order, until the sub-interval's
//! spatial extent drops below `delta_geo`; the crossing point found there is
//! classified directly. Boundary points of windows count as holes.

use crate::estimators::{survival_estimate, SurvivalCurve};
use crate::geometry::{BenedicksDomain, GeometryError, HyperplaneClass, Point, RegionClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Largest supported dimension for the sampler's stack buffers.
pub const MAX_D: usize = 8;
/// Refinement depth cap; reaching it kills the path.
pub const MAX_DEPTH: u32 = 64;
/// Crossings with `2ab/h` above this (probability < 2.3e-16) are ignored.
const PRUNE_EXPONENT: f64 = 36.0;
/// Tangential widening of a sub-interval footprint, in bridge standard deviations.
const FOOTPRINT_SIGMAS: f64 = 6.0;
const PATHS_PER_CHUNK: u64 = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("starting point {0} is not in the domain (it lies on a hole)")]
    StartOnHole(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("dimension {0} exceeds the sampler limit {MAX_D}")]
    DimensionTooLarge(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Macro time step.
    pub h: f64,
    /// Crossing-localization tolerance (length).
    pub delta_geo: f64,
    /// Number of paths.
    pub n_paths: u64,
    pub seed: u64,
    /// Strictly increasing positive times.
    pub checkpoints: Vec<f64>,
    /// Index of the first path; paths use substreams `first_path..first_path + n_paths`.
    #[serde(default)]
    pub first_path: u64,
    /// Keep surviving positions at every checkpoint.
    #[serde(default = "default_true")]
    pub record_endpoints: bool,
}

fn default_true() -> bool {
    true
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            h: 1e-2,
            delta_geo: 1e-4,
            n_paths: 10_000,
            seed: 0x5eed,
            checkpoints: vec![1.0],
            first_path: 0,
            record_endpoints: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), McError> {
        let bad = |m: String| Err(McError::InvalidConfig(m));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if !(self.delta_geo > 0.0 && self.delta_geo.is_finite()) {
            return bad(format!("delta_geo must be positive, got {}", self.delta_geo));
        }
        if self.n_paths == 0 {
            return bad("ensemble size must be at least 1".into());
        }
        if self.checkpoints.is_empty() {
            return bad("at least one checkpoint is required".into());
        }
        if !(self.checkpoints[0] > 0.0) || self.checkpoints.iter().any(|t| !t.is_finite()) {
            return bad("checkpoints must be positive and finite".into());
        }
        if self.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            return bad("checkpoints must be strictly increasing".into());
        }
        Ok(())
    }

    /// Hash of everything that determines the law of one path: domain,
    /// start, step parameters, seed and checkpoint grid. The ensemble size
    /// and path offset are excluded so that partial runs can be merged.
    pub fn config_hash(&self, domain: &BenedicksDomain, x0: &Point) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            domain: &'a BenedicksDomain,
            x0: &'a Point,
            h: f64,
            delta_geo: f64,
            seed: u64,
            checkpoints: &'a [f64],
        }
        let canon = Canonical {
            domain,
            x0,
            h: self.h,
            delta_geo: self.delta_geo,
            seed: self.seed,
            checkpoints: &self.checkpoints,
        };
        let bytes = serde_json::to_vec(&canon).expect("canonical config serializes");
        hex_digest(&bytes)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `P(bridge from a to b over time h hits 0)`: 1 if `ab ≤ 0`, else `exp(-2ab/h)`.
pub fn bridge_zero_crossing_prob(a: f64, b: f64, h: f64) -> Result<f64, McError> {
    if !(h > 0.0) {
        return Err(McError::InvalidConfig(format!("bridge duration must be positive, got {h}")));
    }
    Ok(crossing_prob(a, b, h))
}

#[inline]
fn crossing_prob(a: f64, b: f64, h: f64) -> f64 {
    if a * b <= 0.0 {
        1.0
    } else {
        (-2.0 * a * b / h).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepResult {
    Alive(Point),
    /// Killed at `time_offset` into the step, at a hyperplane point.
    Killed(f64, Point),
}

/// Counters for localization work, reported with every ensemble.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Sub-intervals that needed bisection.
    pub bisections: u64,
    /// Crossings resolved by classifying a localized point.
    pub localized: u64,
    /// Times the depth cap was reached (treated as kills).
    pub depth_cap_hits: u64,
}

impl Diagnostics {
    fn add(&mut self, o: &Diagnostics) {
        self.bisections += o.bisections;
        self.localized += o.localized;
        self.depth_cap_hits += o.depth_cap_hits;
    }
}

type Buf = [f64; MAX_D];

struct Kill {
    offset: f64,
    at: Buf,
}

/// Per-path stepping engine over stack buffers.
struct Stepper<'a> {
    domain: &'a BenedicksDomain,
    d: usize,
    delta_geo: f64,
    diag: Diagnostics,
}

impl<'a> Stepper<'a> {
    fn new(domain: &'a BenedicksDomain, delta_geo: f64) -> Self {
        Self {
            domain,
            d: domain.d(),
            delta_geo,
            diag: Diagnostics::default(),
        }
    }

    /// Advances `pos` by `dt`; returns the kill if one occurred.
    fn advance<R: Rng>(&mut self, pos: &mut Buf, dt: f64, rng: &mut R) -> Option<Kill> {
        let d = self.d;
        let sd = dt.sqrt();
        let mut q = *pos;
        for c in q.iter_mut().take(d) {
            let z: f64 = rng.sample(StandardNormal);
            *c += sd * z;
        }
        let (a, b) = (pos[d - 1], q[d - 1]);
        if a * b > 0.0 && 2.0 * a * b / dt > PRUNE_EXPONENT {
            *pos = q;
            return None;
        }
        let kill = self.resolve(pos, &q, 0.0, dt, 0, rng);
        if kill.is_none() {
            *pos = q;
        }
        kill
    }

    fn resolve<R: Rng>(
        &mut self,
        p: &Buf,
        q: &Buf,
        t0: f64,
        dur: f64,
        depth: u32,
        rng: &mut R,
    ) -> Option<Kill> {
        let d = self.d;
        let (a, b) = (p[d - 1], q[d - 1]);
        let certain = a * b <= 0.0;
        if !certain && 2.0 * a * b / dur > PRUNE_EXPONENT {
            return None;
        }
        let sd = dur.sqrt();
        let margin = FOOTPRINT_SIGMAS * sd;
        let mut lo = [0.0; MAX_D];
        let mut hi = [0.0; MAX_D];
        let mut extent = (a - b).abs();
        for i in 0..d - 1 {
            lo[i] = p[i].min(q[i]) - margin;
            hi[i] = p[i].max(q[i]) + margin;
            extent = extent.max((p[i] - q[i]).abs());
        }
        extent += sd;
        match self.domain.classify_region(&lo[..d - 1], &hi[..d - 1]) {
            RegionClass::Windows => None,
            RegionClass::Holes => {
                if certain || rng.random::<f64>() < crossing_prob(a, b, dur) {
                    Some(self.crossing_point(p, q, t0, dur))
                } else {
                    None
                }
            }
            RegionClass::Mixed => {
                if depth >= MAX_DEPTH {
                    self.diag.depth_cap_hits += 1;
                    if certain || rng.random::<f64>() < crossing_prob(a, b, dur) {
                        return Some(self.crossing_point(p, q, t0, dur));
                    }
                    return None;
                }
                if extent < self.delta_geo {
                    if certain || rng.random::<f64>() < crossing_prob(a, b, dur) {
                        self.diag.localized += 1;
                        let k = self.crossing_point(p, q, t0, dur);
                        return match self.domain.classify_unchecked(&k.at[..d - 1]) {
                            HyperplaneClass::InHoles => Some(k),
                            HyperplaneClass::InD => None,
                        };
                    }
                    return None;
                }
                self.diag.bisections += 1;
                let half = 0.5 * dur;
                let msd = 0.5 * sd;
                let mut m = [0.0; MAX_D];
                for i in 0..d {
                    let z: f64 = rng.sample(StandardNormal);
                    m[i] = 0.5 * (p[i] + q[i]) + msd * z;
                }
                self.resolve(p, &m, t0, half, depth + 1, rng)
                    .or_else(|| self.resolve(&m, q, t0 + half, half, depth + 1, rng))
            }
        }
    }

    /// Linear interpolation to `x_d = 0` within a sub-interval.
    fn crossing_point(&self, p: &Buf, q: &Buf, t0: f64, dur: f64) -> Kill {
        let d = self.d;
        let (a, b) = (p[d - 1].abs(), q[d - 1].abs());
        let frac = if a + b > 0.0 { a / (a + b) } else { 0.5 };
        let mut at = [0.0; MAX_D];
        for i in 0..d - 1 {
            at[i] = p[i] + frac * (q[i] - p[i]);
        }
        Kill {
            offset: t0 + frac * dur,
            at,
        }
    }
}

fn to_buf(x: &Point) -> Result<Buf, McError> {
    if x.dim() > MAX_D {
        return Err(McError::DimensionTooLarge(x.dim()));
    }
    let mut b = [0.0; MAX_D];
    b[..x.dim()].copy_from_slice(x.coords());
    Ok(b)
}

fn from_buf(b: &Buf, d: usize) -> Point {
    Point::new(b[..d].to_vec()).expect("sampler positions stay finite")
}

fn check_start(domain: &BenedicksDomain, x0: &Point) -> Result<(), McError> {
    if domain.d() > MAX_D {
        return Err(McError::DimensionTooLarge(domain.d()));
    }
    if !domain.contains(x0)? {
        return Err(McError::StartOnHole(x0.to_string()));
    }
    Ok(())
}

/// One macro step from `position` (which must be in the domain).
pub fn advance_step<R: Rng>(
    domain: &BenedicksDomain,
    position: &Point,
    h: f64,
    delta_geo: f64,
    rng: &mut R,
) -> Result<(StepResult, Diagnostics), McError> {
    check_start(domain, position)?;
    if !(h > 0.0) || !(delta_geo > 0.0) {
        return Err(McError::InvalidConfig("h and delta_geo must be positive".into()));
    }
    let mut stepper = Stepper::new(domain, delta_geo);
    let mut pos = to_buf(position)?;
    let d = domain.d();
    let res = match stepper.advance(&mut pos, h, rng) {
        None => StepResult::Alive(from_buf(&pos, d)),
        Some(k) => StepResult::Killed(k.offset, from_buf(&k.at, d)),
    };
    Ok((res, stepper.diag))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub killed: bool,
    pub kill_time: Option<f64>,
    pub kill_location: Option<Point>,
    /// Positions at each checkpoint reached before killing.
    pub snapshots: Vec<Point>,
}

/// Random stream of path `stream_id`.
pub fn path_rng(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Runs one path through all checkpoints, reporting each surviving position.
fn trace_path(
    stepper: &mut Stepper<'_>,
    x0: &Buf,
    cfg: &SimConfig,
    stream_id: u64,
    mut on_checkpoint: impl FnMut(usize, &Buf),
) -> Option<(f64, Buf)> {
    let mut rng = path_rng(cfg.seed, stream_id);
    let mut pos = *x0;
    let mut t = 0.0;
    for (k, &tc) in cfg.checkpoints.iter().enumerate() {
        let steps = ((tc - t) / cfg.h - 1e-9).ceil().max(1.0) as u64;
        for s in 0..steps {
            let start = t + s as f64 * cfg.h;
            let dt = if s + 1 == steps { tc - start } else { cfg.h };
            if let Some(kill) = stepper.advance(&mut pos, dt, &mut rng) {
                return Some((start + kill.offset, kill.at));
            }
        }
        t = tc;
        on_checkpoint(k, &pos);
    }
    None
}

pub fn simulate_path(
    domain: &BenedicksDomain,
    x0: &Point,
    cfg: &SimConfig,
    stream_id: u64,
) -> Result<PathOutcome, McError> {
    cfg.validate()?;
    check_start(domain, x0)?;
    let d = domain.d();
    let mut stepper = Stepper::new(domain, cfg.delta_geo);
    let mut snapshots = Vec::new();
    let start = to_buf(x0)?;
    let kill = trace_path(&mut stepper, &start, cfg, stream_id, |_, pos| {
        snapshots.push(from_buf(pos, d))
    });
    Ok(match kill {
        None => PathOutcome {
            killed: false,
            kill_time: None,
            kill_location: None,
            snapshots,
        },
        Some((time, at)) => PathOutcome {
            killed: true,
            kill_time: Some(time),
            kill_location: Some(from_buf(&at, d)),
            snapshots,
        },
    })
}

/// Surviving positions at one checkpoint, ordered by path index.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EndpointSet {
    pub ids: Vec<u64>,
    /// Row-major `ids.len() × d`.
    pub coords: Vec<f64>,
}

impl EndpointSet {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn iter(&self, d: usize) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(d)
    }

    fn merge(&self, other: &EndpointSet, d: usize) -> EndpointSet {
        let mut out = EndpointSet {
            ids: Vec::with_capacity(self.len() + other.len()),
            coords: Vec::with_capacity(self.coords.len() + other.coords.len()),
        };
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let take_self = j >= other.len() || (i < self.len() && self.ids[i] < other.ids[j]);
            if take_self {
                out.ids.push(self.ids[i]);
                out.coords.extend_from_slice(&self.coords[i * d..(i + 1) * d]);
                i += 1;
            } else {
                out.ids.push(other.ids[j]);
                out.coords.extend_from_slice(&other.coords[j * d..(j + 1) * d]);
                j += 1;
            }
        }
        out
    }
}

/// Result of a batch of paths from one starting point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub d: usize,
    pub x0: Point,
    pub checkpoints: Vec<f64>,
    pub config_hash: String,
    /// Disjoint half-open path-index ranges covered, sorted.
    pub path_ranges: Vec<(u64, u64)>,
    pub n_paths: u64,
    /// Survivor counts per checkpoint.
    pub survivors: Vec<u64>,
    /// Per-checkpoint endpoints (empty when not recorded).
    pub endpoints: Vec<EndpointSet>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MergeError {
    #[error("config hash mismatch: {0} vs {1}")]
    ConfigMismatch(String, String),
    #[error("path ranges overlap")]
    Overlap,
    #[error("{0}")]
    Incompatible(String),
}

impl Ensemble {
    /// An ensemble with no paths; the identity for [`Ensemble::merge`].
    pub fn empty(d: usize, x0: Point, checkpoints: Vec<f64>, config_hash: String, record: bool) -> Self {
        let k = checkpoints.len();
        Self {
            d,
            x0,
            checkpoints,
            config_hash,
            path_ranges: Vec::new(),
            n_paths: 0,
            survivors: vec![0; k],
            endpoints: if record { vec![EndpointSet::default(); k] } else { Vec::new() },
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn survival_curve(&self) -> SurvivalCurve {
        survival_estimate(self)
    }

    pub fn checkpoint_index(&self, t: f64) -> Option<usize> {
        self.checkpoints
            .iter()
            .position(|&c| (c - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    /// Pools two partial ensembles of the same configuration. The result is
    /// independent of argument order and equals a single run over the union
    /// of the path ranges.
    pub fn merge(&self, other: &Ensemble) -> Result<Ensemble, MergeError> {
        if self.config_hash != other.config_hash {
            return Err(MergeError::ConfigMismatch(
                self.config_hash.clone(),
                other.config_hash.clone(),
            ));
        }
        if self.endpoints.is_empty() != other.endpoints.is_empty()
            && self.n_paths > 0
            && other.n_paths > 0
        {
            return Err(MergeError::Incompatible(
                "one ensemble recorded endpoints and the other did not".into(),
            ));
        }
        let mut ranges: Vec<(u64, u64)> = self
            .path_ranges
            .iter()
            .chain(&other.path_ranges)
            .copied()
            .collect();
        ranges.sort_unstable();
        if ranges.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(MergeError::Overlap);
        }
        let mut coalesced: Vec<(u64, u64)> = Vec::new();
        for r in ranges {
            match coalesced.last_mut() {
                Some(last) if last.1 == r.0 => last.1 = r.1,
                _ => coalesced.push(r),
            }
        }
        let endpoints = if self.n_paths == 0 {
            other.endpoints.clone()
        } else if other.n_paths == 0 {
            self.endpoints.clone()
        } else {
            self.endpoints
                .iter()
                .zip(&other.endpoints)
                .map(|(a, b)| a.merge(b, self.d))
                .collect()
        };
        let mut diagnostics = self.diagnostics;
        diagnostics.add(&other.diagnostics);
        Ok(Ensemble {
            d: self.d,
            x0: self.x0.clone(),
            checkpoints: self.checkpoints.clone(),
            config_hash: self.config_hash.clone(),
            path_ranges: coalesced,
            n_paths: self.n_paths + other.n_paths,
            survivors: self
                .survivors
                .iter()
                .zip(&other.survivors)
                .map(|(a, b)| a + b)
                .collect(),
            endpoints,
            diagnostics,
        })
    }
}

struct Chunk {
    survivors: Vec<u64>,
    endpoints: Vec<EndpointSet>,
    diag: Diagnostics,
}

/// Runs `cfg.n_paths` independent paths from `x0` on the current rayon pool.
/// The output does not depend on the number of workers.
pub fn run_ensemble(
    domain: &BenedicksDomain,
    x0: &Point,
    cfg: &SimConfig,
) -> Result<Ensemble, McError> {
    cfg.validate()?;
    check_start(domain, x0)?;
    let d = domain.d();
    let k = cfg.checkpoints.len();
    let start = to_buf(x0)?;
    let first = cfg.first_path;
    let end = first + cfg.n_paths;
    let n_chunks = cfg.n_paths.div_ceil(PATHS_PER_CHUNK);

    let chunks: Vec<Chunk> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = first + c * PATHS_PER_CHUNK;
            let hi = (lo + PATHS_PER_CHUNK).min(end);
            let mut stepper = Stepper::new(domain, cfg.delta_geo);
            let mut survivors = vec![0u64; k];
            let mut endpoints = if cfg.record_endpoints {
                vec![EndpointSet::default(); k]
            } else {
                Vec::new()
            };
            for id in lo..hi {
                trace_path(&mut stepper, &start, cfg, id, |j, pos| {
                    survivors[j] += 1;
                    if let Some(set) = endpoints.get_mut(j) {
                        set.ids.push(id);
                        set.coords.extend_from_slice(&pos[..d]);
                    }
                });
            }
            Chunk {
                survivors,
                endpoints,
                diag: stepper.diag,
            }
        })
        .collect();

    let mut ens = Ensemble::empty(
        d,
        x0.clone(),
        cfg.checkpoints.clone(),
        cfg.config_hash(domain, x0),
        cfg.record_endpoints,
    );
    ens.n_paths = cfg.n_paths;
    ens.path_ranges = vec![(first, end)];
    for chunk in chunks {
        for (s, c) in ens.survivors.iter_mut().zip(&chunk.survivors) {
            *s += c;
        }
        for (set, part) in ens.endpoints.iter_mut().zip(chunk.endpoints) {
            set.ids.extend(part.ids);
            set.coords.extend(part.coords);
        }
        ens.diagnostics.add(&chunk.diag);
    }
    Ok(ens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{HoleSpec, HyperBox};
    use crate::kernels::halfspace_survival;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn bridge_examples() {
        assert_eq!(bridge_zero_crossing_prob(1.0, -1.0, 0.3).unwrap(), 1.0);
        assert_eq!(bridge_zero_crossing_prob(0.0, 2.0, 0.3).unwrap(), 1.0);
        let v = bridge_zero_crossing_prob(1.0, 1.0, 1.0).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
        assert!(bridge_zero_crossing_prob(10.0, 10.0, 1.0).unwrap() < 1e-80);
        assert!(bridge_zero_crossing_prob(1.0, 1.0, 0.0).is_err());
    }

    /// Oracle: discretely monitored bridge with the Broadie–Glasserman
    /// continuity correction (barrier shifted by 0.5826·√dt).
    #[test]
    fn bridge_formula_against_fine_discretization() {
        let (a, b, h) = (1.0f64, 1.0f64, 1.0f64);
        let steps = 1000usize;
        let dt = h / steps as f64;
        let shift = 0.5826 * dt.sqrt();
        let n = 20_000;
        let mut rng = path_rng(99, 0);
        let mut hits = 0;
        let mut w = vec![0.0; steps + 1];
        for _ in 0..n {
            for k in 1..=steps {
                let z: f64 = rng.sample(StandardNormal);
                w[k] = w[k - 1] + dt.sqrt() * z;
            }
            let wend = w[steps];
            let hit = (0..=steps).any(|k| {
                let s = k as f64 * dt;
                let x = a + (b - a) * s / h + w[k] - s / h * wend;
                x <= shift
            });
            if hit {
                hits += 1;
            }
        }
        let est = hits as f64 / n as f64;
        let exact = bridge_zero_crossing_prob(a, b, h).unwrap();
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((est - exact).abs() < 4.0 * se, "{est} vs {exact} (se {se})");
    }

    #[test]
    fn two_halfspace_kills_every_crossing() {
        let dom = BenedicksDomain::two_halfspace(2);
        let mut rng = path_rng(1, 1);
        let mut killed = 0;
        for _ in 0..2000 {
            let (r, _) = advance_step(&dom, &p(&[0.0, 0.05]), 0.01, 1e-4, &mut rng).unwrap();
            if let StepResult::Killed(off, at) = r {
                killed += 1;
                assert!((0.0..=0.01).contains(&off));
                assert_eq!(at.xd(), 0.0);
            }
        }
        // P(kill) = P(min of BM over 0.01 below -0.05) = 2Φ(-0.5) ≈ 0.617.
        let frac = killed as f64 / 2000.0;
        assert!((frac - 0.617).abs() < 0.05, "{frac}");
    }

    #[test]
    fn far_from_hyperplane_is_alive() {
        let dom = BenedicksDomain::segment_exterior(1.0);
        let mut rng = path_rng(2, 0);
        for _ in 0..1000 {
            let (r, diag) = advance_step(&dom, &p(&[0.0, 3.0]), 0.01, 1e-4, &mut rng).unwrap();
            assert!(matches!(r, StepResult::Alive(_)));
            assert_eq!(diag, Diagnostics::default());
        }
    }

    #[test]
    fn start_on_hole_rejected() {
        let dom = BenedicksDomain::slit_plane();
        let cfg = SimConfig::default();
        assert!(matches!(
            simulate_path(&dom, &p(&[1.0, 0.0]), &cfg, 0),
            Err(McError::StartOnHole(_))
        ));
        // On the hyperplane inside D is allowed.
        assert!(simulate_path(&dom, &p(&[-1.0, 0.0]), &cfg, 0).is_ok());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig { checkpoints: vec![1.0, 1.0], ..SimConfig::default() };
        assert!(cfg.validate().is_err());
        cfg.checkpoints = vec![];
        assert!(cfg.validate().is_err());
        cfg = SimConfig {
            h: 0.0,
            ..SimConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg = SimConfig {
            n_paths: 0,
            ..SimConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn path_determinism_and_kill_location() {
        let dom = BenedicksDomain::segment_exterior(1.0);
        let cfg = SimConfig {
            checkpoints: vec![0.5, 1.0, 2.0],
            ..SimConfig::default()
        };
        let mut killed = 0;
        for id in 0..300 {
            let a = simulate_path(&dom, &p(&[0.3, 0.2]), &cfg, id).unwrap();
            let b = simulate_path(&dom, &p(&[0.3, 0.2]), &cfg, id).unwrap();
            assert_eq!(a, b);
            if a.killed {
                killed += 1;
                let loc = a.kill_location.unwrap();
                assert_eq!(loc.xd(), 0.0);
                assert_eq!(
                    dom.classify_hyperplane_point(loc.tangential()).unwrap(),
                    HyperplaneClass::InHoles
                );
                let kt = a.kill_time.unwrap();
                let reached = cfg.checkpoints.iter().filter(|&&c| c < kt).count();
                assert_eq!(a.snapshots.len(), reached);
            } else {
                assert_eq!(a.snapshots.len(), 3);
            }
        }
        assert!(killed > 50);
    }

    #[test]
    fn halfspace_survival_small_ensemble() {
        let dom = BenedicksDomain::two_halfspace(2);
        let cfg = SimConfig {
            n_paths: 20_000,
            checkpoints: vec![0.25, 1.0],
            h: 0.05,
            record_endpoints: false,
            ..SimConfig::default()
        };
        let ens = run_ensemble(&dom, &p(&[0.0, 1.0]), &cfg).unwrap();
        let curve = ens.survival_curve();
        for row in &curve.rows {
            let exact = halfspace_survival(row.t, 1.0).unwrap();
            assert!(
                (row.estimate() - exact).abs() < 3.5 * row.stderr(),
                "t={} {} vs {}",
                row.t,
                row.estimate(),
                exact
            );
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let dom = BenedicksDomain::window_gap(1.0);
        let cfg = SimConfig {
            n_paths: 3000,
            checkpoints: vec![0.5, 1.0],
            ..SimConfig::default()
        };
        let x0 = p(&[0.2, 0.3]);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(&dom, &x0, &cfg).unwrap())
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a, b);
        assert!(a.diagnostics.localized > 0);
    }

    #[test]
    fn split_runs_merge_to_pooled_run() {
        let dom = BenedicksDomain::slit_plane();
        let x0 = p(&[0.0, 0.5]);
        let cfg = SimConfig {
            n_paths: 2000,
            checkpoints: vec![0.5, 1.0],
            ..SimConfig::default()
        };
        let pooled = run_ensemble(&dom, &x0, &cfg).unwrap();
        let first = run_ensemble(&dom, &x0, &SimConfig { n_paths: 1200, ..cfg.clone() }).unwrap();
        let second = run_ensemble(
            &dom,
            &x0,
            &SimConfig {
                n_paths: 800,
                first_path: 1200,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_eq!(first.merge(&second).unwrap(), pooled);
        assert_eq!(second.merge(&first).unwrap(), pooled);
        let empty = Ensemble::empty(2, x0.clone(), cfg.checkpoints.clone(), pooled.config_hash.clone(), true);
        assert_eq!(pooled.merge(&empty).unwrap(), pooled);
        assert_eq!(first.merge(&first), Err(MergeError::Overlap));
        let other = run_ensemble(&dom, &x0, &SimConfig { seed: 7, ..cfg.clone() }).unwrap();
        assert!(matches!(pooled.merge(&other), Err(MergeError::ConfigMismatch(..))));
    }

    #[test]
    fn enlarging_holes_cannot_raise_survival() {
        // Coupled seeds: same paths, larger hole set.
        let small = BenedicksDomain::segment_exterior(0.5);
        let large = BenedicksDomain::new(
            2,
            HoleSpec::FiniteHoles(vec![HyperBox::interval(-0.5, 0.5), HyperBox::interval(1.0, 3.0)]),
            "",
        )
        .unwrap();
        let cfg = SimConfig {
            n_paths: 4000,
            checkpoints: vec![0.5, 2.0],
            record_endpoints: false,
            ..SimConfig::default()
        };
        let x0 = p(&[0.8, 0.4]);
        let a = run_ensemble(&small, &x0, &cfg).unwrap().survival_curve();
        let b = run_ensemble(&large, &x0, &cfg).unwrap().survival_curve();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert!(rb.estimate() <= ra.estimate() + 3.0 * ra.stderr());
        }
    }

    #[test]
    fn mirror_start_gives_same_survival() {
        let dom = BenedicksDomain::window_gap(1.0);
        let cfg = SimConfig {
            n_paths: 4000,
            checkpoints: vec![1.0],
            record_endpoints: false,
            ..SimConfig::default()
        };
        let up = run_ensemble(&dom, &p(&[0.5, 0.5]), &cfg).unwrap().survival_curve();
        let down = run_ensemble(&dom, &p(&[0.5, -0.5]), &cfg).unwrap().survival_curve();
        let (u, w) = (&up.rows[0], &down.rows[0]);
        let se = (u.stderr().powi(2) + w.stderr().powi(2)).sqrt();
        assert!((u.estimate() - w.estimate()).abs() < 3.0 * se);
    }
}
