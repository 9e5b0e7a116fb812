//! Homotopy comparison of space-time trajectories.
//!
//! Three interchangeable backends implement the comparison function:
//! H-signature loop integrals around obstacle skeletons, winding numbers of
//! the robot-obstacle relative angle, and uniform visibility deformation.
//! Per-obstacle invariants of open trajectories are cached on the trajectory
//! itself, keyed by the scene they were evaluated in.

mod hsignature;
mod uvd;
mod winding;

pub use hsignature::{segment_field, segment_pair_integral, ObstacleSkeleton, SKELETON_EPS, TOL_H};
pub use uvd::uvd_equivalent;
pub use winding::winding_number;

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Backend, ObstaclePrediction, PlannerConfig, SpaceTimePoint, WindingRule};

/// Distance below which a field evaluation is treated as singular (m).
pub const DELTA_SING: f64 = 1e-6;
/// Lateral perturbation applied to an endpoint connector on singular evaluations (m).
pub const CONNECTOR_PERTURBATION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomotopyError {
    #[error("field evaluation within {0:e} m of a skeleton segment")]
    Singular(f64),
    #[error("loop integral {value} for obstacle {obstacle} is not an integer")]
    Indeterminate { obstacle: u64, value: f64 },
    #[error("robot coincides with obstacle {0} centre; relative angle undefined")]
    UndefinedAngle(u64),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum InvariantKind {
    HSignature,
    Winding,
}

type CacheKey = (u64, usize, InvariantKind);

/// Piecewise-linear space-time path with strictly increasing time.
#[derive(Debug)]
pub struct PolylineTrajectory {
    points: Vec<SpaceTimePoint>,
    cache: Mutex<HashMap<CacheKey, f64>>,
}

impl Clone for PolylineTrajectory {
    fn clone(&self) -> Self {
        PolylineTrajectory { points: self.points.clone(), cache: Mutex::new(self.cache.lock().unwrap().clone()) }
    }
}

impl PartialEq for PolylineTrajectory {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl Serialize for PolylineTrajectory {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.points.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolylineTrajectory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pts = Vec::<SpaceTimePoint>::deserialize(d)?;
        PolylineTrajectory::new(pts).map_err(serde::de::Error::custom)
    }
}

impl PolylineTrajectory {
    pub fn new(points: Vec<SpaceTimePoint>) -> Result<Self, HomotopyError> {
        if points.len() < 2 {
            return Err(HomotopyError::InvalidTrajectory("needs at least two points".into()));
        }
        if !points.windows(2).all(|w| w[1].t > w[0].t) {
            return Err(HomotopyError::InvalidTrajectory("time must increase strictly".into()));
        }
        Ok(PolylineTrajectory { points, cache: Mutex::new(HashMap::new()) })
    }

    /// Builds a trajectory from positions sampled at `t_k = k dt`.
    pub fn from_positions(positions: &[[f64; 2]], dt: f64) -> Result<Self, HomotopyError> {
        Self::new(positions.iter().enumerate().map(|(k, p)| SpaceTimePoint::new(p[0], p[1], k as f64 * dt)).collect())
    }

    pub fn points(&self) -> &[SpaceTimePoint] {
        &self.points
    }

    pub fn start(&self) -> SpaceTimePoint {
        self.points[0]
    }

    pub fn end(&self) -> SpaceTimePoint {
        *self.points.last().unwrap()
    }

    /// Spatial (x, y) length.
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].dist_xy(&w[1])).sum()
    }

    /// Position at time `t`, held constant outside the time span.
    pub fn position_at(&self, t: f64) -> [f64; 2] {
        let p = &self.points;
        if t <= p[0].t {
            return p[0].pos();
        }
        if t >= p[p.len() - 1].t {
            return p[p.len() - 1].pos();
        }
        let i = p.partition_point(|q| q.t <= t).saturating_sub(1).min(p.len() - 2);
        let (a, b) = (p[i], p[i + 1]);
        let w = (t - a.t) / (b.t - a.t);
        [a.x + w * (b.x - a.x), a.y + w * (b.y - a.y)]
    }

    /// Resamples at `n + 1` uniform times over `[t0, t1]`.
    pub fn resample(&self, t0: f64, t1: f64, n: usize) -> Vec<SpaceTimePoint> {
        (0..=n)
            .map(|k| {
                let t = t0 + (t1 - t0) * k as f64 / n as f64;
                let p = self.position_at(t);
                SpaceTimePoint::new(p[0], p[1], t)
            })
            .collect()
    }

    pub fn clear_cache(&self) {
        self.cache.lock().unwrap().clear();
    }

    fn cached(&self, key: CacheKey, use_cache: bool, f: impl FnOnce() -> Result<f64, HomotopyError>) -> Result<f64, HomotopyError> {
        if use_cache {
            if let Some(v) = self.cache.lock().unwrap().get(&key) {
                return Ok(*v);
            }
        }
        let v = f()?;
        if use_cache {
            self.cache.lock().unwrap().insert(key, v);
        }
        Ok(v)
    }
}

/// Identifier tied to a homotopy class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyId {
    pub id: u64,
    pub backend: Backend,
    /// Per-obstacle invariants of the trajectory that defined the class.
    pub invariants: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomotopyParams {
    pub lambda_pass: f64,
    pub winding_rule: WindingRule,
    pub uvd_samples: usize,
    pub winding_samples: usize,
}

impl HomotopyParams {
    pub fn from_config(cfg: &PlannerConfig) -> Self {
        HomotopyParams {
            lambda_pass: cfg.lambda_pass,
            winding_rule: cfg.winding_rule,
            uvd_samples: cfg.uvd_samples,
            winding_samples: cfg.horizon_steps,
        }
    }
}

impl Default for HomotopyParams {
    fn default() -> Self {
        HomotopyParams::from_config(&PlannerConfig::default())
    }
}

/// Obstacle predictions of one planning iteration with their skeletons.
#[derive(Debug, Clone)]
pub struct HomotopyScene {
    key: u64,
    obstacles: Vec<ObstaclePrediction>,
    skeletons: Vec<ObstacleSkeleton>,
    dt: f64,
    pub params: HomotopyParams,
}

impl HomotopyScene {
    pub fn new(obstacles: Vec<ObstaclePrediction>, dt: f64, params: HomotopyParams) -> Self {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        dt.to_bits().hash(&mut h);
        for o in &obstacles {
            o.id.hash(&mut h);
            o.radius.to_bits().hash(&mut h);
            for p in &o.positions {
                p[0].to_bits().hash(&mut h);
                p[1].to_bits().hash(&mut h);
            }
        }
        let key = h.finish();
        let far = far_distance(&obstacles);
        let skeletons = obstacles.iter().map(|o| ObstacleSkeleton::new(o, dt, far)).collect();
        HomotopyScene { key, obstacles, skeletons, dt, params }
    }

    pub fn obstacles(&self) -> &[ObstaclePrediction] {
        &self.obstacles
    }

    pub fn skeletons(&self) -> &[ObstacleSkeleton] {
        &self.skeletons
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Per-obstacle H-signature of the open trajectory (cached).
    pub fn h_signature(&self, traj: &PolylineTrajectory, use_cache: bool) -> Result<Vec<f64>, HomotopyError> {
        (0..self.skeletons.len())
            .map(|j| {
                traj.cached((self.key, j, InvariantKind::HSignature), use_cache, || {
                    self.skeletons[j].path_integral(traj.points())
                })
            })
            .collect()
    }

    /// Per-obstacle winding numbers of the trajectory (cached).
    pub fn winding_numbers(&self, traj: &PolylineTrajectory, use_cache: bool) -> Result<Vec<f64>, HomotopyError> {
        (0..self.obstacles.len())
            .map(|j| {
                traj.cached((self.key, j, InvariantKind::Winding), use_cache, || {
                    winding_number(traj, &self.obstacles[j], self.dt, self.params.winding_samples)
                })
            })
            .collect()
    }

    /// Per-obstacle closed-loop integrals of `t1 + connector - t2`.
    pub fn h_loop_integrals(
        &self,
        t1: &PolylineTrajectory,
        t2: &PolylineTrajectory,
        use_cache: bool,
    ) -> Result<Vec<f64>, HomotopyError> {
        let h1 = self.h_signature(t1, use_cache)?;
        let h2 = self.h_signature(t2, use_cache)?;
        let mut out = Vec::with_capacity(h1.len());
        for (j, sk) in self.skeletons.iter().enumerate() {
            let mut attempt = 0;
            let value = loop {
                let r = sk
                    .connector_integral(t2.start(), t1.start(), attempt)
                    .and_then(|a| sk.connector_integral(t1.end(), t2.end(), attempt).map(|b| a + b));
                match r {
                    Ok(c) => {
                        let v = h1[j] + c - h2[j];
                        if (v - v.round()).abs() <= TOL_H || attempt >= 2 {
                            break v;
                        }
                    }
                    Err(e) if attempt >= 2 => return Err(e),
                    Err(_) => {}
                }
                attempt += 1;
            };
            if (value - value.round()).abs() > TOL_H {
                return Err(HomotopyError::Indeterminate { obstacle: self.obstacles[j].id, value });
            }
            out.push(value);
        }
        Ok(out)
    }

    pub fn h_signature_equivalent(
        &self,
        t1: &PolylineTrajectory,
        t2: &PolylineTrajectory,
        use_cache: bool,
    ) -> Result<bool, HomotopyError> {
        Ok(self.h_loop_integrals(t1, t2, use_cache)?.iter().all(|v| v.abs() <= TOL_H))
    }

    pub fn winding_equivalent(
        &self,
        t1: &PolylineTrajectory,
        t2: &PolylineTrajectory,
        use_cache: bool,
    ) -> Result<bool, HomotopyError> {
        let l1 = self.winding_numbers(t1, use_cache)?;
        let l2 = self.winding_numbers(t2, use_cache)?;
        let pass = self.params.lambda_pass;
        for (a, b) in l1.iter().zip(&l2) {
            let (pa, pb) = (a.abs() >= pass, b.abs() >= pass);
            if pa && pb && a.signum() != b.signum() {
                return Ok(false);
            }
            if self.params.winding_rule == WindingRule::PassingDistinct && pa != pb {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Comparison function: `true` iff both trajectories are in the same class.
    pub fn compare(
        &self,
        t1: &PolylineTrajectory,
        t2: &PolylineTrajectory,
        backend: Backend,
    ) -> Result<bool, HomotopyError> {
        self.compare_with(t1, t2, backend, true)
    }

    pub fn compare_with(
        &self,
        t1: &PolylineTrajectory,
        t2: &PolylineTrajectory,
        backend: Backend,
        use_cache: bool,
    ) -> Result<bool, HomotopyError> {
        if t1.points() == t2.points() {
            return Ok(true);
        }
        match backend {
            Backend::HSignature => self.h_signature_equivalent(t1, t2, use_cache),
            Backend::Winding => self.winding_equivalent(t1, t2, use_cache),
            Backend::Uvd => Ok(uvd_equivalent(t1, t2, &self.obstacles, self.dt, self.params.uvd_samples)),
        }
    }

    /// Invariant vector recorded in a [`HomotopyId`].
    pub fn invariants(&self, traj: &PolylineTrajectory, backend: Backend) -> Vec<f64> {
        match backend {
            Backend::HSignature => self.h_signature(traj, true).unwrap_or_default(),
            Backend::Winding => self.winding_numbers(traj, true).unwrap_or_default(),
            Backend::Uvd => Vec::new(),
        }
    }

    /// Fills the per-trajectory caches; call before fanning out comparisons.
    pub fn warm_cache(&self, traj: &PolylineTrajectory, backend: Backend) -> Result<(), HomotopyError> {
        match backend {
            Backend::HSignature => self.h_signature(traj, true).map(|_| ()),
            Backend::Winding => self.winding_numbers(traj, true).map(|_| ()),
            Backend::Uvd => Ok(()),
        }
    }
}

fn far_distance(obstacles: &[ObstaclePrediction]) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for o in obstacles {
        for p in &o.positions {
            for i in 0..2 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
    }
    let diam = if lo[0].is_finite() { (hi[0] - lo[0]).hypot(hi[1] - lo[1]) } else { 0.0 };
    10.0 * diam.max(20.0)
}

#[cfg(test)]
mod tests;
