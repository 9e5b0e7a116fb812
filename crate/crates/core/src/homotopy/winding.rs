use std::f64::consts::PI;

use super::{HomotopyError, PolylineTrajectory};
use crate::model::{normalize_angle, ObstaclePrediction};

/// Winding number of the robot around one obstacle over the trajectory's time span,
/// accumulated over `samples + 1` matched times.
pub fn winding_number(
    traj: &PolylineTrajectory,
    obs: &ObstaclePrediction,
    dt: f64,
    samples: usize,
) -> Result<f64, HomotopyError> {
    let samples = samples.max(1);
    let (t0, t1) = (traj.start().t, traj.end().t);
    let mut prev: Option<f64> = None;
    let mut total = 0.0;
    for k in 0..=samples {
        let t = t0 + (t1 - t0) * k as f64 / samples as f64;
        let p = traj.position_at(t);
        let o = obs.position_at(t, dt);
        let (dx, dy) = (p[0] - o[0], p[1] - o[1]);
        if dx.hypot(dy) < 1e-9 {
            return Err(HomotopyError::UndefinedAngle(obs.id));
        }
        let theta = dy.atan2(dx);
        if let Some(th) = prev {
            total += normalize_angle(theta - th);
        }
        prev = Some(theta);
    }
    Ok(total / (2.0 * PI))
}
