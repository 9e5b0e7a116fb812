use super::graph::{segment_clearance, visible, VisibilityContext};
use crate::homotopy::{HomotopyScene, PolylineTrajectory};
use crate::model::spline::{CubicSpline, EndCondition};
use crate::model::{Backend, SpaceTimePoint};

/// Greedy shortcut: from each retained waypoint jump to the farthest visible one.
pub fn shortcut(points: &[SpaceTimePoint], ctx: &VisibilityContext) -> Vec<SpaceTimePoint> {
    let mut out = vec![points[0]];
    let mut i = 0;
    while i + 1 < points.len() {
        let mut j = points.len() - 1;
        while j > i + 1 && !visible(points[i], points[j], ctx) {
            j -= 1;
        }
        out.push(points[j]);
        i = j;
    }
    out
}

fn collision_free(points: &[SpaceTimePoint], ctx: &VisibilityContext) -> bool {
    points.iter().all(|p| ctx.workspace.contains(p.pos(), ctx.margin))
        && points
            .windows(2)
            .all(|w| ctx.obstacles.iter().all(|o| segment_clearance(w[0], w[1], o, ctx.dt) >= ctx.radius))
}

/// Result of smoothing one guidance polyline.
#[derive(Debug, Clone)]
pub struct Smoothed {
    /// Samples at `k dt`, `k = 0..=steps`.
    pub trajectory: PolylineTrajectory,
    /// `false` when the spline was rejected and the densified polyline returned.
    pub spline: bool,
}

/// Shortcut, spline-fit in time and verify against the original polyline's class.
pub fn smooth(
    polyline: &PolylineTrajectory,
    ctx: &VisibilityContext,
    scene: &HomotopyScene,
    backend: Backend,
    steps: usize,
    dt: f64,
) -> Smoothed {
    let pts = polyline.points();
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    let resample_times = |k: usize| if k == steps { last.t } else { first.t + k as f64 * dt };
    let waypoints = shortcut(pts, ctx);
    let knots: Vec<f64> = waypoints.iter().map(|p| p.t).collect();
    let xs: Vec<f64> = waypoints.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = waypoints.iter().map(|p| p.y).collect();
    let sx = CubicSpline::new(&knots, &xs, EndCondition::Natural, EndCondition::Natural);
    let sy = CubicSpline::new(&knots, &ys, EndCondition::Natural, EndCondition::Natural);
    let mut spline_pts: Vec<SpaceTimePoint> = (0..=steps)
        .map(|k| {
            let t = resample_times(k);
            SpaceTimePoint::new(sx.eval(t), sy.eval(t), t)
        })
        .collect();
    spline_pts[0] = first;
    spline_pts[steps] = last;
    if let Ok(traj) = PolylineTrajectory::new(spline_pts) {
        if collision_free(traj.points(), ctx) && matches!(scene.compare(&traj, polyline, backend), Ok(true)) {
            return Smoothed { trajectory: traj, spline: true };
        }
    }
    let dense: Vec<SpaceTimePoint> = (0..=steps)
        .map(|k| {
            let t = resample_times(k);
            let p = polyline.position_at(t);
            SpaceTimePoint::new(p[0], p[1], t)
        })
        .collect();
    Smoothed { trajectory: PolylineTrajectory::new(dense).expect("increasing resample times"), spline: false }
}
