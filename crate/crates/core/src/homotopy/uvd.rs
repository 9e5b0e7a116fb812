use super::PolylineTrajectory;
use crate::model::ObstaclePrediction;

const TIME_SLICES: usize = 8;

fn segment_point_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    let w = if l2 > 0.0 { (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (a[0] + w * ab[0] - p[0]).hypot(a[1] + w * ab[1] - p[1])
}

fn connector_hits(a: [f64; 2], ta: f64, b: [f64; 2], tb: f64, obs: &ObstaclePrediction, dt: f64) -> bool {
    if (ta - tb).abs() < 1e-9 {
        return segment_point_distance(a, b, obs.position_at(ta, dt)) < obs.radius;
    }
    (0..TIME_SLICES).any(|i| {
        let (w0, w1) = (i as f64 / TIME_SLICES as f64, (i + 1) as f64 / TIME_SLICES as f64);
        let p0 = [a[0] + w0 * (b[0] - a[0]), a[1] + w0 * (b[1] - a[1])];
        let p1 = [a[0] + w1 * (b[0] - a[0]), a[1] + w1 * (b[1] - a[1])];
        let t = ta + 0.5 * (w0 + w1) * (tb - ta);
        segment_point_distance(p0, p1, obs.position_at(t, dt)) < obs.radius
    })
}

/// Even-odd point-in-polygon test.
fn inside(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut odd = false;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]) {
            odd = !odd;
        }
    }
    odd
}

/// Uniform visibility deformation test over `samples` matched parameters.
pub fn uvd_equivalent(
    t1: &PolylineTrajectory,
    t2: &PolylineTrajectory,
    obstacles: &[ObstaclePrediction],
    dt: f64,
    samples: usize,
) -> bool {
    let samples = samples.max(2);
    let (s1, e1) = (t1.start().t, t1.end().t);
    let (s2, e2) = (t2.start().t, t2.end().t);
    let mut prev: Option<([f64; 2], [f64; 2], f64)> = None;
    for k in 0..samples {
        let u = k as f64 / (samples - 1) as f64;
        let (ta, tb) = (s1 + u * (e1 - s1), s2 + u * (e2 - s2));
        let (a, b) = (t1.position_at(ta), t2.position_at(tb));
        if obstacles.iter().any(|o| connector_hits(a, ta, b, tb, o, dt)) {
            return false;
        }
        // An obstacle strictly between two consecutive connectors is swept over by the deformation.
        let t = 0.5 * (ta + tb);
        if let Some((pa, pb, pt)) = prev {
            let quad = [pa, pb, b, a];
            if obstacles.iter().any(|o| inside(&quad, o.position_at(0.5 * (pt + t), dt))) {
                return false;
            }
        }
        prev = Some((a, b, t));
    }
    true
}
