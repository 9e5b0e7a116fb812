use super::{HomotopyError, CONNECTOR_PERTURBATION, DELTA_SING};
use crate::model::{ObstaclePrediction, SpaceTimePoint};

/// Integer-test tolerance for loop integrals.
pub const TOL_H: f64 = 1e-3;
/// Time offset of the skeleton excursions beyond the horizon (s).
pub const SKELETON_EPS: f64 = 0.1;

type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: V3, k: f64) -> V3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

fn lerp(a: V3, b: V3, w: f64) -> V3 {
    [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1]), a[2] + w * (b[2] - a[2])]
}

fn point_segment_distance(r: V3, a: V3, b: V3) -> f64 {
    let ab = sub(b, a);
    let w = (dot(sub(r, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
    norm(sub(r, lerp(a, b, w)))
}

/// Integrated field Φ of a straight unit-current wire from `o_start` to
/// `o_end`, evaluated at `r`. Coordinates are `(x, y, t)`.
pub fn segment_field(o_start: V3, o_end: V3, r: V3) -> Result<V3, HomotopyError> {
    let seg = sub(o_end, o_start);
    let len2 = dot(seg, seg);
    let p = sub(o_start, r);
    let q = sub(o_end, r);
    let d = scale(cross(seg, cross(p, q)), 1.0 / len2);
    let d2 = dot(d, d);
    if d2 < DELTA_SING * DELTA_SING {
        let dist = point_segment_distance(r, o_start, o_end);
        if dist < DELTA_SING {
            return Err(HomotopyError::Singular(dist));
        }
        if d2 < 1e-24 {
            return Ok([0.0; 3]);
        }
    }
    let (np, nq) = (norm(p), norm(q));
    let diff = [q[0] / nq - p[0] / np, q[1] / nq - p[1] / np, q[2] / nq - p[2] / np];
    Ok(scale(cross(d, diff), 1.0 / d2))
}

/// Closest distance between the segments `a b` and `c d`.
fn segment_distance(a: V3, b: V3, c: V3, d: V3) -> f64 {
    let (u, v, w) = (sub(b, a), sub(d, c), sub(a, c));
    let (uu, uv, vv, uw, vw) = (dot(u, u), dot(u, v), dot(v, v), dot(u, w), dot(v, w));
    let den = uu * vv - uv * uv;
    let mut s = if den > 1e-14 * uu * vv { ((uv * vw - vv * uw) / den).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = if vv > 0.0 { (uv * s + vw) / vv } else { 0.0 };
    if t < 0.0 {
        t = 0.0;
        s = if uu > 0.0 { (-uw / uu).clamp(0.0, 1.0) } else { 0.0 };
    } else if t > 1.0 {
        t = 1.0;
        s = if uu > 0.0 { ((uv - uw) / uu).clamp(0.0, 1.0) } else { 0.0 };
    }
    norm(sub(lerp(a, b, s), lerp(c, d, t)))
}

/// Line integral of the field of the unit-current wire `c -> d` along the
/// straight path `a -> b`, divided by `4π`. Exact: the Gauss linking
/// integral of two straight segments is the signed solid angle subtended by
/// the quadrilateral of their endpoints.
pub fn segment_pair_integral(a: V3, b: V3, c: V3, d: V3) -> Result<f64, HomotopyError> {
    let dist = segment_distance(a, b, c, d);
    if dist < DELTA_SING {
        return Err(HomotopyError::Singular(dist));
    }
    let (ac, ad, bc, bd) = (sub(c, a), sub(d, a), sub(c, b), sub(d, b));
    let unit = |v: V3| {
        let n = norm(v);
        (n > 1e-300).then(|| scale(v, 1.0 / n))
    };
    let (Some(n1), Some(n2), Some(n3), Some(n4)) =
        (unit(cross(ac, ad)), unit(cross(ad, bd)), unit(cross(bd, bc)), unit(cross(bc, ac)))
    else {
        return Ok(0.0);
    };
    let asin = |x: f64| x.clamp(-1.0, 1.0).asin();
    let omega = asin(dot(n1, n2)) + asin(dot(n2, n3)) + asin(dot(n3, n4)) + asin(dot(n4, n1));
    let orient = dot(cross(sub(d, c), sub(b, a)), ac);
    if orient == 0.0 {
        return Ok(0.0);
    }
    Ok(omega.copysign(orient) / (4.0 * std::f64::consts::PI))
}

#[derive(Debug, Clone, PartialEq)]
struct Segment {
    a: V3,
    b: V3,
}

/// Closed wire loop around one obstacle prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSkeleton {
    segments: Vec<Segment>,
}

impl ObstacleSkeleton {
    /// Builds the skeleton; `far` is the excursion distance from the scene centre.
    pub fn new(obs: &ObstaclePrediction, dt: f64, far: f64) -> Self {
        let n = obs.positions.len() - 1;
        let horizon = n as f64 * dt;
        let o0 = obs.positions[0];
        let on = obs.positions[n];
        let (mut cx, mut cy) = (0.0, 0.0);
        for p in &obs.positions {
            cx += p[0];
            cy += p[1];
        }
        let cnt = obs.positions.len() as f64;
        let far_pt = [cx / cnt + far, cy / cnt];
        let mut pts: Vec<V3> = obs.positions.iter().enumerate().map(|(k, p)| [p[0], p[1], k as f64 * dt]).collect();
        if n == 0 {
            pts.push([on[0], on[1], dt]);
        }
        pts.push([on[0], on[1], horizon + SKELETON_EPS]);
        pts.push([far_pt[0], far_pt[1], horizon + SKELETON_EPS]);
        pts.push([far_pt[0], far_pt[1], -SKELETON_EPS]);
        pts.push([o0[0], o0[1], -SKELETON_EPS]);
        pts.push([o0[0], o0[1], 0.0]);
        let mut segments: Vec<Segment> = Vec::new();
        for w in pts.windows(2) {
            if norm(sub(w[1], w[0])) < 1e-12 {
                continue;
            }
            if let Some(last) = segments.last_mut() {
                let d1 = sub(last.b, last.a);
                let d2 = sub(w[1], w[0]);
                let c = norm(cross(d1, d2));
                if c <= 1e-12 * norm(d1) * norm(d2) && dot(d1, d2) > 0.0 {
                    last.b = w[1];
                    continue;
                }
            }
            segments.push(Segment { a: w[0], b: w[1] });
        }
        ObstacleSkeleton { segments }
    }

    /// Segment endpoints in loop order.
    pub fn segments(&self) -> Vec<(V3, V3)> {
        self.segments.iter().map(|s| (s.a, s.b)).collect()
    }

    /// `B(r)` scaled by `4π`.
    pub fn field(&self, r: V3) -> Result<V3, HomotopyError> {
        let mut acc = [0.0; 3];
        for s in &self.segments {
            let f = segment_field(s.a, s.b, r)?;
            acc[0] += f[0];
            acc[1] += f[1];
            acc[2] += f[2];
        }
        Ok(acc)
    }

    fn segment_integral(&self, a: V3, b: V3) -> Result<f64, HomotopyError> {
        let mut total = 0.0;
        for s in &self.segments {
            total += segment_pair_integral(a, b, s.a, s.b)?;
        }
        Ok(total)
    }

    /// Line integral of `B` along an open space-time polyline.
    pub fn path_integral(&self, points: &[SpaceTimePoint]) -> Result<f64, HomotopyError> {
        let mut total = 0.0;
        for w in points.windows(2) {
            total += self.segment_integral([w[0].x, w[0].y, w[0].t], [w[1].x, w[1].y, w[1].t])?;
        }
        Ok(total)
    }

    /// Integral along the connector from `from` to `to`; `attempt > 0` perturbs it laterally.
    pub(super) fn connector_integral(
        &self,
        from: SpaceTimePoint,
        to: SpaceTimePoint,
        attempt: u32,
    ) -> Result<f64, HomotopyError> {
        if from == to {
            return Ok(0.0);
        }
        let a = [from.x, from.y, from.t];
        let b = [to.x, to.y, to.t];
        let mut pts = vec![a];
        pts.push(b);
        if attempt > 0 {
            let i = pts.len() - 2;
            let (p, q) = (pts[i], pts[i + 1]);
            let dir = sub(q, p);
            let mut lateral = [-dir[1], dir[0], 0.0];
            let ln = norm(lateral);
            lateral = if ln > 1e-12 { scale(lateral, 1.0 / ln) } else { [1.0, 0.0, 0.0] };
            let sign = if attempt % 2 == 1 { 1.0 } else { -1.0 };
            let mid = lerp(p, q, 0.5);
            let mid = [
                mid[0] + sign * CONNECTOR_PERTURBATION * lateral[0],
                mid[1] + sign * CONNECTOR_PERTURBATION * lateral[1],
                mid[2],
            ];
            pts.insert(i + 1, mid);
        }
        let mut total = 0.0;
        for w in pts.windows(2) {
            if norm(sub(w[1], w[0])) > 0.0 {
                total += self.segment_integral(w[0], w[1])?;
            }
        }
        Ok(total)
    }
}
