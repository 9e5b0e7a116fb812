//! Reference path: a clamped cubic spline `gamma(s)` re-parameterized by arc length.

use serde::{Deserialize, Serialize};

use super::spline::{CubicSpline, EndCondition};

/// Target spacing of the arc-length resampling knots (m).
const RESAMPLE_SPACING: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePath {
    waypoints: Vec<[f64; 2]>,
    sx: CubicSpline,
    sy: CubicSpline,
    length: f64,
}

/// Point on the path with the heading of its tangent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub pos: [f64; 2],
    pub angle: f64,
    /// Set when the query was outside `[0, length]` and had to be clamped.
    pub clamped: bool,
}

/// Position and first/second derivatives of `gamma` at `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathFrame {
    pub pos: [f64; 2],
    pub d1: [f64; 2],
    pub d2: [f64; 2],
}

impl PathFrame {
    pub fn speed(&self) -> f64 {
        self.d1[0].hypot(self.d1[1])
    }

    pub fn angle(&self) -> f64 {
        self.d1[1].atan2(self.d1[0])
    }

    /// Derivative of the tangent angle with respect to `s`.
    pub fn angle_rate(&self) -> f64 {
        let n2 = self.d1[0] * self.d1[0] + self.d1[1] * self.d1[1];
        (self.d1[0] * self.d2[1] - self.d1[1] * self.d2[0]) / n2
    }
}

fn end_tangent(p: &[[f64; 2]], at_end: bool) -> [f64; 2] {
    let n = p.len();
    let t = if n == 2 {
        [p[1][0] - p[0][0], p[1][1] - p[0][1]]
    } else {
        // derivative of the chord-parameterized parabola through three end points
        let (a, b, c) = if at_end { (p[n - 1], p[n - 2], p[n - 3]) } else { (p[0], p[1], p[2]) };
        let h1 = (b[0] - a[0]).hypot(b[1] - a[1]);
        let h2 = (c[0] - b[0]).hypot(c[1] - b[1]);
        let mut d = [0.0; 2];
        for i in 0..2 {
            let d1 = (b[i] - a[i]) / h1;
            let d2 = (c[i] - b[i]) / h2;
            d[i] = d1 - (d2 - d1) * h1 / (h1 + h2);
        }
        if at_end {
            [-d[0], -d[1]]
        } else {
            d
        }
    };
    let n = t[0].hypot(t[1]);
    [t[0] / n, t[1] / n]
}

fn gauss_length(sx: &CubicSpline, sy: &CubicSpline, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
    const W: [f64; 5] = [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];
    let m = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    X.iter()
        .zip(W)
        .map(|(x, w)| {
            let t = m + h * x;
            w * sx.eval3(t).1.hypot(sy.eval3(t).1)
        })
        .sum::<f64>()
        * h
}

impl ReferencePath {
    /// Builds the path through `waypoints` (at least two distinct points).
    pub fn new(waypoints: &[[f64; 2]]) -> crate::Result<Self> {
        let mut pts: Vec<[f64; 2]> = Vec::with_capacity(waypoints.len());
        for p in waypoints {
            if pts.last().is_none_or(|q: &[f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]) > 1e-9) {
                pts.push(*p);
            }
        }
        if pts.len() < 2 {
            return Err(crate::Error::Config("reference path needs two distinct waypoints".into()));
        }
        let mut chord = vec![0.0];
        for w in pts.windows(2) {
            chord.push(chord.last().unwrap() + (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]));
        }
        let t0 = end_tangent(&pts, false);
        let t1 = end_tangent(&pts, true);
        let xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p[1]).collect();
        let cx = CubicSpline::new(&chord, &xs, EndCondition::Clamped(t0[0]), EndCondition::Clamped(t1[0]));
        let cy = CubicSpline::new(&chord, &ys, EndCondition::Clamped(t0[1]), EndCondition::Clamped(t1[1]));

        // Subdivide the chord spline and refit with cumulative arc length as knots.
        let mut knots = vec![0.0];
        let mut rx = vec![xs[0]];
        let mut ry = vec![ys[0]];
        for w in chord.windows(2) {
            let m = ((w[1] - w[0]) / RESAMPLE_SPACING).ceil().max(1.0) as usize;
            for j in 1..=m {
                let a = w[0] + (w[1] - w[0]) * (j - 1) as f64 / m as f64;
                let b = w[0] + (w[1] - w[0]) * j as f64 / m as f64;
                let l = gauss_length(&cx, &cy, a, b);
                knots.push(knots.last().unwrap() + l);
                rx.push(cx.eval(b));
                ry.push(cy.eval(b));
            }
        }
        let sx = CubicSpline::new(&knots, &rx, EndCondition::Clamped(t0[0]), EndCondition::Clamped(t1[0]));
        let sy = CubicSpline::new(&knots, &ry, EndCondition::Clamped(t0[1]), EndCondition::Clamped(t1[1]));
        let length = *knots.last().unwrap();
        Ok(ReferencePath { waypoints: pts, sx, sy, length })
    }

    /// Straight path between two points.
    pub fn straight(from: [f64; 2], to: [f64; 2]) -> crate::Result<Self> {
        Self::new(&[from, to])
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn waypoints(&self) -> &[[f64; 2]] {
        &self.waypoints
    }

    /// Point and tangent heading at `s`, clamped to the path domain.
    pub fn eval(&self, s: f64) -> PathSample {
        let sc = s.clamp(0.0, self.length);
        let f = self.frame_inner(sc);
        PathSample { pos: f.pos, angle: f.angle(), clamped: sc != s }
    }

    /// Frame at `s`, linearly extrapolated along the end tangents outside the domain.
    pub fn frame(&self, s: f64) -> PathFrame {
        if s < 0.0 || s > self.length {
            let e = if s < 0.0 { 0.0 } else { self.length };
            let f = self.frame_inner(e);
            let d = s - e;
            return PathFrame {
                pos: [f.pos[0] + f.d1[0] * d, f.pos[1] + f.d1[1] * d],
                d1: f.d1,
                d2: [0.0, 0.0],
            };
        }
        self.frame_inner(s)
    }

    fn frame_inner(&self, s: f64) -> PathFrame {
        let (x, dx, ddx) = self.sx.eval3(s);
        let (y, dy, ddy) = self.sy.eval3(s);
        PathFrame { pos: [x, y], d1: [dx, dy], d2: [ddx, ddy] }
    }

    /// Left-hand unit normal at `s` (extrapolated outside the domain).
    pub fn normal(&self, s: f64) -> [f64; 2] {
        let f = self.frame(s);
        let n = f.speed();
        [-f.d1[1] / n, f.d1[0] / n]
    }

    /// Arc length of the closest path point to `p`; ties go to the smaller `s`.
    pub fn project(&self, p: [f64; 2]) -> f64 {
        let d2 = |s: f64| {
            let q = self.frame_inner(s).pos;
            (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)
        };
        let step = RESAMPLE_SPACING / 4.0;
        let m = (self.length / step).ceil() as usize;
        let grid: Vec<f64> = (0..=m).map(|i| i as f64 * self.length / m as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&s| d2(s)).collect();
        let h = self.length / m as f64;

        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=m {
            let left = if i > 0 { vals[i - 1] } else { f64::INFINITY };
            let right = if i < m { vals[i + 1] } else { f64::INFINITY };
            if vals[i] > left || vals[i] > right {
                continue;
            }
            // golden-section refinement on the bracketing cells
            let (mut a, mut b) = ((grid[i] - h).max(0.0), (grid[i] + h).min(self.length));
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            let (mut fc, mut fd) = (d2(c), d2(d));
            for _ in 0..60 {
                if fc <= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = d2(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = d2(d);
                }
            }
            let mut s = 0.5 * (a + b);
            let mut f = d2(s);
            if vals[i] <= f {
                s = grid[i];
                f = vals[i];
            }
            if f < best.0 - 1e-12 {
                best = (f, s);
            }
        }
        best.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn quarter_circle() -> ReferencePath {
        // centre (0, 1), radius 1, from (0, 0) heading +x to (1, 1) heading +y
        let pts: Vec<[f64; 2]> = (0..=12)
            .map(|i| {
                let a = -FRAC_PI_2 + FRAC_PI_2 * i as f64 / 12.0;
                [a.cos(), 1.0 + a.sin()]
            })
            .collect();
        ReferencePath::new(&pts).unwrap()
    }

    #[test]
    fn straight_path_geometry() {
        let p = ReferencePath::straight([0.0, 0.0], [10.0, 0.0]).unwrap();
        assert!((p.length() - 10.0).abs() < 1e-12);
        let e = p.eval(5.0);
        assert!((e.pos[0] - 5.0).abs() < 1e-12 && e.pos[1].abs() < 1e-12);
        assert!(e.angle.abs() < 1e-12 && !e.clamped);
        assert_eq!(p.eval(0.0).pos, [0.0, 0.0]);
    }

    #[test]
    fn out_of_range_is_clamped() {
        let p = ReferencePath::straight([0.0, 0.0], [10.0, 0.0]).unwrap();
        let e = p.eval(12.0);
        assert!(e.clamped);
        assert!((e.pos[0] - 10.0).abs() < 1e-12);
        assert!(p.eval(-1.0).clamped);
    }

    #[test]
    fn quarter_circle_against_polyline_oracle() {
        // oracle: arc length of a dense polyline on the true circle is pi/2
        let oracle: f64 = (0..20000)
            .map(|i| {
                let a0 = -FRAC_PI_2 + FRAC_PI_2 * i as f64 / 20000.0;
                let a1 = -FRAC_PI_2 + FRAC_PI_2 * (i + 1) as f64 / 20000.0;
                (a1.cos() - a0.cos()).hypot(a1.sin() - a0.sin())
            })
            .sum();
        let p = quarter_circle();
        assert!((p.length() - oracle).abs() < 1e-3);
        let e = p.eval(FRAC_PI_2);
        assert!((e.pos[0] - 1.0).abs() < 1e-3 && (e.pos[1] - 1.0).abs() < 1e-3);
        assert!((e.angle - FRAC_PI_2).abs() < 1e-2);
        assert_eq!(p.eval(0.0).pos, p.waypoints()[0]);
    }

    #[test]
    fn arc_length_parameterization_error_is_small() {
        let p = quarter_circle();
        for i in 0..=100 {
            let s = p.length() * i as f64 / 100.0;
            assert!((p.frame(s).speed() - 1.0).abs() < 1e-3);
        }
        // tangent angle rate equals the unit curvature
        assert!((p.frame(0.8).angle_rate() - 1.0).abs() < 2e-2);
    }

    #[test]
    fn projection_on_line() {
        let p = ReferencePath::straight([0.0, 0.0], [10.0, 0.0]).unwrap();
        assert!((p.project([3.0, 7.0]) - 3.0).abs() < 1e-9);
        let q = quarter_circle();
        let s0 = 0.9;
        assert!((q.project(q.eval(s0).pos) - s0).abs() < 1e-6);
    }

    #[test]
    fn projection_tie_prefers_smaller_s() {
        // symmetric V: query point on the axis is equidistant from both arms
        let p = ReferencePath::new(&[[-4.0, 0.0], [-2.0, -0.01], [0.0, -2.0], [2.0, -0.01], [4.0, 0.0]]).unwrap();
        let q = [0.0, 1.0];
        // exhaustive grid oracle
        let n = 200000;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=n {
            let s = p.length() * i as f64 / n as f64;
            let e = p.eval(s).pos;
            let d = (e[0] - q[0]).hypot(e[1] - q[1]);
            if d < best.0 - 1e-9 {
                best = (d, s);
            }
        }
        let s = p.project(q);
        let e = p.eval(s).pos;
        assert!(((e[0] - q[0]).hypot(e[1] - q[1]) - best.0).abs() < 1e-6);
        assert!(s < p.length() / 2.0, "tie must resolve to smaller s, got {s}");
        assert!((s - best.1).abs() < 1e-2);
    }

    #[test]
    fn closest_point_property() {
        let p = quarter_circle();
        for q in [[0.5, 0.2], [1.5, 0.3], [-0.3, -0.4], [0.9, 1.8]] {
            let s = p.project(q);
            let d = {
                let e = p.eval(s).pos;
                (e[0] - q[0]).hypot(e[1] - q[1])
            };
            for i in 0..=2000 {
                let e = p.eval(p.length() * i as f64 / 2000.0).pos;
                assert!((e[0] - q[0]).hypot(e[1] - q[1]) > d - 1e-6);
            }
        }
    }
}
