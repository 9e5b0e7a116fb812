//! Static workspace boundary as an intersection of half-planes.

use serde::{Deserialize, Serialize};

/// `normal . p <= offset`, with `normal` of unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl HalfPlane {
    pub fn new(normal: [f64; 2], offset: f64) -> Self {
        let n = normal[0].hypot(normal[1]);
        HalfPlane { normal: [normal[0] / n, normal[1] / n], offset: offset / n }
    }

    /// Signed violation `normal . p - offset` (positive outside).
    pub fn residual(&self, p: [f64; 2]) -> f64 {
        self.normal[0] * p[0] + self.normal[1] * p[1] - self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Workspace {
    planes: Vec<HalfPlane>,
}

impl Workspace {
    pub fn new(planes: Vec<HalfPlane>) -> crate::Result<Self> {
        let ws = Workspace { planes };
        if !ws.is_nonempty() {
            return Err(crate::Error::Config("workspace half-planes have an empty intersection".into()));
        }
        Ok(ws)
    }

    /// Unbounded free plane.
    pub fn unbounded() -> Self {
        Workspace { planes: Vec::new() }
    }

    /// Corridor along x between walls at `y = -half_width` and `y = +half_width`.
    pub fn corridor(half_width: f64) -> Self {
        Workspace {
            planes: vec![HalfPlane::new([0.0, 1.0], half_width), HalfPlane::new([0.0, -1.0], half_width)],
        }
    }

    /// Axis-aligned box `[x0, x1] x [y0, y1]`.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> crate::Result<Self> {
        Workspace::new(vec![
            HalfPlane::new([1.0, 0.0], x1),
            HalfPlane::new([-1.0, 0.0], -x0),
            HalfPlane::new([0.0, 1.0], y1),
            HalfPlane::new([0.0, -1.0], -y0),
        ])
    }

    pub fn planes(&self) -> &[HalfPlane] {
        &self.planes
    }

    /// True when `p` lies inside with at least `margin` clearance to every wall.
    pub fn contains(&self, p: [f64; 2], margin: f64) -> bool {
        self.planes.iter().all(|h| h.residual(p) <= -margin)
    }

    /// Smallest clearance of `p` to any wall (infinite without walls).
    pub fn clearance(&self, p: [f64; 2]) -> f64 {
        self.planes.iter().map(|h| -h.residual(p)).fold(f64::INFINITY, f64::min)
    }

    fn is_nonempty(&self) -> bool {
        let tol = 1e-9;
        let inside = |p: [f64; 2]| self.planes.iter().all(|h| h.residual(p) <= tol);
        let mut cands = vec![[0.0, 0.0]];
        for h in &self.planes {
            cands.push([h.normal[0] * h.offset, h.normal[1] * h.offset]);
        }
        for (i, a) in self.planes.iter().enumerate() {
            for b in &self.planes[i + 1..] {
                let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
                if det.abs() > 1e-12 {
                    cands.push([
                        (a.offset * b.normal[1] - b.offset * a.normal[1]) / det,
                        (a.normal[0] * b.offset - b.normal[0] * a.offset) / det,
                    ]);
                }
            }
        }
        cands.into_iter().any(inside)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corridor_containment() {
        let ws = Workspace::corridor(3.0);
        assert!(ws.contains([10.0, 2.0], 0.5));
        assert!(!ws.contains([10.0, 2.8], 0.5));
        assert!((ws.clearance([0.0, 1.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_region_is_rejected() {
        let r = Workspace::new(vec![HalfPlane::new([0.0, 1.0], -2.0), HalfPlane::new([0.0, -1.0], -2.0)]);
        assert!(r.is_err());
        assert!(Workspace::rectangle(0.0, 1.0, 0.0, 1.0).is_ok());
        assert!(Workspace::rectangle(2.0, 1.0, 0.0, 1.0).is_err());
    }
}
