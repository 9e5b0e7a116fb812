//! One-dimensional interpolating cubic splines.

use serde::{Deserialize, Serialize};

/// End condition of a cubic spline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndCondition {
    /// Zero second derivative.
    Natural,
    /// Prescribed first derivative.
    Clamped(f64),
}

/// Piecewise cubic `y(t)` through `(knots[i], values[i])`, stored as
/// second derivatives at the knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    /// Panics if fewer than two knots are given or knots are not strictly increasing.
    pub fn new(knots: &[f64], values: &[f64], start: EndCondition, end: EndCondition) -> Self {
        let n = knots.len();
        assert!(n >= 2 && values.len() == n, "spline needs >= 2 matching knots");
        assert!(knots.windows(2).all(|w| w[1] > w[0]), "knots must increase");

        // Tridiagonal system for the second derivatives (Thomas algorithm).
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = knots[i] - knots[i - 1];
            let h1 = knots[i + 1] - knots[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0;
        }
        let h0 = knots[1] - knots[0];
        match start {
            EndCondition::Natural => {
                diag[0] = 1.0;
            }
            EndCondition::Clamped(d) => {
                diag[0] = h0 / 3.0;
                sup[0] = h0 / 6.0;
                rhs[0] = (values[1] - values[0]) / h0 - d;
            }
        }
        let hn = knots[n - 1] - knots[n - 2];
        match end {
            EndCondition::Natural => {
                diag[n - 1] = 1.0;
            }
            EndCondition::Clamped(d) => {
                sub[n - 1] = hn / 6.0;
                diag[n - 1] = hn / 3.0;
                rhs[n - 1] = d - (values[n - 1] - values[n - 2]) / hn;
            }
        }
        for i in 1..n {
            let m = sub[i] / diag[i - 1];
            diag[i] -= m * sup[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        let mut second = vec![0.0; n];
        second[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            second[i] = (rhs[i] - sup[i] * second[i + 1]) / diag[i];
        }
        CubicSpline { knots: knots.to_vec(), values: values.to_vec(), second }
    }

    pub fn start(&self) -> f64 {
        self.knots[0]
    }

    pub fn end(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.knots.len();
        match self.knots.binary_search_by(|k| k.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Value, first and second derivative at `t` (cubic extension outside the knots).
    pub fn eval3(&self, t: f64) -> (f64, f64, f64) {
        let i = self.segment(t);
        let (t0, t1) = (self.knots[i], self.knots[i + 1]);
        let h = t1 - t0;
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let val = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let d2 = a * m0 + b * m1;
        (val, d1, d2)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval3(t).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_linear_data() {
        let s = CubicSpline::new(
            &[0.0, 1.0, 3.0],
            &[1.0, 3.0, 7.0],
            EndCondition::Clamped(2.0),
            EndCondition::Clamped(2.0),
        );
        for t in [0.0, 0.5, 1.7, 3.0] {
            let (v, d, dd) = s.eval3(t);
            assert!((v - (1.0 + 2.0 * t)).abs() < 1e-12);
            assert!((d - 2.0).abs() < 1e-12);
            assert!(dd.abs() < 1e-12);
        }
    }

    #[test]
    fn interpolates_knots_and_clamps_slopes() {
        let knots = [0.0, 0.4, 1.1, 2.0, 2.2];
        let vals = [0.3, -1.0, 0.5, 2.0, 1.0];
        let s = CubicSpline::new(&knots, &vals, EndCondition::Clamped(0.7), EndCondition::Clamped(-1.5));
        for (k, v) in knots.iter().zip(vals) {
            assert!((s.eval(*k) - v).abs() < 1e-12);
        }
        assert!((s.eval3(0.0).1 - 0.7).abs() < 1e-10);
        assert!((s.eval3(2.2).1 + 1.5).abs() < 1e-10);
        // C1 / C2 continuity at an interior knot
        let l = s.eval3(1.1 - 1e-9);
        let r = s.eval3(1.1 + 1e-9);
        assert!((l.1 - r.1).abs() < 1e-6 && (l.2 - r.2).abs() < 1e-6);
    }

    #[test]
    fn natural_ends_have_zero_curvature() {
        let s = CubicSpline::new(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 0.0, 1.0], EndCondition::Natural, EndCondition::Natural);
        assert!(s.eval3(0.0).2.abs() < 1e-12);
        assert!(s.eval3(3.0).2.abs() < 1e-12);
    }
}
