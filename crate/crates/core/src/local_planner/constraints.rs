use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ConstraintError {
    #[error("guidance point coincides with the obstacle")]
    DegenerateGuidance,
}

/// Disc collision constraint `1 - |dp|^2 / r^2`; feasible iff `<= 0`.
/// Returns the value and its gradient in the plan position.
pub fn collision_constraint(p: [f64; 2], o: [f64; 2], r: f64) -> (f64, [f64; 2]) {
    let d = [p[0] - o[0], p[1] - o[1]];
    let r2 = r * r;
    (1.0 - (d[0] * d[0] + d[1] * d[1]) / r2, [-2.0 * d[0] / r2, -2.0 * d[1] / r2])
}

/// Elliptic collision constraint with semi-axes `axes` rotated by `phi`.
pub fn collision_constraint_ellipse(p: [f64; 2], o: [f64; 2], axes: [f64; 2], phi: f64) -> (f64, [f64; 2]) {
    let d = [p[0] - o[0], p[1] - o[1]];
    let (s, c) = phi.sin_cos();
    let q = [c * d[0] + s * d[1], -s * d[0] + c * d[1]];
    let (ia, ib) = (1.0 / (axes[0] * axes[0]), 1.0 / (axes[1] * axes[1]));
    let g = 1.0 - (q[0] * q[0] * ia + q[1] * q[1] * ib);
    let gq = [-2.0 * q[0] * ia, -2.0 * q[1] * ib];
    (g, [c * gq[0] - s * gq[1], s * gq[0] + c * gq[1]])
}

/// Halfplane `A p <= b` keeping the plan on the guidance side of an obstacle.
pub fn homotopy_constraint(tau: [f64; 2], o: [f64; 2], beta: f64, r: f64) -> Result<([f64; 2], f64), ConstraintError> {
    let d = [o[0] - tau[0], o[1] - tau[1]];
    let n = d[0].hypot(d[1]);
    if n <= crate::homotopy::DELTA_SING {
        return Err(ConstraintError::DegenerateGuidance);
    }
    let a = [d[0] / n, d[1] / n];
    let b = a[0] * (o[0] - a[0] * beta * r) + a[1] * (o[1] - a[1] * beta * r);
    Ok((a, b))
}

/// Gaussian quantile factor `erf^-1(1 - 2 eps)`.
pub fn risk_factor(eps: f64) -> f64 {
    statrs::function::erf::erf_inv(1.0 - 2.0 * eps)
}

/// Chance constraint residual `kappa sqrt(2 A' S A) - (A'(p - o) - r)` with `A`
/// the unit vector from the obstacle to `p`; feasible iff `<= 0`.
/// Returns the value and its gradient in `p`.
pub fn chance_constraint(p: [f64; 2], o: [f64; 2], cov: [[f64; 2]; 2], kappa: f64, r: f64) -> (f64, [f64; 2]) {
    let d = [p[0] - o[0], p[1] - o[1]];
    let n = d[0].hypot(d[1]).max(1e-9);
    let a = [d[0] / n, d[1] / n];
    let sa = [cov[0][0] * a[0] + cov[0][1] * a[1], cov[1][0] * a[0] + cov[1][1] * a[1]];
    let q = (a[0] * sa[0] + a[1] * sa[1]).max(0.0);
    let root = (2.0 * q).sqrt();
    let value = kappa * root - (n - r);
    // dq/dp = 2 (I - A A') S A / |d|  (S symmetric)
    let asa = a[0] * sa[0] + a[1] * sa[1];
    let proj = [sa[0] - a[0] * asa, sa[1] - a[1] * asa];
    let dq = [2.0 * proj[0] / n, 2.0 * proj[1] / n];
    let k = if root > 1e-12 { kappa / root } else { 0.0 };
    (value, [k * dq[0] - a[0], k * dq[1] - a[1]])
}
