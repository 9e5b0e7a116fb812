use crate::model::{ReferencePath, RobotInput, RobotState, Weights};

/// Contour and lag errors with their gradients in `(x, y, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathErrors {
    pub contour: f64,
    pub lag: f64,
    pub d_contour: [f64; 3],
    pub d_lag: [f64; 3],
}

pub fn path_errors(x: f64, y: f64, s: f64, path: &ReferencePath) -> PathErrors {
    let f = path.frame(s);
    let theta = f.angle();
    let rate = f.angle_rate();
    let speed = f.speed();
    let (sn, cs) = theta.sin_cos();
    let (dx, dy) = (x - f.pos[0], y - f.pos[1]);
    let contour = -sn * dx + cs * dy;
    let lag = cs * dx + sn * dy;
    PathErrors {
        contour,
        lag,
        d_contour: [-sn, cs, -rate * lag],
        d_lag: [cs, sn, rate * contour - speed],
    }
}

/// `w_c e_c^2 + w_l e_l^2 + w_v (v - v_ref)^2 + w_omega omega^2 + w_a a^2`.
pub fn stage_cost(state: &RobotState, input: &RobotInput, path: &ReferencePath, weights: &Weights, v_ref: f64) -> f64 {
    let e = path_errors(state.x, state.y, state.s, path);
    weights.contour * e.contour * e.contour
        + weights.lag * e.lag * e.lag
        + weights.velocity * (state.v - v_ref).powi(2)
        + weights.omega * input.omega * input.omega
        + weights.acceleration * input.a * input.a
}

/// `w_T (e_c^2 + (s - s_ideal)^2)` at the final state.
pub fn terminal_cost(state: &RobotState, path: &ReferencePath, weights: &Weights, s_ideal: f64) -> f64 {
    let e = path_errors(state.x, state.y, state.s, path);
    weights.terminal * (e.contour * e.contour + (state.s - s_ideal).powi(2))
}
