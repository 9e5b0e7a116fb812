//! Second-order unicycle with path progress, integrated by classical RK4.
//!
//! State layout is `(x, y, psi, v, s)`, inputs are `(a, omega)`:
//! `x' = v cos psi`, `y' = v sin psi`, `psi' = omega`, `v' = a`, `s' = v`.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use super::normalize_angle;

pub type StateVec = SVector<f64, 5>;
pub type InputVec = SVector<f64, 2>;
pub type StateJac = SMatrix<f64, 5, 5>;
pub type InputJac = SMatrix<f64, 5, 2>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotInput {
    pub a: f64,
    pub omega: f64,
}

/// Symmetric actuation limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputLimits {
    pub v_max: f64,
    pub a_max: f64,
    pub omega_max: f64,
}

/// Result of [`dynamics_step`]; `clamped` is set when the input or the
/// resulting speed had to be saturated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: RobotState,
    pub clamped: bool,
}

impl RobotState {
    pub fn new(x: f64, y: f64, psi: f64, v: f64, s: f64) -> Self {
        RobotState { x, y, psi, v, s }
    }

    pub fn pos(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn to_vec(&self) -> StateVec {
        StateVec::new(self.x, self.y, self.psi, self.v, self.s)
    }

    pub fn from_vec(v: &StateVec) -> Self {
        RobotState { x: v[0], y: v[1], psi: v[2], v: v[3], s: v[4] }
    }
}

impl RobotInput {
    pub fn new(a: f64, omega: f64) -> Self {
        RobotInput { a, omega }
    }

    pub fn to_vec(&self) -> InputVec {
        InputVec::new(self.a, self.omega)
    }

    pub fn clamp(&self, limits: &InputLimits) -> (RobotInput, bool) {
        let a = self.a.clamp(-limits.a_max, limits.a_max);
        let omega = self.omega.clamp(-limits.omega_max, limits.omega_max);
        (RobotInput { a, omega }, a != self.a || omega != self.omega)
    }
}

fn rhs(x: &StateVec, u: &InputVec) -> StateVec {
    let (s, c) = x[2].sin_cos();
    StateVec::new(x[3] * c, x[3] * s, u[1], u[0], x[3])
}

fn rhs_jac(x: &StateVec) -> (StateJac, InputJac) {
    let (s, c) = x[2].sin_cos();
    let v = x[3];
    let mut fx = StateJac::zeros();
    fx[(0, 2)] = -v * s;
    fx[(0, 3)] = c;
    fx[(1, 2)] = v * c;
    fx[(1, 3)] = s;
    fx[(4, 3)] = 1.0;
    let mut fu = InputJac::zeros();
    fu[(2, 1)] = 1.0;
    fu[(3, 0)] = 1.0;
    (fx, fu)
}

/// One unsaturated RK4 step.
pub fn rk4(x: &StateVec, u: &InputVec, dt: f64) -> StateVec {
    let k1 = rhs(x, u);
    let k2 = rhs(&(x + k1 * (0.5 * dt)), u);
    let k3 = rhs(&(x + k2 * (0.5 * dt)), u);
    let k4 = rhs(&(x + k3 * dt), u);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// One unsaturated RK4 step together with its exact Jacobians
/// `d x_next / d x` and `d x_next / d u`.
pub fn rk4_with_jacobian(x: &StateVec, u: &InputVec, dt: f64) -> (StateVec, StateJac, InputJac) {
    let id = StateJac::identity();
    let h = 0.5 * dt;

    let k1 = rhs(x, u);
    let (a1, b1) = rhs_jac(x);
    let dk1x = a1;
    let dk1u = b1;

    let x2 = x + k1 * h;
    let k2 = rhs(&x2, u);
    let (a2, b2) = rhs_jac(&x2);
    let dk2x = a2 * (id + dk1x * h);
    let dk2u = a2 * (dk1u * h) + b2;

    let x3 = x + k2 * h;
    let k3 = rhs(&x3, u);
    let (a3, b3) = rhs_jac(&x3);
    let dk3x = a3 * (id + dk2x * h);
    let dk3u = a3 * (dk2u * h) + b3;

    let x4 = x + k3 * dt;
    let k4 = rhs(&x4, u);
    let (a4, b4) = rhs_jac(&x4);
    let dk4x = a4 * (id + dk3x * dt);
    let dk4u = a4 * (dk3u * dt) + b4;

    let w = dt / 6.0;
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * w;
    let jx = id + (dk1x + dk2x * 2.0 + dk3x * 2.0 + dk4x) * w;
    let ju = (dk1u + dk2u * 2.0 + dk3u * 2.0 + dk4u) * w;
    (next, jx, ju)
}

/// Integrates the robot over `dt` with saturated inputs and speed.
pub fn dynamics_step(
    state: &RobotState,
    input: &RobotInput,
    dt: f64,
    limits: &InputLimits,
) -> StepOutcome {
    debug_assert!(dt > 0.0);
    let (u, mut clamped) = input.clamp(limits);
    let next = rk4(&state.to_vec(), &u.to_vec(), dt);
    let mut out = RobotState::from_vec(&next);
    let v = out.v.clamp(0.0, limits.v_max);
    if v != out.v {
        clamped = true;
        out.v = v;
    }
    out.psi = normalize_angle(out.psi);
    StepOutcome { state: out, clamped }
}

/// Rolls `inputs` forward from `x0` without saturation, returning all
/// `inputs.len() + 1` states.
pub fn rollout(x0: &RobotState, inputs: &[RobotInput], dt: f64) -> Vec<RobotState> {
    let mut out = Vec::with_capacity(inputs.len() + 1);
    let mut x = x0.to_vec();
    out.push(*x0);
    for u in inputs {
        x = rk4(&x, &u.to_vec(), dt);
        out.push(RobotState::from_vec(&x));
    }
    out
}
