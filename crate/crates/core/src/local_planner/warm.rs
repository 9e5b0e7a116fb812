use crate::model::{dynamics_step, normalize_angle, InputLimits, ReferencePath, RobotInput, RobotState};

/// Inverse-dynamics tracking of target positions `targets[1..]`, one per step.
pub fn tracking_inputs(initial: &RobotState, targets: &[[f64; 2]], dt: f64, limits: &InputLimits) -> Vec<RobotInput> {
    let mut x = *initial;
    let mut out = Vec::with_capacity(targets.len().saturating_sub(1));
    for q in targets.iter().skip(1) {
        let d = [q[0] - x.x, q[1] - x.y];
        let dist = d[0].hypot(d[1]);
        let heading = if dist > 1e-6 { d[1].atan2(d[0]) } else { x.psi };
        let err = normalize_angle(heading - x.psi);
        let omega = err / dt;
        let v_des = if err.abs() < std::f64::consts::FRAC_PI_2 { dist / dt * err.cos() } else { 0.0 };
        let a = 2.0 * (v_des - x.v) / dt;
        let (u, _) = RobotInput::new(a, omega).clamp(limits);
        x = dynamics_step(&x, &u, dt, limits).state;
        out.push(u);
    }
    out
}

/// Tracking of the reference path at `v_ref` from the current progress.
pub fn reference_inputs(
    initial: &RobotState,
    path: &ReferencePath,
    v_ref: f64,
    n: usize,
    dt: f64,
    limits: &InputLimits,
) -> Vec<RobotInput> {
    let targets: Vec<[f64; 2]> = (0..=n).map(|k| path.frame(initial.s + v_ref * k as f64 * dt).pos).collect();
    tracking_inputs(initial, &targets, dt, limits)
}

/// Previous solution advanced by `shift` seconds (piecewise-constant inputs), last input held.
pub fn shifted_inputs(previous: &[RobotInput], shift: f64, dt: f64, n: usize) -> Vec<RobotInput> {
    if previous.is_empty() {
        return vec![RobotInput::default(); n];
    }
    (0..n)
        .map(|k| {
            let idx = ((k as f64 * dt + shift) / dt + 1e-9).floor() as usize;
            previous[idx.min(previous.len() - 1)]
        })
        .collect()
}
