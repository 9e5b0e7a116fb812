use serde::{Deserialize, Serialize};

use crate::model::Workspace;

/// True pedestrian radius (m).
pub const PEDESTRIAN_RADIUS: f64 = 0.3;
/// Radius the planners assume for pedestrians (m).
pub const PLANNER_PEDESTRIAN_RADIUS: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pedestrian {
    pub id: u64,
    pub pos: [f64; 2],
    pub vel: [f64; 2],
    /// Current goal; the pedestrian moves on to the next one when it arrives.
    pub goal: [f64; 2],
    /// Goals after the current one, visited in order.
    pub later_goals: Vec<[f64; 2]>,
    pub desired_speed: f64,
    pub radius: f64,
}

/// Social-forces model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SocialForceParams {
    /// Relaxation time towards the desired velocity (s).
    pub relaxation_time: f64,
    /// Agent repulsion strength (m/s^2) and range (m).
    pub agent_strength: f64,
    pub agent_range: f64,
    /// Weight of interactions behind the pedestrian, in [0, 1].
    pub anisotropy: f64,
    /// Extra factor on the repulsion exerted by the robot.
    pub robot_factor: f64,
    pub wall_strength: f64,
    pub wall_range: f64,
    /// Speed cap as a multiple of the desired speed.
    pub max_speed_factor: f64,
    /// Distance at which a goal counts as reached (m).
    pub goal_tolerance: f64,
}

impl Default for SocialForceParams {
    fn default() -> Self {
        SocialForceParams {
            relaxation_time: 0.5,
            agent_strength: 2.0,
            agent_range: 0.4,
            anisotropy: 0.4,
            robot_factor: 1.5,
            wall_strength: 5.0,
            wall_range: 0.2,
            max_speed_factor: 1.3,
            goal_tolerance: 0.5,
        }
    }
}

/// An agent other than the pedestrians (the robot).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agent {
    pub pos: [f64; 2],
    pub vel: [f64; 2],
    pub radius: f64,
}

fn repulsion(p: &Pedestrian, other: [f64; 2], other_radius: f64, strength: f64, params: &SocialForceParams) -> [f64; 2] {
    let d = [p.pos[0] - other[0], p.pos[1] - other[1]];
    let dist = d[0].hypot(d[1]).max(1e-6);
    let n = [d[0] / dist, d[1] / dist];
    let mag = strength * ((p.radius + other_radius - dist) / params.agent_range).exp();
    // Anisotropy: interactions ahead of the pedestrian weigh more.
    let speed = p.vel[0].hypot(p.vel[1]);
    let cos = if speed > 1e-9 { -(n[0] * p.vel[0] + n[1] * p.vel[1]) / speed } else { 0.0 };
    let w = params.anisotropy + (1.0 - params.anisotropy) * 0.5 * (1.0 + cos);
    [mag * w * n[0], mag * w * n[1]]
}

/// Social-forces acceleration of pedestrian `i`.
pub fn social_force(i: usize, peds: &[Pedestrian], robot: Option<&Agent>, walls: &Workspace, params: &SocialForceParams) -> [f64; 2] {
    let p = &peds[i];
    let to_goal = [p.goal[0] - p.pos[0], p.goal[1] - p.pos[1]];
    let dist = to_goal[0].hypot(to_goal[1]);
    let desired = if dist > 1e-9 {
        let s = p.desired_speed * (dist / params.goal_tolerance).min(1.0);
        [s * to_goal[0] / dist, s * to_goal[1] / dist]
    } else {
        [0.0, 0.0]
    };
    let mut f = [
        (desired[0] - p.vel[0]) / params.relaxation_time,
        (desired[1] - p.vel[1]) / params.relaxation_time,
    ];
    for (j, q) in peds.iter().enumerate() {
        if j != i {
            let r = repulsion(p, q.pos, q.radius, params.agent_strength, params);
            f[0] += r[0];
            f[1] += r[1];
        }
    }
    if let Some(a) = robot {
        let r = repulsion(p, a.pos, a.radius, params.agent_strength * params.robot_factor, params);
        f[0] += r[0];
        f[1] += r[1];
    }
    for h in walls.planes() {
        let clearance = -h.residual(p.pos);
        let mag = params.wall_strength * ((p.radius - clearance) / params.wall_range).exp();
        f[0] -= mag * h.normal[0];
        f[1] -= mag * h.normal[1];
    }
    f
}

/// Advances all pedestrians by `dt` (semi-implicit Euler, speed capped) and
/// switches goals on arrival.
pub fn social_forces_step(
    peds: &[Pedestrian],
    robot: Option<&Agent>,
    walls: &Workspace,
    params: &SocialForceParams,
    dt: f64,
) -> Vec<Pedestrian> {
    let mut out = peds.to_vec();
    for (i, p) in out.iter_mut().enumerate() {
        let f = social_force(i, peds, robot, walls, params);
        let mut v = [p.vel[0] + f[0] * dt, p.vel[1] + f[1] * dt];
        let cap = params.max_speed_factor * p.desired_speed;
        let speed = v[0].hypot(v[1]);
        if speed > cap {
            v = [v[0] * cap / speed, v[1] * cap / speed];
        }
        p.vel = v;
        p.pos = [p.pos[0] + v[0] * dt, p.pos[1] + v[1] * dt];
        if (p.goal[0] - p.pos[0]).hypot(p.goal[1] - p.pos[1]) < params.goal_tolerance && !p.later_goals.is_empty() {
            p.goal = p.later_goals.remove(0);
        }
    }
    out
}

/// True when the pedestrian is at its final goal.
pub fn arrived(p: &Pedestrian, params: &SocialForceParams) -> bool {
    p.later_goals.is_empty() && (p.goal[0] - p.pos[0]).hypot(p.goal[1] - p.pos[1]) < params.goal_tolerance
}
