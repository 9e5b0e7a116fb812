use serde::{Deserialize, Serialize};

use super::pedestrians::{social_forces_step, Agent, Pedestrian, SocialForceParams};
use crate::model::{ObstaclePrediction, Workspace};

/// Obstacle motion model handed to the planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PredictionModel {
    ConstantVelocity,
    /// Forward simulation of the crowd model itself (robot at constant velocity).
    SocialForcesOracle,
    /// Constant-velocity mean with noise `eta ~ N(0, sigma I)` on the velocity.
    Gaussian { sigma: f64 },
}

/// Everything `predict` may read: current pedestrian states and the scene.
pub struct PredictionInput<'a> {
    pub pedestrians: &'a [Pedestrian],
    pub robot: Agent,
    pub walls: &'a Workspace,
    pub params: &'a SocialForceParams,
}

/// Predictions `o_0..o_N` at spacing `dt` with the planner-side radius.
pub fn predict(input: &PredictionInput, model: PredictionModel, n: usize, dt: f64, radius: f64) -> Vec<ObstaclePrediction> {
    match model {
        PredictionModel::ConstantVelocity | PredictionModel::Gaussian { .. } => {
            let mut out: Vec<ObstaclePrediction> = input
                .pedestrians
                .iter()
                .map(|p| ObstaclePrediction::constant_velocity(p.id, p.pos, p.vel, radius, n, dt))
                .collect();
            if let PredictionModel::Gaussian { sigma } = model {
                for o in &mut out {
                    o.covariances = Some((0..=n).map(|k| gaussian_covariance(sigma, k, dt)).collect());
                }
            }
            out
        }
        PredictionModel::SocialForcesOracle => {
            const SUBSTEPS: usize = 4;
            let h = dt / SUBSTEPS as f64;
            let mut peds = input.pedestrians.to_vec();
            let mut robot = input.robot;
            let mut traces: Vec<Vec<[f64; 2]>> = peds.iter().map(|p| vec![p.pos]).collect();
            for _ in 0..n {
                for _ in 0..SUBSTEPS {
                    peds = social_forces_step(&peds, Some(&robot), input.walls, input.params, h);
                    robot.pos = [robot.pos[0] + robot.vel[0] * h, robot.pos[1] + robot.vel[1] * h];
                }
                for (t, p) in traces.iter_mut().zip(&peds) {
                    t.push(p.pos);
                }
            }
            input
                .pedestrians
                .iter()
                .zip(traces)
                .map(|(p, positions)| ObstaclePrediction::new(p.id, positions, radius))
                .collect()
        }
    }
}

/// Covariance of `o_k` under `o_{j+1} = o_j + (v + eta_j) dt`, `eta_j ~ N(0, sigma I)`.
pub fn gaussian_covariance(sigma: f64, k: usize, dt: f64) -> [[f64; 2]; 2] {
    let v = sigma * k as f64 * dt * dt;
    [[v, 0.0], [0.0, v]]
}
