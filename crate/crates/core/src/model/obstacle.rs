use serde::{Deserialize, Serialize};

/// Predicted positions `o_0..o_N` of one obstacle at spacing `dt`, with an
/// optional Gaussian covariance per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstaclePrediction {
    pub id: u64,
    pub positions: Vec<[f64; 2]>,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariances: Option<Vec<[[f64; 2]; 2]>>,
}

impl ObstaclePrediction {
    pub fn new(id: u64, positions: Vec<[f64; 2]>, radius: f64) -> Self {
        ObstaclePrediction { id, positions, radius, covariances: None }
    }

    /// An obstacle that does not move over `steps` steps.
    pub fn stationary(id: u64, pos: [f64; 2], radius: f64, steps: usize) -> Self {
        Self::new(id, vec![pos; steps + 1], radius)
    }

    /// Constant-velocity prediction `o_k = o_0 + k dt v`.
    pub fn constant_velocity(id: u64, pos: [f64; 2], vel: [f64; 2], radius: f64, steps: usize, dt: f64) -> Self {
        let positions = (0..=steps)
            .map(|k| {
                let t = k as f64 * dt;
                [pos[0] + vel[0] * t, pos[1] + vel[1] * t]
            })
            .collect();
        Self::new(id, positions, radius)
    }

    pub fn steps(&self) -> usize {
        self.positions.len().saturating_sub(1)
    }

    /// Position at continuous time `t`, linearly interpolated between steps
    /// and held constant outside the prediction window.
    pub fn position_at(&self, t: f64, dt: f64) -> [f64; 2] {
        let n = self.steps();
        if t <= 0.0 || n == 0 {
            return self.positions[0];
        }
        let f = t / dt;
        if f >= n as f64 {
            return self.positions[n];
        }
        let k = f.floor() as usize;
        let w = f - k as f64;
        let (a, b) = (self.positions[k], self.positions[k + 1]);
        [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
    }

    pub fn covariance(&self, k: usize) -> Option<[[f64; 2]; 2]> {
        self.covariances.as_ref().and_then(|c| c.get(k).copied())
    }

    /// Checks the length and covariance invariants for a horizon of `n` steps.
    pub fn validate(&self, n: usize) -> crate::Result<()> {
        if self.positions.len() != n + 1 {
            return Err(crate::Error::Config(format!(
                "obstacle {} has {} positions, expected {}",
                self.id,
                self.positions.len(),
                n + 1
            )));
        }
        if let Some(cov) = &self.covariances {
            if cov.len() != n + 1 {
                return Err(crate::Error::Config(format!("obstacle {} covariance count mismatch", self.id)));
            }
            for c in cov {
                let sym = (c[0][1] - c[1][0]).abs() <= 1e-12 * (1.0 + c[0][1].abs());
                let tr = c[0][0] + c[1][1];
                let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
                if !sym || c[0][0] < 0.0 || c[1][1] < 0.0 || det < -1e-12 || tr < 0.0 {
                    return Err(crate::Error::Config(format!("obstacle {} covariance not symmetric PSD", self.id)));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_and_hold() {
        let o = ObstaclePrediction::constant_velocity(1, [0.0, 0.0], [1.0, 0.0], 0.4, 5, 0.2);
        assert_eq!(o.positions.len(), 6);
        let p = o.position_at(0.3, 0.2);
        assert!((p[0] - 0.3).abs() < 1e-12);
        assert_eq!(o.position_at(5.0, 0.2), o.positions[5]);
        assert_eq!(o.position_at(-1.0, 0.2), o.positions[0]);
        assert!(o.validate(5).is_ok());
        assert!(o.validate(4).is_err());
    }

    #[test]
    fn covariance_validation() {
        let mut o = ObstaclePrediction::stationary(2, [1.0, 1.0], 0.4, 2);
        o.covariances = Some(vec![[[0.09, 0.0], [0.0, 0.09]]; 3]);
        assert!(o.validate(2).is_ok());
        o.covariances = Some(vec![[[0.09, 0.2], [0.2, 0.09]]; 3]);
        assert!(o.validate(2).is_err());
    }
}
