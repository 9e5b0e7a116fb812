use serde::{Deserialize, Serialize};

use super::constraints::{chance_constraint, collision_constraint, collision_constraint_ellipse, homotopy_constraint, risk_factor};
use super::cost::path_errors;
use crate::homotopy::PolylineTrajectory;
use crate::model::dynamics::{rk4, rk4_with_jacobian, InputVec, StateVec};
use crate::model::{InputLimits, ObstaclePrediction, PlannerConfig, ReferencePath, RobotInput, RobotState, Weights, Workspace};

/// One local planning problem.
#[derive(Debug, Clone, Copy)]
pub struct PlanProblem<'a> {
    pub initial: RobotState,
    pub obstacles: &'a [ObstaclePrediction],
    pub path: &'a ReferencePath,
    pub workspace: &'a Workspace,
    pub config: &'a PlannerConfig,
    /// Guidance sampled at the `N + 1` steps; `None` for the non-guided planner.
    pub guidance: Option<&'a PolylineTrajectory>,
    /// Emit homotopy rows for the guidance (disabled only for ablations).
    pub homotopy_constraints: bool,
}

impl<'a> PlanProblem<'a> {
    pub fn new(
        initial: RobotState,
        obstacles: &'a [ObstaclePrediction],
        path: &'a ReferencePath,
        workspace: &'a Workspace,
        config: &'a PlannerConfig,
        guidance: Option<&'a PolylineTrajectory>,
    ) -> Self {
        PlanProblem { initial, obstacles, path, workspace, config, guidance, homotopy_constraints: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Collision,
    Chance,
    Homotopy,
    SpeedMin,
    SpeedMax,
    Wall,
}

/// A state inequality row `g(x_k) <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub k: usize,
    pub kind: RowKind,
    /// Obstacle or plane index.
    pub index: usize,
    a: [f64; 2],
    b: f64,
}

/// Sizes of the assembled program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RowCounts {
    pub states: usize,
    pub inputs: usize,
    pub dynamics: usize,
    pub initial: usize,
    pub collision: usize,
    pub chance: usize,
    pub homotopy: usize,
    pub speed: usize,
    pub workspace: usize,
    pub input_bounds: usize,
}

/// Rollout of an input sequence with state sensitivities.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub states: Vec<StateVec>,
    /// `d x_k / d u`, row-major `5 x 2N`.
    sens: Vec<Vec<f64>>,
}

impl Linearization {
    pub fn sensitivity(&self, k: usize) -> &[f64] {
        &self.sens[k]
    }
}

/// Single-shooting form of the optimization problem over the inputs.
#[derive(Debug, Clone)]
pub struct Program<'a> {
    pub path: &'a ReferencePath,
    pub n: usize,
    pub dt: f64,
    pub x0: StateVec,
    pub weights: Weights,
    pub v_ref: f64,
    pub s_ideal: f64,
    pub limits: InputLimits,
    pub radius: f64,
    obstacles: Vec<&'a ObstaclePrediction>,
    rows: Vec<Row>,
    pub counts: RowCounts,
    /// Homotopy rows skipped because guidance and obstacle coincide.
    pub degenerate_homotopy: usize,
    kappa: Option<f64>,
    ellipse: Option<[f64; 2]>,
}

fn obstacle_at(o: &ObstaclePrediction, k: usize) -> [f64; 2] {
    o.positions[k.min(o.positions.len() - 1)]
}

/// Builds the program; constraints cover the `max_obstacles` obstacles nearest the robot.
pub fn assemble<'a>(problem: &PlanProblem<'a>) -> Program<'a> {
    let cfg = problem.config;
    let n = cfg.horizon_steps;
    let p0 = problem.initial.pos();
    let mut obstacles: Vec<&ObstaclePrediction> = problem.obstacles.iter().collect();
    obstacles.sort_by(|a, b| {
        let da = (a.positions[0][0] - p0[0]).hypot(a.positions[0][1] - p0[1]);
        let db = (b.positions[0][0] - p0[0]).hypot(b.positions[0][1] - p0[1]);
        da.total_cmp(&db).then(a.id.cmp(&b.id))
    });
    obstacles.truncate(cfg.max_obstacles);
    let kappa = cfg.risk.map(risk_factor);
    let mut rows = Vec::new();
    let mut counts = RowCounts {
        states: 5 * (n + 1),
        inputs: 2 * n,
        dynamics: 5 * n,
        initial: 5,
        input_bounds: 4 * n,
        ..Default::default()
    };
    let mut degenerate = 0;
    let guidance = problem.guidance.filter(|_| problem.homotopy_constraints);
    for k in 1..=n {
        for (j, o) in obstacles.iter().enumerate() {
            let chance = kappa.is_some() && o.covariance(k).is_some();
            let kind = if chance { RowKind::Chance } else { RowKind::Collision };
            if chance {
                counts.chance += 1;
            } else {
                counts.collision += 1;
            }
            rows.push(Row { k, kind, index: j, a: [0.0; 2], b: 0.0 });
        }
        if let Some(g) = guidance {
            let tau = g.position_at(k as f64 * cfg.dt);
            for (j, o) in obstacles.iter().enumerate() {
                match homotopy_constraint(tau, obstacle_at(o, k), cfg.beta, cfg.radius) {
                    Ok((a, b)) => {
                        counts.homotopy += 1;
                        rows.push(Row { k, kind: RowKind::Homotopy, index: j, a, b });
                    }
                    Err(_) => degenerate += 1,
                }
            }
        }
        rows.push(Row { k, kind: RowKind::SpeedMin, index: 0, a: [0.0; 2], b: 0.0 });
        rows.push(Row { k, kind: RowKind::SpeedMax, index: 0, a: [0.0; 2], b: 0.0 });
        counts.speed += 2;
        for (i, pl) in problem.workspace.planes().iter().enumerate() {
            rows.push(Row { k, kind: RowKind::Wall, index: i, a: pl.normal, b: pl.offset - cfg.robot_radius });
            counts.workspace += 1;
        }
    }
    Program {
        path: problem.path,
        n,
        dt: cfg.dt,
        x0: problem.initial.to_vec(),
        weights: cfg.weights,
        v_ref: cfg.v_ref,
        s_ideal: problem.initial.s + cfg.v_ref * cfg.horizon(),
        limits: cfg.limits(),
        radius: cfg.radius,
        obstacles,
        rows,
        counts,
        degenerate_homotopy: degenerate,
        kappa,
        ellipse: cfg.collision_ellipse,
    }
}

pub(crate) fn to_flat(inputs: &[RobotInput]) -> Vec<f64> {
    inputs.iter().flat_map(|u| [u.a, u.omega]).collect()
}

pub(crate) fn from_flat(u: &[f64]) -> Vec<RobotInput> {
    u.chunks(2).map(|c| RobotInput::new(c[0], c[1])).collect()
}

impl<'a> Program<'a> {
    pub fn nu(&self) -> usize {
        2 * self.n
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn obstacles(&self) -> &[&'a ObstaclePrediction] {
        &self.obstacles
    }

    pub fn rollout(&self, u: &[f64]) -> Vec<StateVec> {
        let mut xs = Vec::with_capacity(self.n + 1);
        xs.push(self.x0);
        for k in 0..self.n {
            let uk = InputVec::new(u[2 * k], u[2 * k + 1]);
            let next = rk4(&xs[k], &uk, self.dt);
            xs.push(next);
        }
        xs
    }

    pub fn linearize(&self, u: &[f64]) -> Linearization {
        let nu = self.nu();
        let mut states = Vec::with_capacity(self.n + 1);
        let mut sens = Vec::with_capacity(self.n + 1);
        states.push(self.x0);
        sens.push(vec![0.0; 5 * nu]);
        for k in 0..self.n {
            let uk = InputVec::new(u[2 * k], u[2 * k + 1]);
            let (next, a, b) = rk4_with_jacobian(&states[k], &uk, self.dt);
            let prev = &sens[k];
            let mut s = vec![0.0; 5 * nu];
            for i in 0..5 {
                for m in 0..5 {
                    let aim = a[(i, m)];
                    if aim == 0.0 {
                        continue;
                    }
                    let src = &prev[m * nu..m * nu + 2 * k];
                    let dst = &mut s[i * nu..i * nu + 2 * k];
                    for (d, v) in dst.iter_mut().zip(src) {
                        *d += aim * v;
                    }
                }
                s[i * nu + 2 * k] = b[(i, 0)];
                s[i * nu + 2 * k + 1] = b[(i, 1)];
            }
            states.push(next);
            sens.push(s);
        }
        Linearization { states, sens }
    }

    /// Least-squares residuals; the objective is their squared norm.
    fn residuals(&self, xs: &[StateVec], u: &[f64], mut jac: Option<(&Linearization, &mut Vec<f64>)>) -> Vec<f64> {
        let nu = self.nu();
        let w = &self.weights;
        let (sc, sl, sv, so, sa, st) =
            (w.contour.sqrt(), w.lag.sqrt(), w.velocity.sqrt(), w.omega.sqrt(), w.acceleration.sqrt(), w.terminal.sqrt());
        let mut r = Vec::with_capacity(5 * self.n + 2);
        if let Some((_, j)) = jac.as_mut() {
            j.clear();
            j.resize((5 * self.n + 2) * nu, 0.0);
        }
        let push_state_row = |r: &mut Vec<f64>, value: f64, grad: [f64; 5], k: usize, jac: &mut Option<(&Linearization, &mut Vec<f64>)>| {
            let row = r.len();
            r.push(value);
            if let Some((lin, j)) = jac.as_mut() {
                let s = lin.sensitivity(k);
                let dst = &mut j[row * nu..(row + 1) * nu];
                for (m, g) in grad.iter().enumerate() {
                    if *g != 0.0 {
                        for (d, v) in dst.iter_mut().zip(&s[m * nu..(m + 1) * nu]) {
                            *d += g * v;
                        }
                    }
                }
            }
        };
        for k in 0..self.n {
            let x = &xs[k + 1];
            let e = path_errors(x[0], x[1], x[4], self.path);
            push_state_row(&mut r, sc * e.contour, [sc * e.d_contour[0], sc * e.d_contour[1], 0.0, 0.0, sc * e.d_contour[2]], k + 1, &mut jac);
            push_state_row(&mut r, sl * e.lag, [sl * e.d_lag[0], sl * e.d_lag[1], 0.0, 0.0, sl * e.d_lag[2]], k + 1, &mut jac);
            push_state_row(&mut r, sv * (x[3] - self.v_ref), [0.0, 0.0, 0.0, sv, 0.0], k + 1, &mut jac);
            for (idx, scale) in [(2 * k + 1, so), (2 * k, sa)] {
                let row = r.len();
                r.push(scale * u[idx]);
                if let Some((_, j)) = jac.as_mut() {
                    j[row * nu + idx] = scale;
                }
            }
        }
        let x = &xs[self.n];
        let e = path_errors(x[0], x[1], x[4], self.path);
        push_state_row(&mut r, st * e.contour, [st * e.d_contour[0], st * e.d_contour[1], 0.0, 0.0, st * e.d_contour[2]], self.n, &mut jac);
        push_state_row(&mut r, st * (x[4] - self.s_ideal), [0.0, 0.0, 0.0, 0.0, st], self.n, &mut jac);
        r
    }

    pub fn objective(&self, xs: &[StateVec], u: &[f64]) -> f64 {
        self.residuals(xs, u, None).iter().map(|v| v * v).sum()
    }

    /// Residuals and their Jacobian (row-major, `rows x 2N`).
    pub fn residual_jacobian(&self, lin: &Linearization, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut j = Vec::new();
        let r = self.residuals(&lin.states, u, Some((lin, &mut j)));
        (r, j)
    }

    /// Exact objective gradient in the inputs.
    pub fn objective_gradient(&self, u: &[f64]) -> Vec<f64> {
        let lin = self.linearize(u);
        let (r, j) = self.residual_jacobian(&lin, u);
        let nu = self.nu();
        let mut g = vec![0.0; nu];
        for (i, ri) in r.iter().enumerate() {
            for c in 0..nu {
                g[c] += 2.0 * ri * j[i * nu + c];
            }
        }
        g
    }

    /// Value and state gradient of one row at `x`.
    pub fn row_eval(&self, row: &Row, x: &StateVec) -> (f64, [f64; 5]) {
        let p = [x[0], x[1]];
        match row.kind {
            RowKind::Collision => {
                let o = self.obstacles[row.index];
                let oc = obstacle_at(o, row.k);
                let (g, d) = match self.ellipse {
                    Some(axes) => {
                        let prev = obstacle_at(o, row.k.saturating_sub(1));
                        let next = obstacle_at(o, row.k + 1);
                        let phi = (next[1] - prev[1]).atan2(next[0] - prev[0]);
                        collision_constraint_ellipse(p, oc, axes, phi)
                    }
                    None => collision_constraint(p, oc, self.radius),
                };
                (g, [d[0], d[1], 0.0, 0.0, 0.0])
            }
            RowKind::Chance => {
                let o = self.obstacles[row.index];
                let cov = o.covariance(row.k).unwrap_or([[0.0; 2]; 2]);
                let (g, d) = chance_constraint(p, obstacle_at(o, row.k), cov, self.kappa.unwrap_or(0.0), self.radius);
                (g, [d[0], d[1], 0.0, 0.0, 0.0])
            }
            RowKind::Homotopy | RowKind::Wall => {
                (row.a[0] * p[0] + row.a[1] * p[1] - row.b, [row.a[0], row.a[1], 0.0, 0.0, 0.0])
            }
            RowKind::SpeedMin => (-x[3], [0.0, 0.0, 0.0, -1.0, 0.0]),
            RowKind::SpeedMax => (x[3] - self.limits.v_max, [0.0, 0.0, 0.0, 1.0, 0.0]),
        }
    }

    /// Values of all state rows.
    pub fn row_values(&self, xs: &[StateVec]) -> Vec<f64> {
        self.rows.iter().map(|r| self.row_eval(r, &xs[r.k]).0).collect()
    }

    /// Gradient of one row in the inputs.
    pub fn row_gradient(&self, row: &Row, lin: &Linearization) -> Vec<f64> {
        let nu = self.nu();
        let (_, g) = self.row_eval(row, &lin.states[row.k]);
        let s = lin.sensitivity(row.k);
        let mut out = vec![0.0; nu];
        for (m, gm) in g.iter().enumerate() {
            if *gm != 0.0 {
                for (d, v) in out.iter_mut().zip(&s[m * nu..(m + 1) * nu]) {
                    *d += gm * v;
                }
            }
        }
        out
    }

    /// Input box violations `|a| - a_max`, `|omega| - omega_max` (max over steps).
    pub fn input_violation(&self, u: &[f64]) -> f64 {
        u.chunks(2)
            .map(|c| (c[0].abs() - self.limits.a_max).max(c[1].abs() - self.limits.omega_max))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest violation over every inequality; `<= 0` means feasible.
    pub fn max_violation(&self, xs: &[StateVec], u: &[f64]) -> f64 {
        self.row_values(xs).into_iter().fold(self.input_violation(u), f64::max)
    }

    /// Per-step `max(0, max_i g_{k,i})`, indexed by `k - 1`.
    pub fn step_violations(&self, xs: &[StateVec]) -> Vec<f64> {
        let mut v = vec![0.0f64; self.n];
        for r in &self.rows {
            let g = self.row_eval(r, &xs[r.k]).0;
            if g > v[r.k - 1] {
                v[r.k - 1] = g;
            }
        }
        v
    }
}
