use serde::{Deserialize, Serialize};

use super::program::{from_flat, to_flat, Program, RowKind};
use super::OptimizedTrajectory;
use crate::clock::{Deadline, Stopwatch};
use crate::model::{RobotInput, RobotState, SolverSettings};

const RHO_INIT: f64 = 10.0;
const RHO_MAX: f64 = 1e7;
const RHO_RAISES: usize = 3;
const SLACK_TOL: f64 = 1e-9;
/// Rows farther than this from activity are left out of the QP (they stay in the merit).
const PRUNE: f64 = 2.5;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 25;
const HESSIAN_REG: f64 = 1e-8;
const SLACK_REG: f64 = 1e-8;
/// Infeasible iterates give up after this many iterations without a 1% violation decrease.
const INFEASIBLE_PATIENCE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    Stalled,
    IterationCap,
    LineSearchFailure,
    QpFailure,
    Deadline,
}

/// Per-solve diagnostic record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub status: SolveStatus,
    pub iterations: usize,
    #[serde(with = "crate::serde_float")]
    pub kkt: f64,
    #[serde(with = "crate::serde_float")]
    pub max_violation: f64,
    pub qp_active: usize,
    pub homotopy_rows: usize,
    pub homotopy_active: usize,
    pub degenerate_homotopy: usize,
    pub rho: f64,
}

fn include_row(p: &Program, kind: RowKind, value: f64) -> bool {
    match kind {
        // g = 1 - d^2/r^2 > 1 - ((r + PRUNE)/r)^2
        RowKind::Collision => value > 1.0 - ((p.radius + PRUNE) / p.radius).powi(2),
        _ => value > -PRUNE,
    }
}

struct Qp {
    step: Vec<f64>,
    slack: Vec<f64>,
    active: Vec<usize>,
}

/// Solves the QP subproblem; elastic mode adds one non-negative slack per step.
fn solve_qp(
    p: &Program,
    hess: &[f64],
    grad: &[f64],
    rows: &[(usize, f64, Vec<f64>)],
    u: &[f64],
    elastic: Option<f64>,
) -> Option<Qp> {
    let nu = p.nu();
    let ns = if elastic.is_some() { p.n } else { 0 };
    let nz = nu + ns;
    let mut q = vec![0.0; nz * nz];
    for i in 0..nu {
        q[i * nz..i * nz + nu].copy_from_slice(&hess[i * nu..(i + 1) * nu]);
    }
    for k in 0..ns {
        q[(nu + k) * nz + nu + k] = SLACK_REG;
    }
    let mut c = grad.to_vec();
    c.extend(std::iter::repeat_n(elastic.unwrap_or(0.0), ns));
    let m = rows.len() + ns + 2 * nu;
    let mut a = vec![0.0; m * nz];
    let mut b = vec![0.0; m];
    for (i, (k, value, g)) in rows.iter().enumerate() {
        a[i * nz..i * nz + nu].copy_from_slice(g);
        if ns > 0 {
            a[i * nz + nu + k - 1] = -1.0;
        }
        b[i] = -value;
    }
    let mut r = rows.len();
    for k in 0..ns {
        a[r * nz + nu + k] = -1.0;
        r += 1;
    }
    for idx in 0..nu {
        let lim = if idx % 2 == 0 { p.limits.a_max } else { p.limits.omega_max };
        a[r * nz + idx] = 1.0;
        b[r] = lim - u[idx];
        a[(r + 1) * nz + idx] = -1.0;
        b[r + 1] = lim + u[idx];
        r += 2;
    }
    let sol = quadprog::solve_qp(&mut q, &c, &a, &b, 0, false).ok()?;
    Some(Qp { step: sol.sol[..nu].to_vec(), slack: sol.sol[nu..].to_vec(), active: sol.iact })
}

fn merit(cost: f64, viol: &[f64], rho: f64) -> f64 {
    cost + rho * viol.iter().sum::<f64>()
}

/// Elastic SQP with an l1 merit line search on the condensed program.
pub fn solve(program: &Program, guess: &[RobotInput], settings: &SolverSettings, deadline: &Deadline) -> OptimizedTrajectory {
    let clock = Stopwatch::start();
    let nu = program.nu();
    let mut u = to_flat(guess);
    u.resize(nu, 0.0);
    for (i, v) in u.iter_mut().enumerate() {
        let lim = if i % 2 == 0 { program.limits.a_max } else { program.limits.omega_max };
        *v = v.clamp(-lim, lim);
    }
    let mut xs = program.rollout(&u);
    let mut cost = program.objective(&xs, &u);
    let mut viol = program.step_violations(&xs);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |best: &mut Option<(f64, Vec<f64>)>, cost: f64, maxv: f64, u: &[f64]| {
        if maxv <= settings.tol_ineq && best.as_ref().is_none_or(|(c, _)| cost < *c) {
            *best = Some((cost, u.to_vec()));
        }
    };
    consider(&mut best, cost, program.max_violation(&xs, &u), &u);
    let mut rho = RHO_INIT;
    let mut status = SolveStatus::IterationCap;
    let mut kkt = f64::INFINITY;
    let mut qp_active = 0;
    let mut iterations = 0;
    let mut least_violation = viol.iter().sum::<f64>();
    let mut since_progress = 0;
    while iterations < settings.max_iterations {
        if deadline.expired() {
            status = SolveStatus::Deadline;
            break;
        }
        iterations += 1;
        let lin = program.linearize(&u);
        let (r, jac) = program.residual_jacobian(&lin, &u);
        let mut hess = vec![0.0; nu * nu];
        let mut grad = vec![0.0; nu];
        for (i, ri) in r.iter().enumerate() {
            let row = &jac[i * nu..(i + 1) * nu];
            let nz: Vec<usize> = (0..nu).filter(|&c| row[c] != 0.0).collect();
            for &a in &nz {
                grad[a] += 2.0 * ri * row[a];
                let ra = 2.0 * row[a];
                for &b in &nz {
                    hess[a * nu + b] += ra * row[b];
                }
            }
        }
        for i in 0..nu {
            hess[i * nu + i] += HESSIAN_REG;
        }
        let rows: Vec<(usize, f64, Vec<f64>)> = program
            .rows()
            .iter()
            .filter_map(|row| {
                let value = program.row_eval(row, &lin.states[row.k]).0;
                include_row(program, row.kind, value).then(|| (row.k, value, program.row_gradient(row, &lin)))
            })
            .collect();
        let mut qp = solve_qp(program, &hess, &grad, &rows, &u, None);
        if qp.is_none() {
            for attempt in 0..=RHO_RAISES {
                let Some(sol) = solve_qp(program, &hess, &grad, &rows, &u, Some(rho)) else { break };
                let slack = sol.slack.iter().cloned().fold(0.0, f64::max);
                qp = Some(sol);
                if slack <= SLACK_TOL || rho >= RHO_MAX || attempt == RHO_RAISES {
                    break;
                }
                rho = (rho * 10.0).min(RHO_MAX);
            }
        }
        let Some(qp) = qp else {
            status = SolveStatus::QpFailure;
            break;
        };
        qp_active = qp.active.iter().filter(|&&i| i < rows.len()).count();
        let d = &qp.step;
        // Stationarity residual of the QP model at the current point.
        kkt = (0..nu)
            .map(|i| (0..nu).map(|j| hess[i * nu + j] * d[j]).sum::<f64>().abs())
            .fold(0.0, f64::max);
        let feasible_now = program.max_violation(&xs, &u) <= settings.tol_ineq;
        if feasible_now && kkt <= settings.tol_kkt * (1.0 + cost.abs()) {
            status = SolveStatus::Converged;
            break;
        }
        let gd: f64 = grad.iter().zip(d).map(|(g, s)| g * s).sum();
        let slack_sum: f64 = qp.slack.iter().map(|s| s.max(0.0)).sum();
        let descent = gd + rho * (slack_sum - viol.iter().sum::<f64>());
        let phi0 = merit(cost, &viol, rho);
        if descent >= -1e-12 * (1.0 + phi0.abs()) {
            status = if feasible_now { SolveStatus::Converged } else { SolveStatus::Stalled };
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let trial: Vec<f64> = u.iter().zip(d).map(|(a, s)| a + alpha * s).collect();
            let txs = program.rollout(&trial);
            let tcost = program.objective(&txs, &trial);
            let tviol = program.step_violations(&txs);
            if merit(tcost, &tviol, rho) <= phi0 + ARMIJO * alpha * descent {
                accepted = Some((trial, txs, tcost, tviol));
                break;
            }
            alpha *= 0.5;
        }
        let Some((nu_, nxs, ncost, nviol)) = accepted else {
            status = SolveStatus::LineSearchFailure;
            break;
        };
        let phi1 = merit(ncost, &nviol, rho);
        u = nu_;
        xs = nxs;
        cost = ncost;
        viol = nviol;
        let maxv = program.max_violation(&xs, &u);
        consider(&mut best, cost, maxv, &u);
        let total = viol.iter().sum::<f64>();
        if maxv > settings.tol_ineq {
            if total < 0.99 * least_violation {
                least_violation = total;
                since_progress = 0;
            } else {
                since_progress += 1;
                if since_progress >= INFEASIBLE_PATIENCE {
                    status = SolveStatus::Stalled;
                    break;
                }
            }
        }
        let step_norm = d.iter().fold(0.0f64, |m, s| m.max(s.abs())) * alpha;
        if maxv <= settings.tol_ineq && (step_norm < 1e-10 || (phi0 - phi1).abs() <= 1e-10 * (1.0 + phi0.abs())) {
            status = SolveStatus::Stalled;
            break;
        }
    }
    let (feasible, final_u) = match best {
        Some((_, bu)) if status != SolveStatus::Deadline => (true, bu),
        _ => (false, u),
    };
    let final_xs = program.rollout(&final_u);
    let final_cost = program.objective(&final_xs, &final_u);
    let max_violation = program.max_violation(&final_xs, &final_u);
    let hom_values: Vec<f64> = program
        .rows()
        .iter()
        .filter(|r| r.kind == RowKind::Homotopy)
        .map(|r| program.row_eval(r, &final_xs[r.k]).0)
        .collect();
    let diagnostics = SolveDiagnostics {
        status,
        iterations,
        kkt,
        max_violation,
        qp_active,
        homotopy_rows: hom_values.len(),
        homotopy_active: hom_values.iter().filter(|v| **v > -settings.tol_ineq).count(),
        degenerate_homotopy: program.degenerate_homotopy,
        rho,
    };
    OptimizedTrajectory {
        states: final_xs.iter().map(RobotState::from_vec).collect(),
        inputs: from_flat(&final_u),
        cost: if feasible { final_cost } else { f64::INFINITY },
        feasible,
        iterations,
        solve_time_s: clock.elapsed_secs(),
        dt: program.dt,
        homotopy_id: None,
        guidance_id: None,
        diagnostics,
    }
}
