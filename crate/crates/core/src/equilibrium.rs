//! Feedback control evaluation, trajectory assembly, discounted profit
//! quadrature, value-function evaluation, and HJ-residual verification.

use crate::model::{Scenario, ScenarioConfig};
use crate::ode::{integrate_state, solve_coefficients, CoefficientPath, SolveError};

#[derive(Debug, Clone, thiserror::Error)]
pub enum EquilibriumError {
    #[error("node index {k} out of range (need 0 < k < {n})")]
    BoundaryIndex { k: usize, n: usize },
}

/// Feedback controls at a single node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub u1: f64,
    pub v: f64,
    /// Competing retailer's effort; present iff scenario II.
    pub u2: Option<f64>,
    /// True for each control that was projected up to zero.
    pub projected: ProjectionFlags,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProjectionFlags {
    pub u1: bool,
    pub v: bool,
    pub u2: bool,
}

impl ProjectionFlags {
    pub fn any(&self) -> bool {
        self.u1 || self.v || self.u2
    }
}

/// Market share and equilibrium controls along the grid.
#[derive(Debug, Clone)]
pub struct EquilibriumTrajectory {
    pub theta: f64,
    pub scenario: Scenario,
    pub grid: crate::model::TimeGrid,
    pub x: Vec<f64>,
    pub u1: Vec<f64>,
    pub v: Vec<f64>,
    pub u2: Option<Vec<f64>>,
    /// Per-control flag: was max(0, .) projection ever active along the path?
    /// The first-order conditions assume interior optima; an active
    /// projection is worth reporting.
    pub projection_active: ProjectionFlags,
}

/// Discounted profits over the horizon.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ProfitReport {
    pub j1: f64,
    /// Competing retailer's profit; present iff scenario II.
    pub j2: Option<f64>,
    pub jm: f64,
    /// Channel profit, j1 + jm.
    pub j_channel: f64,
}

/// Value of each player's value function at (x, t_k).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerValues {
    pub v1: f64,
    pub v2: Option<f64>,
    pub vm: f64,
}

/// Signed HJ-equation residuals at (x, t_k), scaled by e^(rt) so their
/// natural magnitude is that of the margins c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjResiduals {
    pub r1: f64,
    pub r2: Option<f64>,
    pub rm: f64,
}

impl HjResiduals {
    pub fn max_abs(&self) -> f64 {
        let r2 = self.r2.map(f64::abs).unwrap_or(0.0);
        self.r1.abs().max(r2).max(self.rm.abs())
    }
}

fn gain(rho: f64, q: &crate::model::QualitySchedule, t: f64, horizon: f64) -> f64 {
    rho * q.eval_clamped(t, horizon)
}

/// Evaluates the feedback controls at node k for share x, projecting each
/// control to max(0, .).
pub fn feedback_controls(
    config: &ScenarioConfig,
    coeffs: &CoefficientPath,
    x: f64,
    k: usize,
) -> Controls {
    let p = config.params;
    let t = coeffs.grid.node(k);
    let horizon = p.horizon;
    let sqrt_rest = (1.0 - x).max(0.0).sqrt();
    let sqrt_own = x.max(0.0).sqrt();

    let raw_u1 =
        gain(p.rho1, &config.q1, t, horizon) * coeffs.beta1[k] * sqrt_rest / (2.0 * (1.0 - coeffs.theta));
    let raw_v = gain(p.rho_m, &config.q_m, t, horizon) * coeffs.beta_m[k] * sqrt_rest / 2.0;
    let raw_u2 = match (&config.q2, &coeffs.beta2) {
        (Some(q2), Some(beta2)) => Some(-gain(p.rho2, q2, t, horizon) * beta2[k] * sqrt_own / 2.0),
        _ => None,
    };

    let mut projected = ProjectionFlags::default();
    let clamp = |raw: f64, flag: &mut bool| {
        if raw < 0.0 {
            *flag = true;
            0.0
        } else {
            raw
        }
    };
    let u1 = clamp(raw_u1, &mut projected.u1);
    let v = clamp(raw_v, &mut projected.v);
    let u2 = raw_u2.map(|raw| clamp(raw, &mut projected.u2));
    Controls { u1, v, u2, projected }
}

/// Solves the coefficients, integrates the share, and evaluates the
/// controls at every node. An infeasible theta surfaces as
/// [`SolveError::Infeasible`].
pub fn build_trajectory(config: &ScenarioConfig, theta: f64) -> Result<EquilibriumTrajectory, SolveError> {
    let coeffs = solve_coefficients(config, theta)?;
    if !coeffs.feasible {
        return Err(SolveError::Infeasible(theta));
    }
    let state = integrate_state(config, theta, &coeffs)?;
    Ok(assemble_trajectory(config, &coeffs, &state.x))
}

/// Evaluates controls along an already-solved share path.
pub fn assemble_trajectory(
    config: &ScenarioConfig,
    coeffs: &CoefficientPath,
    x: &[f64],
) -> EquilibriumTrajectory {
    let n = coeffs.grid.steps();
    debug_assert_eq!(x.len(), n + 1);
    let mut u1 = Vec::with_capacity(n + 1);
    let mut v = Vec::with_capacity(n + 1);
    let mut u2 = config.scenario.has_competitor().then(|| Vec::with_capacity(n + 1));
    let mut projection_active = ProjectionFlags::default();
    for k in 0..=n {
        let c = feedback_controls(config, coeffs, x[k], k);
        u1.push(c.u1);
        v.push(c.v);
        if let (Some(u2s), Some(cu2)) = (u2.as_mut(), c.u2) {
            u2s.push(cu2);
        }
        projection_active.u1 |= c.projected.u1;
        projection_active.v |= c.projected.v;
        projection_active.u2 |= c.projected.u2;
    }
    EquilibriumTrajectory {
        theta: coeffs.theta,
        scenario: config.scenario,
        grid: coeffs.grid,
        x: x.to_vec(),
        u1,
        v,
        u2,
        projection_active,
    }
}

/// Composite trapezoid of a discounted flow sampled on the grid.
fn discounted_trapezoid(grid: &crate::model::TimeGrid, r: f64, flow: impl Fn(usize) -> f64) -> f64 {
    let n = grid.steps();
    let dt = grid.dt();
    let mut acc = 0.5 * (flow(0) + flow(n) * (-r * grid.horizon()).exp());
    for k in 1..n {
        acc += flow(k) * (-r * grid.node(k)).exp();
    }
    acc * dt
}

/// Discounted profits of every player along a trajectory.
pub fn profits(config: &ScenarioConfig, traj: &EquilibriumTrajectory) -> ProfitReport {
    let p = config.params;
    let theta = traj.theta;
    let j1 = discounted_trapezoid(&traj.grid, p.r, |k| {
        p.c1 * traj.x[k] - (1.0 - theta) * traj.u1[k] * traj.u1[k]
    });
    let jm = discounted_trapezoid(&traj.grid, p.r, |k| {
        p.c_m * traj.x[k] - traj.v[k] * traj.v[k] - theta * traj.u1[k] * traj.u1[k]
    });
    let j2 = traj.u2.as_ref().map(|u2| {
        discounted_trapezoid(&traj.grid, p.r, |k| {
            p.c2 * (1.0 - traj.x[k]) - u2[k] * u2[k]
        })
    });
    ProfitReport {
        j1,
        j2,
        jm,
        j_channel: j1 + jm,
    }
}

/// Value functions e^(-rt_k) (alpha_i[k] + beta_i[k] x) per player.
pub fn value_at(config: &ScenarioConfig, coeffs: &CoefficientPath, x: f64, k: usize) -> PlayerValues {
    let disc = (-config.params.r * coeffs.grid.node(k)).exp();
    let v2 = match (&coeffs.alpha2, &coeffs.beta2) {
        (Some(a2), Some(b2)) => Some(disc * (a2[k] + b2[k] * x)),
        _ => None,
    };
    PlayerValues {
        v1: disc * (coeffs.alpha1[k] + coeffs.beta1[k] * x),
        v2,
        vm: disc * (coeffs.alpha_m[k] + coeffs.beta_m[k] * x),
    }
}

/// Evaluates the left side of each player's HJ equation at (x, t_k), with
/// the coefficient time derivatives taken by centered differences. Interior
/// nodes only. For a correct solve the residuals vanish up to
/// discretization error.
pub fn hj_residual(
    config: &ScenarioConfig,
    coeffs: &CoefficientPath,
    x: f64,
    k: usize,
) -> Result<HjResiduals, EquilibriumError> {
    let n = coeffs.grid.steps();
    if k == 0 || k >= n {
        return Err(EquilibriumError::BoundaryIndex { k, n });
    }
    let p = config.params;
    let t = coeffs.grid.node(k);
    let dt = coeffs.grid.dt();
    let horizon = p.horizon;
    let theta = coeffs.theta;
    let d = 1.0 - theta;
    let ddt = |path: &[f64]| (path[k + 1] - path[k - 1]) / (2.0 * dt);

    let a = gain(p.rho1, &config.q1, t, horizon).powi(2);
    let b = gain(p.rho_m, &config.q_m, t, horizon).powi(2);
    let e = config
        .q2
        .as_ref()
        .map(|q2| gain(p.rho2, q2, t, horizon).powi(2))
        .unwrap_or(0.0);

    let b1 = coeffs.beta1[k];
    let bm = coeffs.beta_m[k];
    let b2 = coeffs.beta2.as_ref().map(|v| v[k]).unwrap_or(0.0);
    let rest = 1.0 - x;

    let r1 = (ddt(&coeffs.alpha1) + ddt(&coeffs.beta1) * x)
        - p.r * (coeffs.alpha1[k] + b1 * x)
        + p.c1 * x
        + a * b1 * b1 * rest / (4.0 * d)
        + e * b1 * b2 * x / 2.0
        + b * b1 * bm * rest / 2.0;

    let rm = (ddt(&coeffs.alpha_m) + ddt(&coeffs.beta_m) * x)
        - p.r * (coeffs.alpha_m[k] + bm * x)
        + p.c_m * x
        + b * bm * bm * rest / 4.0
        - theta * a * b1 * b1 * rest / (4.0 * d * d)
        + a * b1 * bm * rest / (2.0 * d)
        + e * b2 * bm * x / 2.0;

    let r2 = match (&coeffs.alpha2, &coeffs.beta2) {
        (Some(a2), Some(b2v)) => Some(
            (ddt(a2) + ddt(b2v) * x) - p.r * (a2[k] + b2 * x)
                + p.c2 * rest
                + a * b1 * b2 * rest / (2.0 * d)
                + e * b2 * b2 * x / 4.0
                + b * b2 * bm * rest / 2.0,
        ),
        _ => None,
    };

    Ok(HjResiduals { r1, r2, rm })
}
