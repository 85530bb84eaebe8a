//! Backward integration of the terminal-value coefficient systems and
//! forward integration of the market-share state.
//!
//! The value functions are affine in the state, V = e^(-rt)(alpha + beta*x),
//! so each player contributes one intercept path alpha(t) and one slope path
//! beta(t). The beta system is self-contained; the alpha equations depend on
//! the betas only, so the whole stack integrates jointly with a classical
//! fourth-order one-step method, backward from the zero terminal data.

use crate::model::{ModelError, QualitySchedule, Scenario, ScenarioConfig, TimeGrid, THETA_MAX};

/// Coefficients are declared blown up past this bound and the path is
/// marked infeasible instead of aborting, so a theta scan can skip it.
pub const BLOWUP_BOUND: f64 = 1e12;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SolveError {
    #[error("theta = {0} outside [0, {THETA_MAX}]")]
    ThetaOutOfRange(f64),
    #[error("coefficient path is infeasible at theta = {0}")]
    Infeasible(f64),
    #[error("coefficient path was solved at theta = {path}, requested {requested}")]
    ThetaMismatch { path: f64, requested: f64 },
    #[error("operation requires a scenario {expected} configuration")]
    ScenarioMismatch { expected: Scenario },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Discretized value-function coefficients for a fixed subsidy rate.
///
/// All arrays have `grid.len()` entries; the terminal node is the literal
/// zero terminal condition, seeded rather than integrated.
#[derive(Debug, Clone)]
pub struct CoefficientPath {
    pub theta: f64,
    pub scenario: Scenario,
    pub grid: TimeGrid,
    pub alpha1: Vec<f64>,
    pub beta1: Vec<f64>,
    pub alpha_m: Vec<f64>,
    pub beta_m: Vec<f64>,
    /// Competing retailer's intercept path; present iff scenario II.
    pub alpha2: Option<Vec<f64>>,
    /// Competing retailer's slope path; present iff scenario II.
    pub beta2: Option<Vec<f64>>,
    /// False when the integration exceeded [`BLOWUP_BOUND`].
    pub feasible: bool,
}

impl CoefficientPath {
    /// Linear interpolation of the slope paths at an arbitrary time.
    pub(crate) fn betas_at(&self, t: f64) -> (f64, f64, f64) {
        let (k, w) = self.grid_weight(t);
        let lerp = |a: &[f64]| a[k] + (a[k + 1] - a[k]) * w;
        let beta2 = self.beta2.as_ref().map(|b| lerp(b)).unwrap_or(0.0);
        (lerp(&self.beta1), beta2, lerp(&self.beta_m))
    }

    fn grid_weight(&self, t: f64) -> (usize, f64) {
        let n = self.grid.steps();
        let s = (t / self.grid.dt()).clamp(0.0, n as f64);
        let k = (s.floor() as usize).min(n - 1);
        (k, s - k as f64)
    }
}

/// Market share trajectory for a fixed subsidy rate.
#[derive(Debug, Clone)]
pub struct StatePath {
    pub theta: f64,
    pub grid: TimeGrid,
    pub x: Vec<f64>,
}

/// Squared effective effectiveness (rho * q(t))^2 for each player.
struct Gains<'a> {
    config: &'a ScenarioConfig,
}

impl Gains<'_> {
    fn sq(&self, rho: f64, q: &QualitySchedule, t: f64) -> f64 {
        let horizon = self.config.params.horizon;
        let v = rho * q.eval_clamped(t, horizon);
        v * v
    }

    /// (rho1*q1)^2
    fn a(&self, t: f64) -> f64 {
        self.sq(self.config.params.rho1, &self.config.q1, t)
    }

    /// (rhoM*qM)^2
    fn b(&self, t: f64) -> f64 {
        self.sq(self.config.params.rho_m, &self.config.q_m, t)
    }

    /// (rho2*q2)^2; zero for scenario I.
    fn e(&self, t: f64) -> f64 {
        match &self.config.q2 {
            Some(q2) => self.sq(self.config.params.rho2, q2, t),
            None => 0.0,
        }
    }
}

/// One classical fourth-order step from t to t+h (h may be negative).
fn rk4_step<const D: usize>(
    f: &impl Fn(f64, &[f64; D]) -> [f64; D],
    t: f64,
    y: &[f64; D],
    h: f64,
) -> [f64; D] {
    let add = |y: &[f64; D], k: &[f64; D], s: f64| {
        let mut out = *y;
        for i in 0..D {
            out[i] += s * k[i];
        }
        out
    };
    let k1 = f(t, y);
    let k2 = f(t + h / 2.0, &add(y, &k1, h / 2.0));
    let k3 = f(t + h / 2.0, &add(y, &k2, h / 2.0));
    let k4 = f(t + h, &add(y, &k3, h));
    let mut out = *y;
    for i in 0..D {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates backward from zero terminal data on the grid. Returns the
/// per-node states (index 0 = t_0) and whether the path stayed bounded.
fn integrate_backward<const D: usize>(
    grid: &TimeGrid,
    f: impl Fn(f64, &[f64; D]) -> [f64; D],
) -> (Vec<[f64; D]>, bool) {
    let n = grid.steps();
    let mut path = vec![[f64::NAN; D]; n + 1];
    path[n] = [0.0; D];
    let mut y = [0.0; D];
    for k in (1..=n).rev() {
        let t = grid.node(k);
        let h = grid.node(k - 1) - t;
        y = rk4_step(&f, t, &y, h);
        if y.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP_BOUND) {
            return (path, false);
        }
        path[k - 1] = y;
    }
    (path, true)
}

fn check_theta(theta: f64) -> Result<(), SolveError> {
    if theta.is_finite() && (0.0..=THETA_MAX).contains(&theta) {
        Ok(())
    } else {
        Err(SolveError::ThetaOutOfRange(theta))
    }
}

/// Solves the scenario I coefficient system backward from t = T.
pub fn solve_coefficients_i(config: &ScenarioConfig, theta: f64) -> Result<CoefficientPath, SolveError> {
    if config.scenario != Scenario::I {
        return Err(SolveError::ScenarioMismatch { expected: Scenario::I });
    }
    check_theta(theta)?;
    let grid = config.grid();
    let p = config.params;
    let gains = Gains { config };
    let d = 1.0 - theta;

    // State layout: [beta1, betaM, alpha1, alphaM].
    let f = |t: f64, y: &[f64; 4]| -> [f64; 4] {
        let [b1, bm, a1, am] = *y;
        let a = gains.a(t);
        let b = gains.b(t);
        let riccati1 = a * b1 * b1 / (4.0 * d) + b * b1 * bm / 2.0;
        let cross_m = b * bm * bm / 4.0 - a * theta * b1 * b1 / (4.0 * d * d) + a * b1 * bm / (2.0 * d);
        [
            p.r * b1 + riccati1 - p.c1,
            p.r * bm + cross_m - p.c_m,
            p.r * a1 - riccati1,
            p.r * am - cross_m,
        ]
    };
    let (path, feasible) = integrate_backward(&grid, f);
    let pick = |i: usize| path.iter().map(|y| y[i]).collect::<Vec<_>>();
    Ok(CoefficientPath {
        theta,
        scenario: Scenario::I,
        grid,
        beta1: pick(0),
        beta_m: pick(1),
        alpha1: pick(2),
        alpha_m: pick(3),
        alpha2: None,
        beta2: None,
        feasible,
    })
}

/// Solves the scenario II coefficient system backward from t = T.
pub fn solve_coefficients_ii(config: &ScenarioConfig, theta: f64) -> Result<CoefficientPath, SolveError> {
    if config.scenario != Scenario::II {
        return Err(SolveError::ScenarioMismatch { expected: Scenario::II });
    }
    check_theta(theta)?;
    let grid = config.grid();
    let p = config.params;
    let gains = Gains { config };
    let d = 1.0 - theta;

    // State layout: [beta1, beta2, betaM, alpha1, alpha2, alphaM].
    let f = |t: f64, y: &[f64; 6]| -> [f64; 6] {
        let [b1, b2, bm, a1, a2, am] = *y;
        let a = gains.a(t);
        let b = gains.b(t);
        let e = gains.e(t);
        let riccati1 = a * b1 * b1 / (4.0 * d) + b * b1 * bm / 2.0;
        let cross2 = a * b1 * b2 / (2.0 * d) + b * b2 * bm / 2.0;
        let cross_m = b * bm * bm / 4.0 - a * theta * b1 * b1 / (4.0 * d * d) + a * b1 * bm / (2.0 * d);
        [
            p.r * b1 + riccati1 - e * b1 * b2 / 2.0 - p.c1,
            p.r * b2 + cross2 - e * b2 * b2 / 4.0 + p.c2,
            p.r * bm + cross_m - e * b2 * bm / 2.0 - p.c_m,
            p.r * a1 - riccati1,
            p.r * a2 - cross2 - p.c2,
            p.r * am - cross_m,
        ]
    };
    let (path, feasible) = integrate_backward(&grid, f);
    let pick = |i: usize| path.iter().map(|y| y[i]).collect::<Vec<_>>();
    Ok(CoefficientPath {
        theta,
        scenario: Scenario::II,
        grid,
        beta1: pick(0),
        beta2: Some(pick(1)),
        beta_m: pick(2),
        alpha1: pick(3),
        alpha2: Some(pick(4)),
        alpha_m: pick(5),
        feasible,
    })
}

/// Solves the coefficient system for whichever scenario the configuration
/// declares.
pub fn solve_coefficients(config: &ScenarioConfig, theta: f64) -> Result<CoefficientPath, SolveError> {
    match config.scenario {
        Scenario::I => solve_coefficients_i(config, theta),
        Scenario::II => solve_coefficients_ii(config, theta),
    }
}

/// Forward integration of the equilibrium market share from x(0) = x0.
///
/// Coefficient values at stage times come from linear interpolation of the
/// stored paths; the share is clamped into [0, 1] after each step.
pub fn integrate_state(
    config: &ScenarioConfig,
    theta: f64,
    coeffs: &CoefficientPath,
) -> Result<StatePath, SolveError> {
    if !coeffs.feasible {
        return Err(SolveError::Infeasible(coeffs.theta));
    }
    if coeffs.theta != theta {
        return Err(SolveError::ThetaMismatch {
            path: coeffs.theta,
            requested: theta,
        });
    }
    check_theta(theta)?;
    let grid = config.grid();
    let gains = Gains { config };
    let d = 1.0 - theta;

    let f = |t: f64, y: &[f64; 1]| -> [f64; 1] {
        let x = y[0];
        let (b1, b2, bm) = coeffs.betas_at(t);
        let drift = gains.a(t) * b1 / (2.0 * d) + gains.b(t) * bm / 2.0;
        [drift * (1.0 - x) + gains.e(t) * b2 * x / 2.0]
    };

    let n = grid.steps();
    let mut x = Vec::with_capacity(n + 1);
    x.push(config.params.x0);
    let mut y = [config.params.x0];
    for k in 0..n {
        let t = grid.node(k);
        let h = grid.node(k + 1) - t;
        y = rk4_step(&f, t, &y, h);
        y[0] = y[0].clamp(0.0, 1.0);
        x.push(y[0]);
    }
    Ok(StatePath { theta, grid, x })
}
