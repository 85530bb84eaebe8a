//! Subsidy-rate grid search: scan theta over [0, THETA_MAX], evaluate the
//! manufacturer and channel objectives at each point, and pick the
//! non-integrated optimum theta_star and the integrated optimum theta_bar.
//!
//! Grid search only: the objectives are not known to be unimodal in theta,
//! so bracketing methods are unsafe. Ties break toward the smaller theta.

use rayon::prelude::*;

use crate::equilibrium::{build_trajectory, profits, ProfitReport};
use crate::model::{ScenarioConfig, THETA_MAX};
use crate::ode::SolveError;

#[derive(Debug, Clone, thiserror::Error)]
pub enum OptimizeError {
    #[error("theta_step = {0} outside (0, 0.1]")]
    BadStep(f64),
    #[error("no feasible theta on the scan grid")]
    NoFeasiblePoint,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// One evaluated point of the theta scan.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SubsidyPoint {
    pub theta: f64,
    pub feasible: bool,
    pub j1: f64,
    pub j2: Option<f64>,
    pub jm: f64,
    pub j_channel: f64,
}

/// Profit-vs-theta curve with both optima.
#[derive(Debug, Clone)]
pub struct SubsidyCurve {
    pub points: Vec<SubsidyPoint>,
    /// Grid theta maximizing the manufacturer's own profit.
    pub theta_star: f64,
    /// Grid theta maximizing total channel profit.
    pub theta_bar: f64,
}

impl SubsidyCurve {
    pub fn point_at(&self, theta: f64) -> Option<&SubsidyPoint> {
        self.points.iter().find(|p| p.theta == theta)
    }

    pub fn star_point(&self) -> &SubsidyPoint {
        self.point_at(self.theta_star).expect("theta_star is a grid member")
    }

    pub fn bar_point(&self) -> &SubsidyPoint {
        self.point_at(self.theta_bar).expect("theta_bar is a grid member")
    }
}

/// Theta grid {0, step, 2 step, ..., THETA_MAX}.
fn theta_grid(step: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..)
        .map(|k| k as f64 * step)
        .take_while(|&t| t <= THETA_MAX + 1e-12)
        .map(|t| t.min(THETA_MAX))
        .collect();
    if grid.last().map(|&t| t < THETA_MAX - 1e-12).unwrap_or(true) {
        grid.push(THETA_MAX);
    }
    grid
}

fn argmax_by(points: &[SubsidyPoint], key: impl Fn(&SubsidyPoint) -> f64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for p in points.iter().filter(|p| p.feasible) {
        let v = key(p);
        // Strict improvement only, so ties keep the smaller theta.
        if best.map(|(_, bv)| v > bv).unwrap_or(true) {
            best = Some((p.theta, v));
        }
    }
    best.map(|(t, _)| t)
}

/// Evaluates JM(theta) and Jchannel(theta) over the theta grid and records
/// both argmax rates. Infeasible points are recorded and excluded from the
/// argmax. Points evaluate in parallel; the result is ordered by theta.
pub fn scan_subsidy(config: &ScenarioConfig, theta_step: f64) -> Result<SubsidyCurve, OptimizeError> {
    if !(theta_step.is_finite() && theta_step > 0.0 && theta_step <= 0.1) {
        return Err(OptimizeError::BadStep(theta_step));
    }
    let grid = theta_grid(theta_step);
    let points: Vec<SubsidyPoint> = grid
        .par_iter()
        .map(|&theta| match build_trajectory(config, theta) {
            Ok(traj) => {
                let ProfitReport { j1, j2, jm, j_channel } = profits(config, &traj);
                SubsidyPoint {
                    theta,
                    feasible: true,
                    j1,
                    j2,
                    jm,
                    j_channel,
                }
            }
            Err(_) => SubsidyPoint {
                theta,
                feasible: false,
                j1: f64::NAN,
                j2: None,
                jm: f64::NAN,
                j_channel: f64::NAN,
            },
        })
        .collect();

    let theta_star = argmax_by(&points, |p| p.jm).ok_or(OptimizeError::NoFeasiblePoint)?;
    let theta_bar = argmax_by(&points, |p| p.j_channel).ok_or(OptimizeError::NoFeasiblePoint)?;
    Ok(SubsidyCurve {
        points,
        theta_star,
        theta_bar,
    })
}

/// Returns (theta_star, theta_bar), re-verifying the recorded argmax pair
/// against the stored curve.
pub fn optimal_rates(curve: &SubsidyCurve) -> Result<(f64, f64), OptimizeError> {
    let star = argmax_by(&curve.points, |p| p.jm).ok_or(OptimizeError::NoFeasiblePoint)?;
    let bar = argmax_by(&curve.points, |p| p.j_channel).ok_or(OptimizeError::NoFeasiblePoint)?;
    debug_assert_eq!(star, curve.theta_star);
    debug_assert_eq!(bar, curve.theta_bar);
    Ok((star, bar))
}
