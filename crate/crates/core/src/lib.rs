//! Numerical solver for two dynamic cooperative search-advertising games:
//! a monopoly channel (scenario I) and the same alliance facing an
//! independent competing retailer (scenario II).
//!
//! The value functions are affine in the market share, so each game reduces
//! to a terminal-value system of coefficient ODEs integrated backward,
//! a forward market-share integration, feedback control evaluation, and
//! discounted-profit quadrature. Optimal subsidy rates come from a grid
//! scan of the subsidy rate; the experiments module reproduces the
//! sensitivity studies as parameter sweeps.

pub mod equilibrium;
pub mod experiments;
pub mod model;
pub mod ode;
pub mod subsidy;

pub use equilibrium::{build_trajectory, profits, EquilibriumTrajectory, ProfitReport};
pub use model::{validate_config, QualitySchedule, RawConfig, Scenario, ScenarioConfig, THETA_MAX};
pub use ode::{integrate_state, solve_coefficients, CoefficientPath, StatePath};
pub use subsidy::{scan_subsidy, SubsidyCurve};
