//! Domain types, parameter validation, quality-score schedules, and the
//! shared time grid.
//!
//! Configurations are validated once and then treated as immutable; every
//! solver in the crate takes `&ScenarioConfig` and never mutates it.

use serde::{Deserialize, Serialize};

/// Largest subsidy rate the solvers accept. The coefficient equations carry
/// `1/(1-theta)` factors, so theta = 1 is singular.
pub const THETA_MAX: f64 = 0.99;

/// Smallest admissible number of grid steps.
pub const MIN_GRID_STEPS: usize = 10;

/// Default grid resolution for the base horizon (dt = 0.05 at T = 100).
pub const DEFAULT_GRID_STEPS: usize = 2000;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ModelError {
    #[error("t = {t} outside the schedule domain [0, {horizon}]")]
    OutOfDomain { t: f64, horizon: f64 },
    #[error("invalid configuration: {}", violations.join("; "))]
    Invalid { violations: Vec<String> },
}

impl ModelError {
    pub fn violations(&self) -> &[String] {
        match self {
            ModelError::Invalid { violations } => violations,
            _ => &[],
        }
    }
}

/// Which game is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Monopoly channel: one manufacturer, one allied retailer.
    I,
    /// The same alliance facing an independent competing retailer.
    II,
}

impl Scenario {
    pub fn has_competitor(self) -> bool {
        matches!(self, Scenario::II)
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scenario::I => write!(f, "I"),
            Scenario::II => write!(f, "II"),
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" | "i" | "1" => Ok(Scenario::I),
            "II" | "ii" | "2" => Ok(Scenario::II),
            other => Err(ModelError::Invalid {
                violations: vec![format!("scenario: unknown value {other:?} (expected I or II)")],
            }),
        }
    }
}

/// Scalar economics of the game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Advertising effectiveness of Retailer-1.
    pub rho1: f64,
    /// Advertising effectiveness of Retailer-2 (only used in scenario II).
    pub rho2: f64,
    /// Advertising effectiveness of the manufacturer.
    #[serde(rename = "rhoM")]
    pub rho_m: f64,
    /// Gross margin per unit market share, Retailer-1.
    pub c1: f64,
    /// Gross margin per unit market share, Retailer-2.
    pub c2: f64,
    /// Gross margin per unit market share, manufacturer.
    #[serde(rename = "cM")]
    pub c_m: f64,
    /// Discount rate.
    pub r: f64,
    /// Horizon length.
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Initial market share of the alliance.
    pub x0: f64,
}

impl Default for MarketParams {
    /// Base parameter values used throughout the experiments.
    fn default() -> Self {
        MarketParams {
            rho1: 0.05,
            rho2: 0.05,
            rho_m: 0.05,
            c1: 200.0,
            c2: 200.0,
            c_m: 200.0,
            r: 0.05,
            horizon: 100.0,
            x0: 0.1,
        }
    }
}

/// A time-varying quality score q(t) on [0, T].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QualitySchedule {
    Constant { q0: f64 },
    Linear { start: f64, end: f64 },
    Table { points: Vec<(f64, f64)> },
}

impl QualitySchedule {
    pub fn constant(q0: f64) -> Self {
        QualitySchedule::Constant { q0 }
    }

    pub fn linear(start: f64, end: f64) -> Self {
        QualitySchedule::Linear { start, end }
    }

    /// Evaluates q(t). Errors if t lies outside [0, horizon].
    pub fn eval(&self, t: f64, horizon: f64) -> Result<f64, ModelError> {
        if !(0.0..=horizon).contains(&t) {
            return Err(ModelError::OutOfDomain { t, horizon });
        }
        Ok(self.eval_clamped(t, horizon))
    }

    /// Same as [`eval`](Self::eval) but clamps t into [0, horizon] first.
    /// Integrator stage times can land a rounding error outside the domain.
    pub(crate) fn eval_clamped(&self, t: f64, horizon: f64) -> f64 {
        let t = t.clamp(0.0, horizon);
        match self {
            QualitySchedule::Constant { q0 } => *q0,
            QualitySchedule::Linear { start, end } => start + (end - start) * t / horizon,
            QualitySchedule::Table { points } => {
                match points.iter().position(|&(tp, _)| tp >= t) {
                    None => points.last().map(|&(_, q)| q).unwrap_or(0.0),
                    Some(0) => points[0].1,
                    Some(i) => {
                        let (t0, q0) = points[i - 1];
                        let (t1, q1) = points[i];
                        q0 + (q1 - q0) * (t - t0) / (t1 - t0)
                    }
                }
            }
        }
    }

    fn check(&self, name: &str, horizon: f64, violations: &mut Vec<String>) {
        let ok = |q: f64| q.is_finite() && q >= 0.0;
        match self {
            QualitySchedule::Constant { q0 } => {
                if !ok(*q0) {
                    violations.push(format!("{name}: q0 must be finite and nonnegative"));
                }
            }
            QualitySchedule::Linear { start, end } => {
                if !ok(*start) || !ok(*end) {
                    violations.push(format!("{name}: endpoints must be finite and nonnegative"));
                }
            }
            QualitySchedule::Table { points } => {
                if points.is_empty() {
                    violations.push(format!("{name}: table schedule has no points"));
                    return;
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    violations.push(format!("{name}: table times must be strictly increasing"));
                }
                if points[0].0 > 0.0 || points.last().unwrap().0 < horizon {
                    violations.push(format!("{name}: table must cover [0, {horizon}]"));
                }
                if points.iter().any(|&(_, q)| !ok(q)) {
                    violations.push(format!("{name}: table values must be finite and nonnegative"));
                }
            }
        }
    }
}

/// Uniform discretization of [0, T] with N steps and N+1 nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    steps: usize,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self, ModelError> {
        let mut violations = Vec::new();
        if !(horizon.is_finite() && horizon > 0.0) {
            violations.push(format!("T: must be finite and positive, got {horizon}"));
        }
        if steps < MIN_GRID_STEPS {
            violations.push(format!("grid_steps: {steps} below minimum of {MIN_GRID_STEPS}"));
        }
        if violations.is_empty() {
            Ok(TimeGrid { steps, horizon })
        } else {
            Err(ModelError::Invalid { violations })
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Node time t_k = k * T / N. Computed by multiplication so there is no
    /// cumulative drift; t_0 = 0 and t_N = T exactly.
    pub fn node(&self, k: usize) -> f64 {
        debug_assert!(k <= self.steps);
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.horizon / self.steps as f64
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.node(k))
    }
}

/// Unvalidated configuration as read from a file. All fields optional;
/// omitted fields fall back to the base parameter values.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho2: Option<f64>,
    #[serde(rename = "rhoM", skip_serializing_if = "Option::is_none")]
    pub rho_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(rename = "cM", skip_serializing_if = "Option::is_none")]
    pub c_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q1: Option<QualitySchedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q2: Option<QualitySchedule>,
    #[serde(rename = "qM", skip_serializing_if = "Option::is_none")]
    pub q_m: Option<QualitySchedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_steps: Option<usize>,
}

/// A fully validated game configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawConfig", try_from = "RawConfig")]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub params: MarketParams,
    pub q1: QualitySchedule,
    pub q_m: QualitySchedule,
    /// Competing retailer's quality score; present iff scenario II.
    pub q2: Option<QualitySchedule>,
    pub grid_steps: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        validate_config(RawConfig::default()).expect("defaults validate")
    }
}

impl ScenarioConfig {
    pub fn grid(&self) -> TimeGrid {
        TimeGrid {
            steps: self.grid_steps,
            horizon: self.params.horizon,
        }
    }

    /// Returns the same configuration at a different grid resolution.
    pub fn with_grid_steps(&self, steps: usize) -> Result<Self, ModelError> {
        TimeGrid::new(self.params.horizon, steps)?;
        let mut c = self.clone();
        c.grid_steps = steps;
        Ok(c)
    }

    /// Drops the competing retailer, yielding the scenario I counterpart
    /// under otherwise identical parameters.
    pub fn without_competitor(&self) -> Self {
        let mut c = self.clone();
        c.scenario = Scenario::I;
        c.q2 = None;
        c
    }
}

impl From<ScenarioConfig> for RawConfig {
    fn from(c: ScenarioConfig) -> RawConfig {
        RawConfig {
            scenario: Some(c.scenario),
            rho1: Some(c.params.rho1),
            rho2: Some(c.params.rho2),
            rho_m: Some(c.params.rho_m),
            c1: Some(c.params.c1),
            c2: Some(c.params.c2),
            c_m: Some(c.params.c_m),
            r: Some(c.params.r),
            horizon: Some(c.params.horizon),
            x0: Some(c.params.x0),
            q1: Some(c.q1),
            q2: c.q2,
            q_m: Some(c.q_m),
            grid_steps: Some(c.grid_steps),
        }
    }
}

impl TryFrom<RawConfig> for ScenarioConfig {
    type Error = ModelError;
    fn try_from(raw: RawConfig) -> Result<Self, Self::Error> {
        validate_config(raw)
    }
}

/// Validates a raw configuration, filling base-parameter defaults for
/// omitted fields. All violations are collected and reported together,
/// each naming the offending field.
pub fn validate_config(raw: RawConfig) -> Result<ScenarioConfig, ModelError> {
    let defaults = MarketParams::default();
    let scenario = raw.scenario.unwrap_or(Scenario::I);
    let params = MarketParams {
        rho1: raw.rho1.unwrap_or(defaults.rho1),
        rho2: raw.rho2.unwrap_or(defaults.rho2),
        rho_m: raw.rho_m.unwrap_or(defaults.rho_m),
        c1: raw.c1.unwrap_or(defaults.c1),
        c2: raw.c2.unwrap_or(defaults.c2),
        c_m: raw.c_m.unwrap_or(defaults.c_m),
        r: raw.r.unwrap_or(defaults.r),
        horizon: raw.horizon.unwrap_or(defaults.horizon),
        x0: raw.x0.unwrap_or(defaults.x0),
    };
    let default_q = QualitySchedule::constant(0.15);
    let q1 = raw.q1.unwrap_or_else(|| default_q.clone());
    let q_m = raw.q_m.unwrap_or_else(|| default_q.clone());
    let grid_steps = raw.grid_steps.unwrap_or(DEFAULT_GRID_STEPS);

    let mut violations = Vec::new();
    let nonneg = |name: &str, v: f64, violations: &mut Vec<String>| {
        if !(v.is_finite() && v >= 0.0) {
            violations.push(format!("{name}: must be finite and nonnegative, got {v}"));
        }
    };
    nonneg("rho1", params.rho1, &mut violations);
    nonneg("rho2", params.rho2, &mut violations);
    nonneg("rhoM", params.rho_m, &mut violations);
    nonneg("c1", params.c1, &mut violations);
    nonneg("c2", params.c2, &mut violations);
    nonneg("cM", params.c_m, &mut violations);
    nonneg("r", params.r, &mut violations);
    if !(params.horizon.is_finite() && params.horizon > 0.0) {
        violations.push(format!("T: must be finite and positive, got {}", params.horizon));
    }
    if !(params.x0.is_finite() && (0.0..=1.0).contains(&params.x0)) {
        violations.push(format!("x0: must lie in [0, 1], got {}", params.x0));
    }
    if grid_steps < MIN_GRID_STEPS {
        violations.push(format!("grid_steps: {grid_steps} below minimum of {MIN_GRID_STEPS}"));
    }
    q1.check("q1", params.horizon, &mut violations);
    q_m.check("qM", params.horizon, &mut violations);

    // Scenario I carries no Retailer-2 semantics: q2 is dropped if present.
    let q2 = match scenario {
        Scenario::I => None,
        Scenario::II => match raw.q2 {
            Some(q2) => {
                q2.check("q2", params.horizon, &mut violations);
                Some(q2)
            }
            None => {
                violations.push("q2: required for scenario II".to_string());
                None
            }
        },
    };

    if violations.is_empty() {
        Ok(ScenarioConfig {
            scenario,
            params,
            q1,
            q_m,
            q2,
            grid_steps,
        })
    } else {
        Err(ModelError::Invalid { violations })
    }
}

/// Checks a subsidy rate against [0, THETA_MAX].
pub fn validate_theta(theta: f64) -> Result<f64, ModelError> {
    if theta.is_finite() && (0.0..=THETA_MAX).contains(&theta) {
        Ok(theta)
    } else {
        Err(ModelError::Invalid {
            violations: vec![format!("theta: must lie in [0, {THETA_MAX}], got {theta}")],
        })
    }
}

/// Builds a uniform time grid with N+1 nodes over [0, T].
pub fn make_time_grid(horizon: f64, steps: usize) -> Result<TimeGrid, ModelError> {
    TimeGrid::new(horizon, steps)
}
