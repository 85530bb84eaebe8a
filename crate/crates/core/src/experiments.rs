//! Parameter-sweep harness and the with/without-competition comparison.
//!
//! Sweeps are full factorial over at most two axes. Each grid point gets a
//! theta scan; infeasible points are flagged, never dropped, so the row
//! count always equals the product of the axis cardinalities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{build_trajectory, profits, EquilibriumTrajectory, ProfitReport};
use crate::model::{validate_config, ModelError, QualitySchedule, RawConfig, Scenario, ScenarioConfig};
use crate::subsidy::{scan_subsidy, OptimizeError, SubsidyCurve};

pub const DEFAULT_THETA_STEP: f64 = 0.005;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SweepError {
    #[error("sweep requires 1 or 2 axes, got {0}")]
    BadAxisCount(usize),
    #[error("axis {axis}: {source}")]
    BadAxisValue { axis: String, source: ModelError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error("comparison requires a scenario II configuration")]
    NeedsCompetitor,
}

/// Scalar quantity a sweep axis may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SweepField {
    Q1,
    Q2,
    #[serde(rename = "qM")]
    QM,
    C1,
    C2,
    #[serde(rename = "cM")]
    CM,
    X0,
}

impl SweepField {
    pub fn name(self) -> &'static str {
        match self {
            SweepField::Q1 => "q1",
            SweepField::Q2 => "q2",
            SweepField::QM => "qM",
            SweepField::C1 => "c1",
            SweepField::C2 => "c2",
            SweepField::CM => "cM",
            SweepField::X0 => "x0",
        }
    }
}

/// A labelled quality-score schedule for schedule-variant axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelledSchedule {
    pub label: String,
    pub schedule: QualitySchedule,
}

/// One sweep axis: either a scalar range or a list of schedule variants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SweepAxis {
    Scalar {
        field: SweepField,
        values: Vec<f64>,
    },
    Schedules {
        target: SweepField,
        schedules: Vec<LabelledSchedule>,
    },
}

impl SweepAxis {
    /// Uniform scalar range with `count` points from `start` to `stop`
    /// inclusive.
    pub fn scalar_range(field: SweepField, start: f64, stop: f64, count: usize) -> Self {
        let values = if count <= 1 {
            vec![start]
        } else {
            (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect()
        };
        SweepAxis::Scalar { field, values }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::Scalar { values, .. } => values.len(),
            SweepAxis::Schedules { schedules, .. } => schedules.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn label(&self, i: usize) -> String {
        match self {
            SweepAxis::Scalar { values, .. } => format!("{}", values[i]),
            SweepAxis::Schedules { schedules, .. } => schedules[i].label.clone(),
        }
    }

    fn field_name(&self) -> &'static str {
        match self {
            SweepAxis::Scalar { field, .. } | SweepAxis::Schedules { target: field, .. } => field.name(),
        }
    }

    fn apply(&self, base: &ScenarioConfig, i: usize) -> Result<ScenarioConfig, SweepError> {
        let mut raw = RawConfig::from(base.clone());
        match self {
            SweepAxis::Scalar { field, values } => {
                let v = values[i];
                match field {
                    SweepField::Q1 => raw.q1 = Some(QualitySchedule::constant(v)),
                    SweepField::Q2 => raw.q2 = Some(QualitySchedule::constant(v)),
                    SweepField::QM => raw.q_m = Some(QualitySchedule::constant(v)),
                    SweepField::C1 => raw.c1 = Some(v),
                    SweepField::C2 => raw.c2 = Some(v),
                    SweepField::CM => raw.c_m = Some(v),
                    SweepField::X0 => raw.x0 = Some(v),
                }
            }
            SweepAxis::Schedules { target, schedules } => {
                let s = Some(schedules[i].schedule.clone());
                match target {
                    SweepField::Q1 => raw.q1 = s,
                    SweepField::Q2 => raw.q2 = s,
                    SweepField::QM => raw.q_m = s,
                    other => {
                        return Err(SweepError::BadAxisValue {
                            axis: other.name().to_string(),
                            source: ModelError::Invalid {
                                violations: vec![format!(
                                    "{}: schedule axes only apply to quality scores",
                                    other.name()
                                )],
                            },
                        })
                    }
                }
            }
        }
        validate_config(raw).map_err(|source| SweepError::BadAxisValue {
            axis: self.field_name().to_string(),
            source,
        })
    }
}

/// Full factorial sweep specification.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    /// One or two axes.
    pub axes: Vec<SweepAxis>,
    pub theta_step: f64,
    /// Attach the equilibrium trajectory at theta_star to each row.
    pub with_trajectories: bool,
}

impl SweepSpec {
    pub fn new(base: ScenarioConfig, axes: Vec<SweepAxis>) -> Self {
        SweepSpec {
            base,
            axes,
            theta_step: DEFAULT_THETA_STEP,
            with_trajectories: false,
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    /// Axis indices (second is 0 for 1-D sweeps).
    pub index: (usize, usize),
    /// Axis labels, parallel to `index`.
    pub labels: (String, Option<String>),
    pub feasible: bool,
    pub theta_star: f64,
    pub theta_bar: f64,
    pub profits_at_star: ProfitReport,
    pub trajectory: Option<EquilibriumTrajectory>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis_names: (String, Option<String>),
    pub rows: Vec<SweepRow>,
}

/// Runs the full factorial sweep. Grid points evaluate in parallel; output
/// ordering is fixed by grid index, row count equals the product of the
/// axis cardinalities.
pub fn sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    if spec.axes.is_empty() || spec.axes.len() > 2 {
        return Err(SweepError::BadAxisCount(spec.axes.len()));
    }
    let n1 = spec.axes[0].len();
    let n2 = spec.axes.get(1).map(SweepAxis::len).unwrap_or(1);

    // Validate every point's config up front so axis errors surface before
    // any solving starts.
    let mut configs = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        let c1 = spec.axes[0].apply(&spec.base, i)?;
        for j in 0..n2 {
            let c = match spec.axes.get(1) {
                Some(axis2) => axis2.apply(&c1, j)?,
                None => c1.clone(),
            };
            configs.push(((i, j), c));
        }
    }

    let rows: Vec<SweepRow> = configs
        .par_iter()
        .map(|((i, j), config)| {
            let labels = (
                spec.axes[0].label(*i),
                spec.axes.get(1).map(|a| a.label(*j)),
            );
            match scan_subsidy(config, spec.theta_step) {
                Ok(curve) => {
                    let star = *curve.star_point();
                    let trajectory = spec
                        .with_trajectories
                        .then(|| build_trajectory(config, curve.theta_star).ok())
                        .flatten();
                    SweepRow {
                        index: (*i, *j),
                        labels,
                        feasible: true,
                        theta_star: curve.theta_star,
                        theta_bar: curve.theta_bar,
                        profits_at_star: ProfitReport {
                            j1: star.j1,
                            j2: star.j2,
                            jm: star.jm,
                            j_channel: star.j_channel,
                        },
                        trajectory,
                    }
                }
                Err(_) => SweepRow {
                    index: (*i, *j),
                    labels,
                    feasible: false,
                    theta_star: f64::NAN,
                    theta_bar: f64::NAN,
                    profits_at_star: ProfitReport {
                        j1: f64::NAN,
                        j2: None,
                        jm: f64::NAN,
                        j_channel: f64::NAN,
                    },
                    trajectory: None,
                },
            }
        })
        .collect();

    Ok(SweepResult {
        axis_names: (
            spec.axes[0].field_name().to_string(),
            spec.axes.get(1).map(|a| a.field_name().to_string()),
        ),
        rows,
    })
}

/// Outcome of one scenario inside a comparison run.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub theta_star: f64,
    pub theta_bar: f64,
    pub curve: SubsidyCurve,
    /// Equilibrium trajectory at this scenario's own theta_star.
    pub trajectory: EquilibriumTrajectory,
    pub profits: ProfitReport,
}

/// Paired outputs for the monopoly channel (WORC) and the competitive
/// setting (WRC) under shared parameters, plus per-quantity deltas
/// (WRC - WORC).
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub worc: ScenarioOutcome,
    pub wrc: ScenarioOutcome,
    /// Fixed matched subsidy rate used for the control-path comparison
    /// (the WORC optimum).
    pub matched_theta: f64,
    pub worc_at_matched: EquilibriumTrajectory,
    pub wrc_at_matched: EquilibriumTrajectory,
    pub delta_theta_star: f64,
    pub delta_theta_bar: f64,
    pub delta_j1: f64,
    pub delta_jm: f64,
    pub delta_j_channel: f64,
    /// Pointwise WRC - WORC deltas along the equilibrium paths.
    pub delta_u1: Vec<f64>,
    pub delta_v: Vec<f64>,
    pub delta_x: Vec<f64>,
}

fn run_scenario(config: &ScenarioConfig, theta_step: f64) -> Result<ScenarioOutcome, SweepError> {
    let curve = scan_subsidy(config, theta_step)?;
    let trajectory = build_trajectory(config, curve.theta_star).map_err(OptimizeError::from)?;
    let profits = profits(config, &trajectory);
    Ok(ScenarioOutcome {
        theta_star: curve.theta_star,
        theta_bar: curve.theta_bar,
        curve,
        trajectory,
        profits,
    })
}

/// Runs both scenarios from one scenario II configuration: WRC as given,
/// WORC with the competitor dropped, each at its own optimum plus both at a
/// matched fixed theta.
pub fn compare_scenarios(config: &ScenarioConfig, theta_step: f64) -> Result<ComparisonReport, SweepError> {
    if config.scenario != Scenario::II {
        return Err(SweepError::NeedsCompetitor);
    }
    let worc_config = config.without_competitor();
    let worc = run_scenario(&worc_config, theta_step)?;
    let wrc = run_scenario(config, theta_step)?;

    let matched_theta = worc.theta_star;
    let worc_at_matched = build_trajectory(&worc_config, matched_theta).map_err(OptimizeError::from)?;
    let wrc_at_matched = build_trajectory(config, matched_theta).map_err(OptimizeError::from)?;

    let pointwise = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(a, b)| a - b).collect::<Vec<f64>>();
    Ok(ComparisonReport {
        delta_theta_star: wrc.theta_star - worc.theta_star,
        delta_theta_bar: wrc.theta_bar - worc.theta_bar,
        delta_j1: wrc.profits.j1 - worc.profits.j1,
        delta_jm: wrc.profits.jm - worc.profits.jm,
        delta_j_channel: wrc.profits.j_channel - worc.profits.j_channel,
        delta_u1: pointwise(&wrc.trajectory.u1, &worc.trajectory.u1),
        delta_v: pointwise(&wrc.trajectory.v, &worc.trajectory.v),
        delta_x: pointwise(&wrc.trajectory.x, &worc.trajectory.x),
        matched_theta,
        worc_at_matched,
        wrc_at_matched,
        worc,
        wrc,
    })
}
