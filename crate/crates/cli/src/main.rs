//! Command-line front end: config ingestion, the four commands (solve,
//! optimize, sweep, compare), and CSV/JSON serialization.
//!
//! Exit codes: 0 success, 1 validation error or unreadable input, 2
//! infeasible optimization, 64 usage error. Outputs are deterministic:
//! identical inputs produce byte-identical files. Every file written via
//! `--output` is paired with a `<file>.manifest.json` run manifest whose
//! embedded config re-validates to the exact configuration used.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coopad_core::experiments::{
    compare_scenarios, sweep, SweepAxis, SweepError, SweepSpec, DEFAULT_THETA_STEP,
};
use coopad_core::model::validate_theta;
use coopad_core::ode::SolveError;
use coopad_core::subsidy::OptimizeError;
use coopad_core::{build_trajectory, scan_subsidy, validate_config, RawConfig, ScenarioConfig};

const EXIT_INVALID: i32 = 1;
const EXIT_INFEASIBLE: i32 = 2;
const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(
    name = "coopad",
    version,
    about = "Solver for dynamic cooperative search-advertising games"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; omitted fields fall back to the base values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario override: I or II
    #[arg(long)]
    scenario: Option<String>,
    /// Time-grid resolution override (number of steps)
    #[arg(long)]
    grid_steps: Option<usize>,
    /// Output file; stdout when omitted (manifests are written only for files)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the equilibrium at a fixed subsidy rate and emit the trajectory
    Solve {
        #[command(flatten)]
        common: Common,
        /// Subsidy rate in [0, 0.99]
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
    },
    /// Scan the subsidy rate and report the profit curve and both optima
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Scan resolution in (0, 0.1]
        #[arg(long)]
        theta_step: Option<f64>,
    },
    /// Run the factorial parameter sweep described by --spec
    Sweep {
        #[command(flatten)]
        common: Common,
        /// JSON sweep specification (axes and optional theta_step)
        #[arg(long)]
        spec: PathBuf,
        /// Scan resolution override in (0, 0.1]
        #[arg(long)]
        theta_step: Option<f64>,
    },
    /// Compare the monopoly channel against the competitive setting
    Compare {
        #[command(flatten)]
        common: Common,
        /// Scan resolution in (0, 0.1]
        #[arg(long)]
        theta_step: Option<f64>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn invalid(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: message.to_string(),
    }
}

fn infeasible(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_INFEASIBLE,
        message: message.to_string(),
    }
}

fn solve_failure(e: SolveError) -> Failure {
    match e {
        SolveError::Infeasible(_) => infeasible(e),
        _ => invalid(e),
    }
}

fn optimize_failure(e: OptimizeError) -> Failure {
    match e {
        OptimizeError::BadStep(_) => invalid(e),
        OptimizeError::NoFeasiblePoint => infeasible(e),
        OptimizeError::Solve(s) => solve_failure(s),
    }
}

fn sweep_failure(e: SweepError) -> Failure {
    match e {
        SweepError::Optimize(o) => optimize_failure(o),
        other => invalid(other),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(f) = run(cli) {
        eprintln!("error: {}", f.message);
        std::process::exit(f.code);
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Solve { common, theta } => run_solve(&common, theta),
        Cmd::Optimize { common, theta_step } => run_optimize(&common, theta_step),
        Cmd::Sweep {
            common,
            spec,
            theta_step,
        } => run_sweep(&common, &spec, theta_step),
        Cmd::Compare { common, theta_step } => run_compare(&common, theta_step),
    }
}

/// Precedence: flag > config file > base default.
fn resolve_config(common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut raw: RawConfig = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?
        }
        None => RawConfig::default(),
    };
    if let Some(s) = &common.scenario {
        raw.scenario = Some(s.parse().map_err(invalid)?);
    }
    if let Some(n) = common.grid_steps {
        raw.grid_steps = Some(n);
    }
    validate_config(raw).map_err(invalid)
}

// ---------------------------------------------------------------------------
// Tabular output
// ---------------------------------------------------------------------------

#[derive(Clone)]
enum Cell {
    F(f64),
    S(String),
    B(bool),
    Missing,
}

/// CSV numeric fields carry 13 significant digits so emitted tables are
/// stable across platforms and reparse to the exact value.
fn fmt_f(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.12e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => fmt_f(*v),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            // serde_json maps non-finite floats to null.
            Cell::F(v) => serde_json::json!(v),
            Cell::S(s) => serde_json::json!(s),
            Cell::B(b) => serde_json::json!(b),
            Cell::Missing => serde_json::Value::Null,
        }
    }
}

struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

/// Human-readable key=value pairs printed after the data; also embedded in
/// the JSON rendering.
type Summary = Vec<(&'static str, f64)>;

fn render_csv(table: &Table) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", table.columns.join(","));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::csv).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

fn render_json(command: &str, table: &Table, summary: &Summary) -> String {
    let rows: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|row| serde_json::Value::Array(row.iter().map(Cell::json).collect()))
        .collect();
    let mut summary_map = serde_json::Map::new();
    for (k, v) in summary {
        summary_map.insert((*k).to_string(), serde_json::json!(v));
    }
    let doc = serde_json::json!({
        "command": command,
        "columns": table.columns,
        "rows": rows,
        "summary": summary_map,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
    text.push('\n');
    text
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

#[derive(serde::Serialize)]
struct GridSizes {
    grid_steps: usize,
    nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
}

#[derive(serde::Serialize)]
struct RunManifest {
    command: String,
    tool_version: String,
    /// Fully resolved configuration; re-validating it reproduces the run.
    config: RawConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_step: Option<f64>,
    grid: GridSizes,
    outputs: Vec<String>,
}

struct Emission<'a> {
    command: &'a str,
    config: &'a ScenarioConfig,
    theta: Option<f64>,
    theta_step: Option<f64>,
    theta_points: Option<usize>,
    row_count: Option<usize>,
}

/// Writes the rendered table (and its manifest, when writing to a file) and
/// prints the summary: to stdout when the data goes to a file, to stderr
/// when the data itself occupies stdout.
fn emit(common: &Common, info: &Emission, table: &Table, summary: &Summary) -> Result<(), Failure> {
    let text = match common.format {
        Format::Csv => render_csv(table),
        Format::Json => render_json(info.command, table, summary),
    };
    match &common.output {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            let manifest = RunManifest {
                command: info.command.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config: RawConfig::from(info.config.clone()),
                theta: info.theta,
                theta_step: info.theta_step,
                grid: GridSizes {
                    grid_steps: info.config.grid_steps,
                    nodes: info.config.grid_steps + 1,
                    theta_points: info.theta_points,
                    rows: info.row_count,
                },
                outputs: vec![path.display().to_string()],
            };
            let mut manifest_path = path.as_os_str().to_owned();
            manifest_path.push(".manifest.json");
            let mut body =
                serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            body.push('\n');
            std::fs::write(&manifest_path, body)
                .map_err(|e| invalid(format!("{}: {e}", PathBuf::from(&manifest_path).display())))?;
            for (k, v) in summary {
                println!("{k}={v}");
            }
        }
        None => {
            print!("{text}");
            // The JSON rendering already embeds the summary.
            if common.format == Format::Csv {
                for (k, v) in summary {
                    eprintln!("{k}={v}");
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn run_solve(common: &Common, theta: f64) -> Result<(), Failure> {
    let config = resolve_config(common)?;
    let theta = validate_theta(theta).map_err(invalid)?;
    let traj = build_trajectory(&config, theta).map_err(solve_failure)?;

    let competitive = traj.u2.is_some();
    let mut columns = vec!["t".to_string(), "x".to_string(), "u1".to_string(), "v".to_string()];
    if competitive {
        columns.push("u2".to_string());
    }
    let rows: Vec<Vec<Cell>> = (0..traj.grid.len())
        .map(|k| {
            let mut row = vec![
                Cell::F(traj.grid.node(k)),
                Cell::F(traj.x[k]),
                Cell::F(traj.u1[k]),
                Cell::F(traj.v[k]),
            ];
            if let Some(u2) = &traj.u2 {
                row.push(Cell::F(u2[k]));
            }
            row
        })
        .collect();
    let table = Table { columns, rows };
    emit(
        common,
        &Emission {
            command: "solve",
            config: &config,
            theta: Some(theta),
            theta_step: None,
            theta_points: None,
            row_count: Some(table.rows.len()),
        },
        &table,
        &vec![],
    )
}

fn run_optimize(common: &Common, theta_step: Option<f64>) -> Result<(), Failure> {
    let config = resolve_config(common)?;
    let step = theta_step.unwrap_or(DEFAULT_THETA_STEP);
    let curve = scan_subsidy(&config, step).map_err(optimize_failure)?;

    let table = Table {
        columns: ["theta", "JM", "Jchannel", "feasible"]
            .map(String::from)
            .to_vec(),
        rows: curve
            .points
            .iter()
            .map(|p| {
                vec![
                    Cell::F(p.theta),
                    Cell::F(p.jm),
                    Cell::F(p.j_channel),
                    Cell::B(p.feasible),
                ]
            })
            .collect(),
    };
    let summary = vec![
        ("theta_star", curve.theta_star),
        ("theta_bar", curve.theta_bar),
        ("jm_at_star", curve.star_point().jm),
        ("jchannel_at_bar", curve.bar_point().j_channel),
    ];
    emit(
        common,
        &Emission {
            command: "optimize",
            config: &config,
            theta: None,
            theta_step: Some(step),
            theta_points: Some(curve.points.len()),
            row_count: Some(table.rows.len()),
        },
        &table,
        &summary,
    )
}

/// On-disk sweep description: the axes, plus an optional scan resolution
/// that a --theta-step flag overrides.
#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    axes: Vec<SweepAxis>,
    theta_step: Option<f64>,
}

fn run_sweep(common: &Common, spec_path: &PathBuf, theta_step: Option<f64>) -> Result<(), Failure> {
    let config = resolve_config(common)?;
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| invalid(format!("{}: {e}", spec_path.display())))?;
    let spec_file: SpecFile =
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", spec_path.display())))?;

    let step = theta_step
        .or(spec_file.theta_step)
        .unwrap_or(DEFAULT_THETA_STEP);
    let spec = SweepSpec {
        base: config.clone(),
        axes: spec_file.axes,
        theta_step: step,
        with_trajectories: false,
    };
    let result = sweep(&spec).map_err(sweep_failure)?;

    let mut columns = vec![result.axis_names.0.clone()];
    if let Some(second) = &result.axis_names.1 {
        columns.push(second.clone());
    }
    columns.extend(
        ["feasible", "theta_star", "theta_bar", "J1", "J2", "JM", "Jchannel"].map(String::from),
    );
    let rows: Vec<Vec<Cell>> = result
        .rows
        .iter()
        .map(|row| {
            let mut cells = vec![Cell::S(row.labels.0.clone())];
            if let Some(second) = &row.labels.1 {
                cells.push(Cell::S(second.clone()));
            }
            cells.extend([
                Cell::B(row.feasible),
                Cell::F(row.theta_star),
                Cell::F(row.theta_bar),
                Cell::F(row.profits_at_star.j1),
                row.profits_at_star.j2.map(Cell::F).unwrap_or(Cell::Missing),
                Cell::F(row.profits_at_star.jm),
                Cell::F(row.profits_at_star.j_channel),
            ]);
            cells
        })
        .collect();
    let table = Table { columns, rows };
    emit(
        common,
        &Emission {
            command: "sweep",
            config: &config,
            theta: None,
            theta_step: Some(step),
            theta_points: None,
            row_count: Some(table.rows.len()),
        },
        &table,
        &vec![],
    )
}

fn run_compare(common: &Common, theta_step: Option<f64>) -> Result<(), Failure> {
    let config = resolve_config(common)?;
    let step = theta_step.unwrap_or(DEFAULT_THETA_STEP);
    let report = compare_scenarios(&config, step).map_err(sweep_failure)?;

    let columns = [
        "t",
        "x_worc",
        "x_wrc",
        "u1_worc",
        "u1_wrc",
        "v_worc",
        "v_wrc",
        "u2_wrc",
        "x_worc_matched",
        "x_wrc_matched",
        "u1_worc_matched",
        "u1_wrc_matched",
        "v_worc_matched",
        "v_wrc_matched",
        "delta_u1",
        "delta_v",
        "delta_x",
    ]
    .map(String::from)
    .to_vec();
    let grid = report.worc.trajectory.grid;
    let u2 = report.wrc.trajectory.u2.as_ref();
    let rows: Vec<Vec<Cell>> = (0..grid.len())
        .map(|k| {
            vec![
                Cell::F(grid.node(k)),
                Cell::F(report.worc.trajectory.x[k]),
                Cell::F(report.wrc.trajectory.x[k]),
                Cell::F(report.worc.trajectory.u1[k]),
                Cell::F(report.wrc.trajectory.u1[k]),
                Cell::F(report.worc.trajectory.v[k]),
                Cell::F(report.wrc.trajectory.v[k]),
                u2.map(|u| Cell::F(u[k])).unwrap_or(Cell::Missing),
                Cell::F(report.worc_at_matched.x[k]),
                Cell::F(report.wrc_at_matched.x[k]),
                Cell::F(report.worc_at_matched.u1[k]),
                Cell::F(report.wrc_at_matched.u1[k]),
                Cell::F(report.worc_at_matched.v[k]),
                Cell::F(report.wrc_at_matched.v[k]),
                Cell::F(report.delta_u1[k]),
                Cell::F(report.delta_v[k]),
                Cell::F(report.delta_x[k]),
            ]
        })
        .collect();
    let table = Table { columns, rows };
    let summary = vec![
        ("theta_star_worc", report.worc.theta_star),
        ("theta_bar_worc", report.worc.theta_bar),
        ("theta_star_wrc", report.wrc.theta_star),
        ("theta_bar_wrc", report.wrc.theta_bar),
        ("matched_theta", report.matched_theta),
        ("delta_j1", report.delta_j1),
        ("delta_jm", report.delta_jm),
        ("delta_jchannel", report.delta_j_channel),
    ];
    emit(
        common,
        &Emission {
            command: "compare",
            config: &config,
            theta: None,
            theta_step: Some(step),
            theta_points: None,
            row_count: Some(table.rows.len()),
        },
        &table,
        &summary,
    )
}
