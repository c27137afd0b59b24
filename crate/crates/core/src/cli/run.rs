//! Executes one validated experiment and writes its outputs.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{
    has_errors, validate, ExperimentConfig, ExperimentKind, Violation, DEFAULT_NU, DEFAULT_SLOPE_TOLERANCE,
};
use crate::burgers::{BurgersSolver, BurgersState};
use crate::convolution::{
    convolve_by_parts, convolve_direct, simulate_driving, wiener_convolve, write_fields_csv, FieldPath,
};
use crate::error::{Error, Result};
use crate::estimators::{
    doob_check, khintchine_check, moment_formula_check, small_ball, sup_moment, wiener_sup_moment, DoobParams,
    MomentParams, MomentReport, SmallBallParams, DEFAULT_BOOTSTRAP_RESAMPLES,
};
use crate::grid::GridSpec;
use crate::spectral::ModeSet;
use crate::stable_rng::StableLaw;

pub const MANIFEST_VERSION: u32 = 1;
pub const DEFAULT_OUT_DIR: &str = "stable-convolve-out";

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    GateFailed = 1,
    ConfigError = 2,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: ExitStatus,
    pub violations: Vec<Violation>,
    pub gates: Vec<Gate>,
    pub out_dir: Option<PathBuf>,
    /// Set when the experiment itself failed (degenerate replicas, blow-up).
    pub failure: Option<String>,
}

impl RunOutcome {
    fn config_error(violations: Vec<Violation>) -> Self {
        Self { status: ExitStatus::ConfigError, violations, gates: Vec::new(), out_dir: None, failure: None }
    }
}

/// Options that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Validates, runs and writes `report.json`, the data CSVs and
/// `manifest.json` into the output directory.
pub fn run(kind: ExperimentKind, mut config: ExperimentConfig, overrides: &Overrides) -> RunOutcome {
    if overrides.seed.is_some() {
        config.seed = overrides.seed;
    }
    if overrides.out.is_some() {
        config.out = overrides.out.clone();
    }
    let violations = validate(&config, kind);
    if has_errors(&violations) {
        return RunOutcome::config_error(violations);
    }
    // pin every default so the manifest reruns the same experiment
    config.kind = Some(kind);
    config.seed = Some(config.seed_or_default());
    config.out.get_or_insert_with(|| PathBuf::from(DEFAULT_OUT_DIR));
    let out_dir = config.out.clone().expect("set above");

    let started = Instant::now();
    let executed = execute(kind, &config);
    let wall = started.elapsed().as_secs_f64();
    let mut outcome = RunOutcome {
        status: ExitStatus::Success,
        violations,
        gates: Vec::new(),
        out_dir: Some(out_dir.clone()),
        failure: None,
    };
    let written = match executed {
        Ok(result) => {
            outcome.gates = result.gates.clone();
            write_outputs(&out_dir, &config, result, wall, &outcome.violations)
        }
        Err(e) => {
            outcome.failure = Some(e.to_string());
            write_failure(&out_dir, &config, &e, wall)
        }
    };
    if let Err(e) = written {
        outcome.failure = Some(format!("writing outputs: {e}"));
    }
    if outcome.failure.is_some() || outcome.gates.iter().any(|g| !g.passed) {
        outcome.status = ExitStatus::GateFailed;
    }
    outcome
}

struct Executed {
    report: Value,
    gates: Vec<Gate>,
    /// File name and writer for data output.
    data: Vec<(&'static str, DataFile)>,
}

enum DataFile {
    Fields(Vec<FieldPath>),
    Ladder(MomentReport),
    Trajectory(Box<crate::burgers::BurgersPath>),
    Energy(Vec<f64>, GridSpec),
    Snapshots(Vec<(f64, Vec<f64>)>),
}

fn law(config: &ExperimentConfig) -> Result<StableLaw> {
    StableLaw::new(config.alpha.ok_or_else(|| Error::Config("alpha missing".into()))?)
}

fn modes(config: &ExperimentConfig) -> Result<ModeSet> {
    config.modes.as_ref().ok_or_else(|| Error::Config("modes missing".into()))?.build()
}

fn required(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("{name} missing")))
}

fn grid(config: &ExperimentConfig) -> Result<GridSpec> {
    GridSpec::new(required(config.horizon, "horizon")?, config.n_steps_or_default())
}

fn execute(kind: ExperimentKind, config: &ExperimentConfig) -> Result<Executed> {
    let seed = config.seed_or_default();
    let replicas = config.replicas_or_default();
    let theta = config.theta_tilde_or_default();
    match kind {
        ExperimentKind::Convolve => {
            let (modes, law, grid) = (modes(config)?, law(config)?, grid(config)?);
            let driving = simulate_driving(&modes, &law, &grid, seed)?;
            let direct = convolve_direct(&driving);
            let (y, z) = convolve_by_parts(&driving);
            let l = driving.weighted();
            let gap = direct.sup_norm_diff(&z, theta)?;
            let finite = !(l.is_degenerate() || y.is_degenerate() || z.is_degenerate() || direct.is_degenerate());
            let report = json!({
                "kind": kind.as_str(),
                "alpha": law.alpha(),
                "theta_tilde": theta,
                "horizon": grid.horizon(),
                "n_steps": grid.n_steps(),
                "modes": modes.len(),
                "sup_norm_L": l.sup_norm(theta),
                "sup_norm_Y": y.sup_norm(theta),
                "sup_norm_Z": z.sup_norm(theta),
                "sup_norm_Z_direct": direct.sup_norm(theta),
                "route_gap": gap,
            });
            Ok(Executed {
                report,
                gates: vec![Gate::new("finite", finite, "all fields finite")],
                data: vec![("path.csv", DataFile::Fields(vec![l, y, z]))],
            })
        }
        ExperimentKind::SupMoment | ExperimentKind::Wiener if config.horizons.is_some() => {
            let modes = modes(config)?;
            let params = MomentParams {
                theta_tilde: theta,
                p: required(config.p, "p")?,
                horizons: config.horizons.clone().expect("guarded"),
                n_steps: config.n_steps_or_default(),
                replicas,
                seed,
            };
            let report = match kind {
                ExperimentKind::SupMoment => sup_moment(&modes, &law(config)?, &params)?,
                _ => wiener_sup_moment(&modes, &params)?,
            };
            let mut gates = Vec::new();
            if let Some(expected) = config.expected_slope {
                let tol = config.slope_tolerance.unwrap_or(DEFAULT_SLOPE_TOLERANCE);
                let gate = match report.slope {
                    Some(s) => Gate::new("slope", (s - expected).abs() <= tol, format!("slope {s:.4}, expected {expected} ± {tol}")),
                    None => Gate::new("slope", false, "too few positive ladder points to fit a slope"),
                };
                gates.push(gate);
            }
            let mut value = serde_json::to_value(&report)?;
            value["kind"] = json!(kind.as_str());
            Ok(Executed { report: value, gates, data: vec![("ladder.csv", DataFile::Ladder(report))] })
        }
        ExperimentKind::SupMoment => Err(Error::Config("sup-moment requires horizons".into())),
        ExperimentKind::Wiener => {
            let (modes, grid) = (modes(config)?, grid(config)?);
            let (y, z) = wiener_convolve(&modes, &grid, seed);
            let finite = !(y.is_degenerate() || z.is_degenerate());
            let report = json!({
                "kind": kind.as_str(),
                "theta_tilde": theta,
                "horizon": grid.horizon(),
                "n_steps": grid.n_steps(),
                "sup_norm_Y": y.sup_norm(theta),
                "sup_norm_Z_W": z.sup_norm(theta),
            });
            Ok(Executed {
                report,
                gates: vec![Gate::new("finite", finite, "all fields finite")],
                data: vec![("path.csv", DataFile::Fields(vec![y, z]))],
            })
        }
        ExperimentKind::SmallBall => {
            let params = SmallBallParams {
                theta_tilde: theta,
                epsilon: required(config.epsilon, "epsilon")?,
                horizon: required(config.horizon, "horizon")?,
                n_steps: config.n_steps_or_default(),
                replicas,
                seed,
            };
            let report = small_ball(&modes(config)?, &law(config)?, &params)?;
            let gate = Gate::new(
                "positivity",
                report.wilson_lower > 0.0,
                format!("{} of {} replicas in the ball, Wilson lower bound {:.4e}", report.hits, report.replicas, report.wilson_lower),
            );
            Ok(Executed { report: tagged(kind, &report)?, gates: vec![gate], data: Vec::new() })
        }
        ExperimentKind::Doob => {
            let params = DoobParams {
                theta_tilde: theta,
                p: required(config.p, "p")?,
                horizon: required(config.horizon, "horizon")?,
                n_steps: config.n_steps_or_default(),
                replicas,
                seed,
                bootstrap: config.bootstrap.unwrap_or(DEFAULT_BOOTSTRAP_RESAMPLES),
            };
            let report = doob_check(&modes(config)?, &law(config)?, &params)?;
            let detail = match (report.ratio, report.bootstrap_stderr) {
                (Some(r), Some(se)) => format!("ratio {r:.4} vs bound {:.4} (+3 se = {:.4})", report.bound, 3.0 * se),
                _ => "degenerate: both moments vanish".to_string(),
            };
            let gate = Gate::new("doob_bound", report.passes, detail);
            Ok(Executed { report: tagged(kind, &report)?, gates: vec![gate], data: Vec::new() })
        }
        ExperimentKind::Khintchine => {
            let p = required(config.p, "p")?;
            let report = khintchine_check(config.h.as_deref().unwrap_or_default(), p, replicas, seed)?;
            let mut gates = Vec::new();
            if p <= 2.0 {
                // Jensen: (E|S|^p)^{1/p} ≤ ‖h‖_2 for p ≤ 2
                let passed = report.ratio >= 1.0 - 3.0 * report.ratio_stderr;
                gates.push(Gate::new("jensen", passed, format!("ratio {:.4} ± {:.4}", report.ratio, report.ratio_stderr)));
            }
            Ok(Executed { report: tagged(kind, &report)?, gates, data: Vec::new() })
        }
        ExperimentKind::MomentCheck => {
            let report = moment_formula_check(
                &modes(config)?,
                &law(config)?,
                theta,
                required(config.horizon, "horizon")?,
                required(config.p, "p")?,
                replicas,
                seed,
            )?;
            let gate = Gate::new(
                "moment_law",
                report.agrees,
                format!("symmetrized {:.4e} ± {:.2e}, predicted {:.4e}", report.symmetrized_moment, report.symmetrized_stderr, report.predicted),
            );
            Ok(Executed { report: tagged(kind, &report)?, gates: vec![gate], data: Vec::new() })
        }
        ExperimentKind::Burgers => {
            let (modes, law, grid) = (modes(config)?, law(config)?, grid(config)?);
            let nu = config.nu.unwrap_or(DEFAULT_NU);
            let solver = BurgersSolver::new(modes, nu)?;
            let x0 = BurgersState::zero(solver.n_fourier());
            let path = solver.solve_path(&x0, &grid, &law, seed)?;
            let d = &path.diagnostics;
            let report = json!({
                "kind": kind.as_str(),
                "alpha": law.alpha(),
                "nu": nu,
                "horizon": grid.horizon(),
                "n_steps": grid.n_steps(),
                "n_fourier": solver.n_fourier(),
                "grid_points": solver.grid_points(),
                "diagnostics": {
                    "max_jump": d.max_jump,
                    "jump_count": d.jump_count,
                    "jump_threshold": d.jump_threshold,
                    "jump_alignment": d.jump_alignment,
                    "final_energy": d.energy.last().copied().unwrap_or(0.0),
                    "energy_series_ref": "energy.csv",
                },
            });
            let mut data = vec![("energy.csv", DataFile::Energy(d.energy.clone(), grid))];
            let points = config.snapshot_points.unwrap_or(0);
            if points > 0 {
                let every = config.snapshot_every.unwrap_or(grid.n_steps()).max(1);
                let snaps = (0..grid.n_points())
                    .filter(|j| j % every == 0 || *j == grid.n_steps())
                    .map(|j| (grid.time(j), solver.to_physical(&path.trajectory.at(j), points)))
                    .collect();
                data.push(("snapshots.csv", DataFile::Snapshots(snaps)));
            }
            data.insert(0, ("path.csv", DataFile::Trajectory(Box::new(path))));
            Ok(Executed { report, gates: vec![Gate::new("no_blowup", true, "trajectory finite")], data })
        }
    }
}

fn tagged<T: Serialize>(kind: ExperimentKind, report: &T) -> Result<Value> {
    let mut value = serde_json::to_value(report)?;
    value["kind"] = json!(kind.as_str());
    Ok(value)
}

fn write_data(path: &Path, data: &DataFile) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    match data {
        DataFile::Fields(fields) => write_fields_csv(out, &fields.iter().collect::<Vec<_>>()),
        DataFile::Ladder(report) => report.write_ladder_csv(out),
        DataFile::Trajectory(path) => path.write_trajectory_csv(out),
        DataFile::Energy(energy, grid) => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["t", "energy"])?;
            for (t, e) in grid.times().zip(energy) {
                w.write_record([format!("{t:.16e}"), format!("{e:.16e}")])?;
            }
            w.flush()?;
            Ok(())
        }
        DataFile::Snapshots(snaps) => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["t", "xi", "value"])?;
            for (t, values) in snaps {
                let m = values.len();
                for (i, v) in values.iter().enumerate() {
                    let xi = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                    w.write_record([format!("{t:.16e}"), format!("{xi:.16e}"), format!("{v:.16e}")])?;
                }
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn manifest(config: &ExperimentConfig, wall: f64, outputs: &[&str], status: &str) -> Result<Value> {
    Ok(json!({
        "manifest_version": MANIFEST_VERSION,
        "kind": config.kind.map(|k| k.as_str()),
        "seed": config.seed,
        "code_version": env!("CARGO_PKG_VERSION"),
        "wall_time_seconds": wall,
        "threads": rayon::current_num_threads(),
        "status": status,
        "outputs": outputs,
        "config": serde_json::to_value(config)?,
    }))
}

fn write_outputs(out: &Path, config: &ExperimentConfig, result: Executed, wall: f64, violations: &[Violation]) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let mut outputs = vec!["report.json"];
    for (name, data) in &result.data {
        write_data(&out.join(name), data)?;
        outputs.push(name);
    }
    let mut report = result.report;
    report["seed"] = json!(config.seed);
    report["gates"] = serde_json::to_value(&result.gates)?;
    report["config_warnings"] = json!(violations.iter().map(|v| v.message.clone()).collect::<Vec<_>>());
    write_json(&out.join("report.json"), &report)?;
    outputs.push("manifest.json");
    write_json(&out.join("manifest.json"), &manifest(config, wall, &outputs, "completed")?)
}

fn write_failure(out: &Path, config: &ExperimentConfig, error: &Error, wall: f64) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let report = json!({
        "kind": config.kind.map(|k| k.as_str()),
        "seed": config.seed,
        "error": error.to_string(),
    });
    write_json(&out.join("report.json"), &report)?;
    write_json(&out.join("manifest.json"), &manifest(config, wall, &["report.json", "manifest.json"], "failed")?)
}
