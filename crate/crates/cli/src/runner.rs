//! Subcommand implementations.

use std::time::Instant;

use qsl_core::prelude::*;
use std::result::Result;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::report::{Metric, ReportRow};
use crate::scenario::{Expected, Scenario, ScenarioSpec, Steps, StepsSpec, ValidationError};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ToleranceProfile {
    #[default]
    Default,
    Strict,
}

impl ToleranceProfile {
    /// Relative change at which automatic grid refinement stops.
    pub fn refinement_tol(self) -> f64 {
        match self {
            ToleranceProfile::Default => 1e-7,
            ToleranceProfile::Strict => 1e-9,
        }
    }

    /// Multiplier applied to fixture tolerances.
    pub fn fixture_scale(self) -> f64 {
        match self {
            ToleranceProfile::Default => 1.0,
            ToleranceProfile::Strict => 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub profile: ToleranceProfile,
    /// Fill the `runtime_ms` column; off by default so reports are reproducible byte for byte.
    pub timing: bool,
    pub seed: Option<u64>,
    pub steps: Option<Steps>,
}

const PASSAGE_ANGLE_TOL: f64 = 1e-9;
const INITIAL_AUTO_STEPS: usize = 512;

/// Applies command-line overrides and validates.
pub fn prepare(spec: &ScenarioSpec, text: Option<&str>, origin: &str, opts: &RunOptions) -> Result<Scenario, ValidationError> {
    let mut spec = spec.clone();
    if let Some(seed) = opts.seed {
        spec.seed = seed;
    }
    if let Some(steps) = opts.steps {
        spec.steps = match steps {
            Steps::Fixed(n) => StepsSpec::Fixed(n),
            Steps::Auto => StepsSpec::Named("auto".into()),
        };
    }
    spec.resolve(origin, text)
}

fn horizon(sc: &Scenario) -> Result<f64, CliError> {
    sc.horizon.ok_or_else(|| {
        CliError::Validation(ValidationError {
            origin: sc.name.clone(),
            field: "horizon_T".into(),
            line: None,
            column: None,
            message: "this command needs a horizon".into(),
        })
    })
}

fn finish(mut row: ReportRow, start: Instant, opts: &RunOptions) -> ReportRow {
    if opts.timing {
        row.runtime_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    row
}

fn trajectory(sc: &Scenario, span: f64, opts: &RunOptions) -> qsl_core::Result<Trajectory> {
    match sc.steps {
        Steps::Fixed(n) => evolve(&sc.schedule, &sc.initial, span, n, sc.constants),
        Steps::Auto => {
            let tol = opts.profile.refinement_tol() * 1e-2;
            let steps = default_steps(sc.schedule.spectral_width(span)?, span, sc.constants.hbar);
            evolve_auto(&sc.schedule, &sc.initial, span, steps, tol, sc.constants)
        }
    }
}

/// Largest exact-uncertainty residual over the non-stationary grid points,
/// with `B = H(t)` and the scenario basis as the measured observable.
pub fn run_verify_ur(sc: &Scenario, opts: &RunOptions) -> Result<ReportRow, CliError> {
    let start = Instant::now();
    let span = horizon(sc)?;
    let traj = trajectory(sc, span, opts)?;
    let basis = sc.basis.clone().unwrap_or_else(|| complete_basis_from(&sc.initial));
    let mut worst: f64 = 0.0;
    let (mut points, mut stationary, mut boundary) = (0, 0, 0);
    for (k, psi) in traj.states().iter().enumerate() {
        match exact_ur_residual(&basis, &traj.hamiltonian_at(k), psi, sc.constants) {
            Ok(r) => {
                worst = worst.max(r);
                points += 1;
            }
            Err(QslError::Stationary) => stationary += 1,
            Err(QslError::SupportBoundary(_)) => boundary += 1,
            Err(e) => return Err(e.into()),
        }
    }
    let mut row = ReportRow::new(&sc.name, "verify-ur");
    row.dimension = Some(sc.dimension);
    row.steps = Some(traj.step_count());
    row.t_actual = Some(Metric::Value(span));
    row.ur_points = Some(points);
    row.ur_stationary = Some(stationary);
    row.ur_residual_max = Some(if points == 0 { Metric::Degenerate } else { Metric::Value(worst) });
    if points == 0 {
        row.add_note("all grid points stationary");
    }
    if boundary > 0 {
        row.add_note(format!("{boundary} points at a support boundary skipped"));
    }
    Ok(finish(row, start, opts))
}

pub fn run_bounds(sc: &Scenario, opts: &RunOptions) -> Result<ReportRow, CliError> {
    let start = Instant::now();
    let span = horizon(sc)?;
    let policy = match sc.steps {
        Steps::Fixed(n) => StepPolicy::Fixed(n),
        Steps::Auto => StepPolicy::Auto { initial: INITIAL_AUTO_STEPS, rel_tol: opts.profile.refinement_tol() },
    };
    if let Some(b) = &sc.basis {
        if !b.starts_with(&sc.initial, 1e-10) {
            return Err(CliError::Validation(ValidationError {
                origin: sc.name.clone(),
                field: "basis".into(),
                line: None,
                column: None,
                message: "the first basis vector must be the initial state".into(),
            }));
        }
    }
    let r = bound_report(&sc.schedule, &sc.initial, span, sc.basis.as_ref(), policy, sc.constants)?;

    let mut row = ReportRow::new(&sc.name, "bounds");
    row.dimension = Some(sc.dimension);
    row.steps = Some(r.steps);
    row.t_actual = Some(Metric::Value(r.t_actual));
    row.t_exact_2d = Some(r.t_exact_2d.map_or(Metric::Undefined, Metric::from));
    if let Some(note) = &r.t_exact_2d_note {
        row.add_note(format!("t_exact_2d: {note}"));
    }
    let or_degenerate = |v: Option<f64>| Some(v.map_or(Metric::Degenerate, Metric::from));
    row.t_exact_ddim = or_degenerate(r.t_exact_ddim);
    row.t_imt = or_degenerate(r.t_imt);
    row.t_mt = or_degenerate(r.t_mt);
    row.t_ml = r.t_ml.map(|b| match b {
        MlBound::Defined(t) => Metric::from(t),
        MlBound::Undefined => Metric::Undefined,
    });
    row.theta = Some(Metric::from(r.theta));
    row.wootters_length = Some(Metric::from(r.wootters_length));
    row.avg_dhnc = Some(Metric::from(r.avg_dhnc));
    row.avg_dh = Some(Metric::from(r.avg_dh));
    row.avg_dhcl = Some(Metric::from(r.avg_dhcl));
    row.chain_holds = Some(r.chain_holds());
    row.monotonicity = Some(r.monotonicity.to_string());
    row.saturated_imt = Some(r.saturation.imt);
    row.saturated_mt = Some(r.saturation.mt);
    row.saturated_exact_ddim = Some(r.saturation.exact_ddim);
    row.saturated_exact_2d = r.saturation.exact_2d;
    if let Some(target) = &sc.target {
        row.passage_time = Some(match first_passage_time(&sc.schedule, &sc.initial, target, PASSAGE_ANGLE_TOL, span, sc.constants) {
            Ok(t) => Metric::Value(t),
            Err(QslError::NotReached { closest_angle, .. }) => {
                row.add_note(format!("target not reached within the horizon (closest angle {closest_angle:e})"));
                Metric::Undefined
            }
            Err(e) => return Err(e.into()),
        });
    }
    Ok(finish(row, start, opts))
}

/// Serializable summary of an optimization run.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizationSummary {
    pub t_opt: f64,
    pub iterations: usize,
    pub classical_norm: f64,
    pub mt_gap: f64,
    pub converged: bool,
    pub form_match: bool,
    pub form_residual: f64,
    pub omega: f64,
    pub evaluations: usize,
    pub mt_floor: f64,
    pub floor_violation: f64,
    /// Rows of `H_opt` as `[re, im]` pairs.
    pub h_opt: Vec<Vec<[f64; 2]>>,
}

/// Runs the optimizer. A search that never reaches the target is reported in
/// the row's `error` column with no summary, rather than as a failure.
pub fn run_optimize(sc: &Scenario, opts: &RunOptions) -> Result<(ReportRow, Option<OptimizationSummary>), CliError> {
    let start = Instant::now();
    let target = sc.target.as_ref().ok_or_else(|| {
        CliError::Validation(ValidationError {
            origin: sc.name.clone(),
            field: "target_state".into(),
            line: None,
            column: None,
            message: "optimize needs a target state".into(),
        })
    })?;
    let cap = sc.variance_cap.unwrap_or(1.0);
    let config = OptimizationConfig { seed: sc.seed, constants: sc.constants, ..Default::default() };
    let mut row = ReportRow::new(&sc.name, "optimize");
    row.dimension = Some(sc.dimension);
    row.theta = Some(Metric::from(hilbert_angle(&sc.initial, target)?));
    let result = match minimize_evolution_time(&sc.initial, target, cap, &config) {
        Ok(r) => r,
        Err(QslError::NoImprovement) => {
            row.t_opt = Some(Metric::Undefined);
            row.error = Some("NO_IMPROVEMENT: no restart reached the target".into());
            return Ok((finish(row, start, opts), None));
        }
        Err(e) => return Err(e.into()),
    };
    let diag = optimality_diagnostics(&result.h_opt, &sc.initial, Some(target), sc.constants)?;

    row.t_opt = Some(Metric::from(result.t_opt));
    row.classical_norm = Some(Metric::from(result.diagnostics.classical_norm));
    row.mt_gap = Some(Metric::from(result.diagnostics.mt_gap));
    row.t_mt = Some(Metric::from(result.candidates.mt_floor));
    row.form_match = Some(diag.form_match);
    row.converged = Some(result.diagnostics.converged);
    row.iterations = Some(result.iterations);
    if !result.diagnostics.converged {
        row.add_note("simplex did not meet the convergence tolerance");
    }

    let m = result.h_opt.matrix();
    let summary = OptimizationSummary {
        t_opt: result.t_opt,
        iterations: result.iterations,
        classical_norm: result.diagnostics.classical_norm,
        mt_gap: result.diagnostics.mt_gap,
        converged: result.diagnostics.converged,
        form_match: diag.form_match,
        form_residual: diag.form_residual,
        omega: diag.omega,
        evaluations: result.candidates.evaluations,
        mt_floor: result.candidates.mt_floor,
        floor_violation: result.candidates.floor_violation(),
        h_opt: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect(),
    };
    Ok((finish(row, start, opts), Some(summary)))
}

/// Sets the value at a dotted path (`hamiltonian.axis.2`, `horizon_T`). The
/// alias `n_z` sets the z component of a Pauli axis, keeping its azimuth and
/// unit length.
pub fn set_parameter(doc: &mut Value, path: &str, value: f64) -> Result<(), String> {
    if path == "n_z" {
        if !(-1.0..=1.0).contains(&value) {
            return Err(format!("n_z must lie in [-1, 1], got {value}"));
        }
        let axis = doc.pointer_mut("/hamiltonian/axis").ok_or("n_z needs a pauli-axis Hamiltonian")?;
        let comps: Vec<f64> = axis.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default();
        if comps.len() != 3 {
            return Err("hamiltonian.axis must have three components".into());
        }
        let phi = if comps[0] == 0.0 && comps[1] == 0.0 { 0.0 } else { comps[1].atan2(comps[0]) };
        let r = (1.0 - value * value).sqrt();
        *axis = serde_json::json!([r * phi.cos(), r * phi.sin(), value]);
        return Ok(());
    }
    let pointer: String = path.split('.').map(|k| format!("/{k}")).collect();
    let slot = doc.pointer_mut(&pointer).ok_or_else(|| format!("no field at {path}"))?;
    if !slot.is_number() {
        return Err(format!("{path} is not a numeric field"));
    }
    *slot = if value.fract() == 0.0 && value >= 0.0 && slot.is_u64() {
        Value::from(value as u64)
    } else {
        serde_json::Number::from_f64(value).map(Value::Number).ok_or_else(|| format!("{value} is not finite"))?
    };
    Ok(())
}

/// One bounds row per value of `axis`, in input order. Row failures are
/// recorded in the `error` column.
pub fn run_sweep(doc: &Value, origin: &str, axis: &str, values: &[f64], opts: &RunOptions, jobs: usize) -> Result<Vec<ReportRow>, CliError> {
    let base: ScenarioSpec = serde_json::from_value(doc.clone())?;
    let run_one = |value: f64| -> ReportRow {
        let name = base.name.clone();
        let outcome = (|| -> Result<ReportRow, CliError> {
            let mut d = doc.clone();
            set_parameter(&mut d, axis, value).map_err(|m| {
                CliError::Validation(ValidationError { origin: origin.into(), field: axis.into(), line: None, column: None, message: m })
            })?;
            let spec: ScenarioSpec = serde_json::from_value(d)?;
            let sc = prepare(&spec, None, origin, opts)?;
            run_bounds(&sc, opts)
        })();
        let mut row = outcome.unwrap_or_else(|e| {
            let mut row = ReportRow::new(&name, "bounds");
            row.error = Some(e.to_string());
            row
        });
        row.parameter = Some(axis.to_string());
        row.parameter_value = Some(value);
        row
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    Ok(pool.install(|| values.par_iter().map(|&v| run_one(v)).collect()))
}

/// Differences between a row and the scenario's reference values.
pub fn check_expectations(sc: &Scenario, row: &ReportRow, profile: ToleranceProfile) -> Result<Vec<String>, CliError> {
    let actual = serde_json::to_value(row)?;
    let mut mismatches = Vec::new();
    let Some(expect) = sc.expect.get(&row.command) else {
        return Ok(mismatches);
    };
    for (key, expected) in expect {
        let Some(got) = actual.get(key) else {
            mismatches.push(format!("{key}: no such column"));
            continue;
        };
        match expected {
            Expected::Number { value, abs_tol, rel_tol } => {
                let Some(g) = got.as_f64() else {
                    mismatches.push(format!("{key}: expected {value}, got {got}"));
                    continue;
                };
                let scale = profile.fixture_scale();
                let tol = abs_tol.unwrap_or(0.0).max(rel_tol.unwrap_or(0.0) * value.abs()) * scale;
                let tol = if abs_tol.is_none() && rel_tol.is_none() { 1e-9 * scale } else { tol };
                if (g - value).abs() > tol {
                    mismatches.push(format!("{key}: expected {value} within {tol:e}, got {g}"));
                }
            }
            Expected::Exact(v) => {
                if got != v {
                    mismatches.push(format!("{key}: expected {v}, got {got}"));
                }
            }
        }
    }
    Ok(mismatches)
}
