//! Solving a config and writing its result files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use fpif_core::fpif::{default_gamma, fpif_solve};
use fpif_core::games::{grid_game_solve, matrix_game_solve};
use fpif_core::primal_dual::pd_solve;
use fpif_core::solver::{tseng_solve, Sequence, Snapshots, SolveTrace, Status, StepSchedule, StopRule};
use fpif_core::sum_m::sum_solve;
use log::{info, warn};
use serde_json::json;

use crate::build::{assemble, Assembled};
use crate::config::{LoadedConfig, ScheduleConfig, SequenceSpec};
use crate::output::{write_atomic, Solution};
use crate::verify::{finite_json, verify_solution, Checks, DEFAULT_VERIFY_TOL};
use crate::CliError;

/// Command-line values that replace config entries.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub gamma: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, loaded: &mut LoadedConfig) {
        let c = &mut loaded.config;
        if let Some(n) = self.max_iter {
            c.stop.max_iter = n;
        }
        if let Some(t) = self.tol {
            c.stop.tol = t;
        }
        if let Some(g) = self.gamma {
            c.schedule.gamma = Some(g);
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(dir) = &self.out {
            // taken as given, not relative to the config file
            let dir = if dir.is_absolute() {
                dir.clone()
            } else {
                std::env::current_dir().map(|cwd| cwd.join(dir)).unwrap_or_else(|_| dir.clone())
            };
            c.output.dir = Some(dir);
        }
    }
}

/// The result of a solve, before anything is written.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: Status,
    pub trace: SolveTrace,
    pub solution: Solution,
    /// The step stored with the solution (`δ` of the last Tseng step, `γ`
    /// otherwise).
    pub gamma: f64,
    /// Game value and gap.
    pub game: Option<(f64, f64)>,
}

fn sequence(spec: Option<&SequenceSpec>, default: f64) -> Sequence {
    match spec {
        Some(SequenceSpec::Constant(v)) => Sequence::Constant(*v),
        Some(SequenceSpec::Array(v)) => Sequence::Array(v.clone()),
        None => Sequence::Constant(default),
    }
}

fn schedule(s: &ScheduleConfig, delta: Sequence, eta: f64) -> StepSchedule {
    let lambda = sequence(s.lambda.as_ref(), 1.0);
    match s.epsilon {
        Some(eps) => StepSchedule::new(delta, lambda, eps),
        None => StepSchedule::auto(delta, lambda, eta),
    }
}

fn ignored(s: &ScheduleConfig, kind: &str, delta: bool, lambda: bool) {
    if delta && s.delta.is_some() {
        warn!("schedule.delta is not used by {kind} problems");
    }
    if lambda && s.lambda.is_some() {
        warn!("schedule.lambda is not used by {kind} problems");
    }
    if s.epsilon.is_some() && !matches!(kind, "tseng" | "fpif") {
        warn!("schedule.epsilon is not used by {kind} problems");
    }
}

/// Solves the loaded config, keeping the requested iterate snapshots.
pub fn solve(loaded: &LoadedConfig, snapshots: Snapshots) -> Result<Outcome, CliError> {
    let config = &loaded.config;
    let s = &config.schedule;
    let stop = StopRule::default()
        .with_tol(config.stop.tol)
        .with_max_iter(config.stop.max_iter)
        .with_snapshots(snapshots);
    let kind = config.problem.kind();
    let mut solution = Solution::new();
    let outcome = match assemble(loaded)? {
        Assembled::Tseng { a, b, x0 } => {
            let chi = b.chi();
            let delta = match (&s.delta, s.gamma) {
                (Some(d), _) => sequence(Some(d), 0.0),
                (None, Some(g)) => Sequence::Constant(g),
                (None, None) => Sequence::Constant(default_gamma(chi)),
            };
            let schedule = schedule(s, delta, chi);
            let (x, trace) = tseng_solve(&a, &b, &x0, &schedule, &stop)?;
            let step = schedule.delta_at(trace.iterations().saturating_sub(1));
            solution.push("x", x.as_slice().iter().copied());
            solution.push("step", [step]);
            (trace, step, None)
        }
        Assembled::Fpif { prob, x0, y0 } => {
            let schedule = schedule(s, sequence(s.delta.as_ref(), 1.0), prob.gamma() * prob.chi());
            let (sol, trace) = fpif_solve(&prob, &x0, &y0, &schedule, &stop)?;
            solution.push("x", sol.x.as_slice().iter().copied());
            solution.push("y", sol.y.as_slice().iter().copied());
            solution.push("step", [prob.gamma()]);
            (trace, prob.gamma(), None)
        }
        Assembled::SumM(prob) => {
            ignored(s, kind, true, false);
            let (sol, trace) = sum_solve(&prob, None, &sequence(s.lambda.as_ref(), 1.0), &stop)?;
            solution.push("x", sol.x.as_slice().iter().copied());
            for (i, zi) in sol.z.iter().enumerate() {
                solution.push(format!("z{}", i + 1), zi.as_slice().iter().copied());
            }
            solution.push("step", [prob.gamma()]);
            (trace, prob.gamma(), None)
        }
        Assembled::PrimalDual(prob) => {
            ignored(s, kind, true, false);
            let (sol, trace) = pd_solve(&prob, None, None, &sequence(s.lambda.as_ref(), 1.0), &stop)?;
            solution.push("x", sol.x.as_slice().iter().copied());
            for (i, ui) in sol.u.iter().enumerate() {
                solution.push(format!("u{}", i + 1), ui.as_slice().iter().copied());
            }
            solution.push("multiplier", sol.multiplier.as_slice().iter().copied());
            solution.push("step", [prob.gamma()]);
            (trace, prob.gamma(), None)
        }
        Assembled::MatrixGame(game) => {
            ignored(s, kind, true, true);
            let sol = matrix_game_solve(&game, s.gamma, &stop)?;
            solution.push("x1", sol.x1.iter().copied());
            solution.push("x2", sol.x2.iter().copied());
            let gamma = s.gamma.unwrap_or_else(|| default_gamma(game.chi()));
            (sol.trace, gamma, Some((sol.value, sol.gap)))
        }
        Assembled::GridGame(game) => {
            ignored(s, kind, true, true);
            let sol = grid_game_solve(&game, s.gamma, &stop)?;
            solution.push("density1", sol.density1.iter().copied());
            solution.push("density2", sol.density2.iter().copied());
            let gamma = s.gamma.unwrap_or_else(|| default_gamma(game.chi()));
            (sol.trace, gamma, Some((sol.value, sol.gap)))
        }
    };
    let (trace, gamma, game) = outcome;
    Ok(Outcome {
        status: trace.status,
        trace,
        solution,
        gamma,
        game,
    })
}

/// What a run wrote, and the residuals verified on the written solution.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub kind: &'static str,
    pub status: Status,
    pub iterations: usize,
    pub residual: f64,
    pub wall_time_s: f64,
    pub solution_path: PathBuf,
    pub trace_path: PathBuf,
    pub report_path: PathBuf,
    pub checks: Checks,
    pub reference_error: Option<f64>,
}

pub fn run(config_path: &Path, overrides: &Overrides) -> Result<RunReport, CliError> {
    let mut loaded = LoadedConfig::from_path(config_path)?;
    overrides.apply(&mut loaded);
    let kind = loaded.config.problem.kind();
    info!("solving {kind} problem from {}", config_path.display());
    let started = Instant::now();
    let outcome = solve(&loaded, Snapshots::Endpoints)?;
    let wall_time_s = started.elapsed().as_secs_f64();
    info!(
        "{} after {} iterations, residual {:e}",
        outcome.status.as_str(),
        outcome.trace.iterations(),
        outcome.trace.final_residual()
    );

    let dir = loaded.output_dir();
    let name = loaded.output_name();
    let solution_path = dir.join(format!("{name}.solution.csv"));
    let trace_path = dir.join(format!("{name}.trace.csv"));
    let report_path = dir.join(format!("{name}.report.json"));

    write_atomic(&solution_path, outcome.solution.to_csv_string().as_bytes())?;
    write_atomic(&trace_path, outcome.trace.to_csv_string().as_bytes())?;

    // checked on the file as written, so that `verify` sees the same numbers
    let written = Solution::read(&solution_path)?;
    let verified = verify_solution(&loaded, &written, DEFAULT_VERIFY_TOL)?;

    let mut report = json!({
        "kind": kind,
        "status": outcome.status.as_str(),
        "iterations": outcome.trace.iterations(),
        "residual": finite_json(outcome.trace.final_residual()),
        "wall_time_s": wall_time_s,
        "solution": solution_path.display().to_string(),
        "trace": trace_path.display().to_string(),
        "gamma": outcome.gamma,
        "seed": loaded.config.seed,
        "checks": verified.checks.to_json(),
    });
    if let Some((value, gap)) = outcome.game {
        report["value"] = finite_json(value);
        report["gap"] = finite_json(gap);
    }
    if let Some(err) = verified.reference_error {
        report["reference_error"] = finite_json(err);
    }
    let text = serde_json::to_string_pretty(&report).expect("serializable report") + "\n";
    write_atomic(&report_path, text.as_bytes())?;

    Ok(RunReport {
        kind,
        status: outcome.status,
        iterations: outcome.trace.iterations(),
        residual: outcome.trace.final_residual(),
        wall_time_s,
        solution_path,
        trace_path,
        report_path,
        checks: verified.checks,
        reference_error: verified.reference_error,
    })
}
