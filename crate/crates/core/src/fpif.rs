//! Forward–partial inverse–forward splitting for `0 ∈ Ax + Bx + N_V x`.

use log::warn;

use crate::error::{check_gamma, Error, Result};
use crate::hilbert::{Point, Projector};
use crate::operators::{LipschitzMap, PartialInverseView, ResolventOp};
use crate::solver::{
    snapshot_deviation, tseng_solve, Control, Recorder, Sequence, SolveTrace, StepRecord, StepSchedule, StopRule,
};

/// Default step: `0.9/χ`, or `1` when `χ = 0`.
pub fn default_gamma(chi: f64) -> f64 {
    if chi > 0.0 {
        0.9 / chi
    } else {
        1.0
    }
}

/// `0 ∈ Ax + Bx + N_V x` with a step `γ ∈ ]0, 1/χ[`.
#[derive(Clone, Debug)]
pub struct InclusionProblem {
    a: ResolventOp,
    b: LipschitzMap,
    v: Projector,
    gamma: f64,
}

/// A primal point in `V` and a dual point in `V⊥`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalDualPoint {
    pub x: Point,
    pub y: Point,
}

impl InclusionProblem {
    /// Assembles the problem with the default step.
    pub fn new(a: ResolventOp, b: LipschitzMap, v: Projector) -> Result<Self> {
        if a.space() != b.space() || v.space() != a.space() {
            return Err(Error::SpaceMismatch("inclusion problem"));
        }
        let gamma = default_gamma(b.chi());
        Ok(Self { a, b, v, gamma })
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        check_gamma(gamma, self.b.chi())?;
        self.gamma = gamma;
        Ok(self)
    }

    pub fn a(&self) -> &ResolventOp {
        &self.a
    }

    pub fn b(&self) -> &LipschitzMap {
        &self.b
    }

    pub fn v(&self) -> &Projector {
        &self.v
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn chi(&self) -> f64 {
        self.b.chi()
    }

    /// `γ P_V B P_V z`.
    fn forward(&self, z: &Point) -> Point {
        self.v.apply(&self.b.eval(&self.v.apply(z)))
    }

    /// One forward–Douglas–Rachford–forward step from `z` with relaxation
    /// `lambda`; returns `(zₙ₊₁, tₙ − rₙ, sₙ)`.
    fn cor_step(&self, z: &Point, lambda: f64) -> (Point, Point, Point) {
        let g = self.gamma;
        let r = z.axpy(-g, &self.forward(z));
        let p = self.a.eval(g, &r);
        let s = &(&self.v.apply(&p).scale(2.0) - &p) + &self.v.apply_complement(&r);
        let t = s.axpy(-g, &self.forward(&s));
        let diff = &t - &r;
        (z.axpy(lambda, &diff), diff, s)
    }

    /// `zₙ₊₁` from `zₙ`, for checking that a computed `z̄ = x̄ + γȳ` is fixed.
    pub fn step(&self, z: &Point, lambda: f64) -> Result<Point> {
        if z.space() != self.a.space() {
            return Err(Error::SpaceMismatch("fpif step"));
        }
        Ok(self.cor_step(z, lambda).0)
    }

    /// `‖P_{V⊥}x‖ + ‖P_V y‖ + ‖x − J_{γA}(x + γy − γP_V Bx)‖`, which vanishes
    /// exactly when `x ∈ V`, `y ∈ V⊥` and `y ∈ Ax + P_V Bx`.
    pub fn inclusion_residual(&self, sol: &PrimalDualPoint) -> Result<f64> {
        if sol.x.space() != self.a.space() || sol.y.space() != self.a.space() {
            return Err(Error::SpaceMismatch("inclusion residual"));
        }
        let g = self.gamma;
        let push = self.v.apply(&self.b.eval(&sol.x));
        let arg = (&sol.x + &sol.y.scale(g)).axpy(-g, &push);
        let backward = self.a.eval(g, &arg);
        Ok(self.v.apply_complement(&sol.x).norm()
            + self.v.apply(&sol.y).norm()
            + (&sol.x - &backward).norm())
    }

    fn split(&self, z: &Point) -> PrimalDualPoint {
        PrimalDualPoint {
            x: self.v.apply(z),
            y: self.v.apply_complement(z).scale(1.0 / self.gamma),
        }
    }
}

fn confine(p: &Projector, point: &Point, complement: bool, what: &str) -> Point {
    let kept = if complement {
        p.apply_complement(point)
    } else {
        p.apply(point)
    };
    let leak = (point - &kept).norm();
    if leak > 1e-12 * point.norm().max(1.0) {
        warn!("{what} is not in its subspace (distance {leak:e}); projecting");
    }
    kept
}

/// Solves the inclusion from `(x₀, y₀) ∈ V × V⊥`.
///
/// With `δₙ ≡ 1` this is the constant-step forward–Douglas–Rachford–forward
/// iteration on `zₙ = xₙ + γyₙ`, valid for any `A`. Other step sequences
/// solve the subproblem for `(pₙ, qₙ)` directly and need an affine `A`.
/// The schedule is validated against `η = γχ`.
pub fn fpif_solve(
    prob: &InclusionProblem,
    x0: &Point,
    y0: &Point,
    schedule: &StepSchedule,
    stop: &StopRule,
) -> Result<(PrimalDualPoint, SolveTrace)> {
    let space = prob.a.space();
    if x0.space() != space || y0.space() != space {
        return Err(Error::SpaceMismatch("fpif_solve initial point"));
    }
    check_gamma(prob.gamma, prob.chi())?;
    schedule.validate(prob.gamma * prob.chi())?;
    stop.validate()?;
    let x0 = confine(&prob.v, x0, false, "x0");
    let y0 = confine(&prob.v, y0, true, "y0");
    if schedule.delta.is_constant_one() {
        if !prob.a.supports_step(prob.gamma) {
            return Err(Error::Unsupported(format!(
                "{} has no resolvent at step γ = {}",
                prob.a.name(),
                prob.gamma
            )));
        }
        let z0 = &x0 + &y0.scale(prob.gamma);
        let (z, trace) = run_constant_step(prob, &z0, &schedule.lambda, stop);
        Ok((prob.split(&z), trace))
    } else {
        run_general_step(prob, x0, y0, schedule, stop)
    }
}

fn leak_columns() -> Vec<String> {
    vec!["primal_leak".into(), "dual_leak".into()]
}

fn run_constant_step(
    prob: &InclusionProblem,
    z0: &Point,
    lambda: &Sequence,
    stop: &StopRule,
) -> (Point, SolveTrace) {
    let mut z = z0.clone();
    let mut recorder = Recorder::new(*stop, &leak_columns(), z0);
    for n in 0..stop.max_iter {
        let lam = lambda.at(n);
        let (next, diff, s) = prob.cor_step(&z, lam);
        let x = prob.v.apply(&z);
        let y = prob.v.apply_complement(&z);
        let row = StepRecord {
            residual: diff.norm(),
            delta: 1.0,
            lambda: lam,
            step_norm: (&next - &z).norm(),
            forward_gap: (&s - &z).norm(),
            extras: vec![
                prob.v.apply_complement(&x).norm(),
                prob.v.apply(&y).norm() / prob.gamma,
            ],
        };
        let control = recorder.step(n, row, z.norm(), || next.clone());
        if next.is_finite() {
            z = next;
        }
        if let Control::Stop = control {
            break;
        }
    }
    (z, recorder.finish())
}

/// Step 1 finds `(pₙ, qₙ)` with `xₙ − δₙγP_V Bxₙ + γyₙ = pₙ + γqₙ` and
/// `P_V qₙ/δₙ + P_{V⊥}qₙ ∈ A(P_V pₙ + P_{V⊥}pₙ/δₙ)`; step 2 updates
/// `x` and `y` separately.
fn run_general_step(
    prob: &InclusionProblem,
    x0: Point,
    y0: Point,
    schedule: &StepSchedule,
    stop: &StopRule,
) -> Result<(PrimalDualPoint, SolveTrace)> {
    let g = prob.gamma;
    let v = &prob.v;
    let view = PartialInverseView::new(&prob.a, v, g)?;
    // reject non-affine A before iterating
    view.step_pair(0.5, &x0)?;
    let (mut x, mut y) = (x0, y0);
    let z0 = &x + &y.scale(g);
    let mut recorder = Recorder::new(*stop, &leak_columns(), &z0);
    for n in 0..stop.max_iter {
        let delta = schedule.delta_at(n);
        let lam = schedule.lambda_at(n);
        let bx = prob.b.eval(&x);
        let w = (&x + &y.scale(g)).axpy(-delta * g, &v.apply(&bx));
        let (p, q) = view.step_pair(delta, &w)?;
        let pv = v.apply(&p);
        let correction = v.apply(&(&bx - &prob.b.eval(&pv))).scale(delta * g);
        let x_next = x.axpy(lam, &(&(&pv + &correction) - &x));
        let y_next = y.axpy(lam, &(&v.apply_complement(&q) - &y));
        // the same step written on z = x + γy
        let z = &x + &y.scale(g);
        let z_next = &x_next + &y_next.scale(g);
        let s = &pv + &v.apply_complement(&q).scale(g);
        let row = StepRecord {
            residual: (&z_next - &z).norm() / lam,
            delta,
            lambda: lam,
            step_norm: (&z_next - &z).norm(),
            forward_gap: (&s - &z).norm(),
            extras: vec![v.apply_complement(&x).norm(), v.apply(&y).norm()],
        };
        let control = recorder.step(n, row, z.norm(), || z_next.clone());
        if x_next.is_finite() && y_next.is_finite() {
            x = x_next;
            y = y_next;
        }
        if let Control::Stop = control {
            break;
        }
    }
    Ok((PrimalDualPoint { x, y }, recorder.finish()))
}

/// Runs the solver with `V = H` and unit relaxation next to the relaxed
/// Tseng method with step `γ` on the same data, returning the largest
/// distance between corresponding iterates.
pub fn reduce_to_tseng_check(prob: &InclusionProblem, z0: &Point, stop: &StopRule) -> Result<f64> {
    if !prob.v.is_identity() {
        return Err(Error::InvalidProblem("the Tseng reduction needs V = H".into()));
    }
    let stop = stop.with_snapshots(crate::solver::Snapshots::Every(1));
    let schedule = StepSchedule::auto(1.0, 1.0, prob.gamma * prob.chi());
    let (_, ours) = fpif_solve(prob, z0, &z0.space().zero(), &schedule, &stop)?;
    let tseng_schedule = StepSchedule::auto(prob.gamma, 1.0, prob.chi());
    let (_, theirs) = tseng_solve(&prob.a, &prob.b, z0, &tseng_schedule, &stop)?;
    Ok(snapshot_deviation(&ours, &theirs))
}

/// Runs the solver with `B = 0` next to the Douglas–Rachford recursion
/// `sₙ = (zₙ + R_{N_V} R_{γA} zₙ)/2`, `zₙ₊₁ = zₙ + λₙ(sₙ − zₙ)`, returning
/// the largest distance between corresponding iterates.
pub fn reduce_to_dr_check(
    prob: &InclusionProblem,
    z0: &Point,
    lambda: &Sequence,
    stop: &StopRule,
) -> Result<f64> {
    if !prob.b.is_zero() {
        return Err(Error::InvalidProblem("the Douglas-Rachford reduction needs B = 0".into()));
    }
    let stop = stop.with_snapshots(crate::solver::Snapshots::Every(1));
    let g = prob.gamma;
    let schedule = StepSchedule::auto(1.0, lambda.clone(), 0.0);
    let x0 = prob.v.apply(z0);
    let y0 = prob.v.apply_complement(z0).scale(1.0 / g);
    let (_, ours) = fpif_solve(prob, &x0, &y0, &schedule, &stop)?;

    let mut z = &x0 + &y0.scale(g);
    let mut recorder = Recorder::new(stop, &[], &z);
    for n in 0..stop.max_iter {
        let lam = lambda.at(n);
        let reflected = prob.a.reflect(g, &z)?;
        let s = (&z + &prob.v.reflect(&reflected)).scale(0.5);
        let next = z.axpy(lam, &(&s - &z));
        let row = StepRecord {
            residual: (&s - &z).norm(),
            delta: 1.0,
            lambda: lam,
            step_norm: (&next - &z).norm(),
            forward_gap: (&s - &z).norm(),
            extras: vec![],
        };
        let control = recorder.step(n, row, z.norm(), || next.clone());
        z = next;
        if let Control::Stop = control {
            break;
        }
    }
    Ok(snapshot_deviation(&ours, &recorder.finish()))
}
