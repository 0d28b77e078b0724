use super::schedule::StepSchedule;
use super::trace::{Control, Recorder, SolveTrace, StepRecord, StopRule};
use crate::error::{Error, Result};
use crate::hilbert::Point;
use crate::operators::{LipschitzMap, ResolventOp};

/// Relaxed forward-backward-forward iteration for `0 ∈ Az + Bz`:
///
/// ```text
/// rₙ = zₙ − δₙ B zₙ
/// sₙ = J_{δₙA} rₙ
/// tₙ = sₙ − δₙ B sₙ
/// zₙ₊₁ = zₙ + λₙ(tₙ − rₙ)
/// ```
pub fn tseng_solve(
    a: &ResolventOp,
    b: &LipschitzMap,
    z0: &Point,
    schedule: &StepSchedule,
    stop: &StopRule,
) -> Result<(Point, SolveTrace)> {
    if a.space() != b.space() || z0.space() != a.space() {
        return Err(Error::SpaceMismatch("tseng_solve"));
    }
    schedule.validate(b.chi())?;
    stop.validate()?;
    for n in 0..stop.max_iter.min(schedule_len(schedule)) {
        let delta = schedule.delta_at(n);
        if !a.supports_step(delta) {
            return Err(Error::Unsupported(format!(
                "{} has no resolvent at step {delta}",
                a.name()
            )));
        }
    }
    let mut z = z0.clone();
    let mut recorder = Recorder::new(*stop, &[], z0);
    for n in 0..stop.max_iter {
        let delta = schedule.delta_at(n);
        let lambda = schedule.lambda_at(n);
        let r = z.axpy(-delta, &b.eval(&z));
        let s = a.eval(delta, &r);
        let t = s.axpy(-delta, &b.eval(&s));
        let diff = &t - &r;
        let next = z.axpy(lambda, &diff);
        let row = StepRecord {
            residual: diff.norm(),
            delta,
            lambda,
            step_norm: (&next - &z).norm(),
            forward_gap: (&s - &z).norm(),
            extras: Vec::new(),
        };
        let z_norm = z.norm();
        let control = recorder.step(n, row, z_norm, || next.clone());
        if next.is_finite() {
            z = next;
        }
        if let Control::Stop = control {
            break;
        }
    }
    Ok((z, recorder.finish()))
}

/// Number of distinct entries worth checking in a schedule.
fn schedule_len(schedule: &StepSchedule) -> usize {
    match &schedule.delta {
        super::Sequence::Constant(_) => 1,
        super::Sequence::Array(v) => v.len().max(1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{LinearMap, Space};
    use crate::solver::{fejer_check, Status};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    #[test]
    fn box_plus_identity_converges_to_origin() {
        let s = Space::euclidean(1);
        let a = ResolventOp::normal_cone_box(&s, &[-1.0], &[1.0]).unwrap();
        let b = LipschitzMap::identity(&s);
        let z0 = s.point(&[0.5]).unwrap();
        let schedule = StepSchedule::auto(0.5, 1.0, 1.0);
        let (z, trace) = tseng_solve(&a, &b, &z0, &schedule, &StopRule::default()).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert!(z.norm() <= 1e-7);
    }

    #[test]
    fn zero_problem_is_stationary() {
        let s = Space::euclidean(3);
        let z0 = s.point(&[1.0, -2.0, 3.0]).unwrap();
        let schedule = StepSchedule::auto(1.0, 1.0, 0.0);
        let (z, trace) = tseng_solve(
            &ResolventOp::zero(&s),
            &LipschitzMap::zero(&s),
            &z0,
            &schedule,
            &StopRule::default(),
        )
        .unwrap();
        assert_eq!(z, z0);
        assert_eq!(trace.iterations(), 1);
        assert_eq!(trace.final_residual(), 0.0);
    }

    #[test]
    fn rotation_plus_identity() {
        let s = Space::euclidean(2);
        let rot = LinearMap::endomorphism(&s, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]))
            .unwrap();
        let a = ResolventOp::linear(&LinearMap::identity(&s)).unwrap();
        let b = LipschitzMap::linear(&rot).unwrap();
        let z0 = s.point(&[3.0, -1.0]).unwrap();
        let schedule = StepSchedule::auto(0.5, 1.0, b.chi());
        let (z, trace) = tseng_solve(&a, &b, &z0, &schedule, &StopRule::default()).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert_abs_diff_eq!(z.as_slice(), &[0.0, 0.0][..], epsilon = 1e-7);
        assert!(fejer_check(&trace, &s.zero()).unwrap());
    }

    #[test]
    fn invalid_schedule_is_a_configuration_error() {
        let s = Space::euclidean(1);
        let schedule = StepSchedule::new(2.0, 1.0, 0.1);
        let err = tseng_solve(
            &ResolventOp::zero(&s),
            &LipschitzMap::identity(&s),
            &s.zero(),
            &schedule,
            &StopRule::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidSchedule(_)));
    }

    #[test]
    fn divergence_guard_trips_on_non_finite_values() {
        let s = Space::euclidean(1);
        let blowup = ResolventOp::from_fn(&s, "blow-up", |_, x| x.map_coords(|v| v * 1e200));
        let z0 = s.point(&[1.0]).unwrap();
        let schedule = StepSchedule::auto(1.0, 1.0, 0.0);
        let (z, trace) = tseng_solve(
            &blowup,
            &LipschitzMap::zero(&s),
            &z0,
            &schedule,
            &StopRule::default(),
        )
        .unwrap();
        assert_eq!(trace.status, Status::Diverged);
        assert!(z.is_finite());
    }
}
