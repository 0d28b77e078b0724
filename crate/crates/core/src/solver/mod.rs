//! Iteration control shared by all solvers, and the relaxed Tseng method.

mod schedule;
mod trace;
mod tseng;

pub use schedule::{Sequence, StepSchedule};
pub use trace::{fejer_check, fejer_check_tol, SolveTrace, Snapshots, Status, StopRule};
pub use tseng::tseng_solve;

pub(crate) use schedule::validate_lambda;
pub(crate) use trace::{snapshot_deviation, Control, Recorder, StepRecord};
