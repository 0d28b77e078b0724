//! Monotone inclusion solvers built on the forward–partial inverse–forward
//! splitting: relaxed Tseng iterations, problems with a subspace
//! constraint, sums of several operators, composite primal–dual inclusions
//! and zero-sum games.

pub mod error;
pub mod fpif;
pub mod games;
pub mod hilbert;
pub mod operators;
pub mod primal_dual;
pub mod solver;
pub mod sum_m;

pub use error::{Error, Result};
pub use hilbert::{LinearMap, Point, Projector, Space};
pub use operators::{LipschitzMap, ResolventOp};
