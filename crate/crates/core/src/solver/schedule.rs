use crate::error::{Error, Result};

/// A step-parameter sequence. Arrays hold their last entry once exhausted.
#[derive(Clone, Debug, PartialEq)]
pub enum Sequence {
    Constant(f64),
    Array(Vec<f64>),
}

impl Sequence {
    pub fn at(&self, n: usize) -> f64 {
        match self {
            Sequence::Constant(v) => *v,
            Sequence::Array(values) => *values.get(n).or(values.last()).expect("nonempty array"),
        }
    }

    pub fn is_constant_one(&self) -> bool {
        match self {
            Sequence::Constant(v) => *v == 1.0,
            Sequence::Array(values) => values.iter().all(|&v| v == 1.0),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            Sequence::Constant(v) => std::slice::from_ref(v),
            Sequence::Array(values) => values,
        }
    }

    fn min(&self) -> f64 {
        self.values().iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn max(&self) -> f64 {
        self.values().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn check_nonempty(&self, what: &str) -> Result<()> {
        if self.values().is_empty() {
            return Err(Error::InvalidSchedule(format!("{what} sequence is empty")));
        }
        if self.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSchedule(format!("{what} sequence has non-finite entries")));
        }
        Ok(())
    }
}

impl From<f64> for Sequence {
    fn from(v: f64) -> Self {
        Sequence::Constant(v)
    }
}

/// Step sizes `δₙ`, relaxations `λₙ` and the margin `ε` bounding both.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSchedule {
    pub delta: Sequence,
    pub lambda: Sequence,
    pub epsilon: f64,
}

impl StepSchedule {
    pub fn new(delta: impl Into<Sequence>, lambda: impl Into<Sequence>, epsilon: f64) -> Self {
        Self {
            delta: delta.into(),
            lambda: lambda.into(),
            epsilon,
        }
    }

    /// Chooses the largest margin compatible with the given sequences for
    /// the lipschitz constant `eta`. Validation still happens in the solver.
    pub fn auto(delta: impl Into<Sequence>, lambda: impl Into<Sequence>, eta: f64) -> Self {
        let delta = delta.into();
        let lambda = lambda.into();
        let mut epsilon = delta.min().min(lambda.min());
        if eta > 0.0 {
            epsilon = epsilon.min(1.0 / eta - delta.max());
        }
        epsilon = epsilon.min(0.5 * epsilon_ceiling(eta));
        Self {
            delta,
            lambda,
            epsilon,
        }
    }

    pub fn delta_at(&self, n: usize) -> f64 {
        self.delta.at(n)
    }

    pub fn lambda_at(&self, n: usize) -> f64 {
        self.lambda.at(n)
    }

    /// Checks `ε ∈ ]0, max{1, 1/(2η)}[`, `δₙ ∈ [ε, 1/η − ε]` and
    /// `λₙ ∈ [ε, 1]` together. With `η = 0` the upper bound on `δₙ` is void.
    pub fn validate(&self, eta: f64) -> Result<()> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "lipschitz constant must be finite and nonnegative, got {eta}"
            )));
        }
        self.delta.check_nonempty("delta")?;
        self.lambda.check_nonempty("lambda")?;
        let ceiling = epsilon_ceiling(eta);
        let eps = self.epsilon;
        if !(eps > 0.0 && eps < ceiling) {
            return Err(Error::InvalidSchedule(format!(
                "epsilon = {eps} must lie in ]0, {ceiling}["
            )));
        }
        let upper = if eta > 0.0 { 1.0 / eta - eps } else { f64::INFINITY };
        if upper < eps {
            return Err(Error::InvalidSchedule(format!(
                "the step interval [{eps}, {upper}] is empty for eta = {eta}"
            )));
        }
        let (dmin, dmax) = (self.delta.min(), self.delta.max());
        if dmin < eps || dmax > upper {
            return Err(Error::InvalidSchedule(format!(
                "delta values in [{dmin}, {dmax}] leave [{eps}, {upper}]"
            )));
        }
        let (lmin, lmax) = (self.lambda.min(), self.lambda.max());
        if lmin < eps || lmax > 1.0 {
            return Err(Error::InvalidSchedule(format!(
                "lambda values in [{lmin}, {lmax}] leave [{eps}, 1]"
            )));
        }
        Ok(())
    }
}

fn epsilon_ceiling(eta: f64) -> f64 {
    if eta > 0.0 {
        f64::max(1.0, 1.0 / (2.0 * eta))
    } else {
        f64::INFINITY
    }
}

/// Validates a relaxation sequence on its own (`λₙ ∈ ]0, 1]`), for solvers
/// whose step size is fixed by `γ`.
pub(crate) fn validate_lambda(lambda: &Sequence) -> Result<()> {
    lambda.check_nonempty("lambda")?;
    let (lmin, lmax) = (lambda.min(), lambda.max());
    if !(lmin > 0.0 && lmax <= 1.0) {
        return Err(Error::InvalidSchedule(format!(
            "lambda values in [{lmin}, {lmax}] leave ]0, 1]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequences_hold_their_last_value() {
        let s = Sequence::Array(vec![0.5, 0.7]);
        assert_eq!(s.at(0), 0.5);
        assert_eq!(s.at(1), 0.7);
        assert_eq!(s.at(100), 0.7);
        assert_eq!(Sequence::Constant(0.3).at(9), 0.3);
    }

    #[test]
    fn validation_bounds() {
        assert!(StepSchedule::new(0.5, 1.0, 0.1).validate(1.0).is_ok());
        // δ above 1/η − ε
        assert!(StepSchedule::new(0.95, 1.0, 0.1).validate(1.0).is_err());
        // λ above 1
        assert!(StepSchedule::new(0.5, 1.2, 0.1).validate(1.0).is_err());
        // ε outside ]0, max{1, 1/(2η)}[
        assert!(StepSchedule::new(0.5, 1.0, 0.0).validate(1.0).is_err());
        assert!(StepSchedule::new(5.0, 1.0, 0.9).validate(0.01).is_ok());
        // η = 0 accepts any positive δ
        assert!(StepSchedule::new(1e6, 1.0, 0.5).validate(0.0).is_ok());
        assert!(StepSchedule::new(Sequence::Array(vec![]), 1.0, 0.5).validate(0.0).is_err());
    }

    #[test]
    fn inconsistent_margins_are_rejected() {
        // η = 2: ε < 1 is allowed by the first condition, but [ε, 1/2 − ε] is
        // empty once ε > 1/4
        let s = StepSchedule::new(0.25, 1.0, 0.3);
        assert!(matches!(s.validate(2.0), Err(Error::InvalidSchedule(_))));
    }

    #[test]
    fn auto_margin_validates() {
        for eta in [0.0, 0.1, 1.0, 3.0] {
            let delta = if eta > 0.0 { 0.9 / eta } else { 1.0 };
            let s = StepSchedule::auto(delta, 0.8, eta);
            s.validate(eta).unwrap();
        }
    }
}
