use nalgebra::{DMatrix, DVector};

use super::{ResolventOp, Structure};
use crate::error::{Error, Result};
use crate::hilbert::{solve_square, Point, Projector};

/// The partial inverse `(γA)_V` of a scaled operator, evaluated through
/// resolvents of `A` and the projector onto `V`.
#[derive(Clone, Debug)]
pub struct PartialInverseView {
    base: ResolventOp,
    projector: Projector,
    gamma: f64,
}

impl PartialInverseView {
    pub fn new(base: &ResolventOp, projector: &Projector, gamma: f64) -> Result<Self> {
        if projector.space() != base.space() {
            return Err(Error::SpaceMismatch("partial inverse subspace"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidProblem(format!("gamma must be positive, got {gamma}")));
        }
        if !base.supports_step(gamma) {
            return Err(Error::Unsupported(format!(
                "{} has no resolvent at step {gamma}",
                base.name()
            )));
        }
        Ok(Self {
            base: base.clone(),
            projector: projector.clone(),
            gamma,
        })
    }

    pub fn base(&self) -> &ResolventOp {
        &self.base
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `J_{(γA)_V} x = P_V J_{γA} x + P_{V⊥}(x − J_{γA} x)`.
    pub fn resolvent(&self, x: &Point) -> Result<Point> {
        if x.space() != self.base.space() {
            return Err(Error::SpaceMismatch("partial inverse resolvent"));
        }
        Ok(self.eval(x))
    }

    pub(crate) fn eval(&self, x: &Point) -> Point {
        let p = self.base.eval(self.gamma, x);
        let residual = x - &p;
        &self.projector.apply(&p) + &self.projector.apply_complement(&residual)
    }

    /// The same value written as `(x + R_{N_V} R_{γA} x)/2`.
    pub fn resolvent_by_reflections(&self, x: &Point) -> Result<Point> {
        let reflected = self.base.reflect(self.gamma, x)?;
        Ok((x + &self.projector.reflect(&reflected)).scale(0.5))
    }

    /// Solves the step-size-`delta` subproblem: find `(p, q)` with
    /// `w = p + γq` and `P_V q/δ + P_{V⊥} q ∈ A(P_V p + P_{V⊥} p/δ)`.
    ///
    /// For `δ = 1` this is `p = J_{γA} w`, `q = (w − p)/γ` for any `A`; other
    /// values of `δ` require an affine `A`, handled by one linear solve.
    pub fn step_pair(&self, delta: f64, w: &Point) -> Result<(Point, Point)> {
        if w.space() != self.base.space() {
            return Err(Error::SpaceMismatch("partial inverse step"));
        }
        if delta == 1.0 {
            let p = self.base.eval(self.gamma, w);
            let q = (w - &p).scale(1.0 / self.gamma);
            return Ok((p, q));
        }
        let (m, c) = match self.base.structure() {
            Structure::Zero => {
                let n = w.dim();
                (DMatrix::zeros(n, n), DVector::zeros(n))
            }
            Structure::Affine { matrix, shift } => (matrix.clone(), shift.clone()),
            _ => {
                return Err(Error::Unsupported(format!(
                    "step δ = {delta} ≠ 1 needs an affine operator, {} is not",
                    self.base.name()
                )))
            }
        };
        Ok(self.affine_step_pair(delta, &m, &c, w))
    }

    /// With `a = P p + P⊥ p/δ` and `b = M a + c`: `p = P a + δP⊥ a`,
    /// `q = δP b + P⊥ b`, so `[(P + δP⊥) + γ(δP + P⊥)M] a = w − γ(δP + P⊥)c`.
    fn affine_step_pair(
        &self,
        delta: f64,
        m: &DMatrix<f64>,
        c: &DVector<f64>,
        w: &Point,
    ) -> (Point, Point) {
        let n = w.dim();
        let p = self.projector.matrix();
        let q = DMatrix::identity(n, n) - p;
        let left = p + &q * delta;
        let right = p * delta + &q;
        let system = &left + (&right * m) * self.gamma;
        let rhs = w.coords() - (&right * c) * self.gamma;
        let a = solve_square(&system, &rhs);
        let b = m * &a + c;
        let space = w.space();
        (Point::raw(space, &left * &a), Point::raw(space, &right * &b))
    }
}

/// The partial sum `A ⊞_U B = (A_U + B_U)_U` as a resolvent operator.
///
/// Closed forms exist for `U = H` (the sum `A + B`) when one operand is zero
/// or both are affine, and for `U = {0}` (the parallel sum
/// `(A⁻¹ + B⁻¹)⁻¹`) when one operand is a singleton normal cone or both are
/// invertible affine maps. Everything else is a [`Error::NoClosedForm`].
pub fn partial_sum(a: &ResolventOp, b: &ResolventOp, u: &Projector) -> Result<ResolventOp> {
    if a.space() != b.space() || u.space() != a.space() {
        return Err(Error::SpaceMismatch("partial sum"));
    }
    let space = a.space();
    if u.is_identity() {
        if a.is_zero() {
            return Ok(b.clone());
        }
        if b.is_zero() {
            return Ok(a.clone());
        }
        if let (Some((ma, ca)), Some((mb, cb))) = (a.affine_parts(), b.affine_parts()) {
            return Ok(ResolventOp::affine_unchecked(space, ma + mb, ca + cb));
        }
        return Err(Error::NoClosedForm(format!(
            "sum of {} and {}; supply the resolvent of the sum directly",
            a.name(),
            b.name()
        )));
    }
    if u.is_zero() {
        // B = N_{c} has B⁻¹ ≡ c, and (A⁻¹ + c)⁻¹ = A(· − c)
        if let Structure::Singleton(c) = b.structure() {
            return a.shifted(&Point::raw(space, c.clone()));
        }
        if let Structure::Singleton(c) = a.structure() {
            return b.shifted(&Point::raw(space, c.clone()));
        }
        if let (Some((ma, ca)), Some((mb, cb))) = (a.affine_parts(), b.affine_parts()) {
            let inverses = (ma.clone().try_inverse(), mb.clone().try_inverse());
            if let (Some(ia), Some(ib)) = inverses {
                // A⁻¹ y + B⁻¹ y = (Ma⁻¹ + Mb⁻¹) y − (Ma⁻¹ ca + Mb⁻¹ cb)
                let n = &ia + &ib;
                let d = -(&ia * ca + &ib * cb);
                if let Some(ninv) = n.try_inverse() {
                    let shift = -(&ninv * d);
                    return Ok(ResolventOp::affine_unchecked(space, ninv, shift));
                }
            }
        }
        return Err(Error::NoClosedForm(format!(
            "parallel sum of {} and {}",
            a.name(),
            b.name()
        )));
    }
    Err(Error::NoClosedForm(
        "partial sums with a proper nontrivial subspace are only reachable through the primal-dual solver"
            .into(),
    ))
}

/// `J_{γ(A ⊞_U B)} x`; see [`partial_sum`] for the supported cases.
pub fn partial_sum_resolvent(
    a: &ResolventOp,
    b: &ResolventOp,
    u: &Projector,
    gamma: f64,
    x: &Point,
) -> Result<Point> {
    partial_sum(a, b, u)?.resolvent(gamma, x)
}
