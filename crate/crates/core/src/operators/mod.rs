//! Maximally monotone operators represented by their resolvents, and
//! single-valued lipschitzian monotone maps.

mod lipschitz;
mod partial;
mod probe;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

pub use lipschitz::{partial_inverse_apply_singlevalued, LipschitzMap, SingleValuedCertificate};
pub use partial::{partial_sum, partial_sum_resolvent, PartialInverseView};
pub use probe::{probe, probe_lipschitz, probe_monotone, sample_ball, ProbeConfig, ProbeReport};

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{solve_square, LinearMap, Point, Projector, Space};

/// Tolerance for the symmetric-part eigenvalue test used to accept linear
/// operators as monotone.
pub const MONOTONE_TOL: f64 = 1e-10;

type ResolventFn = dyn Fn(f64, &Point) -> Point + Send + Sync;

/// What is known about an operator beyond its resolvent. Used by routines
/// that have closed forms only for particular operator families.
#[derive(Clone, Debug, PartialEq)]
pub enum Structure {
    /// `A ≡ 0`.
    Zero,
    /// `A = N_{{c}}`: the resolvent is the constant `c`.
    Singleton(DVector<f64>),
    /// Single-valued `A x = M x + c` with `M` monotone in the space metric.
    Affine {
        matrix: DMatrix<f64>,
        shift: DVector<f64>,
    },
    General,
}

/// A maximally monotone operator `A`, known through `(γ, x) ↦ J_{γA} x`.
#[derive(Clone)]
pub struct ResolventOp {
    space: Space,
    name: String,
    structure: Structure,
    resolvent: Arc<ResolventFn>,
    /// Some resolvents (partial inverses of nonlinear operators) are only
    /// available for the unit step.
    unit_step_only: bool,
}

impl fmt::Debug for ResolventOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ResolventOp")
            .field("name", &self.name)
            .field("space", &self.space)
            .field("structure", &self.structure)
            .finish()
    }
}

impl ResolventOp {
    /// Wraps an arbitrary resolvent map. The caller is responsible for it
    /// being the resolvent of a maximally monotone operator.
    pub fn from_fn<F>(space: &Space, name: impl Into<String>, resolvent: F) -> Self
    where
        F: Fn(f64, &Point) -> Point + Send + Sync + 'static,
    {
        Self {
            space: space.clone(),
            name: name.into(),
            structure: Structure::General,
            resolvent: Arc::new(resolvent),
            unit_step_only: false,
        }
    }

    fn with_structure(mut self, structure: Structure) -> Self {
        self.structure = structure;
        self
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn is_zero(&self) -> bool {
        self.structure == Structure::Zero
    }

    /// `(M, c)` when the operator is affine.
    pub fn affine_parts(&self) -> Option<(&DMatrix<f64>, &DVector<f64>)> {
        match &self.structure {
            Structure::Affine { matrix, shift } => Some((matrix, shift)),
            _ => None,
        }
    }

    pub fn supports_step(&self, gamma: f64) -> bool {
        !self.unit_step_only || gamma == 1.0
    }

    /// `J_{γA} x`.
    pub fn resolvent(&self, gamma: f64, x: &Point) -> Result<Point> {
        if x.space() != &self.space {
            return Err(Error::SpaceMismatch("resolvent"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "resolvent step must be positive, got {gamma}"
            )));
        }
        if !self.supports_step(gamma) {
            return Err(Error::Unsupported(format!(
                "{} only has a resolvent for step 1, requested {gamma}",
                self.name
            )));
        }
        Ok(self.eval(gamma, x))
    }

    /// `J_{γA} x` without validation; solvers check once up front.
    pub(crate) fn eval(&self, gamma: f64, x: &Point) -> Point {
        (self.resolvent)(gamma, x)
    }

    /// `R_{γA} x = 2 J_{γA} x − x`.
    pub fn reflect(&self, gamma: f64, x: &Point) -> Result<Point> {
        Ok(self.resolvent(gamma, x)?.scale(2.0) - x.clone())
    }

    /// The operator `0`.
    pub fn zero(space: &Space) -> Self {
        Self::from_fn(space, "zero", |_, x| x.clone()).with_structure(Structure::Zero)
    }

    /// `N_C` for the box `C = {x : lower ≤ x ≤ upper}`; infinite bounds are allowed.
    pub fn normal_cone_box(space: &Space, lower: &[f64], upper: &[f64]) -> Result<Self> {
        check_dim("box lower bounds", space.dim(), lower.len())?;
        check_dim("box upper bounds", space.dim(), upper.len())?;
        for (l, u) in lower.iter().zip(upper) {
            if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                return Err(Error::InvalidProblem(format!("empty box side [{l}, {u}]")));
            }
        }
        let lower = lower.to_vec();
        let upper = upper.to_vec();
        let sp = space.clone();
        Ok(Self::from_fn(space, "box normal cone", move |_, x| {
            let c = DVector::from_iterator(
                sp.dim(),
                x.coords().iter().enumerate().map(|(i, v)| v.clamp(lower[i], upper[i])),
            );
            Point::raw(&sp, c)
        }))
    }

    /// `N_C` for the nonnegative orthant.
    pub fn normal_cone_orthant(space: &Space) -> Self {
        let n = space.dim();
        Self::normal_cone_box(space, &vec![0.0; n], &vec![f64::INFINITY; n]).expect("valid box")
    }

    /// `N_C` for the half-space `C = {x : ⟨a, x⟩ ≤ beta}`.
    pub fn normal_cone_halfspace(normal: &Point, beta: f64) -> Result<Self> {
        let nn = normal.inner(normal);
        if nn == 0.0 {
            return Err(Error::InvalidProblem("half-space normal must be nonzero".into()));
        }
        let a = normal.clone();
        Ok(Self::from_fn(normal.space(), "half-space normal cone", move |_, x| {
            let excess = a.inner(x) - beta;
            if excess > 0.0 {
                x.axpy(-excess / nn, &a)
            } else {
                x.clone()
            }
        }))
    }

    /// `N_C` for the affine set `C = {x : L x = b}`, whose projection is
    /// `x − L†(Lx − b)`.
    pub fn normal_cone_affine(l: &LinearMap, b: &Point) -> Result<Self> {
        if b.space() != l.codomain() {
            return Err(Error::SpaceMismatch("affine constraint right-hand side"));
        }
        let pinv = l.pseudoinverse();
        let reach = l.apply_unchecked(&pinv.apply_unchecked(b));
        if reach.distance(b) > 1e-9 * b.norm().max(1.0) {
            return Err(Error::InvalidProblem("affine constraint set is empty".into()));
        }
        let space = l.domain().clone();
        let l = l.clone();
        let b = b.clone();
        Ok(Self::from_fn(&space, "affine normal cone", move |_, x| {
            let misfit = &l.apply_unchecked(x) - &b;
            x - &pinv.apply_unchecked(&misfit)
        }))
    }

    /// `N_{{c}}`.
    pub fn normal_cone_point(c: &Point) -> Self {
        let c0 = c.clone();
        Self::from_fn(c.space(), "point normal cone", move |_, _| c0.clone())
            .with_structure(Structure::Singleton(c.coords().clone()))
    }

    /// `∂(κ‖·‖₁)` where `‖x‖₁ = Σ |xᵢ|`. In a weighted space the resolvent
    /// soft-thresholds coordinate `i` at `γκ/wᵢ`.
    pub fn l1(space: &Space, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidProblem(format!("l1 weight must be nonnegative, got {kappa}")));
        }
        let sp = space.clone();
        Ok(Self::from_fn(space, "l1 subdifferential", move |gamma, x| {
            let w = sp.weights();
            let c = DVector::from_iterator(
                sp.dim(),
                x.coords().iter().enumerate().map(|(i, v)| {
                    let t = gamma * kappa / w[i];
                    v.signum() * (v.abs() - t).max(0.0)
                }),
            );
            Point::raw(&sp, c)
        }))
    }

    /// The monotone affine operator `x ↦ M x + c`. Rejects `M` whose
    /// symmetric part (in the space metric) has an eigenvalue below
    /// `−MONOTONE_TOL`.
    pub fn affine(m: &LinearMap, shift: &Point) -> Result<Self> {
        if m.domain() != m.codomain() {
            return Err(Error::SpaceMismatch("affine operator must be square"));
        }
        if shift.space() != m.domain() {
            return Err(Error::SpaceMismatch("affine operator shift"));
        }
        let modulus = m.monotonicity_modulus()?;
        if modulus < -MONOTONE_TOL {
            return Err(Error::NotMonotone(format!(
                "symmetric part has eigenvalue {modulus:e}"
            )));
        }
        Ok(Self::affine_unchecked(m.domain(), m.matrix().clone(), shift.coords().clone()))
    }

    /// `x ↦ M x`.
    pub fn linear(m: &LinearMap) -> Result<Self> {
        Self::affine(m, &m.domain().zero())
    }

    /// `∂(½⟨x, Qx⟩ + ⟨c, x⟩)` for a self-adjoint positive semidefinite `Q`.
    pub fn quadratic(q: &LinearMap, linear_term: &Point) -> Result<Self> {
        let adj = q.adjoint();
        if (adj.matrix() - q.matrix()).amax() > 1e-10 * q.matrix().amax().max(1.0) {
            return Err(Error::InvalidProblem("quadratic form must be self-adjoint".into()));
        }
        Self::affine(q, linear_term)
    }

    pub(crate) fn affine_unchecked(space: &Space, matrix: DMatrix<f64>, shift: DVector<f64>) -> Self {
        if shift.iter().all(|&v| v == 0.0) && matrix.iter().all(|&v| v == 0.0) {
            return Self::zero(space);
        }
        let sp = space.clone();
        let m = matrix.clone();
        let c = shift.clone();
        let n = space.dim();
        Self::from_fn(space, "affine", move |gamma, x| {
            let system = DMatrix::identity(n, n) + &m * gamma;
            let rhs = x.coords() - &c * gamma;
            Point::raw(&sp, solve_square(&system, &rhs))
        })
        .with_structure(Structure::Affine { matrix, shift })
    }

    /// `x ↦ A(x − e)`, with resolvent `e + J_{γA}(x − e)`.
    pub fn shifted(&self, e: &Point) -> Result<Self> {
        if e.space() != &self.space {
            return Err(Error::SpaceMismatch("shift"));
        }
        let structure = match &self.structure {
            Structure::Zero => return Ok(self.clone()),
            Structure::Singleton(c) => Structure::Singleton(c + e.coords()),
            Structure::Affine { matrix, shift } => {
                return Ok(Self::affine_unchecked(
                    &self.space,
                    matrix.clone(),
                    shift - matrix * e.coords(),
                ))
            }
            Structure::General => Structure::General,
        };
        let base = self.clone();
        let e = e.clone();
        let mut out = Self::from_fn(&self.space, format!("{} shifted", self.name), move |g, x| {
            &base.eval(g, &(x - &e)) + &e
        })
        .with_structure(structure);
        out.unit_step_only = self.unit_step_only;
        Ok(out)
    }

    /// `αA` for `α > 0`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidProblem(format!("scale must be positive, got {alpha}")));
        }
        if self.unit_step_only && alpha != 1.0 {
            return Err(Error::Unsupported(format!(
                "{} has no resolvent at step {alpha}",
                self.name
            )));
        }
        match &self.structure {
            Structure::Zero | Structure::Singleton(_) => return Ok(self.clone()),
            Structure::Affine { matrix, shift } => {
                return Ok(Self::affine_unchecked(&self.space, matrix * alpha, shift * alpha))
            }
            Structure::General => {}
        }
        let base = self.clone();
        Ok(Self::from_fn(&self.space, format!("{alpha}·{}", self.name), move |g, x| {
            base.eval(g * alpha, x)
        }))
    }

    /// `A + Id`, via `J_{γ(A+Id)} x = J_{γ/(1+γ) A}(x/(1+γ))`.
    pub fn plus_identity(&self) -> Result<Self> {
        if self.unit_step_only {
            return Err(Error::Unsupported(format!(
                "{} has no resolvent at the steps needed for A + Id",
                self.name
            )));
        }
        let n = self.space.dim();
        match &self.structure {
            Structure::Zero => {
                return Ok(Self::affine_unchecked(
                    &self.space,
                    DMatrix::identity(n, n),
                    DVector::zeros(n),
                ))
            }
            Structure::Affine { matrix, shift } => {
                return Ok(Self::affine_unchecked(
                    &self.space,
                    matrix + DMatrix::identity(n, n),
                    shift.clone(),
                ))
            }
            _ => {}
        }
        let base = self.clone();
        Ok(Self::from_fn(&self.space, format!("{} + Id", self.name), move |g, x| {
            base.eval(g / (1.0 + g), &x.scale(1.0 / (1.0 + g)))
        })
        .with_structure(match &self.structure {
            Structure::Singleton(c) => Structure::Singleton(c.clone()),
            _ => Structure::General,
        }))
    }

    /// `A⁻¹`, via Moreau's decomposition `J_{γA⁻¹} x = x − γ J_{A/γ}(x/γ)`.
    pub fn inverse(&self) -> Result<Self> {
        if self.unit_step_only {
            return Err(Error::Unsupported(format!(
                "{} has no resolvent at the steps needed for its inverse",
                self.name
            )));
        }
        let n = self.space.dim();
        match &self.structure {
            Structure::Zero => return Ok(Self::normal_cone_point(&self.space.zero())),
            Structure::Singleton(c) => {
                return Ok(Self::affine_unchecked(&self.space, DMatrix::zeros(n, n), c.clone()))
            }
            Structure::Affine { matrix, shift } if matrix.iter().all(|&v| v == 0.0) => {
                return Ok(Self::normal_cone_point(&Point::raw(&self.space, shift.clone())))
            }
            Structure::Affine { matrix, shift } => {
                if let Some(inv) = well_conditioned_inverse(matrix) {
                    let c = -(&inv * shift);
                    return Ok(Self::affine_unchecked(&self.space, inv, c));
                }
            }
            Structure::General => {}
        }
        let base = self.clone();
        Ok(Self::from_fn(&self.space, format!("({})⁻¹", self.name), move |g, x| {
            x - &base.eval(1.0 / g, &x.scale(1.0 / g)).scale(g)
        }))
    }

    /// The partial inverse `A_W` of this operator with respect to the range
    /// of `projector`, as a resolvent operator.
    ///
    /// The resolvent is exact for every step when `W = H`, `W = {0}` or `A`
    /// is affine; otherwise only `J_{A_W}` (step 1) is available.
    pub fn partial_inverse(&self, projector: &Projector) -> Result<Self> {
        if projector.space() != &self.space {
            return Err(Error::SpaceMismatch("partial inverse subspace"));
        }
        if projector.is_identity() {
            return Ok(self.clone());
        }
        if projector.is_zero() {
            return self.inverse();
        }
        if let Structure::Affine { matrix, shift } = &self.structure {
            return Ok(affine_partial_inverse(&self.space, projector, matrix, shift));
        }
        let view = PartialInverseView::new(self, projector, 1.0)?;
        let mut out = Self::from_fn(&self.space, format!("({})_W", self.name), move |_, x| {
            view.eval(x)
        });
        out.unit_step_only = true;
        Ok(out)
    }
}

/// Inverse of `m` if its condition number is moderate.
fn well_conditioned_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let sv = m.singular_values();
    if sv.min() <= 1e-10 * sv.max() {
        return None;
    }
    m.clone().try_inverse()
}

/// Partial inverse of `x ↦ M x + c` with respect to `W`.
///
/// `y ∈ A_W x` iff `P y + P⊥ x = M(P x + P⊥ y) + c`. Writing
/// `a = P x + P⊥ y`, the resolvent equation `w = x + γy` becomes
/// `[(P + γP⊥) + (γP + P⊥) M] a = w − (γP + P⊥) c` and `x = P a + P⊥(M a + c)`.
fn affine_partial_inverse(
    space: &Space,
    projector: &Projector,
    m: &DMatrix<f64>,
    c: &DVector<f64>,
) -> ResolventOp {
    let n = space.dim();
    let p = projector.matrix().clone();
    let q = DMatrix::identity(n, n) - &p;
    let sp = space.clone();
    let (m0, c0) = (m.clone(), c.clone());
    let (p0, q0) = (p.clone(), q.clone());
    let op = ResolventOp::from_fn(space, "affine partial inverse", move |gamma, w| {
        let left = &p0 + &q0 * gamma;
        let right = &p0 * gamma + &q0;
        let system = &left + &right * &m0;
        let rhs = w.coords() - &right * &c0;
        let a = solve_square(&system, &rhs);
        let x = &p0 * &a + &q0 * (&m0 * &a + &c0);
        Point::raw(&sp, x)
    });
    // Single-valued when P − M P⊥ is invertible: y = (P − M P⊥)⁻¹((M P − P⊥) x + c).
    match well_conditioned_inverse(&(&p - m * &q)) {
        Some(inv) => {
            let matrix = &inv * (m * &p - &q);
            let shift = &inv * c;
            op.with_structure(Structure::Affine { matrix, shift })
        }
        None => op,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar(v: f64) -> Point {
        Space::euclidean(1).point(&[v]).unwrap()
    }

    fn bisection_prox_abs(x: f64, gamma: f64) -> f64 {
        // 0 ∈ p − x + γ∂|p|: the map p ↦ p − x + γ sign(p) is increasing
        let (mut lo, mut hi) = (-1e3, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let g = mid - x + gamma * mid.signum();
            if g > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn catalog_examples() {
        let s = Space::euclidean(1);
        let boxed = ResolventOp::normal_cone_box(&s, &[0.0], &[1.0]).unwrap();
        for g in [0.1, 1.0, 7.0] {
            assert_eq!(boxed.resolvent(g, &scalar(2.0)).unwrap().as_slice(), &[1.0]);
        }
        let abs = ResolventOp::l1(&s, 1.0).unwrap();
        let j = abs.resolvent(1.0, &scalar(3.0)).unwrap()[0];
        assert_abs_diff_eq!(j, bisection_prox_abs(3.0, 1.0), epsilon = 1e-9);
        assert_abs_diff_eq!(j, 2.0, epsilon = 1e-15);
        let id = ResolventOp::linear(&LinearMap::identity(&s)).unwrap();
        assert_abs_diff_eq!(id.resolvent(1.0, &scalar(4.0)).unwrap()[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn reflection_examples() {
        let s = Space::euclidean(2);
        let x = s.point(&[1.5, -2.0]).unwrap();
        assert_eq!(ResolventOp::zero(&s).reflect(0.3, &x).unwrap(), x);
        let origin = ResolventOp::normal_cone_point(&s.zero());
        assert_eq!(origin.reflect(0.3, &x).unwrap(), -&x);
        let half_line = ResolventOp::normal_cone_orthant(&Space::euclidean(1));
        assert_eq!(half_line.reflect(1.0, &scalar(-3.0)).unwrap().as_slice(), &[3.0]);
    }

    #[test]
    fn rejects_non_monotone_linear_maps() {
        let s = Space::euclidean(2);
        let m = LinearMap::endomorphism(&s, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.1]))
            .unwrap();
        assert!(matches!(ResolventOp::linear(&m), Err(Error::NotMonotone(_))));
        let skew = LinearMap::endomorphism(&s, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]))
            .unwrap();
        assert!(ResolventOp::linear(&skew).is_ok());
    }

    #[test]
    fn box_rejects_empty_sides() {
        let s = Space::euclidean(2);
        assert!(ResolventOp::normal_cone_box(&s, &[0.0, 2.0], &[1.0, 1.0]).is_err());
        assert!(ResolventOp::normal_cone_box(&s, &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn halfspace_and_affine_sets_project() {
        let s = Space::euclidean(2);
        let a = s.point(&[1.0, 1.0]).unwrap();
        let half = ResolventOp::normal_cone_halfspace(&a, 1.0).unwrap();
        let p = half.resolvent(1.0, &s.point(&[2.0, 2.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(p.as_slice(), &[0.5, 0.5][..], epsilon = 1e-15);
        let inside = s.point(&[-3.0, 0.5]).unwrap();
        assert_eq!(half.resolvent(1.0, &inside).unwrap(), inside);

        let row = LinearMap::new(&s, &Space::euclidean(1), DMatrix::from_row_slice(1, 2, &[1.0, 1.0]))
            .unwrap();
        let line = ResolventOp::normal_cone_affine(&row, &scalar(1.0)).unwrap();
        let p = line.resolvent(2.0, &s.point(&[2.0, 2.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(p.as_slice(), &[0.5, 0.5][..], epsilon = 1e-14);
    }

    #[test]
    fn inverse_follows_moreau() {
        let s = Space::euclidean(3);
        let boxed = ResolventOp::normal_cone_box(&s, &[-1.0; 3], &[1.0; 3]).unwrap();
        let inv = boxed.inverse().unwrap();
        let x = s.point(&[2.0, 0.3, -4.0]).unwrap();
        for g in [0.5, 1.0, 3.0] {
            let sum = &boxed.resolvent(g, &x).unwrap() + &inv.resolvent(1.0 / g, &x.scale(1.0 / g)).unwrap().scale(g);
            assert_abs_diff_eq!(sum.as_slice(), x.as_slice(), epsilon = 1e-14);
        }
        // the inverse of N_{0} is the zero map
        let origin = ResolventOp::normal_cone_point(&s.zero());
        assert!(origin.inverse().unwrap().is_zero());
    }

    #[test]
    fn shifted_and_scaled() {
        let s = Space::euclidean(1);
        let abs = ResolventOp::l1(&s, 1.0).unwrap();
        let shifted = abs.shifted(&scalar(1.0)).unwrap();
        // ∂|· − 1| at step 1: prox centred at 1
        assert_abs_diff_eq!(shifted.resolvent(1.0, &scalar(3.0)).unwrap()[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(shifted.resolvent(1.0, &scalar(1.5)).unwrap()[0], 1.0, epsilon = 1e-15);
        let double = abs.scaled(2.0).unwrap();
        assert_abs_diff_eq!(double.resolvent(1.0, &scalar(3.0)).unwrap()[0], 1.0, epsilon = 1e-15);
        let plus = abs.plus_identity().unwrap();
        // 3 ∈ p + p + ∂|p| → p = 1
        assert_abs_diff_eq!(plus.resolvent(1.0, &scalar(3.0)).unwrap()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn partial_inverse_extremes() {
        let s = Space::euclidean(2);
        let abs = ResolventOp::l1(&s, 1.0).unwrap();
        let x = s.point(&[3.0, -0.2]).unwrap();
        let full = abs.partial_inverse(&Projector::identity(&s)).unwrap();
        assert_eq!(full.resolvent(0.7, &x).unwrap(), abs.resolvent(0.7, &x).unwrap());
        let none = abs.partial_inverse(&Projector::zero(&s)).unwrap();
        let expect = abs.inverse().unwrap().resolvent(0.7, &x).unwrap();
        assert_eq!(none.resolvent(0.7, &x).unwrap(), expect);
        let axis = Projector::from_basis(&s, &[s.basis_vector(0)]).unwrap();
        let general = abs.partial_inverse(&axis).unwrap();
        assert!(general.supports_step(1.0));
        assert!(matches!(general.resolvent(0.5, &x), Err(Error::Unsupported(_))));
    }

    #[test]
    fn affine_partial_inverse_agrees_with_view_at_unit_step() {
        let s = Space::euclidean(3);
        let m = LinearMap::endomorphism(
            &s,
            DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, -1.0, 1.0, 0.5, 0.0, -0.5, 3.0]),
        )
        .unwrap();
        let c = s.point(&[0.1, -0.2, 0.3]).unwrap();
        let a = ResolventOp::affine(&m, &c).unwrap();
        let v = Projector::from_basis(&s, &[s.point(&[1.0, 2.0, -1.0]).unwrap()]).unwrap();
        let pinv = a.partial_inverse(&v).unwrap();
        let view = PartialInverseView::new(&a, &v, 1.0).unwrap();
        let x = s.point(&[0.4, -1.0, 2.5]).unwrap();
        let lhs = pinv.resolvent(1.0, &x).unwrap();
        let rhs = view.resolvent(&x).unwrap();
        assert_abs_diff_eq!(lhs.as_slice(), rhs.as_slice(), epsilon = 1e-12);
        // the affine structure reproduces the defining relation
        let (mm, cc) = pinv.affine_parts().expect("single-valued here");
        let y = mm * x.coords() + cc;
        let p = v.matrix();
        let q = DMatrix::identity(3, 3) - p;
        let lhs = p * &y + &q * x.coords();
        let rhs = m.matrix() * (p * x.coords() + &q * &y) + c.coords();
        assert_abs_diff_eq!(lhs.as_slice(), rhs.as_slice(), epsilon = 1e-12);
    }
}
