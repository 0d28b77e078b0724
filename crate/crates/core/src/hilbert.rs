//! Finite-dimensional real Hilbert spaces with diagonal metrics.
//!
//! A [`Space`] is `ℝⁿ` equipped with `⟨x, y⟩ = Σ wᵢ xᵢ yᵢ`. Every metric
//! dependent computation (projections, adjoints, pseudoinverses) is carried
//! out in "Euclidean coordinates" `x ↦ W^{1/2} x` and mapped back, so the
//! weighted and unweighted cases share one code path.

use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{check_dim, Error, Result};

/// Singular values at or below `RANK_CUTOFF * σ_max` count as zero.
pub const RANK_CUTOFF: f64 = 1e-12;

#[derive(Clone)]
pub struct Space {
    weights: Arc<[f64]>,
}

impl Space {
    /// Standard `ℝⁿ`.
    ///
    /// Panics if `dim == 0`.
    pub fn euclidean(dim: usize) -> Self {
        assert!(dim >= 1, "a space needs at least one dimension");
        Self {
            weights: vec![1.0; dim].into(),
        }
    }

    pub fn weighted(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSpace("a space needs at least one dimension".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidSpace(format!(
                "metric weights must be finite and strictly positive, got {w}"
            )));
        }
        Ok(Self {
            weights: weights.into(),
        })
    }

    /// Direct sum `H₁ ⊕ … ⊕ H_k` with the metrics concatenated.
    pub fn direct_sum(spaces: &[Space]) -> Self {
        Self::weighted_sum(spaces, &vec![1.0; spaces.len()])
    }

    /// Direct sum with block `i` scaled by `omegas[i]`, i.e.
    /// `⟨x, y⟩ = Σ ωᵢ ⟨xᵢ, yᵢ⟩`.
    pub fn weighted_sum(spaces: &[Space], omegas: &[f64]) -> Self {
        assert_eq!(spaces.len(), omegas.len());
        assert!(!spaces.is_empty());
        let weights: Vec<f64> = spaces
            .iter()
            .zip(omegas)
            .flat_map(|(s, &o)| s.weights.iter().map(move |w| w * o))
            .collect();
        Self::weighted(weights).expect("positive block weights")
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_euclidean(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.weights
            .iter()
            .zip(x.iter().zip(y.iter()))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x).sqrt()
    }

    pub fn zero(&self) -> Point {
        Point::raw(self, DVector::zeros(self.dim()))
    }

    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        Point::new(self, DVector::from_column_slice(coords))
    }

    pub fn basis_vector(&self, i: usize) -> Point {
        let mut v = DVector::zeros(self.dim());
        v[i] = 1.0;
        Point::raw(self, v)
    }

    /// `W^{1/2}` as a diagonal vector.
    pub(crate) fn sqrt_weights(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.weights.iter().map(|w| w.sqrt()))
    }

    /// `W^{-1/2} M W^{1/2}`, turning an operator in Euclidean coordinates into
    /// one on this space.
    pub(crate) fn from_euclidean(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let s = self.sqrt_weights();
        let inv = s.map(|v| 1.0 / v);
        conjugate(m, &inv, &inv)
    }
}

/// `diag(left) · m · diag(right)⁻¹`.
fn conjugate(m: &DMatrix<f64>, left: &DVector<f64>, right: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| left[i] * m[(i, j)] / right[j])
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.weights, &other.weights) || self.weights[..] == other.weights[..]
    }
}

impl fmt::Debug for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_euclidean() {
            write!(f, "Space(R^{})", self.dim())
        } else {
            write!(f, "Space(R^{}, weights={:?})", self.dim(), &self.weights[..])
        }
    }
}

/// An element of a [`Space`].
#[derive(Clone, Debug)]
pub struct Point {
    space: Space,
    coords: DVector<f64>,
}

impl Point {
    pub fn new(space: &Space, coords: DVector<f64>) -> Result<Self> {
        check_dim("point", space.dim(), coords.len())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(Self::raw(space, coords))
    }

    /// Builds a point without validating finiteness; iterates may leave the
    /// finite range and are caught by the solvers' divergence guard instead.
    pub(crate) fn raw(space: &Space, coords: DVector<f64>) -> Self {
        debug_assert_eq!(space.dim(), coords.len());
        Self {
            space: space.clone(),
            coords,
        }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }

    pub fn inner(&self, other: &Point) -> f64 {
        self.assert_compatible(other);
        self.space.inner(&self.coords, &other.coords)
    }

    pub fn norm(&self) -> f64 {
        self.space.norm(&self.coords)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    /// Largest absolute coordinate.
    pub fn max_abs(&self) -> f64 {
        self.coords.amax()
    }

    pub fn scale(&self, a: f64) -> Point {
        Point::raw(&self.space, &self.coords * a)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Point) -> Point {
        self.assert_compatible(other);
        Point::raw(&self.space, &self.coords + &other.coords * a)
    }

    pub fn map_coords(&self, f: impl Fn(f64) -> f64) -> Point {
        Point::raw(&self.space, self.coords.map(f))
    }

    /// Stacks points into an element of `space`, which must be the direct
    /// sum (possibly block-weighted) of the points' spaces.
    pub fn concat(space: &Space, parts: &[&Point]) -> Point {
        let total: usize = parts.iter().map(|p| p.dim()).sum();
        assert_eq!(total, space.dim(), "concatenated length must match the product space");
        let coords =
            DVector::from_iterator(total, parts.iter().flat_map(|p| p.coords.iter().copied()));
        Point::raw(space, coords)
    }

    /// Inverse of [`Point::concat`].
    pub fn split(&self, spaces: &[Space]) -> Vec<Point> {
        let mut offset = 0;
        spaces
            .iter()
            .map(|s| {
                let part = self.coords.rows(offset, s.dim()).into_owned();
                offset += s.dim();
                Point::raw(s, part)
            })
            .collect()
    }

    fn assert_compatible(&self, other: &Point) {
        assert_eq!(self.dim(), other.dim(), "point dimensions differ");
        debug_assert!(self.space == other.space, "points live in different spaces");
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.coords == other.coords
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

impl<'a> Add<&'a Point> for &'a Point {
    type Output = Point;
    fn add(self, rhs: &'a Point) -> Point {
        self.assert_compatible(rhs);
        Point::raw(&self.space, &self.coords + &rhs.coords)
    }
}

impl<'a> Sub<&'a Point> for &'a Point {
    type Output = Point;
    fn sub(self, rhs: &'a Point) -> Point {
        self.assert_compatible(rhs);
        Point::raw(&self.space, &self.coords - &rhs.coords)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        &self + &rhs
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        &self - &rhs
    }
}

impl Mul<f64> for &Point {
    type Output = Point;
    fn mul(self, a: f64) -> Point {
        self.scale(a)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, a: f64) -> Point {
        self.scale(a)
    }
}

impl Neg for &Point {
    type Output = Point;
    fn neg(self) -> Point {
        self.scale(-1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ProjectorKind {
    Identity,
    Zero,
    General,
}

/// Orthogonal projector `P_V` onto a closed subspace `V`.
///
/// Identity and zero projectors are applied without a matrix product so that
/// `P_H x = x` and `P_{0} x = 0` hold bit for bit.
#[derive(Clone, Debug)]
pub struct Projector {
    space: Space,
    matrix: DMatrix<f64>,
    kind: ProjectorKind,
}

impl Projector {
    pub fn identity(space: &Space) -> Self {
        Self {
            space: space.clone(),
            matrix: DMatrix::identity(space.dim(), space.dim()),
            kind: ProjectorKind::Identity,
        }
    }

    pub fn zero(space: &Space) -> Self {
        Self {
            space: space.clone(),
            matrix: DMatrix::zeros(space.dim(), space.dim()),
            kind: ProjectorKind::Zero,
        }
    }

    /// Wraps an explicit matrix, validating idempotence and self-adjointness
    /// in the space's metric.
    pub fn from_matrix(space: &Space, matrix: DMatrix<f64>) -> Result<Self> {
        check_dim("projector rows", space.dim(), matrix.nrows())?;
        check_dim("projector columns", space.dim(), matrix.ncols())?;
        let p = Self::classified(space, matrix);
        let tol = 1e-10 * space.dim() as f64;
        if p.idempotence_defect() > tol {
            return Err(Error::InvalidProblem(format!(
                "matrix is not idempotent (‖P² − P‖ = {:e})",
                p.idempotence_defect()
            )));
        }
        if p.self_adjoint_defect() > tol {
            return Err(Error::InvalidProblem(format!(
                "matrix is not self-adjoint in the space metric (defect {:e})",
                p.self_adjoint_defect()
            )));
        }
        Ok(p)
    }

    /// Orthogonal projector onto `span(basis)`. Rank-deficient and empty
    /// bases are accepted.
    pub fn from_basis(space: &Space, basis: &[Point]) -> Result<Self> {
        if basis.is_empty() {
            return Ok(Self::zero(space));
        }
        for b in basis {
            if b.space() != space {
                return Err(Error::SpaceMismatch("projector basis"));
            }
        }
        let s = space.sqrt_weights();
        let columns = DMatrix::from_fn(space.dim(), basis.len(), |i, j| s[i] * basis[j].coords[i]);
        let q = range_basis(&columns);
        Ok(Self::from_euclidean_range(space, &q))
    }

    /// Projector onto `ker L`, assembled as `Id − L*L*†`.
    pub fn onto_kernel(l: &LinearMap) -> Self {
        let adjoint = l.adjoint();
        let range = adjoint.compose(&adjoint.pseudoinverse()).expect("shapes agree");
        let space = l.domain();
        let m = DMatrix::identity(space.dim(), space.dim()) - range.matrix();
        let range_rank = matrix_rank(&l.euclidean_form());
        match space.dim() - range_rank {
            0 => Self::zero(space),
            r if r == space.dim() => Self::identity(space),
            _ => Self {
                space: space.clone(),
                matrix: m,
                kind: ProjectorKind::General,
            },
        }
    }

    /// Block-diagonal projector `P_{V₁} × … × P_{V_k}` on `space`, which must
    /// be the (possibly block-weighted) direct sum of the blocks' spaces.
    pub fn block_diagonal(space: &Space, blocks: &[&Projector]) -> Self {
        let n: usize = blocks.iter().map(|b| b.space.dim()).sum();
        assert_eq!(n, space.dim());
        if blocks.iter().all(|b| b.kind == ProjectorKind::Identity) {
            return Self::identity(space);
        }
        if blocks.iter().all(|b| b.kind == ProjectorKind::Zero) {
            return Self::zero(space);
        }
        let mut m = DMatrix::zeros(n, n);
        let mut offset = 0;
        for b in blocks {
            let d = b.space.dim();
            m.view_mut((offset, offset), (d, d)).copy_from(&b.matrix);
            offset += d;
        }
        Self {
            space: space.clone(),
            matrix: m,
            kind: ProjectorKind::General,
        }
    }

    fn from_euclidean_range(space: &Space, q: &DMatrix<f64>) -> Self {
        let rank = q.ncols();
        if rank == 0 {
            return Self::zero(space);
        }
        if rank == space.dim() {
            return Self::identity(space);
        }
        let euclid = q * q.transpose();
        Self {
            space: space.clone(),
            matrix: space.from_euclidean(&euclid),
            kind: ProjectorKind::General,
        }
    }

    fn classified(space: &Space, matrix: DMatrix<f64>) -> Self {
        let n = space.dim();
        let kind = if matrix == DMatrix::identity(n, n) {
            ProjectorKind::Identity
        } else if matrix.iter().all(|&v| v == 0.0) {
            ProjectorKind::Zero
        } else {
            ProjectorKind::General
        };
        Self {
            space: space.clone(),
            matrix,
            kind,
        }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn is_identity(&self) -> bool {
        self.kind == ProjectorKind::Identity
    }

    pub fn is_zero(&self) -> bool {
        self.kind == ProjectorKind::Zero
    }

    /// Dimension of the range.
    pub fn rank(&self) -> usize {
        match self.kind {
            ProjectorKind::Identity => self.space.dim(),
            ProjectorKind::Zero => 0,
            ProjectorKind::General => self.matrix.trace().round() as usize,
        }
    }

    /// `P_V x`, checking that `x` lives in the projector's space.
    pub fn project(&self, x: &Point) -> Result<Point> {
        if x.space() != &self.space {
            return Err(Error::SpaceMismatch("project"));
        }
        Ok(self.apply(x))
    }

    /// `P_V x` without the space check.
    pub fn apply(&self, x: &Point) -> Point {
        match self.kind {
            ProjectorKind::Identity => x.clone(),
            ProjectorKind::Zero => self.space.zero(),
            ProjectorKind::General => Point::raw(&self.space, &self.matrix * x.coords()),
        }
    }

    /// `P_{V⊥} x = x − P_V x`.
    pub fn apply_complement(&self, x: &Point) -> Point {
        match self.kind {
            ProjectorKind::Identity => self.space.zero(),
            ProjectorKind::Zero => x.clone(),
            ProjectorKind::General => x - &self.apply(x),
        }
    }

    /// `R_{N_V} x = 2P_V x − x`.
    pub fn reflect(&self, x: &Point) -> Point {
        self.apply(x).scale(2.0) - x.clone()
    }

    /// The projector onto `V⊥`.
    pub fn complement(&self) -> Projector {
        let n = self.space.dim();
        match self.kind {
            ProjectorKind::Identity => Self::zero(&self.space),
            ProjectorKind::Zero => Self::identity(&self.space),
            ProjectorKind::General => Self {
                space: self.space.clone(),
                matrix: DMatrix::identity(n, n) - &self.matrix,
                kind: ProjectorKind::General,
            },
        }
    }

    /// `‖P² − P‖_F`.
    pub fn idempotence_defect(&self) -> f64 {
        (&self.matrix * &self.matrix - &self.matrix).norm()
    }

    /// `‖WP − PᵀW‖_F`, zero exactly when `P` is self-adjoint in the metric.
    pub fn self_adjoint_defect(&self) -> f64 {
        let w = DMatrix::from_diagonal(&DVector::from_column_slice(self.space.weights()));
        (&w * &self.matrix - self.matrix.transpose() * &w).norm()
    }
}

/// Bounded linear map between two spaces.
#[derive(Clone, Debug)]
pub struct LinearMap {
    domain: Space,
    codomain: Space,
    matrix: DMatrix<f64>,
}

impl LinearMap {
    pub fn new(domain: &Space, codomain: &Space, matrix: DMatrix<f64>) -> Result<Self> {
        check_dim("linear map rows", codomain.dim(), matrix.nrows())?;
        check_dim("linear map columns", domain.dim(), matrix.ncols())?;
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear map entries"));
        }
        Ok(Self {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix,
        })
    }

    /// Square map on a single space.
    pub fn endomorphism(space: &Space, matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(space, space, matrix)
    }

    pub fn identity(space: &Space) -> Self {
        Self {
            domain: space.clone(),
            codomain: space.clone(),
            matrix: DMatrix::identity(space.dim(), space.dim()),
        }
    }

    pub fn domain(&self) -> &Space {
        &self.domain
    }

    pub fn codomain(&self) -> &Space {
        &self.codomain
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        if x.space() != &self.domain {
            return Err(Error::SpaceMismatch("linear map"));
        }
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &Point) -> Point {
        Point::raw(&self.codomain, &self.matrix * x.coords())
    }

    /// The Hilbert adjoint `L*` with respect to both metrics,
    /// `W_dom⁻¹ Lᵀ W_cod`.
    pub fn adjoint(&self) -> LinearMap {
        let wd = self.domain.weights();
        let wc = self.codomain.weights();
        let m = DMatrix::from_fn(self.domain.dim(), self.codomain.dim(), |i, j| {
            self.matrix[(j, i)] * wc[j] / wd[i]
        });
        LinearMap {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            matrix: m,
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinearMap) -> Result<LinearMap> {
        if inner.codomain != self.domain {
            return Err(Error::SpaceMismatch("compose"));
        }
        Ok(LinearMap {
            domain: inner.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: &self.matrix * &inner.matrix,
        })
    }

    /// Matrix of the map between the Euclidean coordinates of both spaces.
    fn euclidean_form(&self) -> DMatrix<f64> {
        conjugate(
            &self.matrix,
            &self.codomain.sqrt_weights(),
            &self.domain.sqrt_weights(),
        )
    }

    /// Moore–Penrose pseudoinverse `L†`, from a singular value decomposition
    /// with the [`RANK_CUTOFF`] threshold.
    pub fn pseudoinverse(&self) -> LinearMap {
        let pinv = pinv_euclidean(&self.euclidean_form());
        // back from Euclidean coordinates: codomain → domain
        let m = conjugate(
            &pinv,
            &self.domain.sqrt_weights().map(|v| 1.0 / v),
            &self.codomain.sqrt_weights().map(|v| 1.0 / v),
        );
        LinearMap {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            matrix: m,
        }
    }

    /// Operator norm (largest singular value).
    pub fn norm(&self) -> f64 {
        let e = self.euclidean_form();
        if e.iter().all(|&v| v == 0.0) {
            return 0.0;
        }
        e.singular_values().max()
    }

    /// Operator norm estimated by power iteration on `L*L`.
    pub fn power_norm(&self, max_iter: usize, tol: f64) -> f64 {
        let ata = self.adjoint().compose(self).expect("adjoint composes");
        let n = self.domain.dim();
        // deterministic start with no special alignment
        let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * (i as f64 + 1.0).sqrt());
        let nv = self.domain.norm(&v);
        v /= nv;
        let mut estimate = 0.0;
        for _ in 0..max_iter {
            let w = ata.matrix() * &v;
            let nw = self.domain.norm(&w);
            if nw == 0.0 {
                return 0.0;
            }
            let next = nw.sqrt();
            v = w / nw;
            let done = (next - estimate).abs() <= tol * next.max(1.0);
            estimate = next;
            if done {
                break;
            }
        }
        estimate
    }

    /// Smallest eigenvalue of the symmetric part of `L` in the metric, i.e.
    /// the best `β` with `⟨x, Lx⟩ ≥ β‖x‖²`. Requires a square map.
    pub fn monotonicity_modulus(&self) -> Result<f64> {
        if self.domain != self.codomain {
            return Err(Error::SpaceMismatch("monotonicity of a non-square map"));
        }
        let e = self.euclidean_form();
        let sym = (&e + e.transpose()) * 0.5;
        Ok(SymmetricEigen::new(sym).eigenvalues.min())
    }
}

/// SVD-based pseudoinverse of a plain matrix.
pub(crate) fn pinv_euclidean(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.iter().all(|&v| v == 0.0) {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested Vᵀ");
    let smax = svd.singular_values.max();
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > RANK_CUTOFF * smax {
            out += (vt.row(k).transpose() * u.column(k).transpose()) / s;
        }
    }
    out
}

/// Orthonormal basis (as columns) of the column space of `m`.
fn range_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.iter().all(|&v| v == 0.0) {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > RANK_CUTOFF * smax)
        .map(|(k, _)| k)
        .collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

fn matrix_rank(m: &DMatrix<f64>) -> usize {
    range_basis(m).ncols()
}

/// Solves the square system `m x = rhs`, falling back to the least-squares
/// pseudoinverse solution when `m` is numerically singular.
pub(crate) fn solve_square(m: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    m.clone()
        .lu()
        .solve(rhs)
        .unwrap_or_else(|| pinv_euclidean(m) * rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn r2() -> Space {
        Space::euclidean(2)
    }

    #[test]
    fn project_identity_zero_and_diagonal() {
        let s = r2();
        let x = s.point(&[3.0, 4.0]).unwrap();
        assert_eq!(Projector::identity(&s).project(&x).unwrap(), x);
        let e1 = s.point(&[1.0, 0.0]).unwrap();
        assert_eq!(Projector::zero(&s).project(&e1).unwrap(), s.zero());
        let diag = Projector::from_basis(&s, &[s.point(&[1.0, 1.0]).unwrap()]).unwrap();
        let p = diag.project(&e1).unwrap();
        assert_abs_diff_eq!(p.as_slice(), &[0.5, 0.5][..], epsilon = 1e-15);
        assert_abs_diff_eq!(diag.matrix().as_slice(), &[0.5, 0.5, 0.5, 0.5][..], epsilon = 1e-15);
    }

    #[test]
    fn project_rejects_foreign_points() {
        let p = Projector::identity(&r2());
        let x = Space::euclidean(3).zero();
        assert!(matches!(p.project(&x), Err(Error::SpaceMismatch(_))));
    }

    #[test]
    fn basis_edge_cases() {
        let s = Space::euclidean(3);
        let full: Vec<Point> = (0..3).map(|i| s.basis_vector(i)).collect();
        assert!(Projector::from_basis(&s, &full).unwrap().is_identity());
        assert!(Projector::from_basis(&s, &[]).unwrap().is_zero());
        // repeated vector: rank one
        let v = s.point(&[1.0, 2.0, 2.0]).unwrap();
        let p = Projector::from_basis(&s, &[v.clone(), v.scale(2.0)]).unwrap();
        assert_eq!(p.rank(), 1);
        assert!(p.idempotence_defect() < 1e-14);
        assert_abs_diff_eq!(p.apply(&v).as_slice(), v.as_slice(), epsilon = 1e-14);
    }

    #[test]
    fn weighted_projector_is_self_adjoint_in_metric() {
        let s = Space::weighted(vec![1.0, 4.0, 0.25]).unwrap();
        let p = Projector::from_basis(&s, &[s.point(&[1.0, 1.0, 1.0]).unwrap()]).unwrap();
        assert!(p.idempotence_defect() < 1e-13);
        assert!(p.self_adjoint_defect() < 1e-13);
        // the weighted mean onto the diagonal: Σ wᵢxᵢ / Σ wᵢ
        let x = s.point(&[1.0, 0.0, 0.0]).unwrap();
        let px = p.apply(&x);
        for c in px.as_slice() {
            assert_abs_diff_eq!(*c, 1.0 / 5.25, epsilon = 1e-14);
        }
    }

    #[test]
    fn kernel_projector_examples() {
        let s = r2();
        let row = LinearMap::new(&s, &Space::euclidean(1), DMatrix::from_row_slice(1, 2, &[1.0, 1.0]))
            .unwrap();
        let p = Projector::onto_kernel(&row);
        let anti = s.point(&[1.0, -1.0]).unwrap();
        assert_abs_diff_eq!(p.apply(&anti).as_slice(), anti.as_slice(), epsilon = 1e-14);
        let x = s.point(&[0.3, 2.0]).unwrap();
        assert!(row.apply(&p.apply(&x)).unwrap().norm() <= 1e-9 * x.norm());

        let inv = LinearMap::endomorphism(&s, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]))
            .unwrap();
        assert!(Projector::onto_kernel(&inv).is_zero());
        let zero = LinearMap::endomorphism(&s, DMatrix::zeros(2, 2)).unwrap();
        assert!(Projector::onto_kernel(&zero).is_identity());
    }

    fn penrose_defects(l: &LinearMap) -> [f64; 4] {
        let p = l.pseudoinverse();
        let a = l.matrix();
        let g = p.matrix();
        let lg = l.compose(&p).unwrap();
        let gl = p.compose(l).unwrap();
        [
            (a * g * a - a).norm(),
            (g * a * g - g).norm(),
            (lg.adjoint().matrix() - lg.matrix()).norm(),
            (gl.adjoint().matrix() - gl.matrix()).norm(),
        ]
    }

    #[test]
    fn pseudoinverse_examples() {
        let s = r2();
        let proj = LinearMap::endomorphism(&s, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]))
            .unwrap();
        assert_abs_diff_eq!(
            proj.pseudoinverse().matrix().as_slice(),
            proj.matrix().as_slice(),
            epsilon = 1e-15
        );

        let row = LinearMap::new(&s, &Space::euclidean(1), DMatrix::from_row_slice(1, 2, &[1.0, 1.0]))
            .unwrap();
        let pinv = row.pseudoinverse();
        assert_eq!(pinv.matrix().shape(), (2, 1));
        assert_abs_diff_eq!(pinv.matrix().as_slice(), &[0.5, 0.5][..], epsilon = 1e-15);
        for d in penrose_defects(&row) {
            assert!(d <= 1e-9);
        }

        let s3 = Space::euclidean(3);
        let two = LinearMap::endomorphism(&s3, DMatrix::identity(3, 3) * 2.0).unwrap();
        assert_abs_diff_eq!(
            two.pseudoinverse().matrix().as_slice(),
            (DMatrix::<f64>::identity(3, 3) * 0.5).as_slice(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn weighted_pseudoinverse_satisfies_penrose_conditions() {
        let dom = Space::weighted(vec![2.0, 0.5, 1.0]).unwrap();
        let cod = Space::weighted(vec![3.0, 0.1]).unwrap();
        let l = LinearMap::new(&dom, &cod, DMatrix::from_row_slice(2, 3, &[1.0, 2.0, -1.0, 2.0, 4.0, -2.0]))
            .unwrap();
        for d in penrose_defects(&l) {
            assert!(d <= 1e-9, "defect {d}");
        }
    }

    #[test]
    fn adjoint_matches_weighted_inner_product() {
        let dom = Space::weighted(vec![2.0, 0.5]).unwrap();
        let cod = Space::weighted(vec![3.0, 0.1, 7.0]).unwrap();
        let l = LinearMap::new(&dom, &cod, DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 1.0]))
            .unwrap();
        let x = dom.point(&[0.7, -1.3]).unwrap();
        let y = cod.point(&[1.0, 2.0, -0.4]).unwrap();
        let lhs = l.apply(&x).unwrap().inner(&y);
        let rhs = x.inner(&l.adjoint().apply(&y).unwrap());
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn norms_agree() {
        let s = Space::euclidean(3);
        let l = LinearMap::endomorphism(
            &s,
            DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 3.0]),
        )
        .unwrap();
        let exact = l.norm();
        let power = l.power_norm(500, 1e-14);
        assert_abs_diff_eq!(exact, power, epsilon = 1e-8);
    }

    #[test]
    fn weighted_spaces_validate() {
        assert!(Space::weighted(vec![]).is_err());
        assert!(Space::weighted(vec![1.0, 0.0]).is_err());
        assert!(Space::weighted(vec![1.0, f64::NAN]).is_err());
        assert!(Point::new(&r2(), DVector::from_vec(vec![1.0, f64::INFINITY])).is_err());
        assert!(Point::new(&r2(), DVector::from_vec(vec![1.0])).is_err());
    }

    #[test]
    fn concat_split_round_trip() {
        let a = Space::euclidean(2);
        let b = Space::weighted(vec![2.0]).unwrap();
        let sum = Space::direct_sum(&[a.clone(), b.clone()]);
        let pa = a.point(&[1.0, 2.0]).unwrap();
        let pb = b.point(&[3.0]).unwrap();
        let joined = Point::concat(&sum, &[&pa, &pb]);
        assert_abs_diff_eq!(joined.norm_squared_check(), 1.0 + 4.0 + 18.0, epsilon = 1e-14);
        let parts = joined.split(&[a, b]);
        assert_eq!(parts[0], pa);
        assert_eq!(parts[1], pb);
    }

    impl Point {
        fn norm_squared_check(&self) -> f64 {
            self.inner(self)
        }
    }
}
