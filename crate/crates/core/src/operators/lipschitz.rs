use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::MONOTONE_TOL;
use crate::error::{Error, Result};
use crate::hilbert::{pinv_euclidean, LinearMap, Point, Projector, Space};

type EvalFn = dyn Fn(&Point) -> Point + Send + Sync;

/// Inner iteration limits for partial inverses of nonlinear maps.
const INNER_MAX_ITER: usize = 10_000;
const INNER_TOL: f64 = 1e-10;

/// A single-valued monotone map with a certified lipschitz constant `chi`.
#[derive(Clone)]
pub struct LipschitzMap {
    space: Space,
    name: String,
    chi: f64,
    eval: Arc<EvalFn>,
    affine: Option<(DMatrix<f64>, DVector<f64>)>,
    zero: bool,
}

impl fmt::Debug for LipschitzMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzMap")
            .field("name", &self.name)
            .field("space", &self.space)
            .field("chi", &self.chi)
            .finish()
    }
}

impl LipschitzMap {
    /// Wraps a user map. Monotonicity and the constant are the caller's
    /// claim; [`super::probe`] can sample both.
    pub fn from_fn<F>(space: &Space, name: impl Into<String>, chi: f64, eval: F) -> Result<Self>
    where
        F: Fn(&Point) -> Point + Send + Sync + 'static,
    {
        if !(chi >= 0.0 && chi.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "lipschitz constant must be finite and nonnegative, got {chi}"
            )));
        }
        Ok(Self {
            space: space.clone(),
            name: name.into(),
            chi,
            eval: Arc::new(eval),
            affine: None,
            zero: false,
        })
    }

    pub fn zero(space: &Space) -> Self {
        let sp = space.clone();
        let n = space.dim();
        Self {
            space: space.clone(),
            name: "zero".into(),
            chi: 0.0,
            eval: Arc::new(move |_| sp.zero()),
            affine: Some((DMatrix::zeros(n, n), DVector::zeros(n))),
            zero: true,
        }
    }

    pub fn identity(space: &Space) -> Self {
        Self::affine_unchecked(space, DMatrix::identity(space.dim(), space.dim()), DVector::zeros(space.dim()), 1.0)
    }

    /// `x ↦ M x + c` with `χ = ‖M‖`; rejects non-monotone `M`.
    pub fn affine(m: &LinearMap, shift: &Point) -> Result<Self> {
        if m.domain() != m.codomain() {
            return Err(Error::SpaceMismatch("affine map must be square"));
        }
        if shift.space() != m.domain() {
            return Err(Error::SpaceMismatch("affine map shift"));
        }
        let modulus = m.monotonicity_modulus()?;
        if modulus < -MONOTONE_TOL {
            return Err(Error::NotMonotone(format!(
                "symmetric part has eigenvalue {modulus:e}"
            )));
        }
        Ok(Self::affine_unchecked(
            m.domain(),
            m.matrix().clone(),
            shift.coords().clone(),
            m.norm(),
        ))
    }

    pub fn linear(m: &LinearMap) -> Result<Self> {
        Self::affine(m, &m.domain().zero())
    }

    pub(crate) fn affine_unchecked(space: &Space, matrix: DMatrix<f64>, shift: DVector<f64>, chi: f64) -> Self {
        if matrix.iter().all(|&v| v == 0.0) && shift.iter().all(|&v| v == 0.0) {
            return Self::zero(space);
        }
        let sp = space.clone();
        let (m, c) = (matrix.clone(), shift.clone());
        Self {
            space: space.clone(),
            name: "affine".into(),
            chi,
            eval: Arc::new(move |x| Point::raw(&sp, &m * x.coords() + &c)),
            affine: Some((matrix, shift)),
            zero: false,
        }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn affine_parts(&self) -> Option<(&DMatrix<f64>, &DVector<f64>)> {
        self.affine.as_ref().map(|(m, c)| (m, c))
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        if x.space() != &self.space {
            return Err(Error::SpaceMismatch("lipschitz map"));
        }
        Ok(self.eval(x))
    }

    pub(crate) fn eval(&self, x: &Point) -> Point {
        (self.eval)(x)
    }

    /// `αB` for `α ≥ 0`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidProblem(format!("scale must be nonnegative, got {alpha}")));
        }
        if let Some((m, c)) = &self.affine {
            return Ok(Self::affine_unchecked(&self.space, m * alpha, c * alpha, self.chi * alpha));
        }
        let base = self.clone();
        Self::from_fn(&self.space, format!("{alpha}·{}", self.name), self.chi * alpha, move |x| {
            base.eval(x).scale(alpha)
        })
    }

    /// `γ P_V ∘ B ∘ P_V`, which is monotone and `γχ`-lipschitzian.
    pub fn transported(&self, projector: &Projector, gamma: f64) -> Result<Self> {
        if projector.space() != &self.space {
            return Err(Error::SpaceMismatch("transported map"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidProblem(format!("gamma must be positive, got {gamma}")));
        }
        let base = self.clone();
        let p = projector.clone();
        let mut out = Self::from_fn(&self.space, format!("γP({})P", self.name), gamma * self.chi, move |x| {
            p.apply(&base.eval(&p.apply(x))).scale(gamma)
        })?;
        if let Some((m, c)) = &self.affine {
            let pm = projector.matrix();
            out.affine = Some(((pm * m * pm) * gamma, (pm * c) * gamma));
        }
        out.zero = self.zero;
        Ok(out)
    }

    /// The map `(x₁, …, x_k) ↦ (B₁x₁, …, B_k x_k)` on `space`, the direct
    /// sum of the blocks' spaces; its constant is the largest block constant.
    pub fn block_diagonal(space: &Space, blocks: &[LipschitzMap]) -> Result<Self> {
        let spaces: Vec<Space> = blocks.iter().map(|b| b.space.clone()).collect();
        let total: usize = spaces.iter().map(|s| s.dim()).sum();
        if total != space.dim() {
            return Err(Error::DimensionMismatch {
                context: "block-diagonal map",
                expected: space.dim(),
                found: total,
            });
        }
        let chi = blocks.iter().map(|b| b.chi).fold(0.0, f64::max);
        let bs = blocks.to_vec();
        let sp = space.clone();
        let mut out = Self::from_fn(space, "block diagonal", chi, move |x| {
            let parts = x.split(&spaces);
            let images: Vec<Point> = bs.iter().zip(&parts).map(|(b, p)| b.eval(p)).collect();
            let refs: Vec<&Point> = images.iter().collect();
            Point::concat(&sp, &refs)
        })?;
        if blocks.iter().all(|b| b.affine.is_some()) {
            let mut m = DMatrix::zeros(total, total);
            let mut c = DVector::zeros(total);
            let mut offset = 0;
            for b in blocks {
                let (bm, bc) = b.affine.as_ref().expect("checked");
                let d = bm.nrows();
                m.view_mut((offset, offset), (d, d)).copy_from(bm);
                c.rows_mut(offset, d).copy_from(bc);
                offset += d;
            }
            out.affine = Some((m, c));
        }
        out.zero = blocks.iter().all(|b| b.zero);
        Ok(out)
    }

    /// The partial inverse `D_V` of a single-valued map `D` certified
    /// `β`-strongly monotone and `ν`-cocoercive. The result is
    /// `α`-cocoercive with `α = min{β, ν}/2`, hence `1/α`-lipschitzian.
    pub fn partial_inverse(&self, certificate: SingleValuedCertificate, projector: &Projector) -> Result<Self> {
        if projector.space() != &self.space {
            return Err(Error::SpaceMismatch("partial inverse subspace"));
        }
        let alpha = certificate.alpha();
        if projector.is_identity() {
            return Ok(self.clone());
        }
        if let Some((m, c)) = &self.affine {
            let (matrix, shift) = affine_partial_inverse(projector, m, c);
            return Ok(Self::affine_unchecked(&self.space, matrix, shift, 1.0 / alpha));
        }
        let base = self.clone();
        let p = projector.clone();
        Self::from_fn(&self.space, format!("({})_V", self.name), 1.0 / alpha, move |u| {
            match nonlinear_partial_inverse(&base, certificate, &p, u) {
                Ok(y) => y,
                Err(e) => {
                    log::error!("{e}");
                    u.map_coords(|_| f64::NAN)
                }
            }
        })
    }
}

/// Evidence that a single-valued map `D` is `β`-strongly monotone and
/// `ν`-cocoercive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleValuedCertificate {
    pub beta: f64,
    pub nu: f64,
}

impl SingleValuedCertificate {
    pub fn new(beta: f64, nu: f64) -> Result<Self> {
        if !(beta > 0.0 && nu > 0.0 && beta.is_finite() && nu.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "certificate constants must be positive, got β = {beta}, ν = {nu}"
            )));
        }
        Ok(Self { beta, nu })
    }

    /// Gradient of a `strong_convexity`-strongly convex function with
    /// `smoothness`-lipschitzian gradient: `ν = 1/L`.
    pub fn gradient(strong_convexity: f64, smoothness: f64) -> Result<Self> {
        Self::new(strong_convexity, 1.0 / smoothness)
    }

    /// A linear map with `⟨x, Dx⟩ ≥ β‖x‖²`: `ν = β/‖D‖²`.
    pub fn linear(d: &LinearMap) -> Result<Self> {
        let beta = d.monotonicity_modulus()?;
        if beta <= 0.0 {
            return Err(Error::InvalidProblem(format!(
                "linear map is not strongly monotone (modulus {beta:e})"
            )));
        }
        let norm = d.norm();
        Self::new(beta, beta / (norm * norm))
    }

    /// `min{β, ν}/2`.
    pub fn alpha(&self) -> f64 {
        0.5 * self.beta.min(self.nu)
    }
}

/// `D_V u` for a certified single-valued `D`.
///
/// `y = D_V u` iff `P y + P⊥ u = D(P u + P⊥ y)`. Writing `w = P⊥ y`, one
/// needs `P⊥ D(P u + w) = P⊥ u` and then `y = P D(P u + w) + w`. Affine maps
/// take one linear solve; other maps run the fixed-point iteration
/// `w ← P⊥(w − ν(D(P u + w) − u))`, a contraction with factor `√(1 − βν)`.
pub fn partial_inverse_apply_singlevalued(
    d: &LipschitzMap,
    certificate: SingleValuedCertificate,
    projector: &Projector,
    u: &Point,
) -> Result<Point> {
    if u.space() != d.space() || projector.space() != d.space() {
        return Err(Error::SpaceMismatch("partial inverse of a single-valued map"));
    }
    if projector.is_identity() {
        return Ok(d.eval(u));
    }
    if let Some((m, c)) = d.affine_parts() {
        let (matrix, shift) = affine_partial_inverse(projector, m, c);
        return Ok(Point::raw(u.space(), matrix * u.coords() + shift));
    }
    nonlinear_partial_inverse(d, certificate, projector, u)
}

fn affine_partial_inverse(
    projector: &Projector,
    m: &DMatrix<f64>,
    c: &DVector<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = m.nrows();
    let p = projector.matrix();
    let q = DMatrix::identity(n, n) - p;
    // (P⊥ M P⊥ + P) w = P⊥ u − P⊥ M P u − P⊥ c forces P w = 0
    let system = &q * m * &q + p;
    let solve = |rhs: &DMatrix<f64>| -> DMatrix<f64> {
        let lu = system.clone().lu();
        lu.solve(rhs).unwrap_or_else(|| pinv_euclidean(&system) * rhs)
    };
    let w_of_u = solve(&(&q - &q * m * p));
    let w_const = solve(&DMatrix::from_column_slice(n, 1, (-(&q * c)).as_slice()));
    // y = P M (P u + w) + P c + w
    let matrix = p * m * (p + &w_of_u) + &w_of_u;
    let w_const = w_const.column(0).into_owned();
    let shift = p * m * &w_const + p * c + &w_const;
    (matrix, shift)
}

fn nonlinear_partial_inverse(
    d: &LipschitzMap,
    certificate: SingleValuedCertificate,
    projector: &Projector,
    u: &Point,
) -> Result<Point> {
    let tau = certificate.nu;
    let pu = projector.apply(u);
    let mut w = projector.apply_complement(u);
    let mut residual = f64::INFINITY;
    for _ in 0..INNER_MAX_ITER {
        let image = d.eval(&(&pu + &w));
        let gap = projector.apply_complement(&(&image - u));
        residual = gap.norm();
        if residual <= INNER_TOL * u.norm().max(1.0) {
            return Ok(&projector.apply(&image) + &w);
        }
        if !residual.is_finite() {
            break;
        }
        w = w.axpy(-tau, &gap);
    }
    Err(Error::DegenerateCertificate {
        iterations: INNER_MAX_ITER,
        residual,
    })
}
