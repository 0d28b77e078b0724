//! Composite primal–dual inclusions with subspace constraints:
//!
//! ```text
//! z ∈ Ax + N_U x + Σᵢ Lᵢ* P_{Vᵢ}(Bᵢ ⊞_{Vᵢ⊥} Dᵢ + N_{Vᵢ}) P_{Vᵢ}(Lᵢx − bᵢ) + Cx
//! ```
//!
//! solved jointly with the dual inclusion on `H ⊕ G₁ ⊕ … ⊕ G_m`.

use nalgebra::DMatrix;

use crate::error::{check_gamma, Error, Result};
use crate::fpif::{default_gamma, InclusionProblem, PrimalDualPoint};
use crate::hilbert::{LinearMap, Point, Projector, Space};
use crate::operators::{LipschitzMap, ResolventOp, SingleValuedCertificate};
use crate::solver::{snapshot_deviation, validate_lambda, Control, Recorder, Sequence, SolveTrace, Snapshots, StepRecord, StopRule};

/// One dual block: `(Bᵢ)_{Vᵢ⊥}` through its resolvent, `(Dᵢ)_{Vᵢ⊥}` as a
/// lipschitzian map, `Lᵢ: H → Gᵢ`, the projector onto `Vᵢ` and `bᵢ ∈ Gᵢ`.
#[derive(Clone, Debug)]
pub struct DualBlock {
    b_partial: ResolventOp,
    d_partial: LipschitzMap,
    l: LinearMap,
    v: Projector,
    b: Point,
}

impl DualBlock {
    /// Assembles a block from the already partially inverted operators.
    pub fn new(
        b_partial: ResolventOp,
        d_partial: LipschitzMap,
        l: LinearMap,
        v: Projector,
        b: Point,
    ) -> Result<Self> {
        let g = l.codomain();
        if b_partial.space() != g || d_partial.space() != g || v.space() != g || b.space() != g {
            return Err(Error::SpaceMismatch("dual block"));
        }
        Ok(Self { b_partial, d_partial, l, v, b })
    }

    /// Derives `(Bᵢ)_{Vᵢ⊥}` from a catalog operator `Bᵢ`.
    pub fn from_catalog(
        b_op: &ResolventOp,
        d_partial: LipschitzMap,
        l: LinearMap,
        v: Projector,
        b: Point,
    ) -> Result<Self> {
        if v.space() != b_op.space() {
            return Err(Error::SpaceMismatch("dual block"));
        }
        let b_partial = b_op.partial_inverse(&v.complement())?;
        Self::new(b_partial, d_partial, l, v, b)
    }

    /// `(Dᵢ)_{Vᵢ⊥}` for a single-valued `Dᵢ` that is `β`-strongly monotone
    /// and `ν`-cocoercive (this covers gradients of strongly convex smooth
    /// functions through [`SingleValuedCertificate::gradient`]).
    pub fn d_partial_of(d: &LipschitzMap, certificate: SingleValuedCertificate, v: &Projector) -> Result<LipschitzMap> {
        d.partial_inverse(certificate, &v.complement())
    }

    /// `(Dᵢ)_{Vᵢ⊥}` for a linear `Dᵢ` with `⟨x, Dᵢx⟩ ≥ β‖x‖²`.
    pub fn d_partial_of_linear(d: &LinearMap, v: &Projector) -> Result<LipschitzMap> {
        let certificate = SingleValuedCertificate::linear(d)?;
        LipschitzMap::linear(d)?.partial_inverse(certificate, &v.complement())
    }

    pub fn b_partial(&self) -> &ResolventOp {
        &self.b_partial
    }

    pub fn d_partial(&self) -> &LipschitzMap {
        &self.d_partial
    }

    pub fn l(&self) -> &LinearMap {
        &self.l
    }

    pub fn v(&self) -> &Projector {
        &self.v
    }

    pub fn b(&self) -> &Point {
        &self.b
    }

    pub fn space(&self) -> &Space {
        self.l.codomain()
    }
}

#[derive(Clone, Debug)]
pub struct PDProblem {
    a: ResolventOp,
    u: Projector,
    c: LipschitzMap,
    z: Point,
    blocks: Vec<DualBlock>,
    chi: f64,
    gamma: f64,
}

/// `x = P_U x̄`, `uᵢ = P_{Vᵢ}ūᵢ`, and the multiplier of the constraint
/// `(x, u) ∈ U × V₁ × … × V_m` (the complementary part of the final
/// iterate divided by `γ`), which lives in the product space.
#[derive(Clone, Debug, PartialEq)]
pub struct PDSolution {
    pub x: Point,
    pub u: Vec<Point>,
    pub multiplier: Point,
}

impl PDProblem {
    pub fn new(a: ResolventOp, u: Projector, c: LipschitzMap, z: Point, blocks: Vec<DualBlock>) -> Result<Self> {
        let h = a.space();
        if u.space() != h || c.space() != h || z.space() != h {
            return Err(Error::SpaceMismatch("primal-dual problem"));
        }
        if blocks.iter().any(|blk| blk.l.domain() != h) {
            return Err(Error::SpaceMismatch("primal-dual coupling map"));
        }
        let lipschitz = blocks.iter().map(|blk| blk.d_partial.chi()).fold(c.chi(), f64::max);
        let coupling: f64 = blocks.iter().map(|blk| blk.l.norm().powi(2)).sum();
        let chi = lipschitz + coupling.sqrt();
        let gamma = default_gamma(chi);
        Ok(Self { a, u, c, z, blocks, chi, gamma })
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        check_gamma(gamma, self.chi)?;
        self.gamma = gamma;
        Ok(self)
    }

    pub fn a(&self) -> &ResolventOp {
        &self.a
    }

    pub fn u(&self) -> &Projector {
        &self.u
    }

    pub fn c(&self) -> &LipschitzMap {
        &self.c
    }

    pub fn z(&self) -> &Point {
        &self.z
    }

    pub fn blocks(&self) -> &[DualBlock] {
        &self.blocks
    }

    /// `max{μ, ν₁, …, ν_m} + √(Σ‖Lᵢ‖²)`.
    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn primal_space(&self) -> &Space {
        self.a.space()
    }

    fn spaces(&self) -> Vec<Space> {
        std::iter::once(self.primal_space().clone())
            .chain(self.blocks.iter().map(|blk| blk.space().clone()))
            .collect()
    }

    /// `H ⊕ G₁ ⊕ … ⊕ G_m`.
    pub fn product_space(&self) -> Space {
        Space::direct_sum(&self.spaces())
    }

    /// Stacks a primal and dual points into the product space.
    pub fn stack(&self, x: &Point, u: &[Point]) -> Point {
        let parts: Vec<&Point> = std::iter::once(x).chain(u.iter()).collect();
        Point::concat(&self.product_space(), &parts)
    }

    /// Inverse of [`PDProblem::stack`].
    pub fn unstack(&self, w: &Point) -> (Point, Vec<Point>) {
        let mut parts = w.split(&self.spaces());
        let x = parts.remove(0);
        (x, parts)
    }

    /// The skew coupling `(x, u) ↦ (Σ Lᵢ* P_{Vᵢ} uᵢ, −P_{V₁}L₁x, …, −P_{V_m}L_m x)`.
    pub fn coupling_map(&self) -> LinearMap {
        let space = self.product_space();
        let n = space.dim();
        let h = self.primal_space().dim();
        let mut m = DMatrix::zeros(n, n);
        let mut offset = h;
        for blk in &self.blocks {
            let d = blk.space().dim();
            let pv = blk.v.matrix();
            let upper = blk.l.adjoint().matrix() * pv;
            let lower = -(pv * blk.l.matrix());
            m.view_mut((0, offset), (h, d)).copy_from(&upper);
            m.view_mut((offset, 0), (d, h)).copy_from(&lower);
            offset += d;
        }
        LinearMap::endomorphism(&space, m).expect("square by construction")
    }

    /// The projector onto `U × V₁ × … × V_m`.
    pub fn constraint_projector(&self) -> Projector {
        let parts: Vec<&Projector> = std::iter::once(&self.u).chain(self.blocks.iter().map(|blk| &blk.v)).collect();
        Projector::block_diagonal(&self.product_space(), &parts)
    }

    /// The equivalent inclusion `0 ∈ Aw + Bw + N_W w` on the product space,
    /// with `A = (−z + A) × (P_{V₁}b₁ + (B₁)_{V₁⊥}) × …`, `B = C + L` and
    /// `W = U × V₁ × … × V_m`, at the same step `γ`.
    pub fn product_problem(&self) -> Result<InclusionProblem> {
        let space = self.product_space();
        let spaces = self.spaces();
        let a = self.a.clone();
        let z = self.z.clone();
        let blocks = self.blocks.clone();
        let sp = space.clone();
        let sps = spaces.clone();
        let joint_a = ResolventOp::from_fn(&space, "primal-dual resolvent", move |g, w| {
            let parts = w.split(&sps);
            let mut out = Vec::with_capacity(parts.len());
            out.push(a.eval(g, &parts[0].axpy(g, &z)));
            for (blk, ui) in blocks.iter().zip(&parts[1..]) {
                out.push(blk.b_partial.eval(g, &ui.axpy(-g, &blk.v.apply(&blk.b))));
            }
            let refs: Vec<&Point> = out.iter().collect();
            Point::concat(&sp, &refs)
        });
        let mut diagonal = vec![self.c.clone()];
        diagonal.extend(self.blocks.iter().map(|blk| blk.d_partial.clone()));
        let diag = LipschitzMap::block_diagonal(&space, &diagonal)?;
        let coupling = self.coupling_map();
        let joint_b = match diag.affine_parts() {
            Some((m, c)) => {
                let total = m + coupling.matrix();
                let linear = LinearMap::endomorphism(&space, total)?;
                let shift = Point::new(&space, c.clone())?;
                LipschitzMap::affine(&linear, &shift)?
            }
            None => {
                let coupling = coupling.clone();
                LipschitzMap::from_fn(&space, "C + L", self.chi, move |w| {
                    &diag.apply(w).expect("same space") + &coupling.apply(w).expect("same space")
                })?
            }
        };
        InclusionProblem::new(joint_a, joint_b, self.constraint_projector())?.with_gamma(self.gamma)
    }

    /// Residual of the joint primal–dual optimality system at `sol`, i.e.
    /// the inclusion residual of [`PDProblem::product_problem`] at
    /// `((x, u), multiplier)`.
    pub fn kkt_residual(&self, sol: &PDSolution) -> Result<f64> {
        self.check_state(&sol.x, &sol.u)?;
        let w = self.stack(&sol.x, &sol.u);
        if sol.multiplier.space() != w.space() {
            return Err(Error::SpaceMismatch("primal-dual multiplier"));
        }
        self.product_problem()?.inclusion_residual(&PrimalDualPoint {
            x: w,
            y: sol.multiplier.clone(),
        })
    }

    fn check_state(&self, x: &Point, u: &[Point]) -> Result<()> {
        if x.space() != self.primal_space() {
            return Err(Error::SpaceMismatch("primal point"));
        }
        if u.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch {
                context: "dual blocks",
                expected: self.blocks.len(),
                found: u.len(),
            });
        }
        if self.blocks.iter().zip(u).any(|(blk, ui)| ui.space() != blk.space()) {
            return Err(Error::SpaceMismatch("dual point"));
        }
        Ok(())
    }

    /// One iteration from `(x, u)`. With `literal = false` every projector is
    /// replaced by the identity.
    fn iterate(&self, x: &Point, u: &[Point], lam: f64, literal: bool) -> PDStep {
        let g = self.gamma;
        let on = |p: &Projector, w: &Point| if literal { p.apply(w) } else { w.clone() };
        let off = |p: &Projector, w: &Point| if literal { p.apply_complement(w) } else { w.scale(0.0) };
        let pu = |w: &Point| on(&self.u, w);

        let adjoint_sum = |duals: &[Point]| {
            let mut acc = self.primal_space().zero();
            for (blk, ui) in self.blocks.iter().zip(duals) {
                acc = &acc + &blk.l.adjoint().apply_unchecked(&on(&blk.v, ui));
            }
            acc
        };

        let xu = pu(x);
        let r1 = x.axpy(-g, &pu(&(&self.c.eval(&xu) + &adjoint_sum(u))));
        let p1 = self.a.eval(g, &r1.axpy(g, &self.z));
        let s1 = &(&(&pu(&p1).scale(2.0) - &p1) + &r1) - &pu(&r1);
        let s1u = pu(&s1);

        let mut r2 = Vec::with_capacity(u.len());
        let mut s2 = Vec::with_capacity(u.len());
        let mut t2 = Vec::with_capacity(u.len());
        for (blk, ui) in self.blocks.iter().zip(u) {
            let pv = |w: &Point| on(&blk.v, w);
            let forward = |w: &Point, primal: &Point| {
                pv(&(&blk.d_partial.eval(&pv(w)) - &blk.l.apply_unchecked(primal)))
            };
            let r = ui.axpy(-g, &forward(ui, &xu));
            let p = blk.b_partial.eval(g, &r.axpy(-g, &pv(&blk.b)));
            let s = &(&pv(&p).scale(2.0) - &p) + &off(&blk.v, &r);
            let t = s.axpy(-g, &forward(&s, &s1u));
            r2.push(r);
            s2.push(s);
            t2.push(t);
        }
        let t1 = s1.axpy(-g, &pu(&(&self.c.eval(&s1u) + &adjoint_sum(&s2))));

        let d1 = &t1 - &r1;
        let d2: Vec<Point> = t2.iter().zip(&r2).map(|(t, r)| t - r).collect();
        let x_next = x.axpy(lam, &d1);
        let u_next: Vec<Point> = u.iter().zip(&d2).map(|(ui, d)| ui.axpy(lam, d)).collect();
        let residual = (d1.norm().powi(2) + d2.iter().map(|d| d.norm().powi(2)).sum::<f64>()).sqrt();
        let gap = ((&s1 - x).norm().powi(2)
            + s2.iter().zip(u).map(|(s, ui)| (s - ui).norm().powi(2)).sum::<f64>())
        .sqrt();
        PDStep {
            dual_residuals: d2.iter().map(Point::norm).collect(),
            x_next,
            u_next,
            residual,
            gap,
        }
    }
}

struct PDStep {
    x_next: Point,
    u_next: Vec<Point>,
    residual: f64,
    gap: f64,
    dual_residuals: Vec<f64>,
}

fn dual_columns(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("dual_residual_{i}")).collect()
}

/// Runs the primal–dual iteration
///
/// ```text
/// r₁ = x − γP_U(C P_U x + Σ Lᵢ* P_{Vᵢ} uᵢ)
/// p₁ = J_{γA}(r₁ + γz)
/// s₁ = 2P_U p₁ − p₁ + r₁ − P_U r₁
/// for each block i:
///     r₂ᵢ = uᵢ − γP_{Vᵢ}((Dᵢ)_{Vᵢ⊥} P_{Vᵢ}uᵢ − Lᵢ P_U x)
///     p₂ᵢ = J_{γ(Bᵢ)_{Vᵢ⊥}}(r₂ᵢ − γP_{Vᵢ}bᵢ)
///     s₂ᵢ = 2P_{Vᵢ}p₂ᵢ − p₂ᵢ + r₂ᵢ − P_{Vᵢ}r₂ᵢ
///     t₂ᵢ = s₂ᵢ − γP_{Vᵢ}((Dᵢ)_{Vᵢ⊥} P_{Vᵢ}s₂ᵢ − Lᵢ P_U s₁)
///     uᵢ ← uᵢ + λ(t₂ᵢ − r₂ᵢ)
/// t₁ = s₁ − γP_U(C P_U s₁ + Σ Lᵢ* P_{Vᵢ} s₂ᵢ)
/// x ← x + λ(t₁ − r₁)
/// ```
///
/// Snapshots in the trace are points of the product space. The extra
/// columns hold `‖t₂ᵢ − r₂ᵢ‖` per block.
pub fn pd_solve(
    prob: &PDProblem,
    x0: Option<&Point>,
    u0: Option<&[Point]>,
    lambda: &Sequence,
    stop: &StopRule,
) -> Result<(PDSolution, SolveTrace)> {
    run(prob, x0, u0, lambda, stop, true)
}

fn run(
    prob: &PDProblem,
    x0: Option<&Point>,
    u0: Option<&[Point]>,
    lambda: &Sequence,
    stop: &StopRule,
    literal: bool,
) -> Result<(PDSolution, SolveTrace)> {
    let mut x = x0.cloned().unwrap_or_else(|| prob.primal_space().zero());
    let mut u: Vec<Point> = match u0 {
        Some(u0) => u0.to_vec(),
        None => prob.blocks.iter().map(|blk| blk.space().zero()).collect(),
    };
    prob.check_state(&x, &u)?;
    check_gamma(prob.gamma, prob.chi)?;
    validate_lambda(lambda)?;
    stop.validate()?;
    let g = prob.gamma;
    let steppers = std::iter::once(&prob.a).chain(prob.blocks.iter().map(|blk| &blk.b_partial));
    for op in steppers {
        if !op.supports_step(g) {
            return Err(Error::Unsupported(format!("{} has no resolvent at step γ = {g}", op.name())));
        }
    }
    let mut recorder = Recorder::new(*stop, &dual_columns(u.len()), &prob.stack(&x, &u));
    for n in 0..stop.max_iter {
        let lam = lambda.at(n);
        let step = prob.iterate(&x, &u, lam, literal);
        let before = prob.stack(&x, &u);
        let after = prob.stack(&step.x_next, &step.u_next);
        let row = StepRecord {
            residual: step.residual,
            delta: g,
            lambda: lam,
            step_norm: (&after - &before).norm(),
            forward_gap: step.gap,
            extras: step.dual_residuals,
        };
        let control = recorder.step(n, row, before.norm(), || after.clone());
        if after.is_finite() {
            x = step.x_next;
            u = step.u_next;
        }
        if let Control::Stop = control {
            break;
        }
    }
    let w = prob.stack(&x, &u);
    let projector = prob.constraint_projector();
    let (px, pu) = prob.unstack(&projector.apply(&w));
    let multiplier = projector.apply_complement(&w).scale(1.0 / g);
    Ok((PDSolution { x: px, u: pu, multiplier }, recorder.finish()))
}

/// With `U = H` and every `Vᵢ = Gᵢ`, runs the iteration with unit
/// relaxation twice, once applying the projectors and once skipping them,
/// and returns the largest distance between corresponding iterates.
pub fn pd_reduction_check(prob: &PDProblem, stop: &StopRule) -> Result<f64> {
    if !prob.u.is_identity() || prob.blocks.iter().any(|blk| !blk.v.is_identity()) {
        return Err(Error::InvalidProblem("the reduction needs U = H and Vᵢ = Gᵢ".into()));
    }
    let stop = stop.with_snapshots(Snapshots::Every(1));
    let one = Sequence::Constant(1.0);
    let (_, literal) = run(prob, None, None, &one, &stop, true)?;
    let (_, bypass) = run(prob, None, None, &one, &stop, false)?;
    Ok(snapshot_deviation(&literal, &bypass))
}

/// The two-operator specialization for `0 ∈ B₁x + B₂x` (`H = G₁ = G₂`,
/// `Lᵢ = Id`, `U = H`, `Vᵢ = Gᵢ`, `z = 0`, `A = C = 0`, `bᵢ = 0`,
/// `(Dᵢ)_{Vᵢ⊥} = 0`):
///
/// ```text
/// p₁ = J_{γB₁⁻¹}(u₁ + γx),  p₂ = J_{γB₂⁻¹}(u₂ + γx)
/// x ← x − γλ(p₁ + p₂)
/// u₁ ← (1 − λ)u₁ + λ(p₁ − γ²(u₁ + u₂))
/// u₂ ← (1 − λ)u₂ + λ(p₂ − γ²(u₁ + u₂))
/// ```
///
/// `γ` must lie in `]0, 1/√2[`. Returns the final `x`, the final duals
/// (which satisfy `u₁ ∈ B₁x`, `u₂ ∈ B₂x` in the limit) and the trace, whose
/// snapshots are points of `H ⊕ H ⊕ H`.
#[allow(clippy::too_many_arguments)]
pub fn pd_two_op_special(
    b1: &ResolventOp,
    b2: &ResolventOp,
    x0: &Point,
    u10: &Point,
    u20: &Point,
    gamma: f64,
    lambda: &Sequence,
    stop: &StopRule,
) -> Result<(Point, [Point; 2], SolveTrace)> {
    let space = b1.space();
    if b2.space() != space || x0.space() != space || u10.space() != space || u20.space() != space {
        return Err(Error::SpaceMismatch("pd_two_op_special"));
    }
    check_gamma(gamma, std::f64::consts::SQRT_2)?;
    validate_lambda(lambda)?;
    stop.validate()?;
    let inv1 = b1.inverse()?;
    let inv2 = b2.inverse()?;
    let product = Space::direct_sum(&[space.clone(), space.clone(), space.clone()]);
    let (mut x, mut u1, mut u2) = (x0.clone(), u10.clone(), u20.clone());
    let mut recorder = Recorder::new(*stop, &dual_columns(2), &Point::concat(&product, &[&x, &u1, &u2]));
    let g2 = gamma * gamma;
    for n in 0..stop.max_iter {
        let lam = lambda.at(n);
        let p1 = inv1.eval(gamma, &u1.axpy(gamma, &x));
        let p2 = inv2.eval(gamma, &u2.axpy(gamma, &x));
        let x_next = x.axpy(-gamma * lam, &(&p1 + &p2));
        let dual_sum = &u1 + &u2;
        let u1_next = &u1.scale(1.0 - lam) + &p1.axpy(-g2, &dual_sum).scale(lam);
        let u2_next = &u2.scale(1.0 - lam) + &p2.axpy(-g2, &dual_sum).scale(lam);
        let before = Point::concat(&product, &[&x, &u1, &u2]);
        let after = Point::concat(&product, &[&x_next, &u1_next, &u2_next]);
        let d1 = (&u1_next - &u1).norm() / lam;
        let d2 = (&u2_next - &u2).norm() / lam;
        let step_norm = (&after - &before).norm();
        let row = StepRecord {
            residual: step_norm / lam,
            delta: gamma,
            lambda: lam,
            step_norm,
            forward_gap: step_norm / lam,
            extras: vec![d1, d2],
        };
        let control = recorder.step(n, row, before.norm(), || after.clone());
        if after.is_finite() {
            x = x_next;
            u1 = u1_next;
            u2 = u2_next;
        }
        if let Control::Stop = control {
            break;
        }
    }
    Ok((x, [u1, u2], recorder.finish()))
}
