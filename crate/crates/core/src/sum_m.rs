//! `0 ∈ Σᵢ Aᵢx + Bx`, solved on the product space `Hᵐ` with the metric
//! `Σ ωᵢ⟨xᵢ, yᵢ⟩` and the diagonal subspace as constraint.

use crate::error::{check_gamma, Error, Result};
use crate::fpif::default_gamma;
use crate::hilbert::{Point, Projector, Space};
use crate::operators::{LipschitzMap, ResolventOp};
use crate::solver::{validate_lambda, Control, Recorder, Sequence, SolveTrace, StepRecord, StopRule};

#[derive(Clone, Debug)]
pub struct SumProblem {
    ops: Vec<ResolventOp>,
    b: LipschitzMap,
    weights: Vec<f64>,
    gamma: f64,
}

/// The consensus point together with the final product-space iterate and
/// the selections `yᵢ ∈ Aᵢpᵢ` from the last resolvent evaluations.
#[derive(Clone, Debug)]
pub struct SumSolution {
    pub x: Point,
    pub z: Vec<Point>,
    pub selections: Vec<Point>,
}

impl SumProblem {
    /// `weights` defaults to `ωᵢ = 1/m`; the step defaults to `0.9/χ`.
    pub fn new(ops: Vec<ResolventOp>, b: LipschitzMap, weights: Option<Vec<f64>>) -> Result<Self> {
        let m = ops.len();
        if m == 0 {
            return Err(Error::InvalidProblem("at least one operator is required".into()));
        }
        if ops.iter().any(|a| a.space() != b.space()) {
            return Err(Error::SpaceMismatch("sum problem operators"));
        }
        let weights = weights.unwrap_or_else(|| vec![1.0 / m as f64; m]);
        if weights.len() != m {
            return Err(Error::DimensionMismatch {
                context: "sum problem weights",
                expected: m,
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0 && *w <= 1.0)) {
            return Err(Error::InvalidProblem(format!("weights must lie in ]0, 1], got {weights:?}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidProblem(format!("weights must sum to 1, got {total}")));
        }
        let gamma = default_gamma(b.chi());
        Ok(Self { ops, b, weights, gamma })
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        check_gamma(gamma, self.b.chi())?;
        self.gamma = gamma;
        Ok(self)
    }

    pub fn ops(&self) -> &[ResolventOp] {
        &self.ops
    }

    pub fn b(&self) -> &LipschitzMap {
        &self.b
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn base_space(&self) -> &Space {
        self.b.space()
    }

    /// `Hᵐ` with the `ω`-weighted metric.
    pub fn product_space(&self) -> Space {
        let spaces = vec![self.base_space().clone(); self.ops.len()];
        Space::weighted_sum(&spaces, &self.weights)
    }

    /// Projector onto the diagonal `{(x, …, x)}` of the product space, which
    /// sends `(x₁, …, x_m)` to `(x̄, …, x̄)` with `x̄ = Σ ωᵢxᵢ`.
    pub fn diagonal_projector(&self) -> Projector {
        let space = self.product_space();
        let n = self.base_space().dim();
        let m = self.ops.len();
        let basis: Vec<Point> = (0..n)
            .map(|k| {
                let e = self.base_space().basis_vector(k);
                let copies: Vec<&Point> = vec![&e; m];
                Point::concat(&space, &copies)
            })
            .collect();
        Projector::from_basis(&space, &basis).expect("diagonal basis lives in the product space")
    }

    fn consensus(&self, z: &[Point]) -> Point {
        let mut x = self.base_space().zero();
        for (zi, w) in z.iter().zip(&self.weights) {
            x = x.axpy(*w, zi);
        }
        x
    }

    fn check_state(&self, z: &[Point]) -> Result<()> {
        if z.len() != self.ops.len() {
            return Err(Error::DimensionMismatch {
                context: "sum problem state",
                expected: self.ops.len(),
                found: z.len(),
            });
        }
        if z.iter().any(|p| p.space() != self.base_space()) {
            return Err(Error::SpaceMismatch("sum problem state"));
        }
        Ok(())
    }

    /// `max_i ‖pᵢ − x‖ + ‖Σ yᵢ + Bx‖` at the state `z`, where `x = Σ ωᵢzᵢ`,
    /// `pᵢ = J_{γAᵢ/ωᵢ}(zᵢ − γBx)` and `yᵢ = ωᵢ(zᵢ − γBx − pᵢ)/γ ∈ Aᵢpᵢ`.
    pub fn certificate(&self, z: &[Point]) -> Result<f64> {
        self.check_state(z)?;
        let x = self.consensus(z);
        let bx = self.b.eval(&x);
        let mut balance = bx.clone();
        let mut spread: f64 = 0.0;
        for ((zi, a), w) in z.iter().zip(&self.ops).zip(&self.weights) {
            let r = zi.axpy(-self.gamma, &bx);
            let p = a.eval(self.gamma / w, &r);
            spread = spread.max((&p - &x).norm());
            balance = balance.axpy(w / self.gamma, &(&r - &p));
        }
        Ok(spread + balance.norm())
    }
}

/// The iteration
///
/// ```text
/// xₙ = Σ ωⱼ zⱼ,ₙ
/// rᵢ,ₙ = zᵢ,ₙ − γBxₙ
/// pᵢ,ₙ = J_{γAᵢ/ωᵢ} rᵢ,ₙ
/// qₙ = Σ ωⱼ pⱼ,ₙ
/// sᵢ,ₙ = 2qₙ − pᵢ,ₙ + zᵢ,ₙ − xₙ
/// tᵢ,ₙ = sᵢ,ₙ − γBqₙ
/// zᵢ,ₙ₊₁ = zᵢ,ₙ + λₙ(tᵢ,ₙ − rᵢ,ₙ)
/// ```
///
/// `z0` defaults to zero. The trace residual is `maxᵢ ‖tᵢ,ₙ − rᵢ,ₙ‖`.
pub fn sum_solve(
    prob: &SumProblem,
    z0: Option<&[Point]>,
    lambda: &Sequence,
    stop: &StopRule,
) -> Result<(SumSolution, SolveTrace)> {
    let m = prob.ops.len();
    let mut z: Vec<Point> = match z0 {
        Some(z0) => z0.to_vec(),
        None => vec![prob.base_space().zero(); m],
    };
    prob.check_state(&z)?;
    check_gamma(prob.gamma, prob.b.chi())?;
    validate_lambda(lambda)?;
    stop.validate()?;
    let g = prob.gamma;
    for (a, w) in prob.ops.iter().zip(&prob.weights) {
        if !a.supports_step(g / w) {
            return Err(Error::Unsupported(format!("{} has no resolvent at step {}", a.name(), g / w)));
        }
    }
    let product = prob.product_space();
    let stack = |z: &[Point]| Point::concat(&product, &z.iter().collect::<Vec<_>>());
    let mut recorder = Recorder::new(*stop, &["consensus_drift".to_string()], &stack(&z));
    let mut selections = vec![prob.base_space().zero(); m];
    for n in 0..stop.max_iter {
        let lam = lambda.at(n);
        let x = prob.consensus(&z);
        let bx = prob.b.eval(&x);
        let r: Vec<Point> = z.iter().map(|zi| zi.axpy(-g, &bx)).collect();
        let p: Vec<Point> = prob
            .ops
            .iter()
            .zip(&prob.weights)
            .zip(&r)
            .map(|((a, w), ri)| a.eval(g / w, ri))
            .collect();
        let q = prob.consensus(&p);
        let bq = prob.b.eval(&q);
        let mut next = Vec::with_capacity(m);
        let mut residual: f64 = 0.0;
        let mut drift: f64 = 0.0;
        let mut gap_sq = 0.0;
        for i in 0..m {
            let s = &(&(&q.scale(2.0) - &p[i]) + &z[i]) - &x;
            let t = s.axpy(-g, &bq);
            let diff = &t - &r[i];
            residual = residual.max(diff.norm());
            drift = drift.max((&z[i] - &x).norm());
            gap_sq += prob.weights[i] * (&s - &z[i]).inner(&(&s - &z[i]));
            next.push(z[i].axpy(lam, &diff));
        }
        let z_stack = stack(&z);
        let next_stack = stack(&next);
        let row = StepRecord {
            residual,
            delta: g,
            lambda: lam,
            step_norm: (&next_stack - &z_stack).norm(),
            forward_gap: gap_sq.sqrt(),
            extras: vec![drift],
        };
        let control = recorder.step(n, row, z_stack.norm(), || next_stack.clone());
        if next_stack.is_finite() {
            for i in 0..m {
                selections[i] = (&r[i] - &p[i]).scale(prob.weights[i] / g);
            }
            z = next;
        }
        if let Control::Stop = control {
            break;
        }
    }
    let x = prob.consensus(&z);
    Ok((SumSolution { x, z, selections }, recorder.finish()))
}

/// The two-operator parallel method (`B = 0`, `ω₁ = ω₂ = ½`):
///
/// ```text
/// xₙ = (z₁,ₙ + z₂,ₙ)/2
/// p₁,ₙ = J_{2γA₁} z₁,ₙ,  p₂,ₙ = J_{2γA₂} z₂,ₙ
/// z₁,ₙ₊₁ = z₁,ₙ + λₙ(p₂,ₙ − xₙ)
/// z₂,ₙ₊₁ = z₂,ₙ + λₙ(p₁,ₙ − xₙ)
/// ```
///
/// Returns the consensus point of the final iterate.
pub fn two_op_parallel_solve(
    a1: &ResolventOp,
    a2: &ResolventOp,
    z10: &Point,
    z20: &Point,
    gamma: f64,
    lambda: &Sequence,
    stop: &StopRule,
) -> Result<(Point, SolveTrace)> {
    let space = a1.space();
    if a2.space() != space || z10.space() != space || z20.space() != space {
        return Err(Error::SpaceMismatch("two_op_parallel_solve"));
    }
    check_gamma(gamma, 0.0)?;
    validate_lambda(lambda)?;
    stop.validate()?;
    for a in [a1, a2] {
        if !a.supports_step(2.0 * gamma) {
            return Err(Error::Unsupported(format!("{} has no resolvent at step {}", a.name(), 2.0 * gamma)));
        }
    }
    let product = Space::weighted_sum(&[space.clone(), space.clone()], &[0.5, 0.5]);
    let (mut z1, mut z2) = (z10.clone(), z20.clone());
    let mut recorder = Recorder::new(*stop, &["consensus_drift".to_string()], &Point::concat(&product, &[&z1, &z2]));
    for n in 0..stop.max_iter {
        let lam = lambda.at(n);
        let x = (&z1 + &z2).scale(0.5);
        let p1 = a1.eval(2.0 * gamma, &z1);
        let p2 = a2.eval(2.0 * gamma, &z2);
        let d1 = &p2 - &x;
        let d2 = &p1 - &x;
        let n1 = z1.axpy(lam, &d1);
        let n2 = z2.axpy(lam, &d2);
        let before = Point::concat(&product, &[&z1, &z2]);
        let after = Point::concat(&product, &[&n1, &n2]);
        let drift = (&z1 - &x).norm().max((&z2 - &x).norm());
        let forward_gap = Point::concat(&product, &[&(&d1 + &z1), &(&d2 + &z2)]);
        let row = StepRecord {
            residual: d1.norm().max(d2.norm()),
            delta: gamma,
            lambda: lam,
            step_norm: (&after - &before).norm(),
            forward_gap: (&forward_gap - &before).norm(),
            extras: vec![drift],
        };
        let control = recorder.step(n, row, before.norm(), || after.clone());
        if after.is_finite() {
            z1 = n1;
            z2 = n2;
        }
        if let Control::Stop = control {
            break;
        }
    }
    Ok(((&z1 + &z2).scale(0.5), recorder.finish()))
}
