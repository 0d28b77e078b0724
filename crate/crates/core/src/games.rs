//! Two-player zero-sum games over `Sᵢ = {x ∈ Cᵢ : Lᵢx = bᵢ}`, solved without
//! ever projecting onto `Sᵢ`: the iteration only projects onto the cones
//! `Cᵢ` and onto `ker Lᵢ`.

use std::fmt;
use std::sync::Arc;

use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_gamma, Error, Result};
use crate::fpif::default_gamma;
use crate::hilbert::{LinearMap, Point, Projector, Space};
use crate::operators::sample_ball;
use crate::solver::{validate_lambda, Control, Recorder, Sequence, SolveTrace, StepRecord, StopRule};

/// A closed convex set with an explicit projection.
#[derive(Clone, Debug, PartialEq)]
pub enum ConeSet {
    Whole,
    Orthant,
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl ConeSet {
    pub fn project(&self, x: &Point) -> Point {
        match self {
            ConeSet::Whole => x.clone(),
            ConeSet::Orthant => x.map_coords(|v| v.max(0.0)),
            ConeSet::Box { lower, upper } => {
                let coords = DVector::from_fn(x.dim(), |i, _| x[i].clamp(lower[i], upper[i]));
                Point::raw(x.space(), coords)
            }
        }
    }

    /// Distance from `x` to the set in the metric of `x`'s space.
    pub fn distance(&self, x: &Point) -> f64 {
        (x - &self.project(x)).norm()
    }

    fn strictly_contains(&self, x: &Point) -> bool {
        match self {
            ConeSet::Whole => true,
            ConeSet::Orthant => x.as_slice().iter().all(|&v| v > 0.0),
            ConeSet::Box { lower, upper } => {
                x.as_slice().iter().zip(lower.iter().zip(upper)).all(|(&v, (&lo, &hi))| lo < v && v < hi)
            }
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        if let ConeSet::Box { lower, upper } = self {
            if lower.len() != dim || upper.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "box bounds",
                    expected: dim,
                    found: lower.len().min(upper.len()),
                });
            }
            if lower.iter().zip(upper).any(|(lo, hi)| lo > hi || lo.is_nan() || hi.is_nan()) {
                return Err(Error::InvalidProblem("box bounds need lower ≤ upper".into()));
            }
        }
        Ok(())
    }
}

/// One player's strategy set `{x ∈ C : Lx = b}` with a reference point
/// `e` satisfying `Le = b`.
#[derive(Clone, Debug)]
pub struct Player {
    cone: ConeSet,
    l: LinearMap,
    b: Point,
    e: Point,
    kernel: Projector,
}

impl Player {
    pub fn new(cone: ConeSet, l: LinearMap, b: Point, e: Point) -> Result<Self> {
        if e.space() != l.domain() || b.space() != l.codomain() {
            return Err(Error::SpaceMismatch("player constraint"));
        }
        cone.check(e.dim())?;
        let defect = (&l.apply(&e)? - &b).norm();
        if defect > 1e-10 * b.norm().max(1.0) {
            return Err(Error::InvalidProblem(format!("reference point violates Le = b by {defect:e}")));
        }
        if cone.strictly_contains(&e) {
            info!("reference point is interior to the cone; qualification holds");
        } else {
            warn!("reference point is not interior to the cone; qualification is assumed");
        }
        let kernel = Projector::onto_kernel(&l);
        Ok(Self { cone, l, b, e, kernel })
    }

    /// The probability simplex of `space`: nonnegative vectors with
    /// `Σ wᵢxᵢ = 1`, where `wᵢ` are the space weights, and `e` constant.
    pub fn simplex(space: &Space) -> Self {
        let w = space.weights();
        let l = LinearMap::new(space, &Space::euclidean(1), DMatrix::from_row_slice(1, w.len(), w))
            .expect("row of weights");
        let mass: f64 = w.iter().sum();
        let e = Point::raw(space, DVector::from_element(space.dim(), 1.0 / mass));
        Self::new(ConeSet::Orthant, l, Space::euclidean(1).point(&[1.0]).expect("finite"), e)
            .expect("consistent simplex data")
    }

    pub fn space(&self) -> &Space {
        self.l.domain()
    }

    pub fn cone(&self) -> &ConeSet {
        &self.cone
    }

    pub fn l(&self) -> &LinearMap {
        &self.l
    }

    pub fn b(&self) -> &Point {
        &self.b
    }

    pub fn e(&self) -> &Point {
        &self.e
    }

    /// The projector `Id − L*L*†` onto `ker L`.
    pub fn kernel_projector(&self) -> &Projector {
        &self.kernel
    }

    /// `‖Lx − b‖ + dist(x, C)`.
    pub fn feasibility(&self, x: &Point) -> f64 {
        (&self.l.apply_unchecked(x) - &self.b).norm() + self.cone.distance(x)
    }
}

type GradientFn = dyn Fn(&Point, &Point) -> (Point, Point) + Send + Sync;
type ValueFn = dyn Fn(&Point, &Point) -> f64 + Send + Sync;

/// `min_{x₁∈S₁} max_{x₂∈S₂} f(x₁, x₂)` for a convex–concave `f` with a
/// `χ`-lipschitzian gradient.
#[derive(Clone)]
pub struct SaddleProblem {
    players: [Player; 2],
    gradient: Arc<GradientFn>,
    chi: f64,
    gamma: f64,
}

impl fmt::Debug for SaddleProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SaddleProblem")
            .field("players", &self.players)
            .field("chi", &self.chi)
            .field("gamma", &self.gamma)
            .finish()
    }
}

/// Final strategies, the product-space iterate they come from and the trace.
#[derive(Clone, Debug)]
pub struct SaddleSolution {
    pub x1: Point,
    pub x2: Point,
    pub trace: SolveTrace,
}

impl SaddleProblem {
    /// `gradient(x₁, x₂)` returns `(∇₁f, ∇₂f)` in the players' metrics.
    pub fn new<G>(p1: Player, p2: Player, chi: f64, gradient: G) -> Result<Self>
    where
        G: Fn(&Point, &Point) -> (Point, Point) + Send + Sync + 'static,
    {
        if !(chi >= 0.0 && chi.is_finite()) {
            return Err(Error::InvalidProblem(format!("lipschitz constant must be finite, got {chi}")));
        }
        let (g1, g2) = gradient(p1.e(), p2.e());
        if g1.space() != p1.space() || g2.space() != p2.space() {
            return Err(Error::SpaceMismatch("gradient oracle"));
        }
        Ok(Self {
            players: [p1, p2],
            gradient: Arc::new(gradient),
            chi,
            gamma: default_gamma(chi),
        })
    }

    /// Like [`SaddleProblem::new`], but first compares the gradient oracle
    /// with central differences of `value` at 100 random points and rejects
    /// relative errors above `1e-4`.
    pub fn with_value<G, F>(p1: Player, p2: Player, chi: f64, gradient: G, value: F, seed: u64) -> Result<Self>
    where
        G: Fn(&Point, &Point) -> (Point, Point) + Send + Sync + 'static,
        F: Fn(&Point, &Point) -> f64 + Send + Sync + 'static,
    {
        let prob = Self::new(p1, p2, chi, gradient)?;
        let err = prob.gradient_error(&value, 100, seed);
        if !(err <= 1e-4) {
            return Err(Error::InvalidProblem(format!(
                "gradient oracle disagrees with finite differences (relative error {err:e})"
            )));
        }
        Ok(prob)
    }

    /// Largest relative error between directional derivatives from the
    /// oracle and central differences of `value`.
    pub fn gradient_error(&self, value: &ValueFn, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s1, s2) = (self.players[0].space().clone(), self.players[1].space().clone());
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x1 = &sample_ball(&mut rng, &s1, 1.0) + self.players[0].e();
            let x2 = &sample_ball(&mut rng, &s2, 1.0) + self.players[1].e();
            let h1 = sample_ball(&mut rng, &s1, 1.0);
            let h2 = sample_ball(&mut rng, &s2, 1.0);
            let step = 1e-5 * (1.0 + rng.random::<f64>());
            let up = value(&x1.axpy(step, &h1), &x2.axpy(step, &h2));
            let down = value(&x1.axpy(-step, &h1), &x2.axpy(-step, &h2));
            let numeric = (up - down) / (2.0 * step);
            let (g1, g2) = (self.gradient)(&x1, &x2);
            let exact = g1.inner(&h1) + g2.inner(&h2);
            let scale = g1.norm() * h1.norm() + g2.norm() * h2.norm();
            if scale > 0.0 {
                worst = worst.max((numeric - exact).abs() / scale);
            } else {
                worst = worst.max(numeric.abs());
            }
        }
        worst
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        check_gamma(gamma, self.chi)?;
        self.gamma = gamma;
        Ok(self)
    }

    pub fn players(&self) -> &[Player; 2] {
        &self.players
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gradient(&self, x1: &Point, x2: &Point) -> (Point, Point) {
        (self.gradient)(x1, x2)
    }

    pub fn product_space(&self) -> Space {
        Space::direct_sum(&[self.players[0].space().clone(), self.players[1].space().clone()])
    }

    /// `((Id − K₁)∇₁f, −(Id − K₂)∇₂f)` at `(e₁ + u₁, e₂ + u₂)`, where
    /// `Kᵢ = Lᵢ*Lᵢ*†`.
    fn field(&self, u1: &Point, u2: &Point) -> (Point, Point) {
        let [p1, p2] = &self.players;
        let (d1, d2) = (self.gradient)(&(p1.e() + u1), &(p2.e() + u2));
        (p1.kernel.apply(&d1), -&p2.kernel.apply(&d2))
    }
}

/// Runs the iteration
///
/// ```text
/// uᵢ = zᵢ − Lᵢ*Lᵢ*† zᵢ
/// g₁ = (Id − L₁*L₁*†)∇₁f(e₁ + u₁, e₂ + u₂)
/// g₂ = −(Id − L₂*L₂*†)∇₂f(e₁ + u₁, e₂ + u₂)
/// rᵢ = zᵢ − γgᵢ
/// pᵢ = P_{Cᵢ}(rᵢ + eᵢ) − eᵢ
/// vᵢ = pᵢ − Lᵢ*Lᵢ*† pᵢ
/// sᵢ = 2vᵢ − pᵢ + Lᵢ*Lᵢ*† rᵢ
/// h₁, h₂ as g₁, g₂ with uᵢ replaced by vᵢ
/// tᵢ = sᵢ − γhᵢ
/// zᵢ ← zᵢ + λ(tᵢ − rᵢ)
/// ```
///
/// from `z0` (default zero, i.e. starting at `eᵢ`). Strategies are read as
/// `xᵢ = eᵢ + (zᵢ − Lᵢ*Lᵢ*† zᵢ)`: the complementary part of the limit is a
/// multiple of the constraint multiplier and is not part of the strategy.
///
/// The extra trace columns are `affine_violation`, the largest
/// `‖Lᵢ(eᵢ + pᵢ) − bᵢ‖`, and `cone_violation`, the largest
/// `dist(eᵢ + vᵢ, Cᵢ)`; both vanish in the limit.
pub fn saddle_solve(
    prob: &SaddleProblem,
    z0: Option<(&Point, &Point)>,
    lambda: &Sequence,
    stop: &StopRule,
) -> Result<SaddleSolution> {
    let [pl1, pl2] = &prob.players;
    let (mut z1, mut z2) = match z0 {
        Some((a, b)) => (a.clone(), b.clone()),
        None => (pl1.space().zero(), pl2.space().zero()),
    };
    if z1.space() != pl1.space() || z2.space() != pl2.space() {
        return Err(Error::SpaceMismatch("saddle_solve initial point"));
    }
    check_gamma(prob.gamma, prob.chi)?;
    validate_lambda(lambda)?;
    stop.validate()?;
    let g = prob.gamma;
    let product = prob.product_space();
    let columns = ["affine_violation".to_string(), "cone_violation".to_string()];
    let mut recorder = Recorder::new(*stop, &columns, &Point::concat(&product, &[&z1, &z2]));
    let (k1, k2) = (&pl1.kernel, &pl2.kernel);
    for n in 0..stop.max_iter {
        let lam = lambda.at(n);
        let u1 = k1.apply(&z1);
        let u2 = k2.apply(&z2);
        let (g1, g2) = prob.field(&u1, &u2);
        let r1 = z1.axpy(-g, &g1);
        let r2 = z2.axpy(-g, &g2);
        let p1 = &pl1.cone.project(&(&r1 + pl1.e())) - pl1.e();
        let p2 = &pl2.cone.project(&(&r2 + pl2.e())) - pl2.e();
        let v1 = k1.apply(&p1);
        let v2 = k2.apply(&p2);
        let s1 = &(&v1.scale(2.0) - &p1) + &k1.apply_complement(&r1);
        let s2 = &(&v2.scale(2.0) - &p2) + &k2.apply_complement(&r2);
        let (h1, h2) = prob.field(&v1, &v2);
        let t1 = s1.axpy(-g, &h1);
        let t2 = s2.axpy(-g, &h2);
        let d1 = &t1 - &r1;
        let d2 = &t2 - &r2;
        let before = Point::concat(&product, &[&z1, &z2]);
        let next1 = z1.axpy(lam, &d1);
        let next2 = z2.axpy(lam, &d2);
        let after = Point::concat(&product, &[&next1, &next2]);
        let affine = pl1.l.apply_unchecked(&p1).norm().max(pl2.l.apply_unchecked(&p2).norm());
        let cone = pl1.cone.distance(&(pl1.e() + &v1)).max(pl2.cone.distance(&(pl2.e() + &v2)));
        let gap = Point::concat(&product, &[&s1, &s2]);
        let row = StepRecord {
            residual: (d1.norm().powi(2) + d2.norm().powi(2)).sqrt(),
            delta: g,
            lambda: lam,
            step_norm: (&after - &before).norm(),
            forward_gap: (&gap - &before).norm(),
            extras: vec![affine, cone],
        };
        let control = recorder.step(n, row, before.norm(), || after.clone());
        if after.is_finite() {
            z1 = next1;
            z2 = next2;
        }
        if let Control::Stop = control {
            break;
        }
    }
    Ok(SaddleSolution {
        x1: pl1.e() + &k1.apply(&z1),
        x2: pl2.e() + &k2.apply(&z2),
        trace: recorder.finish(),
    })
}

/// A finite game in which the row player picks `x₁` to minimize `x₁ᵀFx₂`
/// and the column player picks `x₂` to maximize it.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGame {
    payoff: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct MatrixGameSolution {
    pub x1: DVector<f64>,
    pub x2: DVector<f64>,
    pub value: f64,
    pub gap: f64,
    pub trace: SolveTrace,
}

impl MatrixGame {
    pub fn new(payoff: DMatrix<f64>) -> Result<Self> {
        if payoff.nrows() == 0 || payoff.ncols() == 0 {
            return Err(Error::InvalidProblem("payoff matrix is empty".into()));
        }
        if payoff.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("payoff matrix"));
        }
        Ok(Self { payoff })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n2 = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n2) {
            return Err(Error::InvalidProblem("payoff rows have different lengths".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), n2, &flat))
    }

    pub fn payoff(&self) -> &DMatrix<f64> {
        &self.payoff
    }

    pub fn shape(&self) -> (usize, usize) {
        self.payoff.shape()
    }

    pub fn value(&self, x1: &DVector<f64>, x2: &DVector<f64>) -> f64 {
        x1.dot(&(&self.payoff * x2))
    }

    /// Largest singular value of `F`.
    pub fn chi(&self) -> f64 {
        if self.payoff.iter().all(|&v| v == 0.0) {
            0.0
        } else {
            self.payoff.singular_values().max()
        }
    }

    /// The game as a saddle problem over two simplices, with `e` uniform.
    pub fn saddle_problem(&self) -> SaddleProblem {
        let (n1, n2) = self.shape();
        let (s1, s2) = (Space::euclidean(n1), Space::euclidean(n2));
        let f = self.payoff.clone();
        let ft = self.payoff.transpose();
        let (a, b) = (s1.clone(), s2.clone());
        SaddleProblem::new(Player::simplex(&s1), Player::simplex(&s2), self.chi(), move |x1, x2| {
            (Point::raw(&a, &f * x2.coords()), Point::raw(&b, &ft * x1.coords()))
        })
        .expect("consistent spaces")
    }
}

/// `max_j (x₁ᵀF)_j − min_i (Fx₂)_i`, nonnegative and zero exactly at
/// equilibria. Inputs off the simplex are projected onto it first.
pub fn duality_gap(game: &MatrixGame, x1: &DVector<f64>, x2: &DVector<f64>) -> Result<f64> {
    let (n1, n2) = game.shape();
    if x1.len() != n1 || x2.len() != n2 {
        return Err(Error::DimensionMismatch {
            context: "strategy length",
            expected: if x1.len() != n1 { n1 } else { n2 },
            found: if x1.len() != n1 { x1.len() } else { x2.len() },
        });
    }
    if x1.iter().chain(x2.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("strategy"));
    }
    let x1 = onto_simplex_warn(x1, "row strategy");
    let x2 = onto_simplex_warn(x2, "column strategy");
    Ok(gap_unchecked(game.payoff(), &x1, &x2))
}

fn gap_unchecked(f: &DMatrix<f64>, x1: &DVector<f64>, x2: &DVector<f64>) -> f64 {
    let best_column = (f.transpose() * x1).max();
    let best_row = (f * x2).min();
    best_column - best_row
}

fn onto_simplex_warn(x: &DVector<f64>, what: &str) -> DVector<f64> {
    let p = project_simplex(x);
    let dist = (&p - x).norm();
    if dist > 1e-9 {
        warn!("{what} is off the simplex by {dist:e}; projecting");
    }
    p
}

/// Euclidean projection onto `{x ≥ 0, Σxᵢ = 1}` by sorting.
pub fn project_simplex(x: &DVector<f64>) -> DVector<f64> {
    let mut sorted: Vec<f64> = x.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        cumulative += v;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            threshold = t;
        }
    }
    x.map(|v| (v - threshold).max(0.0))
}

/// Equilibrium strategies with `Cᵢ` the orthants, `Lᵢ` the coordinate sums,
/// `bᵢ = 1` and `eᵢ` uniform, run with unit relaxation.
pub fn matrix_game_solve(game: &MatrixGame, gamma: Option<f64>, stop: &StopRule) -> Result<MatrixGameSolution> {
    let mut prob = game.saddle_problem();
    if let Some(g) = gamma {
        prob = prob.with_gamma(g)?;
    }
    let sol = saddle_solve(&prob, None, &Sequence::Constant(1.0), stop)?;
    let x1 = sol.x1.into_coords();
    let x2 = sol.x2.into_coords();
    let value = game.value(&x1, &x2);
    let gap = gap_unchecked(game.payoff(), &x1, &x2);
    Ok(MatrixGameSolution {
        x1,
        x2,
        value,
        gap,
        trace: sol.trace,
    })
}

/// Quadrature nodes and positive weights on an interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::InvalidProblem("grid needs as many weights as nodes, at least one".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidProblem("zero-measure grid: weights must be positive".into()));
        }
        Ok(Self { nodes, weights })
    }

    /// `n ≥ 2` equally spaced nodes with trapezoid weights.
    pub fn trapezoid(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 || !(b > a) {
            return Err(Error::InvalidProblem("zero-measure grid: need b > a and n ≥ 2".into()));
        }
        let h = (b - a) / (n - 1) as f64;
        let nodes = (0..n).map(|k| a + h * k as f64).collect();
        let weights = (0..n).map(|k| if k == 0 || k == n - 1 { h / 2.0 } else { h }).collect();
        Self::new(nodes, weights)
    }

    /// `n ≥ 1` cell midpoints with equal weights.
    pub fn midpoint(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 1 || !(b > a) {
            return Err(Error::InvalidProblem("zero-measure grid: need b > a and n ≥ 1".into()));
        }
        let h = (b - a) / n as f64;
        Self::new((0..n).map(|k| a + h * (k as f64 + 0.5)).collect(), vec![h; n])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// A continuous game sampled on grids: kernel values `F(xᵢ, yⱼ)` with the
/// quadrature weights of both grids. Strategies are densities.
#[derive(Clone, Debug, PartialEq)]
pub struct GridGame {
    kernel: DMatrix<f64>,
    w1: DVector<f64>,
    w2: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct GridGameSolution {
    pub density1: DVector<f64>,
    pub density2: DVector<f64>,
    pub value: f64,
    pub gap: f64,
    pub trace: SolveTrace,
}

impl GridGame {
    pub fn new(kernel: DMatrix<f64>, w1: Vec<f64>, w2: Vec<f64>) -> Result<Self> {
        if kernel.nrows() != w1.len() || kernel.ncols() != w2.len() {
            return Err(Error::DimensionMismatch {
                context: "grid kernel",
                expected: w1.len() * w2.len(),
                found: kernel.len(),
            });
        }
        if w1.is_empty() || w2.is_empty() || w1.iter().chain(&w2).any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidProblem("zero-measure grid: weights must be positive".into()));
        }
        if kernel.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid kernel"));
        }
        Ok(Self {
            kernel,
            w1: DVector::from_vec(w1),
            w2: DVector::from_vec(w2),
        })
    }

    /// Samples `f` on the product of two grids.
    pub fn from_fn(g1: &Grid, g2: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let kernel = DMatrix::from_fn(g1.nodes.len(), g2.nodes.len(), |i, j| f(g1.nodes[i], g2.nodes[j]));
        Self::new(kernel, g1.weights.clone(), g2.weights.clone())
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn weights(&self) -> (&DVector<f64>, &DVector<f64>) {
        (&self.w1, &self.w2)
    }

    pub fn masses(&self) -> (f64, f64) {
        (self.w1.sum(), self.w2.sum())
    }

    pub fn spaces(&self) -> (Space, Space) {
        let s1 = Space::weighted(self.w1.iter().copied().collect()).expect("positive weights");
        let s2 = Space::weighted(self.w2.iter().copied().collect()).expect("positive weights");
        (s1, s2)
    }

    /// `‖F‖` in `L²` of the product measure.
    pub fn chi(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.w1.len() {
            for j in 0..self.w2.len() {
                total += self.kernel[(i, j)].powi(2) * self.w1[i] * self.w2[j];
            }
        }
        total.sqrt()
    }

    /// `∫∫ F f₁ f₂`.
    pub fn value(&self, f1: &DVector<f64>, f2: &DVector<f64>) -> f64 {
        f1.component_mul(&self.w1).dot(&(&self.kernel * f2.component_mul(&self.w2)))
    }

    /// `∫F(·, y) f₂(y) dy` on the first grid.
    fn against_second(&self, f2: &DVector<f64>) -> DVector<f64> {
        &self.kernel * f2.component_mul(&self.w2)
    }

    /// `∫F(x, ·) f₁(x) dx` on the second grid.
    fn against_first(&self, f1: &DVector<f64>) -> DVector<f64> {
        self.kernel.transpose() * f1.component_mul(&self.w1)
    }

    /// The same game on probability masses `πᵢ = wᵢfᵢ`, whose payoff matrix
    /// is `F` itself.
    pub fn as_matrix_game(&self) -> MatrixGame {
        MatrixGame::new(self.kernel.clone()).expect("finite kernel")
    }

    /// Pure best-response gap `max_y ∫F(x,y)f₁ − min_x ∫F(x,y)f₂` over the
    /// grid nodes.
    pub fn duality_gap(&self, f1: &DVector<f64>, f2: &DVector<f64>) -> f64 {
        self.against_first(f1).max() - self.against_second(f2).min()
    }

    /// The game as a generic saddle problem on the weighted spaces.
    pub fn saddle_problem(&self) -> SaddleProblem {
        let (s1, s2) = self.spaces();
        let game = self.clone();
        let (a, b) = (s1.clone(), s2.clone());
        SaddleProblem::new(Player::simplex(&s1), Player::simplex(&s2), self.chi(), move |x1, x2| {
            (
                Point::raw(&a, game.against_second(x2.coords())),
                Point::raw(&b, game.against_first(x1.coords())),
            )
        })
        .expect("consistent spaces")
    }
}

/// Weighted mean as a constant vector.
fn mean_field(f: &DVector<f64>, w: &DVector<f64>, mass: f64) -> DVector<f64> {
    DVector::from_element(f.len(), f.dot(w) / mass)
}

/// Densities for a grid game, with the iteration written on the grids:
///
/// ```text
/// uᵢ = zᵢ − 𝓜ᵢ(zᵢ)
/// g₁ = G₁ + (∫F(·,y)u₂(y)dy − 𝓜₁(∫F(·,y)u₂(y)dy))
/// g₂ = −G₂ − (∫F(x,·)u₁(x)dx − 𝓜₂(∫F(x,·)u₁(x)dx))
/// rᵢ = zᵢ − γgᵢ
/// pᵢ = [rᵢ + 1/mᵢ]₊ − 1/mᵢ
/// vᵢ = pᵢ − 𝓜ᵢ(pᵢ)
/// sᵢ = 2vᵢ − pᵢ + 𝓜ᵢ(rᵢ)
/// h₁, h₂ as g₁, g₂ with uᵢ replaced by vᵢ
/// tᵢ = sᵢ − γhᵢ
/// zᵢ ← zᵢ + λ(tᵢ − rᵢ)
/// ```
///
/// where `𝓜ᵢ` replaces a function by its mean, `mᵢ` is the grid mass and
/// `G₁ = 𝓜₂F(x, ·) − ∫∫F/(m₁m₂)`, `G₂ = 𝓜₁F(·, y) − ∫∫F/(m₁m₂)`. The default
/// step is `0.9/‖F‖`, with unit relaxation. Densities are read as
/// `1/mᵢ + zᵢ − 𝓜ᵢ(zᵢ)`.
pub fn grid_game_solve(game: &GridGame, gamma: Option<f64>, stop: &StopRule) -> Result<GridGameSolution> {
    let chi = game.chi();
    let g = match gamma {
        Some(g) => {
            check_gamma(g, chi)?;
            g
        }
        None => default_gamma(chi),
    };
    stop.validate()?;
    let (w1, w2) = (&game.w1, &game.w2);
    let (m1, m2) = game.masses();
    let (n1, n2) = (w1.len(), w2.len());
    let (s1, s2) = game.spaces();
    let product = Space::direct_sum(&[s1.clone(), s2.clone()]);
    let mean1 = |f: &DVector<f64>| mean_field(f, w1, m1);
    let mean2 = |f: &DVector<f64>| mean_field(f, w2, m2);
    let total = w1.dot(&(&game.kernel * w2)) / (m1 * m2);
    let big_g1 = game.against_second(&DVector::from_element(n2, 1.0 / m2)).add_scalar(-total);
    let big_g2 = game.against_first(&DVector::from_element(n1, 1.0 / m1)).add_scalar(-total);
    let field1 = |u2: &DVector<f64>| {
        let inner = game.against_second(u2);
        &big_g1 + &inner - mean1(&inner)
    };
    let field2 = |u1: &DVector<f64>| {
        let inner = game.against_first(u1);
        -(&big_g2 + &inner - mean2(&inner))
    };
    let pos = |r: &DVector<f64>, m: f64| r.map(|v| (v + 1.0 / m).max(0.0) - 1.0 / m);
    let stack = |a: &DVector<f64>, b: &DVector<f64>| {
        let (pa, pb) = (Point::raw(&s1, a.clone()), Point::raw(&s2, b.clone()));
        Point::concat(&product, &[&pa, &pb])
    };

    let mut z1 = DVector::zeros(n1);
    let mut z2 = DVector::zeros(n2);
    let columns = ["affine_violation".to_string(), "cone_violation".to_string()];
    let mut recorder = Recorder::new(*stop, &columns, &stack(&z1, &z2));
    for n in 0..stop.max_iter {
        let u1 = &z1 - mean1(&z1);
        let u2 = &z2 - mean2(&z2);
        let g1 = field1(&u2);
        let g2 = field2(&u1);
        let r1 = &z1 - &g1 * g;
        let r2 = &z2 - &g2 * g;
        let p1 = pos(&r1, m1);
        let p2 = pos(&r2, m2);
        let v1 = &p1 - mean1(&p1);
        let v2 = &p2 - mean2(&p2);
        let s1v = &v1 * 2.0 - &p1 + mean1(&r1);
        let s2v = &v2 * 2.0 - &p2 + mean2(&r2);
        let h1 = field1(&v2);
        let h2 = field2(&v1);
        let t1 = &s1v - &h1 * g;
        let t2 = &s2v - &h2 * g;
        let before = stack(&z1, &z2);
        let next1 = &z1 + (&t1 - &r1);
        let next2 = &z2 + (&t2 - &r2);
        let after = stack(&next1, &next2);
        let diff = stack(&(&t1 - &r1), &(&t2 - &r2));
        let affine = p1.dot(w1).abs().max(p2.dot(w2).abs());
        let cone1 = Point::raw(&s1, v1.map(|v| (-(v + 1.0 / m1)).max(0.0))).norm();
        let cone2 = Point::raw(&s2, v2.map(|v| (-(v + 1.0 / m2)).max(0.0))).norm();
        let row = StepRecord {
            residual: diff.norm(),
            delta: g,
            lambda: 1.0,
            step_norm: (&after - &before).norm(),
            forward_gap: (&stack(&s1v, &s2v) - &before).norm(),
            extras: vec![affine, cone1.max(cone2)],
        };
        let control = recorder.step(n, row, before.norm(), || after.clone());
        if after.is_finite() {
            z1 = next1;
            z2 = next2;
        }
        if let Control::Stop = control {
            break;
        }
    }
    let density1 = (&z1 - mean1(&z1)).add_scalar(1.0 / m1);
    let density2 = (&z2 - mean2(&z2)).add_scalar(1.0 / m2);
    Ok(GridGameSolution {
        value: game.value(&density1, &density2),
        gap: game.duality_gap(&density1, &density2),
        density1,
        density2,
        trace: recorder.finish(),
    })
}
