//! Problem generators with known answers, shared by the oracle tests and
//! the acceptance run.

#![allow(dead_code)]

use fpif_core::fpif::{InclusionProblem, PrimalDualPoint};
use fpif_core::primal_dual::{DualBlock, PDProblem};
use fpif_core::solver::{SolveTrace, StopRule};
use fpif_core::{LinearMap, LipschitzMap, Point, Projector, ResolventOp, Space};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::gen;

/// Solves `x − p ∈ (γA)_V p` for `A = M · + c` directly: with `y = x − p`
/// the inclusion reads `P y + P⊥ p = γ(M(P p + P⊥ y) + c)`.
pub fn partial_resolvent_oracle(m: &DMatrix<f64>, c: &DVector<f64>, p: &DMatrix<f64>, gamma: f64, x: &DVector<f64>) -> DVector<f64> {
    let n = x.len();
    let q = DMatrix::identity(n, n) - p;
    let system = -p + &q - (m * (p - &q)) * gamma;
    let rhs = -(p * x) + (m * (&q * x)) * gamma + c * gamma;
    system.lu().solve(&rhs).expect("oracle system is regular")
}

pub fn random_space(rng: &mut ChaCha8Rng, n: usize, weighted: bool) -> Space {
    if weighted {
        Space::weighted((0..n).map(|_| rng.random_range(0.3..3.0)).collect()).unwrap()
    } else {
        Space::euclidean(n)
    }
}

/// `W⁻¹S` is monotone in the metric `W` whenever `S` is monotone.
pub fn metric_monotone(space: &Space, s: DMatrix<f64>) -> LinearMap {
    let w = space.weights();
    let m = DMatrix::from_fn(s.nrows(), s.ncols(), |i, j| s[(i, j)] / w[i]);
    LinearMap::endomorphism(space, m).unwrap()
}

pub struct Planted {
    pub prob: InclusionProblem,
    pub solution: PrimalDualPoint,
}

/// An affine problem whose solution `(x*, y*)` is chosen first: `A` is
/// strongly monotone with `y* ∈ A x* + P_V B x*`.
pub fn planted(rng: &mut ChaCha8Rng, n: usize, weighted: bool) -> Planted {
    let space = random_space(rng, n, weighted);
    let v = gen::random_subspace(rng, &space);
    let x_star = v.apply(&gen::gaussian_point(rng, &space));
    let y_star = v.apply_complement(&gen::gaussian_point(rng, &space));
    let skew = gen::gaussian_matrix(rng, n, n);
    let b_mat = metric_monotone(&space, (&skew - skew.transpose()) * 0.5 + gen::spd_matrix(rng, n, 0.0, 1.0));
    let b = LipschitzMap::affine(&b_mat, &gen::gaussian_point(rng, &space)).unwrap();
    let a_mat = metric_monotone(&space, gen::strongly_monotone_matrix(rng, n, 0.3));
    let target = &y_star - &v.apply(&b.apply(&x_star).unwrap());
    let shift = &target - &a_mat.apply(&x_star).unwrap();
    let a = ResolventOp::affine(&a_mat, &shift).unwrap();
    let prob = InclusionProblem::new(a, b, v).unwrap();
    Planted {
        prob,
        solution: PrimalDualPoint { x: x_star, y: y_star },
    }
}

pub struct Boxes {
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

/// `m` boxes sharing at least the point `0`.
pub fn overlapping_boxes(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Boxes {
    let lower = (0..m).map(|_| (0..n).map(|_| rng.random_range(-3.0..0.0)).collect()).collect();
    let upper = (0..m).map(|_| (0..n).map(|_| rng.random_range(0.0..3.0)).collect()).collect();
    Boxes { lower, upper }
}

impl Boxes {
    pub fn ops(&self, space: &Space) -> Vec<ResolventOp> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| ResolventOp::normal_cone_box(space, l, u).unwrap())
            .collect()
    }

    /// Coordinatewise clip onto the intersection.
    pub fn clip(&self, c: &[f64]) -> Vec<f64> {
        (0..c.len())
            .map(|k| {
                let lo = self.lower.iter().map(|l| l[k]).fold(f64::NEG_INFINITY, f64::max);
                let hi = self.upper.iter().map(|u| u[k]).fold(f64::INFINITY, f64::min);
                c[k].clamp(lo, hi)
            })
            .collect()
    }
}

pub fn random_weights(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..2.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let head: f64 = w[..m - 1].iter().sum();
    w[m - 1] = 1.0 - head;
    w
}

/// Largest coordinate gap between matching snapshots. A run that hit an
/// exact fixed point stops early and its last iterate is compared with the
/// remaining snapshots of the other.
pub fn snapshot_deviation(a: &SolveTrace, b: &SolveTrace) -> f64 {
    let (short, long) = if a.iterates.len() <= b.iterates.len() { (a, b) } else { (b, a) };
    let last = &short.iterates.last().unwrap().1;
    long.iterates
        .iter()
        .enumerate()
        .map(|(k, (j, q))| match short.iterates.get(k) {
            Some((i, p)) => {
                assert_eq!(i, j);
                (p.coords() - q.coords()).amax()
            }
            None => (last.coords() - q.coords()).amax(),
        })
        .fold(0.0, f64::max)
}

pub struct BlockData {
    pub l: DMatrix<f64>,
    pub b: DVector<f64>,
    pub mb: DMatrix<f64>,
    pub cb: DVector<f64>,
    pub md: DMatrix<f64>,
    pub v: Projector,
}

pub struct Instance {
    pub ma: DMatrix<f64>,
    pub ca: DVector<f64>,
    pub mc: DMatrix<f64>,
    pub z: DVector<f64>,
    pub u: Projector,
    pub blocks: Vec<BlockData>,
}

pub fn random_instance(rng: &mut ChaCha8Rng, full_subspaces: bool) -> Instance {
    let n = rng.random_range(1..=6);
    let h = Space::euclidean(n);
    let m = rng.random_range(1..=2);
    let k = rng.random_range(1..=n);
    let u = if full_subspaces { Projector::identity(&h) } else { gen::subspace_of_dim(rng, &h, k) };
    let blocks = (0..m)
        .map(|_| {
            let d = rng.random_range(1..=6);
            let g = Space::euclidean(d);
            let v = if full_subspaces { Projector::identity(&g) } else { gen::random_subspace(rng, &g) };
            BlockData {
                l: gen::gaussian_matrix(rng, d, n),
                b: gen::gaussian_vector(rng, d),
                mb: gen::monotone_matrix(rng, d),
                cb: gen::gaussian_vector(rng, d),
                md: gen::spd_matrix(rng, d, 0.5, 2.0),
                v,
            }
        })
        .collect();
    Instance {
        ma: gen::strongly_monotone_matrix(rng, n, 0.5),
        ca: gen::gaussian_vector(rng, n),
        mc: gen::spd_matrix(rng, n, 0.0, 1.0),
        z: gen::gaussian_vector(rng, n),
        u,
        blocks,
    }
}

impl Instance {
    pub fn problem(&self) -> PDProblem {
        let n = self.z.len();
        let h = Space::euclidean(n);
        let blocks = self
            .blocks
            .iter()
            .map(|blk| {
                let g = Space::euclidean(blk.b.len());
                let b_op = ResolventOp::affine(&gen::linear_map(&g, blk.mb.clone()), &Point::new(&g, blk.cb.clone()).unwrap()).unwrap();
                let d_partial = DualBlock::d_partial_of_linear(&gen::linear_map(&g, blk.md.clone()), &blk.v).unwrap();
                let l = LinearMap::new(&h, &g, blk.l.clone()).unwrap();
                DualBlock::from_catalog(&b_op, d_partial, l, blk.v.clone(), Point::new(&g, blk.b.clone()).unwrap()).unwrap()
            })
            .collect();
        PDProblem::new(
            ResolventOp::affine(&gen::linear_map(&h, self.ma.clone()), &Point::new(&h, self.ca.clone()).unwrap()).unwrap(),
            self.u.clone(),
            LipschitzMap::linear(&gen::linear_map(&h, self.mc.clone())).unwrap(),
            Point::new(&h, self.z.clone()).unwrap(),
            blocks,
        )
        .unwrap()
    }

    /// Solves the optimality system as one linear system. Unknowns per
    /// block are `u ∈ V`, `n_V ∈ V⊥`, `w_B ∈ (B)_{V⊥}u` and `w_D = (D)_{V⊥}u`:
    ///
    /// ```text
    /// M_A x + c_A − z + M_C x + Σ Lᵢᵀuᵢ + n_U = 0,   x ∈ U, n_U ∈ U⊥
    /// P_V(Lx − b) = w_B + w_D + n_V
    /// P⊥w_B + u = M_B P w_B + c_B
    /// P⊥w_D + u = M_D P w_D
    /// ```
    pub fn oracle(&self) -> (DVector<f64>, Vec<DVector<f64>>) {
        let n = self.z.len();
        let dims: Vec<usize> = self.blocks.iter().map(|b| b.b.len()).collect();
        let cols = 2 * n + dims.iter().map(|d| 4 * d).sum::<usize>();
        let rows = 3 * n + dims.iter().map(|d| 5 * d).sum::<usize>();
        let mut sys = DMatrix::zeros(rows, cols);
        let mut rhs = DVector::zeros(rows);
        let id_n = DMatrix::<f64>::identity(n, n);
        let pu = self.u.matrix().clone();
        let qu = &id_n - &pu;
        // primal
        sys.view_mut((0, 0), (n, n)).copy_from(&(&self.ma + &self.mc));
        sys.view_mut((0, n), (n, n)).copy_from(&id_n);
        rhs.rows_mut(0, n).copy_from(&(&self.z - &self.ca));
        sys.view_mut((n, 0), (n, n)).copy_from(&qu);
        sys.view_mut((2 * n, n), (n, n)).copy_from(&pu);
        let (mut row, mut col) = (3 * n, 2 * n);
        for (blk, &d) in self.blocks.iter().zip(&dims) {
            let id = DMatrix::<f64>::identity(d, d);
            let p = blk.v.matrix().clone();
            let q = &id - &p;
            let (cu, cn, cwb, cwd) = (col, col + d, col + 2 * d, col + 3 * d);
            sys.view_mut((0, cu), (n, d)).copy_from(&blk.l.transpose());
            // P(Lx − b) − w_B − w_D − n_V = 0
            sys.view_mut((row, 0), (d, n)).copy_from(&(&p * &blk.l));
            sys.view_mut((row, cwb), (d, d)).copy_from(&(-&id));
            sys.view_mut((row, cwd), (d, d)).copy_from(&(-&id));
            sys.view_mut((row, cn), (d, d)).copy_from(&(-&id));
            rhs.rows_mut(row, d).copy_from(&(&p * &blk.b));
            // P⊥w_B + u − M_B P w_B = c_B
            let r = row + d;
            sys.view_mut((r, cwb), (d, d)).copy_from(&(&q - &blk.mb * &p));
            sys.view_mut((r, cu), (d, d)).copy_from(&id);
            rhs.rows_mut(r, d).copy_from(&blk.cb);
            // P⊥w_D + u − M_D P w_D = 0
            let r = row + 2 * d;
            sys.view_mut((r, cwd), (d, d)).copy_from(&(&q - &blk.md * &p));
            sys.view_mut((r, cu), (d, d)).copy_from(&id);
            // u ∈ V, n_V ∈ V⊥
            sys.view_mut((row + 3 * d, cu), (d, d)).copy_from(&q);
            sys.view_mut((row + 4 * d, cn), (d, d)).copy_from(&p);
            row += 5 * d;
            col += 4 * d;
        }
        let svd = sys.clone().svd(true, true);
        let sol = svd.solve(&rhs, 1e-12).unwrap();
        let fit = (&sys * &sol - &rhs).amax();
        assert!(fit <= 1e-8, "oracle system is inconsistent: {fit:e}");
        let x = sol.rows(0, n).into_owned();
        let mut col = 2 * n;
        let mut duals = Vec::new();
        for &d in &dims {
            duals.push(sol.rows(col, d).into_owned());
            col += 4 * d;
        }
        (x, duals)
    }
}

pub fn tight() -> StopRule {
    StopRule::default().with_tol(1e-11).with_max_iter(400_000)
}

pub fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect()
}

/// `|Σ wᵢfᵢ − 1| + Σ wᵢ max(−fᵢ, 0)`.
pub fn density_feasibility(f: &DVector<f64>, w: &DVector<f64>) -> f64 {
    (f.dot(w) - 1.0).abs() + f.iter().zip(w.iter()).map(|(v, wi)| wi * (-v).max(0.0)).sum::<f64>()
}
