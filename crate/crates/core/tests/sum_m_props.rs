#[path = "support/gen.rs"]
mod gen;
#[path = "support/oracles.rs"]
mod oracles;

use oracles::{overlapping_boxes, random_weights, snapshot_deviation};
use fpif_core::fpif::{fpif_solve, InclusionProblem};
use fpif_core::solver::{Sequence, Status, StepSchedule, StopRule};
use fpif_core::sum_m::{sum_solve, two_op_parallel_solve, SumProblem};
use fpif_core::{LinearMap, LipschitzMap, Point, ResolventOp, Space};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn box_intersections_with_diagonal_drift_hit_the_clipped_point() {
    // B x = D(x − c) with D positive diagonal: the zero clips c coordinatewise
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let stop = StopRule::default().with_tol(1e-12);
    for k in 0..12 {
        let m = 2 + k % 4;
        let n = 1 + k % 5;
        let space = Space::euclidean(n);
        let boxes = overlapping_boxes(&mut rng, m, n);
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0)));
        let dc = &d * nalgebra::DVector::from_column_slice(&c);
        let b = LipschitzMap::affine(&LinearMap::endomorphism(&space, d).unwrap(), &Point::new(&space, -dc).unwrap()).unwrap();
        let weights = if k % 2 == 0 { None } else { Some(random_weights(&mut rng, m)) };
        let prob = SumProblem::new(boxes.ops(&space), b, weights).unwrap();
        let (sol, trace) = sum_solve(&prob, None, &Sequence::Constant(1.0), &stop).unwrap();
        assert_eq!(trace.status, Status::Converged, "case {k}");
        let expected = boxes.clip(&c);
        for i in 0..n {
            assert!((sol.x[i] - expected[i]).abs() <= 1e-6, "case {k}: {} vs {}", sol.x[i], expected[i]);
        }
        assert!(prob.certificate(&sol.z).unwrap() <= 1e-6);
    }
}

#[test]
fn two_operators_match_the_parallel_method_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let stop = StopRule::fixed_iterations(500);
    for k in 0..6 {
        let n = 1 + k;
        let space = Space::euclidean(n);
        let boxes = overlapping_boxes(&mut rng, 1, n);
        let a1 = boxes.ops(&space).remove(0);
        let a2 = if k % 2 == 0 {
            ResolventOp::l1(&space, 0.7).unwrap()
        } else {
            ResolventOp::affine(&gen::linear_map(&space, gen::monotone_matrix(&mut rng, n)), &gen::gaussian_point(&mut rng, &space)).unwrap()
        };
        let gamma = rng.random_range(0.2..2.0);
        let lambda = Sequence::Constant(if k % 3 == 0 { 1.0 } else { 0.8 });
        let z1 = gen::gaussian_point(&mut rng, &space);
        let z2 = gen::gaussian_point(&mut rng, &space);
        let prob = SumProblem::new(vec![a1.clone(), a2.clone()], LipschitzMap::zero(&space), None)
            .unwrap()
            .with_gamma(gamma)
            .unwrap();
        let (sol, ours) = sum_solve(&prob, Some(&[z1.clone(), z2.clone()]), &lambda, &stop).unwrap();
        let (x, theirs) = two_op_parallel_solve(&a1, &a2, &z1, &z2, gamma, &lambda, &stop).unwrap();
        let dev = snapshot_deviation(&ours, &theirs);
        assert!(dev <= 1e-12, "case {k}: deviation {dev:e}");
        assert!((&sol.x - &x).norm() <= 1e-12);
    }
}

/// The product operator `(x₁, …, x_m) ↦ A₁x₁/ω₁ × … × A_m x_m/ω_m`.
fn product_operator(prob: &SumProblem) -> ResolventOp {
    let base = prob.base_space().clone();
    let blocks = vec![base; prob.ops().len()];
    let ops = prob.ops().to_vec();
    let w = prob.weights().to_vec();
    ResolventOp::from_fn(&prob.product_space(), "product", move |g, z| {
        let parts = z.split(&blocks);
        let out: Vec<Point> = parts
            .iter()
            .zip(&ops)
            .zip(&w)
            .map(|((p, a), wi)| a.resolvent(g / wi, p).unwrap())
            .collect();
        Point::concat(z.space(), &out.iter().collect::<Vec<_>>())
    })
}

#[test]
fn agrees_with_the_constrained_solver_on_the_product_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let stop = StopRule::fixed_iterations(200);
    for k in 0..4 {
        let m = 2 + k;
        let n = 2 + k % 3;
        let space = Space::euclidean(n);
        let boxes = overlapping_boxes(&mut rng, m, n);
        let b_mat = gen::linear_map(&space, gen::monotone_matrix(&mut rng, n));
        let b = LipschitzMap::affine(&b_mat, &gen::gaussian_point(&mut rng, &space)).unwrap();
        let prob = SumProblem::new(boxes.ops(&space), b.clone(), Some(random_weights(&mut rng, m))).unwrap();
        let product = prob.product_space();
        let b_prod = LipschitzMap::block_diagonal(&product, &vec![b; m]).unwrap();
        let lifted = InclusionProblem::new(product_operator(&prob), b_prod, prob.diagonal_projector())
            .unwrap()
            .with_gamma(prob.gamma())
            .unwrap();
        let z: Vec<Point> = (0..m).map(|_| gen::gaussian_point(&mut rng, &space)).collect();
        let stacked = Point::concat(&product, &z.iter().collect::<Vec<_>>());
        let v = lifted.v();
        let x0 = v.apply(&stacked);
        let y0 = v.apply_complement(&stacked).scale(1.0 / lifted.gamma());
        let lambda = Sequence::Constant(0.9);
        let schedule = StepSchedule::auto(1.0, lambda.clone(), lifted.gamma() * lifted.chi());
        let (_, theirs) = fpif_solve(&lifted, &x0, &y0, &schedule, &stop).unwrap();
        let (_, ours) = sum_solve(&prob, Some(&z), &lambda, &stop).unwrap();
        let dev = snapshot_deviation(&ours, &theirs);
        assert!(dev <= 1e-10, "case {k}: deviation {dev:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn relabeling_the_operators_permutes_the_iterates(seed in any::<u64>(), m in 2usize..5, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = Space::euclidean(n);
        let boxes = overlapping_boxes(&mut rng, m, n);
        let ops = boxes.ops(&space);
        let weights = random_weights(&mut rng, m);
        let b = LipschitzMap::affine(&gen::linear_map(&space, gen::monotone_matrix(&mut rng, n)), &gen::gaussian_point(&mut rng, &space)).unwrap();
        let z: Vec<Point> = (0..m).map(|_| gen::gaussian_point(&mut rng, &space)).collect();
        let order: Vec<usize> = (0..m).rev().collect();
        let stop = StopRule::fixed_iterations(100);
        let lambda = Sequence::Constant(1.0);
        let p1 = SumProblem::new(ops.clone(), b.clone(), Some(weights.clone())).unwrap();
        let p2 = SumProblem::new(
            order.iter().map(|&i| ops[i].clone()).collect(),
            b,
            Some(order.iter().map(|&i| weights[i]).collect()),
        )
        .unwrap();
        let (s1, _) = sum_solve(&p1, Some(&z), &lambda, &stop).unwrap();
        let zp: Vec<Point> = order.iter().map(|&i| z[i].clone()).collect();
        let (s2, _) = sum_solve(&p2, Some(&zp), &lambda, &stop).unwrap();
        prop_assert!((&s1.x - &s2.x).norm() <= 1e-12 * (1.0 + s1.x.norm()));
        for (k, &i) in order.iter().enumerate() {
            prop_assert!((&s1.z[i] - &s2.z[k]).norm() <= 1e-12 * (1.0 + s1.z[i].norm()));
        }
    }
}
