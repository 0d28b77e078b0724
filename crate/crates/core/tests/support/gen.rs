//! Seeded random instances for property and oracle tests.

#![allow(dead_code)]

use fpif_core::{LinearMap, Point, Projector, Space};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_point<R: Rng>(rng: &mut R, space: &Space) -> Point {
    Point::new(space, gaussian_vector(rng, space.dim())).unwrap()
}

/// `SSᵀ/n + (K − Kᵀ)/2`, monotone with a random skew part.
pub fn monotone_matrix<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let s = gaussian_matrix(rng, n, n);
    let k = gaussian_matrix(rng, n, n);
    &s * s.transpose() / n as f64 + (&k - k.transpose()) * 0.5
}

/// Monotone with `⟨x, Mx⟩ ≥ floor‖x‖²`.
pub fn strongly_monotone_matrix<R: Rng>(rng: &mut R, n: usize, floor: f64) -> DMatrix<f64> {
    monotone_matrix(rng, n) + DMatrix::identity(n, n) * floor
}

/// Symmetric positive definite with eigenvalues in `[lo, hi]`.
pub fn spd_matrix<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let q = gaussian_matrix(rng, n, n).qr().q();
    let eig = DVector::from_fn(n, |_, _| rng.random_range(lo..=hi));
    &q * DMatrix::from_diagonal(&eig) * q.transpose()
}

/// Projector onto the span of `k` random vectors, with `k` drawn in `0..=n`.
pub fn random_subspace<R: Rng>(rng: &mut R, space: &Space) -> Projector {
    let n = space.dim();
    let k = rng.random_range(0..=n);
    subspace_of_dim(rng, space, k)
}

pub fn subspace_of_dim<R: Rng>(rng: &mut R, space: &Space, k: usize) -> Projector {
    if k == 0 {
        return Projector::zero(space);
    }
    let basis: Vec<Point> = (0..k).map(|_| gaussian_point(rng, space)).collect();
    Projector::from_basis(space, &basis).unwrap()
}

pub fn linear_map(space: &Space, m: DMatrix<f64>) -> LinearMap {
    LinearMap::endomorphism(space, m).unwrap()
}
