//! Sampled monotonicity and lipschitz estimates.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::{Point, Space};

#[derive(Clone, Copy, Debug)]
pub struct ProbeConfig {
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            radius: 10.0,
            seed: 42,
        }
    }
}

/// Extremes over sampled pairs `(x, y)`, with `d = x − y` and `e = Tx − Ty`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeReport {
    /// `min ⟨d, e⟩`
    pub min_inner: f64,
    /// `max ‖e‖/‖d‖`
    pub max_ratio: f64,
    /// `min ⟨d, e⟩/‖d‖²`, the sampled strong monotonicity modulus
    pub min_strong: f64,
    /// `min ⟨d, e⟩/‖e‖²` over pairs with `e ≠ 0`, the sampled cocoercivity modulus
    pub min_cocoercive: f64,
    /// `min ⟨d, e⟩ − ‖e‖²`, nonnegative for firmly nonexpansive maps
    pub min_firm_gap: f64,
}

/// Uniform sample from the ball of the given radius in the space metric.
pub fn sample_ball<R: Rng>(rng: &mut R, space: &Space, radius: f64) -> Point {
    let n = space.dim();
    let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = space.norm(&g);
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    let scale = if norm > 0.0 { r / norm } else { 0.0 };
    Point::raw(space, g * scale)
}

pub fn probe(config: &ProbeConfig, space: &Space, map: impl Fn(&Point) -> Point) -> ProbeReport {
    assert!(config.samples >= 1, "at least one sample is needed");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = ProbeReport {
        min_inner: f64::INFINITY,
        max_ratio: 0.0,
        min_strong: f64::INFINITY,
        min_cocoercive: f64::INFINITY,
        min_firm_gap: f64::INFINITY,
    };
    for _ in 0..config.samples {
        let x = sample_ball(&mut rng, space, config.radius);
        let y = sample_ball(&mut rng, space, config.radius);
        let d = &x - &y;
        let e = &map(&x) - &map(&y);
        let dd = d.inner(&d);
        if dd == 0.0 {
            continue;
        }
        let inner = d.inner(&e);
        let ee = e.inner(&e);
        report.min_inner = report.min_inner.min(inner);
        report.max_ratio = report.max_ratio.max((ee / dd).sqrt());
        report.min_strong = report.min_strong.min(inner / dd);
        if ee > 0.0 {
            report.min_cocoercive = report.min_cocoercive.min(inner / ee);
        }
        report.min_firm_gap = report.min_firm_gap.min(inner - ee);
    }
    report
}

/// Smallest sampled `⟨x − y, Tx − Ty⟩`.
pub fn probe_monotone(config: &ProbeConfig, space: &Space, map: impl Fn(&Point) -> Point) -> f64 {
    probe(config, space, map).min_inner
}

/// Largest sampled `‖Tx − Ty‖/‖x − y‖`.
pub fn probe_lipschitz(config: &ProbeConfig, space: &Space, map: impl Fn(&Point) -> Point) -> f64 {
    probe(config, space, map).max_ratio
}
