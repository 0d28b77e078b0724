//! Residuals of a stored solution, recomputed without iterating.

use std::path::Path;

use fpif_core::fpif::PrimalDualPoint;
use fpif_core::primal_dual::PDSolution;
use fpif_core::{Point, Space};
use nalgebra::DVector;
use serde_json::{json, Map, Value};

use crate::build::{assemble, Assembled};
use crate::config::{LoadedConfig, Reference};
use crate::output::Solution;
use crate::CliError;

pub const DEFAULT_VERIFY_TOL: f64 = 1e-6;

/// Named residuals in a fixed order, and the names that decide pass/fail.
#[derive(Clone, Debug, PartialEq)]
pub struct Checks {
    pub values: Vec<(String, f64)>,
    pub decisive: Vec<&'static str>,
}

impl Checks {
    fn new(decisive: &[&'static str]) -> Self {
        Self {
            values: Vec::new(),
            decisive: decisive.to_vec(),
        }
    }

    fn add(&mut self, name: &str, v: f64) {
        self.values.push((name.to_string(), v));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// True when every decisive residual is finite and at most `tol`.
    pub fn within(&self, tol: f64) -> bool {
        self.decisive
            .iter()
            .all(|name| self.get(name).is_some_and(|v| v.is_finite() && v <= tol))
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (name, v) in &self.values {
            map.insert(name.clone(), finite_json(*v));
        }
        Value::Object(map)
    }
}

/// Non-finite numbers become strings, since JSON has no spelling for them.
pub fn finite_json(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn point(space: &Space, values: &[f64]) -> Result<Point, CliError> {
    Ok(Point::new(space, DVector::from_column_slice(values))?)
}

fn simplex_violation(mass: f64, negative: f64) -> f64 {
    (mass - 1.0).abs() + negative.max(0.0)
}

pub fn checks(assembled: &Assembled, sol: &Solution) -> Result<Checks, CliError> {
    match assembled {
        Assembled::Tseng { a, b, .. } => {
            let space = a.space();
            let delta = sol.step()?;
            let x = point(space, sol.require("x", space.dim())?)?;
            let forward = x.axpy(-delta, &b.apply(&x)?);
            let backward = a.resolvent(delta, &forward)?;
            let mut c = Checks::new(&["fixed_point_residual"]);
            c.add("fixed_point_residual", (&x - &backward).norm());
            Ok(c)
        }
        Assembled::Fpif { prob, .. } => {
            let prob = prob.clone().with_gamma(sol.step()?)?;
            let space = prob.a().space();
            let x = point(space, sol.require("x", space.dim())?)?;
            let y = point(space, sol.require("y", space.dim())?)?;
            let mut c = Checks::new(&["inclusion_residual"]);
            c.add("primal_leak", prob.v().apply_complement(&x).norm());
            c.add("dual_leak", prob.v().apply(&y).norm());
            c.add("inclusion_residual", prob.inclusion_residual(&PrimalDualPoint { x, y })?);
            Ok(c)
        }
        Assembled::SumM(prob) => {
            let prob = prob.clone().with_gamma(sol.step()?)?;
            let space = prob.base_space().clone();
            let x = point(&space, sol.require("x", space.dim())?)?;
            let z = (0..prob.ops().len())
                .map(|i| point(&space, sol.require(&format!("z{}", i + 1), space.dim())?))
                .collect::<Result<Vec<_>, _>>()?;
            let mut consensus = space.zero();
            for (zi, w) in z.iter().zip(prob.weights()) {
                consensus = consensus.axpy(*w, zi);
            }
            let mut c = Checks::new(&["certificate", "consensus_gap"]);
            c.add("certificate", prob.certificate(&z)?);
            c.add("consensus_gap", (&x - &consensus).norm());
            Ok(c)
        }
        Assembled::PrimalDual(prob) => {
            let prob = prob.clone().with_gamma(sol.step()?)?;
            let h = prob.primal_space();
            let x = point(h, sol.require("x", h.dim())?)?;
            let u = prob
                .blocks()
                .iter()
                .enumerate()
                .map(|(i, blk)| point(blk.space(), sol.require(&format!("u{}", i + 1), blk.space().dim())?))
                .collect::<Result<Vec<_>, _>>()?;
            let product = prob.product_space();
            let multiplier = point(&product, sol.require("multiplier", product.dim())?)?;
            let mut c = Checks::new(&["kkt_residual"]);
            c.add("kkt_residual", prob.kkt_residual(&PDSolution { x, u, multiplier })?);
            Ok(c)
        }
        Assembled::MatrixGame(game) => {
            let (n1, n2) = game.shape();
            let x1 = DVector::from_column_slice(sol.require("x1", n1)?);
            let x2 = DVector::from_column_slice(sol.require("x2", n2)?);
            let feasibility =
                simplex_violation(x1.sum(), -x1.min()) + simplex_violation(x2.sum(), -x2.min());
            let mut c = Checks::new(&["gap", "feasibility"]);
            c.add("gap", fpif_core::games::duality_gap(game, &x1, &x2)?);
            c.add("value", game.value(&x1, &x2));
            c.add("feasibility", feasibility);
            Ok(c)
        }
        Assembled::GridGame(game) => {
            let (w1, w2) = game.weights();
            let f1 = DVector::from_column_slice(sol.require("density1", w1.len())?);
            let f2 = DVector::from_column_slice(sol.require("density2", w2.len())?);
            let feasibility =
                simplex_violation(f1.dot(w1), -f1.min()) + simplex_violation(f2.dot(w2), -f2.min());
            let mut c = Checks::new(&["gap", "feasibility"]);
            c.add("gap", game.duality_gap(&f1, &f2));
            c.add("value", game.value(&f1, &f2));
            c.add("feasibility", feasibility);
            Ok(c)
        }
    }
}

/// Largest absolute deviation from the reference blocks.
pub fn reference_error(reference: &Reference, sol: &Solution) -> Result<f64, CliError> {
    let mut worst: f64 = 0.0;
    for blk in &reference.blocks {
        let got = sol.require(&blk.name, blk.values.len())?;
        for (a, b) in got.iter().zip(&blk.values) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub kind: &'static str,
    pub checks: Checks,
    pub reference_error: Option<f64>,
    pub reference_tol: Option<f64>,
    pub tol: f64,
    pub ok: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "kind": self.kind,
            "checks": self.checks.to_json(),
            "tol": self.tol,
            "ok": self.ok,
        });
        if let (Some(err), Some(tol)) = (self.reference_error, self.reference_tol) {
            v["reference_error"] = finite_json(err);
            v["reference_tol"] = json!(tol);
        }
        v
    }
}

pub fn verify_solution(loaded: &LoadedConfig, sol: &Solution, tol: f64) -> Result<VerifyReport, CliError> {
    let assembled = assemble(loaded)?;
    let checks = checks(&assembled, sol)?;
    let reference = loaded.config.reference.as_ref();
    let reference_error = reference.map(|r| reference_error(r, sol)).transpose()?;
    let reference_tol = reference.map(|r| r.tol);
    let reference_ok = match (reference_error, reference_tol) {
        (Some(e), Some(t)) => e <= t,
        _ => true,
    };
    let ok = checks.within(tol) && reference_ok;
    Ok(VerifyReport {
        kind: loaded.config.problem.kind(),
        checks,
        reference_error,
        reference_tol,
        tol,
        ok,
    })
}

pub fn verify(solution_path: &Path, config_path: &Path, tol: f64) -> Result<VerifyReport, CliError> {
    let loaded = LoadedConfig::from_path(config_path)?;
    let sol = Solution::read(solution_path)?;
    verify_solution(&loaded, &sol, tol)
}
