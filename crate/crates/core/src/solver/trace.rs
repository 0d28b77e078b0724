use std::io::Write;

use crate::error::{Error, Result};
use crate::hilbert::Point;

/// When to store iterate snapshots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Snapshots {
    /// Every iterate below 10 000, then every `10^(d−4)`-th iterate where
    /// `d` is the number of decimal digits of the index.
    Auto,
    Every(usize),
    /// Only the initial and final iterates.
    Endpoints,
}

impl Snapshots {
    fn keeps(&self, k: usize) -> bool {
        match *self {
            Snapshots::Auto => {
                if k < 10_000 {
                    return true;
                }
                let digits = (k as f64).log10().floor() as u32 + 1;
                k % 10usize.pow(digits - 4) == 0
            }
            Snapshots::Every(stride) => k % stride.max(1) == 0,
            Snapshots::Endpoints => k == 0,
        }
    }
}

/// Stopping rule: relative residual and relative step both below their
/// tolerances, or `max_iter` iterations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    pub residual_tol: f64,
    pub iterate_tol: f64,
    pub max_iter: usize,
    pub snapshots: Snapshots,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            residual_tol: 1e-8,
            iterate_tol: 1e-8,
            max_iter: 100_000,
            snapshots: Snapshots::Auto,
        }
    }
}

impl StopRule {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.residual_tol = tol;
        self.iterate_tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_snapshots(mut self, snapshots: Snapshots) -> Self {
        self.snapshots = snapshots;
        self
    }

    /// Runs exactly `n` iterations unless a residual is exactly zero.
    pub fn fixed_iterations(n: usize) -> Self {
        Self {
            residual_tol: f64::MIN_POSITIVE,
            iterate_tol: f64::MIN_POSITIVE,
            max_iter: n,
            snapshots: Snapshots::Every(1),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0 && self.iterate_tol > 0.0) {
            return Err(Error::InvalidSchedule("stopping tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidSchedule("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    Diverged,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::Diverged => "diverged",
        }
    }
}

/// Per-iteration record of a solve. Row `n` describes the step from
/// iterate `n` to iterate `n + 1`; snapshots are indexed by iterate number.
#[derive(Clone, Debug)]
pub struct SolveTrace {
    pub iterates: Vec<(usize, Point)>,
    /// `‖tₙ − rₙ‖`
    pub residuals: Vec<f64>,
    /// `(δₙ, λₙ)`
    pub step_params: Vec<(f64, f64)>,
    /// `‖zₙ₊₁ − zₙ‖`
    pub step_norms: Vec<f64>,
    /// `‖sₙ − zₙ‖`
    pub forward_gaps: Vec<f64>,
    /// Solver-specific columns.
    pub extras: Vec<(String, Vec<f64>)>,
    pub status: Status,
}

impl SolveTrace {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }

    pub fn extra(&self, name: &str) -> Option<&[f64]> {
        self.extras.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Partial sums of `λₙ(1 − λₙ)‖tₙ − rₙ‖² + (1 − (δₙη)²)‖sₙ − zₙ‖²`, each
    /// bounded by `‖z₀ − z*‖²` for any zero `z*`.
    pub fn energy_partial_sums(&self, eta: f64) -> Vec<f64> {
        let mut acc = 0.0;
        self.residuals
            .iter()
            .zip(&self.step_params)
            .zip(&self.forward_gaps)
            .map(|((res, (delta, lambda)), gap)| {
                acc += lambda * (1.0 - lambda) * res * res
                    + (1.0 - (delta * eta).powi(2)) * gap * gap;
                acc
            })
            .collect()
    }

    /// Writes `iter,residual,delta,lambda,step_norm[,extras]`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iter", "residual", "delta", "lambda", "step_norm"];
        header.extend(self.extras.iter().map(|(n, _)| n.as_str()));
        w.write_record(&header)?;
        for n in 0..self.iterations() {
            let (delta, lambda) = self.step_params[n];
            let mut row = vec![
                n.to_string(),
                self.residuals[n].to_string(),
                delta.to_string(),
                lambda.to_string(),
                self.step_norms[n].to_string(),
            ];
            row.extend(self.extras.iter().map(|(_, v)| v[n].to_string()));
            w.write_record(&row)?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// `true` iff `‖z_{k+1} − z*‖ ≤ ‖z_k − z*‖ + 1e-10` over consecutive snapshots.
pub fn fejer_check(trace: &SolveTrace, z_star: &Point) -> Result<bool> {
    fejer_check_tol(trace, z_star, 1e-10)
}

pub fn fejer_check_tol(trace: &SolveTrace, z_star: &Point, tol: f64) -> Result<bool> {
    if trace.iterates.is_empty() {
        return Err(Error::MissingIterates);
    }
    if trace.iterates[0].1.dim() != z_star.dim() {
        return Err(Error::DimensionMismatch {
            context: "fejer check",
            expected: trace.iterates[0].1.dim(),
            found: z_star.dim(),
        });
    }
    let distances: Vec<f64> = trace
        .iterates
        .iter()
        .map(|(_, z)| (z - &Point::raw(z.space(), z_star.coords().clone())).norm())
        .collect();
    Ok(distances.windows(2).all(|w| w[1] <= w[0] + tol))
}

/// Largest distance between snapshots with the same index.
pub(crate) fn snapshot_deviation(a: &SolveTrace, b: &SolveTrace) -> f64 {
    // a run that lands exactly on a fixed point stops early; its last
    // iterate then stands in for the rest of the other run
    let (short, long) = if a.iterates.len() <= b.iterates.len() {
        (&a.iterates, &b.iterates)
    } else {
        (&b.iterates, &a.iterates)
    };
    let Some((_, last)) = short.last() else {
        return if long.is_empty() { 0.0 } else { f64::INFINITY };
    };
    long.iter()
        .enumerate()
        .map(|(k, (j, q))| match short.get(k) {
            Some((i, p)) if i == j => (p - q).norm(),
            Some(_) => f64::INFINITY,
            None => (last - q).norm(),
        })
        .fold(0.0, f64::max)
}

/// One row of a trace.
pub(crate) struct StepRecord {
    pub residual: f64,
    pub delta: f64,
    pub lambda: f64,
    pub step_norm: f64,
    pub forward_gap: f64,
    pub extras: Vec<f64>,
}

pub(crate) enum Control {
    Continue,
    Stop,
}

/// Shared bookkeeping for every iteration loop.
pub(crate) struct Recorder {
    trace: SolveTrace,
    stop: StopRule,
}

impl Recorder {
    pub fn new(stop: StopRule, extra_names: &[String], z0: &Point) -> Self {
        Self {
            trace: SolveTrace {
                iterates: vec![(0, z0.clone())],
                residuals: Vec::new(),
                step_params: Vec::new(),
                step_norms: Vec::new(),
                forward_gaps: Vec::new(),
                extras: extra_names.iter().map(|n| (n.clone(), Vec::new())).collect(),
                status: Status::MaxIter,
            },
            stop,
        }
    }

    /// Records step `n` (from `zₙ` with norm `z_norm` to `next`) and decides
    /// whether to go on. `next` is the snapshot representation of `zₙ₊₁`.
    pub fn step(&mut self, n: usize, rec: StepRecord, z_norm: f64, next: impl FnOnce() -> Point) -> Control {
        let t = &mut self.trace;
        t.residuals.push(rec.residual);
        t.step_params.push((rec.delta, rec.lambda));
        t.step_norms.push(rec.step_norm);
        t.forward_gaps.push(rec.forward_gap);
        for ((_, col), v) in t.extras.iter_mut().zip(&rec.extras) {
            col.push(*v);
        }
        if !rec.residual.is_finite() || !rec.step_norm.is_finite() {
            t.status = Status::Diverged;
            return Control::Stop;
        }
        let scale = z_norm.max(1.0);
        let converged = rec.residual / scale <= self.stop.residual_tol
            && rec.step_norm / scale <= self.stop.iterate_tol;
        let last = n + 1 >= self.stop.max_iter;
        if converged || last || self.stop.snapshots.keeps(n + 1) {
            let z = next();
            if !z.is_finite() {
                t.status = Status::Diverged;
                return Control::Stop;
            }
            t.iterates.push((n + 1, z));
        }
        if converged {
            t.status = Status::Converged;
            Control::Stop
        } else if last {
            t.status = Status::MaxIter;
            Control::Stop
        } else {
            Control::Continue
        }
    }

    pub fn finish(self) -> SolveTrace {
        self.trace
    }
}
