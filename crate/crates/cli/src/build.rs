//! Turns config sections into solver objects.

use fpif_core::fpif::InclusionProblem;
use fpif_core::games::{Grid, GridGame, MatrixGame};
use fpif_core::primal_dual::{DualBlock, PDProblem};
use fpif_core::sum_m::SumProblem;
use fpif_core::{LinearMap, LipschitzMap, Point, Projector, ResolventOp, Space};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{
    GridRule, GridSpec, KernelSpec, LipschitzSpec, LoadedConfig, MatrixSource, OperatorSpec, Problem, StartSpec,
    SubspaceSpec,
};
use crate::CliError;

fn config_error(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("at {path}: {msg}"))
}

pub fn space(dim: usize, weights: Option<&[f64]>, path: &str) -> Result<Space, CliError> {
    if dim == 0 {
        return Err(config_error(&format!("{path}dim"), "dimension must be positive"));
    }
    match weights {
        None => Ok(Space::euclidean(dim)),
        Some(w) => {
            if w.len() != dim {
                return Err(config_error(
                    &format!("{path}weights"),
                    format!("expected {dim} weights, found {}", w.len()),
                ));
            }
            Space::weighted(w.to_vec()).map_err(|e| config_error(&format!("{path}weights"), e))
        }
    }
}

/// Reads a matrix and checks its shape.
pub fn matrix(
    src: &MatrixSource,
    loaded: &LoadedConfig,
    rows: Option<usize>,
    cols: usize,
    path: &str,
) -> Result<DMatrix<f64>, CliError> {
    let data = match src {
        MatrixSource::Rows(r) => r.clone(),
        MatrixSource::File { file } => read_matrix_csv(&loaded.resolve(file))
            .map_err(|e| config_error(path, format!("cannot load {}: {e}", file.display())))?,
    };
    if data.is_empty() {
        return Err(config_error(path, "matrix has no rows"));
    }
    if let Some(r) = rows {
        if data.len() != r {
            return Err(config_error(path, format!("expected {r} rows, found {}", data.len())));
        }
    }
    if let Some((i, row)) = data.iter().enumerate().find(|(_, row)| row.len() != cols) {
        return Err(config_error(
            &format!("{path}[{i}]"),
            format!("expected {cols} columns, found {}", row.len()),
        ));
    }
    let flat: Vec<f64> = data.iter().flatten().copied().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(config_error(path, "matrix has non-finite entries"));
    }
    Ok(DMatrix::from_row_slice(data.len(), cols, &flat))
}

/// Number of columns of a matrix source, for matrices whose width is free.
pub fn matrix_width(src: &MatrixSource, loaded: &LoadedConfig, path: &str) -> Result<usize, CliError> {
    let data = match src {
        MatrixSource::Rows(r) => r.clone(),
        MatrixSource::File { file } => read_matrix_csv(&loaded.resolve(file))
            .map_err(|e| config_error(path, format!("cannot load {}: {e}", file.display())))?,
    };
    data.first().map(Vec::len).ok_or_else(|| config_error(path, "matrix has no rows"))
}

pub fn matrix_height(src: &MatrixSource, loaded: &LoadedConfig, path: &str) -> Result<usize, CliError> {
    match src {
        MatrixSource::Rows(r) => Ok(r.len()),
        MatrixSource::File { file } => read_matrix_csv(&loaded.resolve(file))
            .map(|d| d.len())
            .map_err(|e| config_error(path, format!("cannot load {}: {e}", file.display()))),
    }
}

fn read_matrix_csv(path: &std::path::Path) -> Result<Vec<Vec<f64>>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| format!("row {i}: `{f}`: {e}")))
            .collect::<Result<Vec<f64>, String>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn point(values: &[f64], space: &Space, path: &str) -> Result<Point, CliError> {
    if values.len() != space.dim() {
        return Err(config_error(
            path,
            format!("expected {} entries, found {}", space.dim(), values.len()),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(config_error(path, "non-finite entry"));
    }
    space.point(values).map_err(|e| config_error(path, e))
}

fn optional_point(values: Option<&Vec<f64>>, space: &Space, path: &str) -> Result<Point, CliError> {
    match values {
        Some(v) => point(v, space, path),
        None => Ok(space.zero()),
    }
}

fn bounds(values: &[Option<f64>], dim: usize, fill: f64, path: &str) -> Result<Vec<f64>, CliError> {
    if values.len() != dim {
        return Err(config_error(path, format!("expected {dim} bounds, found {}", values.len())));
    }
    Ok(values.iter().map(|b| b.unwrap_or(fill)).collect())
}

pub fn operator(spec: &OperatorSpec, space: &Space, loaded: &LoadedConfig, path: &str) -> Result<ResolventOp, CliError> {
    let n = space.dim();
    let solver = |e: fpif_core::Error| config_error(path, e);
    match spec {
        OperatorSpec::Zero => Ok(ResolventOp::zero(space)),
        OperatorSpec::Orthant => Ok(ResolventOp::normal_cone_orthant(space)),
        OperatorSpec::Box { lower, upper } => {
            let lo = bounds(lower, n, f64::NEG_INFINITY, &format!("{path}.lower"))?;
            let hi = bounds(upper, n, f64::INFINITY, &format!("{path}.upper"))?;
            ResolventOp::normal_cone_box(space, &lo, &hi).map_err(solver)
        }
        OperatorSpec::Halfspace { normal, beta } => {
            let normal = point(normal, space, &format!("{path}.normal"))?;
            ResolventOp::normal_cone_halfspace(&normal, *beta).map_err(solver)
        }
        OperatorSpec::AffineSet { matrix: m, rhs } => {
            let mat = matrix(m, loaded, Some(rhs.len()), n, &format!("{path}.matrix"))?;
            let codomain = Space::euclidean(rhs.len());
            let l = LinearMap::new(space, &codomain, mat).map_err(solver)?;
            let b = point(rhs, &codomain, &format!("{path}.rhs"))?;
            ResolventOp::normal_cone_affine(&l, &b).map_err(solver)
        }
        OperatorSpec::Point { center } => Ok(ResolventOp::normal_cone_point(&point(
            center,
            space,
            &format!("{path}.center"),
        )?)),
        OperatorSpec::L1 { kappa } => ResolventOp::l1(space, *kappa).map_err(solver),
        OperatorSpec::Affine { matrix: m, shift } => {
            let mat = matrix(m, loaded, Some(n), n, &format!("{path}.matrix"))?;
            let map = LinearMap::endomorphism(space, mat).map_err(solver)?;
            let shift = optional_point(shift.as_ref(), space, &format!("{path}.shift"))?;
            ResolventOp::affine(&map, &shift).map_err(solver)
        }
        OperatorSpec::Quadratic { matrix: m, linear } => {
            let mat = matrix(m, loaded, Some(n), n, &format!("{path}.matrix"))?;
            let map = LinearMap::endomorphism(space, mat).map_err(solver)?;
            let linear = optional_point(linear.as_ref(), space, &format!("{path}.linear"))?;
            ResolventOp::quadratic(&map, &linear).map_err(solver)
        }
    }
}

pub fn lipschitz(spec: &LipschitzSpec, space: &Space, loaded: &LoadedConfig, path: &str) -> Result<LipschitzMap, CliError> {
    match spec {
        LipschitzSpec::Zero => Ok(LipschitzMap::zero(space)),
        LipschitzSpec::Identity => Ok(LipschitzMap::identity(space)),
        LipschitzSpec::Affine { matrix: m, shift } => {
            let n = space.dim();
            let mat = matrix(m, loaded, Some(n), n, &format!("{path}.matrix"))?;
            let map = LinearMap::endomorphism(space, mat).map_err(|e| config_error(path, e))?;
            let shift = optional_point(shift.as_ref(), space, &format!("{path}.shift"))?;
            LipschitzMap::affine(&map, &shift).map_err(|e| config_error(path, e))
        }
    }
}

pub fn subspace(spec: &SubspaceSpec, space: &Space, loaded: &LoadedConfig, path: &str) -> Result<Projector, CliError> {
    match spec {
        SubspaceSpec::Whole => Ok(Projector::identity(space)),
        SubspaceSpec::Zero => Ok(Projector::zero(space)),
        SubspaceSpec::Span { basis } => {
            if basis.is_empty() {
                return Ok(Projector::zero(space));
            }
            let vectors = basis
                .iter()
                .enumerate()
                .map(|(i, v)| point(v, space, &format!("{path}.basis[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Projector::from_basis(space, &vectors).map_err(|e| config_error(path, e))
        }
        SubspaceSpec::Kernel { matrix: m } => {
            let rows = matrix_height(m, loaded, &format!("{path}.matrix"))?;
            let mat = matrix(m, loaded, Some(rows), space.dim(), &format!("{path}.matrix"))?;
            let l = LinearMap::new(space, &Space::euclidean(rows), mat).map_err(|e| config_error(path, e))?;
            Ok(Projector::onto_kernel(&l))
        }
    }
}

/// A starting point: explicit, seeded gaussian scaled by `random`, or zero.
pub fn start(spec: Option<&StartSpec>, space: &Space, seed: u64, stream: u64, path: &str) -> Result<Point, CliError> {
    match spec {
        None => Ok(space.zero()),
        Some(StartSpec::Point(v)) => point(v, space, path),
        Some(StartSpec::Random { random }) => {
            if !random.is_finite() {
                return Err(config_error(path, "random scale must be finite"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let coords = DVector::from_fn(space.dim(), |_, _| {
                let g: f64 = StandardNormal.sample(&mut rng);
                random * g
            });
            Point::new(space, coords).map_err(|e| config_error(path, e))
        }
    }
}

pub fn grid(spec: &GridSpec, path: &str) -> Result<Grid, CliError> {
    let out = match spec.rule {
        GridRule::Trapezoid => Grid::trapezoid(spec.a, spec.b, spec.n),
        GridRule::Midpoint => Grid::midpoint(spec.a, spec.b, spec.n),
    };
    out.map_err(|e| config_error(path, e))
}

pub fn grid_game(g1: &Grid, g2: &Grid, kernel: &KernelSpec, loaded: &LoadedConfig) -> Result<GridGame, CliError> {
    let out = match kernel {
        KernelSpec::Polynomial { coefficients } => {
            if coefficients.is_empty() {
                return Err(config_error("kernel.coefficients", "no coefficients"));
            }
            let c = coefficients.clone();
            GridGame::from_fn(g1, g2, move |x, y| {
                c.iter()
                    .enumerate()
                    .map(|(i, row)| {
                        row.iter()
                            .enumerate()
                            .map(|(j, cij)| cij * x.powi(i as i32) * y.powi(j as i32))
                            .sum::<f64>()
                    })
                    .sum()
            })
        }
        KernelSpec::Matrix { matrix: m } => {
            let k = matrix(m, loaded, Some(g1.nodes().len()), g2.nodes().len(), "kernel.matrix")?;
            GridGame::new(k, g1.weights().to_vec(), g2.weights().to_vec())
        }
    };
    out.map_err(|e| config_error("kernel", e))
}

/// A config turned into solver objects, with `schedule.gamma` applied.
pub enum Assembled {
    Tseng {
        a: ResolventOp,
        b: LipschitzMap,
        x0: Point,
    },
    Fpif {
        prob: InclusionProblem,
        x0: Point,
        y0: Point,
    },
    SumM(SumProblem),
    PrimalDual(PDProblem),
    MatrixGame(MatrixGame),
    GridGame(GridGame),
}

pub fn assemble(loaded: &LoadedConfig) -> Result<Assembled, CliError> {
    let config = &loaded.config;
    let seed = config.seed;
    let gamma = config.schedule.gamma;
    match &config.problem {
        Problem::Tseng(c) => {
            let space = space(c.dim, c.weights.as_deref(), "")?;
            Ok(Assembled::Tseng {
                a: operator(&c.a, &space, loaded, "a")?,
                b: lipschitz(&c.b, &space, loaded, "b")?,
                x0: start(c.x0.as_ref(), &space, seed, 0, "x0")?,
            })
        }
        Problem::Fpif(c) => {
            let space = space(c.dim, c.weights.as_deref(), "")?;
            let a = operator(&c.a, &space, loaded, "a")?;
            let b = lipschitz(&c.b, &space, loaded, "b")?;
            let v = subspace(&c.v, &space, loaded, "v")?;
            let mut prob = InclusionProblem::new(a, b, v)?;
            if let Some(g) = gamma {
                prob = prob.with_gamma(g)?;
            }
            Ok(Assembled::Fpif {
                prob,
                x0: start(c.x0.as_ref(), &space, seed, 0, "x0")?,
                y0: start(c.y0.as_ref(), &space, seed, 1, "y0")?,
            })
        }
        Problem::SumM(c) => {
            let space = space(c.dim, c.weights.as_deref(), "")?;
            let ops = c
                .operators
                .iter()
                .enumerate()
                .map(|(i, spec)| operator(spec, &space, loaded, &format!("operators[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let b = lipschitz(&c.b, &space, loaded, "b")?;
            let mut prob = SumProblem::new(ops, b, c.omegas.clone())?;
            if let Some(g) = gamma {
                prob = prob.with_gamma(g)?;
            }
            Ok(Assembled::SumM(prob))
        }
        Problem::PrimalDual(c) => {
            let h = space(c.dim, None, "")?;
            let a = operator(&c.a, &h, loaded, "a")?;
            let u = subspace(&c.u, &h, loaded, "u")?;
            let cmap = lipschitz(&c.c, &h, loaded, "c")?;
            let z = point(&c.z, &h, "z")?;
            let mut blocks = Vec::with_capacity(c.blocks.len());
            for (i, blk) in c.blocks.iter().enumerate() {
                let path = format!("blocks[{i}]");
                let k = blk.shift.len();
                if k == 0 {
                    return Err(config_error(&format!("{path}.shift"), "the dual space must be nonempty"));
                }
                let g = Space::euclidean(k);
                let l = matrix(&blk.l, loaded, Some(k), c.dim, &format!("{path}.l"))?;
                let l = LinearMap::new(&h, &g, l)?;
                let b_op = operator(&blk.b, &g, loaded, &format!("{path}.b"))?;
                let v = subspace(&blk.v, &g, loaded, &format!("{path}.v"))?;
                let d_partial = match &blk.d {
                    Some(m) => {
                        let d = matrix(m, loaded, Some(k), k, &format!("{path}.d"))?;
                        DualBlock::d_partial_of_linear(&LinearMap::endomorphism(&g, d)?, &v)?
                    }
                    None => LipschitzMap::zero(&g),
                };
                let shift = point(&blk.shift, &g, &format!("{path}.shift"))?;
                blocks.push(DualBlock::from_catalog(&b_op, d_partial, l, v, shift)?);
            }
            let mut prob = PDProblem::new(a, u, cmap, z, blocks)?;
            if let Some(g) = gamma {
                prob = prob.with_gamma(g)?;
            }
            Ok(Assembled::PrimalDual(prob))
        }
        Problem::MatrixGame(c) => {
            let cols = matrix_width(&c.payoff, loaded, "payoff")?;
            let f = matrix(&c.payoff, loaded, None, cols, "payoff")?;
            Ok(Assembled::MatrixGame(MatrixGame::new(f)?))
        }
        Problem::GridGame(c) => {
            let g1 = grid(&c.grid1, "grid1")?;
            let g2 = grid(&c.grid2, "grid2")?;
            Ok(Assembled::GridGame(grid_game(&g1, &g2, &c.kernel, loaded)?))
        }
    }
}
