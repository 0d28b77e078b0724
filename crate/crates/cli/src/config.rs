//! The JSON problem description.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::CliError;

/// A whole config file: `kind` selects the problem section, whose fields
/// sit next to the shared `schedule`, `stop`, `output`, `seed` and
/// `reference` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    pub problem: Problem,
    pub schedule: ScheduleConfig,
    pub stop: StopConfig,
    pub output: OutputConfig,
    pub seed: u64,
    /// A known solution, used by acceptance checks.
    pub reference: Option<Reference>,
}

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Debug, PartialEq)]
pub enum Problem {
    Tseng(TsengConfig),
    Fpif(FpifConfig),
    SumM(SumConfig),
    PrimalDual(PrimalDualConfig),
    MatrixGame(MatrixGameConfig),
    GridGame(GridGameConfig),
}

impl Problem {
    pub fn kind(&self) -> &'static str {
        match self {
            Problem::Tseng(_) => "tseng",
            Problem::Fpif(_) => "fpif",
            Problem::SumM(_) => "sum-m",
            Problem::PrimalDual(_) => "primal-dual",
            Problem::MatrixGame(_) => "matrix-game",
            Problem::GridGame(_) => "grid-game",
        }
    }
}

/// A matrix given inline as rows, or as a CSV file of rows relative to the
/// config file.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum MatrixSource {
    Rows(Vec<Vec<f64>>),
    File { file: PathBuf },
}

/// `null` stands for an infinite bound.
pub type Bounds = Vec<Option<f64>>;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Zero,
    Box { lower: Bounds, upper: Bounds },
    Orthant,
    Halfspace { normal: Vec<f64>, beta: f64 },
    AffineSet { matrix: MatrixSource, rhs: Vec<f64> },
    Point { center: Vec<f64> },
    L1 { kappa: f64 },
    Affine { matrix: MatrixSource, #[serde(default)] shift: Option<Vec<f64>> },
    Quadratic { matrix: MatrixSource, #[serde(default)] linear: Option<Vec<f64>> },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LipschitzSpec {
    Zero,
    Identity,
    Affine { matrix: MatrixSource, #[serde(default)] shift: Option<Vec<f64>> },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubspaceSpec {
    Whole,
    Zero,
    Span { basis: Vec<Vec<f64>> },
    Kernel { matrix: MatrixSource },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TsengConfig {
    pub dim: usize,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    pub a: OperatorSpec,
    pub b: LipschitzSpec,
    #[serde(default)]
    pub x0: Option<StartSpec>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FpifConfig {
    pub dim: usize,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    pub a: OperatorSpec,
    pub b: LipschitzSpec,
    pub v: SubspaceSpec,
    #[serde(default)]
    pub x0: Option<StartSpec>,
    #[serde(default)]
    pub y0: Option<StartSpec>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SumConfig {
    pub dim: usize,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    pub operators: Vec<OperatorSpec>,
    pub b: LipschitzSpec,
    /// The product-space weights `ωᵢ`; uniform when absent.
    #[serde(default)]
    pub omegas: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PrimalDualConfig {
    pub dim: usize,
    pub a: OperatorSpec,
    pub u: SubspaceSpec,
    pub c: LipschitzSpec,
    pub z: Vec<f64>,
    pub blocks: Vec<DualBlockConfig>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DualBlockConfig {
    /// `Lᵢ`, with as many rows as the dual space has dimensions.
    pub l: MatrixSource,
    pub b: OperatorSpec,
    /// A linear strongly monotone `Dᵢ`; when absent `(Dᵢ)_{Vᵢ⊥}` is zero.
    #[serde(default)]
    pub d: Option<MatrixSource>,
    pub v: SubspaceSpec,
    pub shift: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixGameConfig {
    pub payoff: MatrixSource,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridGameConfig {
    pub grid1: GridSpec,
    pub grid2: GridSpec,
    pub kernel: KernelSpec,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rule: GridRule,
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum GridRule {
    Trapezoid,
    Midpoint,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `Σ cᵢⱼ xⁱ yʲ`, with `coefficients[i][j] = cᵢⱼ`.
    Polynomial { coefficients: Vec<Vec<f64>> },
    /// Kernel values at the grid nodes.
    Matrix { matrix: MatrixSource },
}

/// An explicit starting point, or a seeded gaussian one.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum StartSpec {
    Point(Vec<f64>),
    Random { random: f64 },
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub delta: Option<SequenceSpec>,
    #[serde(default)]
    pub lambda: Option<SequenceSpec>,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SequenceSpec {
    Constant(f64),
    Array(Vec<f64>),
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StopConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    100_000
}

impl Default for StopConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; relative paths resolve against the config file.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// File name stem; defaults to the config file stem.
    #[serde(default)]
    pub name: Option<String>,
}

/// Known solution blocks, keyed like the solution CSV.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub blocks: Vec<ReferenceBlock>,
    /// The zero of the iteration map in iterate coordinates, for Fejér checks.
    #[serde(default)]
    pub fixed_point: Option<Vec<f64>>,
    #[serde(default = "default_reference_tol")]
    pub tol: f64,
}

fn default_reference_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReferenceBlock {
    pub name: String,
    pub values: Vec<f64>,
}

/// A parsed config together with the directory relative paths resolve against.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ProblemConfig,
    pub base_dir: PathBuf,
    pub stem: String,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config = parse(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "problem".into());
        Ok(Self { config, base_dir, stem })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        match &self.config.output.dir {
            Some(d) => self.resolve(d),
            None => self.base_dir.clone(),
        }
    }

    pub fn output_name(&self) -> String {
        self.config.output.name.clone().unwrap_or_else(|| self.stem.clone())
    }
}

/// Parses a config, naming the offending field path on schema violations.
pub fn parse(text: &str) -> Result<ProblemConfig, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
    let Value::Object(mut fields) = value else {
        return Err(CliError::Config("at <root>: expected a JSON object".into()));
    };
    let kind = match fields.remove("kind") {
        Some(Value::String(k)) => k,
        Some(other) => return Err(CliError::Config(format!("at kind: expected a string, found {other}"))),
        None => return Err(CliError::Config("at kind: missing field `kind`".into())),
    };
    let schedule = take(&mut fields, "schedule")?.unwrap_or_default();
    let stop = take(&mut fields, "stop")?.unwrap_or_default();
    let output = take(&mut fields, "output")?.unwrap_or_default();
    let seed = take(&mut fields, "seed")?.unwrap_or(DEFAULT_SEED);
    let reference = take(&mut fields, "reference")?;
    let rest = Value::Object(fields);
    let problem = match kind.as_str() {
        "tseng" => Problem::Tseng(at("", rest)?),
        "fpif" => Problem::Fpif(at("", rest)?),
        "sum-m" => Problem::SumM(at("", rest)?),
        "primal-dual" => Problem::PrimalDual(at("", rest)?),
        "matrix-game" => Problem::MatrixGame(at("", rest)?),
        "grid-game" => Problem::GridGame(at("", rest)?),
        other => {
            return Err(CliError::Config(format!(
                "at kind: unknown kind `{other}`, expected one of tseng, fpif, sum-m, primal-dual, matrix-game, grid-game"
            )))
        }
    };
    Ok(ProblemConfig {
        problem,
        schedule,
        stop,
        output,
        seed,
        reference,
    })
}

fn take<T: DeserializeOwned>(fields: &mut Map<String, Value>, key: &str) -> Result<Option<T>, CliError> {
    fields.remove(key).map(|v| at(key, v)).transpose()
}

fn at<T: DeserializeOwned>(prefix: &str, value: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let mut inner = e.path().to_string();
        let msg = e.inner().to_string();
        // serde reports a missing field at its parent; name the field itself
        if let Some(field) = msg.strip_prefix("missing field `").and_then(|m| m.strip_suffix('`')) {
            inner = if inner == "." { field.to_string() } else { format!("{inner}.{field}") };
        }
        let path = match (prefix.is_empty(), inner == ".") {
            (true, true) => "<root>".to_string(),
            (true, false) => inner,
            (false, true) => prefix.to_string(),
            (false, false) => format!("{prefix}.{inner}"),
        };
        CliError::Config(format!("at {path}: {msg}"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_matrix_game() {
        let c = parse(r#"{"kind": "matrix-game", "payoff": [[1, -1], [-1, 1]]}"#).unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.stop.max_iter, 100_000);
        match c.problem {
            Problem::MatrixGame(g) => assert_eq!(g.payoff, MatrixSource::Rows(vec![vec![1.0, -1.0], vec![-1.0, 1.0]])),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_errors_name_the_field() {
        let err = parse(r#"{"kind": "fpif", "dim": 2, "a": {"type": "box", "lower": [0, 0]}, "b": {"type": "zero"}, "v": {"type": "whole"}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("a"), "{err}");
        assert!(err.contains("upper"), "{err}");
        let err = parse(r#"{"kind": "matrix-game", "payoff": [[1]], "stop": {"tol": "small"}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("stop.tol"), "{err}");
        let err = parse(r#"{"kind": "nope"}"#).unwrap_err().to_string();
        assert!(err.contains("nope"), "{err}");
    }

    #[test]
    fn unbounded_box_sides_are_null() {
        let c = parse(
            r#"{"kind": "tseng", "dim": 2, "a": {"type": "box", "lower": [0, null], "upper": [null, 1]},
                "b": {"type": "identity"}, "x0": {"random": 2.0}}"#,
        )
        .unwrap();
        let Problem::Tseng(t) = c.problem else { panic!() };
        assert_eq!(t.a, OperatorSpec::Box { lower: vec![Some(0.0), None], upper: vec![None, Some(1.0)] });
        assert_eq!(t.x0, Some(StartSpec::Random { random: 2.0 }));
    }
}
