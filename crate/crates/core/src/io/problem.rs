use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::additive::AdditiveSemSpec;
use crate::error::{Error, Result};
use crate::graph::{Dag, NodeId, ValidatedDag};
use crate::linear_gaussian::TrellisProblem;
use crate::oci::{OciProblem, SeparableCost, SystemCostSpec, ValueGrid};
use crate::sem::{ConditionalTable, Domain, Mechanism, NodeModel, NoiseSpec, Sem};
use crate::submodular::{SetFunction, Subset, MAX_TABLE};

pub const FORMAT_VERSION: &str = "1";

/// A problem file as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemFile {
    pub format_version: String,
    pub kind: ProblemKind,
    pub body: ProblemBody,
    #[serde(skip_serializing_if = "Hints::is_empty")]
    pub hints: Hints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Sem,
    AdditiveVariance,
    LinearGaussian,
    SetFunction,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Sem => "sem",
            ProblemKind::AdditiveVariance => "additive_variance",
            ProblemKind::LinearGaussian => "linear_gaussian",
            ProblemKind::SetFunction => "set_function",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ProblemBody {
    Sem(SemBody),
    AdditiveVariance(AdditiveBody),
    LinearGaussian(LinearGaussianBody),
    SetFunction(SetFunctionSpec),
}

/// Optional solver defaults; command-line flags take precedence.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hints {
    /// Scalar candidate values offered at every node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_card: Option<usize>,
}

impl Hints {
    fn is_empty(&self) -> bool {
        *self == Hints::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemBody {
    pub nodes: usize,
    pub edges: Vec<(NodeId, NodeId)>,
    pub models: Vec<NodeSpec>,
    pub cost: SeparableCost,
    pub system_cost: SystemCostSpec,
}

fn real_scalar() -> Domain {
    Domain::Real(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    #[serde(default = "real_scalar")]
    pub domain: Domain,
    pub mechanism: MechanismSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MechanismSpec {
    Additive {
        noise: NoiseSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Table {
        rows: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdditiveBody {
    pub nodes: usize,
    pub edges: Vec<(NodeId, NodeId)>,
    pub variances: Vec<f64>,
    pub target: NodeId,
    pub cost: SetFunctionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGaussianBody {
    /// Row-major.
    pub a: Vec<Vec<f64>>,
    pub sigma2: f64,
    pub horizon: usize,
    pub q: Vec<f64>,
    pub delta: Vec<f64>,
    pub ybar: Vec<f64>,
}

/// A set function over `{0, …, m−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SetFunctionSpec {
    /// `F(S)` for every bitmask `S` in ascending order; length `2^m`.
    Table(Vec<f64>),
    /// `F(S) = Σ_{i∈S} w_i`.
    Modular(Vec<f64>),
}

impl SetFunctionSpec {
    fn build(&self, field: &str) -> Result<SetFunction> {
        let (values, what) = match self {
            SetFunctionSpec::Table(v) => (v, "table"),
            SetFunctionSpec::Modular(v) => (v, "modular"),
        };
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(
                format!("{field}.{what}[{i}]"),
                "value must be finite",
            ));
        }
        match self {
            SetFunctionSpec::Table(v) => {
                if !v.len().is_power_of_two() || v.len() > 1 << MAX_TABLE {
                    return Err(Error::validation(
                        format!("{field}.table"),
                        format!("length {} is not 2^m with m ≤ {MAX_TABLE}", v.len()),
                    ));
                }
                SetFunction::from_table(v.clone())
            }
            SetFunctionSpec::Modular(w) => SetFunction::modular(w.clone()),
        }
        .map_err(|e| Error::validation(field, e.to_string()))
    }
}

/// The validated, solver-ready form of a problem file.
#[derive(Debug, Clone)]
pub enum Problem {
    Sem(OciProblem),
    AdditiveVariance(AdditiveSemSpec),
    LinearGaussian(TrellisProblem),
    SetFunction(SetFunction),
}

#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub file: ProblemFile,
    pub problem: Problem,
    /// Hex SHA-256 of the canonical serialization.
    pub digest: String,
}

impl LoadedProblem {
    pub fn kind(&self) -> ProblemKind {
        self.file.kind
    }

    /// Candidate values for a `sem` problem: the explicit scalar grid if
    /// any, otherwise the alphabet of each finite node.
    pub fn grid(&self, sem: &Sem, grid: Option<&[f64]>) -> Result<ValueGrid> {
        match grid.or(self.file.hints.grid.as_deref()) {
            Some(values) => {
                for i in 0..sem.node_count() {
                    if let Some(&bad) = values.iter().find(|&&v| !sem.domain(i).contains(&[v])) {
                        return Err(Error::validation("grid", format!("{bad} is not a value of node {i}")));
                    }
                }
                Ok(ValueGrid::scalar(sem.node_count(), values))
            }
            None => Ok(ValueGrid::alphabet(sem)),
        }
    }
}

/// Reads, validates and builds a problem file.
pub fn parse_problem(path: &Path) -> Result<LoadedProblem> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_problem_str(&text)
}

pub fn parse_problem_str(text: &str) -> Result<LoadedProblem> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let file = ProblemFile::from_value(root)?;
    let problem = file.build()?;
    let digest = file.digest();
    Ok(LoadedProblem { file, problem, digest })
}

fn from_field<T: DeserializeOwned>(value: Value, field: &str) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::Parse(format!("`{field}`: {e}")))
}

impl ProblemFile {
    pub fn from_value(root: Value) -> Result<Self> {
        let Value::Object(mut map) = root else {
            return Err(Error::Parse("problem file must be a JSON object".into()));
        };
        let mut take = |key: &str| map.remove(key);
        let version = take("format_version").ok_or_else(|| Error::Parse("missing field `format_version`".into()))?;
        let kind = take("kind").ok_or_else(|| Error::Parse("missing field `kind`".into()))?;
        let body = take("body").ok_or_else(|| Error::Parse("missing field `body`".into()))?;
        let hints = take("hints");
        if let Some(extra) = map.keys().next() {
            return Err(Error::Parse(format!(
                "unknown field `{extra}`, expected one of `format_version`, `kind`, `body`, `hints`"
            )));
        }
        let format_version: String = from_field(version, "format_version")?;
        if format_version != FORMAT_VERSION {
            return Err(Error::validation(
                "format_version",
                format!("unsupported version {format_version:?}, expected {FORMAT_VERSION:?}"),
            ));
        }
        let kind: ProblemKind = from_field(kind, "kind")?;
        let body = match kind {
            ProblemKind::Sem => ProblemBody::Sem(from_field(body, "body")?),
            ProblemKind::AdditiveVariance => ProblemBody::AdditiveVariance(from_field(body, "body")?),
            ProblemKind::LinearGaussian => ProblemBody::LinearGaussian(from_field(body, "body")?),
            ProblemKind::SetFunction => ProblemBody::SetFunction(from_field(body, "body")?),
        };
        let hints = match hints {
            Some(h) => from_field(h, "hints")?,
            None => Hints::default(),
        };
        Ok(ProblemFile {
            format_version,
            kind,
            body,
            hints,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }

    /// SHA-256 of the serialization with object keys sorted, so the digest
    /// ignores key order and whitespace in the source.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("problem files serialize");
        let canonical = serde_json::to_string(&value).expect("values serialize");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn build(&self) -> Result<Problem> {
        if let Some(grid) = &self.hints.grid {
            if let Some(i) = grid.iter().position(|v| !v.is_finite()) {
                return Err(Error::validation(format!("hints.grid[{i}]"), "value must be finite"));
            }
        }
        match &self.body {
            ProblemBody::Sem(b) => build_sem(b).map(Problem::Sem),
            ProblemBody::AdditiveVariance(b) => build_additive(b).map(Problem::AdditiveVariance),
            ProblemBody::LinearGaussian(b) => build_linear(b).map(Problem::LinearGaussian),
            ProblemBody::SetFunction(s) => s.build("body").map(Problem::SetFunction),
        }
    }
}

fn build_dag(nodes: usize, edges: &[(NodeId, NodeId)]) -> Result<ValidatedDag> {
    Dag::with_edges(nodes, edges.iter().copied())
        .validate()
        .map_err(|e| Error::validation("body.edges", e.to_string()))
}

fn check_len(field: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::validation(field, format!("{} entries for {n} nodes", v.len())));
    }
    Ok(())
}

fn check_nonneg(field: &str, v: &[f64]) -> Result<()> {
    if let Some(i) = v.iter().position(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::validation(
            format!("{field}[{i}]"),
            format!("{} must be finite and non-negative", v[i]),
        ));
    }
    Ok(())
}

fn build_sem(b: &SemBody) -> Result<OciProblem> {
    let dag = build_dag(b.nodes, &b.edges)?;
    if b.models.len() != b.nodes {
        return Err(Error::validation(
            "body.models",
            format!("{} models for {} nodes", b.models.len(), b.nodes),
        ));
    }
    let models = b
        .models
        .iter()
        .map(|m| {
            let mechanism = match &m.mechanism {
                MechanismSpec::Additive { noise, weights: None } => Mechanism::additive(*noise),
                MechanismSpec::Additive {
                    noise,
                    weights: Some(w),
                } => Mechanism::weighted(*noise, w.clone()),
                MechanismSpec::Table { rows } => Mechanism::Table(ConditionalTable::new(rows.clone())),
            };
            NodeModel::new(m.domain, mechanism)
        })
        .collect();
    let sem = Sem::new(dag, models).map_err(|e| match e {
        Error::Domain { node, message } => Error::validation(format!("body.models[{node}]"), message),
        other => other,
    })?;
    check_len("body.cost.fixed", &b.cost.fixed, b.nodes)?;
    check_len("body.cost.quadratic", &b.cost.quadratic, b.nodes)?;
    check_nonneg("body.cost.fixed", &b.cost.fixed)?;
    check_nonneg("body.cost.quadratic", &b.cost.quadratic)?;
    check_nonneg("body.cost.setup", &[b.cost.setup])?;
    b.system_cost.validate(b.nodes).map_err(|e| match e {
        Error::Validation { field, message } => Error::validation(format!("body.{field}"), message),
        other => other,
    })?;
    let g = b.system_cost.to_fn();
    Ok(OciProblem {
        sem,
        cost: Arc::new(b.cost.clone()),
        system_cost: g,
    })
}

fn build_additive(b: &AdditiveBody) -> Result<AdditiveSemSpec> {
    let dag = build_dag(b.nodes, &b.edges)?;
    let cost = b.cost.build("body.cost")?;
    AdditiveSemSpec::new(dag, b.variances.clone(), b.target, cost).map_err(|e| match e {
        Error::Validation { field, message } => Error::validation(format!("body.{field}"), message),
        other => other,
    })
}

fn build_linear(b: &LinearGaussianBody) -> Result<TrellisProblem> {
    let n = b.a.len();
    if let Some(r) = b.a.iter().position(|row| row.len() != n) {
        return Err(Error::validation(
            format!("body.a[{r}]"),
            format!("row has {} entries, expected {n}", b.a[r].len()),
        ));
    }
    let a = DMatrix::from_fn(n, n, |r, c| b.a[r][c]);
    TrellisProblem::new(a, b.sigma2, b.horizon, b.q.clone(), b.delta.clone(), b.ybar.clone()).map_err(|e| match e {
        Error::Validation { field, message } => Error::validation(format!("body.{field}"), message),
        other => other,
    })
}

/// Imputation set for `set_function` and `additive_variance` problems.
pub(crate) fn subset_of(nodes: &[NodeId], ground: usize) -> Result<Subset> {
    if let Some(&bad) = nodes.iter().find(|&&i| i >= ground) {
        return Err(Error::validation("plan.nodes", format!("node {bad} out of range")));
    }
    Ok(Subset::from_members(nodes.iter().copied()))
}
