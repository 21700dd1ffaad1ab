use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::problem::{parse_problem, subset_of, LoadedProblem, Problem};
use super::report::Report;
use crate::additive::HypothesisViolation;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::oci::{brute_force_solve, evaluate, single_value_function, ExpectationMode, OciProblem, SolveReport};
use crate::sem::{ImputationPlan, Sem};
use crate::submodular::{
    brute_force_extremum, greedy_maximize, minimize_single_value, monotonicity_violation, submodularity_violation,
    ConstraintOracle, Direction, MonotonicityViolation, SetFunction, SubgradientOptions, SubmodularityViolation,
    Subset, MAX_CHECK,
};

/// Monte-Carlo sample count when neither the flag nor the file sets one.
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "oci",
    version,
    about = "Optimal causal imputation on structural equation models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the best imputation plan.
    Solve(SolveArgs),
    /// Validate a problem and report structural properties.
    Check(CommonArgs),
    /// Draw realizations, optionally under an imputation plan.
    Sample(SampleArgs),
    /// Score one imputation plan.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Comma-separated scalar candidates offered at every node.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub max_card: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    /// JSON plan, e.g. `{"nodes":[1],"values":[0]}`.
    #[arg(long)]
    pub plan: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// JSON plan, e.g. `{"nodes":[1],"values":[0]}`.
    #[arg(long)]
    pub plan: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Brute,
    LovaszMin,
    GreedyMax,
    Enumerate,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Brute => "brute",
            Method::LovaszMin => "lovasz-min",
            Method::GreedyMax => "greedy-max",
            Method::Enumerate => "enumerate",
        }
    }
}

/// A plan on the command line. Values may be scalars or vectors.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanArg {
    pub nodes: Vec<NodeId>,
    #[serde(default)]
    pub values: Vec<PlanValue>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PlanValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PlanArg {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("`plan`: {e}")))
    }

    fn values_required(&self) -> Result<()> {
        if self.values.len() != self.nodes.len() {
            return Err(Error::validation(
                "plan.values",
                format!("{} values for {} nodes", self.values.len(), self.nodes.len()),
            ));
        }
        Ok(())
    }

    pub fn to_plan(&self) -> Result<ImputationPlan> {
        self.values_required()?;
        let entries = self.nodes.iter().zip(&self.values).map(|(&n, v)| {
            let value = match v {
                PlanValue::Scalar(x) => vec![*x],
                PlanValue::Vector(x) => x.clone(),
            };
            (n, value)
        });
        ImputationPlan::new(entries).map_err(|e| Error::validation("plan.nodes", e.to_string()))
    }

    fn scalars(&self) -> Result<Vec<f64>> {
        self.values_required()?;
        self.values
            .iter()
            .map(|v| match v {
                PlanValue::Scalar(x) => Ok(*x),
                PlanValue::Vector(x) if x.len() == 1 => Ok(x[0]),
                PlanValue::Vector(_) => Err(Error::validation("plan.values", "expected scalar values")),
            })
            .collect()
    }
}

/// Exit status for a failed command: 3 when the input is valid but cannot
/// be solved as asked, 2 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::TooLarge { .. } | Error::NonFiniteCost { .. } | Error::Singular(_) | Error::Hypothesis(_) => 3,
        _ => 2,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Cycle { .. } => "cycle",
        Error::BadEdge { .. } => "bad_edge",
        Error::Domain { .. } => "domain",
        Error::TooLarge { .. } => "too_large",
        Error::Hypothesis(_) => "hypothesis",
        Error::Dimension(_) => "dimension",
        Error::Singular(_) => "singular",
        Error::NonFiniteCost { .. } => "non_finite_cost",
        Error::InvalidArgument(_) => "invalid_argument",
        Error::Parse(_) => "parse",
        Error::Validation { .. } => "validation",
    }
}

/// Runs the command line and returns the process exit status. Reports go
/// to `--out` or `stdout`; errors go to `stderr` as one JSON object.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok((text, out)) => match out {
            Some(path) => match std::fs::write(path, text) {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(
                        stderr,
                        "{}",
                        serde_json::json!({"error": "io", "message": e.to_string()})
                    );
                    2
                }
            },
            None => {
                let _ = stdout.write_all(text.as_bytes());
                0
            }
        },
        Err(e) => {
            let _ = writeln!(
                stderr,
                "{}",
                serde_json::json!({"error": error_kind(&e), "message": e.to_string()})
            );
            exit_code(&e)
        }
    }
}

fn execute(command: &Command) -> Result<(String, Option<&PathBuf>)> {
    let started = Instant::now();
    let (text, common) = match command {
        Command::Solve(a) => {
            let p = parse_problem(&a.common.problem)?;
            let result = solve(&p, a)?;
            let r = Report::new("solve", &p, Some(a.seed), Some(a.method.name().into()), result);
            (r.with_wall_time(started.elapsed()).to_json(), &a.common)
        }
        Command::Check(a) => {
            let p = parse_problem(&a.problem)?;
            let r = Report::new("check", &p, None, None, check(&p)?);
            (r.with_wall_time(started.elapsed()).to_json(), a)
        }
        Command::Sample(a) => {
            let p = parse_problem(&a.common.problem)?;
            let r = Report::new("sample", &p, Some(a.seed), None, sample(&p, a)?);
            (r.with_wall_time(started.elapsed()).to_json(), &a.common)
        }
        Command::Eval(a) => {
            let p = parse_problem(&a.common.problem)?;
            let r = Report::new("eval", &p, Some(a.seed), None, eval(&p, a)?);
            (r.with_wall_time(started.elapsed()).to_json(), &a.common)
        }
    };
    Ok((text, common.out.as_ref()))
}

fn mode_for(sem: &Sem, samples: usize, seed: u64) -> ExpectationMode {
    if sem.is_finite() {
        ExpectationMode::Exact
    } else {
        ExpectationMode::MonteCarlo { samples, seed }
    }
}

fn samples_for(p: &LoadedProblem, flag: Option<usize>) -> usize {
    flag.or(p.file.hints.samples).unwrap_or(DEFAULT_SAMPLES)
}

fn constraint_for(p: &LoadedProblem, flag: Option<usize>) -> ConstraintOracle {
    match flag.or(p.file.hints.max_card) {
        Some(k) => ConstraintOracle::cardinality(k),
        None => ConstraintOracle::Unconstrained,
    }
}

#[derive(Debug, Serialize)]
pub struct SolveOutput {
    #[serde(flatten)]
    pub report: SolveReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn set_report(method: Method, set: Subset, objective: f64, values: Option<&dyn Fn(usize) -> Vec<f64>>) -> SolveReport {
    SolveReport {
        method: method.name().into(),
        nodes: set.members().collect(),
        values: values.map_or_else(Vec::new, |v| set.members().map(v).collect()),
        objective,
        std_error: None,
        seed: None,
        samples: None,
        table: Vec::new(),
        wall_time: Default::default(),
    }
}

fn submodularity_warning(f: &SetFunction) -> Result<Vec<String>> {
    if f.ground_size() > MAX_CHECK {
        return Ok(vec![format!(
            "submodularity not verified for {} elements; the result may not be a global minimum",
            f.ground_size()
        )]);
    }
    Ok(match submodularity_violation(f)? {
        Some(v) => vec![format!(
            "objective is not submodular ({:?}); the result may not be a global minimum",
            v
        )],
        None => Vec::new(),
    })
}

fn unsupported(method: Method, p: &LoadedProblem) -> Error {
    Error::InvalidArgument(format!(
        "method `{}` does not apply to `{}` problems",
        method.name(),
        p.kind().name()
    ))
}

fn solve(p: &LoadedProblem, a: &SolveArgs) -> Result<SolveOutput> {
    let samples = samples_for(p, a.samples);
    let mut warnings = Vec::new();
    let report = match (&p.problem, a.method) {
        (Problem::Sem(problem), Method::Brute) => {
            let grid = p.grid(&problem.sem, a.grid.as_deref())?;
            brute_force_solve(problem, &grid, mode_for(&problem.sem, samples, a.seed))?
        }
        (Problem::Sem(problem), Method::LovaszMin) => {
            let values = single_values(p, problem, a.grid.as_deref())?;
            let mode = mode_for(&problem.sem, samples, a.seed);
            let f = single_value_function(problem, &values, mode)?;
            warnings = submodularity_warning(&f)?;
            let min = minimize_single_value(&f, SubgradientOptions::default());
            let mut r = set_report(a.method, min.set, min.value, Some(&|i| values[i].clone()));
            if let ExpectationMode::MonteCarlo { samples, seed } = mode {
                (r.samples, r.seed) = (Some(samples), Some(seed));
            }
            r
        }
        (Problem::AdditiveVariance(spec), Method::Brute) => {
            let f = spec.build_objective()?;
            let (set, value) = brute_force_extremum(&f, &constraint_for(p, a.max_card), Direction::Minimize)?;
            set_report(a.method, set, value, Some(&|_| vec![0.0]))
        }
        (Problem::AdditiveVariance(spec), Method::LovaszMin) => {
            let f = spec.build_objective()?;
            warnings = submodularity_warning(&f)?;
            let min = minimize_single_value(&f, SubgradientOptions::default());
            set_report(a.method, min.set, min.value, Some(&|_| vec![0.0]))
        }
        (Problem::AdditiveVariance(spec), Method::GreedyMax) => {
            let f = spec.build_max_objective()?;
            let set = greedy_maximize(&f, &constraint_for(p, a.max_card));
            set_report(a.method, set, f.eval(set), Some(&|_| vec![0.0]))
        }
        (Problem::LinearGaussian(t), Method::Enumerate) => t.enumerate_solve()?,
        (Problem::SetFunction(f), Method::Brute) => {
            let (set, value) = brute_force_extremum(f, &constraint_for(p, a.max_card), Direction::Minimize)?;
            set_report(a.method, set, value, None)
        }
        (Problem::SetFunction(f), Method::LovaszMin) => {
            warnings = submodularity_warning(f)?;
            let min = minimize_single_value(f, SubgradientOptions::default());
            set_report(a.method, min.set, min.value, None)
        }
        (Problem::SetFunction(f), Method::GreedyMax) => {
            let set = greedy_maximize(f, &constraint_for(p, a.max_card));
            set_report(a.method, set, f.eval(set), None)
        }
        (_, method) => return Err(unsupported(method, p)),
    };
    Ok(SolveOutput { report, warnings })
}

/// The one candidate value of every node, for single-value solvers.
fn single_values(p: &LoadedProblem, problem: &OciProblem, grid: Option<&[f64]>) -> Result<Vec<Vec<f64>>> {
    let grid = p.grid(&problem.sem, grid)?;
    (0..problem.sem.node_count())
        .map(|i| match grid.candidates(i) {
            [only] => Ok(only.clone()),
            c => Err(Error::validation(
                "grid",
                format!(
                    "single-value methods need exactly one candidate per node, node {i} has {}",
                    c.len()
                ),
            )),
        })
        .collect()
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckOutput {
    Sem {
        nodes: usize,
        topological_order: Vec<NodeId>,
        finite: bool,
    },
    AdditiveVariance {
        hypothesis_violations: Vec<HypothesisViolation>,
        #[serde(skip_serializing_if = "Option::is_none")]
        objective: Option<SetFunctionCheck>,
        #[serde(skip_serializing_if = "Option::is_none")]
        max_objective: Option<SetFunctionCheck>,
    },
    LinearGaussian {
        state_dim: usize,
        horizon: usize,
        node_count: usize,
    },
    SetFunction(SetFunctionCheck),
}

#[derive(Debug, Serialize)]
pub struct SetFunctionCheck {
    pub ground_size: usize,
    pub submodular: bool,
    pub submodularity_violation: Option<SubmodularityViolation>,
    pub nondecreasing: bool,
    pub monotonicity_violation: Option<MonotonicityViolation>,
}

impl SetFunctionCheck {
    pub fn of(f: &SetFunction) -> Result<Self> {
        let sv = submodularity_violation(f)?;
        let mv = monotonicity_violation(f)?;
        Ok(SetFunctionCheck {
            ground_size: f.ground_size(),
            submodular: sv.is_none(),
            submodularity_violation: sv,
            nondecreasing: mv.is_none(),
            monotonicity_violation: mv,
        })
    }
}

fn check(p: &LoadedProblem) -> Result<CheckOutput> {
    Ok(match &p.problem {
        Problem::Sem(problem) => CheckOutput::Sem {
            nodes: problem.sem.node_count(),
            topological_order: problem.sem.dag().topological_order().to_vec(),
            finite: problem.sem.is_finite(),
        },
        Problem::AdditiveVariance(spec) => {
            let violations = spec.check_hypotheses().to_vec();
            let checkable = violations.is_empty() && spec.dag().node_count() <= MAX_CHECK;
            let objective = if checkable {
                Some(SetFunctionCheck::of(&spec.build_objective()?)?)
            } else {
                None
            };
            let max_objective = match checkable.then(|| spec.build_max_objective()) {
                Some(Ok(f)) => Some(SetFunctionCheck::of(&f)?),
                _ => None,
            };
            CheckOutput::AdditiveVariance {
                hypothesis_violations: violations,
                objective,
                max_objective,
            }
        }
        Problem::LinearGaussian(t) => CheckOutput::LinearGaussian {
            state_dim: t.state_dim(),
            horizon: t.horizon(),
            node_count: t.node_count(),
        },
        Problem::SetFunction(f) => CheckOutput::SetFunction(SetFunctionCheck::of(f)?),
    })
}

fn simulation_model(p: &LoadedProblem) -> Result<Sem> {
    match &p.problem {
        Problem::Sem(problem) => Ok(problem.sem.clone()),
        Problem::AdditiveVariance(spec) => spec.materialize(),
        Problem::LinearGaussian(t) => t.to_sem(),
        Problem::SetFunction(_) => Err(Error::InvalidArgument(
            "`set_function` problems have no model to sample".into(),
        )),
    }
}

#[derive(Debug, Serialize)]
pub struct SampleOutput {
    pub samples: Vec<SampleRecord>,
}

#[derive(Debug, Serialize)]
pub struct SampleRecord {
    pub index: u64,
    pub values: Vec<Vec<f64>>,
}

fn sample(p: &LoadedProblem, a: &SampleArgs) -> Result<SampleOutput> {
    let sem = simulation_model(p)?;
    let plan = match &a.plan {
        Some(text) => PlanArg::parse(text)?.to_plan()?,
        None => ImputationPlan::empty(),
    };
    sem.check_plan(&plan)?;
    let samples = (0..a.samples as u64)
        .map(|k| {
            let x = sem.realize(sem.noise_record(a.seed, k), &plan)?;
            let values = (0..sem.node_count()).map(|i| x.value(i).to_vec()).collect();
            Ok(SampleRecord { index: k, values })
        })
        .collect::<Result<_>>()?;
    Ok(SampleOutput { samples })
}

#[derive(Debug, Serialize)]
pub struct EvalOutput {
    pub nodes: Vec<NodeId>,
    pub objective: f64,
    pub std_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imputation_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_system_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

fn eval(p: &LoadedProblem, a: &EvalArgs) -> Result<EvalOutput> {
    let plan = PlanArg::parse(&a.plan)?;
    let mut nodes = plan.nodes.clone();
    nodes.sort_unstable();
    Ok(match &p.problem {
        Problem::Sem(problem) => {
            let mode = mode_for(&problem.sem, samples_for(p, a.samples), a.seed);
            let e = evaluate(problem, &plan.to_plan()?, mode)?;
            EvalOutput {
                nodes,
                objective: e.objective,
                std_error: e.std_error,
                imputation_cost: Some(e.imputation_cost),
                expected_system_cost: Some(e.expected_system_cost),
                samples: match mode {
                    ExpectationMode::MonteCarlo { samples, .. } => Some(samples),
                    ExpectationMode::Exact => None,
                },
            }
        }
        Problem::AdditiveVariance(spec) => {
            let set = subset_of(&plan.nodes, spec.dag().node_count())?;
            if !plan.values.is_empty() && plan.scalars()?.iter().any(|&v| v != 0.0) {
                return Err(Error::validation(
                    "plan.values",
                    "additive problems impute every node to 0",
                ));
            }
            let variance = spec.closed_form_variance(set)?;
            let cost = spec.cost().eval(set);
            EvalOutput {
                nodes,
                objective: cost + variance,
                std_error: 0.0,
                imputation_cost: Some(cost),
                expected_system_cost: Some(variance),
                samples: None,
            }
        }
        Problem::LinearGaussian(t) => {
            let set = subset_of(&plan.nodes, t.node_count())?;
            let mut xbar = DVector::zeros(t.node_count());
            for (&i, x) in plan.nodes.iter().zip(plan.scalars()?) {
                xbar[i] = x;
            }
            let objective = t.analytic_objective(set, &xbar)?;
            let cost = t.imputation_cost(set, &xbar);
            EvalOutput {
                nodes,
                objective,
                std_error: 0.0,
                imputation_cost: Some(cost),
                expected_system_cost: Some(objective - cost),
                samples: None,
            }
        }
        Problem::SetFunction(f) => {
            let set = subset_of(&plan.nodes, f.ground_size())?;
            EvalOutput {
                nodes,
                objective: f.eval(set),
                std_error: 0.0,
                imputation_cost: None,
                expected_system_cost: None,
                samples: None,
            }
        }
    })
}
