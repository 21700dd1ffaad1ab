//! Problem files, reports and the command-line front end.

pub mod cli;
mod problem;
mod report;

pub use problem::{
    parse_problem, parse_problem_str, AdditiveBody, Hints, LinearGaussianBody, LoadedProblem, MechanismSpec, NodeSpec,
    Problem, ProblemBody, ProblemFile, ProblemKind, SemBody, SetFunctionSpec, FORMAT_VERSION,
};
pub use report::{strip_timing, Report, Timing, TOOL, TOOL_VERSION};
