use std::time::Duration;

use serde::Serialize;

use super::problem::{LoadedProblem, ProblemKind};

pub const TOOL: &str = "oci";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything a command writes. `timing` is serialized last so the rest of
/// the file can be compared byte for byte across runs.
#[derive(Debug, Clone, Serialize)]
pub struct Report<T> {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub problem_kind: ProblemKind,
    pub problem_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    pub result: T,
    pub timing: Timing,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

impl<T: Serialize> Report<T> {
    pub fn new(
        command: &'static str,
        problem: &LoadedProblem,
        seed: Option<u64>,
        method: Option<String>,
        result: T,
    ) -> Self {
        Report {
            tool: TOOL,
            tool_version: TOOL_VERSION,
            command,
            problem_kind: problem.kind(),
            problem_digest: problem.digest.clone(),
            seed,
            method,
            result,
            timing: Timing { wall_seconds: 0.0 },
        }
    }

    pub fn with_wall_time(mut self, elapsed: Duration) -> Self {
        self.timing.wall_seconds = elapsed.as_secs_f64();
        self
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports serialize");
        text.push('\n');
        text
    }
}

/// The report text up to, not including, the timing block.
pub fn strip_timing(report: &str) -> &str {
    match report.rfind(",\n  \"timing\"") {
        Some(pos) => &report[..pos],
        None => report,
    }
}
