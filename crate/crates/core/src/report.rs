//! JSON run reports.
//!
//! ```text
//! {instance:{n,m,family}, config:{...}, result:{congestion, cut_ratio,
//!  epsilon_achieved, converged, ...}, stats:{...}, timing:{...}}
//! ```
//!
//! Everything outside `timing` is a function of the input, the seed and the
//! config, so two runs of the same command differ only there.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::driver::{RecursionConfig, RecursionStats};
use crate::error::{FlowError, Result};
use crate::graph::{FlowCutSolution, Graph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub n: usize,
    pub m: usize,
    /// Generator spec, or the input path for files.
    pub family: String,
}

impl InstanceInfo {
    pub fn of(graph: &Graph, family: impl Into<String>) -> Self {
        InstanceInfo {
            n: graph.n(),
            m: graph.m(),
            family: family.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultInfo {
    #[serde(with = "unbounded")]
    pub congestion: f64,
    #[serde(with = "unbounded")]
    pub cut_ratio: f64,
    #[serde(with = "unbounded")]
    pub epsilon_achieved: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Max-flow value for s-t runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_emp: Option<f64>,
    /// Exact optimum when an oracle was run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_opt: Option<f64>,
}

impl ResultInfo {
    pub fn of(solution: &FlowCutSolution) -> Self {
        ResultInfo {
            congestion: solution.flow_congestion,
            cut_ratio: solution.cut_ratio,
            epsilon_achieved: solution.epsilon_achieved,
            converged: solution.converged,
            iterations: solution.iterations,
            value: None,
            alpha_emp: None,
            oracle_opt: None,
        }
    }
}

/// Stage name to seconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing(pub BTreeMap<String, f64>);

impl Timing {
    pub fn record(&mut self, stage: &str, seconds: f64) {
        *self.0.entry(stage.to_string()).or_insert(0.0) += seconds;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: InstanceInfo,
    pub seed: u64,
    pub epsilon: f64,
    pub config: RecursionConfig,
    pub result: ResultInfo,
    pub stats: RecursionStats,
    pub timing: Timing,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| FlowError::parse(e.line(), e.to_string()))
    }

    /// The report with `timing` emptied: identical for identical runs.
    pub fn without_timing(&self) -> RunReport {
        RunReport {
            timing: Timing::default(),
            ..self.clone()
        }
    }
}

/// Infinite ratios (unroutable demand, zero cuts) travel as `null`.
mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
