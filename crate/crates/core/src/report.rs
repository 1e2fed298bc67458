//! Self-contained run reports.
//!
//! A [`RunReport`] carries everything needed to repeat an inference run:
//! the network text, the query and evidence as `Name=0|1` lists, the
//! tolerances, the full configuration and the seed. [`RunReport::replay`]
//! re-executes those inputs; the estimate comes back bit-identical.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dependence::satisfies_ras;
use crate::format::{parse_bindings, parse_network, BindingError, FormatError};
use crate::network::{Assignment, BeliefNetwork};
use crate::oracle::{exact_conditional, exact_phi_min, OracleError};
use crate::reformulation::{
    infer, InferenceConfig, InferenceResult, PartialDiagnostics, ReformulationError,
};

/// Version string recorded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum RunError {
    #[error("network: {0}")]
    Format(#[from] FormatError),
    #[error("bindings: {0}")]
    Binding(#[from] BindingError),
    #[error(transparent)]
    Inference(#[from] ReformulationError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInputs {
    /// Network in `.bnet` text form.
    pub network: String,
    pub query: String,
    pub evidence: String,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub config: InferenceConfig,
}

/// A run's inputs after parsing.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub net: BeliefNetwork,
    pub query: Assignment,
    pub evidence: Assignment,
}

impl RunInputs {
    pub fn prepare(&self) -> Result<PreparedRun, RunError> {
        let net = parse_network(&self.network)?;
        let query = parse_bindings(&net, &self.query)?;
        let evidence = parse_bindings(&net, &self.evidence)?;
        Ok(PreparedRun {
            net,
            query,
            evidence,
        })
    }

    pub fn execute(&self, run: &PreparedRun) -> Result<InferenceResult, ReformulationError> {
        infer(
            &run.net,
            &run.query,
            &run.evidence,
            self.epsilon,
            self.delta,
            &self.config,
            self.seed,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    /// Exact `Pr[query | evidence]`.
    pub value: f64,
    pub satisfies_ras: bool,
    /// Exact smallest instantiation probability of the selected set, when
    /// one was selected.
    pub phi_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub network_name: String,
    pub inputs: RunInputs,
    pub wall_ms: f64,
    /// Names of the selected conditioning nodes, in selection order.
    pub selected_s_names: Vec<String>,
    pub result: InferenceResult,
    pub oracle: Option<OracleCheck>,
}

/// What a failed run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub version: String,
    pub inputs: RunInputs,
    pub wall_ms: f64,
    pub error: String,
    pub budget_exceeded: bool,
    pub partial: Option<PartialDiagnostics>,
}

impl FailureReport {
    pub fn new(inputs: RunInputs, wall_ms: f64, error: &ReformulationError) -> Self {
        let partial = match error {
            ReformulationError::BudgetExceeded { partial, .. } => Some((**partial).clone()),
            _ => None,
        };
        FailureReport {
            version: VERSION.to_string(),
            inputs,
            wall_ms,
            error: error.to_string(),
            budget_exceeded: error.is_budget(),
            partial,
        }
    }
}

impl RunReport {
    /// Runs `inputs`, optionally checking the estimate against the exact
    /// oracle. An inference failure is returned with a [`FailureReport`].
    pub fn run(inputs: RunInputs, with_oracle: bool) -> Result<RunReport, RunFailure> {
        let prepared = inputs.prepare().map_err(RunFailure::Setup)?;
        let start = Instant::now();
        let outcome = inputs.execute(&prepared);
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let result = match outcome {
            Ok(r) => r,
            Err(e) => {
                let report = FailureReport::new(inputs, wall_ms, &e);
                return Err(RunFailure::Inference(e, Box::new(report)));
            }
        };
        let oracle = if with_oracle {
            Some(oracle_check(&prepared, &result).map_err(RunFailure::Setup)?)
        } else {
            None
        };
        Ok(RunReport {
            version: VERSION.to_string(),
            network_name: prepared.net.name().to_string(),
            selected_s_names: prepared.net.names_of(&result.selected_s),
            inputs,
            wall_ms,
            result,
            oracle,
        })
    }

    /// Re-executes the recorded inputs.
    pub fn replay(&self) -> Result<InferenceResult, RunError> {
        let prepared = self.inputs.prepare()?;
        Ok(self.inputs.execute(&prepared)?)
    }

    /// True when a replay yields the recorded estimate bit for bit.
    pub fn reproduces(&self) -> Result<bool, RunError> {
        Ok(self.replay()?.estimate.to_bits() == self.result.estimate.to_bits())
    }
}

#[derive(Debug, Error)]
pub enum RunFailure {
    #[error(transparent)]
    Setup(RunError),
    #[error("{0}")]
    Inference(ReformulationError, Box<FailureReport>),
}

fn oracle_check(run: &PreparedRun, result: &InferenceResult) -> Result<OracleCheck, RunError> {
    let value = exact_conditional(&run.net, &run.query, &run.evidence)?;
    let phi_min = if result.selected_s.is_empty() {
        None
    } else {
        Some(exact_phi_min(&run.net, &result.selected_s)?)
    };
    Ok(OracleCheck {
        value,
        satisfies_ras: satisfies_ras(value, result.estimate, result.epsilon),
        phi_min,
    })
}
