//! Solver reports and the query ledger.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::filter::MeasureMode;
use crate::qlsp::Form;

/// Tag carried by every estimate that is computed from a closed-form count
/// rather than measured.
pub const FORMULA_FLAG: &str = "formula-derived";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaEstimate {
    pub value: f64,
    pub formula: String,
    pub flag: String,
}

impl FormulaEstimate {
    pub fn new(value: f64, formula: impl Into<String>) -> Self {
        Self {
            value,
            formula: formula.into(),
            flag: FORMULA_FLAG.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub kappa: f64,
    pub d: usize,
    /// System dimension `N`.
    pub n: usize,
    pub form: Form,
    pub eps: f64,
    pub mode: MeasureMode,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub method: String,
    pub params: SolverParams,
    /// `|⟨x|x̃⟩|` against the direct solve.
    pub final_fidelity: f64,
    /// Success probability of every measurement stage of one run.
    pub success_probabilities: Vec<f64>,
    pub total_success_probability: f64,
    /// Attempts until success (1 in postselect mode).
    pub attempts: u64,
    /// Exact query counts summed over all attempts.
    pub query_ledger: BTreeMap<String, u64>,
    /// Queries of one run divided by its success probability.
    pub expected_queries: f64,
    pub formula_derived_costs: BTreeMap<String, FormulaEstimate>,
}

impl SolverReport {
    /// Sum of all measured ledger entries with the given prefix.
    pub fn ledger_total(&self, prefix: &str) -> u64 {
        self.query_ledger
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .map(|(_, v)| v)
            .sum()
    }
}
