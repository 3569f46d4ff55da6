//! Machine-readable report envelopes emitted by the CLI. The schema is
//! versioned; reports are deterministic (byte-identical) for fixed inputs
//! and seed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifier::ClassReport;
use crate::jet::{Jet, Point4};
use crate::manifold::InverseData;
use crate::tensor::{Matrix4, Tensor3};
use crate::verify::MetricVerification;

pub const SCHEMA_VERSION: u32 = 1;

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub metric: String,
    pub constants: BTreeMap<String, f64>,
    #[serde(flatten)]
    pub classification: ClassReport,
}

impl ClassifyReport {
    pub fn new(
        metric: String,
        constants: BTreeMap<String, f64>,
        classification: ClassReport,
    ) -> Self {
        ClassifyReport {
            schema_version: SCHEMA_VERSION,
            tool_version: tool_version().to_string(),
            command: "classify".to_string(),
            metric,
            constants,
            classification,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub samples_requested: usize,
    pub metrics: Vec<MetricVerification>,
    pub all_passed: bool,
}

impl VerifyReport {
    pub fn new(seed: u64, samples_requested: usize, metrics: Vec<MetricVerification>) -> Self {
        let all_passed = metrics.iter().all(|m| m.all_passed);
        VerifyReport {
            schema_version: SCHEMA_VERSION,
            tool_version: tool_version().to_string(),
            command: "verify".to_string(),
            seed,
            samples_requested,
            metrics,
            all_passed,
        }
    }
}

/// Pointwise dump of every tensor object at a single point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComponentsReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub metric: String,
    pub point: Point4,
    pub constants: BTreeMap<String, f64>,
    /// Coefficient jets A, B, C at the point.
    pub coefficients: BTreeMap<String, Jet>,
    pub g: Matrix4,
    pub g_tilde: Matrix4,
    pub g_inverse: Matrix4,
    pub g_inverse_coefficients: InverseData,
    /// Γ^k_ij from the generic formula, indexed `[i][j][k]`.
    pub christoffel: Tensor3,
    /// F_ijk from the closed form (cross-validated against the oracle).
    pub fundamental: Tensor3,
    pub theta: [f64; 4],
    pub theta_tilde: [f64; 4],
    /// Nijenhuis tensor of P, indexed `[i][j][k]` = N_ij^k.
    pub nijenhuis: Tensor3,
}
