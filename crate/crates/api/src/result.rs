//! Job results and surface meshes.

use polypareto::robust::diagnostics::{
    InfeasibilityDiagnosis, OracleGap, SoundnessReport, Tangency,
};
use polypareto::{CertificateVerdict, OuterApproximation, PolynomialRule, ReformulationPlan};
use polypareto_conic::{ConicSolution, KktResiduals, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::request::ApproximationRequest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    /// Solved, and the rule passed the soundness sample test.
    Success,
    /// The inner program has no solution; see the diagnosis.
    Infeasible,
    NoCertificate,
    /// A rule was recovered but failed the soundness sample test.
    Unsound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Output {
    Rule {
        rule: PolynomialRule,
        /// Read from a solve that stalled at a feasible point.
        reduced_accuracy: bool,
    },
    Outer {
        approximation: OuterApproximation,
    },
    Certificate {
        verdict: CertificateVerdict,
    },
    Infeasible {
        diagnosis: InfeasibilityDiagnosis,
    },
}

impl Output {
    pub fn rule(&self) -> Option<&PolynomialRule> {
        match self {
            Output::Rule { rule, .. } => Some(rule),
            Output::Certificate {
                verdict: CertificateVerdict::Certified { rule },
            } => Some(rule),
            _ => None,
        }
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_residual: Option<f64>,
    pub dual_residual: Option<f64>,
    pub gap: Option<f64>,
    /// Largest unscaled KKT residual of the returned point.
    pub kkt_max: Option<f64>,
}

impl SolverReport {
    pub fn new(sol: &ConicSolution, kkt: Option<&KktResiduals>) -> Self {
        Self {
            status: sol.status,
            iterations: sol.iterations,
            primal_residual: finite(sol.primal_residual),
            dual_residual: finite(sol.dual_residual),
            gap: finite(sol.gap),
            kkt_max: kkt.and_then(|k| finite(k.max())),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverReport>,
    /// Feasibility, tightness and dominance on sampled parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soundness: Option<SoundnessReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_gap: Option<OracleGap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tangency: Option<Tangency>,
    /// Attainable range of each parameter objective (outer jobs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attainable: Option<Vec<(f64, f64)>>,
    /// Part of the outer approximation lies over unattainable values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meaningless_part: Option<bool>,
    /// `max c^k'x(u) - t(u)` over the samples (certificate jobs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_violation: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub build_ms: f64,
    pub solve_ms: f64,
    pub diagnostics_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximationResult {
    pub v: u32,
    pub id: String,
    pub request: ApproximationRequest,
    pub status: JobStatus,
    pub plan: ReformulationPlan,
    pub output: Output,
    /// Optimal value of the inner program (average or integral of the last
    /// objective), or the integral of ℓ for outer jobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    pub diagnostics: Diagnostics,
    pub timings: Timings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshPoint {
    pub u: Vec<f64>,
    /// Last objective on the surface: `c^k'x(u)` or `ℓ(u)`.
    pub fk: f64,
    /// Every objective of `x(u)`, absent for outer surfaces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objectives: Option<Vec<f64>>,
    /// ε-constraint front at `u`, when requested and feasible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Inner,
    Outer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub v: u32,
    pub id: String,
    pub kind: SurfaceKind,
    /// Logical grid dimensions; a single entry for scattered points.
    pub shape: Vec<usize>,
    pub points: Vec<MeshPoint>,
}
