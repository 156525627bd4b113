//! Job requests.

use std::path::{Component, Path};

use polypareto::{Molp, ObjectiveMode, Polynomial, Region, ShapeMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ApiError, Result};

/// Version of every JSON document this crate reads or writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Inner,
    Outer,
    Certificate,
}

/// The problem inline, or a JSON file relative to the service's problem
/// directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    Inline(Molp),
    Reference { reference: String },
}

fn version() -> u32 {
    SCHEMA_VERSION
}

fn one() -> usize {
    1
}

fn closed_form() -> ObjectiveMode {
    ObjectiveMode::ClosedForm
}

fn default_samples() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximationRequest {
    #[serde(default = "version")]
    pub v: u32,
    pub task: Task,
    pub molp: ProblemSource,
    pub region: Region,
    #[serde(default = "one")]
    pub degree: usize,
    #[serde(default)]
    pub shape: ShapeMode,
    #[serde(default = "closed_form")]
    pub objective: ObjectiveMode,
    /// `t(u)` of a certificate task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<Polynomial>,
    /// Seed of the soundness samples.
    #[serde(default)]
    pub seed: u64,
    /// Number of soundness samples.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Points per axis of the oracle-gap grid; no gap is computed when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_grid: Option<usize>,
}

impl ApproximationRequest {
    pub fn new(task: Task, molp: Molp, region: Region, degree: usize) -> Self {
        Self {
            v: SCHEMA_VERSION,
            task,
            molp: ProblemSource::Inline(molp),
            region,
            degree,
            shape: ShapeMode::None,
            objective: ObjectiveMode::ClosedForm,
            bound: None,
            seed: 0,
            samples: default_samples(),
            oracle_grid: None,
        }
    }

    pub fn problem(&self) -> Result<&Molp> {
        match &self.molp {
            ProblemSource::Inline(m) => Ok(m),
            ProblemSource::Reference { reference } => Err(ApiError::Invalid(format!(
                "problem reference {reference} was not resolved"
            ))),
        }
    }

    /// Replace a problem reference by the problem it names.
    pub fn resolve(mut self, problem_dir: Option<&Path>) -> Result<Self> {
        if let ProblemSource::Reference { reference } = &self.molp {
            let dir = problem_dir
                .ok_or_else(|| ApiError::Invalid("problem references are not enabled".into()))?;
            let rel = Path::new(reference);
            if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
                return Err(ApiError::Invalid(format!(
                    "problem reference must be a relative path: {reference}"
                )));
            }
            let text = std::fs::read_to_string(dir.join(rel))
                .map_err(|e| ApiError::Invalid(format!("problem {reference}: {e}")))?;
            let molp: Molp = serde_json::from_str(&text)
                .map_err(|e| ApiError::Invalid(format!("problem {reference}: {e}")))?;
            self.molp = ProblemSource::Inline(molp);
        }
        Ok(self)
    }

    /// Checks that need no solve. Planning errors surface here for inner
    /// tasks.
    pub fn validate(&self) -> Result<()> {
        if self.v != SCHEMA_VERSION {
            return Err(ApiError::Invalid(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.v
            )));
        }
        let molp = self.problem()?;
        if self.samples == 0 {
            return Err(ApiError::Invalid("samples must be positive".into()));
        }
        match self.task {
            Task::Inner => {
                polypareto::plan(molp, &self.region, self.degree, self.shape, self.objective)?;
            }
            Task::Outer => {
                if self.degree != 1 {
                    return Err(ApiError::Invalid(
                        "outer approximations are affine; use degree 1".into(),
                    ));
                }
                molp.check()?;
                self.region.validate()?;
            }
            Task::Certificate => {
                let bound = self
                    .bound
                    .as_ref()
                    .ok_or_else(|| ApiError::Invalid("certificate task needs a bound".into()))?;
                bound.validate()?;
                molp.check()?;
                self.region.validate()?;
            }
        }
        Ok(())
    }

    /// Content hash of the request, used as the job id.
    pub fn job_id(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
