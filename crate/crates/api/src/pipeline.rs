//! plan → build → solve → recover → diagnostics.

use std::path::PathBuf;
use std::time::Instant;

use polypareto::robust::diagnostics::{diagnose_infeasibility, oracle_gap, soundness, tangency};
use polypareto::{
    build_certificate_dominated, build_inner, build_outer_linear, certificate_verdict,
    pareto_front_oracle, plan, recover_rule, BuiltProgram, CertificateVerdict, OuterProgram,
    Region, ShapeMode,
};
use polypareto_conic::{kkt_residuals, solve, ConicProgram, SolveStatus, SolverOptions};

use crate::error::{ApiError, Result};
use crate::grid::GridSpec;
use crate::request::{ApproximationRequest, Task, SCHEMA_VERSION};
use crate::result::{
    ApproximationResult, Diagnostics, JobStatus, Mesh, MeshPoint, Output, SolverReport,
    SurfaceKind, Timings,
};

/// A built program before solving.
pub enum Prepared {
    Inner(BuiltProgram),
    Outer(OuterProgram),
    Certificate(BuiltProgram),
}

impl Prepared {
    pub fn program(&self) -> &ConicProgram {
        match self {
            Prepared::Inner(b) | Prepared::Certificate(b) => &b.program,
            Prepared::Outer(o) => &o.program,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Pipeline {
    pub solver: SolverOptions,
    /// Directory that problem references resolve against.
    pub problem_dir: Option<PathBuf>,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl Pipeline {
    /// Resolve references and validate.
    pub fn accept(&self, req: ApproximationRequest) -> Result<ApproximationRequest> {
        let req = req.resolve(self.problem_dir.as_deref())?;
        req.validate()?;
        Ok(req)
    }

    pub fn prepare(&self, req: &ApproximationRequest) -> Result<Prepared> {
        let molp = req.problem()?;
        Ok(match req.task {
            Task::Inner => {
                let p = plan(molp, &req.region, req.degree, req.shape, req.objective)?;
                Prepared::Inner(build_inner(molp, &req.region, &p)?)
            }
            Task::Outer => Prepared::Outer(build_outer_linear(molp, &req.region)?),
            Task::Certificate => {
                let bound = req
                    .bound
                    .as_ref()
                    .ok_or_else(|| ApiError::Invalid("certificate task needs a bound".into()))?;
                Prepared::Certificate(build_certificate_dominated(
                    molp,
                    &req.region,
                    bound,
                    req.degree,
                )?)
            }
        })
    }

    pub fn run(&self, req: ApproximationRequest) -> Result<ApproximationResult> {
        let req = self.accept(req)?;
        match req.task {
            Task::Inner => self.approximate_inner(req),
            Task::Outer => self.approximate_outer(req),
            Task::Certificate => self.certify_dominated(req),
        }
    }

    pub fn approximate_inner(&self, req: ApproximationRequest) -> Result<ApproximationResult> {
        let t = Instant::now();
        let Prepared::Inner(built) = self.prepare(&req)? else {
            return Err(ApiError::Invalid("task is not inner".into()));
        };
        let mut timings = Timings {
            build_ms: ms(t),
            ..Timings::default()
        };
        let t = Instant::now();
        let sol = solve(&built.program, &self.solver)?;
        timings.solve_ms = ms(t);

        let t = Instant::now();
        let molp = req.problem()?;
        let mut diagnostics = Diagnostics::default();
        let (status, output, objective) = if sol.status == SolveStatus::Infeasible {
            diagnostics.solver = Some(SolverReport::new(&sol, None));
            let diagnosis = diagnose_infeasibility(molp, &req.region)?;
            (
                JobStatus::Infeasible,
                Output::Infeasible { diagnosis },
                None,
            )
        } else {
            diagnostics.solver = Some(SolverReport::new(
                &sol,
                Some(&kkt_residuals(&built.program, &sol)),
            ));
            let recovered = recover_rule(&built, &sol).map_err(|e| match e {
                polypareto::Error::BadStatus(s) => ApiError::SolverFailure(format!(
                    "solver ended {s:?} with primal residual {:.2e}",
                    sol.primal_residual
                )),
                e => e.into(),
            })?;
            if recovered.reduced_accuracy {
                diagnostics.notes.push(format!(
                    "solver stalled at a feasible point (primal residual {:.1e}, gap {:.1e}); \
                     the region likely touches the boundary of the attainable set",
                    sol.primal_residual, sol.gap
                ));
            }
            let pts = req.region.sample(req.samples, req.seed)?;
            let report = soundness(molp, &recovered.rule, &pts, true)?;
            if report.image_dominates {
                diagnostics
                    .notes
                    .push("the rule's objective image dominates the parametric surface".into());
            }
            let status = if report.passed {
                JobStatus::Success
            } else {
                JobStatus::Unsound
            };
            diagnostics.soundness = Some(report);
            if let Some(n) = req.oracle_grid {
                let gap = oracle_gap(molp, &recovered.rule, &req.region.grid(n)?)?;
                if gap.points > gap.infeasible_points {
                    diagnostics.oracle_gap = Some(gap);
                } else {
                    diagnostics
                        .notes
                        .push("oracle is infeasible on the whole grid".into());
                }
            }
            (
                status,
                Output::Rule {
                    rule: recovered.rule,
                    reduced_accuracy: recovered.reduced_accuracy,
                },
                Some(sol.objective),
            )
        };
        timings.diagnostics_ms = ms(t);
        Ok(ApproximationResult {
            v: SCHEMA_VERSION,
            id: req.job_id(),
            plan: built.plan.clone(),
            request: req,
            status,
            output,
            objective,
            diagnostics,
            timings,
        })
    }

    pub fn approximate_outer(&self, req: ApproximationRequest) -> Result<ApproximationResult> {
        let t = Instant::now();
        let Prepared::Outer(built) = self.prepare(&req)? else {
            return Err(ApiError::Invalid("task is not outer".into()));
        };
        let mut timings = Timings {
            build_ms: ms(t),
            ..Timings::default()
        };
        let t = Instant::now();
        let sol = solve(&built.program, &self.solver)?;
        timings.solve_ms = ms(t);
        let t = Instant::now();
        let outer = built.recover(&sol).map_err(|_| {
            ApiError::SolverFailure(format!("outer program ended {:?}", sol.status))
        })?;
        let molp = req.problem()?;
        let per_axis = if req.region.dim() == 1 { 101 } else { 21 };
        let mut diagnostics = Diagnostics {
            solver: Some(SolverReport::new(
                &sol,
                Some(&kkt_residuals(&built.program, &sol)),
            )),
            tangency: Some(tangency(molp, &outer, &req.region, per_axis)?),
            attainable: Some(built.attainable.clone()),
            meaningless_part: Some(built.meaningless_part),
            ..Diagnostics::default()
        };
        if built.meaningless_part {
            diagnostics.notes.push(
                "part of the outer approximation is meaningless: the region reaches \
                 objective values no feasible point attains"
                    .into(),
            );
        }
        timings.diagnostics_ms = ms(t);
        Ok(ApproximationResult {
            v: SCHEMA_VERSION,
            id: req.job_id(),
            plan: built.plan.clone(),
            request: req,
            status: JobStatus::Success,
            output: Output::Outer {
                approximation: outer,
            },
            objective: Some(-sol.objective),
            diagnostics,
            timings,
        })
    }

    pub fn certify_dominated(&self, req: ApproximationRequest) -> Result<ApproximationResult> {
        let t = Instant::now();
        let Prepared::Certificate(built) = self.prepare(&req)? else {
            return Err(ApiError::Invalid("task is not certificate".into()));
        };
        let mut timings = Timings {
            build_ms: ms(t),
            ..Timings::default()
        };
        let t = Instant::now();
        let sol = solve(&built.program, &self.solver)?;
        timings.solve_ms = ms(t);
        let t = Instant::now();
        let verdict = certificate_verdict(&built, &sol).map_err(|e| match e {
            polypareto::Error::BadStatus(s) => {
                ApiError::SolverFailure(format!("certificate program ended {s:?}"))
            }
            e => e.into(),
        })?;
        let mut diagnostics = Diagnostics {
            solver: Some(SolverReport::new(&sol, None)),
            ..Diagnostics::default()
        };
        let status = match &verdict {
            CertificateVerdict::Certified { rule } => {
                let molp = req.problem()?;
                let bound = req.bound.as_ref().expect("validated");
                let pts = req.region.sample(req.samples, req.seed)?;
                let report = soundness(molp, rule, &pts, false)?;
                let mut worst = f64::NEG_INFINITY;
                for u in &pts {
                    let fk = *rule.objective_curve(molp, u)?.f.last().expect("k >= 2");
                    worst = worst.max(fk - bound.eval(u));
                }
                diagnostics.bound_violation = Some(worst);
                let ok = report.passed && worst <= polypareto::robust::diagnostics::SOUNDNESS_TOL;
                diagnostics.soundness = Some(report);
                if ok {
                    JobStatus::Success
                } else {
                    JobStatus::Unsound
                }
            }
            CertificateVerdict::NoCertificateAtDegree { .. } => {
                diagnostics.notes.push(
                    "no rule of this degree certifies the set; this does not show that \
                     the set is not dominated"
                        .into(),
                );
                JobStatus::NoCertificate
            }
        };
        timings.diagnostics_ms = ms(t);
        Ok(ApproximationResult {
            v: SCHEMA_VERSION,
            id: req.job_id(),
            plan: built.plan.clone(),
            request: req,
            status,
            output: Output::Certificate { verdict },
            objective: None,
            diagnostics,
            timings,
        })
    }
}

/// Evaluate a result's surface on a grid of its region.
pub fn evaluate_surface(
    result: &ApproximationResult,
    grid: &GridSpec,
    with_oracle: bool,
) -> Result<Mesh> {
    let region = &result.request.region;
    let molp = result.request.problem()?;
    let g = grid.points(region)?;
    let oracle: Vec<Option<f64>> = if with_oracle {
        pareto_front_oracle(molp, &g.points)?
            .into_iter()
            .map(|p| p.fk)
            .collect()
    } else {
        vec![None; g.points.len()]
    };
    let (kind, points) = match (&result.output, result.output.rule()) {
        (_, Some(rule)) => {
            let pts = g
                .points
                .iter()
                .zip(oracle)
                .map(|(u, oracle)| {
                    let f = rule.objective_curve(molp, u)?.f;
                    Ok(MeshPoint {
                        u: u.clone(),
                        fk: *f.last().expect("k >= 2"),
                        objectives: Some(f),
                        oracle,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (SurfaceKind::Inner, pts)
        }
        (Output::Outer { approximation }, None) => {
            let pts = g
                .points
                .iter()
                .zip(oracle)
                .map(|(u, oracle)| MeshPoint {
                    u: u.clone(),
                    fk: approximation.eval(u),
                    objectives: None,
                    oracle,
                })
                .collect();
            (SurfaceKind::Outer, pts)
        }
        _ => {
            return Err(ApiError::NoSurface(format!(
                "job ended {:?} without a rule or ℓ",
                result.status
            )))
        }
    };
    Ok(Mesh {
        v: SCHEMA_VERSION,
        id: result.id.clone(),
        kind,
        shape: g.shape,
        points,
    })
}

/// Every sample and grid point of `sub` lies in `parent`.
pub fn contained(parent: &Region, sub: &Region) -> Result<bool> {
    sub.validate()?;
    if sub.dim() != parent.dim() {
        return Ok(false);
    }
    let mut pts = sub.sample(500, 0)?;
    pts.extend(sub.grid(5)?);
    if let Region::Interval { .. } | Region::Box { .. } = sub {
        let (lo, hi) = sub.bounding_box()?;
        pts.push(lo);
        pts.push(hi);
    }
    for u in &pts {
        if !parent.contains(u)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A copy of `parent` restricted to `subregion`, optionally with a new
/// degree and shape.
pub fn refine(
    parent: &ApproximationRequest,
    subregion: Region,
    degree: Option<usize>,
    shape: Option<ShapeMode>,
) -> Result<ApproximationRequest> {
    if !contained(&parent.region, &subregion)? {
        return Err(ApiError::NotContained(format!(
            "{} is not inside {}",
            serde_json::to_string(&subregion)?,
            serde_json::to_string(&parent.region)?
        )));
    }
    let mut child = parent.clone();
    child.region = subregion;
    if let Some(d) = degree {
        child.degree = d;
    }
    if let Some(s) = shape {
        child.shape = s;
    }
    child.validate()?;
    Ok(child)
}
