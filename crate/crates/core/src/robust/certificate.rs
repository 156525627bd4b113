//! Dominated-set certificates.

use polypareto_conic::{ConicSolution, SolveStatus};
use serde::{Deserialize, Serialize};

use super::inner::{add_inner_constraints, enforcer_for};
use super::{
    check_inputs, recover_rule, select_method, sos_degrees, sos_region, BuiltProgram, Method,
    ObjectiveMode, ReformulationPlan, ShapeMode,
};
use crate::error::{Error, Result};
use crate::molp::Molp;
use crate::poly::Polynomial;
use crate::regions::Region;
use crate::rule::PolynomialRule;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CertificateVerdict {
    /// Every point `(u, t(u))` is weakly dominated by `f(x(u))`.
    Certified { rule: PolynomialRule },
    /// No rule of this degree exists. This says nothing about whether the
    /// set is dominated.
    NoCertificateAtDegree { degree: usize },
}

/// Feasibility program for a rule with `c^k'x(u) <= t(u)` on top of the
/// inner-approximation constraints.
pub fn build_certificate_dominated(
    molp: &Molp,
    region: &Region,
    bound: &Polynomial,
    degree: usize,
) -> Result<BuiltProgram> {
    check_inputs(molp, region, degree)?;
    bound.validate()?;
    if bound.vars != region.dim() {
        return Err(Error::DimensionMismatch {
            expected: region.dim(),
            found: bound.vars,
        });
    }
    let effective = degree.max(bound.degree());
    let robust_method = select_method(molp.k(), region, effective);
    let plan = ReformulationPlan {
        method: Method::CertificateFeasibility,
        robust_method,
        degree,
        exact: robust_method != Method::SosSemialgebraicSdp,
        sos_degrees: if robust_method == Method::SosSemialgebraicSdp {
            sos_degrees(&sos_region(region)?, effective)
        } else {
            Vec::new()
        },
        shape: ShapeMode::None,
        objective_mode: ObjectiveMode::ClosedForm,
        slack: 0.0,
    };
    let enforcer = enforcer_for(robust_method, region)?;
    let mut built = BuiltProgram::new(molp, region, plan, enforcer);
    add_inner_constraints(&mut built, molp)?;
    let mut e = built.composite_expr(molp.last_objective());
    e = super::inner::negate(&e);
    e.add_poly(bound, 1.0);
    built.enforce("dominated", &e)?;
    Ok(built)
}

pub fn certificate_verdict(
    built: &BuiltProgram,
    sol: &ConicSolution,
) -> Result<CertificateVerdict> {
    match sol.status {
        _ if super::usable(sol) => Ok(CertificateVerdict::Certified {
            rule: recover_rule(built, sol)?.rule,
        }),
        SolveStatus::Infeasible => Ok(CertificateVerdict::NoCertificateAtDegree {
            degree: built.plan.degree,
        }),
        s => Err(Error::BadStatus(s)),
    }
}
