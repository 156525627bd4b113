//! Inner approximation programs.

use polypareto_conic::{AffineExpr, Cone, SymmetricExpr};

use super::{
    plan_with, sos_region, BuiltProgram, Enforcer, Method, ObjectiveMode, ReformulationPlan,
    ShapeMode,
};
use crate::error::{Error, Result};
use crate::molp::Molp;
use crate::poly::{MonomialBasis, PolyExpr};
use crate::regions::Region;

/// Weights `w[i][a]` of the linear objective `Σ w[i][a] coeffs[i][a]`:
/// `(c^k)_i` times the integral of `u^a` over the region (closed form) or
/// its mean over sample points.
pub fn build_objective(
    molp: &Molp,
    region: &Region,
    basis: &MonomialBasis,
    mode: ObjectiveMode,
) -> Result<Vec<Vec<f64>>> {
    let moments = match mode {
        ObjectiveMode::ClosedForm => region.monomial_moments(&basis.exponents)?,
        ObjectiveMode::Sampled { count, seed } => {
            let pts = region.sample(count, seed)?;
            Region::sampled_moments(&pts, &basis.exponents)
        }
    };
    Ok(molp
        .last_objective()
        .iter()
        .map(|c| moments.iter().map(|m| c * m).collect())
        .collect())
}

pub(crate) fn enforcer_for(method: Method, region: &Region) -> Result<Enforcer> {
    let incompatible = || {
        Error::IncompatiblePlan(format!(
            "{method:?} does not apply to a {} region",
            region.kind()
        ))
    };
    Ok(match method {
        Method::LinearPolyhedralLp => {
            let (p, q) = region.polyhedral_data().ok_or_else(incompatible)?;
            Enforcer::Polyhedral { p, q }
        }
        Method::LinearBallCqp | Method::QuadEllipsoidSdp => {
            let (center, shape) = region.ellipsoid_data().ok_or_else(incompatible)?;
            Enforcer::Ellipsoid { center, shape }
        }
        Method::PolyIntervalSdp => match region {
            Region::Interval { a, b } => Enforcer::Interval { a: *a, b: *b },
            _ => return Err(incompatible()),
        },
        Method::SosSemialgebraicSdp => Enforcer::Sos {
            set: sos_region(region)?,
        },
        Method::OuterLinearLp | Method::CertificateFeasibility => return Err(incompatible()),
    })
}

/// The robust constraints `b - A x(u) >= 0` and `u_i - c^i'x(u) >= 0`.
pub(crate) fn add_inner_constraints(built: &mut BuiltProgram, molp: &Molp) -> Result<()> {
    for (j, (row, bj)) in molp.a.iter().zip(&molp.b).enumerate() {
        let mut e = built.composite_expr(row);
        e = negate(&e);
        e.coef_mut(&vec![0; built.basis.vars]).constant += bj;
        built.enforce(&format!("row{j}"), &e)?;
    }
    for i in 0..molp.k() - 1 {
        let mut e = negate(&built.composite_expr(&molp.objectives[i]));
        let mut unit = vec![0; built.basis.vars];
        unit[i] = 1;
        e.coef_mut(&unit).constant += 1.0;
        built.enforce(&format!("objective{i}"), &e)?;
    }
    Ok(())
}

pub(crate) fn negate(e: &PolyExpr) -> PolyExpr {
    let mut out = PolyExpr::new(e.vars);
    out.add_scaled(e, -1.0);
    out
}

fn build_with_method(
    molp: &Molp,
    region: &Region,
    method: Method,
    degree: usize,
    objective_mode: ObjectiveMode,
) -> Result<BuiltProgram> {
    let plan = plan_with(
        molp,
        region,
        method,
        degree,
        ShapeMode::None,
        objective_mode,
    )?;
    build_inner(molp, region, &plan)
}

/// Build the program selected by `plan`.
pub fn build_inner(molp: &Molp, region: &Region, plan: &ReformulationPlan) -> Result<BuiltProgram> {
    let enforcer = enforcer_for(plan.method, region)?;
    let mut built = BuiltProgram::new(molp, region, plan.clone(), enforcer);
    add_inner_constraints(&mut built, molp)?;
    let weights = build_objective(molp, region, &built.basis, plan.objective_mode)?;
    built.set_objective(&weights);
    add_shape_constraints(&mut built, molp, plan.shape)?;
    Ok(built)
}

/// Affine rule over a polyhedral (LP) or ellipsoidal (conic-quadratic) region.
pub fn build_inner_linear(
    molp: &Molp,
    region: &Region,
    objective_mode: ObjectiveMode,
) -> Result<BuiltProgram> {
    let method = match region {
        Region::Interval { .. } | Region::Box { .. } | Region::Polyhedron { .. } => {
            Method::LinearPolyhedralLp
        }
        Region::Ball { .. } | Region::Ellipsoid { .. } => Method::LinearBallCqp,
        Region::Semialgebraic(_) => {
            return Err(Error::IncompatiblePlan(
                "linear rules need a polyhedral or ellipsoidal region".into(),
            ))
        }
    };
    build_with_method(molp, region, method, 1, objective_mode)
}

/// Polynomial rule of any degree for two objectives over an interval.
pub fn build_inner_poly_interval(
    molp: &Molp,
    region: &Region,
    degree: usize,
    objective_mode: ObjectiveMode,
) -> Result<BuiltProgram> {
    if molp.k() != 2 || !matches!(region, Region::Interval { .. }) {
        return Err(Error::IncompatiblePlan(
            "the interval method needs two objectives and an interval region".into(),
        ));
    }
    build_with_method(
        molp,
        region,
        Method::PolyIntervalSdp,
        degree,
        objective_mode,
    )
}

/// Quadratic rule over an ellipsoid for three or more objectives.
pub fn build_inner_quad_ellipsoid(
    molp: &Molp,
    region: &Region,
    objective_mode: ObjectiveMode,
) -> Result<BuiltProgram> {
    if molp.k() < 3 || region.ellipsoid_data().is_none() {
        return Err(Error::IncompatiblePlan(
            "the quadratic ellipsoid method needs k ≥ 3 and a ball or ellipsoid".into(),
        ));
    }
    build_with_method(molp, region, Method::QuadEllipsoidSdp, 2, objective_mode)
}

/// Polynomial rule over any region through SOS certificates.
pub fn build_inner_sos(
    molp: &Molp,
    region: &Region,
    degree: usize,
    objective_mode: ObjectiveMode,
) -> Result<BuiltProgram> {
    build_with_method(
        molp,
        region,
        Method::SosSemialgebraicSdp,
        degree,
        objective_mode,
    )
}

/// Monotonicity and convexity requirements.
///
/// With two objectives they apply to `g(u) = c²'x(u)`: `-g' >= 0` and
/// `g'' >= 0` on the interval. With more objectives the rule must be at
/// most quadratic; each coordinate gets `-(α¹_i + 2Γ_i u)_j >= 0` on the
/// region and `Γ_i ⪰ 0`.
pub fn add_shape_constraints(built: &mut BuiltProgram, molp: &Molp, mode: ShapeMode) -> Result<()> {
    if mode == ShapeMode::None {
        return Ok(());
    }
    let k = molp.k();
    if k == 2 {
        let g = built.composite_expr(molp.last_objective());
        let dg = g.derivative(0);
        if mode.nonincreasing() {
            built.enforce("nonincreasing", &negate(&dg))?;
        }
        if mode.convex() {
            built.enforce("convex", &dg.derivative(0))?;
        }
    } else {
        if built.basis.degree > 2 {
            return Err(Error::UnsupportedShape(format!(
                "shape constraints with {k} objectives need a rule of degree ≤ 2, got {}",
                built.basis.degree
            )));
        }
        let v = built.basis.vars;
        for i in 0..built.alpha.len() {
            let xi = built.coordinate_expr(i);
            if mode.nonincreasing() {
                for j in 0..v {
                    built.enforce(&format!("nonincreasing{i}_{j}"), &negate(&xi.derivative(j)))?;
                }
            }
            if mode.convex() && built.basis.degree == 2 {
                let mut m = SymmetricExpr::new(v);
                for j in 0..v {
                    for l in j..v {
                        let mut ex = vec![0; v];
                        ex[j] += 1;
                        ex[l] += 1;
                        let scale = if j == l { 1.0 } else { 0.5 };
                        *m.entry_mut(j, l) = xi.coef(&ex).scaled(scale);
                    }
                }
                let rows = m
                    .into_rows()
                    .into_iter()
                    .map(AffineExpr::compacted)
                    .collect();
                built
                    .program
                    .add_constraint(format!("convex{i}"), Cone::Psd(v), rows);
            }
        }
    }
    built.plan.shape = mode;
    built.program.metadata.insert(
        "plan".into(),
        serde_json::to_string(&built.plan).expect("plan serializes"),
    );
    Ok(())
}
