//! Robust counterparts: conic programs whose solutions are decision rules.

mod certificate;
pub mod diagnostics;
mod enforce;
mod inner;
mod outer;

pub use certificate::{build_certificate_dominated, certificate_verdict, CertificateVerdict};
pub use enforce::{sos_degrees, Enforcer};
pub use inner::{
    add_shape_constraints, build_inner, build_inner_linear, build_inner_poly_interval,
    build_inner_quad_ellipsoid, build_inner_sos, build_objective,
};
pub use outer::{build_outer_linear, OuterApproximation, OuterProgram};

use nalgebra::DMatrix;
use polypareto_conic::{tri_index, AffineExpr, ConicProgram, ConicSolution, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::molp::Molp;
use crate::poly::{MonomialBasis, PolyExpr};
use crate::regions::{
    add_compactness_certificate, default_compactness_bound, Region, Semialgebraic,
};
use crate::rule::PolynomialRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LinearPolyhedralLp,
    LinearBallCqp,
    PolyIntervalSdp,
    QuadEllipsoidSdp,
    SosSemialgebraicSdp,
    OuterLinearLp,
    CertificateFeasibility,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeMode {
    #[default]
    None,
    Nonincreasing,
    Convex,
    Both,
}

impl ShapeMode {
    pub fn nonincreasing(self) -> bool {
        matches!(self, ShapeMode::Nonincreasing | ShapeMode::Both)
    }

    pub fn convex(self) -> bool {
        matches!(self, ShapeMode::Convex | ShapeMode::Both)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ObjectiveMode {
    ClosedForm,
    Sampled { count: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReformulationPlan {
    pub method: Method,
    /// How semi-infinite constraints are made finite. Equals `method`
    /// except for certificate and outer programs.
    pub robust_method: Method,
    pub degree: usize,
    /// Whether the robust counterpart is exact (no relaxation gap).
    pub exact: bool,
    /// Multiplier degrees `[σ₀, σ₁, ...]` for the main constraints of the
    /// SOS method, empty otherwise.
    pub sos_degrees: Vec<usize>,
    pub shape: ShapeMode,
    pub objective_mode: ObjectiveMode,
    /// Subtracted from every robust constraint; 0 keeps them non-strict.
    #[serde(default)]
    pub slack: f64,
}

/// Compactness-certified semialgebraic description used by the SOS method.
pub fn sos_region(region: &Region) -> Result<Semialgebraic> {
    let s = region.to_semialgebraic();
    if s.has_compact_quadratic() {
        return Ok(s);
    }
    let r = default_compactness_bound(&s)?;
    add_compactness_certificate(&s, r)
}

fn select_method(k: usize, region: &Region, degree: usize) -> Method {
    match (region, degree) {
        (Region::Interval { .. } | Region::Box { .. } | Region::Polyhedron { .. }, 1) => {
            Method::LinearPolyhedralLp
        }
        (Region::Ball { .. } | Region::Ellipsoid { .. }, 1) => Method::LinearBallCqp,
        (Region::Interval { .. }, _) if k == 2 => Method::PolyIntervalSdp,
        (Region::Ball { .. } | Region::Ellipsoid { .. }, 2) if k > 2 => Method::QuadEllipsoidSdp,
        _ => Method::SosSemialgebraicSdp,
    }
}

fn check_inputs(molp: &Molp, region: &Region, degree: usize) -> Result<()> {
    molp.check()?;
    region.validate()?;
    if region.dim() + 1 != molp.k() {
        return Err(Error::DimensionMismatch {
            expected: molp.k() - 1,
            found: region.dim(),
        });
    }
    if degree == 0 {
        return Err(Error::Unsupported("rule degree must be ≥ 1".into()));
    }
    Ok(())
}

/// Choose the most exact reformulation for an inner approximation.
pub fn plan(
    molp: &Molp,
    region: &Region,
    degree: usize,
    shape: ShapeMode,
    objective_mode: ObjectiveMode,
) -> Result<ReformulationPlan> {
    check_inputs(molp, region, degree)?;
    let method = select_method(molp.k(), region, degree);
    plan_with(molp, region, method, degree, shape, objective_mode)
}

pub(crate) fn plan_with(
    molp: &Molp,
    region: &Region,
    method: Method,
    degree: usize,
    shape: ShapeMode,
    objective_mode: ObjectiveMode,
) -> Result<ReformulationPlan> {
    check_inputs(molp, region, degree)?;
    let k = molp.k();
    if k > 2 && degree > 2 && shape != ShapeMode::None {
        return Err(Error::UnsupportedShape(format!(
            "shape constraints with {k} objectives need a rule of degree ≤ 2, got {degree}"
        )));
    }
    if objective_mode == ObjectiveMode::ClosedForm
        && !matches!(region, Region::Interval { .. } | Region::Box { .. })
    {
        return Err(Error::UnsupportedRegion(format!(
            "closed-form objective over a {} region; use a sampled objective",
            region.kind()
        )));
    }
    if let ObjectiveMode::Sampled { count: 0, .. } = objective_mode {
        return Err(Error::Unsupported(
            "sampled objective needs count ≥ 1".into(),
        ));
    }
    let sos_degrees = if method == Method::SosSemialgebraicSdp {
        sos_degrees(&sos_region(region)?, degree)
    } else {
        Vec::new()
    };
    Ok(ReformulationPlan {
        method,
        robust_method: method,
        degree,
        exact: method != Method::SosSemialgebraicSdp,
        sos_degrees,
        shape,
        objective_mode,
        slack: 0.0,
    })
}

/// A built program together with the handles needed to read back the rule.
#[derive(Clone, Debug)]
pub struct BuiltProgram {
    pub program: ConicProgram,
    pub plan: ReformulationPlan,
    pub basis: MonomialBasis,
    /// Variable index of coefficient `a` of `x_i`, as `alpha[i][a]`.
    pub alpha: Vec<Vec<usize>>,
    /// Names of PSD constraints holding SOS Gram matrices.
    pub gram_constraints: Vec<String>,
    /// Names of PSD variable blocks holding SOS multiplier Gram matrices.
    pub gram_blocks: Vec<String>,
    pub(crate) enforcer: Enforcer,
}

impl BuiltProgram {
    pub(crate) fn new(
        molp: &Molp,
        region: &Region,
        plan: ReformulationPlan,
        enforcer: Enforcer,
    ) -> Self {
        let basis = MonomialBasis::new(region.dim(), plan.degree);
        let mut program = ConicProgram::new();
        let len = basis.len();
        let vars = program.add_free("alpha", molp.n() * len);
        let alpha = (0..molp.n())
            .map(|i| vars[i * len..(i + 1) * len].to_vec())
            .collect();
        program.metadata.insert(
            "plan".into(),
            serde_json::to_string(&plan).expect("plan serializes"),
        );
        program.metadata.insert(
            "method".into(),
            serde_json::to_value(plan.method)
                .unwrap()
                .as_str()
                .unwrap()
                .into(),
        );
        Self {
            program,
            plan,
            basis,
            alpha,
            gram_constraints: Vec::new(),
            gram_blocks: Vec::new(),
            enforcer,
        }
    }

    /// `c'x(u)` with the rule coefficients as program variables.
    pub fn composite_expr(&self, c: &[f64]) -> PolyExpr {
        let mut p = PolyExpr::new(self.basis.vars);
        for (a, e) in self.basis.exponents.iter().enumerate() {
            let coef = p.coef_mut(e);
            for (i, &ci) in c.iter().enumerate() {
                coef.add_term(self.alpha[i][a], ci);
            }
        }
        p
    }

    pub fn coordinate_expr(&self, i: usize) -> PolyExpr {
        let mut c = vec![0.0; self.alpha.len()];
        c[i] = 1.0;
        self.composite_expr(&c)
    }

    /// Require `expr(u) >= slack` for all `u` in the region.
    pub fn enforce(&mut self, name: &str, expr: &PolyExpr) -> Result<()> {
        let mut expr = expr.clone();
        let zero = vec![0; self.basis.vars];
        expr.coef_mut(&zero).constant -= self.plan.slack;
        let enforcer = self.enforcer.clone();
        enforcer.enforce(self, name, &expr)
    }

    pub fn set_objective(&mut self, weights: &[Vec<f64>]) {
        let mut obj = AffineExpr::zero();
        for (row, vars) in weights.iter().zip(&self.alpha) {
            for (&w, &v) in row.iter().zip(vars) {
                obj.add_term(v, w);
            }
        }
        self.program.set_objective(obj);
    }
}

/// Decision rule read back from a solution, with SOS Gram matrices for audit.
#[derive(Clone, Debug)]
pub struct RecoveredRule {
    pub rule: PolynomialRule,
    pub grams: Vec<(String, DMatrix<f64>)>,
    /// Read from a stalled solve whose iterate is feasible but not certified
    /// optimal.
    pub reduced_accuracy: bool,
}

/// Primal residual up to which a stalled solve still counts as feasible.
pub const STALLED_FEASIBLE_TOL: f64 = 1e-5;

/// Optimal, or stalled at a point that satisfies the constraints to
/// [`STALLED_FEASIBLE_TOL`].
pub fn usable(sol: &ConicSolution) -> bool {
    match sol.status {
        SolveStatus::Optimal => true,
        SolveStatus::Stalled => sol.primal_residual <= STALLED_FEASIBLE_TOL,
        _ => false,
    }
}

impl RecoveredRule {
    /// Smallest eigenvalue over all attached Gram matrices.
    pub fn min_gram_eigenvalue(&self) -> Option<f64> {
        self.grams
            .iter()
            .map(|(_, g)| g.symmetric_eigenvalues().min())
            .reduce(f64::min)
    }
}

fn symmetric_from(values: &[f64], order: usize) -> DMatrix<f64> {
    DMatrix::from_fn(order, order, |i, j| values[tri_index(i, j)])
}

pub fn recover_rule(built: &BuiltProgram, sol: &ConicSolution) -> Result<RecoveredRule> {
    if !usable(sol) {
        return Err(Error::BadStatus(sol.status));
    }
    let coeffs = built
        .alpha
        .iter()
        .map(|vars| vars.iter().map(|&v| sol.x[v]).collect())
        .collect();
    let rule = PolynomialRule::new(built.basis.clone(), coeffs)?;
    let mut grams = Vec::new();
    for name in &built.gram_constraints {
        let c = built
            .program
            .constraint(name)
            .expect("gram constraint exists");
        let vals: Vec<f64> = c.rows.iter().map(|r| r.eval(&sol.x)).collect();
        if let polypareto_conic::Cone::Psd(q) = c.cone {
            grams.push((name.clone(), symmetric_from(&vals, q)));
        }
    }
    for name in &built.gram_blocks {
        let b = built.program.block(name).expect("gram block exists");
        let vals: Vec<f64> = b.indices().map(|v| sol.x[v]).collect();
        if let polypareto_conic::Cone::Psd(q) = b.cone {
            grams.push((name.clone(), symmetric_from(&vals, q)));
        }
    }
    Ok(RecoveredRule {
        rule,
        grams,
        reduced_accuracy: sol.status != SolveStatus::Optimal,
    })
}
