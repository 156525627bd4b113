//! Polynomial inner and outer approximations of the Pareto front of a
//! multiobjective linear program.

pub mod error;
pub mod lp;
pub mod molp;
pub mod poly;
pub mod regions;
pub mod robust;
pub mod rule;

pub use error::{Error, Result};
pub use molp::{
    dominates, pareto_front_oracle, scalarize_epsilon_constraint, Dominance, Molp, ObjectivePoint,
    OraclePoint, ScalarizationResult, ScalarizationStatus,
};
pub use poly::{Linear, MonomialBasis, PolyExpr, Polynomial, Term};
pub use regions::{
    add_compactness_certificate, default_compactness_bound, moment_interval_transform, MomentSetZ,
    MomentTransform, Region, Semialgebraic,
};
pub use robust::{
    build_certificate_dominated, build_inner, build_inner_linear, build_inner_poly_interval,
    build_inner_quad_ellipsoid, build_inner_sos, build_outer_linear, certificate_verdict, plan,
    recover_rule, usable, BuiltProgram, CertificateVerdict, Method, ObjectiveMode,
    OuterApproximation, OuterProgram, RecoveredRule, ReformulationPlan, ShapeMode,
    STALLED_FEASIBLE_TOL,
};
pub use rule::{PolynomialRule, QuadraticRuleView};
