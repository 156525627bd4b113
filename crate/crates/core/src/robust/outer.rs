//! Affine outer approximation `ℓ(f_1, ..., f_{k-1}) <= f_k` of the front.

use polypareto_conic::{AffineExpr, Cone, ConicProgram, ConicSolution};
use serde::{Deserialize, Serialize};

use super::{Method, ObjectiveMode, ReformulationPlan, ShapeMode};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpOutcome};
use crate::molp::Molp;
use crate::regions::Region;

/// `ℓ(u) = l0 + l1'u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterApproximation {
    pub l0: f64,
    pub l1: Vec<f64>,
}

impl OuterApproximation {
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.l0 + self.l1.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Clone, Debug)]
pub struct OuterProgram {
    pub program: ConicProgram,
    pub plan: ReformulationPlan,
    pub l0: usize,
    pub l1: Vec<usize>,
    /// Range `[min, max]` of each `c^i'x` over the feasible set.
    pub attainable: Vec<(f64, f64)>,
    /// Whether the box reaches outside the attainable objective range, where
    /// the approximation carries no information.
    pub meaningless_part: bool,
}

impl OuterProgram {
    pub fn recover(&self, sol: &ConicSolution) -> Result<OuterApproximation> {
        if !super::usable(sol) {
            return Err(Error::BadStatus(sol.status));
        }
        Ok(OuterApproximation {
            l0: sol.x[self.l0],
            l1: self.l1.iter().map(|&v| sol.x[v]).collect(),
        })
    }
}

fn box_bounds(region: &Region) -> Result<(Vec<f64>, Vec<f64>)> {
    match region {
        Region::Interval { a, b } => Ok((vec![*a], vec![*b])),
        Region::Box { lo, hi } => Ok((lo.clone(), hi.clone())),
        _ => Err(Error::IncompatiblePlan(format!(
            "outer approximation needs an interval or box, got {}",
            region.kind()
        ))),
    }
}

/// Maximize `∫_U ℓ` subject to `ℓ(c¹'x, ...) <= c^k'x` for every `x` with
/// `A x <= b` and `lo <= c^i'x <= hi`, made finite by LP duality.
pub fn build_outer_linear(molp: &Molp, region: &Region) -> Result<OuterProgram> {
    molp.check()?;
    region.validate()?;
    if region.dim() + 1 != molp.k() {
        return Err(Error::DimensionMismatch {
            expected: molp.k() - 1,
            found: region.dim(),
        });
    }
    let (lo, hi) = box_bounds(region)?;
    let k1 = molp.k() - 1;
    let n = molp.n();

    // The restricted polyhedron must be nonempty.
    let mut rows = molp.a.clone();
    let mut rhs = molp.b.clone();
    for i in 0..k1 {
        rows.push(molp.objectives[i].clone());
        rhs.push(hi[i]);
        rows.push(molp.objectives[i].iter().map(|c| -c).collect());
        rhs.push(-lo[i]);
    }
    if solve_lp(&vec![0.0; n], &rows, &rhs)? == LpOutcome::Infeasible {
        return Err(Error::Infeasible);
    }
    let mut attainable = Vec::with_capacity(k1);
    for i in 0..k1 {
        let c = &molp.objectives[i];
        let neg: Vec<f64> = c.iter().map(|x| -x).collect();
        let min = match solve_lp(c, &molp.a, &molp.b)? {
            LpOutcome::Optimal { value, .. } => value,
            LpOutcome::Unbounded => f64::NEG_INFINITY,
            LpOutcome::Infeasible => return Err(Error::Infeasible),
        };
        let max = match solve_lp(&neg, &molp.a, &molp.b)? {
            LpOutcome::Optimal { value, .. } => -value,
            LpOutcome::Unbounded => f64::INFINITY,
            LpOutcome::Infeasible => return Err(Error::Infeasible),
        };
        attainable.push((min, max));
    }
    let slack = |v: f64| 1e-9 * (1.0 + v.abs());
    let meaningless_part = (0..k1)
        .any(|i| lo[i] < attainable[i].0 - slack(lo[i]) || hi[i] > attainable[i].1 + slack(hi[i]));

    let mut p = ConicProgram::new();
    let l = p.add_free("l", k1 + 1);
    let w = p.add_block("w", Cone::Nonneg(molp.m()));
    let wp = p.add_block("w_hi", Cone::Nonneg(k1));
    let wm = p.add_block("w_lo", Cone::Nonneg(k1));
    // A'w + C'(w⁺ - w⁻) + c^k - Σ l1_i c^i = 0
    for j in 0..n {
        let mut e = AffineExpr::constant(molp.last_objective()[j]);
        for (r, row) in molp.a.iter().enumerate() {
            e.add_term(w.index(r), row[j]);
        }
        for i in 0..k1 {
            let cij = molp.objectives[i][j];
            e.add_term(wp.index(i), cij);
            e.add_term(wm.index(i), -cij);
            e.add_term(l[i + 1], -cij);
        }
        p.add_equality(e.compacted());
    }
    // -b'w - hi'w⁺ + lo'w⁻ - l0 >= 0
    let mut e = AffineExpr::zero();
    for (r, br) in molp.b.iter().enumerate() {
        e.add_term(w.index(r), -br);
    }
    for i in 0..k1 {
        e.add_term(wp.index(i), -hi[i]);
        e.add_term(wm.index(i), lo[i]);
    }
    e.add_term(l[0], -1.0);
    p.add_nonneg("below_front", e.compacted());

    let vol = region.volume()?;
    let mut obj = AffineExpr::term(l[0], -vol);
    for i in 0..k1 {
        obj.add_term(l[i + 1], -vol * 0.5 * (lo[i] + hi[i]));
    }
    p.set_objective(obj);

    let plan = ReformulationPlan {
        method: Method::OuterLinearLp,
        robust_method: Method::LinearPolyhedralLp,
        degree: 1,
        exact: true,
        sos_degrees: Vec::new(),
        shape: ShapeMode::None,
        objective_mode: ObjectiveMode::ClosedForm,
        slack: 0.0,
    };
    p.metadata.insert(
        "plan".into(),
        serde_json::to_string(&plan).expect("plan serializes"),
    );
    p.metadata.insert("method".into(), "outer-linear-lp".into());
    Ok(OuterProgram {
        program: p,
        plan,
        l0: l[0],
        l1: l[1..].to_vec(),
        attainable,
        meaningless_part,
    })
}
