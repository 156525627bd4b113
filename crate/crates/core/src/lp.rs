//! Small dense LPs `min c'x s.t. A x <= b` on top of the conic solver.

use polypareto_conic::{solve, AffineExpr, ConicProgram, SolveStatus, SolverOptions};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

/// Residual level below which a stalled solve is still accepted.
const STALL_ACCEPT: f64 = 1e-7;

pub fn solve_lp(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpOutcome> {
    let n = c.len();
    let mut p = ConicProgram::new();
    let x = p.add_free("x", n);
    p.set_objective(AffineExpr {
        terms: x.iter().copied().zip(c.iter().copied()).collect(),
        constant: 0.0,
    });
    for (row, &bi) in a.iter().zip(b) {
        let mut e = AffineExpr::constant(bi);
        for (j, &v) in row.iter().enumerate() {
            e.add_term(x[j], -v);
        }
        p.add_nonneg("row", e);
    }
    let sol = solve(&p, &SolverOptions::default())?;
    match sol.status {
        SolveStatus::Optimal => Ok(LpOutcome::Optimal {
            value: sol.objective,
            x: sol.x,
        }),
        SolveStatus::Infeasible => Ok(LpOutcome::Infeasible),
        SolveStatus::Unbounded => Ok(LpOutcome::Unbounded),
        SolveStatus::Stalled => {
            if sol.primal_residual.max(sol.dual_residual).max(sol.gap) < STALL_ACCEPT {
                Ok(LpOutcome::Optimal {
                    value: sol.objective,
                    x: sol.x,
                })
            } else {
                Err(Error::SolverFailure(format!(
                    "LP stalled after {} iterations",
                    sol.iterations
                )))
            }
        }
    }
}
