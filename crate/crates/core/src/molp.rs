//! Multiobjective linear programs, dominance and the ε-constraint oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpOutcome};

/// Feasibility tolerance for oracle points.
pub const FEAS_TOL: f64 = 1e-7;

/// `minimize (c¹'x, ..., c^k'x) s.t. A x <= b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Molp {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub objectives: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint {
    pub f: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarizationStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarizationResult {
    pub status: ScalarizationStatus,
    pub x: Option<Vec<f64>>,
    pub f: Option<ObjectivePoint>,
}

/// One grid point of the ε-constraint front. `fk` is `None` when the
/// scalarization at `u` is infeasible (or unbounded).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OraclePoint {
    pub u: Vec<f64>,
    pub fk: Option<f64>,
    pub status: ScalarizationStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dominance {
    Strong,
    Weak,
    None,
}

impl Molp {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, objectives: Vec<Vec<f64>>) -> Self {
        Self {
            a,
            b,
            objectives,
            names: Vec::new(),
        }
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn n(&self) -> usize {
        self.objectives
            .first()
            .map(Vec::len)
            .or_else(|| self.a.first().map(Vec::len))
            .unwrap_or(0)
    }

    pub fn k(&self) -> usize {
        self.objectives.len()
    }

    /// Objective `i` (0-based), so `objective(k() - 1)` is c^k.
    pub fn objective(&self, i: usize) -> &[f64] {
        &self.objectives[i]
    }

    pub fn last_objective(&self) -> &[f64] {
        &self.objectives[self.k() - 1]
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let n = self.n();
        if self.k() < 2 {
            v.push("k must be ≥ 2".to_string());
        }
        if self.m() == 0 {
            v.push("A must have at least one row".to_string());
        }
        if n == 0 {
            v.push("n must be ≥ 1".to_string());
        }
        if self.b.len() != self.m() {
            v.push(format!(
                "b has length {} but A has {} rows",
                self.b.len(),
                self.m()
            ));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != n {
                v.push(format!("A row {i} has length {} instead of {n}", row.len()));
            }
            for (j, x) in row.iter().enumerate() {
                if !x.is_finite() {
                    v.push(format!("A[{i}][{j}] not finite"));
                }
            }
        }
        for (i, x) in self.b.iter().enumerate() {
            if !x.is_finite() {
                v.push(format!("b[{i}] not finite"));
            }
        }
        for (i, c) in self.objectives.iter().enumerate() {
            if c.len() != n {
                v.push(format!(
                    "objectives[{i}] has length {} instead of {n}",
                    c.len()
                ));
            }
            for (j, x) in c.iter().enumerate() {
                if !x.is_finite() {
                    v.push(format!("objectives[{i}][{j}] not finite"));
                }
            }
        }
        if !self.names.is_empty() && self.names.len() != self.k() {
            v.push(format!(
                "names has {} labels for {} objectives",
                self.names.len(),
                self.k()
            ));
        }
        v
    }

    pub fn check(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidMolp(v))
        }
    }

    pub fn objective_values(&self, x: &[f64]) -> Vec<f64> {
        self.objectives.iter().map(|c| dot(c, x)).collect()
    }

    /// Largest violation `max_i (A x - b)_i` (negative when strictly feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(r, bi)| dot(r, x) - bi)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `min c^k'x s.t. c^i'x <= u_i (i < k), A x <= b`.
pub fn scalarize_epsilon_constraint(molp: &Molp, u: &[f64]) -> Result<ScalarizationResult> {
    let k = molp.k();
    if u.len() + 1 != k {
        return Err(Error::DimensionMismatch {
            expected: k - 1,
            found: u.len(),
        });
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidMolp(vec!["u not finite".into()]));
    }
    let mut a = molp.a.clone();
    let mut b = molp.b.clone();
    for (i, &ui) in u.iter().enumerate() {
        a.push(molp.objectives[i].clone());
        b.push(ui);
    }
    Ok(match solve_lp(molp.last_objective(), &a, &b)? {
        LpOutcome::Optimal { x, .. } => ScalarizationResult {
            status: ScalarizationStatus::Optimal,
            f: Some(ObjectivePoint {
                f: molp.objective_values(&x),
            }),
            x: Some(x),
        },
        LpOutcome::Infeasible => ScalarizationResult {
            status: ScalarizationStatus::Infeasible,
            x: None,
            f: None,
        },
        LpOutcome::Unbounded => ScalarizationResult {
            status: ScalarizationStatus::Unbounded,
            x: None,
            f: None,
        },
    })
}

pub fn pareto_front_oracle(molp: &Molp, grid: &[Vec<f64>]) -> Result<Vec<OraclePoint>> {
    if grid.is_empty() {
        return Err(Error::InvalidMolp(vec!["oracle grid is empty".into()]));
    }
    grid.iter()
        .map(|u| {
            let r = scalarize_epsilon_constraint(molp, u)?;
            Ok(OraclePoint {
                u: u.clone(),
                fk: r.f.map(|f| f.f[molp.k() - 1]),
                status: r.status,
            })
        })
        .collect()
}

pub fn dominates(f1: &ObjectivePoint, f2: &ObjectivePoint) -> Result<Dominance> {
    if f1.f.len() != f2.f.len() {
        return Err(Error::DimensionMismatch {
            expected: f1.f.len(),
            found: f2.f.len(),
        });
    }
    let pairs = || f1.f.iter().zip(&f2.f);
    Ok(if pairs().all(|(a, b)| a < b) {
        Dominance::Strong
    } else if pairs().all(|(a, b)| a <= b) && f1.f != f2.f {
        Dominance::Weak
    } else {
        Dominance::None
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(f: &[f64]) -> ObjectivePoint {
        ObjectivePoint { f: f.to_vec() }
    }

    #[test]
    fn dominance_examples() {
        assert_eq!(
            dominates(&pt(&[0., 0.]), &pt(&[1., 1.])).unwrap(),
            Dominance::Strong
        );
        assert_eq!(
            dominates(&pt(&[0., 1.]), &pt(&[0., 2.])).unwrap(),
            Dominance::Weak
        );
        assert_eq!(
            dominates(&pt(&[0., 1.]), &pt(&[1., 0.])).unwrap(),
            Dominance::None
        );
        assert!(dominates(&pt(&[0.]), &pt(&[0., 1.])).is_err());
    }

    #[test]
    fn validation_messages() {
        let m = Molp::new(vec![vec![1.0, 0.0]], vec![1.0], vec![vec![1.0, 0.0]]);
        assert_eq!(m.validate(), vec!["k must be ≥ 2".to_string()]);
        let m = Molp::new(
            vec![vec![1.0, 0.0]; 3],
            vec![1.0, f64::NAN, 0.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        assert_eq!(m.validate(), vec!["b[1] not finite".to_string()]);
    }

    proptest! {
        #[test]
        fn strong_dominance_is_a_strict_order(
            a in prop::collection::vec(-3i32..3, 3),
            b in prop::collection::vec(-3i32..3, 3),
            c in prop::collection::vec(-3i32..3, 3),
        ) {
            let f = |v: &Vec<i32>| pt(&v.iter().map(|&x| x as f64).collect::<Vec<_>>());
            let (fa, fb, fc) = (f(&a), f(&b), f(&c));
            prop_assert_ne!(dominates(&fa, &fa).unwrap(), Dominance::Strong);
            if dominates(&fa, &fb).unwrap() == Dominance::Strong
                && dominates(&fb, &fc).unwrap() == Dominance::Strong
            {
                prop_assert_eq!(dominates(&fa, &fc).unwrap(), Dominance::Strong);
            }
        }
    }
}
