//! Post-solve checks: feasibility of a rule on samples, distance to the
//! ε-constraint front, tangency of outer approximations and hints for
//! infeasible programs.

use serde::{Deserialize, Serialize};

use super::OuterApproximation;
use crate::error::{Error, Result};
use crate::molp::{
    dot, pareto_front_oracle, scalarize_epsilon_constraint, Molp, ScalarizationStatus,
};
use crate::regions::Region;
use crate::rule::PolynomialRule;

/// Tolerance of the feasibility and dominance checks.
pub const SOUNDNESS_TOL: f64 = 1e-6;
/// Slack in `u_i - c^i'x(u)` above which the image of the rule dominates
/// the inner approximation.
pub const TIGHTNESS_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub samples: usize,
    /// `max (A x(u) - b)_j` over samples and rows.
    pub max_row_violation: f64,
    /// `max c^i'x(u) - u_i` over samples and `i < k`.
    pub max_objective_violation: f64,
    /// `max u_i - c^i'x(u)`.
    pub max_tightness_gap: f64,
    /// The rule's own objective image dominates the parametric surface.
    pub image_dominates: bool,
    /// `max oracle(u) - c^k'x(u)`; absent when the oracle was not run.
    pub max_dominance_violation: Option<f64>,
    pub passed: bool,
}

/// Check `A x(u) <= b`, `c^i'x(u) <= u_i` and optionally
/// `c^k'x(u) >= oracle(u)` at the given points.
pub fn soundness(
    molp: &Molp,
    rule: &PolynomialRule,
    points: &[Vec<f64>],
    with_oracle: bool,
) -> Result<SoundnessReport> {
    let k = molp.k();
    let mut row = f64::NEG_INFINITY;
    let mut obj = f64::NEG_INFINITY;
    let mut dom: Option<f64> = None;
    for u in points {
        let x = rule.evaluate(u)?;
        row = row.max(molp.max_violation(&x));
        for (i, ui) in u.iter().enumerate().take(k - 1) {
            obj = obj.max(dot(&molp.objectives[i], &x) - ui);
        }
        if with_oracle {
            let r = scalarize_epsilon_constraint(molp, u)?;
            if let Some(f) = r.f {
                let v = f.f[k - 1] - dot(molp.last_objective(), &x);
                dom = Some(dom.map_or(v, |d| d.max(v)));
            }
        }
    }
    let tight = -obj;
    let passed =
        row <= SOUNDNESS_TOL && obj <= SOUNDNESS_TOL && dom.is_none_or(|d| d <= SOUNDNESS_TOL);
    Ok(SoundnessReport {
        samples: points.len(),
        max_row_violation: row,
        max_objective_violation: obj,
        max_tightness_gap: tight,
        image_dominates: tight > TIGHTNESS_TOL,
        max_dominance_violation: dom,
        passed,
    })
}

/// Gap `c^k'x(u) - oracle(u)` on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleGap {
    pub points: usize,
    pub infeasible_points: usize,
    pub max: f64,
    pub mean: f64,
    pub min: f64,
}

pub fn oracle_gap(molp: &Molp, rule: &PolynomialRule, grid: &[Vec<f64>]) -> Result<OracleGap> {
    let front = pareto_front_oracle(molp, grid)?;
    let mut gaps = Vec::with_capacity(front.len());
    for p in &front {
        if let Some(fk) = p.fk {
            let x = rule.evaluate(&p.u)?;
            gaps.push(dot(molp.last_objective(), &x) - fk);
        }
    }
    let n = gaps.len();
    Ok(OracleGap {
        points: grid.len(),
        infeasible_points: grid.len() - n,
        max: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: if n == 0 {
            f64::NAN
        } else {
            gaps.iter().sum::<f64>() / n as f64
        },
        min: gaps.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tangency {
    /// Where `oracle(u) - ℓ(u)` is smallest.
    pub u: Vec<f64>,
    pub gap: f64,
    /// `max ℓ(u) - oracle(u)` over the grid; at most a solver tolerance.
    pub max_violation: f64,
}

fn front_at(molp: &Molp, u: &[f64]) -> Result<Option<f64>> {
    Ok(scalarize_epsilon_constraint(molp, u)?
        .f
        .map(|f| f.f[molp.k() - 1]))
}

/// Locate the touching point of an outer approximation on a grid of the
/// region. With two objectives the grid minimum is refined by golden-section
/// search, since `oracle - ℓ` is convex in `u`.
pub fn tangency(
    molp: &Molp,
    outer: &OuterApproximation,
    region: &Region,
    per_dim: usize,
) -> Result<Tangency> {
    let grid = region.grid(per_dim)?;
    let front = pareto_front_oracle(molp, &grid)?;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut worst = f64::NEG_INFINITY;
    let mut best_index = 0;
    for (idx, p) in front.iter().enumerate() {
        let Some(fk) = p.fk else { continue };
        let gap = fk - outer.eval(&p.u);
        worst = worst.max(-gap);
        if best.as_ref().is_none_or(|(_, g)| gap < *g) {
            best = Some((p.u.clone(), gap));
            best_index = idx;
        }
    }
    let Some((mut u, mut gap)) = best else {
        return Err(Error::Infeasible);
    };
    if region.dim() == 1 && grid.len() > 2 {
        let lo = grid[best_index.saturating_sub(1)][0];
        let hi = grid[(best_index + 1).min(grid.len() - 1)][0];
        let f = |t: f64| -> Result<f64> {
            Ok(match front_at(molp, &[t])? {
                Some(fk) => fk - outer.eval(&[t]),
                None => f64::INFINITY,
            })
        };
        let (t, g) = golden_section(f, lo, hi, 1e-7)?;
        if g <= gap {
            u = vec![t];
            gap = g;
        }
    }
    Ok(Tangency {
        u,
        gap,
        max_violation: worst,
    })
}

fn golden_section(
    f: impl Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerCheck {
    pub u: Vec<f64>,
    pub status: ScalarizationStatus,
}

/// Why an inner program can be infeasible. The method cannot tell the two
/// causes apart; the corner scalarizations are only a hint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityDiagnosis {
    pub hypotheses: Vec<String>,
    /// Scalarizations at the corners of the region's bounding box.
    pub heuristic_corner_checks: Vec<CornerCheck>,
    /// Some corner has no feasible scalarization, so the region likely
    /// asks for unattainable objective values.
    pub heuristic_region_suspect: bool,
}

pub fn diagnose_infeasibility(molp: &Molp, region: &Region) -> Result<InfeasibilityDiagnosis> {
    let (lo, hi) = region.bounding_box()?;
    let v = lo.len();
    let mut checks = Vec::with_capacity(1 << v);
    for mask in 0..(1usize << v) {
        let u: Vec<f64> = (0..v)
            .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
            .collect();
        let status = scalarize_epsilon_constraint(molp, &u)?.status;
        checks.push(CornerCheck { u, status });
    }
    let suspect = checks
        .iter()
        .any(|c| c.status == ScalarizationStatus::Infeasible);
    Ok(InfeasibilityDiagnosis {
        hypotheses: vec![
            "the region contains objective values that no feasible x attains".into(),
            "the rule degree is too low to stay feasible on the whole region".into(),
        ],
        heuristic_corner_checks: checks,
        heuristic_region_suspect: suspect,
    })
}
