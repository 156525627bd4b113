//! Regions of interest in the space of the first `k - 1` objectives.

mod moments;
mod sample;

pub use moments::{moment_interval_transform, MomentSetZ, MomentTransform};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpOutcome};
use crate::poly::{monomial, Exponent, Polynomial};

/// Membership tolerance.
pub const CONTAINS_TOL: f64 = 1e-9;

/// `{u : p_i(u) <= 0 for all i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Semialgebraic {
    pub vars: usize,
    pub polys: Vec<Polynomial>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    Interval {
        a: f64,
        b: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `P u <= q`.
    Polyhedron {
        #[serde(rename = "P")]
        p: Vec<Vec<f64>>,
        q: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `(u - center)' shape (u - center) <= 1`.
    Ellipsoid {
        center: Vec<f64>,
        shape: Vec<Vec<f64>>,
    },
    Semialgebraic(Semialgebraic),
}

fn matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

impl Semialgebraic {
    pub fn contains(&self, u: &[f64]) -> Result<bool> {
        if u.len() != self.vars {
            return Err(Error::DimensionMismatch {
                expected: self.vars,
                found: u.len(),
            });
        }
        Ok(self.polys.iter().all(|p| p.eval(u) <= CONTAINS_TOL))
    }

    /// Whether some polynomial is a quadratic with positive definite
    /// Hessian, whose sublevel set is compact on its own.
    pub fn has_compact_quadratic(&self) -> bool {
        self.polys.iter().any(|p| {
            p.degree() == 2
                && p.quadratic_parts()
                    .is_some_and(|(_, _, h)| matrix(&h).cholesky().is_some())
        })
    }

    /// An axis-aligned box containing the set, derived from its linear
    /// polynomials (through LPs) and its strictly convex quadratics.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let v = self.vars;
        let mut lo = vec![f64::NEG_INFINITY; v];
        let mut hi = vec![f64::INFINITY; v];
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for p in &self.polys {
            let Some((c, g, h)) = p.quadratic_parts() else {
                continue;
            };
            let hm = matrix(&h);
            if p.degree() <= 1 {
                rows.push(g);
                rhs.push(-c);
            } else if let Some(chol) = (hm.clone() * 0.5).cholesky() {
                // ½u'Hu + g'u + c <= 0 is an ellipsoid centred at -H⁻¹g.
                let hinv = chol.inverse() * 0.5;
                let center = -(&hinv * DVector::from_vec(g.clone()));
                let level = -c + 0.5 * (center.transpose() * &hm * &center)[(0, 0)];
                if level < 0.0 {
                    return Err(Error::EmptyRegion);
                }
                for i in 0..v {
                    let w = (level * 2.0 * hinv[(i, i)]).sqrt();
                    lo[i] = lo[i].max(center[i] - w);
                    hi[i] = hi[i].min(center[i] + w);
                }
            }
        }
        if !rows.is_empty() {
            let (plo, phi) = polyhedron_box(&rows, &rhs, Some((&lo, &hi)))?;
            lo = plo;
            hi = phi;
        }
        if lo.iter().chain(&hi).any(|x| !x.is_finite()) {
            return Err(Error::InvalidRegion(
                "cannot bound the semialgebraic set from its linear and convex quadratic parts"
                    .into(),
            ));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::EmptyRegion);
        }
        Ok((lo, hi))
    }
}

/// Per-coordinate range of `{P u <= q}` (optionally intersected with a box)
/// from `2 dim` LPs.
fn polyhedron_box(
    p: &[Vec<f64>],
    q: &[f64],
    within: Option<(&Vec<f64>, &Vec<f64>)>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = p.first().map_or(0, Vec::len);
    let mut rows = p.to_vec();
    let mut rhs = q.to_vec();
    if let Some((lo, hi)) = within {
        for i in 0..v {
            let mut e = vec![0.0; v];
            if hi[i].is_finite() {
                e[i] = 1.0;
                rows.push(e.clone());
                rhs.push(hi[i]);
            }
            if lo[i].is_finite() {
                e[i] = -1.0;
                rows.push(e);
                rhs.push(-lo[i]);
            }
        }
    }
    let mut lo = vec![0.0; v];
    let mut hi = vec![0.0; v];
    for i in 0..v {
        for sign in [1.0, -1.0] {
            let mut c = vec![0.0; v];
            c[i] = sign;
            match solve_lp(&c, &rows, &rhs)? {
                LpOutcome::Optimal { value, .. } => {
                    if sign > 0.0 {
                        lo[i] = value;
                    } else {
                        hi[i] = -value;
                    }
                }
                LpOutcome::Infeasible => return Err(Error::EmptyRegion),
                LpOutcome::Unbounded => {
                    return Err(Error::InvalidRegion("polyhedron is unbounded".into()))
                }
            }
        }
    }
    Ok((lo, hi))
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Interval { .. } => 1,
            Region::Box { lo, .. } => lo.len(),
            Region::Polyhedron { p, .. } => p.first().map_or(0, Vec::len),
            Region::Ball { center, .. } | Region::Ellipsoid { center, .. } => center.len(),
            Region::Semialgebraic(s) => s.vars,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Region::Interval { .. } => "interval",
            Region::Box { .. } => "box",
            Region::Polyhedron { .. } => "polyhedron",
            Region::Ball { .. } => "ball",
            Region::Ellipsoid { .. } => "ellipsoid",
            Region::Semialgebraic(_) => "semialgebraic",
        }
    }

    /// Check the variant's invariants. Polyhedra are checked for
    /// nonemptiness and boundedness with LPs.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidRegion(m.to_string()));
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Region::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return bad("interval needs finite a < b");
                }
            }
            Region::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return bad("box bounds must have equal positive length");
                }
                if !finite(lo) || !finite(hi) || lo.iter().zip(hi).any(|(l, h)| l >= h) {
                    return bad("box needs finite lo < hi componentwise");
                }
            }
            Region::Polyhedron { p, q } => {
                let v = self.dim();
                if v == 0 || p.len() != q.len() || p.iter().any(|r| r.len() != v) {
                    return bad("polyhedron rows must be consistent with q");
                }
                if !finite(q) || p.iter().any(|r| !finite(r)) {
                    return bad("polyhedron data not finite");
                }
                polyhedron_box(p, q, None)?;
            }
            Region::Ball { center, radius } => {
                if center.is_empty() || !finite(center) || !(radius.is_finite() && *radius > 0.0) {
                    return bad("ball needs a finite center and radius > 0");
                }
            }
            Region::Ellipsoid { center, shape } => {
                let v = center.len();
                if v == 0
                    || !finite(center)
                    || shape.len() != v
                    || shape.iter().any(|r| r.len() != v)
                {
                    return bad("ellipsoid shape must be a square matrix matching the center");
                }
                let e = matrix(shape);
                if (&e - e.transpose()).amax() > 1e-12 * (1.0 + e.amax()) {
                    return bad("ellipsoid shape must be symmetric");
                }
                if e.symmetric_eigenvalues().min() <= 0.0 {
                    return bad("ellipsoid shape must be positive definite");
                }
            }
            Region::Semialgebraic(s) => {
                if s.vars == 0 || s.polys.is_empty() {
                    return bad("semialgebraic set needs variables and polynomials");
                }
                for p in &s.polys {
                    if p.vars != s.vars {
                        return bad("polynomial variable count differs from the set");
                    }
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, u: &[f64]) -> Result<bool> {
        let dim = self.dim();
        if u.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: u.len(),
            });
        }
        let t = CONTAINS_TOL;
        Ok(match self {
            Region::Interval { a, b } => a - u[0] <= t && u[0] - b <= t,
            Region::Box { lo, hi } => (0..dim).all(|i| lo[i] - u[i] <= t && u[i] - hi[i] <= t),
            Region::Polyhedron { p, q } => p
                .iter()
                .zip(q)
                .all(|(r, qi)| crate::molp::dot(r, u) - qi <= t),
            Region::Ball { center, radius } => {
                let d2: f64 = u.iter().zip(center).map(|(x, c)| (x - c).powi(2)).sum();
                d2 - radius * radius <= t
            }
            Region::Ellipsoid { center, shape } => {
                let d: Vec<f64> = u.iter().zip(center).map(|(x, c)| x - c).collect();
                let q: f64 = (0..dim)
                    .map(|i| (0..dim).map(|j| d[i] * shape[i][j] * d[j]).sum::<f64>())
                    .sum();
                q - 1.0 <= t
            }
            Region::Semialgebraic(s) => return s.contains(u),
        })
    }

    /// Polyhedral description `(P, q)` with `P u <= q` for interval, box and
    /// polyhedron regions.
    pub fn polyhedral_data(&self) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        match self {
            Region::Interval { a, b } => Some((vec![vec![-1.0], vec![1.0]], vec![-a, *b])),
            Region::Box { lo, hi } => {
                let v = lo.len();
                let mut p = Vec::new();
                let mut q = Vec::new();
                for i in 0..v {
                    let mut e = vec![0.0; v];
                    e[i] = -1.0;
                    p.push(e.clone());
                    q.push(-lo[i]);
                    e[i] = 1.0;
                    p.push(e);
                    q.push(hi[i]);
                }
                Some((p, q))
            }
            Region::Polyhedron { p, q } => Some((p.clone(), q.clone())),
            _ => None,
        }
    }

    /// `(center, E)` with the set `(u - c)' E (u - c) <= 1` for balls and ellipsoids.
    pub fn ellipsoid_data(&self) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
        match self {
            Region::Ball { center, radius } => {
                let v = center.len();
                let e = (0..v)
                    .map(|i| {
                        (0..v)
                            .map(|j| if i == j { 1.0 / (radius * radius) } else { 0.0 })
                            .collect()
                    })
                    .collect();
                Some((center.clone(), e))
            }
            Region::Ellipsoid { center, shape } => Some((center.clone(), shape.clone())),
            _ => None,
        }
    }

    pub fn to_semialgebraic(&self) -> Semialgebraic {
        let vars = self.dim();
        let polys = match self {
            Region::Interval { .. } | Region::Box { .. } | Region::Polyhedron { .. } => {
                let (p, q) = self.polyhedral_data().unwrap();
                p.iter()
                    .zip(q)
                    .map(|(r, qi)| Polynomial::linear(vars, r, -qi))
                    .collect()
            }
            Region::Ball { center, radius } => {
                let eye: Vec<Vec<f64>> = (0..vars).map(|i| unit(vars, i)).collect();
                vec![quadratic_form(center, &eye, -radius * radius)]
            }
            Region::Ellipsoid { center, shape } => vec![quadratic_form(center, shape, -1.0)],
            Region::Semialgebraic(s) => return s.clone(),
        };
        Semialgebraic { vars, polys }
    }

    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            Region::Interval { a, b } => Ok((vec![*a], vec![*b])),
            Region::Box { lo, hi } => Ok((lo.clone(), hi.clone())),
            Region::Polyhedron { p, q } => polyhedron_box(p, q, None),
            Region::Ball { center, radius } => Ok((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            Region::Ellipsoid { center, shape } => {
                let inv = matrix(shape)
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidRegion("singular ellipsoid shape".into()))?;
                let w: Vec<f64> = (0..center.len()).map(|i| inv[(i, i)].sqrt()).collect();
                Ok((
                    center.iter().zip(&w).map(|(c, w)| c - w).collect(),
                    center.iter().zip(&w).map(|(c, w)| c + w).collect(),
                ))
            }
            Region::Semialgebraic(s) => s.bounding_box(),
        }
    }

    /// Exact integrals `∫_U u^e du` over intervals and boxes.
    pub fn monomial_moments(&self, exponents: &[Exponent]) -> Result<Vec<f64>> {
        let (lo, hi) = match self {
            Region::Interval { a, b } => (vec![*a], vec![*b]),
            Region::Box { lo, hi } => (lo.clone(), hi.clone()),
            _ => {
                return Err(Error::UnsupportedRegion(format!(
                    "closed-form moments need an interval or box, got {}",
                    self.kind()
                )))
            }
        };
        exponents
            .iter()
            .map(|e| {
                if e.len() != lo.len() {
                    return Err(Error::DimensionMismatch {
                        expected: lo.len(),
                        found: e.len(),
                    });
                }
                Ok(e.iter()
                    .enumerate()
                    .map(|(i, &p)| {
                        let p = p as i32 + 1;
                        (hi[i].powi(p) - lo[i].powi(p)) / p as f64
                    })
                    .product())
            })
            .collect()
    }

    /// Lebesgue measure for intervals and boxes.
    pub fn volume(&self) -> Result<f64> {
        let e = vec![vec![0; self.dim()]];
        Ok(self.monomial_moments(&e)?[0])
    }

    /// Sample mean of each monomial over `points`.
    pub fn sampled_moments(points: &[Vec<f64>], exponents: &[Exponent]) -> Vec<f64> {
        exponents
            .iter()
            .map(|e| points.iter().map(|u| monomial(u, e)).sum::<f64>() / points.len() as f64)
            .collect()
    }

    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        sample::sample(self, count, seed)
    }

    /// Tensor grid with `per_dim` equispaced points per axis of the bounding
    /// box, keeping the points inside the region.
    pub fn grid(&self, per_dim: usize) -> Result<Vec<Vec<f64>>> {
        if per_dim == 0 {
            return Ok(Vec::new());
        }
        let (lo, hi) = self.bounding_box()?;
        let axis = |i: usize, t: usize| {
            if per_dim == 1 {
                0.5 * (lo[i] + hi[i])
            } else {
                lo[i] + (hi[i] - lo[i]) * t as f64 / (per_dim - 1) as f64
            }
        };
        let mut out = Vec::new();
        let mut idx = vec![0usize; lo.len()];
        loop {
            let u: Vec<f64> = idx.iter().enumerate().map(|(i, &t)| axis(i, t)).collect();
            if self.contains(&u)? {
                out.push(u);
            }
            let mut i = 0;
            while i < idx.len() {
                idx[i] += 1;
                if idx[i] < per_dim {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            if i == idx.len() {
                return Ok(out);
            }
        }
    }
}

/// `(u - c)' E (u - c) + offset` as a polynomial.
fn quadratic_form(c: &[f64], e: &[Vec<f64>], offset: f64) -> Polynomial {
    let v = c.len();
    let mut p = Polynomial::constant(v, offset);
    for i in 0..v {
        for j in 0..v {
            let mut li = Polynomial::linear(v, &unit(v, i), -c[i]);
            li = li.mul(&Polynomial::linear(v, &unit(v, j), -c[j]));
            p = p.add(&li.scaled(e[i][j]));
        }
    }
    p
}

fn unit(v: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; v];
    e[i] = 1.0;
    e
}

/// Append `Σ u_i² - R <= 0` after checking that `R` bounds `‖u‖²` on a
/// bounding box of the set.
pub fn add_compactness_certificate(s: &Semialgebraic, r: f64) -> Result<Semialgebraic> {
    let (lo, hi) = s.bounding_box()?;
    let required: f64 = lo.iter().zip(&hi).map(|(l, h)| (l * l).max(h * h)).sum();
    if !(r >= required - 1e-12 * (1.0 + required)) {
        return Err(Error::InvalidBound { bound: r, required });
    }
    let mut ball = Polynomial::constant(s.vars, -r);
    for i in 0..s.vars {
        let mut e = vec![0; s.vars];
        e[i] = 2;
        ball.add_term(e, 1.0);
    }
    let mut out = s.clone();
    out.polys.push(ball);
    Ok(out)
}

/// Smallest valid compactness bound from a bounding box, padded by 1%.
pub fn default_compactness_bound(s: &Semialgebraic) -> Result<f64> {
    let (lo, hi) = s.bounding_box()?;
    let r: f64 = lo.iter().zip(&hi).map(|(l, h)| (l * l).max(h * h)).sum();
    Ok(1.01 * r + 1e-6)
}
