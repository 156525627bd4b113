//! Finite reformulations of `p(u) >= 0 for all u in U`, where `p` is a
//! polynomial in `u` whose coefficients are affine in the program variables.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use polypareto_conic::{AffineExpr, Cone, SymmetricExpr};

use super::BuiltProgram;
use crate::error::{Error, Result};
use crate::poly::{total_degree, Exponent, MonomialBasis, PolyExpr};
use crate::regions::{moment_interval_transform, MomentSetZ, Semialgebraic};

#[derive(Clone, Debug)]
pub enum Enforcer {
    /// `P u <= q`, LP duality for affine `p`.
    Polyhedral { p: Vec<Vec<f64>>, q: Vec<f64> },
    /// `(u - c)' E (u - c) <= 1`: second-order cone for affine `p`,
    /// S-lemma for quadratic `p`.
    Ellipsoid {
        center: Vec<f64>,
        shape: Vec<Vec<f64>>,
    },
    /// `[a, b]`: moment description of the lifted curve, any degree.
    Interval { a: f64, b: f64 },
    /// `p_i(u) <= 0`: Putinar-type SOS certificate.
    Sos { set: Semialgebraic },
}

fn even_floor(d: usize) -> usize {
    d - d % 2
}

fn even_ceil(d: usize) -> usize {
    d + d % 2
}

/// Multiplier degrees `[deg σ₀, deg σ₁, ...]` for a polynomial of degree
/// `degree` on `set`.
pub fn sos_degrees(set: &Semialgebraic, degree: usize) -> Vec<usize> {
    let max_p = set.polys.iter().map(|p| p.degree()).max().unwrap_or(0);
    let d0 = even_ceil(degree.max(max_p));
    std::iter::once(d0)
        .chain(set.polys.iter().map(|p| even_floor(d0 - p.degree())))
        .collect()
}

fn nonzero(e: &AffineExpr) -> bool {
    !(e.is_constant() && e.constant == 0.0)
}

/// Upper-triangle positions of a Gram matrix over `basis` grouped by the
/// monomial they multiply, in order of first appearance.
fn gram_positions(basis: &MonomialBasis) -> BTreeMap<Exponent, Vec<(usize, usize)>> {
    let mut out: BTreeMap<Exponent, Vec<(usize, usize)>> = BTreeMap::new();
    for j in 0..basis.len() {
        for i in 0..=j {
            let e: Exponent = basis.exponents[i]
                .iter()
                .zip(&basis.exponents[j])
                .map(|(a, b)| a + b)
                .collect();
            out.entry(e).or_default().push((i, j));
        }
    }
    out
}

fn weight((i, j): (usize, usize)) -> f64 {
    if i == j {
        1.0
    } else {
        2.0
    }
}

impl Enforcer {
    pub(crate) fn enforce(&self, b: &mut BuiltProgram, name: &str, expr: &PolyExpr) -> Result<()> {
        let degree = expr.degree();
        let zero = vec![0; expr.vars];
        if degree == 0 {
            let c = expr.coef(&zero).compacted();
            if nonzero(&c) {
                b.program.add_nonneg(name, c);
            }
            return Ok(());
        }
        match self {
            Enforcer::Polyhedral { p, q } if degree == 1 => polyhedral(b, name, expr, p, q),
            Enforcer::Ellipsoid { center, shape } if degree == 1 => {
                second_order(b, name, expr, center, shape)
            }
            Enforcer::Ellipsoid { center, shape } if degree == 2 => {
                s_lemma(b, name, expr, center, shape)
            }
            Enforcer::Interval { a, b: hi } => moment(b, name, expr, *a, *hi),
            Enforcer::Sos { set } => sos(b, name, expr, set),
            _ => Err(Error::IncompatiblePlan(format!(
                "a degree {degree} constraint cannot be enforced exactly by this method"
            ))),
        }
    }
}

fn linear_parts(expr: &PolyExpr) -> (AffineExpr, Vec<AffineExpr>) {
    let v = expr.vars;
    let p0 = expr.coef(&vec![0; v]);
    let p1 = (0..v)
        .map(|i| {
            let mut e = vec![0; v];
            e[i] = 1;
            expr.coef(&e)
        })
        .collect();
    (p0, p1)
}

/// `min_{Pu<=q} p1'u = max {-q'w : P'w + p1 = 0, w >= 0}`.
fn polyhedral(
    b: &mut BuiltProgram,
    name: &str,
    expr: &PolyExpr,
    p: &[Vec<f64>],
    q: &[f64],
) -> Result<()> {
    let (p0, p1) = linear_parts(expr);
    let w = b
        .program
        .add_block(format!("{name}_w"), Cone::Nonneg(p.len()));
    for (l, p1l) in p1.iter().enumerate() {
        let mut e = p1l.clone();
        for (r, row) in p.iter().enumerate() {
            e.add_term(w.index(r), row[l]);
        }
        b.program.add_equality(e.compacted());
    }
    let mut e = p0;
    for (r, qr) in q.iter().enumerate() {
        e.add_term(w.index(r), -qr);
    }
    b.program.add_nonneg(name, e.compacted());
    Ok(())
}

/// `min over the ellipsoid of p1'u = p1'c - ‖R p1‖` with `R'R = E⁻¹`.
fn second_order(
    b: &mut BuiltProgram,
    name: &str,
    expr: &PolyExpr,
    center: &[f64],
    shape: &[Vec<f64>],
) -> Result<()> {
    let v = center.len();
    let (p0, p1) = linear_parts(expr);
    let e = DMatrix::from_fn(v, v, |i, j| shape[i][j]);
    let einv = e
        .try_inverse()
        .ok_or_else(|| Error::InvalidRegion("singular ellipsoid shape".into()))?;
    let l = einv
        .cholesky()
        .ok_or_else(|| Error::InvalidRegion("ellipsoid shape is not positive definite".into()))?
        .l();
    let mut head = p0;
    for (c, p) in center.iter().zip(&p1) {
        head.add_scaled(p, *c);
    }
    let mut rows = vec![head.compacted()];
    for i in 0..v {
        // (L' p1)_i
        let mut r = AffineExpr::zero();
        for (j, p) in p1.iter().enumerate() {
            r.add_scaled(p, l[(j, i)]);
        }
        rows.push(r.compacted());
    }
    b.program.add_constraint(name, Cone::Soc(v + 1), rows);
    Ok(())
}

/// `p(u) + λ((u-c)'E(u-c) - 1)` is a nonnegative quadratic for some
/// `λ >= 0`, written as one PSD block of order `dim + 2` whose last
/// diagonal entry is `λ`.
fn s_lemma(
    b: &mut BuiltProgram,
    name: &str,
    expr: &PolyExpr,
    center: &[f64],
    shape: &[Vec<f64>],
) -> Result<()> {
    let v = center.len();
    let (p0, p1) = linear_parts(expr);
    let lam = b.program.add_free(format!("{name}_lambda"), 1)[0];
    let ec: Vec<f64> = (0..v)
        .map(|i| (0..v).map(|j| shape[i][j] * center[j]).sum())
        .collect();
    let cec: f64 = ec.iter().zip(center).map(|(a, c)| a * c).sum();
    let mut m = SymmetricExpr::new(v + 2);
    let mut m00 = p0;
    m00.add_term(lam, cec - 1.0);
    *m.entry_mut(0, 0) = m00.compacted();
    for j in 0..v {
        let mut e = p1[j].scaled(0.5);
        e.add_term(lam, -ec[j]);
        *m.entry_mut(0, j + 1) = e.compacted();
        for l in j..v {
            let mut ex = vec![0; v];
            ex[j] += 1;
            ex[l] += 1;
            let scale = if j == l { 1.0 } else { 0.5 };
            let mut e = expr.coef(&ex).scaled(scale);
            e.add_term(lam, shape[j][l]);
            *m.entry_mut(j + 1, l + 1) = e.compacted();
        }
    }
    *m.entry_mut(v + 1, v + 1) = AffineExpr::var(lam);
    b.program
        .add_constraint(name, Cone::Psd(v + 2), m.into_rows());
    Ok(())
}

/// Univariate `p` on `[a, b]`: substitute `u = h s + m`, then require
/// `q0 + q'ζ >= 0` on the moment set through its SDP dual.
fn moment(b: &mut BuiltProgram, name: &str, expr: &PolyExpr, a: f64, hi: f64) -> Result<()> {
    if expr.vars != 1 {
        return Err(Error::UnsupportedDimension(
            "the interval method needs one parameter".into(),
        ));
    }
    let d = expr.degree();
    let p: Vec<AffineExpr> = (0..=d).map(|j| expr.coef(&[j as u32])).collect();
    let t = moment_interval_transform(a, hi, d)?;
    let (q0, q) = t.substitute(&p)?;
    let z = MomentSetZ::new(d)?;
    let (mats, _) = z.dual_matrices();
    let y = b.program.add_free(format!("{name}_y"), mats.len());
    let mut lin = q0;
    lin.add_term(y[0], -1.0);
    b.program
        .add_nonneg(format!("{name}_level"), lin.compacted());
    let c = z.c_matrix_expr(&q);
    let order = z.order();
    let mut m = SymmetricExpr::new(order);
    for j in 0..order {
        for i in 0..=j {
            let mut e = c[i][j].clone();
            for (mat, &yv) in mats.iter().zip(&y) {
                e.add_term(yv, mat[(i, j)]);
            }
            *m.entry_mut(i, j) = e.compacted();
        }
    }
    b.program
        .add_constraint(name, Cone::Psd(order), m.into_rows());
    Ok(())
}

/// `p = σ₀ - Σ p_i σ_i` with SOS `σ`. The multipliers `σ_i` are PSD Gram
/// blocks; `σ₀` is written in image form, its Gram matrix being the
/// residual `p + Σ p_i σ_i` placed on canonical positions plus free
/// combinations of the matrices that do not change the polynomial.
fn sos(b: &mut BuiltProgram, name: &str, expr: &PolyExpr, set: &Semialgebraic) -> Result<()> {
    let v = expr.vars;
    let degs = sos_degrees(set, expr.degree());
    let mut resid = expr.clone();
    for (idx, (poly, &di)) in set.polys.iter().zip(&degs[1..]).enumerate() {
        let half = MonomialBasis::new(v, di / 2);
        let block_name = format!("{name}_sigma{}", idx + 1);
        let s = b
            .program
            .add_block(block_name.clone(), Cone::Psd(half.len()));
        b.gram_blocks.push(block_name);
        for (mono, positions) in gram_positions(&half) {
            for &(i, j) in &positions {
                let var = s.entry(i, j);
                for t in &poly.terms {
                    let e: Exponent = mono.iter().zip(&t.exponent).map(|(a, c)| a + c).collect();
                    resid.coef_mut(&e).add_term(var, t.coef * weight((i, j)));
                }
            }
        }
    }
    let half = MonomialBasis::new(v, degs[0] / 2);
    let positions = gram_positions(&half);
    for e in resid.terms.keys() {
        if total_degree(e) > degs[0] {
            return Err(Error::IncompatiblePlan(format!(
                "SOS residual has degree {} above the σ₀ degree {}",
                total_degree(e),
                degs[0]
            )));
        }
    }
    let extra: usize = positions.values().map(|p| p.len() - 1).sum();
    let y = if extra > 0 {
        b.program.add_free(format!("{name}_y"), extra)
    } else {
        Vec::new()
    };
    let mut g = SymmetricExpr::new(half.len());
    let mut yi = 0;
    for (mono, pos) in &positions {
        let r = pos[0];
        let coef = resid.coef(mono);
        g.entry_mut(r.0, r.1).add_scaled(&coef, 1.0 / weight(r));
        for &p in &pos[1..] {
            g.entry_mut(p.0, p.1).add_term(y[yi], 1.0);
            g.entry_mut(r.0, r.1)
                .add_term(y[yi], -weight(p) / weight(r));
            yi += 1;
        }
    }
    let rows = g
        .into_rows()
        .into_iter()
        .map(AffineExpr::compacted)
        .collect();
    let gram_name = format!("{name}_gram");
    b.program
        .add_constraint(gram_name.clone(), Cone::Psd(half.len()), rows);
    b.gram_constraints.push(gram_name);
    Ok(())
}
