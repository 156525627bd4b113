//! Multivariate polynomials and monomial bases.

use std::collections::BTreeMap;

use polypareto_conic::AffineExpr;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector of a monomial.
pub type Exponent = Vec<u32>;

pub fn total_degree(e: &[u32]) -> usize {
    e.iter().map(|&v| v as usize).sum()
}

pub fn monomial(u: &[f64], e: &[u32]) -> f64 {
    u.iter()
        .zip(e)
        .fold(1.0, |acc, (x, &p)| acc * x.powi(p as i32))
}

fn add_exp(a: &[u32], b: &[u32]) -> Exponent {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// All exponents of `vars` variables with total degree `deg`, in the order
/// used within one degree of the graded-lex basis (larger power on earlier
/// variables first).
fn exponents_of_degree(vars: usize, deg: u32) -> Vec<Exponent> {
    if vars == 0 {
        return if deg == 0 { vec![vec![]] } else { vec![] };
    }
    if vars == 1 {
        return vec![vec![deg]];
    }
    let mut out = Vec::new();
    for first in (0..=deg).rev() {
        for rest in exponents_of_degree(vars - 1, deg - first) {
            let mut e = vec![first];
            e.extend(rest);
            out.push(e);
        }
    }
    out
}

/// Monomials of total degree at most `degree` in graded-lex order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialBasis {
    pub vars: usize,
    pub degree: usize,
    pub exponents: Vec<Exponent>,
}

impl MonomialBasis {
    pub fn new(vars: usize, degree: usize) -> Self {
        let exponents = (0..=degree as u32)
            .flat_map(|d| exponents_of_degree(vars, d))
            .collect();
        Self {
            vars,
            degree,
            exponents,
        }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn index_of(&self, e: &[u32]) -> Option<usize> {
        self.exponents.iter().position(|x| x.as_slice() == e)
    }

    /// Values of all basis monomials at `u`.
    pub fn eval(&self, u: &[f64]) -> Vec<f64> {
        self.exponents.iter().map(|e| monomial(u, e)).collect()
    }
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// One term of a polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exponent: Exponent,
    pub coef: f64,
}

/// A real polynomial in `vars` variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub vars: usize,
    pub terms: Vec<Term>,
}

impl Polynomial {
    pub fn zero(vars: usize) -> Self {
        Self {
            vars,
            terms: Vec::new(),
        }
    }

    pub fn constant(vars: usize, c: f64) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(vec![0; vars], c);
        p
    }

    /// `coef * u_i`
    pub fn linear(vars: usize, coefs: &[f64], constant: f64) -> Self {
        let mut p = Self::constant(vars, constant);
        for (i, &c) in coefs.iter().enumerate() {
            let mut e = vec![0; vars];
            e[i] = 1;
            p.add_term(e, c);
        }
        p.normalized()
    }

    /// Univariate polynomial from coefficients of `1, u, u^2, ...`.
    pub fn univariate(coefs: &[f64]) -> Self {
        let mut p = Self::zero(1);
        for (j, &c) in coefs.iter().enumerate() {
            p.add_term(vec![j as u32], c);
        }
        p.normalized()
    }

    pub fn add_term(&mut self, exponent: Exponent, coef: f64) {
        self.terms.push(Term { exponent, coef });
    }

    pub fn to_map(&self) -> BTreeMap<Exponent, f64> {
        let mut m = BTreeMap::new();
        for t in &self.terms {
            *m.entry(t.exponent.clone()).or_insert(0.0) += t.coef;
        }
        m
    }

    /// Merge repeated exponents and drop zero terms.
    pub fn normalized(&self) -> Self {
        Self {
            vars: self.vars,
            terms: self
                .to_map()
                .into_iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|(exponent, coef)| Term { exponent, coef })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if t.exponent.len() != self.vars {
                return Err(Error::DimensionMismatch {
                    expected: self.vars,
                    found: t.exponent.len(),
                });
            }
            if !t.coef.is_finite() {
                return Err(Error::InvalidRegion(
                    "non-finite polynomial coefficient".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .filter(|t| t.coef != 0.0)
            .map(|t| total_degree(&t.exponent))
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * monomial(u, &t.exponent))
            .sum()
    }

    pub fn coef(&self, e: &[u32]) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.exponent.as_slice() == e)
            .map(|t| t.coef)
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            vars: self.vars,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    exponent: t.exponent.clone(),
                    coef: s * t.coef,
                })
                .collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut p = Polynomial::zero(self.vars);
        for a in &self.terms {
            for b in &other.terms {
                p.add_term(add_exp(&a.exponent, &b.exponent), a.coef * b.coef);
            }
        }
        p.normalized()
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        p.terms.extend(other.terms.iter().cloned());
        p.normalized()
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut p = Polynomial::zero(self.vars);
        for t in &self.terms {
            if t.exponent[i] > 0 {
                let mut e = t.exponent.clone();
                e[i] -= 1;
                p.add_term(e, t.coef * t.exponent[i] as f64);
            }
        }
        p.normalized()
    }

    /// Gradient (length `vars`) and Hessian (`vars x vars`) of a polynomial
    /// of degree at most two, read off its coefficients.
    pub fn quadratic_parts(&self) -> Option<(f64, Vec<f64>, Vec<Vec<f64>>)> {
        if self.degree() > 2 {
            return None;
        }
        let v = self.vars;
        let mut c = 0.0;
        let mut g = vec![0.0; v];
        let mut h = vec![vec![0.0; v]; v];
        for t in &self.terms {
            let nz: Vec<usize> = (0..v).filter(|&i| t.exponent[i] > 0).collect();
            match (total_degree(&t.exponent), nz.as_slice()) {
                (0, _) => c += t.coef,
                (1, [i]) => g[*i] += t.coef,
                (2, [i]) => h[*i][*i] += 2.0 * t.coef,
                (2, [i, j]) => {
                    h[*i][*j] += t.coef;
                    h[*j][*i] += t.coef;
                }
                _ => unreachable!(),
            }
        }
        Some((c, g, h))
    }
}

/// Coefficient types the builders can combine linearly: plain numbers and
/// affine expressions in program variables.
pub trait Linear: Clone {
    fn zero() -> Self;
    fn add_scaled(&mut self, other: &Self, s: f64);
}

impl Linear for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add_scaled(&mut self, other: &Self, s: f64) {
        *self += s * other;
    }
}

impl Linear for AffineExpr {
    fn zero() -> Self {
        AffineExpr::zero()
    }
    fn add_scaled(&mut self, other: &Self, s: f64) {
        AffineExpr::add_scaled(self, other, s);
    }
}

/// A polynomial in `u` whose coefficients are affine in the program variables.
#[derive(Clone, Debug, Default)]
pub struct PolyExpr {
    pub vars: usize,
    pub terms: BTreeMap<Exponent, AffineExpr>,
}

impl PolyExpr {
    pub fn new(vars: usize) -> Self {
        Self {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn coef_mut(&mut self, e: &[u32]) -> &mut AffineExpr {
        self.terms.entry(e.to_vec()).or_default()
    }

    pub fn coef(&self, e: &[u32]) -> AffineExpr {
        self.terms.get(e).cloned().unwrap_or_default()
    }

    /// `self += s * p` for a numeric polynomial.
    pub fn add_poly(&mut self, p: &Polynomial, s: f64) {
        for t in &p.terms {
            self.coef_mut(&t.exponent).constant += s * t.coef;
        }
    }

    pub fn add_scaled(&mut self, other: &PolyExpr, s: f64) {
        for (e, c) in &other.terms {
            self.coef_mut(e).add_scaled(c, s);
        }
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .filter(|(_, c)| !(c.is_constant() && c.constant == 0.0))
            .map(|(e, _)| total_degree(e))
            .max()
            .unwrap_or(0)
    }

    pub fn derivative(&self, i: usize) -> PolyExpr {
        let mut out = PolyExpr::new(self.vars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                out.coef_mut(&d).add_scaled(c, e[i] as f64);
            }
        }
        out
    }

    /// Numeric polynomial at a given program point.
    pub fn eval_at(&self, x: &[f64]) -> Polynomial {
        let mut p = Polynomial::zero(self.vars);
        for (e, c) in &self.terms {
            p.add_term(e.clone(), c.eval(x));
        }
        p.normalized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order() {
        let b = MonomialBasis::new(2, 2);
        assert_eq!(
            b.exponents,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
        assert_eq!(MonomialBasis::new(3, 4).len(), 35);
        assert_eq!(binomial(6, 2), 15.0);
    }

    #[test]
    fn polynomial_arithmetic() {
        let p = Polynomial::linear(2, &[1.0, -2.0], 3.0);
        let q = p.mul(&p);
        let u = [0.4, -1.1];
        assert!((q.eval(&u) - p.eval(&u).powi(2)).abs() < 1e-12);
        assert_eq!(q.degree(), 2);
        let (c, g, h) = q.quadratic_parts().unwrap();
        assert_eq!(c, 9.0);
        assert_eq!(g, vec![6.0, -12.0]);
        assert_eq!(h, vec![vec![2.0, -4.0], vec![-4.0, 8.0]]);
        assert_eq!(q.derivative(1).eval(&u), -4.0 * p.eval(&u));
    }
}
