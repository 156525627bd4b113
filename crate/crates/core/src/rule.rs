//! Polynomial decision rules `x(u)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::molp::{dot, Molp, ObjectivePoint};
use crate::poly::{monomial, total_degree, Linear, MonomialBasis, Polynomial};
use crate::regions::MomentTransform;

/// `x_i(u) = Σ_a coeffs[i][a] u^a` over a graded-lex monomial basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialRule {
    #[serde(flatten)]
    pub basis: MonomialBasis,
    pub coeffs: Vec<Vec<f64>>,
}

/// `x_i(u) = α⁰_i + α¹_i'u + u'Γ_i u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticRuleView {
    pub alpha0: Vec<f64>,
    pub alpha1: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<Vec<f64>>>,
}

impl PolynomialRule {
    pub fn new(basis: MonomialBasis, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        for row in &coeffs {
            if row.len() != basis.len() {
                return Err(Error::DimensionMismatch {
                    expected: basis.len(),
                    found: row.len(),
                });
            }
            if row.iter().any(|c| !c.is_finite()) {
                return Err(Error::Unsupported(
                    "rule coefficients must be finite".into(),
                ));
            }
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zero(n: usize, vars: usize, degree: usize) -> Self {
        let basis = MonomialBasis::new(vars, degree);
        let coeffs = vec![vec![0.0; basis.len()]; n];
        Self { basis, coeffs }
    }

    /// The constant rule `x(u) = x`.
    pub fn constant(x: &[f64], vars: usize, degree: usize) -> Self {
        let mut r = Self::zero(x.len(), vars, degree);
        for (row, &xi) in r.coeffs.iter_mut().zip(x) {
            row[0] = xi;
        }
        r
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn vars(&self) -> usize {
        self.basis.vars
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    fn check_u(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.basis.vars {
            return Err(Error::DimensionMismatch {
                expected: self.basis.vars,
                found: u.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_u(u)?;
        let m = self.basis.eval(u);
        Ok(self.coeffs.iter().map(|row| dot(row, &m)).collect())
    }

    pub fn objective_curve(&self, molp: &Molp, u: &[f64]) -> Result<ObjectivePoint> {
        if molp.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: molp.n(),
                found: self.n(),
            });
        }
        if molp.k() != self.vars() + 1 {
            return Err(Error::DimensionMismatch {
                expected: molp.k() - 1,
                found: self.vars(),
            });
        }
        let x = self.evaluate(u)?;
        Ok(ObjectivePoint {
            f: molp.objective_values(&x),
        })
    }

    /// Jacobian `∂x_i/∂u_j`, `n x vars`.
    pub fn gradient(&self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_u(u)?;
        let v = self.basis.vars;
        // derivative of each basis monomial with respect to each variable
        let dm: Vec<Vec<f64>> = self
            .basis
            .exponents
            .iter()
            .map(|e| {
                (0..v)
                    .map(|j| {
                        if e[j] == 0 {
                            0.0
                        } else {
                            let mut d = e.clone();
                            d[j] -= 1;
                            e[j] as f64 * monomial(u, &d)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(self
            .coeffs
            .iter()
            .map(|row| {
                (0..v)
                    .map(|j| row.iter().zip(&dm).map(|(c, d)| c * d[j]).sum())
                    .collect()
            })
            .collect())
    }

    /// `x_i(u)` as a polynomial.
    pub fn coordinate(&self, i: usize) -> Polynomial {
        let mut p = Polynomial::zero(self.basis.vars);
        for (e, &c) in self.basis.exponents.iter().zip(&self.coeffs[i]) {
            p.add_term(e.clone(), c);
        }
        p.normalized()
    }

    /// `c'x(u)` as a polynomial.
    pub fn composite(&self, c: &[f64]) -> Polynomial {
        let mut p = Polynomial::zero(self.basis.vars);
        for (a, e) in self.basis.exponents.iter().enumerate() {
            let v: f64 = c
                .iter()
                .zip(&self.coeffs)
                .map(|(ci, row)| ci * row[a])
                .sum();
            p.add_term(e.clone(), v);
        }
        p.normalized()
    }

    pub fn add(&self, other: &PolynomialRule) -> Result<PolynomialRule> {
        if self.basis != other.basis || self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.len(),
                found: other.basis.len(),
            });
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(PolynomialRule {
            basis: self.basis.clone(),
            coeffs,
        })
    }

    pub fn quadratic_view(&self) -> Result<QuadraticRuleView> {
        if self.basis.degree > 2 {
            return Err(Error::Unsupported(format!(
                "quadratic view of a degree {} rule",
                self.basis.degree
            )));
        }
        let v = self.basis.vars;
        let n = self.n();
        let mut view = QuadraticRuleView {
            alpha0: vec![0.0; n],
            alpha1: vec![vec![0.0; v]; n],
            gamma: vec![vec![vec![0.0; v]; v]; n],
        };
        for (a, e) in self.basis.exponents.iter().enumerate() {
            let nz: Vec<usize> = (0..v).filter(|&j| e[j] > 0).collect();
            for i in 0..n {
                let c = self.coeffs[i][a];
                match (total_degree(e), nz.as_slice()) {
                    (0, _) => view.alpha0[i] = c,
                    (1, [j]) => view.alpha1[i][*j] = c,
                    (2, [j]) => view.gamma[i][*j][*j] = c,
                    (2, [j, l]) => {
                        view.gamma[i][*j][*l] = 0.5 * c;
                        view.gamma[i][*l][*j] = 0.5 * c;
                    }
                    _ => unreachable!(),
                }
            }
        }
        Ok(view)
    }
}

impl QuadraticRuleView {
    pub fn to_rule(&self) -> PolynomialRule {
        let n = self.alpha0.len();
        let v = self.alpha1.first().map_or(0, Vec::len);
        let mut r = PolynomialRule::zero(n, v, 2);
        for (a, e) in r.basis.exponents.clone().iter().enumerate() {
            let nz: Vec<usize> = (0..v).filter(|&j| e[j] > 0).collect();
            for i in 0..n {
                r.coeffs[i][a] = match (total_degree(e), nz.as_slice()) {
                    (0, _) => self.alpha0[i],
                    (1, [j]) => self.alpha1[i][*j],
                    (2, [j]) => self.gamma[i][*j][*j],
                    (2, [j, l]) => 2.0 * self.gamma[i][*j][*l],
                    _ => unreachable!(),
                };
            }
        }
        r
    }

    /// `α¹_i + 2 Γ_i u`.
    pub fn gradient(&self, i: usize, u: &[f64]) -> Vec<f64> {
        self.alpha1[i]
            .iter()
            .enumerate()
            .map(|(j, a)| a + 2.0 * dot(&self.gamma[i][j], u))
            .collect()
    }
}

/// Rewrite a univariate polynomial with coefficients `coeffs` on `basis`
/// as `q0 + Σ_i q_i ζ_i` with `ζ = (s, ..., s^D)` and `u = D`-transform of `s`.
pub fn substitute_affine<T: Linear>(
    coeffs: &[T],
    basis: &MonomialBasis,
    transform: &MomentTransform,
) -> Result<(T, Vec<T>)> {
    if basis.vars != 1 {
        return Err(Error::UnsupportedDimension(format!(
            "affine substitution needs one parameter, got {}",
            basis.vars
        )));
    }
    if basis.degree > transform.degree || coeffs.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: transform.degree + 1,
            found: coeffs.len(),
        });
    }
    let mut padded = coeffs.to_vec();
    padded.resize(transform.degree + 1, T::zero());
    transform.substitute(&padded)
}
