//! Moment description of the curve `{(s, s², ..., s^d) : -1 <= s <= 1}`.
//!
//! Write `s = 2t / (1 + t²)`. Then `s^j (1 + t²)^d = (2t)^j (1 + t²)^(d-j)`,
//! a polynomial of degree `2d` in `t`. With `M[k][j]` its coefficient of
//! `t^k`, the moment curve is the image under `λ ↦ M'λ` of the normalized
//! moment vectors `λ_k = t^k / (1 + t²)^d`, and the set
//!
//! ```text
//! Z = { ζ : (1, ζ) = M'λ,  Hankel(λ) ⪰ 0 }
//! ```
//!
//! is its convex hull. The Hankel matrix has order `d + 1`.

use nalgebra::DMatrix;
use polypareto_conic::{
    solve, AffineExpr, Cone, ConicProgram, SolveStatus, SolverOptions, SymmetricExpr,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{binomial, Linear};

/// `t ↦ D s_vec + d` mapping powers of `s ∈ [-1, 1]` to powers of
/// `t = h s + m` on `[a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTransform {
    #[serde(rename = "D")]
    pub d_mat: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub degree: usize,
    pub a: f64,
    pub b: f64,
}

pub fn moment_interval_transform(a: f64, b: f64, degree: usize) -> Result<MomentTransform> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidRegion("interval needs finite a < b".into()));
    }
    if degree == 0 {
        return Err(Error::Unsupported(
            "moment transform needs degree ≥ 1".into(),
        ));
    }
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    let d_mat = (1..=degree)
        .map(|j| {
            (1..=degree)
                .map(|i| {
                    if i <= j {
                        binomial(j, i) * h.powi(i as i32) * m.powi((j - i) as i32)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let d = (1..=degree).map(|j| m.powi(j as i32)).collect();
    Ok(MomentTransform {
        d_mat,
        d,
        degree,
        a,
        b,
    })
}

impl MomentTransform {
    /// `D (s, ..., s^d) + d`.
    pub fn apply(&self, s: f64) -> Vec<f64> {
        let z: Vec<f64> = (1..=self.degree).map(|i| s.powi(i as i32)).collect();
        self.apply_lifted(&z)
    }

    pub fn apply_lifted(&self, zeta: &[f64]) -> Vec<f64> {
        self.d_mat
            .iter()
            .zip(&self.d)
            .map(|(row, dj)| dj + row.iter().zip(zeta).map(|(a, z)| a * z).sum::<f64>())
            .collect()
    }

    /// Rewrite `p_0 + Σ_j p_j t^j` (coefficients for `t^0..t^degree`) as
    /// `q_0 + Σ_i q_i s^i`.
    pub fn substitute<T: Linear>(&self, p: &[T]) -> Result<(T, Vec<T>)> {
        if p.len() != self.degree + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.degree + 1,
                found: p.len(),
            });
        }
        let mut q0 = p[0].clone();
        let mut q = vec![T::zero(); self.degree];
        for j in 1..=self.degree {
            q0.add_scaled(&p[j], self.d[j - 1]);
            for (i, qi) in q.iter_mut().enumerate().take(j) {
                qi.add_scaled(&p[j], self.d_mat[j - 1][i]);
            }
        }
        Ok((q0, q))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSetZ {
    pub degree: usize,
    /// `(2d + 1) x (d + 1)` map with `(1, ζ) = M'λ`.
    pub map: Vec<Vec<f64>>,
}

impl MomentSetZ {
    pub fn new(degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Unsupported("moment set needs degree ≥ 1".into()));
        }
        let d = degree;
        let map = (0..=2 * d)
            .map(|k| {
                (0..=d)
                    .map(|j| {
                        // coefficient of t^k in 2^j t^j (1 + t²)^(d-j)
                        if k < j || (k - j) % 2 == 1 || (k - j) / 2 > d - j {
                            0.0
                        } else {
                            2f64.powi(j as i32) * binomial(d - j, (k - j) / 2)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { degree, map })
    }

    pub fn order(&self) -> usize {
        self.degree + 1
    }

    pub fn hankel(&self, lambda: &[f64]) -> DMatrix<f64> {
        let q = self.order();
        DMatrix::from_fn(q, q, |i, j| lambda[i + j])
    }

    /// Normalized moment vector of the point `s`.
    pub fn lift_point(&self, s: f64) -> Vec<f64> {
        let t = if s == 0.0 {
            0.0
        } else {
            (1.0 - (1.0 - s * s).max(0.0).sqrt()) / s
        };
        let scale = (1.0 + t * t).powi(self.degree as i32);
        (0..=2 * self.degree)
            .map(|k| t.powi(k as i32) / scale)
            .collect()
    }

    /// `M'λ`, whose first entry is the normalization and the rest is `ζ`.
    pub fn image(&self, lambda: &[f64]) -> Vec<f64> {
        (0..=self.degree)
            .map(|j| {
                (0..self.map.len())
                    .map(|k| self.map[k][j] * lambda[k])
                    .sum()
            })
            .collect()
    }

    /// Upper-triangle positions `(a, b)` with `a + b = k`.
    fn positions(&self, k: usize) -> Vec<(usize, usize)> {
        let d = self.degree;
        (k.saturating_sub(d)..=k / 2).map(|a| (a, k - a)).collect()
    }

    /// A symmetric matrix `X` with `<X, H_k> = w_k` for the Hankel basis
    /// matrices `H_k`: even `k` on the diagonal, odd `k` split over the first
    /// antidiagonal pair.
    fn place<T: Linear>(&self, w: &[T]) -> Vec<Vec<T>> {
        let q = self.order();
        let mut x = vec![vec![T::zero(); q]; q];
        for (k, wk) in w.iter().enumerate() {
            if k % 2 == 0 {
                x[k / 2][k / 2].add_scaled(wk, 1.0);
            } else {
                let (a, b) = self.positions(k)[0];
                x[a][b].add_scaled(wk, 0.5);
                x[b][a].add_scaled(wk, 0.5);
            }
        }
        x
    }

    fn weights<T: Linear>(&self, q: &[T], col0: Option<&T>) -> Vec<T> {
        (0..self.map.len())
            .map(|k| {
                let mut w = T::zero();
                if let Some(c) = col0 {
                    w.add_scaled(c, self.map[k][0]);
                }
                for (j, qj) in q.iter().enumerate() {
                    w.add_scaled(qj, self.map[k][j + 1]);
                }
                w
            })
            .collect()
    }

    /// `C(q)` with `<C(q), Hankel(λ)> = q'ζ` whenever `(1, ζ) = M'λ`.
    pub fn c_matrix_expr<T: Linear>(&self, q: &[T]) -> Vec<Vec<T>> {
        self.place(&self.weights(q, None))
    }

    pub fn c_matrix(&self, q: &[f64]) -> DMatrix<f64> {
        to_dmatrix(self.c_matrix_expr(q))
    }

    /// Normalization matrix: `<A_1, Hankel(λ)> = (M'λ)_0`.
    pub fn a1(&self) -> DMatrix<f64> {
        to_dmatrix(self.place(&self.weights::<f64>(&[], Some(&1.0))))
    }

    /// Matrices orthogonal to every Hankel basis matrix. Together with
    /// [`Self::a1`] they are the constraint matrices of the moment SDP.
    pub fn null_matrices(&self) -> Vec<DMatrix<f64>> {
        let q = self.order();
        let unit = |(a, b): (usize, usize)| {
            let mut s = DMatrix::zeros(q, q);
            s[(a, b)] = 1.0;
            s[(b, a)] = 1.0;
            s
        };
        let weight = |(a, b): (usize, usize)| if a == b { 1.0 } else { 2.0 };
        let mut out = Vec::new();
        for k in 0..=2 * self.degree {
            let pos = self.positions(k);
            let r = pos[0];
            for &p in &pos[1..] {
                out.push(unit(p) - unit(r) * (weight(p) / weight(r)));
            }
        }
        out
    }

    /// `A_1, N_1, ...` followed by the right-hand side `(1, 0, ..., 0)`.
    pub fn dual_matrices(&self) -> (Vec<DMatrix<f64>>, Vec<f64>) {
        let mut mats = vec![self.a1()];
        mats.extend(self.null_matrices());
        let mut b = vec![0.0; mats.len()];
        b[0] = 1.0;
        (mats, b)
    }

    /// Membership of `ζ` decided by a conic feasibility problem.
    pub fn contains(&self, zeta: &[f64]) -> Result<bool> {
        if zeta.len() != self.degree {
            return Err(Error::DimensionMismatch {
                expected: self.degree,
                found: zeta.len(),
            });
        }
        let mut p = ConicProgram::new();
        let lam = p.add_free("lambda", 2 * self.degree + 1);
        let target: Vec<f64> = std::iter::once(1.0).chain(zeta.iter().copied()).collect();
        for (j, tj) in target.iter().enumerate() {
            let mut e = AffineExpr::constant(-tj);
            for (k, &l) in lam.iter().enumerate() {
                e.add_term(l, self.map[k][j]);
            }
            p.add_equality(e);
        }
        let q = self.order();
        let mut h = SymmetricExpr::new(q);
        for j in 0..q {
            for i in 0..=j {
                *h.entry_mut(i, j) = AffineExpr::var(lam[i + j]);
            }
        }
        p.add_constraint("hankel", Cone::Psd(q), h.into_rows());
        let sol = solve(&p, &SolverOptions::default())?;
        Ok(sol.status == SolveStatus::Optimal)
    }

    /// The moment SDP `max <C, X> s.t. <A_i, X> = b_i, X ⪰ 0` for the row
    /// functional `q` (coefficients of `ζ_1..ζ_d`), written as the
    /// minimization of `-<C, X>`.
    pub fn dual_subproblem(&self, q: &[f64]) -> ConicProgram {
        let order = self.order();
        let mut p = ConicProgram::new();
        let x = p.add_block("X", Cone::Psd(order));
        let inner = |m: &DMatrix<f64>, scale: f64, constant: f64| {
            let mut e = AffineExpr::constant(constant);
            for j in 0..order {
                for i in 0..=j {
                    let w = if i == j { 1.0 } else { 2.0 };
                    e.add_term(x.entry(i, j), scale * w * m[(i, j)]);
                }
            }
            e
        };
        let (mats, b) = self.dual_matrices();
        for (m, bi) in mats.iter().zip(&b) {
            p.add_equality(inner(m, 1.0, -bi));
        }
        p.set_objective(inner(&self.c_matrix(q), -1.0, 0.0));
        p.metadata.insert(
            "subproblem".into(),
            format!("moment dual, degree {}", self.degree),
        );
        p
    }
}

fn to_dmatrix(x: Vec<Vec<f64>>) -> DMatrix<f64> {
    let q = x.len();
    DMatrix::from_fn(q, q, |i, j| x[i][j])
}
