//! Solver-neutral conic program representation.
//!
//! A program is a set of scalar variables grouped into named blocks, each
//! block tagged with the cone it lives in (or `Free`), plus
//!
//! * linear equalities `expr(x) == 0`,
//! * conic constraints `(expr_1(x), ..., expr_d(x)) ∈ K`,
//! * a linear objective to minimize.
//!
//! Matrix-valued quantities (PSD blocks and PSD constraints) are stored as
//! their upper triangle in column-major order, `(0,0), (0,1), (1,1), (0,2), ...`,
//! with *natural* (unscaled) entries: the scalar at position `(i, j)` is the
//! value of both `X[i][j]` and `X[j][i]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ProgramError;

/// Cone tag of a variable block or a conic constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "size", rename_all = "snake_case")]
pub enum Cone {
    /// Unconstrained scalars. Only valid for variable blocks.
    Free(usize),
    /// Nonnegative orthant of the given dimension.
    Nonneg(usize),
    /// Second-order cone `{(t, v) : t >= ||v||}` of the given total dimension.
    Soc(usize),
    /// Positive semidefinite cone of symmetric matrices of the given order.
    Psd(usize),
}

impl Cone {
    /// Number of scalars needed to store an element of the cone.
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Free(d) | Cone::Nonneg(d) | Cone::Soc(d) => d,
            Cone::Psd(q) => q * (q + 1) / 2,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Cone::Free(_))
    }
}

/// Position of `(i, j)` (any order) in upper-triangle column-major storage.
pub fn tri_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

/// Inverse of [`tri_index`]: the `(i, j)` pair with `i <= j` at storage index `k`.
pub fn tri_pair(k: usize) -> (usize, usize) {
    let mut j = 0;
    while (j + 1) * (j + 2) / 2 <= k {
        j += 1;
    }
    (k - j * (j + 1) / 2, j)
}

/// An affine function of the program variables.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(index: usize) -> Self {
        Self {
            terms: vec![(index, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(index: usize, coef: f64) -> Self {
        Self {
            terms: vec![(index, coef)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, index: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((index, coef));
        }
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &AffineExpr, scale: f64) {
        if scale == 0.0 {
            return;
        }
        self.constant += scale * other.constant;
        for &(i, c) in &other.terms {
            self.add_term(i, scale * c);
        }
    }

    pub fn scaled(&self, scale: f64) -> AffineExpr {
        let mut out = AffineExpr::zero();
        out.add_scaled(self, scale);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .fold(self.constant, |acc, &(i, c)| acc + c * x[i])
    }

    /// Merge duplicate indices, drop exact zeros, sort by index.
    pub fn compact(&mut self) {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for &(i, c) in &self.terms {
            *merged.entry(i).or_insert(0.0) += c;
        }
        self.terms = merged.into_iter().filter(|&(_, c)| c != 0.0).collect();
    }

    pub fn compacted(mut self) -> Self {
        self.compact();
        self
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }
}

impl std::ops::Add<&AffineExpr> for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: &AffineExpr) -> AffineExpr {
        self.add_scaled(rhs, 1.0);
        self
    }
}

impl std::ops::Sub<&AffineExpr> for AffineExpr {
    type Output = AffineExpr;
    fn sub(mut self, rhs: &AffineExpr) -> AffineExpr {
        self.add_scaled(rhs, -1.0);
        self
    }
}

/// A named group of consecutive scalar variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarBlock {
    pub name: String,
    pub cone: Cone,
    pub offset: usize,
}

impl VarBlock {
    pub fn len(&self) -> usize {
        self.cone.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Global index of the `k`-th scalar of the block.
    pub fn index(&self, k: usize) -> usize {
        debug_assert!(k < self.len());
        self.offset + k
    }

    /// Global index of entry `(i, j)` of a PSD block.
    pub fn entry(&self, i: usize, j: usize) -> usize {
        self.index(tri_index(i, j))
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// `rows ∈ cone`, with PSD rows in upper-triangle order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeConstraint {
    pub name: String,
    pub cone: Cone,
    pub rows: Vec<AffineExpr>,
}

/// A conic program in minimization form.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub blocks: Vec<VarBlock>,
    /// Each expression must vanish.
    pub equalities: Vec<AffineExpr>,
    pub constraints: Vec<ConeConstraint>,
    pub objective: AffineExpr,
    pub metadata: BTreeMap<String, String>,
    num_vars: usize,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Declare a block and return a copy of its descriptor.
    pub fn add_block(&mut self, name: impl Into<String>, cone: Cone) -> VarBlock {
        let block = VarBlock {
            name: name.into(),
            cone,
            offset: self.num_vars,
        };
        self.num_vars += cone.dim();
        self.blocks.push(block.clone());
        block
    }

    /// Declare `n` free scalars and return their global indices.
    pub fn add_free(&mut self, name: impl Into<String>, n: usize) -> Vec<usize> {
        self.add_block(name, Cone::Free(n)).indices().collect()
    }

    pub fn add_equality(&mut self, expr: AffineExpr) {
        self.equalities.push(expr.compacted());
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, cone: Cone, rows: Vec<AffineExpr>) {
        self.constraints.push(ConeConstraint {
            name: name.into(),
            cone,
            rows: rows.into_iter().map(AffineExpr::compacted).collect(),
        });
    }

    /// Convenience for `expr >= 0`.
    pub fn add_nonneg(&mut self, name: impl Into<String>, expr: AffineExpr) {
        self.add_constraint(name, Cone::Nonneg(1), vec![expr]);
    }

    pub fn set_objective(&mut self, objective: AffineExpr) {
        self.objective = objective.compacted();
    }

    pub fn block(&self, name: &str) -> Option<&VarBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn constraint(&self, name: &str) -> Option<&ConeConstraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    /// Number of PSD cones (blocks and constraints), with their orders.
    pub fn psd_orders(&self) -> Vec<usize> {
        let blocks = self.blocks.iter().map(|b| b.cone);
        let cons = self.constraints.iter().map(|c| c.cone);
        blocks
            .chain(cons)
            .filter_map(|c| match c {
                Cone::Psd(q) => Some(q),
                _ => None,
            })
            .collect()
    }

    pub fn has_soc(&self) -> bool {
        self.blocks
            .iter()
            .map(|b| b.cone)
            .chain(self.constraints.iter().map(|c| c.cone))
            .any(|c| matches!(c, Cone::Soc(_)))
    }

    /// All blocks free, no equalities: `min c'x s.t. rows(x) ∈ K`.
    pub fn is_lmi_form(&self) -> bool {
        self.equalities.is_empty() && self.blocks.iter().all(|b| b.cone.is_free())
    }

    /// No conic constraints: variables in cones plus equalities.
    pub fn is_standard_form(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        let n = self.num_vars;
        let check = |e: &AffineExpr, what: &str| -> Result<(), ProgramError> {
            if !e.constant.is_finite() {
                return Err(ProgramError::NonFinite(what.to_string()));
            }
            for &(i, c) in &e.terms {
                if i >= n {
                    return Err(ProgramError::UnknownVariable {
                        index: i,
                        context: what.to_string(),
                    });
                }
                if !c.is_finite() {
                    return Err(ProgramError::NonFinite(what.to_string()));
                }
            }
            Ok(())
        };
        let mut expected = 0;
        for b in &self.blocks {
            if b.offset != expected {
                return Err(ProgramError::BadBlock(b.name.clone()));
            }
            if matches!(b.cone, Cone::Soc(0) | Cone::Psd(0)) {
                return Err(ProgramError::BadBlock(b.name.clone()));
            }
            expected += b.len();
        }
        if expected != n {
            return Err(ProgramError::BadBlock("<total size>".into()));
        }
        check(&self.objective, "objective")?;
        for (k, e) in self.equalities.iter().enumerate() {
            check(e, &format!("equality {k}"))?;
        }
        for c in &self.constraints {
            if c.cone.is_free() {
                return Err(ProgramError::FreeConstraint(c.name.clone()));
            }
            if c.rows.len() != c.cone.dim() || c.rows.is_empty() {
                return Err(ProgramError::ConstraintSize {
                    name: c.name.clone(),
                    expected: c.cone.dim(),
                    found: c.rows.len(),
                });
            }
            for r in &c.rows {
                check(r, &c.name)?;
            }
        }
        Ok(())
    }

    /// Compare data with another program, ignoring names and metadata.
    ///
    /// Two programs agree when they declare the same cones in the same order
    /// and their objective, equalities and constraint rows coincide entrywise
    /// within `tol`.
    pub fn same_data(&self, other: &ConicProgram, tol: f64) -> bool {
        fn expr_eq(a: &AffineExpr, b: &AffineExpr, tol: f64) -> bool {
            let a = a.clone().compacted();
            let b = b.clone().compacted();
            if (a.constant - b.constant).abs() > tol {
                return false;
            }
            let mut map: BTreeMap<usize, f64> = BTreeMap::new();
            for &(i, c) in &a.terms {
                *map.entry(i).or_insert(0.0) += c;
            }
            for &(i, c) in &b.terms {
                *map.entry(i).or_insert(0.0) -= c;
            }
            map.values().all(|d| d.abs() <= tol)
        }
        self.num_vars == other.num_vars
            && self.blocks.len() == other.blocks.len()
            && self
                .blocks
                .iter()
                .zip(&other.blocks)
                .all(|(a, b)| a.cone == b.cone)
            && self.equalities.len() == other.equalities.len()
            && self
                .equalities
                .iter()
                .zip(&other.equalities)
                .all(|(a, b)| expr_eq(a, b, tol))
            && self.constraints.len() == other.constraints.len()
            && self
                .constraints
                .iter()
                .zip(&other.constraints)
                .all(|(a, b)| {
                    a.cone == b.cone && a.rows.iter().zip(&b.rows).all(|(x, y)| expr_eq(x, y, tol))
                })
            && expr_eq(&self.objective, &other.objective, tol)
    }
}

/// Helper for assembling a PSD constraint entry by entry.
///
/// Entries are addressed by `(i, j)` in either order; both refer to the same
/// symmetric position.
#[derive(Clone, Debug)]
pub struct SymmetricExpr {
    order: usize,
    entries: Vec<AffineExpr>,
}

impl SymmetricExpr {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            entries: vec![AffineExpr::zero(); order * (order + 1) / 2],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut AffineExpr {
        &mut self.entries[tri_index(i, j)]
    }

    pub fn entry(&self, i: usize, j: usize) -> &AffineExpr {
        &self.entries[tri_index(i, j)]
    }

    pub fn into_rows(self) -> Vec<AffineExpr> {
        self.entries
    }
}
