//! Lagrangian dual of a conic program.
//!
//! For `min c'x + c0` subject to equalities `e_i(x) = 0`, conic constraints
//! `g_j(x) ∈ K_j` and cone-tagged variable blocks `x_b ∈ K_b`, the Lagrangian
//!
//! ```text
//! L = c'x + c0 - Σ y_i e_i(x) - Σ <Z_j, g_j(x)> - Σ <W_b, x_b>
//! ```
//!
//! gives the dual `max c0 - Σ y_i e_i(0) - Σ <Z_j, g_j(0)>` over free `y`,
//! `Z_j ∈ K_j` and the stationarity conditions. The returned program is the
//! minimization of the negated dual objective, so at optimality its value is
//! minus the value of the input.

use crate::ir::{tri_pair, AffineExpr, Cone, ConicProgram};

/// Weight of stored entry `k` in the trace inner product.
fn weight(cone: Cone, k: usize) -> f64 {
    match cone {
        Cone::Psd(_) => {
            let (i, j) = tri_pair(k);
            if i == j {
                1.0
            } else {
                2.0
            }
        }
        _ => 1.0,
    }
}

/// Build the dual program.
///
/// Dual variables: a free block `y` (one per equality) and one block per
/// conic constraint with the constraint's cone. Stationarity in a free
/// variable becomes an equality; stationarity in a cone-tagged block becomes
/// a conic constraint on the block's multiplier.
pub fn dualize(p: &ConicProgram) -> ConicProgram {
    let mut d = ConicProgram::new();
    d.metadata = p.metadata.clone();
    d.metadata.insert("dual".into(), "true".into());

    let y = if p.equalities.is_empty() {
        Vec::new()
    } else {
        d.add_free("y", p.equalities.len())
    };
    let zblocks: Vec<_> = p
        .constraints
        .iter()
        .map(|c| d.add_block(format!("dual_{}", c.name), c.cone))
        .collect();

    // grad[v] = c_v - Σ y_i a_iv - Σ w_k Z_jk G_jkv
    let n = p.num_vars();
    let mut grad = vec![AffineExpr::zero(); n];
    for &(v, c) in &p.objective.terms {
        grad[v].constant += c;
    }
    let mut objective = AffineExpr::constant(-p.objective.constant);
    for (i, e) in p.equalities.iter().enumerate() {
        for &(v, a) in &e.terms {
            grad[v].add_term(y[i], -a);
        }
        objective.add_term(y[i], e.constant);
    }
    for (c, zb) in p.constraints.iter().zip(&zblocks) {
        for (k, row) in c.rows.iter().enumerate() {
            let w = weight(c.cone, k);
            let z = zb.index(k);
            for &(v, g) in &row.terms {
                grad[v].add_term(z, -w * g);
            }
            objective.add_term(z, w * row.constant);
        }
    }
    for b in &p.blocks {
        if b.cone.is_free() {
            for v in b.indices() {
                d.add_equality(grad[v].clone());
            }
        } else {
            let rows = (0..b.len())
                .map(|k| grad[b.index(k)].scaled(1.0 / weight(b.cone, k)))
                .collect();
            d.add_constraint(format!("stationarity_{}", b.name), b.cone, rows);
        }
    }
    d.set_objective(objective);
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_form_dual_is_lmi() {
        // min <C, X> s.t. trace X = 1, X ⪰ 0
        let mut p = ConicProgram::new();
        let x = p.add_block("X", Cone::Psd(2));
        let mut obj = AffineExpr::zero();
        obj.add_term(x.entry(0, 0), 2.0);
        obj.add_term(x.entry(0, 1), 2.0);
        obj.add_term(x.entry(1, 1), 2.0);
        p.set_objective(obj);
        let mut tr = AffineExpr::constant(-1.0);
        tr.add_term(x.entry(0, 0), 1.0);
        tr.add_term(x.entry(1, 1), 1.0);
        p.add_equality(tr);
        let d = dualize(&p);
        assert!(d.is_lmi_form());
        assert_eq!(d.num_vars(), 1);
        assert_eq!(d.constraints.len(), 1);
        assert_eq!(d.constraints[0].cone, Cone::Psd(2));
        // Off-diagonal row carries half the objective coefficient.
        assert_eq!(d.constraints[0].rows[1].constant, 1.0);
        assert_eq!(d.objective.terms, vec![(0, -1.0)]);
    }
}
