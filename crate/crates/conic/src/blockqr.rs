//! Regularized least-squares factorization for matrices with block-arrow
//! structure.
//!
//! Columns are split into groups of local columns, each touching only the
//! rows of its own group, and global columns touching anything. Local
//! columns are eliminated group by group with small QR factorizations; the
//! remaining rows form a reduced problem in the global columns.

use nalgebra::{DMatrix, DVector, QR};

use crate::cones::ConeSet;

#[derive(Clone, Debug)]
struct Group {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

#[derive(Clone, Debug)]
pub(crate) struct Partition {
    groups: Vec<Group>,
    global: Vec<usize>,
    /// Rows outside every group.
    loose: Vec<usize>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl Partition {
    /// Everything global: a plain dense QR.
    pub(crate) fn dense(rows: usize, cols: usize) -> Self {
        Self {
            groups: Vec::new(),
            global: (0..cols).collect(),
            loose: (0..rows).collect(),
        }
    }

    /// Group cones connected through columns while groups stay below
    /// `max_rows` rows; columns that would exceed it become global.
    pub(crate) fn detect(g: &DMatrix<f64>, cones: &ConeSet, max_rows: usize) -> Self {
        let (m, n) = g.shape();
        let nc = cones.cones.len();
        let mut row_cone = vec![0; m];
        let mut size = vec![0; nc];
        for k in 0..nc {
            for i in cones.range(k) {
                row_cone[i] = k;
            }
            size[k] = cones.range(k).len();
        }
        let touched: Vec<Vec<usize>> = (0..n)
            .map(|j| {
                let mut ks: Vec<usize> = (0..m)
                    .filter(|&i| g[(i, j)] != 0.0)
                    .map(|i| row_cone[i])
                    .collect();
                ks.dedup();
                ks.sort_unstable();
                ks.dedup();
                ks
            })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&j| touched[j].len());
        let mut parent: Vec<usize> = (0..nc).collect();
        let mut global = vec![false; n];
        for &j in &order {
            let ks = &touched[j];
            if ks.is_empty() {
                global[j] = true;
                continue;
            }
            let mut roots: Vec<usize> = ks.iter().map(|&k| find(&mut parent, k)).collect();
            roots.sort_unstable();
            roots.dedup();
            let total: usize = roots.iter().map(|&r| size[r]).sum();
            if roots.len() > 1 && total > max_rows {
                global[j] = true;
                continue;
            }
            let root = roots[0];
            for &r in &roots[1..] {
                parent[r] = root;
            }
            size[root] = total;
        }
        let mut group_of_root = vec![usize::MAX; nc];
        let mut groups: Vec<Group> = Vec::new();
        for j in 0..n {
            if global[j] {
                continue;
            }
            let root = find(&mut parent, touched[j][0]);
            if group_of_root[root] == usize::MAX {
                group_of_root[root] = groups.len();
                groups.push(Group {
                    rows: Vec::new(),
                    cols: Vec::new(),
                });
            }
            groups[group_of_root[root]].cols.push(j);
        }
        let mut loose = Vec::new();
        for k in 0..nc {
            let root = find(&mut parent, k);
            match group_of_root[root] {
                usize::MAX => loose.extend(cones.range(k)),
                gi => groups[gi].rows.extend(cones.range(k)),
            }
        }
        Self {
            groups,
            global: (0..n).filter(|&j| global[j]).collect(),
            loose,
        }
    }
}

struct GroupFactor {
    qr: QR<f64, nalgebra::Dyn, nalgebra::Dyn>,
    r: DMatrix<f64>,
    /// Coupling of the local to the global columns after elimination.
    t: DMatrix<f64>,
}

/// Factorization of `[B; reg I] = Q R` in block form.
pub(crate) struct BlockQr<'a> {
    part: &'a Partition,
    groups: Vec<GroupFactor>,
    global: Option<(QR<f64, nalgebra::Dyn, nalgebra::Dyn>, DMatrix<f64>)>,
    n: usize,
}

fn has_bad_diagonal(r: &DMatrix<f64>) -> bool {
    (0..r.nrows().min(r.ncols())).any(|i| !(r[(i, i)].is_finite() && r[(i, i)] != 0.0))
}

impl<'a> BlockQr<'a> {
    pub(crate) fn new(b: &DMatrix<f64>, part: &'a Partition, reg: f64) -> Option<Self> {
        let ng = part.global.len();
        let mut groups = Vec::with_capacity(part.groups.len());
        let mut reduced_rows = part.loose.len() + ng;
        for g in &part.groups {
            reduced_rows += g.rows.len();
        }
        let mut f = DMatrix::zeros(reduced_rows, ng);
        let mut row = 0;
        for g in &part.groups {
            let (rg, lg) = (g.rows.len(), g.cols.len());
            let mut local = DMatrix::zeros(rg + lg, lg);
            let mut coupling = DMatrix::zeros(rg + lg, ng);
            for (a, &i) in g.rows.iter().enumerate() {
                for (c, &j) in g.cols.iter().enumerate() {
                    local[(a, c)] = b[(i, j)];
                }
                for (c, &j) in part.global.iter().enumerate() {
                    coupling[(a, c)] = b[(i, j)];
                }
            }
            for c in 0..lg {
                local[(rg + c, c)] = reg;
            }
            let qr = local.qr();
            let r = qr.r();
            if has_bad_diagonal(&r) {
                return None;
            }
            qr.q_tr_mul(&mut coupling);
            f.view_mut((row, 0), (rg, ng))
                .copy_from(&coupling.rows(lg, rg));
            row += rg;
            groups.push(GroupFactor {
                qr,
                r,
                t: coupling.rows(0, lg).into_owned(),
            });
        }
        for &i in &part.loose {
            for (c, &j) in part.global.iter().enumerate() {
                f[(row, c)] = b[(i, j)];
            }
            row += 1;
        }
        for c in 0..ng {
            f[(row + c, c)] = reg;
        }
        let global = if ng > 0 {
            let qr = f.qr();
            let r = qr.r();
            if has_bad_diagonal(&r) {
                return None;
            }
            Some((qr, r))
        } else {
            None
        };
        Some(Self {
            part,
            groups,
            global,
            n: b.ncols(),
        })
    }

    /// `w` solving `(B'B + reg² I) w = c + B'v`.
    pub(crate) fn solve(&self, c: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let part = self.part;
        let ng = part.global.len();
        // s = R^{-T} c
        let mut s_local = Vec::with_capacity(self.groups.len());
        let mut cg = DVector::from_iterator(ng, part.global.iter().map(|&j| c[j]));
        for (g, f) in part.groups.iter().zip(&self.groups) {
            let cl = DVector::from_iterator(g.cols.len(), g.cols.iter().map(|&j| c[j]));
            let s = f.r.tr_solve_upper_triangular(&cl)?;
            cg -= f.t.tr_mul(&s);
            s_local.push(s);
        }
        // t = top rows of Q'[v; 0]
        let mut reduced = DVector::zeros(v.len() + ng);
        let mut row = 0;
        let mut t_local = Vec::with_capacity(self.groups.len());
        for (g, f) in part.groups.iter().zip(&self.groups) {
            let (rg, lg) = (g.rows.len(), g.cols.len());
            let mut u = DVector::zeros(rg + lg);
            for (a, &i) in g.rows.iter().enumerate() {
                u[a] = v[i];
            }
            f.qr.q_tr_mul(&mut u);
            reduced.rows_mut(row, rg).copy_from(&u.rows(lg, rg));
            row += rg;
            t_local.push(u.rows(0, lg).into_owned());
        }
        for &i in &part.loose {
            reduced[row] = v[i];
            row += 1;
        }
        let mut w = DVector::zeros(self.n);
        let wg = match &self.global {
            Some((qr, r)) => {
                let sg = r.tr_solve_upper_triangular(&cg)?;
                qr.q_tr_mul(&mut reduced);
                let wg = r.solve_upper_triangular(&(sg + reduced.rows(0, ng)))?;
                for (c, &j) in part.global.iter().enumerate() {
                    w[j] = wg[c];
                }
                wg
            }
            None => DVector::zeros(0),
        };
        for (((g, f), s), t) in part
            .groups
            .iter()
            .zip(&self.groups)
            .zip(s_local)
            .zip(t_local)
        {
            let rhs = s + t - &f.t * &wg;
            let wl = f.r.solve_upper_triangular(&rhs)?;
            for (c, &j) in g.cols.iter().enumerate() {
                w[j] = wl[c];
            }
        }
        Some(w)
    }
}
