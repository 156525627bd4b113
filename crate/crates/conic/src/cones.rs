//! Cone kernels used by the interior-point method.
//!
//! All vectors here live in the solver's internal space, where PSD elements
//! are stored as `svec`: upper triangle column-major with off-diagonal
//! entries multiplied by `sqrt(2)`, so that the trace inner product becomes
//! the Euclidean one.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::ir::{tri_index, tri_pair};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ConeKind {
    Nonneg(usize),
    Soc(usize),
    Psd(usize),
}

impl ConeKind {
    pub(crate) fn dim(&self) -> usize {
        match *self {
            ConeKind::Nonneg(d) | ConeKind::Soc(d) => d,
            ConeKind::Psd(q) => q * (q + 1) / 2,
        }
    }

    /// Barrier parameter contributed by the cone.
    pub(crate) fn degree(&self) -> usize {
        match *self {
            ConeKind::Nonneg(d) => d,
            ConeKind::Soc(_) => 1,
            ConeKind::Psd(q) => q,
        }
    }
}

pub(crate) fn svec_to_mat(v: &[f64], q: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(q, q);
    for (k, &val) in v.iter().enumerate() {
        let (i, j) = tri_pair(k);
        if i == j {
            m[(i, i)] = val;
        } else {
            m[(i, j)] = val / SQRT2;
            m[(j, i)] = val / SQRT2;
        }
    }
    m
}

pub(crate) fn mat_to_svec(m: &DMatrix<f64>, out: &mut [f64]) {
    let q = m.nrows();
    for j in 0..q {
        for i in 0..=j {
            let k = tri_index(i, j);
            out[k] = if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)]) * SQRT2
            };
        }
    }
}

/// Nesterov-Todd scaling of a single cone.
#[derive(Clone, Debug)]
pub(crate) enum Scaling {
    /// `W = diag(w)`.
    Nonneg { w: Vec<f64> },
    /// `W = beta * [[w0, w1'], [w1, I + w1 w1' / (1 + w0)]]`, symmetric.
    Soc { beta: f64, wbar: Vec<f64> },
    /// `W(Z) = R' Z R`.
    Psd { r: DMatrix<f64>, rinv: DMatrix<f64> },
}

/// Product of cones with fixed offsets into a stacked vector.
#[derive(Clone, Debug)]
pub(crate) struct ConeSet {
    pub(crate) cones: Vec<ConeKind>,
    pub(crate) offsets: Vec<usize>,
    pub(crate) dim: usize,
}

impl ConeSet {
    pub(crate) fn new(cones: Vec<ConeKind>) -> Self {
        let mut offsets = Vec::with_capacity(cones.len());
        let mut dim = 0;
        for c in &cones {
            offsets.push(dim);
            dim += c.dim();
        }
        Self {
            cones,
            offsets,
            dim,
        }
    }

    pub(crate) fn degree(&self) -> usize {
        self.cones.iter().map(|c| c.degree()).sum()
    }

    pub(crate) fn range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k] + self.cones[k].dim()
    }

    pub(crate) fn identity(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.dim];
        for (k, c) in self.cones.iter().enumerate() {
            let off = self.offsets[k];
            match *c {
                ConeKind::Nonneg(d) => e[off..off + d].iter_mut().for_each(|v| *v = 1.0),
                ConeKind::Soc(_) => e[off] = 1.0,
                ConeKind::Psd(q) => {
                    for i in 0..q {
                        e[off + tri_index(i, i)] = 1.0;
                    }
                }
            }
        }
        e
    }

    /// Smallest `alpha` with `v + alpha * e` in the cone (negative when `v`
    /// is interior).
    pub(crate) fn interior_shift(&self, v: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (k, c) in self.cones.iter().enumerate() {
            let r = self.range(k);
            let part = &v[r];
            let shift = match *c {
                ConeKind::Nonneg(_) => -part.iter().cloned().fold(f64::INFINITY, f64::min),
                ConeKind::Soc(_) => norm(&part[1..]) - part[0],
                ConeKind::Psd(q) => {
                    let eig = SymmetricEigen::new(svec_to_mat(part, q));
                    -eig.eigenvalues.min()
                }
            };
            worst = worst.max(shift);
        }
        worst
    }

    /// NT scalings and the scaled point `lambda = W z = W^{-T} s`.
    pub(crate) fn scalings(&self, s: &[f64], z: &[f64]) -> Option<(Vec<Scaling>, Vec<f64>)> {
        let mut out = Vec::with_capacity(self.cones.len());
        let mut lambda = vec![0.0; self.dim];
        for (k, c) in self.cones.iter().enumerate() {
            let r = self.range(k);
            let (sk, zk) = (&s[r.clone()], &z[r.clone()]);
            let lk = &mut lambda[r];
            match *c {
                ConeKind::Nonneg(_) => {
                    let mut w = Vec::with_capacity(sk.len());
                    for i in 0..sk.len() {
                        if !(sk[i] > 0.0 && zk[i] > 0.0) {
                            return None;
                        }
                        w.push((sk[i] / zk[i]).sqrt());
                        lk[i] = (sk[i] * zk[i]).sqrt();
                    }
                    out.push(Scaling::Nonneg { w });
                }
                ConeKind::Soc(_) => {
                    let sn = jnorm(sk)?;
                    let zn = jnorm(zk)?;
                    let sbar: Vec<f64> = sk.iter().map(|v| v / sn).collect();
                    let zbar: Vec<f64> = zk.iter().map(|v| v / zn).collect();
                    let dotsz: f64 = sbar.iter().zip(&zbar).map(|(a, b)| a * b).sum();
                    let gamma = ((1.0 + dotsz) / 2.0).sqrt();
                    let mut wbar = vec![0.0; sk.len()];
                    wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
                    for i in 1..sk.len() {
                        wbar[i] = (sbar[i] - zbar[i]) / (2.0 * gamma);
                    }
                    let beta = (sn / zn).sqrt();
                    let sc = Scaling::Soc { beta, wbar };
                    sc.apply_w(zk, lk);
                    out.push(sc);
                }
                ConeKind::Psd(q) => {
                    let smat = svec_to_mat(sk, q);
                    let zmat = svec_to_mat(zk, q);
                    let ls = smat.cholesky()?.l();
                    let lz = zmat.cholesky()?.l();
                    let prod = lz.transpose() * &ls;
                    let svd = prod.svd(false, true);
                    let vt = svd.v_t?;
                    let sig = svd.singular_values;
                    if sig.iter().any(|&v| !(v > 0.0)) {
                        return None;
                    }
                    let mut r = ls.clone() * vt.transpose();
                    let ls_inv = ls.clone().try_inverse()?;
                    let mut rinv = &vt * ls_inv;
                    for j in 0..q {
                        let f = sig[j].sqrt();
                        for i in 0..q {
                            r[(i, j)] /= f;
                            rinv[(j, i)] *= f;
                        }
                    }
                    lk.iter_mut().for_each(|v| *v = 0.0);
                    for i in 0..q {
                        lk[tri_index(i, i)] = sig[i];
                    }
                    out.push(Scaling::Psd { r, rinv });
                }
            }
        }
        Some((out, lambda))
    }

    /// Jordan product `u ∘ v`.
    pub(crate) fn jordan(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (k, c) in self.cones.iter().enumerate() {
            let r = self.range(k);
            let (uk, vk) = (&u[r.clone()], &v[r.clone()]);
            let ok = &mut out[r];
            match *c {
                ConeKind::Nonneg(_) => {
                    for i in 0..uk.len() {
                        ok[i] = uk[i] * vk[i];
                    }
                }
                ConeKind::Soc(_) => {
                    ok[0] = dot(uk, vk);
                    for i in 1..uk.len() {
                        ok[i] = uk[0] * vk[i] + vk[0] * uk[i];
                    }
                }
                ConeKind::Psd(q) => {
                    let um = svec_to_mat(uk, q);
                    let vm = svec_to_mat(vk, q);
                    let p = (&um * &vm + &vm * &um) * 0.5;
                    mat_to_svec(&p, ok);
                }
            }
        }
        out
    }

    /// Solve `lambda ∘ x = xi` for `x`, with `lambda` a scaled point (diagonal
    /// in the PSD blocks).
    pub(crate) fn jordan_div(&self, lambda: &[f64], xi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (k, c) in self.cones.iter().enumerate() {
            let r = self.range(k);
            let (lk, xk) = (&lambda[r.clone()], &xi[r.clone()]);
            let ok = &mut out[r];
            match *c {
                ConeKind::Nonneg(_) => {
                    for i in 0..lk.len() {
                        ok[i] = xk[i] / lk[i];
                    }
                }
                ConeKind::Soc(_) => {
                    let l1n2: f64 = lk[1..].iter().map(|v| v * v).sum();
                    let det = lk[0] * lk[0] - l1n2;
                    let l1x1: f64 = lk[1..].iter().zip(&xk[1..]).map(|(a, b)| a * b).sum();
                    let x0 = (lk[0] * xk[0] - l1x1) / det;
                    ok[0] = x0;
                    for i in 1..lk.len() {
                        ok[i] = (xk[i] - x0 * lk[i]) / lk[0];
                    }
                }
                ConeKind::Psd(_) => {
                    for (kk, o) in ok.iter_mut().enumerate() {
                        let (i, j) = tri_pair(kk);
                        let li = lk[tri_index(i, i)];
                        let lj = lk[tri_index(j, j)];
                        *o = 2.0 * xk[kk] / (li + lj);
                    }
                }
            }
        }
        out
    }

    /// Largest `alpha >= 0` with `lambda + alpha * d` in the cone.
    pub(crate) fn max_step(&self, lambda: &[f64], d: &[f64]) -> f64 {
        let mut alpha = f64::INFINITY;
        for (k, c) in self.cones.iter().enumerate() {
            let r = self.range(k);
            let (lk, dk) = (&lambda[r.clone()], &d[r]);
            let a = match *c {
                ConeKind::Nonneg(_) => {
                    let mut a = f64::INFINITY;
                    for i in 0..lk.len() {
                        if dk[i] < 0.0 {
                            a = a.min(-lk[i] / dk[i]);
                        }
                    }
                    a
                }
                ConeKind::Soc(_) => soc_step(lk, dk),
                ConeKind::Psd(q) => {
                    let mut m = svec_to_mat(dk, q);
                    let mut isq = Vec::with_capacity(q);
                    for i in 0..q {
                        isq.push(1.0 / lk[tri_index(i, i)].sqrt());
                    }
                    for j in 0..q {
                        for i in 0..q {
                            m[(i, j)] *= isq[i] * isq[j];
                        }
                    }
                    let min = SymmetricEigen::new(m).eigenvalues.min();
                    if min < 0.0 {
                        -1.0 / min
                    } else {
                        f64::INFINITY
                    }
                }
            };
            alpha = alpha.min(a);
        }
        alpha
    }
}

impl Scaling {
    pub(crate) fn apply_w(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Nonneg { w } => {
                for i in 0..v.len() {
                    out[i] = w[i] * v[i];
                }
            }
            Scaling::Soc { beta, wbar } => soc_apply(*beta, wbar, v, out, false),
            Scaling::Psd { r, .. } => {
                let q = r.nrows();
                let m = svec_to_mat(v, q);
                mat_to_svec(&(r.transpose() * m * r), out);
            }
        }
    }

    pub(crate) fn apply_wt(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Psd { r, .. } => {
                let q = r.nrows();
                let m = svec_to_mat(v, q);
                mat_to_svec(&(r * m * r.transpose()), out);
            }
            _ => self.apply_w(v, out),
        }
    }

    pub(crate) fn apply_winv(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Nonneg { w } => {
                for i in 0..v.len() {
                    out[i] = v[i] / w[i];
                }
            }
            Scaling::Soc { beta, wbar } => soc_apply(*beta, wbar, v, out, true),
            Scaling::Psd { rinv, .. } => {
                let q = rinv.nrows();
                let m = svec_to_mat(v, q);
                mat_to_svec(&(rinv.transpose() * m * rinv), out);
            }
        }
    }

    pub(crate) fn apply_winvt(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Psd { rinv, .. } => {
                let q = rinv.nrows();
                let m = svec_to_mat(v, q);
                mat_to_svec(&(rinv * m * rinv.transpose()), out);
            }
            _ => self.apply_winv(v, out),
        }
    }
}

fn soc_apply(beta: f64, wbar: &[f64], v: &[f64], out: &mut [f64], inverse: bool) {
    let w0 = wbar[0];
    let w1v1: f64 = wbar[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum();
    let (sign, scale) = if inverse {
        (-1.0, 1.0 / beta)
    } else {
        (1.0, beta)
    };
    out[0] = scale * (w0 * v[0] + sign * w1v1);
    let coef = sign * v[0] + w1v1 / (1.0 + w0);
    for i in 1..v.len() {
        out[i] = scale * (v[i] + coef * wbar[i]);
    }
}

fn soc_step(l: &[f64], d: &[f64]) -> f64 {
    let d1n2: f64 = d[1..].iter().map(|v| v * v).sum();
    let l1n2: f64 = l[1..].iter().map(|v| v * v).sum();
    let l1d1: f64 = l[1..].iter().zip(&d[1..]).map(|(a, b)| a * b).sum();
    if d[0] >= d1n2.sqrt() {
        return f64::INFINITY;
    }
    let a = d[0] * d[0] - d1n2;
    let b = 2.0 * (l[0] * d[0] - l1d1);
    let c = (l[0] * l[0] - l1n2).max(0.0);
    let mut best = f64::INFINITY;
    if a.abs() < 1e-300 {
        if b < 0.0 {
            best = -c / b;
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let qv = -0.5 * (b + b.signum() * sq);
            for root in [qv / a, if qv != 0.0 { c / qv } else { f64::NAN }] {
                if root.is_finite() && root >= 0.0 {
                    best = best.min(root);
                }
            }
        }
    }
    if d[0] < 0.0 {
        best = best.min(-l[0] / d[0]);
    }
    best
}

fn jnorm(v: &[f64]) -> Option<f64> {
    let t = v[0] * v[0] - v[1..].iter().map(|x| x * x).sum::<f64>();
    if v[0] > 0.0 && t > 0.0 {
        Some(t.sqrt())
    } else {
        None
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_scaling(set: &ConeSet, s: &[f64], z: &[f64]) {
        let (sc, lambda) = set.scalings(s, z).expect("interior");
        let mut wz = vec![0.0; set.dim];
        let mut wis = vec![0.0; set.dim];
        for (k, scal) in sc.iter().enumerate() {
            let r = set.range(k);
            scal.apply_w(&z[r.clone()], &mut wz[r.clone()]);
            scal.apply_winvt(&s[r.clone()], &mut wis[r.clone()]);
        }
        for i in 0..set.dim {
            assert!((wz[i] - lambda[i]).abs() < 1e-10, "W z != lambda at {i}");
            assert!(
                (wis[i] - lambda[i]).abs() < 1e-10,
                "W^-T s != lambda at {i}"
            );
        }
        // W^{-1} W = I and W^T consistent with <W u, v> = <u, W^T v>
        let u: Vec<f64> = (0..set.dim).map(|i| (i as f64 * 0.37).sin()).collect();
        let v: Vec<f64> = (0..set.dim).map(|i| (i as f64 * 0.91).cos()).collect();
        for (k, scal) in sc.iter().enumerate() {
            let r = set.range(k);
            let mut wu = vec![0.0; r.len()];
            let mut back = vec![0.0; r.len()];
            let mut wtv = vec![0.0; r.len()];
            scal.apply_w(&u[r.clone()], &mut wu);
            scal.apply_winv(&wu, &mut back);
            scal.apply_wt(&v[r.clone()], &mut wtv);
            for i in 0..r.len() {
                assert!((back[i] - u[r.start + i]).abs() < 1e-10);
            }
            assert!((dot(&wu, &v[r.clone()]) - dot(&u[r.clone()], &wtv)).abs() < 1e-10);
        }
    }

    #[test]
    fn nt_scaling_identities() {
        let set = ConeSet::new(vec![
            ConeKind::Nonneg(2),
            ConeKind::Soc(3),
            ConeKind::Psd(3),
        ]);
        let mut s = vec![1.5, 0.2, 2.0, 0.5, -0.7];
        let mut z = vec![0.3, 4.0, 1.2, -0.4, 0.1];
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.7]);
        let b = DMatrix::from_row_slice(3, 3, &[1.0, -0.1, 0.0, -0.1, 3.0, 0.4, 0.0, 0.4, 0.9]);
        let mut sa = vec![0.0; 6];
        let mut sb = vec![0.0; 6];
        mat_to_svec(&a, &mut sa);
        mat_to_svec(&b, &mut sb);
        s.extend(sa);
        z.extend(sb);
        check_scaling(&set, &s, &z);
    }

    #[test]
    fn jordan_div_inverts_product() {
        let set = ConeSet::new(vec![
            ConeKind::Nonneg(1),
            ConeKind::Soc(3),
            ConeKind::Psd(2),
        ]);
        let lambda = vec![2.0, 3.0, 1.0, -0.5, 1.5, 0.0, 0.5];
        let x = vec![0.3, -0.2, 0.8, 0.1, 0.4, -0.9, 1.1];
        let prod = set.jordan(&lambda, &x);
        let back = set.jordan_div(&lambda, &prod);
        for i in 0..x.len() {
            assert!((back[i] - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn soc_step_hits_boundary() {
        let set = ConeSet::new(vec![ConeKind::Soc(3)]);
        let l = vec![2.0, 0.5, 0.0];
        let d = vec![-1.0, 0.0, 1.0];
        let a = set.max_step(&l, &d);
        let p: Vec<f64> = l.iter().zip(&d).map(|(x, y)| x + a * y).collect();
        assert!((p[0] - norm(&p[1..])).abs() < 1e-12);
    }
}
