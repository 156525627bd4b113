//! Homogeneous self-dual interior-point method for mixed LP/SOCP/SDP.
//!
//! The program is lowered to the form
//!
//! ```text
//! minimize    c'x
//! subject to  A x = b
//!             G x + s = h,   s ∈ K
//! ```
//!
//! with dual `maximize -b'y - h'z  s.t.  A'y + G'z + c = 0, z ∈ K`, and solved
//! with a Mehrotra predictor-corrector on the self-dual embedding using
//! Nesterov-Todd scaling. Linear algebra is dense.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::blockqr::{BlockQr, Partition};
use crate::cones::{svec_to_mat, ConeKind, ConeSet, Scaling};
use crate::error::SolveError;
use crate::ir::{tri_pair, Cone, ConicProgram};

const SQRT2: f64 = std::f64::consts::SQRT_2;
/// Largest row count of a block eliminated on its own in the KKT solves.
const MAX_GROUP_ROWS: usize = 400;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative tolerance on primal/dual residuals and the duality gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Ruiz equilibration of the constraint matrix before solving.
    pub equilibrate: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            equilibrate: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// A dual ray certifies that no feasible point exists.
    Infeasible,
    /// A primal ray certifies that the objective is unbounded below.
    Unbounded,
    /// Iteration limit or step-size collapse before reaching tolerance.
    Stalled,
}

/// Primal and dual solution in the user's variables.
///
/// Dual values follow the Lagrangian
/// `c'x - Σ y_i e_i(x) - Σ <Z_j, g_j(x)> - Σ <W_b, x_b>`,
/// so constraint and block duals lie in the (self-dual) cones and PSD duals
/// are given as natural upper-triangle entries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub equality_duals: Vec<f64>,
    pub constraint_duals: Vec<Vec<f64>>,
    /// One entry per variable block; empty for free blocks.
    pub block_duals: Vec<Vec<f64>>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
}

/// Lowered problem data.
#[derive(Clone, Debug)]
struct Data {
    a: DMatrix<f64>,
    b: DVector<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    c: DVector<f64>,
    cones: ConeSet,
}

/// Where each block and constraint of the user program landed in the cone rows.
#[derive(Clone, Debug)]
struct Layout {
    block_rows: Vec<Option<(usize, Cone)>>,
    constraint_rows: Vec<(usize, Cone)>,
}

fn row_scale(cone: Cone, k: usize) -> f64 {
    match cone {
        Cone::Psd(_) => {
            let (i, j) = tri_pair(k);
            if i == j {
                1.0
            } else {
                SQRT2
            }
        }
        _ => 1.0,
    }
}

fn cone_kind(c: Cone) -> ConeKind {
    match c {
        Cone::Nonneg(d) => ConeKind::Nonneg(d),
        Cone::Soc(d) => ConeKind::Soc(d),
        Cone::Psd(q) => ConeKind::Psd(q),
        Cone::Free(_) => unreachable!("free cone has no rows"),
    }
}

fn lower(p: &ConicProgram) -> (Data, Layout) {
    let n = p.num_vars();
    let rows_needed: usize = p
        .blocks
        .iter()
        .filter(|b| !b.cone.is_free())
        .map(|b| b.len())
        .sum::<usize>()
        + p.constraints.iter().map(|c| c.cone.dim()).sum::<usize>();
    let mut g = DMatrix::zeros(rows_needed, n);
    let mut h = DVector::zeros(rows_needed);
    let mut kinds = Vec::new();
    let mut block_rows = Vec::new();
    let mut row = 0;
    for b in &p.blocks {
        if b.cone.is_free() {
            block_rows.push(None);
            continue;
        }
        block_rows.push(Some((row, b.cone)));
        kinds.push(cone_kind(b.cone));
        for k in 0..b.len() {
            g[(row + k, b.index(k))] = -row_scale(b.cone, k);
        }
        row += b.len();
    }
    let mut constraint_rows = Vec::new();
    for c in &p.constraints {
        constraint_rows.push((row, c.cone));
        kinds.push(cone_kind(c.cone));
        for (k, e) in c.rows.iter().enumerate() {
            let f = row_scale(c.cone, k);
            h[row + k] = f * e.constant;
            for &(i, v) in &e.terms {
                g[(row + k, i)] -= f * v;
            }
        }
        row += c.cone.dim();
    }
    let pe = p.equalities.len();
    let mut a = DMatrix::zeros(pe, n);
    let mut b = DVector::zeros(pe);
    for (r, e) in p.equalities.iter().enumerate() {
        b[r] = -e.constant;
        for &(i, v) in &e.terms {
            a[(r, i)] += v;
        }
    }
    let mut c = DVector::zeros(n);
    for &(i, v) in &p.objective.terms {
        c[i] += v;
    }
    (
        Data {
            a,
            b,
            g,
            h,
            c,
            cones: ConeSet::new(kinds),
        },
        Layout {
            block_rows,
            constraint_rows,
        },
    )
}

/// Diagonal scalings `A -> Ea A D`, `G -> Eg G D`.
struct Equilibration {
    d: DVector<f64>,
    ea: DVector<f64>,
    eg: DVector<f64>,
}

fn equilibrate(data: &mut Data, iterations: usize) -> Equilibration {
    let n = data.c.len();
    let p = data.b.len();
    let m = data.h.len();
    let mut d = DVector::from_element(n, 1.0);
    let mut ea = DVector::from_element(p, 1.0);
    let mut eg = DVector::from_element(m, 1.0);
    let clamp = |v: f64| {
        if v > 0.0 {
            (1.0 / v.sqrt()).clamp(1e-3, 1e3)
        } else {
            1.0
        }
    };
    for _ in 0..iterations {
        let mut dc = DVector::from_element(n, 0.0);
        for j in 0..n {
            let mut mx = 0.0f64;
            for i in 0..p {
                mx = mx.max(data.a[(i, j)].abs());
            }
            for i in 0..m {
                mx = mx.max(data.g[(i, j)].abs());
            }
            dc[j] = clamp(mx);
        }
        let mut ra = DVector::from_element(p, 0.0);
        for i in 0..p {
            let mx = data.a.row(i).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            ra[i] = clamp(mx);
        }
        let mut rg = DVector::from_element(m, 0.0);
        for (k, c) in data.cones.cones.iter().enumerate() {
            let r = data.cones.range(k);
            match c {
                ConeKind::Nonneg(_) => {
                    for i in r {
                        let mx = data.g.row(i).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                        rg[i] = clamp(mx);
                    }
                }
                _ => {
                    let mut mx = 0.0f64;
                    for i in r.clone() {
                        mx = data.g.row(i).iter().fold(mx, |acc, v| acc.max(v.abs()));
                    }
                    let s = clamp(mx);
                    for i in r {
                        rg[i] = s;
                    }
                }
            }
        }
        for j in 0..n {
            for i in 0..p {
                data.a[(i, j)] *= ra[i] * dc[j];
            }
            for i in 0..m {
                data.g[(i, j)] *= rg[i] * dc[j];
            }
        }
        d.component_mul_assign(&dc);
        ea.component_mul_assign(&ra);
        eg.component_mul_assign(&rg);
    }
    data.c.component_mul_assign(&d);
    data.b.component_mul_assign(&ea);
    data.h.component_mul_assign(&eg);
    Equilibration { d, ea, eg }
}

/// Nullspace description of the equality constraints `A x = b`, computed
/// once per solve from a pivoted QR of `A'`.
struct Elimination {
    /// Orthonormal basis of `null(A)`, `n x nz`; `None` when `A` is empty.
    z: Option<DMatrix<f64>>,
    /// Orthonormal basis of `range(A')`, `n x r`.
    q1: DMatrix<f64>,
    /// `A q1 = qm rm` with `qm` of size `p x r`.
    qm: DMatrix<f64>,
    rm: DMatrix<f64>,
}

impl Elimination {
    fn new(a: &DMatrix<f64>) -> Self {
        let (p, n) = a.shape();
        if p == 0 {
            return Self {
                z: None,
                q1: DMatrix::zeros(n, 0),
                qm: DMatrix::zeros(0, 0),
                rm: DMatrix::zeros(0, 0),
            };
        }
        let qr = a.transpose().col_piv_qr();
        let r = qr.r();
        let diag = r.nrows().min(r.ncols());
        let top = if diag > 0 { r[(0, 0)].abs() } else { 0.0 };
        let rank = (0..diag)
            .take_while(|&i| r[(i, i)].abs() > 1e-11 * top.max(1e-300))
            .count();
        let mut qt = DMatrix::identity(n, n);
        qr.q_tr_mul(&mut qt);
        let q = qt.transpose();
        let q1 = q.columns(0, rank).into_owned();
        let z = q.columns(rank, n - rank).into_owned();
        let m = a * &q1;
        let mqr = m.qr();
        Self {
            z: Some(z),
            q1,
            qm: mqr.q(),
            rm: mqr.r(),
        }
    }

    /// Least-squares solution of `A x = ry` within `range(A')`.
    fn particular(&self, ry: &DVector<f64>) -> DVector<f64> {
        if self.z.is_none() {
            return DVector::zeros(self.q1.nrows());
        }
        let w = self
            .rm
            .solve_upper_triangular(&self.qm.tr_mul(ry))
            .unwrap_or_else(|| DVector::zeros(self.rm.ncols()));
        &self.q1 * w
    }

    /// Minimum-norm `y` with `A' y = t` (least squares for inconsistent `t`).
    fn multipliers(&self, t: &DVector<f64>) -> DVector<f64> {
        if self.z.is_none() {
            return DVector::zeros(0);
        }
        let s = self.q1.tr_mul(t);
        let v = self
            .rm
            .tr_solve_upper_triangular(&s)
            .unwrap_or_else(|| DVector::zeros(self.rm.ncols()));
        &self.qm * v
    }
}

struct Kkt<'a> {
    data: &'a Data,
    elim: &'a Elimination,
    scalings: &'a [Scaling],
    /// `W^{-T} G`.
    ghat: DMatrix<f64>,
    /// QR of `[ghat Z; sqrt(δ) I]`.
    factor: BlockQr<'a>,
}

fn apply_per_cone(
    cones: &ConeSet,
    scalings: &[Scaling],
    v: &[f64],
    f: impl Fn(&Scaling, &[f64], &mut [f64]),
) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (k, sc) in scalings.iter().enumerate() {
        let r = cones.range(k);
        f(sc, &v[r.clone()], &mut out[r]);
    }
    out
}

impl<'a> Kkt<'a> {
    fn new(
        data: &'a Data,
        elim: &'a Elimination,
        part: &'a Partition,
        scalings: &'a [Scaling],
    ) -> Result<Self, SolveError> {
        let n = data.c.len();
        let m = data.h.len();
        let mut ghat = DMatrix::zeros(m, n);
        let mut buf = Vec::new();
        let mut out = Vec::new();
        for (k, sc) in scalings.iter().enumerate() {
            let r = data.cones.range(k);
            buf.resize(r.len(), 0.0);
            out.resize(r.len(), 0.0);
            for j in 0..n {
                let mut any = false;
                for (t, i) in r.clone().enumerate() {
                    buf[t] = data.g[(i, j)];
                    any |= buf[t] != 0.0;
                }
                if !any {
                    continue;
                }
                sc.apply_winvt(&buf, &mut out);
                for (t, i) in r.clone().enumerate() {
                    ghat[(i, j)] = out[t];
                }
            }
        }
        let b = match &elim.z {
            Some(z) => &ghat * z,
            None => ghat.clone(),
        };
        let scale = (0..b.ncols()).fold(1.0f64, |acc, j| acc.max(b.column(j).norm()));
        let factor = BlockQr::new(&b, part, 1e-12 * scale).ok_or_else(|| {
            SolveError::NumericalBreakdown("scaled constraint matrix is not finite".into())
        })?;
        Ok(Self {
            data,
            elim,
            scalings,
            ghat,
            factor,
        })
    }

    fn solve_once(
        &self,
        rx: &DVector<f64>,
        ry: &DVector<f64>,
        rz: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let cones = &self.data.cones;
        let rzt = DVector::from_vec(apply_per_cone(
            cones,
            self.scalings,
            rz.as_slice(),
            |s, v, o| s.apply_winvt(v, o),
        ));
        // dx = x0 + Z w with A x0 = ry and
        // (B'B + δI) w = Z' rx + B' (rzt - ghat x0), B = ghat Z.
        let x0 = self.elim.particular(ry);
        let v = &rzt - &self.ghat * &x0;
        let zrx = match &self.elim.z {
            Some(z) => z.tr_mul(rx),
            None => rx.clone(),
        };
        let w = self.factor.solve(&zrx, &v)?;
        let dx = match &self.elim.z {
            Some(z) => x0 + z * w,
            None => w,
        };
        let t = &self.ghat * &dx - rzt;
        let dy = self.elim.multipliers(&(rx - self.ghat.tr_mul(&t)));
        let dz = DVector::from_vec(apply_per_cone(
            cones,
            self.scalings,
            t.as_slice(),
            |s, v, o| s.apply_winv(v, o),
        ));
        Some((dx, dy, dz))
    }

    fn residual(
        &self,
        rx: &DVector<f64>,
        ry: &DVector<f64>,
        rz: &DVector<f64>,
        dx: &DVector<f64>,
        dy: &DVector<f64>,
        dz: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let d = self.data;
        let e1 = rx - d.a.tr_mul(dy) - d.g.tr_mul(dz);
        let e2 = ry - &d.a * dx;
        let wdz = apply_per_cone(&d.cones, self.scalings, dz.as_slice(), |s, v, o| {
            s.apply_w(v, o)
        });
        let vdz = apply_per_cone(&d.cones, self.scalings, &wdz, |s, v, o| s.apply_wt(v, o));
        let e3 = rz - &d.g * dx + DVector::from_vec(vdz);
        (e1, e2, e3)
    }

    /// Solve `[[0, A', G'], [A, 0, 0], [G, 0, -W'W]] (dx, dy, dz) = (rx, ry, rz)`
    /// with a few rounds of iterative refinement.
    fn solve(
        &self,
        rx: &DVector<f64>,
        ry: &DVector<f64>,
        rz: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let (mut dx, mut dy, mut dz) = self.solve_once(rx, ry, rz)?;
        let norm = |a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>| {
            a.amax().max(b.amax()).max(c.amax())
        };
        let (mut e1, mut e2, mut e3) = self.residual(rx, ry, rz, &dx, &dy, &dz);
        let mut err = norm(&e1, &e2, &e3);
        let scale = 1.0 + norm(rx, ry, rz);
        for _ in 0..5 {
            if err <= 1e-14 * scale {
                break;
            }
            let (cx, cy, cz) = self.solve_once(&e1, &e2, &e3)?;
            let nx = &dx + cx;
            let ny = &dy + cy;
            let nz = &dz + cz;
            let (f1, f2, f3) = self.residual(rx, ry, rz, &nx, &ny, &nz);
            let nerr = norm(&f1, &f2, &f3);
            if nerr >= err {
                break;
            }
            dx = nx;
            dy = ny;
            dz = nz;
            e1 = f1;
            e2 = f2;
            e3 = f3;
            err = nerr;
        }
        if !(dx
            .iter()
            .chain(dy.iter())
            .chain(dz.iter())
            .all(|v| v.is_finite()))
        {
            return None;
        }
        Some((dx, dy, dz))
    }
}

fn identity_scalings(cones: &ConeSet) -> Vec<Scaling> {
    cones
        .cones
        .iter()
        .map(|c| match *c {
            ConeKind::Nonneg(d) => Scaling::Nonneg { w: vec![1.0; d] },
            ConeKind::Soc(d) => {
                let mut wbar = vec![0.0; d];
                wbar[0] = 1.0;
                Scaling::Soc { beta: 1.0, wbar }
            }
            ConeKind::Psd(q) => Scaling::Psd {
                r: DMatrix::identity(q, q),
                rinv: DMatrix::identity(q, q),
            },
        })
        .collect()
}

struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
    tau: f64,
    kappa: f64,
}

/// Unscaled point and its quality measures.
struct Report {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    pres: f64,
    dres: f64,
    gap: f64,
    pcost: f64,
    dcost: f64,
}

fn report(orig: &Data, eq: &Equilibration, it: &Iterate) -> Report {
    let x = it.x.component_mul(&eq.d) / it.tau;
    let y = it.y.component_mul(&eq.ea) / it.tau;
    let z = it.z.component_mul(&eq.eg) / it.tau;
    let s = it.s.component_div(&eq.eg) / it.tau;
    let r_eq = &orig.a * &x - &orig.b;
    let r_cone = &orig.g * &x + &s - &orig.h;
    let pres = (r_eq.amax() / (1.0 + orig.b.amax())).max(r_cone.amax() / (1.0 + orig.h.amax()));
    let r_dual = orig.a.tr_mul(&y) + orig.g.tr_mul(&z) + &orig.c;
    let dres = r_dual.amax() / (1.0 + orig.c.amax());
    let pcost = orig.c.dot(&x);
    let dcost = -orig.b.dot(&y) - orig.h.dot(&z);
    let comp = s.dot(&z).abs();
    let gap = comp.max((pcost - dcost).abs()) / (1.0 + pcost.abs().min(dcost.abs()));
    Report {
        x,
        y,
        z,
        pres,
        dres,
        gap,
        pcost,
        dcost,
    }
}

/// Solve a conic program.
pub fn solve(program: &ConicProgram, opts: &SolverOptions) -> Result<ConicSolution, SolveError> {
    program.validate()?;
    let (orig, layout) = lower(program);
    let mut data = orig.clone();
    let eq = if opts.equilibrate {
        equilibrate(&mut data, 15)
    } else {
        Equilibration {
            d: DVector::from_element(data.c.len(), 1.0),
            ea: DVector::from_element(data.b.len(), 1.0),
            eg: DVector::from_element(data.h.len(), 1.0),
        }
    };
    // The stopping test works on the lowered data. When the residuals of the
    // user program miss the tolerance, tighten the internal one and rerun.
    let mut inner = opts.clone();
    let mut total = 0;
    let mut first = None;
    for _ in 0..3 {
        let (status, rep, iters) = run(&orig, &data, &eq, &inner)?;
        total += iters;
        let mut sol = assemble(program, &layout, status, rep, total);
        if status != SolveStatus::Optimal {
            return Ok(first.unwrap_or(sol));
        }
        if kkt_residuals(program, &sol).max() <= opts.tol {
            return Ok(sol);
        }
        sol.status = SolveStatus::Stalled;
        first.get_or_insert(sol);
        inner.tol /= 10.0;
    }
    Ok(first.expect("at least one pass"))
}

fn run(
    orig: &Data,
    data: &Data,
    eq: &Equilibration,
    opts: &SolverOptions,
) -> Result<(SolveStatus, Report, usize), SolveError> {
    let n = data.c.len();
    let m = data.h.len();
    let cones = &data.cones;
    let nu = cones.degree() as f64;
    let e = DVector::from_vec(cones.identity());

    let elim = Elimination::new(&data.a);
    let part = if elim.z.is_none() {
        Partition::detect(&data.g, cones, MAX_GROUP_ROWS)
    } else {
        Partition::dense(m, n - elim.q1.ncols())
    };
    let mut it = initial_point(data, &elim, &part)?;

    let mut best: Option<(f64, Report)> = None;
    let mut stalled_steps = 0;
    for iter in 0..=opts.max_iter {
        let rep = report(orig, eq, &it);
        if rep.pres <= opts.tol && rep.dres <= opts.tol && rep.gap <= opts.tol {
            return Ok((SolveStatus::Optimal, rep, iter));
        }
        // Infeasibility certificates in unscaled terms, independent of tau.
        let xr = it.x.component_mul(&eq.d);
        let yr = it.y.component_mul(&eq.ea);
        let zr = it.z.component_mul(&eq.eg);
        let sr = it.s.component_div(&eq.eg);
        let bty_htz = orig.b.dot(&yr) + orig.h.dot(&zr);
        if bty_htz < 0.0 {
            let ray = orig.a.tr_mul(&yr) + orig.g.tr_mul(&zr);
            if ray.amax() / -bty_htz <= opts.tol {
                let scale = -bty_htz;
                let rep = Report {
                    x: xr.clone() * f64::NAN,
                    y: yr / scale,
                    z: zr / scale,
                    pres: f64::NAN,
                    dres: ray.amax() / scale,
                    gap: f64::NAN,
                    pcost: f64::INFINITY,
                    dcost: f64::INFINITY,
                };
                return Ok((SolveStatus::Infeasible, rep, iter));
            }
        }
        let ctx = orig.c.dot(&xr);
        if ctx < 0.0 {
            let r1 = &orig.a * &xr;
            let r2 = &orig.g * &xr + &sr;
            if r1.amax().max(r2.amax()) / -ctx <= opts.tol {
                let rep = Report {
                    x: xr / -ctx,
                    y: yr * f64::NAN,
                    z: zr * f64::NAN,
                    pres: r1.amax().max(r2.amax()) / -ctx,
                    dres: f64::NAN,
                    gap: f64::NAN,
                    pcost: f64::NEG_INFINITY,
                    dcost: f64::NEG_INFINITY,
                };
                return Ok((SolveStatus::Unbounded, rep, iter));
            }
        }
        let merit = rep.pres.max(rep.dres).max(rep.gap);
        if merit.is_finite() && best.as_ref().is_none_or(|(b, _)| merit < *b) {
            best = Some((merit, rep));
        }
        if iter == opts.max_iter || stalled_steps >= 5 {
            break;
        }

        let Some((scal, lambda)) = cones.scalings(it.s.as_slice(), it.z.as_slice()) else {
            break;
        };
        let Ok(kkt) = Kkt::new(data, &elim, &part, &scal) else {
            break;
        };
        let r1 = data.a.tr_mul(&it.y) + data.g.tr_mul(&it.z) + &data.c * it.tau;
        let r2 = &data.a * &it.x - &data.b * it.tau;
        let r3 = &data.g * &it.x + &it.s - &data.h * it.tau;
        let r4 = it.kappa + data.c.dot(&it.x) + data.b.dot(&it.y) + data.h.dot(&it.z);
        let mu = (it.s.dot(&it.z) + it.tau * it.kappa) / (nu + 1.0);

        let Some(u2) = kkt.solve(&(-&data.c), &data.b, &data.h) else {
            break;
        };
        let cbh = |u: &(DVector<f64>, DVector<f64>, DVector<f64>)| {
            data.c.dot(&u.0) + data.b.dot(&u.1) + data.h.dot(&u.2)
        };
        let denom = -it.kappa / it.tau + cbh(&u2);

        let direction = |sigma: f64, xi: &[f64], xi_k: f64| -> Option<Direction> {
            let xihat = cones.jordan_div(&lambda, xi);
            let wt_xihat = apply_per_cone(cones, &scal, &xihat, |s, v, o| s.apply_wt(v, o));
            let f = 1.0 - sigma;
            let rx = -&r1 * f;
            let ry = -&r2 * f;
            let rz = -&r3 * f - DVector::from_vec(wt_xihat);
            let u1 = kkt.solve(&rx, &ry, &rz)?;
            let dtau = (-f * r4 - xi_k / it.tau - cbh(&u1)) / denom;
            let dx = u1.0 + &u2.0 * dtau;
            let dy = u1.1 + &u2.1 * dtau;
            let dz = u1.2 + &u2.2 * dtau;
            let wdz = apply_per_cone(cones, &scal, dz.as_slice(), |s, v, o| s.apply_w(v, o));
            let ds_scaled: Vec<f64> = xihat.iter().zip(&wdz).map(|(a, b)| a - b).collect();
            let ds = DVector::from_vec(apply_per_cone(cones, &scal, &ds_scaled, |s, v, o| {
                s.apply_wt(v, o)
            }));
            let dkappa = (xi_k - it.kappa * dtau) / it.tau;
            let mut alpha = cones
                .max_step(&lambda, &ds_scaled)
                .min(cones.max_step(&lambda, &wdz));
            if dtau < 0.0 {
                alpha = alpha.min(-it.tau / dtau);
            }
            if dkappa < 0.0 {
                alpha = alpha.min(-it.kappa / dkappa);
            }
            Some(Direction {
                dx,
                dy,
                dz,
                ds,
                dtau,
                dkappa,
                ds_scaled,
                dz_scaled: wdz,
                alpha,
            })
        };

        let lam_sq = cones.jordan(&lambda, &lambda);
        let xi_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
        let Some(aff) = direction(0.0, &xi_aff, -it.tau * it.kappa) else {
            break;
        };
        let alpha_aff = aff.alpha.min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);
        let cross = cones.jordan(&aff.ds_scaled, &aff.dz_scaled);
        let xi: Vec<f64> = (0..m)
            .map(|i| -lam_sq[i] - cross[i] + sigma * mu * e[i])
            .collect();
        let xi_k = -it.tau * it.kappa - aff.dtau * aff.dkappa + sigma * mu;
        let Some(dir) = direction(sigma, &xi, xi_k) else {
            break;
        };
        let alpha = (0.99 * dir.alpha).min(1.0);
        if !(alpha > 1e-10) {
            stalled_steps += 1;
            if alpha.is_nan() {
                break;
            }
            continue;
        }
        if alpha < 1e-6 {
            stalled_steps += 1;
        } else {
            stalled_steps = 0;
        }
        it.x += &dir.dx * alpha;
        it.y += &dir.dy * alpha;
        it.z += &dir.dz * alpha;
        it.s += &dir.ds * alpha;
        it.tau += alpha * dir.dtau;
        it.kappa += alpha * dir.dkappa;
        // Normalize the embedding to keep magnitudes moderate.
        let scale = it.tau.max(it.kappa).max(1e-300);
        if !(1e-6..=1e6).contains(&scale) {
            let f = 1.0 / scale;
            it.x *= f;
            it.y *= f;
            it.z *= f;
            it.s *= f;
            it.tau *= f;
            it.kappa *= f;
        }
    }
    match best {
        Some((_, rep)) => Ok((SolveStatus::Stalled, rep, opts.max_iter)),
        None => Err(SolveError::NumericalBreakdown(
            "no finite iterate produced".into(),
        )),
    }
}

/// Starting point from two least-squares style solves, shifted into the
/// cone interiors.
fn initial_point(data: &Data, elim: &Elimination, part: &Partition) -> Result<Iterate, SolveError> {
    let n = data.c.len();
    let p = data.b.len();
    let m = data.h.len();
    let cones = &data.cones;
    let e = DVector::from_vec(cones.identity());
    let id = identity_scalings(cones);
    let kkt = Kkt::new(data, elim, part, &id)?;
    let (x0, _, z0) = kkt
        .solve(&DVector::zeros(n), &data.b, &data.h)
        .ok_or_else(|| SolveError::NumericalBreakdown("initial primal solve".into()))?;
    let s_hat = -z0;
    let (_, y0, z_hat) = kkt
        .solve(&(-&data.c), &DVector::zeros(p), &DVector::zeros(m))
        .ok_or_else(|| SolveError::NumericalBreakdown("initial dual solve".into()))?;
    let shift_into = |v: DVector<f64>| -> DVector<f64> {
        if m == 0 {
            return v;
        }
        let a = cones.interior_shift(v.as_slice());
        if a < -1e-8 {
            v
        } else {
            v + &e * (1.0 + a.max(0.0))
        }
    };
    Ok(Iterate {
        x: x0,
        y: y0,
        z: shift_into(z_hat),
        s: shift_into(s_hat),
        tau: 1.0,
        kappa: 1.0,
    })
}

struct Direction {
    dx: DVector<f64>,
    dy: DVector<f64>,
    dz: DVector<f64>,
    ds: DVector<f64>,
    dtau: f64,
    dkappa: f64,
    ds_scaled: Vec<f64>,
    dz_scaled: Vec<f64>,
    alpha: f64,
}

fn natural_duals(z: &DVector<f64>, row: usize, cone: Cone) -> Vec<f64> {
    (0..cone.dim())
        .map(|k| z[row + k] / row_scale(cone, k))
        .collect()
}

fn assemble(
    program: &ConicProgram,
    layout: &Layout,
    status: SolveStatus,
    rep: Report,
    iterations: usize,
) -> ConicSolution {
    let c0 = program.objective.constant;
    let block_duals = layout
        .block_rows
        .iter()
        .map(|b| match b {
            Some((row, cone)) => natural_duals(&rep.z, *row, *cone),
            None => Vec::new(),
        })
        .collect();
    let constraint_duals = layout
        .constraint_rows
        .iter()
        .map(|(row, cone)| natural_duals(&rep.z, *row, *cone))
        .collect();
    ConicSolution {
        status,
        x: rep.x.iter().cloned().collect(),
        objective: rep.pcost + c0,
        dual_objective: rep.dcost + c0,
        equality_duals: rep.y.iter().map(|v| -v).collect(),
        constraint_duals,
        block_duals,
        primal_residual: rep.pres,
        dual_residual: rep.dres,
        gap: rep.gap,
        iterations,
    }
}

/// Optimality residuals of a solution, recomputed from the user program.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KktResiduals {
    /// Equality violation and cone infeasibility of the primal point.
    pub primal: f64,
    /// Stationarity violation and dual cone infeasibility.
    pub dual: f64,
    /// `|primal objective - dual objective| / (1 + |primal objective|)`.
    pub gap: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

fn cone_violation(cone: Cone, natural: &[f64]) -> f64 {
    match cone {
        Cone::Free(_) => 0.0,
        Cone::Nonneg(_) => natural.iter().fold(0.0f64, |acc, &v| acc.max(-v)),
        Cone::Soc(_) => {
            let t = natural[0];
            let r = natural[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            (r - t).max(0.0)
        }
        Cone::Psd(q) => {
            let mut sv = vec![0.0; natural.len()];
            for (k, v) in natural.iter().enumerate() {
                sv[k] = v * row_scale(cone, k);
            }
            let mat = svec_to_mat(&sv, q);
            let min = nalgebra::SymmetricEigen::new(mat).eigenvalues.min();
            (-min).max(0.0)
        }
    }
}

/// Recompute KKT residuals from the program data, using natural-entry duals.
pub fn kkt_residuals(program: &ConicProgram, sol: &ConicSolution) -> KktResiduals {
    let x = &sol.x;
    let mut scale_p = 1.0f64;
    let mut primal = 0.0f64;
    for e in &program.equalities {
        scale_p = scale_p.max(e.constant.abs());
        primal = primal.max(e.eval(x).abs());
    }
    for c in &program.constraints {
        let vals: Vec<f64> = c.rows.iter().map(|r| r.eval(x)).collect();
        for r in &c.rows {
            scale_p = scale_p.max(r.constant.abs());
        }
        primal = primal.max(cone_violation(c.cone, &vals));
    }
    for b in &program.blocks {
        let vals: Vec<f64> = b.indices().map(|i| x[i]).collect();
        primal = primal.max(cone_violation(b.cone, &vals));
    }
    let primal = primal / scale_p;

    // Stationarity: c - Σ y a - Σ <Z, grad g> - W = 0.
    let n = program.num_vars();
    let mut grad = vec![0.0; n];
    let mut scale_d = 1.0f64;
    for &(i, v) in &program.objective.terms {
        grad[i] += v;
        scale_d = scale_d.max(v.abs());
    }
    let mut dual_cone = 0.0f64;
    for (e, &y) in program.equalities.iter().zip(&sol.equality_duals) {
        for &(i, v) in &e.terms {
            grad[i] -= y * v;
        }
    }
    for (c, z) in program.constraints.iter().zip(&sol.constraint_duals) {
        dual_cone = dual_cone.max(cone_violation(c.cone, z));
        for (k, r) in c.rows.iter().enumerate() {
            let w = row_scale(c.cone, k).powi(2) * z[k];
            for &(i, v) in &r.terms {
                grad[i] -= w * v;
            }
        }
    }
    for (b, z) in program.blocks.iter().zip(&sol.block_duals) {
        if b.cone.is_free() {
            continue;
        }
        dual_cone = dual_cone.max(cone_violation(b.cone, z));
        for k in 0..b.len() {
            grad[b.index(k)] -= row_scale(b.cone, k).powi(2) * z[k];
        }
    }
    let stat = grad.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let dual = (stat / scale_d).max(dual_cone);
    let gap = (sol.objective - sol.dual_objective).abs() / (1.0 + sol.objective.abs());
    KktResiduals { primal, dual, gap }
}

/// Inner product of natural-entry vectors in a cone (PSD off-diagonals count twice).
pub fn cone_inner(cone: Cone, a: &[f64], b: &[f64]) -> f64 {
    (0..cone.dim())
        .map(|k| row_scale(cone, k).powi(2) * a[k] * b[k])
        .sum()
}
