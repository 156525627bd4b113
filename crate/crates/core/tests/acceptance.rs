//! Acceptance report. Run with
//! `cargo test -p polypareto --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.
//!
//! Every line must pass except the KKT part of the conic line, which is
//! expected to fail on exactly the solves in `KNOWN_STALLED`. Those programs
//! have no attained dual optimum and the solver stops at a residual floor
//! between 1e-8 and 1e-6. The test fails if that set changes in either
//! direction.

mod common;

use std::result::Result;
use std::time::{Duration, Instant};

use common::*;
use nalgebra::{DMatrix, DVector};
use polypareto::robust::build_objective;
use polypareto::robust::diagnostics::{soundness, tangency};
use polypareto::*;
use polypareto_conic::{
    dualize, export_sdpa, import_sdpa, kkt_residuals, solve, AffineExpr, Cone, ConicProgram,
    ConicSolution, SolveStatus, SolverOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KKT_TOL: f64 = 1e-8;
const KNOWN_STALLED: &[&str] = &["R d2", "R d3", "k3 exact d2", "k3 sos d2", "k3 sos d4"];

type Outcome = Result<String, String>;

struct Line {
    name: &'static str,
    limit: Duration,
    elapsed: Duration,
    outcome: Outcome,
}

impl Line {
    fn passed(&self) -> bool {
        self.outcome.is_ok() && self.elapsed <= self.limit
    }

    fn print(&self) {
        let (tag, detail) = match (&self.outcome, self.elapsed <= self.limit) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over the time limit")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        println!(
            "{tag} {:<24} {:>8.3}s / {:>4}s  {detail}",
            self.name,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs()
        );
    }
}

fn run(name: &'static str, limit_s: u64, f: impl FnOnce() -> Outcome) -> Line {
    let start = Instant::now();
    let outcome = f();
    Line {
        name,
        limit: Duration::from_secs(limit_s),
        elapsed: start.elapsed(),
        outcome,
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden() -> Outcome {
    let t = moment_interval_transform(0.0, 25.0, 3).map_err(|e| e.to_string())?;
    let d_mat = [
        [12.5, 0.0, 0.0],
        [312.5, 156.25, 0.0],
        [5859.375, 5859.375, 1953.125],
    ];
    let d = [12.5, 156.25, 1953.125];
    let mut worst = 0.0f64;
    for i in 0..3 {
        worst = worst.max((t.d[i] - d[i]).abs());
        for j in 0..3 {
            worst = worst.max((t.d_mat[i][j] - d_mat[i][j]).abs());
        }
    }
    check(worst <= 1e-12, || format!("transform off by {worst:e}"))?;

    let molp = Molp::new(vec![vec![1.0]], vec![1.0], vec![vec![1.0], vec![1.0]]);
    let w = build_objective(
        &molp,
        &Region::Interval { a: 0.0, b: 25.0 },
        &MonomialBasis::new(1, 3),
        ObjectiveMode::ClosedForm,
    )
    .map_err(|e| e.to_string())?;
    let want = [25.0, 312.5, 25f64.powi(3) / 3.0, 25f64.powi(4) / 4.0];
    for (a, b) in w[0].iter().zip(want) {
        check((a - b).abs() <= 1e-9 * b, || {
            format!("objective weights {:?}", w[0])
        })?;
    }

    let z = MomentSetZ::new(3).map_err(|e| e.to_string())?;
    let map = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 2.0, 0.0, 0.0],
        [3.0, 0.0, 4.0, 0.0],
        [0.0, 4.0, 0.0, 8.0],
        [3.0, 0.0, 4.0, 0.0],
        [0.0, 2.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ];
    check(
        z.map.len() == 7 && z.map.iter().zip(map).all(|(r, w)| r.as_slice() == w),
        || format!("moment map {:?}", z.map),
    )?;
    let (_, rhs) = z.dual_matrices();
    check(rhs == [1.0, 0.0, 0.0, 0.0], || format!("dual rhs {rhs:?}"))?;
    Ok(format!(
        "transform error {worst:.1e}, 7x4 map, rhs (1,0,0,0)"
    ))
}

fn linear_exactness() -> Outcome {
    let molp = instance_r();
    let s = solve_inner(
        &molp,
        &unit_interval_r(),
        1,
        ShapeMode::None,
        ObjectiveMode::ClosedForm,
    );
    let obj = s.solution.objective;
    check((obj + 0.375).abs() <= 1e-6, || format!("objective {obj}"))?;
    let mut worst = 0.0f64;
    for (u, f2) in [(-1.0, 0.0), (0.0, -0.75)] {
        let f = s.rule.rule.objective_curve(&molp, &[u]).unwrap().f;
        worst = worst.max((f[1] - f2).abs());
    }
    check(worst <= 1e-6, || format!("endpoint error {worst:e}"))?;
    Ok(format!("objective {obj:.9}, endpoint error {worst:.1e}"))
}

struct Case {
    label: String,
    molp: Molp,
    region: Region,
    built: BuiltProgram,
    solution: ConicSolution,
    elapsed: Duration,
}

fn solve_case(label: String, molp: &Molp, region: &Region, built: BuiltProgram) -> Case {
    let start = Instant::now();
    let solution = solve(&built.program, &SolverOptions::default()).unwrap();
    Case {
        label,
        molp: molp.clone(),
        region: region.clone(),
        built,
        solution,
        elapsed: start.elapsed(),
    }
}

/// Every inner job of the test matrix.
fn test_matrix() -> Vec<Case> {
    let mut cases = Vec::new();
    let r = instance_r();
    let (rand_molp, rand_region) = random_20x30(3);
    for (name, molp, region) in [
        ("R", &r, &unit_interval_r()),
        ("random", &rand_molp, &rand_region),
    ] {
        for d in 1..=6 {
            let p = plan(molp, region, d, ShapeMode::None, ObjectiveMode::ClosedForm).unwrap();
            let built = build_inner(molp, region, &p).unwrap();
            cases.push(solve_case(format!("{name} d{d}"), molp, region, built));
        }
    }
    let (k3, ball) = k3_instance();
    let obj = sampled(200, 3);
    let exact = build_inner_quad_ellipsoid(&k3, &ball, obj).unwrap();
    cases.push(solve_case("k3 exact d2".into(), &k3, &ball, exact));
    for d in [2, 4] {
        let built = build_inner_sos(&k3, &ball, d, obj).unwrap();
        cases.push(solve_case(format!("k3 sos d{d}"), &k3, &ball, built));
    }
    cases
}

fn soundness_suite(cases: &[Case]) -> Outcome {
    let mut worst = [f64::NEG_INFINITY; 3];
    for c in cases {
        check(usable(&c.solution), || {
            format!("{}: {:?}", c.label, c.solution.status)
        })?;
        let rule = recover_rule(&c.built, &c.solution)
            .map_err(|e| format!("{}: {e}", c.label))?
            .rule;
        let pts = c.region.sample(1000, 17).unwrap();
        let rep = soundness(&c.molp, &rule, &pts, true).map_err(|e| e.to_string())?;
        let dom = rep.max_dominance_violation.unwrap_or(f64::INFINITY);
        check(rep.passed, || format!("{}: {rep:?}", c.label))?;
        worst[0] = worst[0].max(rep.max_row_violation);
        worst[1] = worst[1].max(rep.max_objective_violation);
        worst[2] = worst[2].max(dom);
    }
    Ok(format!(
        "{} jobs x 1000 samples; max row {:.1e}, objective {:.1e}, oracle {:.1e}",
        cases.len(),
        worst[0],
        worst[1],
        worst[2]
    ))
}

fn monotonicity(cases: &[Case]) -> Outcome {
    let v: Vec<f64> = (1..=4)
        .map(|d| {
            cases
                .iter()
                .find(|c| c.label == format!("R d{d}"))
                .unwrap()
                .solution
                .objective
        })
        .collect();
    for w in v.windows(2) {
        check(w[1] <= w[0] + 1e-7, || format!("objectives {v:?}"))?;
    }
    check(v[0] - v[1] >= 1e-4, || format!("objectives {v:?}"))?;
    Ok(format!(
        "objectives {:.6} {:.6} {:.6} {:.6}",
        v[0], v[1], v[2], v[3]
    ))
}

fn k3_agreement(cases: &[Case]) -> Outcome {
    let get = |l: &str| {
        cases
            .iter()
            .find(|c| c.label == l)
            .unwrap()
            .solution
            .objective
    };
    let (e, s2, s4) = (get("k3 exact d2"), get("k3 sos d2"), get("k3 sos d4"));
    check((e - s2).abs() <= 1e-4, || format!("exact {e}, sos2 {s2}"))?;
    check(s4 <= s2 + 1e-6, || format!("sos4 {s4} above sos2 {s2}"))?;
    Ok(format!("exact {e:.6}, sos2 {s2:.6}, sos4 {s4:.6}"))
}

fn outer_tangency() -> Outcome {
    let molp = instance_r();
    let region = unit_interval_r();
    let built = build_outer_linear(&molp, &region).map_err(|e| e.to_string())?;
    let sol = solve(&built.program, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let outer = built.recover(&sol).map_err(|e| e.to_string())?;
    let t = tangency(&molp, &outer, &region, 101).map_err(|e| e.to_string())?;
    check((t.u[0] + 0.5).abs() <= 1e-3, || {
        format!("tangent at {:?}", t.u)
    })?;
    let grid = region.grid(100).unwrap();
    let front = pareto_front_oracle(&molp, &grid).map_err(|e| e.to_string())?;
    let mut worst = f64::NEG_INFINITY;
    for p in &front {
        worst = worst.max(outer.eval(&p.u) - p.fk.unwrap());
    }
    check(worst <= 1e-6, || format!("l above the front by {worst:e}"))?;
    Ok(format!(
        "tangent at {:.6}, max l - front {worst:.1e}",
        t.u[0]
    ))
}

/// Least-squares cubic through the front plus a shift, by SVD.
fn cubic_fit_of_front(shift: f64) -> Polynomial {
    let us: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 200.0).collect();
    let a = DMatrix::from_fn(us.len(), 4, |i, j| us[i].powi(j as i32));
    let y = DVector::from_iterator(us.len(), us.iter().map(|&u| front_r(u) + shift));
    let c = a.svd(true, true).solve(&y, 1e-14).unwrap();
    Polynomial::univariate(c.as_slice())
}

fn certificates() -> Outcome {
    let molp = instance_r();
    let verdict = |region: &Region, t: &Polynomial, d: usize| -> Result<bool, String> {
        let built = build_certificate_dominated(&molp, region, t, d).map_err(|e| e.to_string())?;
        let sol = solve(&built.program, &SolverOptions::default()).map_err(|e| e.to_string())?;
        let v = certificate_verdict(&built, &sol).map_err(|e| e.to_string())?;
        Ok(matches!(v, CertificateVerdict::Certified { .. }))
    };
    let left = Region::Interval { a: -1.0, b: -0.9 };
    check(verdict(&left, &Polynomial::constant(1, 0.0), 1)?, || {
        "t = 0 on [-1,-0.9] not certified".into()
    })?;
    for d in 1..=3 {
        check(
            !verdict(&unit_interval_r(), &Polynomial::constant(1, -1.0), d)?,
            || format!("t = -1 certified at degree {d}"),
        )?;
    }
    check(
        verdict(&unit_interval_r(), &cubic_fit_of_front(0.1), 3)?,
        || "fitted cubic + 0.1 not certified".into(),
    )?;
    Ok("t=0 certified, t=-1 none at d1-3, fit+0.1 certified at d3".into())
}

fn shapes() -> Outcome {
    let molp = instance_r();
    let s = solve_inner(
        &molp,
        &unit_interval_r(),
        3,
        ShapeMode::Both,
        ObjectiveMode::ClosedForm,
    );
    let g: Vec<f64> = (0..100)
        .map(|i| {
            let u = -1.0 + i as f64 / 99.0;
            s.rule.rule.objective_curve(&molp, &[u]).unwrap().f[1]
        })
        .collect();
    let rise = g.windows(2).map(|w| w[1] - w[0]).fold(f64::MIN, f64::max);
    let bend = g
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::MAX, f64::min);
    check(rise <= 1e-7, || format!("first difference {rise:e}"))?;
    check(bend >= -1e-7, || format!("second difference {bend:e}"))?;

    let (k3, ball) = k3_instance();
    let p = plan(&k3, &ball, 2, ShapeMode::Convex, sampled(200, 3)).map_err(|e| e.to_string())?;
    let built = build_inner(&k3, &ball, &p).map_err(|e| e.to_string())?;
    let sol = solve(&built.program, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let view = recover_rule(&built, &sol)
        .map_err(|e| e.to_string())?
        .rule
        .quadratic_view()
        .map_err(|e| e.to_string())?;
    let min_eig = view
        .gamma
        .iter()
        .map(|g| {
            DMatrix::from_fn(2, 2, |i, j| g[i][j])
                .symmetric_eigenvalues()
                .min()
        })
        .fold(f64::MAX, f64::min);
    check(min_eig >= -1e-8, || {
        format!("Gamma min eigenvalue {min_eig:e}")
    })?;
    Ok(format!(
        "max rise {rise:.1e}, min bend {bend:.1e}, Gamma min eig {min_eig:.1e}"
    ))
}

fn random_lmi(rng: &mut ChaCha8Rng) -> ConicProgram {
    let mut p = ConicProgram::new();
    let m = rng.random_range(1..6);
    let x = p.add_free("x", m);
    let mut obj = AffineExpr::constant(rng.random_range(-3.0..3.0));
    for &v in &x {
        obj.add_term(v, rng.random_range(-2.0..2.0));
    }
    p.set_objective(obj);
    for b in 0..rng.random_range(1..4) {
        let size = rng.random_range(1..5);
        let cone = if rng.random_bool(0.6) {
            Cone::Psd(size)
        } else {
            Cone::Nonneg(size)
        };
        let rows = (0..cone.dim())
            .map(|_| {
                let mut e = AffineExpr::constant(rng.random_range(-1.0..1.0));
                for &v in &x {
                    if rng.random_bool(0.5) {
                        e.add_term(v, rng.random_range(-1.0..1.0));
                    }
                }
                e
            })
            .collect();
        p.add_constraint(format!("c{b}"), cone, rows);
    }
    p
}

fn conic(cases: &[Case]) -> (Outcome, Vec<(String, f64, SolveStatus)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..50 {
        let p = random_lmi(&mut rng);
        let text = match export_sdpa(&p) {
            Ok(t) => t,
            Err(e) => return (Err(format!("export {i}: {e}")), vec![]),
        };
        let same = import_sdpa(&text)
            .map(|q| p.same_data(&q, 1e-15) && export_sdpa(&q).ok().as_ref() == Some(&text))
            .unwrap_or(false);
        if !same {
            return (Err(format!("round trip {i} changed the program")), vec![]);
        }
    }

    // Weak duality on each program of the matrix and its dual, where both
    // solve to optimality, plus on the dual pairs of the Hankel subproblem.
    let opts = SolverOptions::default();
    let z = MomentSetZ::new(3).unwrap();
    let mut pairs = 0;
    for c in [[1.0, -2.0, 0.5], [0.3, 0.0, 1.0], [-1.0, 1.0, 1.0]] {
        let p = z.dual_subproblem(&c);
        let d = dualize(&p);
        let (sp, sd) = (solve(&p, &opts).unwrap(), solve(&d, &opts).unwrap());
        if sp.status != SolveStatus::Optimal || sd.status != SolveStatus::Optimal {
            return (Err(format!("dual pair {c:?} not solved")), vec![]);
        }
        if -sd.objective > sp.objective + 1e-7 {
            return (
                Err(format!(
                    "weak duality: {} > {}",
                    -sd.objective, sp.objective
                )),
                vec![],
            );
        }
        pairs += 1;
    }

    let mut failing = Vec::new();
    let mut worst_ok = 0.0f64;
    for c in cases {
        let r = kkt_residuals(&c.built.program, &c.solution).max();
        if r <= KKT_TOL {
            worst_ok = worst_ok.max(r);
        } else {
            failing.push((c.label.clone(), r, c.solution.status));
        }
    }
    let detail = format!(
        "50 round trips, {pairs} dual pairs; KKT <= {KKT_TOL:.0e} on {}/{} (max {worst_ok:.1e})",
        cases.len() - failing.len(),
        cases.len()
    );
    if failing.is_empty() {
        return (Ok(detail), failing);
    }
    let listed: Vec<String> = failing
        .iter()
        .map(|(l, r, st)| format!("{l} ({r:.1e}, {st:?})"))
        .collect();
    (
        Err(format!("{detail}; above: {}", listed.join(", "))),
        failing,
    )
}

#[test]
fn acceptance() {
    let mut lines = vec![
        run("golden values", 1, golden),
        run("linear exactness", 1, linear_exactness),
    ];
    let cases = test_matrix();
    // Lines that read solves from the shared matrix are charged their time.
    let solve_time = |labels: &[&str]| -> Duration {
        cases
            .iter()
            .filter(|c| labels.is_empty() || labels.contains(&c.label.as_str()))
            .map(|c| c.elapsed)
            .sum()
    };
    let mut suite = run("soundness suite", 120, || soundness_suite(&cases));
    suite.elapsed += solve_time(&[]);
    lines.push(suite);
    let mut mono = run("degree monotonicity", 30, || monotonicity(&cases));
    mono.elapsed += solve_time(&["R d1", "R d2", "R d3", "R d4"]);
    lines.push(mono);
    let mut agree = run("k3 agreement", 30, || k3_agreement(&cases));
    agree.elapsed += solve_time(&["k3 exact d2", "k3 sos d2", "k3 sos d4"]);
    lines.push(agree);
    lines.push(run("outer tangency", 5, outer_tangency));
    lines.push(run("certificates", 5, certificates));
    lines.push(run("shape constraints", 30, shapes));
    let mut stalled = Vec::new();
    lines.push(run("conic infrastructure", 60, || {
        let (outcome, failing) = conic(&cases);
        stalled = failing;
        outcome
    }));

    println!();
    for l in &lines {
        l.print();
    }
    println!();

    for l in &lines[..lines.len() - 1] {
        assert!(l.passed(), "{} failed", l.name);
    }
    let conic_line = lines.last().unwrap();
    assert!(conic_line.elapsed <= conic_line.limit);
    for (label, r, status) in &stalled {
        assert_eq!(
            *status,
            SolveStatus::Stalled,
            "{label} optimal with KKT {r:e}"
        );
    }
    let labels: Vec<&str> = stalled.iter().map(|s| s.0.as_str()).collect();
    assert_eq!(labels, KNOWN_STALLED, "KKT failures changed");
}
