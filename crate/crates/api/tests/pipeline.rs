use polypareto::{CertificateVerdict, Molp, ObjectiveMode, Polynomial, Region, ShapeMode};
use polypareto_api::*;
use polypareto_conic::Cone;

fn instance_r() -> Molp {
    serde_json::from_str(include_str!("../data/instance_r.json")).unwrap()
}

fn k3() -> Molp {
    serde_json::from_str(include_str!("../data/k3.json")).unwrap()
}

fn interval(a: f64, b: f64) -> Region {
    Region::Interval { a, b }
}

fn front_r(u: f64) -> f64 {
    if u <= -0.5 {
        -(1.0 + u)
    } else {
        -(1.5 + u) / 2.0
    }
}

fn inner(region: Region, degree: usize) -> ApproximationRequest {
    ApproximationRequest::new(Task::Inner, instance_r(), region, degree)
}

fn run(req: ApproximationRequest) -> ApproximationResult {
    Pipeline::default().run(req).unwrap()
}

fn ball() -> Region {
    Region::Ball {
        center: vec![5.0, 5.0],
        radius: 5.0,
    }
}

fn k3_request() -> ApproximationRequest {
    let mut req = ApproximationRequest::new(Task::Inner, k3(), ball(), 2);
    req.objective = ObjectiveMode::Sampled {
        count: 200,
        seed: 3,
    };
    req
}

#[test]
fn linear_rule_on_instance_r() {
    let r = run(inner(interval(-1.0, 0.0), 1));
    assert_eq!(r.status, JobStatus::Success);
    assert_eq!(r.v, SCHEMA_VERSION);
    assert!((r.objective.unwrap() + 0.375).abs() < 1e-6);
    let soundness = r.diagnostics.soundness.as_ref().unwrap();
    assert_eq!(soundness.samples, 1000);
    assert!(soundness.passed);
    assert!(r.diagnostics.solver.as_ref().unwrap().kkt_max.unwrap() <= 1e-8);
    let Output::Rule {
        rule,
        reduced_accuracy,
    } = &r.output
    else {
        panic!("{:?}", r.output)
    };
    assert!(!reduced_accuracy);
    let m = instance_r();
    for (u, f) in [(-1.0, 0.0), (0.0, -0.75)] {
        assert!((rule.objective_curve(&m, &[u]).unwrap().f[1] - f).abs() < 1e-6);
    }
}

#[test]
fn unattainable_interval_reports_both_hypotheses() {
    let r = run(inner(interval(-3.0, -2.0), 2));
    assert_eq!(r.status, JobStatus::Infeasible);
    let Output::Infeasible { diagnosis } = &r.output else {
        panic!("{:?}", r.output)
    };
    assert_eq!(diagnosis.hypotheses.len(), 2);
    assert!(diagnosis.heuristic_region_suspect);
    assert!(r.objective.is_none());
}

#[test]
fn k3_ball_has_twelve_blocks_of_order_four() {
    let req = k3_request();
    let pipeline = Pipeline::default();
    let prepared = pipeline
        .prepare(&pipeline.accept(req.clone()).unwrap())
        .unwrap();
    let orders: Vec<usize> = prepared
        .program()
        .constraints
        .iter()
        .filter_map(|c| match c.cone {
            Cone::Psd(n) => Some(n),
            _ => None,
        })
        .collect();
    assert_eq!(orders, vec![4; 12]);
    let r = pipeline.run(req).unwrap();
    assert_eq!(r.status, JobStatus::Success, "{:?}", r.diagnostics);
    // 20 × 20 polar mesh, all feasible.
    let mesh = evaluate_surface(&r, &GridSpec::PerAxis(20), false).unwrap();
    assert_eq!(mesh.points.len(), 400);
    assert_eq!(mesh.shape, vec![20, 20]);
    let rule = r.output.rule().unwrap();
    let m = k3();
    for p in &mesh.points {
        assert!(m.max_violation(&rule.evaluate(&p.u).unwrap()) <= 1e-6);
    }
}

#[test]
fn outer_tangency_and_flags() {
    let req = ApproximationRequest::new(Task::Outer, instance_r(), interval(-1.0, 0.0), 1);
    let r = run(req);
    assert_eq!(r.status, JobStatus::Success);
    let t = r.diagnostics.tangency.as_ref().unwrap();
    assert!((t.u[0] + 0.5).abs() < 1e-3, "{t:?}");
    assert_eq!(r.diagnostics.meaningless_part, Some(false));
    let Output::Outer { approximation } = &r.output else {
        panic!()
    };
    // Any line through (-0.5, -0.5) integrates to -0.5 over [-1, 0].
    assert!((r.objective.unwrap() + 0.5).abs() < 1e-6);
    for i in 0..100 {
        let u = -1.0 + i as f64 / 99.0;
        assert!(approximation.eval(&[u]) <= front_r(u) + 1e-6);
    }

    let wide = ApproximationRequest::new(Task::Outer, instance_r(), interval(-1.5, 0.2), 1);
    let r = run(wide);
    assert_eq!(r.diagnostics.meaningless_part, Some(true));
    assert!(r
        .diagnostics
        .notes
        .iter()
        .any(|n| n.contains("meaningless")));

    let single = Molp::new(
        vec![
            vec![-1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, -1.0],
            vec![0.0, 1.0],
        ],
        vec![0.0, 1.0, -0.3, 1.0],
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    );
    let r = run(ApproximationRequest::new(
        Task::Outer,
        single,
        interval(0.0, 1.0),
        1,
    ));
    let Output::Outer { approximation } = &r.output else {
        panic!()
    };
    assert!((approximation.l0 - 0.3).abs() < 1e-6);
    assert!(approximation.l1[0].abs() < 1e-6);
}

fn certificate(region: Region, bound: Polynomial, degree: usize) -> ApproximationResult {
    let mut req = ApproximationRequest::new(Task::Certificate, instance_r(), region, degree);
    req.bound = Some(bound);
    run(req)
}

#[test]
fn certificate_cases() {
    let r = certificate(interval(-1.0, -0.9), Polynomial::constant(1, 0.0), 1);
    assert_eq!(r.status, JobStatus::Success);
    assert!(matches!(
        r.output,
        Output::Certificate {
            verdict: CertificateVerdict::Certified { .. }
        }
    ));
    assert!(r.diagnostics.bound_violation.unwrap() <= 1e-6);

    let r = certificate(interval(-1.0, 0.0), Polynomial::constant(1, -1.0), 2);
    assert_eq!(r.status, JobStatus::NoCertificate);
    assert!(matches!(
        r.output,
        Output::Certificate {
            verdict: CertificateVerdict::NoCertificateAtDegree { degree: 2 }
        }
    ));
    assert!(evaluate_surface(&r, &GridSpec::PerAxis(3), false).is_err());

    // A parabola above the front, certified by a cubic rule.
    let t = Polynomial::univariate(&[-0.65, -0.75, 0.5, 0.0]);
    for i in 0..=100 {
        let u = -1.0 + i as f64 / 100.0;
        assert!(t.eval(&[u]) >= front_r(u));
    }
    let r = certificate(interval(-1.0, 0.0), t, 3);
    assert_eq!(r.status, JobStatus::Success, "{:?}", r.output);
}

#[test]
fn surface_of_linear_rule() {
    let r = run(inner(interval(-1.0, 0.0), 1));
    let mesh = evaluate_surface(&r, &"3".parse().unwrap(), true).unwrap();
    assert_eq!(mesh.kind, SurfaceKind::Inner);
    let want = [(-1.0, 0.0), (-0.5, -0.375), (0.0, -0.75)];
    for (p, (u, f)) in mesh.points.iter().zip(want) {
        assert!((p.u[0] - u).abs() < 1e-12);
        assert!((p.fk - f).abs() < 1e-6);
        assert!((p.oracle.unwrap() - front_r(u)).abs() < 1e-6);
    }
    for bad in ["0", "points:", "-2:-1:3", "points:0.5"] {
        let err = evaluate_surface(&r, &bad.parse().unwrap(), false).unwrap_err();
        assert!(matches!(err, ApiError::BadGrid(_)), "{bad}: {err}");
    }
}

#[test]
fn refine_checks_containment() {
    let parent = inner(interval(-1.0, 0.0), 2);
    let child = refine(&parent, interval(-0.6, -0.4), None, None).unwrap();
    assert_eq!(child.region, interval(-0.6, -0.4));
    assert_eq!(child.degree, 2);
    let raised = refine(
        &parent,
        interval(-0.6, -0.4),
        Some(4),
        Some(ShapeMode::Both),
    )
    .unwrap();
    assert_eq!((raised.degree, raised.shape), (4, ShapeMode::Both));
    assert!(matches!(
        refine(&parent, interval(-2.0, -1.5), None, None),
        Err(ApiError::NotContained(_))
    ));
    assert!(matches!(
        refine(&parent, interval(-0.5, 0.1), None, None),
        Err(ApiError::NotContained(_))
    ));
    let k3_parent = k3_request();
    let half = Region::Ball {
        center: vec![5.0, 5.0],
        radius: 2.5,
    };
    assert!(refine(&k3_parent, half, None, None).is_ok());
    let shifted = Region::Ball {
        center: vec![7.0, 5.0],
        radius: 3.5,
    };
    assert!(refine(&k3_parent, shifted, None, None).is_err());
}

/// `∫_a^b c^k'x(u) du` of the parent's rule, by composite Simpson.
fn restricted_integral(r: &ApproximationResult, a: f64, b: f64) -> f64 {
    let rule = r.output.rule().unwrap();
    let m = instance_r();
    let n = 2000;
    let h = (b - a) / n as f64;
    let f = |u: f64| rule.objective_curve(&m, &[u]).unwrap().f[1];
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn refinement_never_does_worse_than_the_parent() {
    for degree in [1, 2, 3] {
        let parent = run(inner(interval(-1.0, 0.0), degree));
        for (a, b) in [(-0.6, -0.4), (-1.0, -0.5), (-0.3, 0.0)] {
            let child_req = refine(&parent.request, interval(a, b), None, None).unwrap();
            let child = run(child_req);
            let per_length = child.objective.unwrap() / (b - a);
            let parent_per_length = restricted_integral(&parent, a, b) / (b - a);
            assert!(
                per_length <= parent_per_length + 1e-6,
                "degree {degree} on [{a}, {b}]: {per_length} vs {parent_per_length}"
            );
        }
    }
}

#[test]
fn identical_requests_give_identical_rules() {
    let mut req = inner(interval(-1.0, 0.0), 3);
    req.objective = ObjectiveMode::Sampled { count: 50, seed: 9 };
    req.seed = 4;
    let a = run(req.clone());
    let b = run(req);
    assert_eq!(a.id, b.id);
    let ja = serde_json::to_string(a.output.rule().unwrap()).unwrap();
    let jb = serde_json::to_string(b.output.rule().unwrap()).unwrap();
    assert_eq!(ja, jb);
    assert_eq!(a.diagnostics.soundness, b.diagnostics.soundness);
}

#[test]
fn requests_are_validated() {
    let pipeline = Pipeline::default();
    let mut req = inner(interval(-1.0, 0.0), 1);
    req.v = 2;
    assert!(matches!(pipeline.run(req), Err(ApiError::Invalid(_))));
    let req = ApproximationRequest::new(Task::Certificate, instance_r(), interval(-1.0, 0.0), 1);
    assert!(matches!(pipeline.run(req), Err(ApiError::Invalid(_))));
    let req = ApproximationRequest::new(Task::Outer, instance_r(), interval(-1.0, 0.0), 2);
    assert!(matches!(pipeline.run(req), Err(ApiError::Invalid(_))));
    let mut req = k3_request();
    req.degree = 3;
    req.shape = ShapeMode::Convex;
    assert!(matches!(
        pipeline.run(req),
        Err(ApiError::Plan(polypareto::Error::UnsupportedShape(_)))
    ));
    let req = inner(ball(), 2);
    assert!(matches!(pipeline.run(req), Err(ApiError::Plan(_))));
}

#[test]
fn results_round_trip_through_json() {
    let r = run(inner(interval(-1.0, 0.0), 2));
    let text = serde_json::to_string(&r).unwrap();
    let back: ApproximationResult = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["v"], 1);
    assert_eq!(v["request"]["v"], 1);
    assert_eq!(v["output"]["kind"], "rule");
}
