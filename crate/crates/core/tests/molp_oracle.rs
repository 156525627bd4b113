mod common;

use common::{front_r, instance_r, random_20x30};
use polypareto::{
    dominates, pareto_front_oracle, scalarize_epsilon_constraint, Dominance, Molp, ObjectivePoint,
    ScalarizationStatus,
};
use proptest::prelude::*;

/// Best vertex of instance R with `-x₁ <= u` by enumerating the vertices of
/// the restricted polygon.
fn vertex_oracle_r(u: f64) -> Option<f64> {
    let molp = instance_r();
    let mut rows = molp.a.clone();
    let mut rhs = molp.b.clone();
    rows.push(vec![-1.0, 0.0]);
    rhs.push(u);
    let mut best: Option<f64> = None;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (a, b, c, d) = (rows[i][0], rows[i][1], rows[j][0], rows[j][1]);
            let det = a * d - b * c;
            if det.abs() < 1e-12 {
                continue;
            }
            let x = [
                (rhs[i] * d - b * rhs[j]) / det,
                (a * rhs[j] - c * rhs[i]) / det,
            ];
            let ok = rows
                .iter()
                .zip(&rhs)
                .all(|(r, h)| r[0] * x[0] + r[1] * x[1] <= h + 1e-12);
            if ok {
                let f = -x[1];
                best = Some(best.map_or(f, |v: f64| v.min(f)));
            }
        }
    }
    best
}

#[test]
fn scalarization_examples_on_instance_r() {
    let molp = instance_r();
    let r = scalarize_epsilon_constraint(&molp, &[0.0]).unwrap();
    assert_eq!(r.status, ScalarizationStatus::Optimal);
    let f = r.f.unwrap().f;
    assert!((f[0] - 0.0).abs() < 1e-7 && (f[1] + 0.75).abs() < 1e-7);
    let x = r.x.unwrap();
    assert!(molp.max_violation(&x) <= 1e-7);

    let f = scalarize_epsilon_constraint(&molp, &[-1.0])
        .unwrap()
        .f
        .unwrap()
        .f;
    assert!((f[0] + 1.0).abs() < 1e-7 && f[1].abs() < 1e-7);

    let r = scalarize_epsilon_constraint(&molp, &[-2.0]).unwrap();
    assert_eq!(r.status, ScalarizationStatus::Infeasible);
    assert!(r.x.is_none() && r.f.is_none());
}

#[test]
fn front_oracle_matches_vertex_enumeration() {
    let molp = instance_r();
    let grid: Vec<Vec<f64>> = vec![vec![-1.0], vec![-0.5], vec![0.0], vec![-0.25], vec![-1.5]];
    let front = pareto_front_oracle(&molp, &grid).unwrap();
    for p in &front {
        let want = vertex_oracle_r(p.u[0]);
        match (p.fk, want) {
            (Some(a), Some(b)) => {
                assert!((a - b).abs() < 1e-7, "u={} {a} vs {b}", p.u[0]);
                assert!((a - front_r(p.u[0])).abs() < 1e-7);
            }
            (None, None) => assert_eq!(p.status, ScalarizationStatus::Infeasible),
            other => panic!("u={}: {other:?}", p.u[0]),
        }
    }
    assert!((front[3].fk.unwrap() + 0.625).abs() < 1e-7);
}

#[test]
fn validation_lists_every_violation() {
    let ok = instance_r();
    assert!(ok.validate().is_empty());
    let one = Molp::new(vec![vec![1.0, 0.0]], vec![1.0], vec![vec![1.0, 0.0]]);
    assert_eq!(one.validate(), vec!["k must be ≥ 2".to_string()]);
    let mut bad = Molp::new(
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        vec![1.0, f64::NAN, 1.0],
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    );
    assert_eq!(bad.validate(), vec!["b[1] not finite".to_string()]);
    bad.b[1] = 1.0;
    assert!(bad.validate().is_empty());
}

#[test]
fn random_front_is_nonincreasing_and_convex() {
    let (molp, region) = random_20x30(3);
    let grid = region.grid(25).unwrap();
    let front = pareto_front_oracle(&molp, &grid).unwrap();
    let f: Vec<f64> = front.iter().map(|p| p.fk.unwrap()).collect();
    for w in f.windows(2) {
        assert!(w[1] <= w[0] + 1e-7);
    }
    for w in f.windows(3) {
        assert!(w[1] <= 0.5 * (w[0] + w[2]) + 1e-7);
    }
}

fn point(v: &[f64]) -> ObjectivePoint {
    ObjectivePoint { f: v.to_vec() }
}

#[test]
fn dominance_examples() {
    assert_eq!(
        dominates(&point(&[0.0, 0.0]), &point(&[1.0, 1.0])).unwrap(),
        Dominance::Strong
    );
    assert_eq!(
        dominates(&point(&[0.0, 1.0]), &point(&[0.0, 2.0])).unwrap(),
        Dominance::Weak
    );
    assert_eq!(
        dominates(&point(&[0.0, 1.0]), &point(&[1.0, 0.0])).unwrap(),
        Dominance::None
    );
    assert!(dominates(&point(&[0.0]), &point(&[0.0, 1.0])).is_err());
}

proptest! {
    #[test]
    fn strong_dominance_is_a_strict_order(
        a in prop::collection::vec(-3i32..3, 3),
        b in prop::collection::vec(-3i32..3, 3),
        c in prop::collection::vec(-3i32..3, 3),
    ) {
        let (a, b, c): (Vec<f64>, Vec<f64>, Vec<f64>) = (
            a.iter().map(|&v| v as f64).collect(),
            b.iter().map(|&v| v as f64).collect(),
            c.iter().map(|&v| v as f64).collect(),
        );
        let strong = |x: &[f64], y: &[f64]| dominates(&point(x), &point(y)).unwrap() == Dominance::Strong;
        prop_assert!(!strong(&a, &a));
        if strong(&a, &b) && strong(&b, &c) {
            prop_assert!(strong(&a, &c));
        }
    }

    #[test]
    fn front_of_instance_r_is_nonincreasing_and_convex(
        mut us in prop::collection::vec(-1.0f64..0.0, 3),
    ) {
        us.sort_by(f64::total_cmp);
        let molp = instance_r();
        let grid: Vec<Vec<f64>> = us.iter().map(|&u| vec![u]).collect();
        let f: Vec<f64> = pareto_front_oracle(&molp, &grid).unwrap().iter().map(|p| p.fk.unwrap()).collect();
        prop_assert!(f[1] <= f[0] + 1e-7 && f[2] <= f[1] + 1e-7);
        if us[2] - us[0] > 1e-9 {
            let t = (us[1] - us[0]) / (us[2] - us[0]);
            prop_assert!(f[1] <= (1.0 - t) * f[0] + t * f[2] + 1e-7);
        }
    }
}
