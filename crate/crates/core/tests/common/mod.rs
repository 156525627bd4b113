#![allow(dead_code)]

use polypareto::{Molp, Region};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn instance_r() -> Molp {
    Molp::new(
        vec![
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
            vec![1.0, 1.0],
            vec![1.0, 2.0],
        ],
        vec![0.0, 0.0, 1.0, 1.5],
        vec![vec![-1.0, 0.0], vec![0.0, -1.0]],
    )
}

/// Front of instance R as a function of `u = f₁`.
pub fn front_r(u: f64) -> f64 {
    if u <= -0.5 {
        -(1.0 + u)
    } else {
        -(1.5 + u) / 2.0
    }
}

pub fn unit_interval_r() -> Region {
    Region::Interval { a: -1.0, b: 0.0 }
}

/// 20 random rows over `x >= 0` in 30 variables, with two nonpositive
/// objectives. Returns the problem and an interval inside the attainable
/// range of the first objective.
pub fn random_20x30(seed: u64) -> (Molp, Region) {
    let n = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for _ in 0..20 {
        a.push((0..n).map(|_| rng.random_range(0.0..1.0)).collect());
        b.push(rng.random_range(1.0..2.0));
    }
    for j in 0..n {
        let mut row = vec![0.0; n];
        row[j] = -1.0;
        a.push(row);
        b.push(0.0);
    }
    let c1: Vec<f64> = (0..n).map(|_| -rng.random_range(0.0..1.0)).collect();
    let c2: Vec<f64> = (0..n).map(|_| -rng.random_range(0.0..1.0)).collect();
    let molp = Molp::new(a, b, vec![c1.clone(), c2]);
    let lo = match polypareto::lp::solve_lp(&c1, &molp.a, &molp.b).unwrap() {
        polypareto::lp::LpOutcome::Optimal { value, .. } => value,
        other => panic!("unexpected {other:?}"),
    };
    (
        molp,
        Region::Interval {
            a: 0.8 * lo,
            b: 0.2 * lo,
        },
    )
}

/// Nonnegative orthant in ten variables with objectives `c¹, c² ∈ [0,1]¹⁰`
/// and `c³ ∈ [-1,0]¹⁰`, over the ball of radius 5 centred at (5, 5).
pub fn k3_instance() -> (Molp, Region) {
    let n = 10;
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { -1.0 } else { 0.0 }).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut draw =
        |lo: f64, hi: f64| -> Vec<f64> { (0..n).map(|_| rng.random_range(lo..hi)).collect() };
    let c1 = draw(0.05, 1.0);
    let c2 = draw(0.05, 1.0);
    let c3 = draw(-1.0, 0.0);
    (
        Molp::new(a, vec![0.0; n], vec![c1, c2, c3]),
        Region::Ball {
            center: vec![5.0, 5.0],
            radius: 5.0,
        },
    )
}

pub struct Solved {
    pub built: polypareto::BuiltProgram,
    pub solution: polypareto_conic::ConicSolution,
    pub rule: polypareto::RecoveredRule,
}

/// Plan, build, solve and recover an inner approximation.
pub fn solve_inner(
    molp: &Molp,
    region: &Region,
    degree: usize,
    shape: polypareto::ShapeMode,
    objective: polypareto::ObjectiveMode,
) -> Solved {
    let plan = polypareto::plan(molp, region, degree, shape, objective).unwrap();
    let built = polypareto::build_inner(molp, region, &plan).unwrap();
    let solution =
        polypareto_conic::solve(&built.program, &polypareto_conic::SolverOptions::default())
            .unwrap();
    let rule = polypareto::recover_rule(&built, &solution).unwrap();
    Solved {
        built,
        solution,
        rule,
    }
}

pub fn sampled(count: usize, seed: u64) -> polypareto::ObjectiveMode {
    polypareto::ObjectiveMode::Sampled { count, seed }
}
