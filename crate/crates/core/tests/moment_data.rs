use polypareto::robust::build_objective;
use polypareto::{
    build_inner_poly_interval, moment_interval_transform, Molp, MomentSetZ, MonomialBasis,
    ObjectiveMode, Region,
};
use polypareto_conic::{dualize, export_sdpa, Cone};

#[test]
fn transform_on_zero_to_twenty_five() {
    let t = moment_interval_transform(0.0, 25.0, 3).unwrap();
    let d_mat = [
        [12.5, 0.0, 0.0],
        [312.5, 156.25, 0.0],
        [5859.375, 5859.375, 1953.125],
    ];
    for i in 0..3 {
        for j in 0..3 {
            assert!((t.d_mat[i][j] - d_mat[i][j]).abs() <= 1e-12);
        }
    }
    for (a, b) in t.d.iter().zip([12.5, 156.25, 1953.125]) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn small_transforms() {
    let t = moment_interval_transform(-1.0, 1.0, 2).unwrap();
    assert_eq!(t.d_mat, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert_eq!(t.d, vec![0.0, 0.0]);
    let t = moment_interval_transform(0.0, 2.0, 2).unwrap();
    assert_eq!(t.d_mat, vec![vec![1.0, 0.0], vec![2.0, 1.0]]);
    assert_eq!(t.d, vec![1.0, 1.0]);
}

#[test]
fn objective_weights_are_interval_moments() {
    let molp = Molp::new(vec![vec![1.0]], vec![1.0], vec![vec![1.0], vec![1.0]]);
    let region = Region::Interval { a: 0.0, b: 25.0 };
    let basis = MonomialBasis::new(1, 3);
    let w = build_objective(&molp, &region, &basis, ObjectiveMode::ClosedForm).unwrap();
    let want = [
        25.0,
        25f64.powi(2) / 2.0,
        25f64.powi(3) / 3.0,
        25f64.powi(4) / 4.0,
    ];
    for (a, b) in w[0].iter().zip(want) {
        assert!((a - b).abs() <= 1e-9 * b);
    }
    let square = Region::Box {
        lo: vec![-1.0, -1.0],
        hi: vec![1.0, 1.0],
    };
    let molp3 = Molp::new(vec![vec![1.0]], vec![1.0], vec![vec![1.0]; 3]);
    let basis = MonomialBasis::new(2, 3);
    let w = build_objective(&molp3, &square, &basis, ObjectiveMode::ClosedForm).unwrap();
    for (e, wa) in basis.exponents.iter().zip(&w[0]) {
        if e.iter().any(|p| p % 2 == 1) {
            assert_eq!(*wa, 0.0);
        }
    }
}

#[test]
fn sampled_objective_with_one_point() {
    let molp = Molp::new(vec![vec![1.0]], vec![1.0], vec![vec![1.0], vec![2.0]]);
    let region = Region::Interval { a: 0.0, b: 1.0 };
    let basis = MonomialBasis::new(1, 2);
    let w = build_objective(
        &molp,
        &region,
        &basis,
        ObjectiveMode::Sampled { count: 1, seed: 0 },
    )
    .unwrap();
    let u0 = region.sample(1, 0).unwrap()[0][0];
    assert_eq!(w[0], vec![2.0, 2.0 * u0, 2.0 * u0 * u0]);
}

#[test]
fn degree_three_moment_map() {
    let z = MomentSetZ::new(3).unwrap();
    let want = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 2.0, 0.0, 0.0],
        [3.0, 0.0, 4.0, 0.0],
        [0.0, 4.0, 0.0, 8.0],
        [3.0, 0.0, 4.0, 0.0],
        [0.0, 2.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ];
    assert_eq!(z.map.len(), 7);
    for (row, w) in z.map.iter().zip(want) {
        assert_eq!(row.as_slice(), w.as_slice());
    }
    let h = z.hankel(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    assert_eq!(h.nrows(), 4);
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(h[(i, j)], (i + j) as f64);
        }
    }
}

#[test]
fn moment_dual_subproblem_shape() {
    let z = MomentSetZ::new(3).unwrap();
    let (mats, b) = z.dual_matrices();
    assert_eq!(b, vec![1.0, 0.0, 0.0, 0.0]);
    assert_eq!(mats.len(), 4);
    let p = z.dual_subproblem(&[1.0, -2.0, 0.5]);
    let d = dualize(&p);
    assert_eq!(d.num_vars(), 4);
    assert_eq!(d.psd_orders(), vec![4]);
    let text = export_sdpa(&p).unwrap();
    let lines: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('"') && !l.starts_with('*'))
        .collect();
    assert_eq!(lines[0].trim(), "4");
    let rhs: Vec<f64> = lines[3]
        .split_whitespace()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(rhs, vec![1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn interval_program_blocks_for_degree_three() {
    let molp = Molp::new(
        vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]],
        vec![0.0, 0.0, 25.0],
        vec![vec![1.0, 0.0], vec![0.0, -1.0]],
    );
    let region = Region::Interval { a: 0.0, b: 25.0 };
    let built = build_inner_poly_interval(&molp, &region, 3, ObjectiveMode::ClosedForm).unwrap();
    let psd: Vec<usize> = built
        .program
        .constraints
        .iter()
        .filter_map(|c| match c.cone {
            Cone::Psd(q) => Some(q),
            _ => None,
        })
        .collect();
    assert_eq!(psd, vec![4; molp.m() + 1]);
}
