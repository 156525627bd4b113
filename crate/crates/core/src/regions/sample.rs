//! Deterministic sampling of regions.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{matrix, Region};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpOutcome};
use crate::molp::dot;

const THINNING: usize = 10;
const BURN_IN_PER_DIM: usize = 100;
const REJECTION_TRIES_PER_POINT: usize = 10_000;

pub(super) fn sample(region: &Region, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::InvalidRegion("sample count must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match region {
        Region::Interval { a, b } => Ok(if count == 1 {
            vec![vec![0.5 * (a + b)]]
        } else {
            (0..count)
                .map(|i| vec![a + (b - a) * i as f64 / (count - 1) as f64])
                .collect()
        }),
        Region::Ball { .. } | Region::Ellipsoid { .. } => {
            let (c, e) = region.ellipsoid_data().unwrap();
            ellipsoid(&c, &e, count, &mut rng)
        }
        Region::Box { .. } | Region::Polyhedron { .. } => {
            let (p, q) = region.polyhedral_data().unwrap();
            hit_and_run(&p, &q, count, &mut rng)
        }
        Region::Semialgebraic(s) => {
            let (lo, hi) = s.bounding_box()?;
            let mut out = Vec::with_capacity(count);
            let mut tries = 0;
            while out.len() < count {
                if tries == REJECTION_TRIES_PER_POINT * count {
                    return Err(Error::EmptyRegion);
                }
                tries += 1;
                let u: Vec<f64> = lo
                    .iter()
                    .zip(&hi)
                    .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                    .collect();
                if s.contains(&u)? {
                    out.push(u);
                }
            }
            Ok(out)
        }
    }
}

fn direction(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let d: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = dot(&d, &d).sqrt();
        if n > 1e-12 {
            return d.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Uniform points of `(u - c)' E (u - c) <= 1`: uniform in the unit ball,
/// mapped through `u = c + L⁻ᵀ v` with `E = L L'`.
fn ellipsoid(
    c: &[f64],
    e: &[Vec<f64>],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    let dim = c.len();
    let l = matrix(e)
        .cholesky()
        .ok_or_else(|| Error::InvalidRegion("ellipsoid shape is not positive definite".into()))?
        .l();
    let lt_inv = l
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::InvalidRegion("singular ellipsoid shape".into()))?;
    Ok((0..count)
        .map(|_| {
            let r = rng.random::<f64>().powf(1.0 / dim as f64);
            let v = DVector::from_vec(direction(dim, rng)) * r;
            let u = &lt_inv * v;
            (0..dim).map(|i| c[i] + u[i]).collect()
        })
        .collect())
}

/// Center of the largest ball inside `P u <= q`.
fn chebyshev_center(p: &[Vec<f64>], q: &[f64]) -> Result<Vec<f64>> {
    let dim = p[0].len();
    let rows: Vec<Vec<f64>> = p
        .iter()
        .map(|r| {
            let mut row = r.clone();
            row.push(dot(r, r).sqrt());
            row
        })
        .collect();
    let mut c = vec![0.0; dim + 1];
    c[dim] = -1.0;
    match solve_lp(&c, &rows, q)? {
        LpOutcome::Optimal { x, .. } if x[dim] > 0.0 => Ok(x[..dim].to_vec()),
        LpOutcome::Optimal { .. } | LpOutcome::Infeasible => Err(Error::EmptyRegion),
        LpOutcome::Unbounded => Err(Error::InvalidRegion("polyhedron is unbounded".into())),
    }
}

fn hit_and_run(
    p: &[Vec<f64>],
    q: &[f64],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    let dim = p[0].len();
    let mut x = chebyshev_center(p, q)?;
    let mut step = |x: &mut Vec<f64>| {
        let d = direction(dim, rng);
        let (mut tmin, mut tmax) = (f64::NEG_INFINITY, f64::INFINITY);
        for (r, qi) in p.iter().zip(q) {
            let rd = dot(r, &d);
            let slack = qi - dot(r, x);
            if rd > 1e-14 {
                tmax = tmax.min(slack / rd);
            } else if rd < -1e-14 {
                tmin = tmin.max(slack / rd);
            }
        }
        let t = tmin + (tmax - tmin) * rng.random::<f64>();
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += t * di;
        }
    };
    for _ in 0..BURN_IN_PER_DIM * dim {
        step(&mut x);
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..THINNING {
            step(&mut x);
        }
        out.push(x.clone());
    }
    Ok(out)
}
