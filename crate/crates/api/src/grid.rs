//! Grid specifications: `N` points per axis of the region, `a:b:n` ranges
//! per axis, or `points:u,v;u,v` lists.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::DMatrix;
use polypareto::Region;
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GridSpec {
    /// `N` per axis over the region. Two-dimensional balls and ellipsoids
    /// get an `N × N` polar mesh instead of a clipped square grid.
    PerAxis(usize),
    Ranges(Vec<(f64, f64, usize)>),
    Points(Vec<Vec<f64>>),
}

/// Points of a grid and its logical shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub points: Vec<Vec<f64>>,
    pub shape: Vec<usize>,
}

fn bad(msg: impl Into<String>) -> ApiError {
    ApiError::BadGrid(msg.into())
}

fn parse_f64(s: &str) -> Result<f64> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| bad(format!("not a number: {s:?}")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(format!("not finite: {s:?}")))
    }
}

impl FromStr for GridSpec {
    type Err = ApiError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("points:") {
            let pts = rest
                .split(';')
                .filter(|p| !p.trim().is_empty())
                .map(|p| p.split(',').map(parse_f64).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            return Ok(GridSpec::Points(pts));
        }
        if s.contains(':') {
            let ranges = s
                .split(',')
                .map(|r| {
                    let parts: Vec<&str> = r.split(':').collect();
                    let [a, b, n] = parts[..] else {
                        return Err(bad(format!("expected lo:hi:n, got {r:?}")));
                    };
                    let n: usize = n
                        .trim()
                        .parse()
                        .map_err(|_| bad(format!("bad count in {r:?}")))?;
                    Ok((parse_f64(a)?, parse_f64(b)?, n))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(GridSpec::Ranges(ranges));
        }
        let n: usize = s
            .parse()
            .map_err(|_| bad(format!("expected N, lo:hi:n,... or points:..., got {s:?}")))?;
        Ok(GridSpec::PerAxis(n))
    }
}

fn axis(lo: f64, hi: f64, n: usize, t: usize) -> f64 {
    if n == 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * t as f64 / (n - 1) as f64
    }
}

fn tensor(ranges: &[(f64, f64, usize)]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for &(lo, hi, n) in ranges {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |t| {
                    let mut q = p.clone();
                    q.push(axis(lo, hi, n, t));
                    q
                })
            })
            .collect();
    }
    out
}

/// Rings at radii `i/(n-1)` and `n` angles, mapped through `u = c + L v`.
fn polar(center: &[f64], l: &DMatrix<f64>, n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let r = if n == 1 {
            0.0
        } else {
            i as f64 / (n - 1) as f64
        };
        for j in 0..n {
            let th = 2.0 * PI * j as f64 / n as f64;
            let v = [r * th.cos(), r * th.sin()];
            out.push(
                (0..2)
                    .map(|a| center[a] + l[(a, 0)] * v[0] + l[(a, 1)] * v[1])
                    .collect(),
            );
        }
    }
    out
}

impl GridSpec {
    /// Points without a region; `PerAxis` needs one.
    pub fn points_free(&self) -> Result<Grid> {
        let grid = match self {
            GridSpec::PerAxis(_) => {
                return Err(bad("a per-axis count needs a region; give lo:hi:n ranges"))
            }
            GridSpec::Ranges(r) => {
                for &(lo, hi, n) in r {
                    if n == 0 || lo > hi {
                        return Err(bad(format!("empty range {lo}:{hi}:{n}")));
                    }
                }
                Grid {
                    points: tensor(r),
                    shape: r.iter().map(|x| x.2).collect(),
                }
            }
            GridSpec::Points(p) => {
                let dim = p.first().map_or(0, Vec::len);
                if p.iter().any(|q| q.len() != dim) {
                    return Err(bad("points differ in dimension"));
                }
                Grid {
                    points: p.clone(),
                    shape: vec![p.len()],
                }
            }
        };
        if grid.points.is_empty() || grid.points[0].is_empty() {
            return Err(bad("grid is empty"));
        }
        Ok(grid)
    }

    /// Points inside `region`.
    pub fn points(&self, region: &Region) -> Result<Grid> {
        let dim = region.dim();
        let grid = match self {
            GridSpec::PerAxis(0) => return Err(bad("grid is empty")),
            GridSpec::PerAxis(n) => match region {
                Region::Ball { center, radius } if dim == 2 => Grid {
                    points: polar(center, &(DMatrix::identity(2, 2) * *radius), *n),
                    shape: vec![*n, *n],
                },
                Region::Ellipsoid { center, shape } if dim == 2 => {
                    let e = DMatrix::from_fn(2, 2, |i, j| shape[i][j]);
                    // u - c = L⁻ᵀ v maps the unit disc onto the ellipsoid.
                    let l = e
                        .cholesky()
                        .ok_or_else(|| bad("ellipsoid shape is not positive definite"))?
                        .l()
                        .transpose()
                        .try_inverse()
                        .ok_or_else(|| bad("ellipsoid shape is singular"))?;
                    Grid {
                        points: polar(center, &l, *n),
                        shape: vec![*n, *n],
                    }
                }
                _ => {
                    let points = region.grid(*n)?;
                    let full = n.pow(dim as u32);
                    let shape = if points.len() == full {
                        vec![*n; dim]
                    } else {
                        vec![points.len()]
                    };
                    Grid { points, shape }
                }
            },
            _ => self.points_free()?,
        };
        if grid.points.is_empty() {
            return Err(bad("no grid point lies in the region"));
        }
        for u in &grid.points {
            if u.len() != dim {
                return Err(bad(format!(
                    "grid points have dimension {}, the region {dim}",
                    u.len()
                )));
            }
            if !region.contains(u)? {
                return Err(bad(format!("grid point {u:?} lies outside the region")));
            }
        }
        Ok(grid)
    }
}
