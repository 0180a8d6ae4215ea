//! Finite-difference oracle for drain-current partials.
//!
//! Third-order differences in f64 lose most of their digits to round-off
//! at small steps and to truncation at large ones. Instead of a single
//! shrinking stencil, every directional derivative is read off a
//! least-squares polynomial (degree 20, Chebyshev basis) sampled along a
//! ray through the bias point: a wide, noise-averaging stencil whose
//! truncation error falls geometrically with the degree. Mixed partials are
//! recovered from 13 ray directions by polarization.

use bgamp::device::{drain_current, model_ut, DeviceParams};
use nalgebra::DMatrix;
use std::sync::OnceLock;

const DEGREE: usize = 20;
const SAMPLES: usize = 121;
/// Ray half-length, as a fraction of the distance (in units of 2 n U_T of
/// gate drive) to the nearest complex singularity of the interpolation
/// function, which sits at imaginary part pi.
const REACH: f64 = 0.35;

struct RayWeights {
    nodes: Vec<f64>,
    /// `weights[k]` maps samples on [-1, 1] to the k-th derivative at 0.
    weights: [Vec<f64>; 4],
}

fn chebyshev_row(s: f64) -> Vec<f64> {
    let mut t = vec![0.0; DEGREE + 1];
    t[0] = 1.0;
    t[1] = s;
    for j in 1..DEGREE {
        t[j + 1] = 2.0 * s * t[j] - t[j - 1];
    }
    t
}

/// `T_j^(k)(0)` for k = 0..3 from the differentiated three-term recurrence.
fn chebyshev_derivatives_at_zero() -> [Vec<f64>; 4] {
    let mut d: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; DEGREE + 1]);
    d[0][0] = 1.0;
    d[1][1] = 1.0;
    for j in 1..DEGREE {
        for k in 0..4 {
            let lower = if k > 0 { 2.0 * k as f64 * d[k - 1][j] } else { 0.0 };
            d[k][j + 1] = lower - d[k][j - 1];
        }
    }
    d
}

fn ray_weights() -> &'static RayWeights {
    static W: OnceLock<RayWeights> = OnceLock::new();
    W.get_or_init(|| {
        let nodes: Vec<f64> = (0..SAMPLES)
            .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / SAMPLES as f64).cos())
            .collect();
        let v = DMatrix::from_fn(SAMPLES, DEGREE + 1, |i, j| chebyshev_row(nodes[i])[j]);
        let pinv = v.pseudo_inverse(1e-14).expect("pseudo-inverse");
        let d = chebyshev_derivatives_at_zero();
        let weights = std::array::from_fn(|k| {
            (0..SAMPLES)
                .map(|i| (0..=DEGREE).map(|j| d[k][j] * pinv[(j, i)]).sum())
                .collect()
        });
        RayWeights { nodes, weights }
    })
}

/// Directions with entries in {-1, 0, 1}, one per sign pair.
fn directions() -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for a in -1i32..=1 {
        for b in -1i32..=1 {
            for c in -1i32..=1 {
                let u = [a, b, c];
                let first = u.iter().find(|&&x| x != 0);
                if first == Some(&1) {
                    out.push([a as f64, b as f64, c as f64]);
                }
            }
        }
    }
    out
}

fn multi_indices(k: usize) -> Vec<[usize; 3]> {
    let mut v = Vec::new();
    for p in 0..=k {
        for q in 0..=k - p {
            v.push([p, q, k - p - q]);
        }
    }
    v
}

/// Derivatives of orders 0..3 at 0 of `f` on [-1, 1], from the ray fit.
pub fn ray_derivatives(f: impl Fn(f64) -> f64) -> [f64; 4] {
    let w = ray_weights();
    let samples: Vec<f64> = w.nodes.iter().map(|&s| f(s)).collect();
    std::array::from_fn(|k| w.weights[k].iter().zip(&samples).map(|(a, b)| a * b).sum())
}

/// Taylor coefficients `c[p][q][r]` of the drain current about `bias`
/// (gate, drain, back-gate), for total order 1..3.
#[allow(clippy::needless_range_loop)]
pub fn oracle_coefficients(params: &DeviceParams, bias: [f64; 3]) -> [[[f64; 4]; 4]; 4] {
    let m = &params.model;
    let sg = 2.0 * m.n_slope * model_ut();
    let sb = if m.chi_mag > 0.0 { sg / m.chi_mag } else { sg };
    let scale = [sg, 1.0, sb];
    let dirs = directions();
    let sign = params.polarity().sign();
    let t0 = (sign * bias[0] - m.vt0 - m.dvt + m.chi_mag * sign * bias[2]) / sg;
    let reach0 = REACH * t0.hypot(std::f64::consts::PI);

    // Directional derivatives (u . grad)^k F / k! in scaled coordinates.
    let mut dd = vec![[0.0f64; 4]; dirs.len()];
    for (n, u) in dirs.iter().enumerate() {
        let reach = reach0 / (u[0].abs() + u[2].abs()).max(1.0);
        let raw = ray_derivatives(|s| {
            let y = [s * reach * u[0], s * reach * u[1], s * reach * u[2]];
            drain_current(
                params,
                bias[0] + y[0] * scale[0],
                bias[1] + y[1] * scale[1],
                bias[2] + y[2] * scale[2],
            )
            .unwrap()
        });
        let mut fact = 1.0;
        for (k, (slot, r)) in dd[n].iter_mut().zip(&raw).enumerate().skip(1) {
            fact *= k as f64;
            *slot = r / (reach.powi(k as i32) * fact);
        }
    }

    let mut c = [[[0.0; 4]; 4]; 4];
    for k in 1..4 {
        let idx = multi_indices(k);
        let a = DMatrix::from_fn(dirs.len(), idx.len(), |r, col| {
            let al = idx[col];
            (0..3).map(|ax| dirs[r][ax].powi(al[ax] as i32)).product()
        });
        let rhs = nalgebra::DVector::from_fn(dirs.len(), |r, _| dd[r][k]);
        let sol = a.svd(true, true).solve(&rhs, 1e-14).expect("polarization solve");
        for (col, al) in idx.iter().enumerate() {
            let s: f64 = (0..3).map(|ax| scale[ax].powi(al[ax] as i32)).product();
            c[al[0]][al[1]][al[2]] = sol[col] / s;
        }
    }
    c
}
