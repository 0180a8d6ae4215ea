//! Independent numerical oracles shared by the integration tests.
//!
//! Nothing here calls into the closed-form derivative or small-signal code;
//! every reference value is built from `drain_current` or from solved
//! operating points only.

#![allow(dead_code)]

pub mod corpus;
pub mod fd;

use bgamp::device::{DeviceParams, ModelCard, Polarity};
use rand::Rng;

/// Every (p, q, r) with 1 <= p+q+r <= 3.
pub fn all_orders() -> Vec<[usize; 3]> {
    let mut v = Vec::new();
    for p in 0..=3 {
        for q in 0..=3 - p {
            for r in 0..=3 - p - q {
                if p + q + r >= 1 {
                    v.push([p, q, r]);
                }
            }
        }
    }
    v
}

/// Random model card and geometry over the supported parameter box.
pub fn random_device(rng: &mut impl Rng) -> DeviceParams {
    let polarity = if rng.gen_bool(0.5) { Polarity::N } else { Polarity::P };
    let card = ModelCard {
        polarity,
        vt0: rng.gen_range(0.25..0.65),
        kprime: rng.gen_range(100e-6..400e-6),
        n_slope: rng.gen_range(1.05..1.6),
        lambda0: rng.gen_range(0.0..0.05),
        vclm: rng.gen_range(0.5..5.0),
        chi_mag: rng.gen_range(0.05..0.5),
        gamma_noise: rng.gen_range(0.5..1.5),
        k_flicker: 1e-25,
        cox_area: 8.6e-3,
        dvt: 0.0,
    };
    let length = rng.gen_range(0.1..2.0);
    let aspect = rng.gen_range(1.0..20.0);
    DeviceParams::new(card, aspect * length, length)
}

/// Random bias in the device's own sign convention.
pub fn random_bias(rng: &mut impl Rng, params: &DeviceParams) -> [f64; 3] {
    let s = params.polarity().sign();
    let vt = params.model.vt0;
    [
        s * rng.gen_range(vt - 0.3..vt + 0.6),
        s * rng.gen_range(0.05..1.8),
        s * rng.gen_range(-0.5..1.0),
    ]
}

/// Least-squares slope of y against x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
