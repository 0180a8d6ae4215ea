//! Default model cards and geometry.
//!
//! The N and P cards are exact mirrors of each other so that a
//! complementary stage biased at half the supply is symmetric.

use crate::device::{DeviceParams, ModelCard, Polarity};

pub const DEFAULT_VDD: f64 = 1.8;
pub const DEFAULT_WIDTH: f64 = 2.0;
pub const DEFAULT_LENGTH: f64 = 1.0;
pub const DEFAULT_CHI: f64 = 0.2;

pub fn nfet() -> ModelCard {
    ModelCard {
        polarity: Polarity::N,
        vt0: 0.45,
        kprime: 300e-6,
        n_slope: 1.3,
        lambda0: 0.02,
        vclm: 2.0,
        chi_mag: DEFAULT_CHI,
        gamma_noise: 0.8,
        k_flicker: 1e-25,
        cox_area: 8.6e-3,
        dvt: 0.0,
    }
}

pub fn pfet() -> ModelCard {
    ModelCard {
        polarity: Polarity::P,
        ..nfet()
    }
}

/// Default N/P device pair at channel length `length` (um).
pub fn pair(length: f64) -> (DeviceParams, DeviceParams) {
    (
        DeviceParams::new(nfet(), DEFAULT_WIDTH, length),
        DeviceParams::new(pfet(), DEFAULT_WIDTH, length),
    )
}

/// Applies a coupling ratio to both cards of a pair.
pub fn with_chi(mut pair: (DeviceParams, DeviceParams), chi: f64) -> (DeviceParams, DeviceParams) {
    pair.0.model.chi_mag = chi;
    pair.1.model.chi_mag = chi;
    pair
}
