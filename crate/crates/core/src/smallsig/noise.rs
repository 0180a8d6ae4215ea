//! Input-referred noise of a complementary stage.
//!
//! Each device contributes a drain current noise of 4kTγg_m plus a flicker
//! term g_m²K/(C_ox W L f); referred to the input through the summed
//! transconductance of the pair. The device model itself stays at its
//! fixed temperature; `temperature` only sets kT in the thermal term.

use super::{dm_gain_oracle, input_pair, NodalNetwork};
use crate::circuits::Topology;
use crate::dcsolve::OperatingPoint;
use crate::device::{derivatives, DerivativeSet, DeviceParams, BOLTZMANN};
use crate::error::{Error, Result};

/// Noise parameters and small-signal state of one device.
#[derive(Debug, Clone, Copy)]
pub struct NoiseDevice<'a> {
    pub params: &'a DeviceParams,
    pub dset: &'a DerivativeSet,
}

impl NoiseDevice<'_> {
    /// Drain current noise PSD (A²/Hz).
    fn current_psd(&self, f: f64, temperature: f64) -> f64 {
        let gm = self.dset.g_m(1);
        let m = &self.params.model;
        4.0 * BOLTZMANN * temperature * m.gamma_noise * gm + gm * gm * m.k_flicker / (m.cox_area * self.params.area_m2() * f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReport {
    /// (frequency Hz, input-referred PSD V²/Hz).
    pub psd: Vec<(f64, f64)>,
    /// Frequency-independent part (V²/Hz).
    pub thermal_floor: f64,
    pub temperature: f64,
}

fn check_freqs(freqs: &[f64]) -> Result<()> {
    if freqs.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
        return Err(Error::domain("noise frequencies must be positive and finite"));
    }
    Ok(())
}

/// Input-referred noise PSD,
/// 4kT(Σγg_m)/(Σg_m)² + [Σ g_m²K/(C_ox W L)] / ((Σg_m)² f),
/// doubled for a differential stage.
pub fn noise_input_referred(
    devices: &[NoiseDevice<'_>],
    freqs: &[f64],
    differential: bool,
    temperature: f64,
) -> Result<NoiseReport> {
    check_freqs(freqs)?;
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::domain("temperature must be positive"));
    }
    let gm: f64 = devices.iter().map(|d| d.dset.g_m(1)).sum();
    if gm == 0.0 {
        return Err(Error::domain("zero total transconductance: noise cannot be input-referred"));
    }
    let gm2 = gm * gm;
    let thermal: f64 = devices.iter().map(|d| d.params.model.gamma_noise * d.dset.g_m(1)).sum();
    let flicker: f64 = devices
        .iter()
        .map(|d| {
            let g = d.dset.g_m(1);
            let m = &d.params.model;
            g * g * m.k_flicker / (m.cox_area * d.params.area_m2())
        })
        .sum();
    let flicker_at = |f: f64| flicker / (gm2 * f);
    let scale = if differential { 2.0 } else { 1.0 };
    let thermal_floor = scale * (4.0 * BOLTZMANN * temperature * thermal / gm2);
    let psd = freqs
        .iter()
        .map(|&f| (f, scale * (4.0 * BOLTZMANN * temperature * thermal / gm2 + flicker_at(f))))
        .collect();
    Ok(NoiseReport {
        psd,
        thermal_floor,
        temperature,
    })
}

/// Independent reference: every device's drain noise is injected into the
/// linearized network, the output PSDs are summed and divided by the
/// squared oracle gain.
pub fn noise_oracle(t: &Topology, op: &OperatingPoint, freqs: &[f64], temperature: f64) -> Result<Vec<f64>> {
    check_freqs(freqs)?;
    let c = &t.circuit;
    let net = NodalNetwork::from_op(c, op)?;
    let gain = dm_gain_oracle(t, op)?;
    let zero = vec![0.0; c.sources.len()];
    let outputs: Vec<usize> = t.output_nodes().iter().filter_map(|n| c.node(n)).collect();
    let mut transfer = Vec::with_capacity(c.devices.len());
    for d in &c.devices {
        let v = net.solve(&zero, &[(d.drain, -1.0), (d.source, 1.0)])?;
        let z = if outputs.len() == 2 {
            v[outputs[0]] - v[outputs[1]]
        } else {
            v[outputs[0]]
        };
        transfer.push(z);
    }
    let mut sets = Vec::with_capacity(c.devices.len());
    for (d, b) in c.devices.iter().zip(&op.device_biases) {
        sets.push(derivatives(&d.params, b, 1)?);
    }
    Ok(freqs
        .iter()
        .map(|&f| {
            let out: f64 = c
                .devices
                .iter()
                .zip(&sets)
                .zip(&transfer)
                .map(|((d, s), z)| {
                    let nd = NoiseDevice {
                        params: &d.params,
                        dset: s,
                    };
                    z * z * nd.current_psd(f, temperature)
                })
                .sum();
            out / (gain * gain)
        })
        .collect())
}

/// Closed-form noise of a template's input pair at `op`.
pub fn template_noise(t: &Topology, op: &OperatingPoint, freqs: &[f64], temperature: f64) -> Result<NoiseReport> {
    let [a, b] = input_pair(t.kind);
    let c = &t.circuit;
    let sa = derivatives(&c.devices[a].params, &op.device_biases[a], 1)?;
    let sb = derivatives(&c.devices[b].params, &op.device_biases[b], 1)?;
    let devs = [
        NoiseDevice {
            params: &c.devices[a].params,
            dset: &sa,
        },
        NoiseDevice {
            params: &c.devices[b].params,
            dset: &sb,
        },
    ];
    noise_input_referred(&devs, freqs, t.kind.is_differential(), temperature)
}
