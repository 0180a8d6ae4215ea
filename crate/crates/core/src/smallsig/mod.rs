//! Small-signal analysis: closed-form gains, common-mode gain, CMRR and
//! noise, each paired with the nodal network oracle.
//!
//! Conductance sums follow the half-circuit view: for a complementary stage
//! the N and P input devices share input and output, so their g_m, g_ds and
//! g_mb simply add.

mod nodal;
mod noise;

pub use nodal::{nodal_oracle, NodalNetwork};
pub use noise::{noise_input_referred, noise_oracle, template_noise, NoiseDevice, NoiseReport};

use crate::circuits::{Circuit, Feedback, Kind, Topology};
use crate::dcsolve::OperatingPoint;
use crate::device::{derivatives, DerivativeSet};
use crate::error::{Error, Result};

/// Amplitude of the oracle stimuli (V). The network is linear, so this only
/// fixes the scale of intermediate values.
pub const STIMULUS: f64 = 1e-3;

/// Derivative sets of every device at `op`, in circuit order.
pub fn device_sets(circuit: &Circuit, op: &OperatingPoint, order: usize) -> Result<Vec<DerivativeSet>> {
    circuit
        .devices
        .iter()
        .zip(&op.device_biases)
        .map(|(d, b)| derivatives(&d.params, b, order))
        .collect()
}

/// Indices of the N and P input devices of one half circuit.
pub fn input_pair(kind: Kind) -> [usize; 2] {
    if kind.is_differential() {
        [0, 2]
    } else {
        [0, 1]
    }
}

fn sums(dsets: &[DerivativeSet]) -> (f64, f64, f64) {
    dsets.iter().fold((0.0, 0.0, 0.0), |(m, d, b), s| (m + s.g_m(1), d + s.g_ds(1), b + s.g_mb(1)))
}

/// Open-loop gain of a complementary stage, -(Σg_m)(r_o∥).
pub fn gain_ccs_ol(dsets: &[DerivativeSet]) -> Result<f64> {
    let (gm, gds, _) = sums(dsets);
    if gds == 0.0 {
        return Err(Error::unbounded("open-loop gain", "zero total output conductance"));
    }
    let ro = 1.0 / gds;
    Ok(-(gm * ro))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackGateGain {
    /// -(Σg_m)(r_o∥) / (1 + (Σg_mb)(r_o∥)).
    pub exact: f64,
    /// -Σg_m/Σg_mb; infinite without back-gate coupling.
    pub asymptote: f64,
    /// (exact - asymptote) / asymptote.
    pub gap: f64,
}

/// Gain of a complementary stage whose back gates sit on the output.
pub fn gain_ccs_bg(dsets: &[DerivativeSet]) -> Result<BackGateGain> {
    let (gm, gds, gmb) = sums(dsets);
    let asymptote = -gm / gmb;
    let exact = if gds == 0.0 {
        if gmb == 0.0 {
            return Err(Error::unbounded("back-gate gain", "zero total output conductance"));
        }
        asymptote
    } else {
        let ro = 1.0 / gds;
        -(gm * ro) / (1.0 + gmb * ro)
    };
    Ok(BackGateGain {
        exact,
        asymptote,
        gap: (exact - asymptote) / asymptote,
    })
}

fn need_differential(kind: Kind, dsets: &[DerivativeSet]) -> Result<()> {
    if !kind.is_differential() {
        return Err(Error::domain(format!("{} has no common-mode loop", kind.label())));
    }
    if dsets.len() < kind.device_count() {
        return Err(Error::domain(format!(
            "{} needs {} derivative sets",
            kind.label(),
            kind.device_count()
        )));
    }
    Ok(())
}

/// Common-mode gain: -g_m3,4/g_m5,6 with single CMFB,
/// -1/((g_m5,6 + g_m7,8)(r_o5,6 ∥ r_o7,8)) with dual CMFB.
pub fn cm_gain(kind: Kind, dsets: &[DerivativeSet]) -> Result<f64> {
    need_differential(kind, dsets)?;
    Ok(match kind {
        Kind::DiffScmfb => -dsets[2].g_m(1) / dsets[4].g_m(1),
        _ => {
            let ro = 1.0 / (dsets[4].g_ds(1) + dsets[6].g_ds(1));
            -1.0 / ((dsets[4].g_m(1) + dsets[6].g_m(1)) * ro)
        }
    })
}

/// Predicted CMRR improvement of dual over single CMFB,
/// (g_m3,4/g_m5,6)(g_m5,6 + g_m7,8)(r_o5,6 ∥ r_o7,8).
pub fn cmrr_ratio(scmfb: &[DerivativeSet], dcmfb: &[DerivativeSet]) -> Result<f64> {
    need_differential(Kind::DiffScmfb, scmfb)?;
    need_differential(Kind::DiffDcmfb, dcmfb)?;
    let ro = 1.0 / (dcmfb[4].g_ds(1) + dcmfb[6].g_ds(1));
    Ok(scmfb[2].g_m(1) / scmfb[4].g_m(1) * (dcmfb[4].g_m(1) + dcmfb[6].g_m(1)) * ro)
}

fn drive(t: &Topology, op: &OperatingPoint, stim: &[(&str, f64)], observe: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let c = &t.circuit;
    let net = NodalNetwork::from_op(c, op)?;
    let mut s = vec![0.0; c.sources.len()];
    for (name, v) in stim {
        let k = c
            .source_index(name)
            .ok_or_else(|| Error::Topology(format!("no source named '{name}'")))?;
        s[k] = *v;
    }
    let v = net.solve(&s, &[])?;
    Ok(observe(&v))
}

fn node(t: &Topology, name: &str) -> Result<usize> {
    t.circuit
        .node(name)
        .ok_or_else(|| Error::Topology(format!("no node named '{name}'")))
}

/// Differential-mode gain from the nodal oracle: (v_o1 - v_o2)/v_id for
/// differential stages, v_out/v_in for complementary stages.
pub fn dm_gain_oracle(t: &Topology, op: &OperatingPoint) -> Result<f64> {
    if t.kind.is_differential() {
        let (o1, o2) = (node(t, "out1")?, node(t, "out2")?);
        drive(t, op, &[("VIN1", 0.5 * STIMULUS), ("VIN2", -0.5 * STIMULUS)], |v| {
            (v[o1] - v[o2]) / STIMULUS
        })
    } else {
        let o = node(t, "out")?;
        drive(t, op, &[("VIN", STIMULUS)], |v| v[o] / STIMULUS)
    }
}

/// Common-mode gain from the nodal oracle: output common mode over an
/// in-phase input step on both gates.
pub fn cm_gain_oracle(t: &Topology, op: &OperatingPoint) -> Result<f64> {
    if !t.kind.is_differential() {
        return Err(Error::domain(format!("{} has no common-mode loop", t.kind.label())));
    }
    let (o1, o2) = (node(t, "out1")?, node(t, "out2")?);
    drive(t, op, &[("VIN1", STIMULUS), ("VIN2", STIMULUS)], |v| {
        0.5 * (v[o1] + v[o2]) / STIMULUS
    })
}

pub fn cmrr_db(a_dm: f64, a_cm: f64) -> f64 {
    20.0 * (a_dm / a_cm).abs().log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallSignalReport {
    /// Differential (or single-ended) gain from the nodal oracle.
    pub a_v_dm: f64,
    /// Closed form for the topology's feedback mode (exact form).
    pub a_v_dm_closed: f64,
    /// -Σg_m/Σg_mb; `None` in open loop.
    pub a_v_dm_asymptote: Option<f64>,
    /// Common-mode gain from the oracle (differential stages only).
    pub a_v_cm: Option<f64>,
    pub a_v_cm_closed: Option<f64>,
    /// From the oracle gains.
    pub cmrr_db: Option<f64>,
    pub gm_total: f64,
    pub gmb_total: f64,
    pub ro_parallel: f64,
    /// Back-gate loop gain (Σg_mb)(r_o∥).
    pub loop_quantity: f64,
}

pub fn small_signal_report(t: &Topology, op: &OperatingPoint) -> Result<SmallSignalReport> {
    let sets = device_sets(&t.circuit, op, 1)?;
    let [a, b] = input_pair(t.kind);
    let half = [sets[a], sets[b]];
    let (gm, gds, gmb) = sums(&half);
    let ro = 1.0 / gds;
    let (closed, asym) = match t.feedback {
        Feedback::OpenLoop => (gain_ccs_ol(&half)?, None),
        Feedback::BackGate => {
            let g = gain_ccs_bg(&half)?;
            (g.exact, Some(g.asymptote))
        }
    };
    let a_v_dm = dm_gain_oracle(t, op)?;
    let (a_v_cm, a_v_cm_closed) = if t.kind.is_differential() {
        (Some(cm_gain_oracle(t, op)?), Some(cm_gain(t.kind, &sets)?))
    } else {
        (None, None)
    };
    Ok(SmallSignalReport {
        a_v_dm,
        a_v_dm_closed: closed,
        a_v_dm_asymptote: asym,
        cmrr_db: a_v_cm.map(|cm| cmrr_db(a_v_dm, cm)),
        a_v_cm,
        a_v_cm_closed,
        gm_total: gm,
        gmb_total: gmb,
        ro_parallel: ro,
        loop_quantity: gmb * ro,
    })
}
