//! Bias design: g_m/I_D targeting and template sizing.
//!
//! The input devices of every template are placed at a common
//! gate drive set by the g_m/I_D target. Supplies, input common mode and
//! CMFB widths are then chosen so that the designed node voltages are an
//! exact DC solution: drain current is linear in W, so each CMFB width
//! follows from one model evaluation.
//!
//! Differential stages keep each input device at V_DS = V_GS (outputs sit
//! at the input common mode) and give every tail device `tail_headroom`
//! volts of V_DS.

use super::topology::{build_topology_with, Feedback, Kind, Supplies, Topology};
use crate::device::{drain_current, DeviceParams};
use crate::error::{Error, Result};

/// Gate bias that realizes a g_m/I_D target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmIdBias {
    /// Signed as applied to the device (negative for P).
    pub vgs: f64,
    pub vds: f64,
    pub ids: f64,
    pub gm_over_id: f64,
}

/// Magnitude of the drain current with all voltages in the device's own
/// (polarity-normalized) convention.
fn current(p: &DeviceParams, vgs: f64, vds: f64, vbs: f64) -> f64 {
    let s = p.polarity().sign();
    drain_current(p, s * vgs, s * vds, s * vbs).map(f64::abs).unwrap_or(f64::NAN)
}

fn gm_over_id_at(p: &DeviceParams, vgs: f64, vds: f64) -> f64 {
    let s = p.polarity().sign();
    let bias = crate::device::BiasTuple::at(p, s * vgs, s * vds, 0.0).expect("finite bias");
    let d = crate::device::derivatives(p, &bias, 1).expect("order 1");
    d.g_m(1) / bias.ids.abs()
}

/// Finds V_GS (back gate at the source, V_DS at mid-supply) where
/// g_m/I_D equals `target` to better than 0.1%.
pub fn gm_over_id_bias(target: f64, params: &DeviceParams, supplies: Supplies) -> Result<GmIdBias> {
    params.validate()?;
    let ceiling = params.model.gm_over_id_ceiling();
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::domain("g_m/I_D target must be positive"));
    }
    if target >= ceiling {
        return Err(Error::domain(format!(
            "g_m/I_D target {target} S/A is at or above the weak-inversion ceiling 1/(n U_T) = {ceiling:.4} S/A"
        )));
    }
    let vds = 0.5 * supplies.span();
    let vt = params.model.vt0 + params.model.dvt;
    let step = 2.0 * params.model.n_slope * crate::device::model_ut();
    // g_m/I_D falls monotonically with gate drive.
    let (mut lo, mut hi) = (vt - 60.0 * step, vt + 2.0 * supplies.span());
    if gm_over_id_at(params, hi, vds) > target {
        return Err(Error::domain(format!(
            "g_m/I_D target {target} S/A needs more than {hi:.3} V of gate drive"
        )));
    }
    if gm_over_id_at(params, lo, vds) < target {
        return Err(Error::domain(format!("g_m/I_D target {target} S/A is not reachable")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gm_over_id_at(params, mid, vds) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let vgs = 0.5 * (lo + hi);
    let s = params.polarity().sign();
    Ok(GmIdBias {
        vgs: s * vgs,
        vds: s * vds,
        ids: s * current(params, vgs, vds, 0.0),
        gm_over_id: gm_over_id_at(params, vgs, vds),
    })
}

/// Inputs to [`design_amplifier`].
#[derive(Debug, Clone, PartialEq)]
pub struct AmplifierSpec {
    pub kind: Kind,
    pub feedback: Feedback,
    pub n: DeviceParams,
    pub p: DeviceParams,
    /// Target g_m/I_D of the N input device (S/A).
    pub gm_over_id: f64,
    /// V_DS given to each CMFB device (V).
    pub tail_headroom: f64,
}

pub const DEFAULT_GM_OVER_ID: f64 = 15.0;
pub const DEFAULT_TAIL_HEADROOM: f64 = 0.2;

impl AmplifierSpec {
    pub fn new(kind: Kind, feedback: Feedback, n: DeviceParams, p: DeviceParams) -> Self {
        Self {
            kind,
            feedback,
            n,
            p,
            gm_over_id: DEFAULT_GM_OVER_ID,
            tail_headroom: DEFAULT_TAIL_HEADROOM,
        }
    }

    pub fn gm_over_id(mut self, target: f64) -> Self {
        self.gm_over_id = target;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub topology: Topology,
    /// Designed node voltages, indexed by node id; an exact DC solution
    /// up to rounding, used to seed the solver.
    pub guess: Vec<f64>,
    /// Designed drain current of each input device (magnitude, A).
    pub ids: f64,
    /// Polarity-normalized V_GS of the N and P input devices.
    pub input_vgs: (f64, f64),
}

/// Solves `f(x) = target` for increasing `f` on `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    if !(f(lo) <= target && f(hi) >= target) {
        return Err(Error::domain("design target outside the searchable bias range"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sizes and biases a template for the g_m/I_D target.
pub fn design_amplifier(spec: &AmplifierSpec) -> Result<Design> {
    let (n, p) = (&spec.n, &spec.p);
    let h = spec.tail_headroom;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain("tail headroom must be positive"));
    }
    let bias = gm_over_id_bias(spec.gm_over_id, n, Supplies::new(2.0))?;
    let chi_n = n.model.chi_mag;
    // Gate drive at zero back-gate bias; the threshold shifts by -chi*vbs.
    let a_n = bias.vgs;
    let bg = spec.feedback == Feedback::BackGate;
    let diff = spec.kind.is_differential();
    let dual = spec.kind == Kind::DiffDcmfb;
    let src_n = if diff { h } else { 0.0 };

    // N input: V_DS = V_GS; back gate at the output (= drain) or at ground.
    let vgs_n = if bg { a_n / (1.0 + chi_n) } else { a_n + chi_n * src_n };
    let vbs_n = if bg { vgs_n } else { -src_n };
    let ids = current(n, vgs_n, vgs_n, vbs_n);

    // P input carries the same current, again with V_DS = V_GS.
    let p_vbs = |v: f64| -> f64 {
        match (bg, dual) {
            (true, _) => v,
            (false, false) => 0.0,
            (false, true) => -h,
        }
    };
    let hi = a_n.abs() + 2.0;
    let vgs_p = bisect(|v| current(p, v, v, p_vbs(v)), ids, 0.0, hi)?;

    let v_in = src_n + vgs_n;
    let p_src = v_in + vgs_p;
    let vdd = if dual { p_src + h } else { p_src };
    let supplies = Supplies::new(vdd);

    let (cmfb_n, cmfb_p) = if diff {
        let mut cn = n.clone();
        let unit = current(&cn, v_in, h, 0.0);
        cn.width *= ids / unit;
        let cp = if dual {
            let mut cp = p.clone();
            let unit = current(&cp, vdd - v_in, h, 0.0);
            cp.width *= ids / unit;
            Some(cp)
        } else {
            None
        };
        for c in std::iter::once(&cn).chain(cp.as_ref()) {
            if !(c.width.is_finite() && c.width > 0.0) {
                return Err(Error::domain("CMFB width could not be sized"));
            }
        }
        (Some(cn), cp)
    } else {
        (None, None)
    };

    let topology = build_topology_with(
        spec.kind,
        spec.feedback,
        n,
        p,
        cmfb_n.as_ref(),
        cmfb_p.as_ref(),
        supplies,
        v_in,
    )?;
    let c = &topology.circuit;
    let mut guess = vec![0.0; c.node_count()];
    for (name, v) in [
        ("vdd", vdd),
        ("in", v_in),
        ("out", v_in),
        ("in1", v_in),
        ("in2", v_in),
        ("out1", v_in),
        ("out2", v_in),
        ("tn", h),
        ("tp", vdd - h),
    ] {
        if let Some(id) = c.node(name) {
            guess[id] = v;
        }
    }
    Ok(Design {
        topology,
        guess,
        ids,
        input_vgs: (vgs_n, vgs_p),
    })
}
