//! Smooth EKV-style MOSFET model with a back-gate terminal.
//!
//! Drain current of an N device, with all voltages source-referenced:
//!
//! ```text
//! I_DS = I_spec * ln(1 + exp(u/2))^2 * C(v_ds)
//! u    = (v_gs - vt_eff) / (n * U_T)
//! vt_eff = vt0 + dvt - chi * v_bs
//! C(v) = 1 + lambda * (v + v^3 / (3 * vclm^2)),  lambda = lambda0 / L
//! I_spec = 2 * n * kprime * (W/L) * U_T^2
//! ```
//!
//! The back gate is a pure linear threshold shift, so every back-gate
//! partial is the matching front-gate partial scaled by `chi^k`. P devices
//! are evaluated by flipping the sign of every terminal voltage and of the
//! returned current.
//!
//! All partials are closed-form. The current factors into a gate part
//! `A(v_gs + chi*v_bs)` and a drain part `C(v_ds)`, which makes every
//! mixed derivative a product of one-dimensional ones.

use crate::error::{Error, Result};

pub const BOLTZMANN: f64 = 1.380649e-23;
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;
/// Temperature at which the model's thermal voltage is fixed.
pub const MODEL_TEMPERATURE: f64 = 300.0;

/// kT/q in volts.
pub fn thermal_voltage(temperature: f64) -> f64 {
    BOLTZMANN * temperature / ELEMENTARY_CHARGE
}

/// Thermal voltage used by the compact model (25.85 mV).
pub fn model_ut() -> f64 {
    thermal_voltage(MODEL_TEMPERATURE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    N,
    P,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::N => 1.0,
            Polarity::P => -1.0,
        }
    }
}

/// Process parameters shared by every instance of a `.model` card.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCard {
    pub polarity: Polarity,
    /// Threshold magnitude at zero back-gate bias (V).
    pub vt0: f64,
    /// Process transconductance mu*C_ox (A/V^2).
    pub kprime: f64,
    /// Subthreshold slope factor.
    pub n_slope: f64,
    /// Channel-length modulation coefficient (1/V * um); lambda = lambda0 / L.
    pub lambda0: f64,
    /// Curvature voltage of the channel-length modulation term (V).
    /// `f64::INFINITY` gives the linear `1 + lambda*v_ds` law.
    pub vclm: f64,
    /// Back-gate coupling magnitude g_mb/g_m = (C_box || C_Si) / C_ox.
    pub chi_mag: f64,
    /// Thermal noise factor.
    pub gamma_noise: f64,
    /// Flicker coefficient K (V^2 F).
    pub k_flicker: f64,
    /// Gate oxide capacitance per area (F/m^2).
    pub cox_area: f64,
    /// Threshold offset added on top of vt0 (V).
    pub dvt: f64,
}

impl ModelCard {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("vt0", self.vt0),
            ("kprime", self.kprime),
            ("n", self.n_slope),
            ("lambda0", self.lambda0),
            ("chi", self.chi_mag),
            ("gamma", self.gamma_noise),
            ("kf", self.k_flicker),
            ("cox", self.cox_area),
            ("dvt", self.dvt),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::domain(format!("model parameter {name} is not finite")));
            }
        }
        if self.kprime <= 0.0 {
            return Err(Error::domain("kprime must be positive"));
        }
        if self.n_slope < 1.0 {
            return Err(Error::domain("slope factor n must be >= 1"));
        }
        if self.lambda0 < 0.0 {
            return Err(Error::domain("lambda0 must be non-negative"));
        }
        if self.vclm.is_nan() || self.vclm <= 0.0 {
            return Err(Error::domain("vclm must be positive"));
        }
        // chi = 0 is accepted as the no-coupling limit.
        if !(0.0..1.0).contains(&self.chi_mag) {
            return Err(Error::domain("chi must lie in [0, 1)"));
        }
        if self.gamma_noise < 0.0 || self.k_flicker < 0.0 || self.cox_area <= 0.0 {
            return Err(Error::domain("noise parameters out of range"));
        }
        Ok(())
    }

    /// 1 / (n U_T), the weak-inversion ceiling of g_m/I_D.
    pub fn gm_over_id_ceiling(&self) -> f64 {
        1.0 / (self.n_slope * model_ut())
    }
}

/// A model card bound to an instance geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    pub model: ModelCard,
    /// Channel width (um).
    pub width: f64,
    /// Channel length (um).
    pub length: f64,
}

impl DeviceParams {
    pub fn new(model: ModelCard, width: f64, length: f64) -> Self {
        Self {
            model,
            width,
            length,
        }
    }

    pub fn polarity(&self) -> Polarity {
        self.model.polarity
    }

    pub fn lambda(&self) -> f64 {
        self.model.lambda0 / self.length
    }

    pub fn aspect(&self) -> f64 {
        self.width / self.length
    }

    /// Gate area in m^2.
    pub fn area_m2(&self) -> f64 {
        self.width * 1e-6 * self.length * 1e-6
    }

    pub fn i_spec(&self) -> f64 {
        let ut = model_ut();
        2.0 * self.model.n_slope * self.model.kprime * self.aspect() * ut * ut
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::domain("width must be positive"));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::domain("length must be positive"));
        }
        Ok(())
    }
}

/// Terminal bias of one device, source-referenced and signed as applied
/// (a P device in saturation has negative `vgs`, `vds` and `ids`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasTuple {
    pub vgs: f64,
    pub vds: f64,
    pub vbs: f64,
    pub ids: f64,
}

impl BiasTuple {
    /// Builds a self-consistent bias by evaluating the model.
    pub fn at(params: &DeviceParams, vgs: f64, vds: f64, vbs: f64) -> Result<Self> {
        let ids = drain_current(params, vgs, vds, vbs)?;
        Ok(Self { vgs, vds, vbs, ids })
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Gate-side factor A(v) and its first three derivatives with respect to
/// the gate drive.
fn gate_factor(params: &DeviceParams, drive: f64) -> [f64; 4] {
    let m = &params.model;
    let k = 1.0 / (2.0 * m.n_slope * model_ut());
    let t = drive * k;
    let l = softplus(t);
    let s = sigmoid(t);
    let sc = sigmoid(-t);
    let l1 = s;
    let l2 = s * sc;
    let l3 = s * sc * (sc - s);
    let g0 = l * l;
    let g1 = 2.0 * l * l1;
    let g2 = 2.0 * (l1 * l1 + l * l2);
    let g3 = 2.0 * (3.0 * l1 * l2 + l * l3);
    let is = params.i_spec();
    [is * g0, is * g1 * k, is * g2 * k * k, is * g3 * k * k * k]
}

/// Drain-side factor C(v) and its first three derivatives.
fn drain_factor(params: &DeviceParams, vds: f64) -> [f64; 4] {
    let lam = params.lambda();
    let inv_v2 = 1.0 / (params.model.vclm * params.model.vclm);
    [
        1.0 + lam * (vds + vds * vds * vds * inv_v2 / 3.0),
        lam * (1.0 + vds * vds * inv_v2),
        2.0 * lam * vds * inv_v2,
        2.0 * lam * inv_v2,
    ]
}

/// Back-gate bias as seen by the model after polarity normalization.
fn normalized(params: &DeviceParams, vgs: f64, vds: f64, vbs: f64) -> (f64, f64, f64) {
    let s = params.polarity().sign();
    (s * vgs, s * vds, s * vbs)
}

fn gate_drive(m: &ModelCard, vgs: f64, vbs: f64) -> f64 {
    // Grouping keeps the drive bit-identical when dvt cancels chi*vbs.
    vgs - (m.vt0 + (m.dvt - m.chi_mag * vbs))
}

/// Threshold offset that exactly cancels the back-gate shift at the given
/// (signed) back-gate bias.
pub fn cancelling_offset(params: &DeviceParams, vbs: f64) -> f64 {
    params.model.chi_mag * (params.polarity().sign() * vbs)
}

fn check_finite(vgs: f64, vds: f64, vbs: f64) -> Result<()> {
    if vgs.is_finite() && vds.is_finite() && vbs.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("non-finite terminal voltage"))
    }
}

/// Drain-to-source current in amps (signed; negative for a conducting P device).
pub fn drain_current(params: &DeviceParams, vgs: f64, vds: f64, vbs: f64) -> Result<f64> {
    check_finite(vgs, vds, vbs)?;
    Ok(drain_current_unchecked(params, vgs, vds, vbs))
}

pub(crate) fn drain_current_unchecked(params: &DeviceParams, vgs: f64, vds: f64, vbs: f64) -> f64 {
    let (g, d, b) = normalized(params, vgs, vds, vbs);
    let a = gate_factor(params, gate_drive(&params.model, g, b))[0];
    let c = drain_factor(params, d)[0];
    params.polarity().sign() * a * c
}

/// Normalized Taylor coefficients of the drain current,
/// `coefficient(p, q, r) = 1/(p! q! r!) * d^(p+q+r) I / dv_gs^p dv_ds^q dv_bs^r`,
/// for total order up to 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeSet {
    order: usize,
    coeffs: [[[f64; 4]; 4]; 4],
}

const FACT: [f64; 4] = [1.0, 1.0, 2.0, 6.0];

impl DerivativeSet {
    /// All-zero set of the given order.
    pub fn zero(order: usize) -> Self {
        Self {
            order: order.min(3),
            coeffs: [[[0.0; 4]; 4]; 4],
        }
    }

    /// First-order set from the three small-signal conductances.
    pub fn linear(gm: f64, gds: f64, gmb: f64) -> Self {
        let mut d = Self::zero(1);
        d.coeffs[1][0][0] = gm;
        d.coeffs[0][1][0] = gds;
        d.coeffs[0][0][1] = gmb;
        d
    }

    /// Sets one coefficient; `(p, q, r)` index gate, drain and back-gate order.
    pub fn with(mut self, p: usize, q: usize, r: usize, value: f64) -> Self {
        assert!(p + q + r <= 3, "total order above 3");
        self.coeffs[p][q][r] = value;
        self.order = self.order.max(p + q + r);
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficient(&self, p: usize, q: usize, r: usize) -> f64 {
        if p + q + r > self.order {
            return 0.0;
        }
        self.coeffs[p][q][r]
    }

    /// Drain current at the expansion point.
    pub fn ids(&self) -> f64 {
        self.coeffs[0][0][0]
    }

    /// g_mk
    pub fn g_m(&self, k: usize) -> f64 {
        self.coefficient(k, 0, 0)
    }

    /// g_dsk
    pub fn g_ds(&self, k: usize) -> f64 {
        self.coefficient(0, k, 0)
    }

    /// g_mbk
    pub fn g_mb(&self, k: usize) -> f64 {
        self.coefficient(0, 0, k)
    }

    /// Gate/drain cross term x_pq.
    pub fn x(&self, p: usize, q: usize) -> f64 {
        self.coefficient(p, q, 0)
    }

    /// Back-gate/drain cross term y_pq.
    pub fn y(&self, p: usize, q: usize) -> f64 {
        self.coefficient(0, q, p)
    }

    /// Gate/back-gate cross term, gate order `p`, back-gate order `r`.
    pub fn z(&self, p: usize, r: usize) -> f64 {
        self.coefficient(p, 0, r)
    }

    /// Every `(p, q, r)` index with `1 <= p+q+r <= order`.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize, usize)> {
        let order = self.order;
        (0..=3usize).flat_map(move |p| {
            (0..=3usize).flat_map(move |q| {
                (0..=3usize).filter_map(move |r| {
                    let t = p + q + r;
                    (t >= 1 && t <= order).then_some((p, q, r))
                })
            })
        })
    }

    /// Elementwise sum.
    pub fn add(&self, other: &DerivativeSet) -> DerivativeSet {
        let mut out = DerivativeSet::zero(self.order.max(other.order));
        for p in 0..4 {
            for q in 0..4 {
                for r in 0..4 {
                    out.coeffs[p][q][r] = self.coeffs[p][q][r] + other.coeffs[p][q][r];
                }
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> DerivativeSet {
        let mut out = *self;
        for p in 0..4 {
            for q in 0..4 {
                for r in 0..4 {
                    out.coeffs[p][q][r] *= factor;
                }
            }
        }
        out
    }
}

/// Partial derivatives of the drain current at `bias`, up to total `order`.
pub fn derivatives(params: &DeviceParams, bias: &BiasTuple, order: usize) -> Result<DerivativeSet> {
    if !(1..=3).contains(&order) {
        return Err(Error::domain(format!("derivative order {order} outside 1..3")));
    }
    check_finite(bias.vgs, bias.vds, bias.vbs)?;
    let m = &params.model;
    let (g, d, b) = normalized(params, bias.vgs, bias.vds, bias.vbs);
    let a = gate_factor(params, gate_drive(m, g, b));
    let c = drain_factor(params, d);
    let sign = params.polarity().sign();
    let chi = m.chi_mag;

    let mut set = DerivativeSet::zero(order);
    for p in 0..=3usize {
        for q in 0..=(3 - p) {
            for r in 0..=(3 - p - q) {
                if p + q + r > order {
                    continue;
                }
                let flip = if (p + q + r) % 2 == 0 { sign } else { 1.0 };
                let v = chi.powi(r as i32) * a[p + r] * c[q] / (FACT[p] * FACT[q] * FACT[r]);
                set.coeffs[p][q][r] = flip * v;
            }
        }
    }
    Ok(set)
}

/// Output resistance 1/g_ds1.
pub fn ro(dset: &DerivativeSet) -> Result<f64> {
    let g = dset.g_ds(1);
    if g == 0.0 {
        return Err(Error::unbounded("output resistance", "g_ds1 = 0"));
    }
    Ok(1.0 / g)
}
