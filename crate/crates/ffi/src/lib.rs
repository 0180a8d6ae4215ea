//! C ABI over `bgamp`.
//!
//! Circuits and operating points are opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns
//! a [`BgampStatus`]; on failure the message is kept per thread and can be
//! read with [`bgamp_last_error`]. Panics never cross the boundary.

use bgamp::cards;
use bgamp::circuits::{design_amplifier, parse_netlist, AmplifierSpec, Circuit, Feedback, Kind, Topology};
use bgamp::dcsolve::{solve_op, OperatingPoint};
use bgamp::device::{self, BiasTuple, DeviceParams, ModelCard, Polarity};
use bgamp::smallsig::small_signal_report;
use bgamp::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgampStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Unbounded = 4,
    Syntax = 5,
    Topology = 6,
    Convergence = 7,
    Singular = 8,
    Fit = 9,
    BiasMatch = 10,
    Io = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgampPolarity {
    N = 0,
    P = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgampKind {
    CcsOl = 0,
    CcsBg = 1,
    DiffScmfb = 2,
    DiffDcmfb = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgampFeedback {
    OpenLoop = 0,
    BackGate = 1,
}

/// Model card plus geometry. Lengths and widths in um.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BgampDeviceParams {
    pub polarity: BgampPolarity,
    pub vt0: f64,
    pub kprime: f64,
    pub n_slope: f64,
    pub lambda0: f64,
    pub vclm: f64,
    pub chi_mag: f64,
    pub gamma_noise: f64,
    pub k_flicker: f64,
    pub cox_area: f64,
    pub dvt: f64,
    pub width: f64,
    pub length: f64,
}

/// Normalized Taylor coefficients, `coeffs[p][q][r]` for
/// d^(p+q+r) I / dv_gs^p dv_ds^q dv_bs^r / (p! q! r!), total order <= 3.
/// `coeffs[0][0][0]` is the drain current.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BgampDerivatives {
    pub coeffs: [[[f64; 4]; 4]; 4],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BgampGain {
    /// Differential (single-ended for CCS) gain from the nodal network.
    pub a_dm: f64,
    pub a_dm_closed: f64,
    /// Common-mode gain; NaN for complementary stages.
    pub a_cm: f64,
    pub a_cm_closed: f64,
    /// Back-gate loop gain (sum g_mb)(r_o par).
    pub loop_gain: f64,
}

pub struct BgampCircuit {
    circuit: Circuit,
    design: Option<(Topology, Vec<f64>)>,
}

pub struct BgampOperatingPoint(OperatingPoint);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> BgampStatus {
    match e {
        Error::Domain(_) => BgampStatus::Domain,
        Error::Unbounded { .. } => BgampStatus::Unbounded,
        Error::Syntax { .. } | Error::UndefinedModel { .. } => BgampStatus::Syntax,
        Error::Topology(_) => BgampStatus::Topology,
        Error::Convergence { .. } => BgampStatus::Convergence,
        Error::Singular(_) => BgampStatus::Singular,
        Error::Sweep { cause, .. } => status_of(cause),
        Error::Fit(_) => BgampStatus::Fit,
        Error::BiasMatch(_) => BgampStatus::BiasMatch,
        Error::Io(_) => BgampStatus::Io,
    }
}

struct Fail(BgampStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(BgampStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any failure or panic.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BgampStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            BgampStatus::Ok
        }
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            BgampStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(BgampStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn to_params(p: &BgampDeviceParams) -> Result<DeviceParams, Fail> {
    let card = ModelCard {
        polarity: match p.polarity {
            BgampPolarity::N => Polarity::N,
            BgampPolarity::P => Polarity::P,
        },
        vt0: p.vt0,
        kprime: p.kprime,
        n_slope: p.n_slope,
        lambda0: p.lambda0,
        vclm: p.vclm,
        chi_mag: p.chi_mag,
        gamma_noise: p.gamma_noise,
        k_flicker: p.k_flicker,
        cox_area: p.cox_area,
        dvt: p.dvt,
    };
    let params = DeviceParams::new(card, p.width, p.length);
    params.validate()?;
    Ok(params)
}

fn from_params(p: &DeviceParams) -> BgampDeviceParams {
    let m = &p.model;
    BgampDeviceParams {
        polarity: match m.polarity {
            Polarity::N => BgampPolarity::N,
            Polarity::P => BgampPolarity::P,
        },
        vt0: m.vt0,
        kprime: m.kprime,
        n_slope: m.n_slope,
        lambda0: m.lambda0,
        vclm: m.vclm,
        chi_mag: m.chi_mag,
        gamma_noise: m.gamma_noise,
        k_flicker: m.k_flicker,
        cox_area: m.cox_area,
        dvt: m.dvt,
        width: p.width,
        length: p.length,
    }
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`) and returns the full length including
/// the terminator. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn bgamp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Default card of the given polarity at channel length `length` (um).
///
/// # Safety
/// `out` must be null or point to writable memory for one struct.
#[no_mangle]
pub unsafe extern "C" fn bgamp_default_device(polarity: BgampPolarity, length: f64, out: *mut BgampDeviceParams) -> BgampStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let (n, p) = cards::pair(length);
        let d = if polarity == BgampPolarity::N { n } else { p };
        d.validate()?;
        *out = from_params(&d);
        Ok(())
    })
}

/// Drain-to-source current (A) at the given terminal voltages.
///
/// # Safety
/// `params` and `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn bgamp_drain_current(
    params: *const BgampDeviceParams,
    vgs: f64,
    vds: f64,
    vbs: f64,
    out: *mut f64,
) -> BgampStatus {
    guard(|| {
        let p = to_params(as_ref(params, "params")?)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = device::drain_current(&p, vgs, vds, vbs)?;
        Ok(())
    })
}

/// Taylor coefficients of the drain current up to third order.
///
/// # Safety
/// `params` and `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn bgamp_derivatives(
    params: *const BgampDeviceParams,
    vgs: f64,
    vds: f64,
    vbs: f64,
    out: *mut BgampDerivatives,
) -> BgampStatus {
    guard(|| {
        let p = to_params(as_ref(params, "params")?)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let bias = BiasTuple::at(&p, vgs, vds, vbs)?;
        let set = device::derivatives(&p, &bias, 3)?;
        let mut coeffs = [[[0.0; 4]; 4]; 4];
        for (i, j, k) in set.indices() {
            coeffs[i][j][k] = set.coefficient(i, j, k);
        }
        coeffs[0][0][0] = set.ids();
        *out = BgampDerivatives { coeffs };
        Ok(())
    })
}

/// Parses netlist text into a circuit handle.
///
/// # Safety
/// `text` must be null or a NUL-terminated string; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn bgamp_circuit_from_netlist(text: *const c_char, out: *mut *mut BgampCircuit) -> BgampStatus {
    guard(|| {
        let text = as_str(text, "text")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let circuit = Circuit::from_netlist(&parse_netlist(text)?)?;
        *out = Box::into_raw(Box::new(BgampCircuit { circuit, design: None }));
        Ok(())
    })
}

/// Designs a template with the default cards at channel length `length`
/// (um) and g_m/I_D target `gm_over_id` (S/A).
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn bgamp_circuit_template(
    kind: BgampKind,
    feedback: BgampFeedback,
    length: f64,
    gm_over_id: f64,
    out: *mut *mut BgampCircuit,
) -> BgampStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let kind = match kind {
            BgampKind::CcsOl => Kind::CcsOl,
            BgampKind::CcsBg => Kind::CcsBg,
            BgampKind::DiffScmfb => Kind::DiffScmfb,
            BgampKind::DiffDcmfb => Kind::DiffDcmfb,
        };
        let feedback = match feedback {
            BgampFeedback::OpenLoop => Feedback::OpenLoop,
            BgampFeedback::BackGate => Feedback::BackGate,
        };
        let (n, p) = cards::pair(length);
        let d = design_amplifier(&AmplifierSpec::new(kind, feedback, n, p).gm_over_id(gm_over_id))?;
        *out = Box::into_raw(Box::new(BgampCircuit {
            circuit: d.topology.circuit.clone(),
            design: Some((d.topology, d.guess)),
        }));
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bgamp_circuit_free(c: *mut BgampCircuit) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Solves the DC operating point.
///
/// # Safety
/// `c` must be null or a live circuit handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn bgamp_solve_op(c: *const BgampCircuit, out: *mut *mut BgampOperatingPoint) -> BgampStatus {
    guard(|| {
        let c = as_ref(c, "circuit")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let guess = c.design.as_ref().map(|(_, g)| g.as_slice());
        let op = solve_op(&c.circuit, guess)?;
        *out = Box::into_raw(Box::new(BgampOperatingPoint(op)));
        Ok(())
    })
}

/// # Safety
/// `op` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bgamp_op_free(op: *mut BgampOperatingPoint) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Voltage of the named node at an operating point of `c`.
///
/// # Safety
/// Handles must be live; `node` a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bgamp_op_voltage(
    c: *const BgampCircuit,
    op: *const BgampOperatingPoint,
    node: *const c_char,
    out: *mut f64,
) -> BgampStatus {
    guard(|| {
        let c = as_ref(c, "circuit")?;
        let op = as_ref(op, "op")?;
        let node = as_str(node, "node")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = op
            .0
            .voltage(&c.circuit, node)
            .ok_or_else(|| Fail(BgampStatus::Topology, format!("no node named '{node}'")))?;
        Ok(())
    })
}

/// Small-signal gains of a template circuit at `op`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bgamp_gain(c: *const BgampCircuit, op: *const BgampOperatingPoint, out: *mut BgampGain) -> BgampStatus {
    guard(|| {
        let c = as_ref(c, "circuit")?;
        let op = as_ref(op, "op")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let (t, _) = c
            .design
            .as_ref()
            .ok_or_else(|| Fail(BgampStatus::Topology, "gains need a template circuit".into()))?;
        let r = small_signal_report(t, &op.0)?;
        *out = BgampGain {
            a_dm: r.a_v_dm,
            a_dm_closed: r.a_v_dm_closed,
            a_cm: r.a_v_cm.unwrap_or(f64::NAN),
            a_cm_closed: r.a_v_cm_closed.unwrap_or(f64::NAN),
            loop_gain: r.loop_quantity,
        };
        Ok(())
    })
}
