//! Weakly nonlinear analysis of complementary stages.
//!
//! The output is expanded as `v_out = a1 v_in + a2 v_in² + a3 v_in³` and
//! the coefficients are found by balancing the summed N and P drain current
//! series order by order. With back-gate feedback the back gates follow the
//! output, so every drain-voltage term gains a back-gate twin.
//!
//! Two balances are offered: the simplified one that keeps only the pure
//! gate and pure output-voltage terms, and the full one that also keeps
//! every mixed term. Polynomial fits of solved transfer curves are the
//! independent check on both.

use crate::circuits::Topology;
use crate::dcsolve::{grid, sweep_with, OperatingPoint, SolveOptions, TransferCurve};
use crate::device::DerivativeSet;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    OpenLoop,
    BackGate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossTerms {
    /// Mixed gate/output derivatives dropped.
    Excluded,
    /// Every term up to third order kept.
    Included,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSeries {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `None` for fitted series.
    pub mode: Option<Mode>,
    pub cross_terms: CrossTerms,
}

/// Elementwise sum of the N and P derivative sets of a complementary pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedConductances {
    sum: DerivativeSet,
}

impl CombinedConductances {
    pub fn g_m(&self, k: usize) -> f64 {
        self.sum.g_m(k)
    }

    pub fn g_ds(&self, k: usize) -> f64 {
        self.sum.g_ds(k)
    }

    pub fn g_mb(&self, k: usize) -> f64 {
        self.sum.g_mb(k)
    }

    pub fn set(&self) -> &DerivativeSet {
        &self.sum
    }

    /// Coefficient of `v_in^p v_out^m` in the summed current.
    fn h(&self, mode: Mode, cross: CrossTerms, p: usize, m: usize) -> f64 {
        let c = |q: usize, r: usize| self.sum.coefficient(p, q, r);
        match (mode, cross) {
            (Mode::OpenLoop, _) => c(m, 0),
            (Mode::BackGate, CrossTerms::Included) => (0..=m).map(|q| c(q, m - q)).sum(),
            (Mode::BackGate, CrossTerms::Excluded) => {
                if p == 0 {
                    c(0, m) + c(m, 0)
                } else {
                    c(m, 0)
                }
            }
        }
    }
}

/// Sums the sets of an N and a P device. Both must be at least third order
/// for the series; the signs of their currents must match their slots.
pub fn combine(dset_n: &DerivativeSet, dset_p: &DerivativeSet) -> Result<CombinedConductances> {
    if dset_n.ids() < 0.0 || dset_p.ids() > 0.0 {
        return Err(Error::domain(
            "polarity mismatch: expected an N set (I_DS >= 0) and a P set (I_DS <= 0)",
        ));
    }
    Ok(CombinedConductances {
        sum: dset_n.add(dset_p),
    })
}

fn balance(g: &CombinedConductances, mode: Mode, cross: CrossTerms) -> Result<PowerSeries> {
    let h = |p, m| g.h(mode, cross, p, m);
    let h01 = h(0, 1);
    if h01 == 0.0 {
        let what = match mode {
            Mode::OpenLoop => "G_ds1 = 0",
            Mode::BackGate => "G_mb1 + G_ds1 = 0",
        };
        return Err(Error::unbounded("gain", format!("{what}: infinite-gain limit")));
    }
    let (h02, h03) = (h(0, 2), h(0, 3));
    let (h10, h20, h30) = (h(1, 0), h(2, 0), h(3, 0));
    let a1 = -h10 / h01;
    let (a2, a3) = match cross {
        CrossTerms::Excluded => {
            let a2 = -(h20 + h02 * a1 * a1) / h01;
            let a3 = -(2.0 * h02 * a1 * a2 + h30 + h03 * a1 * a1 * a1) / h01;
            (a2, a3)
        }
        CrossTerms::Included => {
            let (h11, h21, h12) = (h(1, 1), h(2, 1), h(1, 2));
            let a2 = -(h20 + h11 * a1 + h02 * a1 * a1) / h01;
            let a3 = -(h30 + h21 * a1 + h12 * a1 * a1 + h03 * a1 * a1 * a1 + h11 * a2 + 2.0 * h02 * a1 * a2) / h01;
            (a2, a3)
        }
    };
    Ok(PowerSeries {
        a1,
        a2,
        a3,
        mode: Some(mode),
        cross_terms: cross,
    })
}

/// Open-loop coefficients without cross derivatives:
/// a1 = -G_m1/G_ds1, a2 = -(G_m2 + G_ds2 a1²)/G_ds1,
/// a3 = -(2 G_ds2 a1 a2 + G_m3 + G_ds3 a1³)/G_ds1.
pub fn series_open_loop(g: &CombinedConductances) -> Result<PowerSeries> {
    balance(g, Mode::OpenLoop, CrossTerms::Excluded)
}

/// Back-gate coefficients: the open-loop formulas with G_dsk replaced by
/// G_mbk + G_dsk.
pub fn series_backgate(g: &CombinedConductances) -> Result<PowerSeries> {
    balance(g, Mode::BackGate, CrossTerms::Excluded)
}

/// Coefficients from the full balance including every mixed derivative.
pub fn series_full(g: &CombinedConductances, mode: Mode) -> Result<PowerSeries> {
    balance(g, mode, CrossTerms::Included)
}

/// sqrt((4/3)|a1/a3|), the input-referred third-order intercept (V).
pub fn ip3(series: &PowerSeries) -> Result<f64> {
    if series.a3 == 0.0 {
        return Err(Error::unbounded("IP3", "a3 = 0: linear to third order"));
    }
    Ok((4.0 / 3.0 * (series.a1 / series.a3).abs()).sqrt())
}

/// Predicted IP3 improvement of back-gate feedback,
/// ((G_mb1 + G_ds1)/G_ds1)² = [1 + G_mb1 r_o∥]².
pub fn ip3_enhancement(g: &CombinedConductances) -> Result<f64> {
    let gds = g.g_ds(1);
    if gds == 0.0 {
        return Err(Error::unbounded("IP3 enhancement", "G_ds1 = 0"));
    }
    let r = (g.g_mb(1) + gds) / gds;
    Ok(r * r)
}

/// Default half-width of the fit window (V) and its sample count.
pub const FIT_AMPLITUDE: f64 = 1e-3;
pub const FIT_POINTS: usize = 201;
const MIN_FIT_POINTS: usize = 50;
/// Order-3 and order-5 fits must agree on a1 to this relative tolerance.
const FIT_CROSS_CHECK: f64 = 1e-4;

/// Least-squares polynomial coefficients of y(center + s·amplitude) in s.
fn poly_fit(s: &[f64], y: &[f64], order: usize) -> Result<Vec<f64>> {
    let a = DMatrix::from_fn(s.len(), order + 1, |i, j| s[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let (max, min) = sv.iter().fold((0.0f64, f64::INFINITY), |(mx, mn), &v| (mx.max(v), mn.min(v)));
    if !(min > max * 1e-12) {
        return Err(Error::Fit("ill-conditioned fit".into()));
    }
    let c = svd.solve(&b, 0.0).map_err(|e| Error::Fit(e.to_string()))?;
    Ok(c.iter().copied().collect())
}

/// Fits the transfer curve about `center` over ±`amplitude` with a
/// polynomial of degree `order` (3 to 5). Captures every nonlinearity, so
/// it is the reference for the closed-form series.
pub fn fit_series(curve: &TransferCurve, center: f64, amplitude: f64, order: usize) -> Result<PowerSeries> {
    if !(3..=5).contains(&order) {
        return Err(Error::domain("fit order must be 3, 4 or 5"));
    }
    if !(amplitude > 0.0 && amplitude.is_finite() && center.is_finite()) {
        return Err(Error::domain("fit amplitude must be positive and finite"));
    }
    let tol = amplitude * 1e-9;
    let (s, y): (Vec<f64>, Vec<f64>) = curve
        .input
        .iter()
        .zip(&curve.output)
        .filter(|(x, _)| (**x - center).abs() <= amplitude + tol)
        .map(|(x, y)| ((x - center) / amplitude, *y))
        .unzip();
    if s.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "only {} points within ±{amplitude} V of {center} V; need {MIN_FIT_POINTS}",
            s.len()
        )));
    }
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo > -0.99 || hi < 0.99 {
        return Err(Error::Fit("curve does not cover the fit window".into()));
    }
    let c = poly_fit(&s, &y, order)?;
    let check = poly_fit(&s, &y, if order == 3 { 5 } else { 3 })?;
    if (c[1] - check[1]).abs() > FIT_CROSS_CHECK * c[1].abs() {
        return Err(Error::Fit(format!(
            "amplitude {amplitude} V too large: order-3 and order-5 a1 differ by {:.2e} relative",
            ((c[1] - check[1]) / c[1]).abs()
        )));
    }
    Ok(PowerSeries {
        a1: c[1] / amplitude,
        a2: c[2] / (amplitude * amplitude),
        a3: c[3] / (amplitude * amplitude * amplitude),
        mode: None,
        cross_terms: CrossTerms::Included,
    })
}

/// Which output a differential fit observes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    /// `out` for complementary stages, `out1 - out2` for differential ones.
    Differential,
    /// `out1` alone (differential stages only).
    SingleEnded,
}

/// Solver settings for transfer curves used in fits.
pub fn fit_options() -> SolveOptions {
    SolveOptions {
        polish: 4,
        ..SolveOptions::default()
    }
}

/// DC transfer curve of a template about its operating point: the input
/// (differential input for differential stages) is swept over ±`amplitude`
/// with `points` samples, each solved from its neighbor outward from the
/// center.
pub fn transfer_window(t: &Topology, op: &OperatingPoint, amplitude: f64, points: usize, output: Output) -> Result<TransferCurve> {
    let c = &t.circuit;
    let node = |n: &str| c.node(n).ok_or_else(|| Error::Topology(format!("no node named '{n}'")));
    let (center, inputs) = if t.kind.is_differential() {
        (0.0, grid(-amplitude, amplitude, points)?)
    } else {
        let x0 = t.input_bias;
        (x0, grid(x0 - amplitude, x0 + amplitude, points)?)
    };
    let outs: Vec<usize> = match (t.kind.is_differential(), output) {
        (false, Output::Differential) => vec![node("out")?],
        (false, Output::SingleEnded) => return Err(Error::domain("single-ended output needs a differential stage")),
        (true, Output::Differential) => vec![node("out1")?, node("out2")?],
        (true, Output::SingleEnded) => vec![node("out1")?],
    };
    let observe = |v: &[f64]| match outs.as_slice() {
        [a, b] => v[*a] - v[*b],
        [a] => v[*a],
        _ => unreachable!(),
    };
    let anchor = points / 2;
    if (inputs[anchor] - center).abs() > amplitude * 1e-12 {
        return Err(Error::domain("fit sweeps need an odd number of points"));
    }
    let vss = t.supplies.vss;
    let icm = t.input_bias;
    let diff = t.kind.is_differential();
    let ops = sweep_with(
        c,
        &fit_options(),
        &inputs,
        anchor,
        Some(&op.node_voltages),
        |c, x| {
            if diff {
                c.set_source("VIN1", icm + 0.5 * x - vss)?;
                c.set_source("VIN2", icm - 0.5 * x - vss)
            } else {
                c.set_source("VIN", x - vss)
            }
        },
        |_, o| observe(&o.node_voltages),
    )?;
    let output: Vec<f64> = ops.iter().map(|o| observe(&o.node_voltages)).collect();
    let span = crate::dcsolve::monotone_span(&output);
    Ok(TransferCurve {
        input: inputs,
        output,
        monotone_span: span,
    })
}

/// Relative change in a1 and a3 allowed between a window and its half.
const FIT_STABILITY_A1: f64 = 1e-5;
const FIT_STABILITY_A3: f64 = 1e-2;

/// Fitted series of a template. The window halves from `amplitude` until
/// the order-3/order-5 cross-check passes and the fit no longer moves when
/// the window is halved again.
pub fn fit_topology(t: &Topology, op: &OperatingPoint, amplitude: f64, output: Output) -> Result<(PowerSeries, f64)> {
    let center = if t.kind.is_differential() { 0.0 } else { t.input_bias };
    let fit = |amp: f64| -> Result<Option<PowerSeries>> {
        let curve = transfer_window(t, op, amp, FIT_POINTS, output)?;
        match fit_series(&curve, center, amp, 5) {
            Ok(s) => Ok(Some(s)),
            Err(Error::Fit(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut amp = amplitude;
    let mut current = fit(amp)?;
    for _ in 0..16 {
        let half = fit(0.5 * amp)?;
        if let (Some(a), Some(b)) = (&current, &half) {
            // a3 is judged by its share of the output, so a vanishing a3
            // does not demand an exact match.
            let a1_ok = (a.a1 - b.a1).abs() <= FIT_STABILITY_A1 * a.a1.abs();
            let floor = 1e-6 * a.a1.abs() / (amp * amp);
            let a3_ok = (a.a3 - b.a3).abs() <= FIT_STABILITY_A3 * a.a3.abs().max(floor);
            if a1_ok && a3_ok {
                return Ok((*a, amp));
            }
        }
        amp *= 0.5;
        current = half;
    }
    Err(Error::Fit(format!("no stable fit window down to {amp:.1e} V")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(gm: [f64; 3], gds: [f64; 3], gmb: [f64; 3]) -> CombinedConductances {
        let mut s = DerivativeSet::zero(3);
        for k in 0..3 {
            s = s.with(k + 1, 0, 0, gm[k]).with(0, k + 1, 0, gds[k]).with(0, 0, k + 1, gmb[k]);
        }
        CombinedConductances { sum: s }
    }

    #[test]
    fn linear_device_has_no_distortion() {
        let s = series_open_loop(&g([2e-3, 0.0, 0.0], [2e-5, 0.0, 0.0], [0.0; 3])).unwrap();
        assert_eq!((s.a1, s.a2, s.a3), (-100.0, 0.0, 0.0));
        assert!(matches!(ip3(&s), Err(Error::Unbounded { .. })));
    }

    #[test]
    fn zero_coupling_back_gate_equals_open_loop() {
        let c = g([2e-3, 1e-3, -4e-3], [2e-5, 1e-6, 3e-7], [0.0; 3]);
        let (a, b) = (series_open_loop(&c).unwrap(), series_backgate(&c).unwrap());
        assert_eq!((a.a1, a.a2, a.a3), (b.a1, b.a2, b.a3));
        assert_eq!(ip3_enhancement(&c).unwrap(), 1.0);
    }

    #[test]
    fn back_gate_reduces_gain() {
        let c = g([2e-3, 1e-3, -4e-3], [2e-5, 1e-6, 3e-7], [4e-4, 1e-4, -1e-4]);
        let (a, b) = (series_open_loop(&c).unwrap(), series_backgate(&c).unwrap());
        assert!(b.a1.abs() < a.a1.abs());
        assert_eq!(b.a1, -2e-3 / (4e-4 + 2e-5));
    }

    #[test]
    fn enhancement_substitution() {
        let c = g([2e-3, 0.0, 0.0], [2e-5, 0.0, 0.0], [4e-4, 0.0, 0.0]);
        assert!((ip3_enhancement(&c).unwrap() - 441.0).abs() < 1e-9);
    }

    #[test]
    fn ip3_substitution_and_scaling() {
        let s = PowerSeries {
            a1: -4.0,
            a2: 0.0,
            a3: -3.0,
            mode: None,
            cross_terms: CrossTerms::Included,
        };
        assert!((ip3(&s).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        let scaled = PowerSeries { a1: -40.0, a3: -30.0, ..s };
        assert_eq!(ip3(&scaled).unwrap(), ip3(&s).unwrap());
    }

    #[test]
    fn fit_recovers_cubic() {
        let x: Vec<f64> = (0..201).map(|i| -1.0 + 0.01 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| -5.0 * x + 0.2 * x * x * x).collect();
        let curve = TransferCurve {
            input: x,
            output: y,
            monotone_span: (0, 201),
        };
        let s = fit_series(&curve, 0.0, 1.0, 5).unwrap();
        assert!((s.a1 + 5.0).abs() < 1e-10 && s.a2.abs() < 1e-10 && (s.a3 - 0.2).abs() < 1e-10);
    }

    #[test]
    fn fit_rejects_sparse_window() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let curve = TransferCurve {
            output: x.clone(),
            input: x,
            monotone_span: (0, 20),
        };
        assert!(matches!(fit_series(&curve, 10.0, 5.0, 5), Err(Error::Fit(_))));
    }

    #[test]
    fn combine_checks_polarity() {
        let n = DerivativeSet::zero(3).with(0, 0, 0, 1e-5);
        let p = DerivativeSet::zero(3).with(0, 0, 0, -1e-5);
        assert!(combine(&n, &p).is_ok());
        assert!(matches!(combine(&p, &n), Err(Error::Domain(_))));
    }
}
