//! Newton-Raphson DC operating point, transfer sweeps and bias matching.
//!
//! Modified nodal analysis: the unknowns are the non-ground node voltages
//! followed by one branch current per voltage source. Newton steps are
//! scaled uniformly so no node moves more than `max_step` per iteration.
//! When plain Newton fails, all sources are ramped from a fraction of
//! their value to full scale, each step seeded from the previous one.

use crate::circuits::{Circuit, Feedback, Topology, GROUND};
use crate::device::{self, BiasTuple, ModelCard};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    /// Indexed by node id; entry 0 is ground.
    pub node_voltages: Vec<f64>,
    /// Branch current of each voltage source, flowing from `pos` through
    /// the source to `neg`.
    pub source_currents: Vec<f64>,
    /// Per device, in circuit order.
    pub device_biases: Vec<BiasTuple>,
    pub converged: bool,
    pub iterations: usize,
    pub source_steps: usize,
    /// Largest KCL imbalance (A).
    pub residual: f64,
}

impl OperatingPoint {
    pub fn voltage(&self, circuit: &Circuit, node: &str) -> Option<f64> {
        circuit.node(node).map(|n| self.node_voltages[n])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Largest node-voltage change per Newton iteration (V).
    pub max_step: f64,
    /// KCL tolerance (A).
    pub tolerance: f64,
    pub source_steps: usize,
    /// Extra full Newton steps taken after convergence while they keep
    /// reducing the residual. Curve fits of high-order coefficients need
    /// the solution to machine precision rather than to `tolerance`.
    pub polish: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            max_step: 0.1,
            tolerance: 1e-12,
            source_steps: 20,
            polish: 0,
        }
    }
}

struct Mna<'a> {
    c: &'a Circuit,
    nodes: usize,
    scale: f64,
}

impl<'a> Mna<'a> {
    fn dim(&self) -> usize {
        self.nodes - 1 + self.c.sources.len()
    }

    fn voltages(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut v = vec![0.0; self.nodes];
        v[1..].copy_from_slice(&x.as_slice()[..self.nodes - 1]);
        v
    }

    /// Residual vector and, if requested, the Jacobian.
    fn evaluate(&self, x: &DVector<f64>, jac: Option<&mut DMatrix<f64>>) -> DVector<f64> {
        let n = self.nodes - 1;
        let v = self.voltages(x);
        let mut f = DVector::zeros(self.dim());
        let mut jac = jac;
        if let Some(j) = jac.as_deref_mut() {
            j.fill(0.0);
        }
        for d in &self.c.devices {
            let vgs = v[d.gate] - v[d.source];
            let vds = v[d.drain] - v[d.source];
            let vbs = v[d.backgate] - v[d.source];
            let ids = device::drain_current_unchecked(&d.params, vgs, vds, vbs);
            if d.drain != GROUND {
                f[d.drain - 1] += ids;
            }
            if d.source != GROUND {
                f[d.source - 1] -= ids;
            }
            if let Some(j) = jac.as_deref_mut() {
                let bias = BiasTuple { vgs, vds, vbs, ids };
                let g = device::derivatives(&d.params, &bias, 1).expect("finite bias");
                let (gm, gds, gmb) = (g.g_m(1), g.g_ds(1), g.g_mb(1));
                // dI/dv for each terminal; the source column balances the rest.
                let cols = [
                    (d.gate, gm),
                    (d.drain, gds),
                    (d.backgate, gmb),
                    (d.source, -(gm + gds + gmb)),
                ];
                for (row, sign) in [(d.drain, 1.0), (d.source, -1.0)] {
                    if row == GROUND {
                        continue;
                    }
                    for &(col, val) in &cols {
                        if col != GROUND {
                            j[(row - 1, col - 1)] += sign * val;
                        }
                    }
                }
            }
        }
        for (k, s) in self.c.sources.iter().enumerate() {
            let jk = x[n + k];
            if s.pos != GROUND {
                f[s.pos - 1] += jk;
            }
            if s.neg != GROUND {
                f[s.neg - 1] -= jk;
            }
            f[n + k] = v[s.pos] - v[s.neg] - self.scale * s.value;
            if let Some(j) = jac.as_deref_mut() {
                if s.pos != GROUND {
                    j[(s.pos - 1, n + k)] += 1.0;
                    j[(n + k, s.pos - 1)] += 1.0;
                }
                if s.neg != GROUND {
                    j[(s.neg - 1, n + k)] -= 1.0;
                    j[(n + k, s.neg - 1)] -= 1.0;
                }
            }
        }
        f
    }

    fn kcl_worst(&self, f: &DVector<f64>) -> (f64, usize) {
        let mut worst = (0.0, 1);
        for i in 0..self.nodes - 1 {
            if f[i].abs() > worst.0 || f[i].is_nan() {
                worst = (f[i].abs(), i + 1);
            }
        }
        worst
    }

    fn source_worst(&self, f: &DVector<f64>) -> f64 {
        (self.nodes - 1..self.dim()).map(|i| f[i].abs()).fold(0.0, f64::max)
    }

    fn floating_node(&self, jac: &DMatrix<f64>) -> String {
        for i in 0..self.nodes - 1 {
            if jac.row(i).iter().all(|&x| x == 0.0) || jac.column(i).iter().all(|&x| x == 0.0) {
                return self.c.node_name(i + 1).to_string();
            }
        }
        self.c.node_name(1).to_string()
    }
}

enum Outcome {
    Converged { x: DVector<f64>, iterations: usize, residual: f64 },
    Failed { residual: f64, node: usize, iterations: usize },
}

fn newton(mna: &Mna<'_>, mut x: DVector<f64>, opts: &SolveOptions) -> Result<Outcome> {
    let dim = mna.dim();
    let n = mna.nodes - 1;
    let mut jac = DMatrix::zeros(dim, dim);
    let mut last = (f64::INFINITY, 1);
    seed_source_currents(mna, &mut x);
    for it in 0..=opts.max_iterations {
        let f = mna.evaluate(&x, Some(&mut jac));
        let (kcl, node) = mna.kcl_worst(&f);
        last = (kcl, node);
        if kcl < opts.tolerance && mna.source_worst(&f) < 1e-12 {
            let (x, extra, residual) = polish(mna, x, f, jac, kcl, opts.polish);
            return Ok(Outcome::Converged {
                x,
                iterations: it + extra,
                residual,
            });
        }
        if it == opts.max_iterations || !kcl.is_finite() {
            break;
        }
        let lu = jac.clone().lu();
        let dx = match lu.solve(&(-&f)) {
            Some(dx) if dx.iter().all(|v| v.is_finite()) => dx,
            _ => return Err(Error::Singular(mna.floating_node(&jac))),
        };
        let largest = dx.rows(0, n).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let step = if largest > opts.max_step { opts.max_step / largest } else { 1.0 };
        x.axpy(step, &dx, 1.0);
    }
    Ok(Outcome::Failed {
        residual: last.0,
        node: last.1,
        iterations: opts.max_iterations,
    })
}

fn polish(
    mna: &Mna<'_>,
    mut x: DVector<f64>,
    mut f: DVector<f64>,
    mut jac: DMatrix<f64>,
    mut kcl: f64,
    steps: usize,
) -> (DVector<f64>, usize, f64) {
    let mut taken = 0;
    for _ in 0..steps {
        let Some(dx) = jac.clone().lu().solve(&(-&f)) else { break };
        let trial = &x + dx;
        let mut tj = DMatrix::zeros(jac.nrows(), jac.ncols());
        let tf = mna.evaluate(&trial, Some(&mut tj));
        let (tk, _) = mna.kcl_worst(&tf);
        if !(tk < kcl) {
            break;
        }
        (x, f, jac, kcl) = (trial, tf, tj, tk);
        taken += 1;
    }
    (x, taken, kcl)
}

/// Branch currents enter KCL linearly, so the best currents for the given
/// node voltages follow from a least-squares solve. A converged seed then
/// passes the residual check without a Newton step.
fn seed_source_currents(mna: &Mna<'_>, x: &mut DVector<f64>) {
    let n = mna.nodes - 1;
    let m = mna.c.sources.len();
    for k in 0..m {
        x[n + k] = 0.0;
    }
    let f = mna.evaluate(x, None);
    let b = DMatrix::from_fn(n, m, |row, k| {
        let s = &mna.c.sources[k];
        if s.pos == row + 1 {
            1.0
        } else if s.neg == row + 1 {
            -1.0
        } else {
            0.0
        }
    });
    let rhs = -f.rows(0, n);
    if let Ok(j) = b.svd(true, true).solve(&rhs, 1e-12) {
        if j.iter().all(|v| v.is_finite()) {
            x.rows_mut(n, m).copy_from(&j);
        }
    }
}

/// Starting point: source-driven nodes at their source values, everything
/// else halfway between the lowest and highest source-defined voltage.
fn default_guess(c: &Circuit, scale: f64) -> Vec<f64> {
    let mut v = vec![f64::NAN; c.node_count()];
    v[GROUND] = 0.0;
    // Propagate through chains of sources from ground.
    for _ in 0..c.sources.len() {
        for s in &c.sources {
            if v[s.neg].is_finite() && v[s.pos].is_nan() {
                v[s.pos] = v[s.neg] + scale * s.value;
            } else if v[s.pos].is_finite() && v[s.neg].is_nan() {
                v[s.neg] = v[s.pos] - scale * s.value;
            }
        }
    }
    let known: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    let lo = known.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = known.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mid = 0.5 * (lo + hi);
    v.iter().map(|x| if x.is_finite() { *x } else { mid }).collect()
}

fn initial_vector(mna: &Mna<'_>, guess: &[f64]) -> DVector<f64> {
    let mut x = DVector::zeros(mna.dim());
    for i in 1..mna.nodes {
        x[i - 1] = guess[i];
    }
    x
}

fn finish(c: &Circuit, mna: &Mna<'_>, x: &DVector<f64>, iterations: usize, source_steps: usize, residual: f64) -> OperatingPoint {
    let v = mna.voltages(x);
    let device_biases = c
        .devices
        .iter()
        .map(|d| {
            let vgs = v[d.gate] - v[d.source];
            let vds = v[d.drain] - v[d.source];
            let vbs = v[d.backgate] - v[d.source];
            BiasTuple {
                vgs,
                vds,
                vbs,
                ids: device::drain_current_unchecked(&d.params, vgs, vds, vbs),
            }
        })
        .collect();
    OperatingPoint {
        source_currents: x.as_slice()[mna.nodes - 1..].to_vec(),
        node_voltages: v,
        device_biases,
        converged: true,
        iterations,
        source_steps,
        residual,
    }
}

/// A node that carries no current path (only gates or back gates attach
/// to it) leaves its KCL row empty.
fn check_floating(c: &Circuit) -> Result<()> {
    let mut driven = vec![false; c.node_count()];
    driven[GROUND] = true;
    for d in &c.devices {
        driven[d.drain] = true;
        driven[d.source] = true;
    }
    for s in &c.sources {
        driven[s.pos] = true;
        driven[s.neg] = true;
    }
    match driven.iter().position(|&x| !x) {
        Some(node) => Err(Error::Singular(c.node_name(node).to_string())),
        None => Ok(()),
    }
}

/// Solves the DC operating point. `guess` is indexed by node id.
pub fn solve_op(c: &Circuit, guess: Option<&[f64]>) -> Result<OperatingPoint> {
    solve_op_with(c, guess, &SolveOptions::default())
}

pub fn solve_op_with(c: &Circuit, guess: Option<&[f64]>, opts: &SolveOptions) -> Result<OperatingPoint> {
    c.validate()?;
    if let Some(g) = guess {
        if g.len() != c.node_count() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("initial guess must give a finite voltage for every node"));
        }
    }
    check_floating(c)?;
    let full = Mna {
        c,
        nodes: c.node_count(),
        scale: 1.0,
    };
    let start = match guess {
        Some(g) => g.to_vec(),
        None => default_guess(c, 1.0),
    };
    let mut total = 0;
    match newton(&full, initial_vector(&full, &start), opts)? {
        Outcome::Converged { x, iterations, residual } => {
            return Ok(finish(c, &full, &x, iterations, 0, residual));
        }
        Outcome::Failed { iterations, .. } => total += iterations,
    }

    // Source stepping.
    let steps = opts.source_steps.max(1);
    let first = Mna {
        c,
        nodes: c.node_count(),
        scale: 1.0 / steps as f64,
    };
    let mut x = initial_vector(&first, &default_guess(c, first.scale));
    for k in 1..=steps {
        let mna = Mna {
            c,
            nodes: c.node_count(),
            scale: k as f64 / steps as f64,
        };
        match newton(&mna, x.clone(), opts)? {
            Outcome::Converged { x: next, iterations, residual } => {
                total += iterations;
                x = next;
                if k == steps {
                    return Ok(finish(c, &mna, &x, total, steps, residual));
                }
            }
            Outcome::Failed { residual, node, iterations } => {
                return Err(Error::Convergence {
                    iterations: total + iterations,
                    source_steps: k,
                    residual,
                    node: c.node_name(node).to_string(),
                });
            }
        }
    }
    unreachable!("source stepping returns on the last step")
}

/// DC transfer characteristic.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferCurve {
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    /// Half-open index range of the longest strictly monotone stretch.
    pub monotone_span: (usize, usize),
}

pub(crate) fn monotone_span(y: &[f64]) -> (usize, usize) {
    if y.len() < 2 {
        return (0, y.len());
    }
    let mut best = (0, 1);
    let mut start = 0;
    let mut dir = 0i8;
    for i in 1..y.len() {
        let d = match y[i].partial_cmp(&y[i - 1]) {
            Some(std::cmp::Ordering::Greater) => 1,
            Some(std::cmp::Ordering::Less) => -1,
            _ => 0,
        };
        if d == 0 || (dir != 0 && d != dir) {
            start = if d == 0 { i } else { i - 1 };
        }
        dir = d;
        if i + 1 - start > best.1 - best.0 {
            best = (start, i + 1);
        }
    }
    best
}

/// Evenly spaced grid from `start` to `stop` inclusive.
pub fn grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::domain("a sweep needs at least 2 points"));
    }
    if !(start.is_finite() && stop.is_finite()) || stop <= start {
        return Err(Error::domain("sweep range must be finite and strictly increasing"));
    }
    let span = stop - start;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                stop
            } else {
                start + span * i as f64 / (points - 1) as f64
            }
        })
        .collect())
}

/// Sweeps with a caller-supplied drive and observation. Points are solved
/// outward from `anchor` (an index into `inputs`), each seeded from its
/// neighbor, so every sample is independent of the grid density.
pub fn sweep_with(
    circuit: &Circuit,
    opts: &SolveOptions,
    inputs: &[f64],
    anchor: usize,
    anchor_guess: Option<&[f64]>,
    mut apply: impl FnMut(&mut Circuit, f64) -> Result<()>,
    observe: impl Fn(&Circuit, &OperatingPoint) -> f64,
) -> Result<Vec<OperatingPoint>> {
    if inputs.is_empty() || anchor >= inputs.len() {
        return Err(Error::domain("empty sweep"));
    }
    let mut c = circuit.clone();
    let mut ops: Vec<Option<OperatingPoint>> = vec![None; inputs.len()];
    let mut solve_at = |c: &mut Circuit, i: usize, seed: Option<&[f64]>| -> Result<OperatingPoint> {
        apply(c, inputs[i]).and_then(|_| solve_op_with(c, seed, opts)).map_err(|e| Error::Sweep {
            input: inputs[i],
            cause: Box::new(e),
        })
    };
    ops[anchor] = Some(solve_at(&mut c, anchor, anchor_guess)?);
    for i in (0..anchor).rev() {
        let seed = ops[i + 1].as_ref().map(|o| o.node_voltages.clone());
        ops[i] = Some(solve_at(&mut c, i, seed.as_deref())?);
    }
    for i in anchor + 1..inputs.len() {
        let seed = ops[i - 1].as_ref().map(|o| o.node_voltages.clone());
        ops[i] = Some(solve_at(&mut c, i, seed.as_deref())?);
    }
    let ops: Vec<OperatingPoint> = ops.into_iter().map(|o| o.expect("every point solved")).collect();
    for (o, &x) in ops.iter().zip(inputs) {
        if !observe(circuit, o).is_finite() {
            return Err(Error::Sweep {
                input: x,
                cause: Box::new(Error::domain("non-finite output")),
            });
        }
    }
    Ok(ops)
}

/// Sweeps the voltage of `source` from `start` to `stop` and records the
/// voltage at `output`.
pub fn sweep_dc(
    circuit: &Circuit,
    source: &str,
    output: &str,
    start: f64,
    stop: f64,
    points: usize,
) -> Result<TransferCurve> {
    let inputs = grid(start, stop, points)?;
    let si = circuit
        .source_index(source)
        .ok_or_else(|| Error::Topology(format!("no source named '{source}'")))?;
    let out = circuit
        .node(output)
        .ok_or_else(|| Error::Topology(format!("no node named '{output}'")))?;
    let ops = sweep_with(
        circuit,
        &SolveOptions::default(),
        &inputs,
        0,
        None,
        |c, v| {
            c.sources[si].value = v;
            Ok(())
        },
        |_, op| op.node_voltages[out],
    )?;
    let output: Vec<f64> = ops.iter().map(|o| o.node_voltages[out]).collect();
    Ok(TransferCurve {
        monotone_span: monotone_span(&output),
        input: inputs,
        output,
    })
}

/// Result of bias matching an open-loop topology against its back-gate
/// counterpart.
#[derive(Debug, Clone)]
pub struct BiasMatch {
    /// Threshold offset added to each device of the back-gate circuit (V).
    pub offsets: Vec<f64>,
    /// Back-gate topology carrying the offsets.
    pub matched: Topology,
    pub op_open_loop: OperatingPoint,
    pub op_back_gate: OperatingPoint,
}

/// Largest threshold offset `bias_match` will apply (V).
pub const BIAS_MATCH_WINDOW: f64 = 0.5;

/// Threshold parameters `(vt0, dvt)` that make the back-gate threshold at
/// `vbs_bg` reproduce the open-loop threshold at `vbs_ol` bit for bit.
/// `dvt` alone cannot always hit the target, since `dvt - chi*vbs` lands on
/// a coarser grid than the target; `vt0` absorbs the last ulps.
fn matching_threshold(m: &ModelCard, vbs_bg: f64, vbs_ol: f64) -> (f64, f64) {
    // The device evaluates vt0 + (dvt - chi*vbs).
    let want = m.vt0 + (m.dvt - m.chi_mag * vbs_ol);
    let a = m.chi_mag * vbs_bg;
    let dvt = (m.dvt - m.chi_mag * vbs_ol) + a;
    let inner = dvt - a;
    let mut vt0 = m.vt0;
    for _ in 0..64 {
        let got = vt0 + inner;
        if got == want {
            return (vt0, dvt);
        }
        vt0 = if got < want { next_up(vt0) } else { next_down(vt0) };
    }
    (m.vt0, dvt)
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let b = x.to_bits();
    f64::from_bits(if x > 0.0 { b + 1 } else { b - 1 })
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

/// Adds per-device threshold offsets to the back-gate version of `open_loop`
/// so that every device keeps its open-loop (V_GS, V_DS, I_DS).
pub fn bias_match(open_loop: &Topology) -> Result<BiasMatch> {
    if open_loop.feedback != Feedback::OpenLoop {
        return Err(Error::BiasMatch("reference topology must be open loop".into()));
    }
    let op_ol = solve_op(&open_loop.circuit, None)?;
    let mut bg = open_loop.with_feedback(Feedback::BackGate);
    let v = &op_ol.node_voltages;
    let mut offsets = Vec::with_capacity(bg.circuit.devices.len());
    for (d, bias_ol) in bg.circuit.devices.iter_mut().zip(&op_ol.device_biases) {
        let s = d.params.polarity().sign();
        let vbs_bg = s * (v[d.backgate] - v[d.source]);
        let vbs_ol = s * bias_ol.vbs;
        let m = &mut d.params.model;
        let (vt0, dvt) = matching_threshold(m, vbs_bg, vbs_ol);
        let offset = (vt0 - m.vt0) + (dvt - m.dvt);
        if !(offset.abs() <= BIAS_MATCH_WINDOW) {
            return Err(Error::BiasMatch(format!(
                "device {} needs a {offset:.3} V offset, outside the {BIAS_MATCH_WINDOW} V window",
                d.name
            )));
        }
        m.vt0 = vt0;
        m.dvt = dvt;
        offsets.push(offset);
    }
    let op_bg = solve_op(&bg.circuit, Some(&op_ol.node_voltages))?;
    for (i, (a, b)) in op_ol.device_biases.iter().zip(&op_bg.device_biases).enumerate() {
        let dv = (a.vgs - b.vgs).abs().max((a.vds - b.vds).abs());
        let di = (a.ids - b.ids).abs() / a.ids.abs().max(1e-30);
        if dv > 1e-9 || di > 1e-9 {
            return Err(Error::BiasMatch(format!(
                "device {} moved by {dv:.2e} V / {di:.2e} relative after matching",
                bg.circuit.devices[i].name
            )));
        }
    }
    bg.input_bias = open_loop.input_bias;
    Ok(BiasMatch {
        offsets,
        matched: bg,
        op_open_loop: op_ol,
        op_back_gate: op_bg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cards;
    use crate::circuits::{build_topology, Kind, Supplies};

    fn ccs(kind: Kind, l: f64) -> Topology {
        let (n, p) = cards::pair(l);
        build_topology(kind, &n, &p, None, None, Supplies::new(1.8)).unwrap()
    }

    #[test]
    fn symmetric_inverter_sits_at_midrail() {
        for kind in [Kind::CcsOl, Kind::CcsBg] {
            let t = ccs(kind, 0.5);
            let op = solve_op(&t.circuit, None).unwrap();
            let out = op.voltage(&t.circuit, "out").unwrap();
            assert!((out - 0.9).abs() < 1e-9, "{kind:?}: {out}");
            assert!(op.residual < 1e-12);
        }
    }

    #[test]
    fn deterministic() {
        let t = ccs(Kind::CcsBg, 0.3);
        let mut c = t.circuit.clone();
        c.set_source("VIN", 0.87).unwrap();
        assert_eq!(solve_op(&c, None).unwrap(), solve_op(&c, None).unwrap());
    }

    #[test]
    fn converged_seed_returns_immediately() {
        let t = ccs(Kind::CcsOl, 1.0);
        let a = solve_op(&t.circuit, None).unwrap();
        let b = solve_op(&t.circuit, Some(&a.node_voltages)).unwrap();
        assert_eq!(b.iterations, 0);
        assert_eq!(a.node_voltages, b.node_voltages);
    }

    #[test]
    fn floating_node_is_named() {
        let (n, _) = cards::pair(1.0);
        let mut c = Circuit::new();
        c.add_device("M1", ["out", "g", "0", "0"], n);
        c.add_source("VDD", "out", "0", 1.0);
        match solve_op(&c, None) {
            Err(Error::Singular(node)) => assert_eq!(node, "g"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_sweep_rejected() {
        let t = ccs(Kind::CcsOl, 1.0);
        assert!(matches!(sweep_dc(&t.circuit, "VIN", "out", 0.9, 0.9, 11), Err(Error::Domain(_))));
        assert!(matches!(sweep_dc(&t.circuit, "VIN", "out", 0.0, 1.8, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn monotone_span_finds_longest_run() {
        assert_eq!(monotone_span(&[0.0, 1.0, 2.0, 1.0, 0.0, -1.0, -2.0]), (2, 7));
        assert_eq!(monotone_span(&[3.0, 2.0, 1.0]), (0, 3));
    }

    #[test]
    fn bias_match_is_exact() {
        let t = ccs(Kind::CcsOl, 0.5);
        let m = bias_match(&t).unwrap();
        for (a, b) in m.op_open_loop.device_biases.iter().zip(&m.op_back_gate.device_biases) {
            assert_eq!((a.vgs, a.vds, a.ids), (b.vgs, b.vds, b.ids));
        }
        let chi = cards::DEFAULT_CHI;
        for o in &m.offsets {
            assert!((o - chi * 0.9).abs() < 1e-9, "{o}");
        }
    }

    #[test]
    fn bias_match_zero_chi_gives_zero_offsets() {
        let (n, p) = cards::with_chi(cards::pair(0.5), 0.0);
        let t = build_topology(Kind::CcsOl, &n, &p, None, None, Supplies::new(1.8)).unwrap();
        let m = bias_match(&t).unwrap();
        assert!(m.offsets.iter().all(|&o| o == 0.0));
    }
}
