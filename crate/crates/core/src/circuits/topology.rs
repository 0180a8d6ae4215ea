//! Amplifier templates.
//!
//! Node names used by the templates:
//!
//! * complementary stage: `in`, `out`, `vdd`
//! * differential stages: `in1`, `in2`, `out1`, `out2`, `vdd`, `tn` (N tail
//!   node) and, with dual CMFB, `tp` (P tail node)
//!
//! Differential inputs are driven by `VIN1 = v_icm + v_id/2` and
//! `VIN2 = v_icm - v_id/2`. The CMFB devices are current sources whose gates
//! sense the output they sit under, so any common-mode excursion at the
//! outputs raises the tail current and pulls the outputs back.

use super::netlist::{DeviceCard, ModelDef, Netlist, SourceCard};
use super::{Circuit, GROUND};
use crate::device::{DeviceParams, ModelCard, Polarity};
use crate::error::{Error, Result, Span};
use indexmap::IndexMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    CcsOl,
    CcsBg,
    DiffScmfb,
    DiffDcmfb,
}

impl Kind {
    pub fn is_differential(self) -> bool {
        matches!(self, Kind::DiffScmfb | Kind::DiffDcmfb)
    }

    pub fn device_count(self) -> usize {
        match self {
            Kind::CcsOl | Kind::CcsBg => 2,
            Kind::DiffScmfb => 6,
            Kind::DiffDcmfb => 8,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Kind::CcsOl => "CCS_OL",
            Kind::CcsBg => "CCS_BG",
            Kind::DiffScmfb => "SCMFB",
            Kind::DiffDcmfb => "DCMFB",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feedback {
    /// Back gates tied to their source rails.
    OpenLoop,
    /// Back gates of the gain devices tied to their output node.
    BackGate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Supplies {
    pub vdd: f64,
    pub vss: f64,
}

impl Supplies {
    pub fn new(vdd: f64) -> Self {
        Self { vdd, vss: 0.0 }
    }

    pub fn span(&self) -> f64 {
        self.vdd - self.vss
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub kind: Kind,
    pub feedback: Feedback,
    pub supplies: Supplies,
    /// Input bias: the single input for CCS, the input common mode otherwise.
    pub input_bias: f64,
    pub circuit: Circuit,
}

fn check_polarity(p: &DeviceParams, want: Polarity, slot: &str) -> Result<()> {
    if p.polarity() != want {
        return Err(Error::Topology(format!(
            "{slot} expects a {want:?} device, got {:?}",
            p.polarity()
        )));
    }
    Ok(())
}

fn check_headroom(p: &DeviceParams, supplies: &Supplies) -> Result<()> {
    let lv = p.lambda() * supplies.span();
    if lv >= 1.0 {
        return Err(Error::domain(format!(
            "lambda*V_DD = {lv:.3} >= 1 for L = {} um",
            p.length
        )));
    }
    Ok(())
}

/// Builds one of the four amplifier templates. Complementary stages take
/// their feedback from `kind`; differential stages are built with back-gate
/// feedback (use [`Topology::with_feedback`] for the open-loop variant).
/// Inputs are biased at mid-supply.
pub fn build_topology(
    kind: Kind,
    n: &DeviceParams,
    p: &DeviceParams,
    cmfb_n: Option<&DeviceParams>,
    cmfb_p: Option<&DeviceParams>,
    supplies: Supplies,
) -> Result<Topology> {
    let feedback = match kind {
        Kind::CcsOl => Feedback::OpenLoop,
        _ => Feedback::BackGate,
    };
    let bias = 0.5 * (supplies.vdd + supplies.vss);
    build_topology_with(kind, feedback, n, p, cmfb_n, cmfb_p, supplies, bias)
}

#[allow(clippy::too_many_arguments)]
pub fn build_topology_with(
    kind: Kind,
    feedback: Feedback,
    n: &DeviceParams,
    p: &DeviceParams,
    cmfb_n: Option<&DeviceParams>,
    cmfb_p: Option<&DeviceParams>,
    supplies: Supplies,
    input_bias: f64,
) -> Result<Topology> {
    if !(supplies.vdd.is_finite() && supplies.vss.is_finite() && supplies.span() > 0.0) {
        return Err(Error::domain("supply span must be positive"));
    }
    if !input_bias.is_finite() {
        return Err(Error::domain("input bias must be finite"));
    }
    let kind = match (kind, feedback) {
        (Kind::CcsOl | Kind::CcsBg, Feedback::OpenLoop) => Kind::CcsOl,
        (Kind::CcsOl | Kind::CcsBg, Feedback::BackGate) => Kind::CcsBg,
        (k, _) => k,
    };
    check_polarity(n, Polarity::N, "input N slot")?;
    check_polarity(p, Polarity::P, "input P slot")?;
    let mut all = vec![n, p];
    let (vdd, vss) = ("vdd", "0");
    let mut c = Circuit::new();

    match kind {
        Kind::CcsOl | Kind::CcsBg => {
            let (bn, bp) = match feedback {
                Feedback::BackGate => ("out", "out"),
                Feedback::OpenLoop => (vss, vdd),
            };
            c.add_device("M1", ["out", "in", vss, bn], n.clone());
            c.add_device("M2", ["out", "in", vdd, bp], p.clone());
            c.add_source("VDD", vdd, vss, supplies.span());
            c.add_source("VIN", "in", vss, input_bias - supplies.vss);
        }
        Kind::DiffScmfb | Kind::DiffDcmfb => {
            let cn = cmfb_n.ok_or_else(|| Error::Topology("CMFB N card required".into()))?;
            check_polarity(cn, Polarity::N, "CMFB N slot")?;
            all.push(cn);
            let dual = kind == Kind::DiffDcmfb;
            let cp = if dual {
                let cp = cmfb_p.ok_or_else(|| Error::Topology("dual CMFB requires both CMFB cards".into()))?;
                check_polarity(cp, Polarity::P, "CMFB P slot")?;
                all.push(cp);
                Some(cp)
            } else {
                None
            };
            let ptop = if dual { "tp" } else { vdd };
            let halves = [("in1", "out1"), ("in2", "out2")];
            let (bn, bp) = match feedback {
                Feedback::BackGate => (None, None),
                Feedback::OpenLoop => (Some(vss), Some(vdd)),
            };
            for (half, (inp, out)) in halves.into_iter().enumerate() {
                c.add_device(&format!("M{}", 1 + half), [out, inp, "tn", bn.unwrap_or(out)], n.clone());
            }
            for (half, (inp, out)) in halves.into_iter().enumerate() {
                c.add_device(&format!("M{}", 3 + half), [out, inp, ptop, bp.unwrap_or(out)], p.clone());
            }
            for (half, out) in ["out1", "out2"].into_iter().enumerate() {
                c.add_device(&format!("M{}", 5 + half), ["tn", out, vss, vss], cn.clone());
            }
            if let Some(cp) = cp {
                for (half, out) in ["out1", "out2"].into_iter().enumerate() {
                    c.add_device(&format!("M{}", 7 + half), ["tp", out, vdd, vdd], cp.clone());
                }
            }
            c.add_source("VDD", vdd, vss, supplies.span());
            c.add_source("VIN1", "in1", vss, input_bias - supplies.vss);
            c.add_source("VIN2", "in2", vss, input_bias - supplies.vss);
        }
    }
    for d in all {
        d.validate()?;
        check_headroom(d, &supplies)?;
    }
    debug_assert_eq!(c.devices.len(), kind.device_count());
    Ok(Topology {
        kind,
        feedback,
        supplies,
        input_bias,
        circuit: c,
    })
}

impl Topology {
    /// Names of the input-drive sources.
    pub fn input_sources(&self) -> &'static [&'static str] {
        if self.kind.is_differential() {
            &["VIN1", "VIN2"]
        } else {
            &["VIN"]
        }
    }

    pub fn output_nodes(&self) -> &'static [&'static str] {
        if self.kind.is_differential() {
            &["out1", "out2"]
        } else {
            &["out"]
        }
    }

    /// Indices of the gain devices (those whose back gates carry feedback).
    pub fn gain_devices(&self) -> &'static [usize] {
        if self.kind.is_differential() {
            &[0, 1, 2, 3]
        } else {
            &[0, 1]
        }
    }

    /// Same circuit with the gain devices' back gates rewired.
    pub fn with_feedback(&self, feedback: Feedback) -> Topology {
        let mut t = self.clone();
        t.feedback = feedback;
        t.kind = match (self.kind, feedback) {
            (Kind::CcsOl | Kind::CcsBg, Feedback::OpenLoop) => Kind::CcsOl,
            (Kind::CcsOl | Kind::CcsBg, Feedback::BackGate) => Kind::CcsBg,
            (k, _) => k,
        };
        let vdd = t.circuit.node("vdd").unwrap_or(GROUND);
        for &i in self.gain_devices() {
            let d = &mut t.circuit.devices[i];
            d.backgate = match (feedback, d.params.polarity()) {
                (Feedback::BackGate, _) => d.drain,
                (Feedback::OpenLoop, Polarity::N) => GROUND,
                (Feedback::OpenLoop, Polarity::P) => vdd,
            };
        }
        t
    }

    /// Sets the input drive: the input voltage for CCS, or common mode and
    /// differential voltage for the differential stages.
    pub fn set_input(&mut self, common: f64, differential: f64) -> Result<()> {
        let vss = self.supplies.vss;
        if self.kind.is_differential() {
            self.circuit.set_source("VIN1", common + 0.5 * differential - vss)?;
            self.circuit.set_source("VIN2", common - 0.5 * differential - vss)?;
        } else {
            self.circuit.set_source("VIN", common - vss)?;
        }
        self.input_bias = common;
        Ok(())
    }
}

fn model_key(card: &ModelCard) -> String {
    format!("{card:?}")
}

/// Emits the template as a netlist; solving it reproduces the template's
/// operating point.
pub fn topology_to_netlist(t: &Topology) -> Netlist {
    let c = &t.circuit;
    let mut models: IndexMap<String, ModelDef> = IndexMap::new();
    let mut names: IndexMap<String, String> = IndexMap::new();
    let mut counts = [0usize; 2];
    let mut devices = Vec::with_capacity(c.devices.len());
    for d in &c.devices {
        let key = model_key(&d.params.model);
        let name = names
            .entry(key)
            .or_insert_with(|| {
                let (slot, stem) = match d.params.polarity() {
                    Polarity::N => (0, "nmod"),
                    Polarity::P => (1, "pmod"),
                };
                counts[slot] += 1;
                let name = if counts[slot] == 1 {
                    stem.to_string()
                } else {
                    format!("{stem}{}", counts[slot])
                };
                models.insert(
                    name.clone(),
                    ModelDef {
                        name: name.clone(),
                        card: d.params.model.clone(),
                        span: Span::default(),
                    },
                );
                name
            })
            .clone();
        devices.push(DeviceCard {
            name: d.name.clone(),
            drain: c.node_name(d.drain).to_string(),
            gate: c.node_name(d.gate).to_string(),
            source: c.node_name(d.source).to_string(),
            backgate: c.node_name(d.backgate).to_string(),
            model: name,
            width_um: d.params.width,
            length_um: d.params.length,
            span: Span::default(),
        });
    }
    let sources = c
        .sources
        .iter()
        .map(|s| SourceCard {
            name: s.name.clone(),
            pos: c.node_name(s.pos).to_string(),
            neg: c.node_name(s.neg).to_string(),
            value: s.value,
            span: Span::default(),
        })
        .collect();
    Netlist {
        devices,
        models,
        sources,
        directives: vec![super::netlist::Directive::Op],
        warnings: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cards;

    fn cards_at(l: f64) -> (DeviceParams, DeviceParams) {
        cards::pair(l)
    }

    #[test]
    fn ccs_bg_backgates_on_output() {
        let (n, p) = cards_at(1.0);
        let t = build_topology(Kind::CcsBg, &n, &p, None, None, Supplies::new(1.8)).unwrap();
        let out = t.circuit.node("out").unwrap();
        assert_eq!(t.circuit.devices.len(), 2);
        assert!(t.circuit.devices.iter().all(|d| d.backgate == out));
    }

    #[test]
    fn ccs_ol_backgates_on_rails() {
        let (n, p) = cards_at(1.0);
        let t = build_topology(Kind::CcsOl, &n, &p, None, None, Supplies::new(1.8)).unwrap();
        let vdd = t.circuit.node("vdd").unwrap();
        assert_eq!(t.circuit.devices[0].backgate, GROUND);
        assert_eq!(t.circuit.devices[1].backgate, vdd);
    }

    #[test]
    fn device_counts() {
        let (n, p) = cards_at(1.0);
        let s = build_topology(Kind::DiffScmfb, &n, &p, Some(&n), None, Supplies::new(1.8)).unwrap();
        assert_eq!(s.circuit.devices.len(), 6);
        assert!(s.circuit.device("M5").is_some() && s.circuit.device("M7").is_none());
        let d = build_topology(Kind::DiffDcmfb, &n, &p, Some(&n), Some(&p), Supplies::new(1.8)).unwrap();
        assert_eq!(d.circuit.devices.len(), 8);
    }

    #[test]
    fn rejects_bad_slots() {
        let (n, p) = cards_at(1.0);
        assert!(build_topology(Kind::CcsOl, &p, &n, None, None, Supplies::new(1.8)).is_err());
        let e = build_topology(Kind::DiffDcmfb, &n, &p, Some(&n), None, Supplies::new(1.8)).unwrap_err();
        assert!(matches!(e, Error::Topology(_)));
    }

    #[test]
    fn rejects_excess_clm() {
        let (n, p) = cards_at(0.01);
        assert!(matches!(
            build_topology(Kind::CcsOl, &n, &p, None, None, Supplies::new(1.8)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rewire_round_trip() {
        let (n, p) = cards_at(1.0);
        let t = build_topology(Kind::DiffDcmfb, &n, &p, Some(&n), Some(&p), Supplies::new(1.8)).unwrap();
        let ol = t.with_feedback(Feedback::OpenLoop);
        assert_eq!(ol.circuit.devices[0].backgate, GROUND);
        assert_eq!(ol.with_feedback(Feedback::BackGate), t);
    }

    #[test]
    fn netlist_line_counts() {
        let (n, p) = cards_at(1.0);
        let t = build_topology(Kind::CcsOl, &n, &p, None, None, Supplies::new(1.8)).unwrap();
        let net = topology_to_netlist(&t);
        assert_eq!(net.devices.len(), 2);
        assert_eq!(net.sources.len(), 2);
        let bg = build_topology(Kind::CcsBg, &n, &p, None, None, Supplies::new(1.8)).unwrap();
        let net = topology_to_netlist(&bg);
        assert!(net.devices.iter().all(|d| d.backgate == d.drain));
    }
}
