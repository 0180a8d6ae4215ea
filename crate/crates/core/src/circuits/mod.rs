//! Circuit graph shared by the template builders and the netlist front end.

mod design;
mod netlist;
mod numbers;
mod topology;

pub use design::{design_amplifier, gm_over_id_bias, AmplifierSpec, Design, GmIdBias, DEFAULT_GM_OVER_ID, DEFAULT_TAIL_HEADROOM};
pub use netlist::{emit_netlist, parse_netlist, DeviceCard, Directive, ModelDef, Netlist, SourceCard, Warning};
pub use numbers::{format_number, parse_number};
pub use topology::{build_topology, build_topology_with, topology_to_netlist, Feedback, Kind, Supplies, Topology};

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use indexmap::IndexSet;

pub type NodeId = usize;
pub const GROUND: NodeId = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub name: String,
    pub drain: NodeId,
    pub gate: NodeId,
    pub source: NodeId,
    pub backgate: NodeId,
    pub params: DeviceParams,
}

/// Ideal DC voltage source, `v(pos) - v(neg) = value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub name: String,
    pub pos: NodeId,
    pub neg: NodeId,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    nodes: IndexSet<String>,
    pub devices: Vec<Device>,
    pub sources: Vec<Source>,
}

impl Default for Circuit {
    fn default() -> Self {
        Self::new()
    }
}

fn canonical(name: &str) -> String {
    let lower = name.to_ascii_lowercase();
    if lower == "gnd" {
        "0".to_string()
    } else {
        lower
    }
}

impl Circuit {
    pub fn new() -> Self {
        let mut nodes = IndexSet::new();
        nodes.insert("0".to_string());
        Self {
            nodes,
            devices: Vec::new(),
            sources: Vec::new(),
        }
    }

    /// Returns the id of `name`, creating the node if needed.
    pub fn node_or_insert(&mut self, name: &str) -> NodeId {
        self.nodes.insert_full(canonical(name)).0
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.nodes.get_index_of(&canonical(name))
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        self.nodes.get_index(id).map(String::as_str).unwrap_or("?")
    }

    /// Number of nodes including ground.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    pub fn add_device(
        &mut self,
        name: &str,
        terminals: [&str; 4],
        params: DeviceParams,
    ) -> usize {
        let [d, g, s, b] = terminals.map(|t| self.node_or_insert(t));
        self.devices.push(Device {
            name: name.to_string(),
            drain: d,
            gate: g,
            source: s,
            backgate: b,
            params,
        });
        self.devices.len() - 1
    }

    pub fn add_source(&mut self, name: &str, pos: &str, neg: &str, value: f64) -> usize {
        let pos = self.node_or_insert(pos);
        let neg = self.node_or_insert(neg);
        self.sources.push(Source {
            name: name.to_string(),
            pos,
            neg,
            value,
        });
        self.sources.len() - 1
    }

    pub fn device(&self, name: &str) -> Option<&Device> {
        self.devices.iter().find(|d| d.name.eq_ignore_ascii_case(name))
    }

    pub fn device_mut(&mut self, name: &str) -> Option<&mut Device> {
        self.devices.iter_mut().find(|d| d.name.eq_ignore_ascii_case(name))
    }

    pub fn source_index(&self, name: &str) -> Option<usize> {
        self.sources.iter().position(|s| s.name.eq_ignore_ascii_case(name))
    }

    pub fn set_source(&mut self, name: &str, value: f64) -> Result<()> {
        let i = self
            .source_index(name)
            .ok_or_else(|| Error::Topology(format!("no source named '{name}'")))?;
        self.sources[i].value = value;
        Ok(())
    }

    /// Source whose positive terminal is `node` and negative terminal ground.
    pub fn source_driving(&self, node: NodeId) -> Option<usize> {
        self.sources.iter().position(|s| s.pos == node && s.neg == GROUND)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::Topology("circuit has no voltage source".into()));
        }
        let grounded = self.sources.iter().any(|s| s.neg == GROUND || s.pos == GROUND)
            || self
                .devices
                .iter()
                .any(|d| [d.drain, d.gate, d.source, d.backgate].contains(&GROUND));
        if !grounded {
            return Err(Error::Topology("circuit has no ground reference".into()));
        }
        for d in &self.devices {
            d.params.validate()?;
        }
        Ok(())
    }
}

impl Circuit {
    /// Builds a circuit from a parsed netlist.
    pub fn from_netlist(net: &Netlist) -> Result<Self> {
        let mut c = Circuit::new();
        for card in &net.devices {
            let model = net
                .models
                .get(&card.model.to_ascii_lowercase())
                .ok_or_else(|| Error::UndefinedModel {
                    model: card.model.clone(),
                    span: card.span,
                })?;
            let params = DeviceParams::new(model.card.clone(), card.width_um, card.length_um);
            c.add_device(
                &card.name,
                [&card.drain, &card.gate, &card.source, &card.backgate],
                params,
            );
        }
        for s in &net.sources {
            c.add_source(&s.name, &s.pos, &s.neg, s.value);
        }
        Ok(c)
    }
}
