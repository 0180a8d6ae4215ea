//! Linear nodal network: the reference every closed-form gain is checked
//! against.
//!
//! Each device contributes g_m, g_ds and g_mb as voltage-controlled current
//! sources from drain to source. Voltage sources become ideal sources of
//! the stimulus value (zero for supplies), handled by modified nodal
//! analysis.

use crate::circuits::{Circuit, NodeId, GROUND};
use crate::dcsolve::OperatingPoint;
use crate::device::derivatives;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct NodalNetwork {
    names: Vec<String>,
    /// Admittance part, (nodes - 1) square, ground removed.
    y: DMatrix<f64>,
    sources: Vec<(NodeId, NodeId)>,
}

impl NodalNetwork {
    /// Empty network over `names`; entry 0 is ground.
    pub fn new(names: Vec<String>) -> Self {
        let n = names.len().saturating_sub(1);
        Self {
            names,
            y: DMatrix::zeros(n, n),
            sources: Vec::new(),
        }
    }

    /// Linearizes `circuit` at `op`.
    pub fn from_op(circuit: &Circuit, op: &OperatingPoint) -> Result<Self> {
        let mut net = Self::new(circuit.node_names().map(str::to_string).collect());
        for (d, bias) in circuit.devices.iter().zip(&op.device_biases) {
            let g = derivatives(&d.params, bias, 1)?;
            net.add_vccs(d.drain, d.source, d.gate, d.source, g.g_m(1));
            net.add_vccs(d.drain, d.source, d.drain, d.source, g.g_ds(1));
            net.add_vccs(d.drain, d.source, d.backgate, d.source, g.g_mb(1));
        }
        for s in &circuit.sources {
            net.add_source(s.pos, s.neg);
        }
        Ok(net)
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    /// Current `g * (v(cp) - v(cn))` flowing from `a` through the element to `b`.
    pub fn add_vccs(&mut self, a: NodeId, b: NodeId, cp: NodeId, cn: NodeId, g: f64) {
        for (row, sr) in [(a, 1.0), (b, -1.0)] {
            if row == GROUND {
                continue;
            }
            for (col, sc) in [(cp, 1.0), (cn, -1.0)] {
                if col != GROUND {
                    self.y[(row - 1, col - 1)] += sr * sc * g;
                }
            }
        }
    }

    pub fn add_conductance(&mut self, a: NodeId, b: NodeId, g: f64) {
        self.add_vccs(a, b, a, b, g);
    }

    /// Adds an ideal voltage source and returns its index.
    pub fn add_source(&mut self, pos: NodeId, neg: NodeId) -> usize {
        self.sources.push((pos, neg));
        self.sources.len() - 1
    }

    /// Node voltages (indexed by node id) for the given source values and
    /// current injections `(node, amps)` into nodes.
    pub fn solve(&self, stimulus: &[f64], injections: &[(NodeId, f64)]) -> Result<Vec<f64>> {
        if stimulus.len() != self.sources.len() {
            return Err(Error::domain("one stimulus value per source required"));
        }
        let n = self.node_count() - 1;
        let m = self.sources.len();
        let mut a = DMatrix::zeros(n + m, n + m);
        a.view_mut((0, 0), (n, n)).copy_from(&self.y);
        let mut rhs = DVector::zeros(n + m);
        for (k, &(pos, neg)) in self.sources.iter().enumerate() {
            for (node, s) in [(pos, 1.0), (neg, -1.0)] {
                if node != GROUND {
                    a[(node - 1, n + k)] += s;
                    a[(n + k, node - 1)] += s;
                }
            }
            rhs[n + k] = stimulus[k];
        }
        for &(node, i) in injections {
            if node != GROUND {
                rhs[node - 1] += i;
            }
        }
        if let Some(node) = (0..n).find(|&i| a.row(i).iter().all(|&x| x == 0.0)) {
            return Err(Error::Singular(self.names[node + 1].clone()));
        }
        let x = a
            .clone()
            .lu()
            .solve(&rhs)
            .filter(|x| x.iter().all(|v| v.is_finite()))
            .ok_or_else(|| {
                let node = (0..n)
                    .find(|&i| a.column(i).iter().all(|&x| x == 0.0))
                    .map_or_else(|| self.names.get(1).cloned().unwrap_or_default(), |i| self.names[i + 1].clone());
                Error::Singular(node)
            })?;
        let mut v = vec![0.0; n + 1];
        v[1..].copy_from_slice(&x.as_slice()[..n]);
        Ok(v)
    }
}

/// Small-signal gain from the source driving `input_node` to `output_node`.
pub fn nodal_oracle(circuit: &Circuit, op: &OperatingPoint, input_node: &str, output_node: &str) -> Result<f64> {
    let net = NodalNetwork::from_op(circuit, op)?;
    let input = circuit
        .node(input_node)
        .ok_or_else(|| Error::Topology(format!("no node named '{input_node}'")))?;
    let output = circuit
        .node(output_node)
        .ok_or_else(|| Error::Topology(format!("no node named '{output_node}'")))?;
    let k = circuit
        .source_driving(input)
        .ok_or_else(|| Error::Topology(format!("node '{input_node}' is not driven by a source")))?;
    let mut stim = vec![0.0; circuit.sources.len()];
    stim[k] = 1.0;
    Ok(net.solve(&stim, &[])?[output])
}
