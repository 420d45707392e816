//! Gate-level combinational netlists.
//!
//! Every net is either a primary input or the output of exactly one gate and
//! is identified by a dense [`NetId`]. Gates may be stored in any order, so a
//! netlist parsed from JSON is only known to be acyclic once
//! [`Netlist::topological_order`] succeeds. Netlists produced by
//! [`NetlistBuilder`] are acyclic and stored in topological order.
//!
//! Builders name nets hierarchically: a scope path joined with `/` followed
//! by the role of the net, e.g. `u2/fa1/sum` is the sum net of full adder 1
//! inside replica 2. Anonymous nets get a `_<counter>` suffix. Names carry no
//! meaning beyond debugging.

mod builder;
mod json;
mod sim;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builder::{NetlistBuilder, Signal};
pub use json::{GateDoc, NetlistDoc};
pub(crate) use sim::{exhaustive_word, lane_mask};
pub use sim::{CompiledNetlist, Corruption, NetCorruption};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetId(pub(crate) u32);

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "AND2")]
    And2,
    #[serde(rename = "OR2")]
    Or2,
    #[serde(rename = "NOT")]
    Not,
    #[serde(rename = "XOR2")]
    Xor2,
    /// Inputs are `(select, in0, in1)`.
    #[serde(rename = "MUX2")]
    Mux2,
    #[serde(rename = "BUF")]
    Buf,
}

impl GateKind {
    pub const ALL: [GateKind; 6] = [
        GateKind::And2,
        GateKind::Or2,
        GateKind::Not,
        GateKind::Xor2,
        GateKind::Mux2,
        GateKind::Buf,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Not | GateKind::Buf => 1,
            GateKind::And2 | GateKind::Or2 | GateKind::Xor2 => 2,
            GateKind::Mux2 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::And2 => "AND2",
            GateKind::Or2 => "OR2",
            GateKind::Not => "NOT",
            GateKind::Xor2 => "XOR2",
            GateKind::Mux2 => "MUX2",
            GateKind::Buf => "BUF",
        }
    }

    /// Evaluates the gate on 64 independent lanes at once.
    #[inline]
    pub fn eval_word(self, a: u64, b: u64, c: u64) -> u64 {
        match self {
            GateKind::And2 => a & b,
            GateKind::Or2 => a | b,
            GateKind::Not => !a,
            GateKind::Xor2 => a ^ b,
            GateKind::Mux2 => (!a & b) | (a & c),
            GateKind::Buf => a,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownGateKind(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub(crate) kind: GateKind,
    pub(crate) inputs: Vec<NetId>,
    pub(crate) output: NetId,
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn output(&self) -> NetId {
        self.output
    }
}

/// Exact census of the gates in a netlist.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GateCensus {
    pub counts: BTreeMap<GateKind, usize>,
    pub total: usize,
}

impl GateCensus {
    pub fn get(&self, kind: GateKind) -> usize {
        self.counts.get(&kind).copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct Netlist {
    names: Vec<String>,
    index: HashMap<String, NetId>,
    inputs: Vec<NetId>,
    gates: Vec<Gate>,
    outputs: Vec<NetId>,
}

impl Netlist {
    /// Assembles a netlist from named parts. Names must be unique, gate
    /// arities must match their kind and every reference must resolve. Gates
    /// may appear in any order and cycles are not rejected here.
    pub fn from_doc(doc: NetlistDoc) -> Result<Self> {
        let mut names = Vec::with_capacity(doc.inputs.len() + doc.gates.len());
        let mut index = HashMap::with_capacity(names.capacity());
        let mut define = |name: &str| -> Result<NetId> {
            if index.contains_key(name) {
                return Err(Error::DuplicateNet(name.to_string()));
            }
            let id = NetId(names.len() as u32);
            names.push(name.to_string());
            index.insert(name.to_string(), id);
            Ok(id)
        };

        let inputs = doc.inputs.iter().map(|n| define(n)).collect::<Result<Vec<_>>>()?;
        let gate_outputs = doc
            .gates
            .iter()
            .map(|g| define(&g.output))
            .collect::<Result<Vec<_>>>()?;

        let resolve = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UndefinedNet(name.to_string()))
        };
        let mut gates = Vec::with_capacity(doc.gates.len());
        for (g, output) in doc.gates.iter().zip(gate_outputs) {
            if g.inputs.len() != g.kind.arity() {
                return Err(Error::GateArity {
                    kind: g.kind.to_string(),
                    net: g.output.clone(),
                    expected: g.kind.arity(),
                    got: g.inputs.len(),
                });
            }
            let inputs = g.inputs.iter().map(|n| resolve(n)).collect::<Result<Vec<_>>>()?;
            gates.push(Gate {
                kind: g.kind,
                inputs,
                output,
            });
        }
        let outputs = doc.outputs.iter().map(|n| resolve(n)).collect::<Result<Vec<_>>>()?;

        Ok(Netlist {
            names,
            index,
            inputs,
            gates,
            outputs,
        })
    }

    pub fn to_doc(&self) -> NetlistDoc {
        NetlistDoc {
            inputs: self.inputs.iter().map(|&n| self.net_name(n).to_string()).collect(),
            gates: self
                .gates
                .iter()
                .map(|g| GateDoc {
                    kind: g.kind,
                    inputs: g.inputs.iter().map(|&n| self.net_name(n).to_string()).collect(),
                    output: self.net_name(g.output).to_string(),
                })
                .collect(),
            outputs: self.outputs.iter().map(|&n| self.net_name(n).to_string()).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_doc(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("netlist documents always serialize")
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn net_count(&self) -> usize {
        self.names.len()
    }

    pub fn net_name(&self, net: NetId) -> &str {
        &self.names[net.index()]
    }

    pub fn net(&self, name: &str) -> Option<NetId> {
        self.index.get(name).copied()
    }

    /// Gate indices ordered so that every gate follows all gates feeding it.
    /// Among ready gates the lowest stored index goes first, which makes the
    /// order canonical and leaves an already-sorted gate list untouched.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let mut driver = vec![None; self.names.len()];
        for (i, g) in self.gates.iter().enumerate() {
            driver[g.output.index()] = Some(i);
        }
        let mut pending = vec![0usize; self.gates.len()];
        let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); self.gates.len()];
        for (i, g) in self.gates.iter().enumerate() {
            for net in &g.inputs {
                if let Some(d) = driver[net.index()] {
                    pending[i] += 1;
                    fanout[d].push(i);
                }
            }
        }

        let mut ready: BinaryHeap<Reverse<usize>> = pending
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == 0)
            .map(|(i, _)| Reverse(i))
            .collect();
        let mut order = Vec::with_capacity(self.gates.len());
        while let Some(Reverse(i)) = ready.pop() {
            order.push(i);
            for &succ in &fanout[i] {
                pending[succ] -= 1;
                if pending[succ] == 0 {
                    ready.push(Reverse(succ));
                }
            }
        }

        if order.len() == self.gates.len() {
            return Ok(order);
        }
        // Every unsorted gate has an unsorted driver, so walking drivers
        // backwards must revisit a gate; that gate lies on a cycle.
        let mut seen = vec![false; self.gates.len()];
        let mut at = (0..self.gates.len()).find(|&i| pending[i] > 0).unwrap();
        while !seen[at] {
            seen[at] = true;
            at = self.gates[at]
                .inputs
                .iter()
                .filter_map(|n| driver[n.index()])
                .find(|&d| pending[d] > 0)
                .unwrap();
        }
        Err(Error::CyclicNetlist {
            net: self.net_name(self.gates[at].output).to_string(),
        })
    }

    /// Maximum number of gates on any primary-input to primary-output path.
    pub fn logic_depth(&self) -> Result<usize> {
        let order = self.topological_order()?;
        let mut depth = vec![0usize; self.names.len()];
        for i in order {
            let g = &self.gates[i];
            let d = g.inputs.iter().map(|n| depth[n.index()]).max().unwrap_or(0);
            depth[g.output.index()] = d + 1;
        }
        Ok(self.outputs.iter().map(|n| depth[n.index()]).max().unwrap_or(0))
    }

    pub fn gate_count(&self) -> GateCensus {
        let mut census = GateCensus::default();
        for g in &self.gates {
            *census.counts.entry(g.kind).or_default() += 1;
        }
        census.total = self.gates.len();
        census
    }

    pub fn compile(&self) -> Result<CompiledNetlist> {
        CompiledNetlist::new(self)
    }

    /// Evaluates the netlist for one input assignment given in primary-input
    /// order. Compiles on every call; use [`Netlist::compile`] for loops.
    pub fn evaluate(&self, inputs: &[bool]) -> Result<Vec<bool>> {
        self.compile()?.eval_bits(inputs)
    }
}
