//! Bit-parallel evaluation: each net carries a `u64` whose lanes are 64
//! independent input vectors.

use super::{GateKind, NetId, Netlist};
use crate::error::{Error, Result};

/// Value substitution applied to a net right after it is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Corruption {
    Force0,
    Force1,
    Invert,
}

impl Corruption {
    #[inline]
    pub fn apply(self, word: u64) -> u64 {
        match self {
            Corruption::Force0 => 0,
            Corruption::Force1 => !0,
            Corruption::Invert => !word,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetCorruption {
    pub net: NetId,
    pub corruption: Corruption,
}

#[derive(Clone, Copy, Debug)]
struct Op {
    kind: GateKind,
    ins: [u32; 3],
    out: u32,
}

/// A netlist flattened into a topologically ordered instruction list.
#[derive(Clone, Debug)]
pub struct CompiledNetlist {
    net_count: usize,
    inputs: Vec<u32>,
    ops: Vec<Op>,
    outputs: Vec<u32>,
}

impl CompiledNetlist {
    pub(super) fn new(netlist: &Netlist) -> Result<Self> {
        let order = netlist.topological_order()?;
        let ops = order
            .into_iter()
            .map(|i| {
                let g = &netlist.gates()[i];
                let mut ins = [0u32; 3];
                for (slot, net) in ins.iter_mut().zip(g.inputs()) {
                    *slot = net.0;
                }
                Op {
                    kind: g.kind(),
                    ins,
                    out: g.output().0,
                }
            })
            .collect();
        Ok(CompiledNetlist {
            net_count: netlist.net_count(),
            inputs: netlist.inputs().iter().map(|n| n.0).collect(),
            ops,
            outputs: netlist.outputs().iter().map(|n| n.0).collect(),
        })
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn eval_bits(&self, inputs: &[bool]) -> Result<Vec<bool>> {
        let words: Vec<u64> = inputs.iter().map(|&b| if b { !0 } else { 0 }).collect();
        Ok(self.eval_words(&words)?.into_iter().map(|w| w & 1 == 1).collect())
    }

    pub fn eval_words(&self, inputs: &[u64]) -> Result<Vec<u64>> {
        self.eval_words_with(inputs, &[])
    }

    /// Like [`CompiledNetlist::eval_words`], with selected nets overridden as
    /// soon as their value is known (primary inputs included).
    pub fn eval_words_with(&self, inputs: &[u64], corruptions: &[NetCorruption]) -> Result<Vec<u64>> {
        let overlay = self.overlay(corruptions);
        let mut values = Vec::new();
        let mut out = Vec::new();
        self.run(inputs, overlay.as_deref(), &mut values, &mut out)?;
        Ok(out)
    }

    pub(crate) fn overlay(&self, corruptions: &[NetCorruption]) -> Option<Vec<Option<Corruption>>> {
        if corruptions.is_empty() {
            return None;
        }
        let mut overlay = vec![None; self.net_count];
        for c in corruptions {
            overlay[c.net.index()] = Some(c.corruption);
        }
        Some(overlay)
    }

    /// Core evaluation loop; reuses caller-owned buffers.
    pub(crate) fn run(
        &self,
        inputs: &[u64],
        overlay: Option<&[Option<Corruption>]>,
        values: &mut Vec<u64>,
        out: &mut Vec<u64>,
    ) -> Result<()> {
        if inputs.len() != self.inputs.len() {
            return Err(Error::InputArity {
                expected: self.inputs.len(),
                got: inputs.len(),
            });
        }
        values.clear();
        values.resize(self.net_count, 0);
        for (&net, &w) in self.inputs.iter().zip(inputs) {
            values[net as usize] = w;
        }
        match overlay {
            None => {
                for op in &self.ops {
                    let [a, b, c] = op.ins;
                    values[op.out as usize] =
                        op.kind
                            .eval_word(values[a as usize], values[b as usize], values[c as usize]);
                }
            }
            Some(overlay) => {
                for &net in &self.inputs {
                    if let Some(c) = overlay[net as usize] {
                        values[net as usize] = c.apply(values[net as usize]);
                    }
                }
                for op in &self.ops {
                    let [a, b, c] = op.ins;
                    let mut w = op
                        .kind
                        .eval_word(values[a as usize], values[b as usize], values[c as usize]);
                    if let Some(c) = overlay[op.out as usize] {
                        w = c.apply(w);
                    }
                    values[op.out as usize] = w;
                }
            }
        }
        out.clear();
        out.extend(self.outputs.iter().map(|&n| values[n as usize]));
        Ok(())
    }
}

/// Word `word` of an exhaustive sweep assigns vector `64 * word + lane` to
/// lane `lane`; input `input` takes bit `input` of the vector index.
#[inline]
pub(crate) fn exhaustive_word(input: usize, word: u64) -> u64 {
    const LOW: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    if input < 6 {
        LOW[input]
    } else if (word >> (input - 6)) & 1 == 1 {
        !0
    } else {
        0
    }
}

/// Lanes of an exhaustive sweep over `inputs` bits that hold real vectors.
#[inline]
pub(crate) fn lane_mask(inputs: usize) -> u64 {
    if inputs >= 6 {
        !0
    } else {
        (1u64 << (1 << inputs)) - 1
    }
}
