//! NMR and MMR voters, behavioral and gate-level, and assembly of complete
//! redundant systems.
//!
//! An NMR system votes `n` (odd) replicas by plain majority. An MMR system
//! with `k` replicas splits them into a majority cluster (units 1..=3) and a
//! minority cluster (units 4..=k). Its voter computes
//!
//! * `Maj`: 2-of-3 majority over the majority cluster,
//! * `P`/`Q`: AND/OR over the minority cluster,
//! * `Min`: `Q` when `Maj` is 1, otherwise `P`,
//! * `MO = Maj & Min`, the system output.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netlist::{GateKind, NetId, Netlist, NetlistBuilder, Signal};

/// Smallest MMR accepted by default: two minority units.
pub const MMR_MIN_UNITS: usize = 5;
/// Smallest MMR accepted with the single-minority-unit override.
pub const MMR_EXPERIMENTAL_MIN_UNITS: usize = 4;
/// Unit indices are stored in 64-bit masks.
pub const MAX_UNITS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Nmr,
    Mmr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RedundancyScheme {
    kind: SchemeKind,
    units: usize,
}

impl RedundancyScheme {
    pub fn nmr(n: usize) -> Result<Self> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::InvalidArity(format!(
                "NMR needs an odd unit count >= 3, got {n}"
            )));
        }
        Self::checked(SchemeKind::Nmr, n)
    }

    pub fn mmr(k: usize) -> Result<Self> {
        if k < MMR_MIN_UNITS {
            return Err(Error::InvalidArity(format!(
                "MMR needs at least {MMR_MIN_UNITS} units, got {k}"
            )));
        }
        Self::checked(SchemeKind::Mmr, k)
    }

    /// Admits 4-MMR, whose single minority unit is a single point of failure.
    pub fn mmr_allow_single_minority(k: usize) -> Result<Self> {
        if k < MMR_EXPERIMENTAL_MIN_UNITS {
            return Err(Error::InvalidArity(format!(
                "MMR needs at least {MMR_EXPERIMENTAL_MIN_UNITS} units, got {k}"
            )));
        }
        Self::checked(SchemeKind::Mmr, k)
    }

    fn checked(kind: SchemeKind, units: usize) -> Result<Self> {
        if units > MAX_UNITS {
            return Err(Error::InvalidArity(format!(
                "at most {MAX_UNITS} units are supported, got {units}"
            )));
        }
        Ok(RedundancyScheme { kind, units })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn unit_count(&self) -> usize {
        self.units
    }

    /// Behavioral vote over one output bit per unit.
    pub fn vote(&self, bits: &[bool]) -> Result<bool> {
        if bits.len() != self.units {
            return Err(Error::InvalidArity(format!(
                "{self} votes over {} bits, got {}",
                self.units,
                bits.len()
            )));
        }
        Ok(self.vote_mask(crate::function_units::pack(bits)))
    }

    /// Vote with unit `i` (1-based) carried in bit `i - 1` of `outputs`.
    #[inline]
    pub(crate) fn vote_mask(&self, outputs: u64) -> bool {
        match self.kind {
            SchemeKind::Nmr => {
                let live = outputs & unit_mask(self.units);
                live.count_ones() as usize > self.units / 2
            }
            SchemeKind::Mmr => {
                let maj = (outputs & 0b111).count_ones() >= 2;
                let minority = (outputs >> 3) & unit_mask(self.units - 3);
                // MO = Maj & Min and Min = Q whenever Maj = 1.
                maj && minority != 0
            }
        }
    }
}

pub(crate) fn unit_mask(units: usize) -> u64 {
    if units >= 64 {
        !0
    } else {
        (1u64 << units) - 1
    }
}

impl fmt::Display for RedundancyScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SchemeKind::Nmr => write!(f, "nmr:{}", self.units),
            SchemeKind::Mmr => write!(f, "mmr:{}", self.units),
        }
    }
}

impl FromStr for RedundancyScheme {
    type Err = Error;

    /// Parses `nmr:<n>` or `mmr:<k>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad scheme specifier `{s}` (expected nmr:<n> or mmr:<k>)"));
        let (kind, count) = s.trim().split_once(':').ok_or_else(bad)?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        match kind {
            "nmr" => Self::nmr(count),
            "mmr" => Self::mmr(count),
            _ => Err(bad()),
        }
    }
}

impl Serialize for RedundancyScheme {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Every signal of one MMR vote.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MmrVoterTrace {
    pub maj: bool,
    pub p: bool,
    pub q: bool,
    pub min_out: bool,
    pub mo: bool,
}

pub fn vote_nmr(bits: &[bool]) -> Result<bool> {
    RedundancyScheme::nmr(bits.len())?.vote(bits)
}

pub fn vote_mmr(bits: &[bool]) -> Result<MmrVoterTrace> {
    vote_mmr_with_floor(bits, MMR_MIN_UNITS)
}

/// [`vote_mmr`] with a configurable minimum unit count (never below 4).
pub fn vote_mmr_with_floor(bits: &[bool], floor: usize) -> Result<MmrVoterTrace> {
    let floor = floor.max(MMR_EXPERIMENTAL_MIN_UNITS);
    if bits.len() < floor {
        return Err(Error::InvalidArity(format!(
            "MMR vote needs at least {floor} bits, got {}",
            bits.len()
        )));
    }
    let maj = bits[..3].iter().filter(|&&b| b).count() >= 2;
    let p = bits[3..].iter().all(|&b| b);
    let q = bits[3..].iter().any(|&b| b);
    let min_out = if maj { q } else { p };
    Ok(MmrVoterTrace {
        maj,
        p,
        q,
        min_out,
        mo: maj && min_out,
    })
}

/// Nets of one MMR voter instance.
#[derive(Clone, Copy, Debug)]
pub struct MmrVoterNets {
    pub maj: NetId,
    pub p: NetId,
    pub q: NetId,
    pub min_out: NetId,
    pub mo: NetId,
}

/// Emits an NMR majority voter over `inputs` into `b` and returns its output.
///
/// Three inputs use the AO222 composite. Larger voters count the ones with a
/// column-compression tree of full and half adders and compare the count
/// against `(n + 1) / 2`.
pub fn emit_nmr_voter(b: &mut NetlistBuilder, inputs: &[NetId]) -> NetId {
    let n = inputs.len();
    assert!(n >= 3 && n % 2 == 1, "NMR voter needs an odd input count >= 3");
    if n == 3 {
        return b.majority3(inputs[0], inputs[1], inputs[2]);
    }

    // columns[w] holds bits of weight 2^w still to be summed.
    let mut columns: Vec<Vec<Signal>> = vec![inputs.iter().map(|&n| Signal::Net(n)).collect()];
    let mut w = 0;
    while w < columns.len() {
        while columns[w].len() > 1 {
            let take = columns[w].len().min(3);
            let operands: Vec<Signal> = columns[w].drain(..take).collect();
            let (s, c) = b.add_bits(&operands);
            columns[w].push(s);
            if c != Signal::Zero {
                if columns.len() == w + 1 {
                    columns.push(Vec::new());
                }
                columns[w + 1].push(c);
            }
        }
        w += 1;
    }
    let count: Vec<Signal> = columns
        .into_iter()
        .map(|c| c.into_iter().next().unwrap_or(Signal::Zero))
        .collect();

    // count >= threshold, scanning from the least significant bit: with
    // ge_i covering bits 0..i, ge_{i+1} = x_i & ge_i if t_i else x_i | ge_i.
    let threshold = n.div_ceil(2);
    let bits = usize::BITS as usize - threshold.leading_zeros() as usize;
    let mut ge = Signal::One;
    for i in 0..bits.max(count.len()) {
        let x = count.get(i).copied().unwrap_or(Signal::Zero);
        ge = if (threshold >> i) & 1 == 1 {
            b.and(x, ge)
        } else {
            b.or(x, ge)
        };
    }
    match ge {
        Signal::Net(net) => net,
        _ => unreachable!("threshold is positive and the count is not constant"),
    }
}

/// Emits the MMR voter over `inputs` (majority cluster first) into `b`.
pub fn emit_mmr_voter(b: &mut NetlistBuilder, inputs: &[NetId]) -> Result<MmrVoterNets> {
    if inputs.len() < MMR_EXPERIMENTAL_MIN_UNITS {
        return Err(Error::InvalidArity(format!(
            "MMR voter needs at least {MMR_EXPERIMENTAL_MIN_UNITS} inputs, got {}",
            inputs.len()
        )));
    }
    let maj = b.majority3(inputs[0], inputs[1], inputs[2]);
    let minority = &inputs[3..];
    let p = b.tree(GateKind::And2, minority).unwrap();
    let q = b.tree(GateKind::Or2, minority).unwrap();
    let min_out = b.named_gate(GateKind::Mux2, &[maj, p, q], "min")?;
    let mo = b.named_gate(GateKind::And2, &[maj, min_out], "mo")?;
    Ok(MmrVoterNets { maj, p, q, min_out, mo })
}

fn voter_inputs(b: &mut NetlistBuilder, n: usize) -> Result<Vec<NetId>> {
    (1..=n).map(|i| b.add_input(&format!("f{i}"))).collect()
}

/// Standalone NMR voter: inputs `f1..fn`, one output.
pub fn build_nmr_voter(n: usize) -> Result<Netlist> {
    RedundancyScheme::nmr(n)?;
    let mut b = NetlistBuilder::new();
    let inputs = voter_inputs(&mut b, n)?;
    let out = emit_nmr_voter(&mut b, &inputs);
    b.add_output(out);
    Ok(b.build())
}

/// Standalone MMR voter: inputs `f1..fk`, outputs `[MO, Min]`.
pub fn build_mmr_voter(k: usize) -> Result<Netlist> {
    RedundancyScheme::mmr(k)?;
    build_mmr_voter_unchecked(k)
}

/// [`build_mmr_voter`] also admitting k = 4.
pub fn build_mmr_voter_allow_single_minority(k: usize) -> Result<Netlist> {
    RedundancyScheme::mmr_allow_single_minority(k)?;
    build_mmr_voter_unchecked(k)
}

fn build_mmr_voter_unchecked(k: usize) -> Result<Netlist> {
    let mut b = NetlistBuilder::new();
    let inputs = voter_inputs(&mut b, k)?;
    let nets = emit_mmr_voter(&mut b, &inputs)?;
    b.add_output(nets.mo);
    b.add_output(nets.min_out);
    Ok(b.build())
}

pub fn build_voter(scheme: RedundancyScheme) -> Result<Netlist> {
    match scheme.kind() {
        SchemeKind::Nmr => build_nmr_voter(scheme.unit_count()),
        SchemeKind::Mmr => build_mmr_voter_unchecked(scheme.unit_count()),
    }
}

/// A replicated unit with per-bit voters, plus the bookkeeping needed to
/// inject faults on replica outputs.
#[derive(Clone, Debug)]
pub struct RedundantSystem {
    pub scheme: RedundancyScheme,
    pub netlist: Netlist,
    /// `replica_outputs[u][bit]` is output `bit` of replica `u + 1`.
    pub replica_outputs: Vec<Vec<NetId>>,
}

/// Replicates `unit` once per scheme unit (replicas share the primary
/// inputs) and votes every output bit position separately. System outputs
/// are the per-bit votes (`MO` for MMR). Replica `u` lives in scope `u<u>`,
/// the voter for bit `i` in scope `v<i>`.
pub fn build_redundant_system(unit: &Netlist, scheme: RedundancyScheme) -> Result<RedundantSystem> {
    let mut b = NetlistBuilder::new();
    let inputs: Vec<NetId> = unit
        .inputs()
        .iter()
        .map(|&n| b.add_input(unit.net_name(n)))
        .collect::<Result<_>>()?;
    let mut replica_outputs = Vec::with_capacity(scheme.unit_count());
    for u in 1..=scheme.unit_count() {
        let mut outs = b.instantiate(unit, &inputs, &format!("u{u}"))?;
        // A unit output wired straight to an input would be shared by every
        // replica; give each replica its own net so faults stay local.
        for (bit, net) in outs.iter_mut().enumerate() {
            if inputs.contains(net) {
                *net = b.named_gate(GateKind::Buf, &[*net], &format!("u{u}/out{bit}"))?;
            }
        }
        replica_outputs.push(outs);
    }

    for bit in 0..unit.output_count() {
        let column: Vec<NetId> = replica_outputs.iter().map(|outs| outs[bit]).collect();
        b.push_scope(format!("v{bit}"));
        let out = match scheme.kind() {
            SchemeKind::Nmr => Ok(emit_nmr_voter(&mut b, &column)),
            SchemeKind::Mmr => emit_mmr_voter(&mut b, &column).map(|v| v.mo),
        };
        b.pop_scope();
        b.add_output(out?);
    }
    Ok(RedundantSystem {
        scheme,
        netlist: b.build(),
        replica_outputs,
    })
}
