//! Benchmark function units (ripple-carry adder, array multiplier) and
//! exhaustive checking of a netlist against an arithmetic oracle.
//!
//! Bit 0 is the least significant bit of every operand and result. Input and
//! output vectors are packed into a `u64` with primary input (or output) `i`
//! at bit `i`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::netlist::{exhaustive_word, lane_mask, GateKind, Netlist, NetlistBuilder, Signal};

/// Default ceiling on the number of inputs enumerated exhaustively.
pub const DEFAULT_INPUT_CAP: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FunctionUnitSpec {
    Rca { width: usize },
    Bam { rows: usize, cols: usize },
}

impl FunctionUnitSpec {
    pub fn rca(width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidParameter("RCA width must be at least 1".into()));
        }
        Ok(FunctionUnitSpec::Rca { width })
    }

    pub fn bam(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("BAM dimensions must be at least 1x1".into()));
        }
        Ok(FunctionUnitSpec::Bam { rows, cols })
    }

    pub fn input_bits(&self) -> usize {
        match *self {
            FunctionUnitSpec::Rca { width } => 2 * width + 1,
            FunctionUnitSpec::Bam { rows, cols } => rows + cols,
        }
    }

    pub fn output_bits(&self) -> usize {
        match *self {
            FunctionUnitSpec::Rca { width } => width + 1,
            FunctionUnitSpec::Bam { rows, cols } => rows + cols,
        }
    }

    pub fn build(&self) -> Result<Netlist> {
        match *self {
            FunctionUnitSpec::Rca { width } => build_rca(width),
            FunctionUnitSpec::Bam { rows, cols } => build_bam(rows, cols),
        }
    }

    /// Arithmetic reference on packed vectors. Valid while operands fit in
    /// 64 bits.
    pub fn oracle(&self, inputs: u64) -> u64 {
        match *self {
            FunctionUnitSpec::Rca { width } => {
                let a = inputs & low_mask(width);
                let b = (inputs >> width) & low_mask(width);
                let cin = (inputs >> (2 * width)) & 1;
                a + b + cin
            }
            FunctionUnitSpec::Bam { rows, cols } => {
                let a = inputs & low_mask(rows);
                let b = (inputs >> rows) & low_mask(cols);
                a * b
            }
        }
    }
}

fn low_mask(bits: usize) -> u64 {
    if bits >= 64 {
        !0
    } else {
        (1u64 << bits) - 1
    }
}

impl fmt::Display for FunctionUnitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionUnitSpec::Rca { width } => write!(f, "rca:{width}"),
            FunctionUnitSpec::Bam { rows, cols } => write!(f, "bam:{rows}x{cols}"),
        }
    }
}

impl FromStr for FunctionUnitSpec {
    type Err = Error;

    /// Parses `rca:<w>` or `bam:<n>x<m>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad unit specifier `{s}` (expected rca:<w> or bam:<n>x<m>)"));
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        match s.trim().split_once(':') {
            Some(("rca", w)) => Self::rca(num(w)?),
            Some(("bam", dims)) => {
                let (n, m) = dims.split_once('x').ok_or_else(bad)?;
                Self::bam(num(n)?, num(m)?)
            }
            _ => Err(bad()),
        }
    }
}

/// `width`-bit ripple-carry adder. Inputs `a0..`, `b0..`, `cin`; outputs
/// `s0..` then `cout`.
pub fn build_rca(width: usize) -> Result<Netlist> {
    FunctionUnitSpec::rca(width)?;
    let mut b = NetlistBuilder::new();
    let a: Vec<_> = (0..width)
        .map(|i| b.add_input(&format!("a{i}")))
        .collect::<Result<_>>()?;
    let bb: Vec<_> = (0..width)
        .map(|i| b.add_input(&format!("b{i}")))
        .collect::<Result<_>>()?;
    let mut carry = b.add_input("cin")?;
    for i in 0..width {
        b.push_scope(format!("fa{i}"));
        let t = b.named_gate(GateKind::Xor2, &[a[i], bb[i]], "t")?;
        let s = b.named_gate(GateKind::Xor2, &[t, carry], "sum")?;
        let g = b.named_gate(GateKind::And2, &[a[i], bb[i]], "g")?;
        let p = b.named_gate(GateKind::And2, &[t, carry], "p")?;
        carry = b.named_gate(GateKind::Or2, &[g, p], "cout")?;
        b.pop_scope();
        b.add_output(s);
    }
    b.add_output(carry);
    Ok(b.build())
}

/// `rows x cols` unsigned array multiplier. Inputs `a0..a{rows-1}` then
/// `b0..b{cols-1}`; outputs the `rows + cols` product bits.
///
/// Partial products `a_i b_j` feed a carry-save array: row `i` adds its
/// partial products to the shifted sums and carries of row `i - 1`, retiring
/// one product bit per row. A ripple adder merges the last sums and carries.
pub fn build_bam(rows: usize, cols: usize) -> Result<Netlist> {
    FunctionUnitSpec::bam(rows, cols)?;
    let mut b = NetlistBuilder::new();
    let a: Vec<_> = (0..rows)
        .map(|i| b.add_input(&format!("a{i}")))
        .collect::<Result<_>>()?;
    let x: Vec<_> = (0..cols)
        .map(|j| b.add_input(&format!("b{j}")))
        .collect::<Result<_>>()?;

    let mut pp = vec![vec![Signal::Zero; cols]; rows];
    for i in 0..rows {
        for j in 0..cols {
            pp[i][j] = Signal::Net(b.named_gate(GateKind::And2, &[a[i], x[j]], &format!("pp{i}_{j}"))?);
        }
    }

    let mut product = Vec::with_capacity(rows + cols);
    // sums[j] has weight (i + j) after row i; carries[j] weight (i + j + 1).
    let mut sums = pp[0].clone();
    let mut carries = vec![Signal::Zero; cols];
    for (i, row) in pp.iter().enumerate().skip(1) {
        product.push(sums[0]);
        b.push_scope(format!("row{i}"));
        let mut next_sums = Vec::with_capacity(cols);
        let mut next_carries = Vec::with_capacity(cols);
        for j in 0..cols {
            let upper = sums.get(j + 1).copied().unwrap_or(Signal::Zero);
            let (s, c) = add_live(&mut b, &[row[j], upper, carries[j]]);
            next_sums.push(s);
            next_carries.push(c);
        }
        b.pop_scope();
        sums = next_sums;
        carries = next_carries;
    }
    product.push(sums[0]);

    // Remaining weights: sums[j + 1] and carries[j] both sit at rows + j.
    b.push_scope("final");
    let mut carry = Signal::Zero;
    for j in 0..cols {
        let upper = sums.get(j + 1).copied().unwrap_or(Signal::Zero);
        let (s, c) = add_live(&mut b, &[upper, carries[j], carry]);
        product.push(s);
        carry = c;
    }
    b.pop_scope();
    debug_assert_eq!(product.len(), rows + cols);

    for sig in product {
        let net = b.materialize(sig);
        b.add_output(net);
    }
    Ok(b.build())
}

/// Adds operand bits, dropping constant zeros first so that missing array
/// cells degrade to half adders or wires.
fn add_live(b: &mut NetlistBuilder, bits: &[Signal]) -> (Signal, Signal) {
    let live: Vec<Signal> = bits.iter().copied().filter(|s| *s != Signal::Zero).collect();
    b.add_bits(&live)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    /// Packed input vector.
    pub inputs: u64,
    pub expected: u64,
    pub actual: u64,
}

impl Counterexample {
    pub fn input_bits(&self, count: usize) -> Vec<bool> {
        unpack(self.inputs, count)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub vectors_checked: u64,
    /// Lexicographically smallest failing input vector, comparing inputs in
    /// primary-input order (the first input is the most significant key).
    pub counterexample: Option<Counterexample>,
}

pub fn unpack(bits: u64, count: usize) -> Vec<bool> {
    (0..count).map(|i| (bits >> i) & 1 == 1).collect()
}

pub fn pack(bits: &[bool]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | (u64::from(b) << i))
}

/// Key ordering packed vectors lexicographically by primary-input order.
pub(crate) fn lex_key(vector: u64, inputs: usize) -> u64 {
    if inputs == 0 {
        0
    } else {
        vector.reverse_bits() >> (64 - inputs)
    }
}

pub fn exhaustive_equivalence<F>(netlist: &Netlist, oracle: F) -> Result<EquivalenceReport>
where
    F: Fn(u64) -> u64 + Sync,
{
    exhaustive_equivalence_with_cap(netlist, oracle, DEFAULT_INPUT_CAP)
}

/// Checks `netlist` against `oracle` on all `2^inputs` vectors. The sweep is
/// split into 64-lane words evaluated in parallel; the reported
/// counterexample does not depend on scheduling.
pub fn exhaustive_equivalence_with_cap<F>(netlist: &Netlist, oracle: F, cap: usize) -> Result<EquivalenceReport>
where
    F: Fn(u64) -> u64 + Sync,
{
    let n = netlist.input_count();
    if n > cap {
        return Err(Error::TooLarge(format!(
            "{n} inputs exceed the exhaustive cap of {cap}; use sampled checking instead"
        )));
    }
    if netlist.output_count() > 64 {
        return Err(Error::InvalidParameter("at most 64 outputs can be packed".into()));
    }
    let sim = netlist.compile()?;
    let failing = exhaustive_sweep(
        n,
        || (Vec::new(), Vec::new()),
        |(values, out), w, inputs| {
            sim.run(inputs, None, values, out).expect("arity matches");
            let mut bad = 0u64;
            for lane in 0..64 {
                let vector = 64 * w + lane;
                if oracle(vector) != gather_lane(out, lane) {
                    bad |= 1 << lane;
                }
            }
            bad
        },
    );
    let counterexample = failing.map(|inputs| {
        let out = sim
            .eval_words(
                &unpack(inputs, n)
                    .iter()
                    .map(|&b| if b { !0 } else { 0 })
                    .collect::<Vec<_>>(),
            )
            .expect("arity matches");
        Counterexample {
            inputs,
            expected: oracle(inputs),
            actual: gather_lane(&out, 0),
        }
    });
    Ok(EquivalenceReport {
        equivalent: counterexample.is_none(),
        vectors_checked: 1u64 << n,
        counterexample,
    })
}

/// Packs lane `lane` of each output word into an integer.
pub(crate) fn gather_lane(words: &[u64], lane: u64) -> u64 {
    words
        .iter()
        .enumerate()
        .fold(0u64, |acc, (o, w)| acc | (((w >> lane) & 1) << o))
}

/// Runs `per_word` over every 64-lane word of an exhaustive sweep of
/// `inputs` bits, in parallel. `per_word` receives the word index and the
/// input words and returns a bitmask of failing lanes. Returns the
/// lexicographically smallest failing vector, independent of scheduling.
pub(crate) fn exhaustive_sweep<S, I, F>(inputs: usize, init: I, per_word: F) -> Option<u64>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64, &[u64]) -> u64 + Sync + Send,
{
    let words = 1u64 << inputs.saturating_sub(6);
    let mask = lane_mask(inputs);
    (0..words)
        .into_par_iter()
        .map_init(
            || (init(), Vec::with_capacity(inputs)),
            |(state, buf), w| {
                buf.clear();
                buf.extend((0..inputs).map(|i| exhaustive_word(i, w)));
                let mut bad = per_word(state, w, buf) & mask;
                let mut best: Option<u64> = None;
                while bad != 0 {
                    let lane = bad.trailing_zeros() as u64;
                    bad &= bad - 1;
                    let v = 64 * w + lane;
                    if best.is_none_or(|b| lex_key(v, inputs) < lex_key(b, inputs)) {
                        best = Some(v);
                    }
                }
                best
            },
        )
        .reduce(
            || None,
            |x, y| match (x, y) {
                (Some(x), Some(y)) => Some(if lex_key(x, inputs) <= lex_key(y, inputs) { x } else { y }),
                (x, None) => x,
                (None, y) => y,
            },
        )
}
