use std::collections::HashMap;

use super::{Gate, GateKind, NetId, Netlist};
use crate::error::{Error, Result};

/// A value during construction: a real net or a known constant. Constants
/// fold away through the composite helpers, so builders can describe
/// structures with missing operands uniformly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Signal {
    Zero,
    One,
    Net(NetId),
}

impl From<NetId> for Signal {
    fn from(net: NetId) -> Self {
        Signal::Net(net)
    }
}

/// Incremental netlist construction. Gates can only consume nets that
/// already exist, so the result is acyclic and topologically ordered.
#[derive(Debug, Default)]
pub struct NetlistBuilder {
    names: Vec<String>,
    index: HashMap<String, NetId>,
    inputs: Vec<NetId>,
    gates: Vec<Gate>,
    outputs: Vec<NetId>,
    scope: Vec<String>,
    anon: usize,
    constants: [Option<NetId>; 2],
}

impl NetlistBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn define(&mut self, name: String) -> Result<NetId> {
        if self.index.contains_key(&name) {
            return Err(Error::DuplicateNet(name));
        }
        let id = NetId(self.names.len() as u32);
        self.index.insert(name.clone(), id);
        self.names.push(name);
        Ok(id)
    }

    fn scoped(&self, leaf: &str) -> String {
        if self.scope.is_empty() {
            leaf.to_string()
        } else {
            format!("{}/{}", self.scope.join("/"), leaf)
        }
    }

    fn fresh_name(&mut self) -> String {
        loop {
            let name = self.scoped(&format!("_{}", self.anon));
            self.anon += 1;
            if !self.index.contains_key(&name) {
                return name;
            }
        }
    }

    pub fn add_input(&mut self, name: &str) -> Result<NetId> {
        let id = self.define(self.scoped(name))?;
        self.inputs.push(id);
        Ok(id)
    }

    pub fn add_output(&mut self, net: NetId) {
        self.outputs.push(net);
    }

    pub fn push_scope(&mut self, name: impl Into<String>) {
        self.scope.push(name.into());
    }

    pub fn pop_scope(&mut self) {
        self.scope.pop();
    }

    /// Adds a gate whose output net is named `name` within the current scope.
    pub fn named_gate(&mut self, kind: GateKind, inputs: &[NetId], name: &str) -> Result<NetId> {
        let name = self.scoped(name);
        self.push_gate(kind, inputs, name)
    }

    /// Adds a gate with an automatically named output net.
    pub fn gate(&mut self, kind: GateKind, inputs: &[NetId]) -> NetId {
        let name = self.fresh_name();
        self.push_gate(kind, inputs, name)
            .expect("fresh names are unique and builder nets exist")
    }

    fn push_gate(&mut self, kind: GateKind, inputs: &[NetId], name: String) -> Result<NetId> {
        if inputs.len() != kind.arity() {
            return Err(Error::GateArity {
                kind: kind.to_string(),
                net: name,
                expected: kind.arity(),
                got: inputs.len(),
            });
        }
        if let Some(bad) = inputs.iter().find(|n| n.index() >= self.names.len()) {
            return Err(Error::UndefinedNet(format!("#{}", bad.index())));
        }
        let output = self.define(name)?;
        self.gates.push(Gate {
            kind,
            inputs: inputs.to_vec(),
            output,
        });
        Ok(output)
    }

    pub fn and(&mut self, a: Signal, b: Signal) -> Signal {
        use Signal::*;
        match (a, b) {
            (Zero, _) | (_, Zero) => Zero,
            (One, x) | (x, One) => x,
            (Net(x), Net(y)) => Net(self.gate(GateKind::And2, &[x, y])),
        }
    }

    pub fn or(&mut self, a: Signal, b: Signal) -> Signal {
        use Signal::*;
        match (a, b) {
            (One, _) | (_, One) => One,
            (Zero, x) | (x, Zero) => x,
            (Net(x), Net(y)) => Net(self.gate(GateKind::Or2, &[x, y])),
        }
    }

    pub fn xor(&mut self, a: Signal, b: Signal) -> Signal {
        use Signal::*;
        match (a, b) {
            (Zero, x) | (x, Zero) => x,
            (One, x) | (x, One) => self.not(x),
            (Net(x), Net(y)) => Net(self.gate(GateKind::Xor2, &[x, y])),
        }
    }

    pub fn not(&mut self, a: Signal) -> Signal {
        match a {
            Signal::Zero => Signal::One,
            Signal::One => Signal::Zero,
            Signal::Net(x) => Signal::Net(self.gate(GateKind::Not, &[x])),
        }
    }

    /// Balanced binary reduction: `n` leaves use `n - 1` gates and
    /// `ceil(log2(n))` levels. Returns `None` for an empty slice.
    pub fn tree(&mut self, kind: GateKind, leaves: &[NetId]) -> Option<NetId> {
        assert!(matches!(kind, GateKind::And2 | GateKind::Or2 | GateKind::Xor2));
        let mut level = leaves.to_vec();
        while level.len() > 1 {
            level = level
                .chunks(2)
                .map(|pair| match *pair {
                    [a, b] => self.gate(kind, &[a, b]),
                    [a] => a,
                    _ => unreachable!(),
                })
                .collect();
        }
        level.first().copied()
    }

    /// Three-input majority as the AO222 composite: `ab + bc + ac` with the
    /// three products OR-reduced. Five gates, depth three.
    pub fn majority3(&mut self, a: NetId, b: NetId, c: NetId) -> NetId {
        let ab = self.gate(GateKind::And2, &[a, b]);
        let bc = self.gate(GateKind::And2, &[b, c]);
        let ac = self.gate(GateKind::And2, &[a, c]);
        self.tree(GateKind::Or2, &[ab, bc, ac]).unwrap()
    }

    /// Sum and carry of one to three operand bits. Three live operands form a
    /// full adder (`s = a^b^c`, `co = ab + c(a^b)`), two a half adder.
    pub fn add_bits(&mut self, bits: &[Signal]) -> (Signal, Signal) {
        match *bits {
            [] => (Signal::Zero, Signal::Zero),
            [a] => (a, Signal::Zero),
            [a, b] => {
                let s = self.xor(a, b);
                let c = self.and(a, b);
                (s, c)
            }
            [a, b, c] => {
                let t = self.xor(a, b);
                let s = self.xor(t, c);
                let g = self.and(a, b);
                let p = self.and(t, c);
                let co = self.or(g, p);
                (s, co)
            }
            _ => panic!("add_bits takes at most three operands"),
        }
    }

    /// Turns a signal into a net, synthesizing constants from the first
    /// primary input (`x ^ x`) when needed.
    pub fn materialize(&mut self, sig: Signal) -> NetId {
        match sig {
            Signal::Net(n) => n,
            Signal::Zero | Signal::One => {
                let slot = usize::from(sig == Signal::One);
                if let Some(n) = self.constants[slot] {
                    return n;
                }
                let x = *self
                    .inputs
                    .first()
                    .expect("constant nets need at least one primary input");
                let zero = match self.constants[0] {
                    Some(z) => z,
                    None => {
                        let z = self.gate(GateKind::Xor2, &[x, x]);
                        self.constants[0] = Some(z);
                        z
                    }
                };
                if slot == 0 {
                    return zero;
                }
                let one = self.gate(GateKind::Not, &[zero]);
                self.constants[1] = Some(one);
                one
            }
        }
    }

    /// Copies `netlist` into this builder with its primary inputs bound to
    /// `inputs`; internal nets are renamed into scope `scope`. Returns the
    /// nets corresponding to the copied netlist's outputs.
    pub fn instantiate(&mut self, netlist: &Netlist, inputs: &[NetId], scope: &str) -> Result<Vec<NetId>> {
        if inputs.len() != netlist.input_count() {
            return Err(Error::InputArity {
                expected: netlist.input_count(),
                got: inputs.len(),
            });
        }
        let order = netlist.topological_order()?;
        let mut map: Vec<Option<NetId>> = vec![None; netlist.net_count()];
        for (src, &dst) in netlist.inputs().iter().zip(inputs) {
            map[src.index()] = Some(dst);
        }
        self.push_scope(scope);
        let result = (|| {
            for i in order {
                let g = &netlist.gates()[i];
                let ins: Vec<NetId> = g.inputs().iter().map(|n| map[n.index()].unwrap()).collect();
                let out = self.named_gate(g.kind(), &ins, netlist.net_name(g.output()))?;
                map[g.output().index()] = Some(out);
            }
            Ok(netlist.outputs().iter().map(|n| map[n.index()].unwrap()).collect())
        })();
        self.pop_scope();
        result
    }

    pub fn build(self) -> Netlist {
        Netlist {
            names: self.names,
            index: self.index,
            inputs: self.inputs,
            gates: self.gates,
            outputs: self.outputs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_and_tree_over_eight_inputs_has_depth_three() {
        let mut b = NetlistBuilder::new();
        let leaves: Vec<_> = (0..8).map(|i| b.add_input(&format!("x{i}")).unwrap()).collect();
        let y = b.tree(GateKind::And2, &leaves).unwrap();
        b.add_output(y);
        let n = b.build();
        assert_eq!(n.logic_depth().unwrap(), 3);
        assert_eq!(n.gate_count().total, 7);
        assert_eq!(n.evaluate(&[true; 8]).unwrap(), vec![true]);
        let mut v = [true; 8];
        v[5] = false;
        assert_eq!(n.evaluate(&v).unwrap(), vec![false]);
    }

    #[test]
    fn tree_depth_is_ceil_log2() {
        for leaves in 1..=40usize {
            let mut b = NetlistBuilder::new();
            let xs: Vec<_> = (0..leaves).map(|i| b.add_input(&format!("x{i}")).unwrap()).collect();
            let y = b.tree(GateKind::Or2, &xs).unwrap();
            b.add_output(y);
            let n = b.build();
            let expected = (leaves as f64).log2().ceil() as usize;
            assert_eq!(n.logic_depth().unwrap(), expected, "leaves={leaves}");
            assert_eq!(n.gate_count().total, leaves - 1);
        }
    }

    #[test]
    fn majority3_is_the_ao222_composite() {
        let mut b = NetlistBuilder::new();
        let [x, y, z] = ["a", "b", "c"].map(|s| b.add_input(s).unwrap());
        let m = b.majority3(x, y, z);
        b.add_output(m);
        let n = b.build();
        let census = n.gate_count();
        assert_eq!(census.get(GateKind::And2), 3);
        assert_eq!(census.get(GateKind::Or2), 2);
        assert_eq!(census.total, 5);
        assert_eq!(n.evaluate(&[true, false, true]).unwrap(), vec![true]);
        assert_eq!(n.evaluate(&[false, false, true]).unwrap(), vec![false]);
    }

    #[test]
    fn constants_fold() {
        let mut b = NetlistBuilder::new();
        let x = Signal::Net(b.add_input("x").unwrap());
        assert_eq!(b.and(x, Signal::One), x);
        assert_eq!(b.and(Signal::Zero, x), Signal::Zero);
        assert_eq!(b.or(x, Signal::One), Signal::One);
        assert_eq!(b.xor(Signal::Zero, x), x);
        assert_eq!(b.build().gate_count().total, 0);
    }

    #[test]
    fn materialized_constants() {
        let mut b = NetlistBuilder::new();
        b.add_input("x").unwrap();
        let z = b.materialize(Signal::Zero);
        let o = b.materialize(Signal::One);
        assert_eq!(b.materialize(Signal::Zero), z);
        b.add_output(z);
        b.add_output(o);
        let n = b.build();
        for x in [false, true] {
            assert_eq!(n.evaluate(&[x]).unwrap(), vec![false, true]);
        }
    }

    #[test]
    fn scoped_names_and_duplicates() {
        let mut b = NetlistBuilder::new();
        let a = b.add_input("a").unwrap();
        b.push_scope("u1");
        let y = b.named_gate(GateKind::Not, &[a], "y").unwrap();
        assert!(matches!(
            b.named_gate(GateKind::Not, &[a], "y"),
            Err(Error::DuplicateNet(_))
        ));
        b.pop_scope();
        let n = b.build();
        assert_eq!(n.net_name(y), "u1/y");
    }
}
