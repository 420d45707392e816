use serde::{Deserialize, Serialize};

use super::GateKind;

/// Serialized form of a netlist:
/// `{"inputs":[..], "gates":[{"kind":..,"in":[..],"out":..}], "outputs":[..]}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetlistDoc {
    pub inputs: Vec<String>,
    pub gates: Vec<GateDoc>,
    pub outputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateDoc {
    pub kind: GateKind,
    #[serde(rename = "in")]
    pub inputs: Vec<String>,
    #[serde(rename = "out")]
    pub output: String,
}

#[cfg(test)]
mod tests {
    use crate::netlist::Netlist;

    #[test]
    fn parses_documented_shape() {
        let text = r#"{
            "inputs": ["a", "b", "s"],
            "gates": [
                {"kind": "XOR2", "in": ["a", "b"], "out": "x"},
                {"kind": "MUX2", "in": ["s", "x", "a"], "out": "y"}
            ],
            "outputs": ["y", "x"]
        }"#;
        let n = Netlist::from_json(text).unwrap();
        assert_eq!(n.input_count(), 3);
        assert_eq!(n.gates().len(), 2);
        assert_eq!(n.evaluate(&[true, false, false]).unwrap(), vec![true, true]);
        assert_eq!(n.evaluate(&[false, false, true]).unwrap(), vec![false, false]);
    }

    #[test]
    fn rejects_unknown_kind() {
        let text = r#"{"inputs":["a"],"gates":[{"kind":"NAND9","in":["a"],"out":"y"}],"outputs":["y"]}"#;
        assert!(Netlist::from_json(text).is_err());
    }
}
