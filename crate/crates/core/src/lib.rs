//! Gate-level construction and analysis of N-modular redundancy (NMR) and
//! majority-and-minority voted redundancy (MMR).
//!
//! * [`netlist`]: combinational netlists, bit-parallel simulation, metrics.
//! * [`function_units`]: ripple-carry adders, array multipliers and
//!   exhaustive equivalence checking.
//! * [`voters`]: NMR/MMR voters and replicated systems.
//! * [`fault_injection`]: unit-level faults, masking, tolerance figures.
//! * [`reliability`]: closed forms, enumerated polynomials, Monte Carlo.

pub mod error;
pub mod fault_injection;
pub mod function_units;
pub mod netlist;
pub mod reliability;
pub mod voters;

pub use error::{Error, Result};
pub use fault_injection::{FaultModel, FaultPattern};
pub use function_units::FunctionUnitSpec;
pub use netlist::{GateKind, Netlist};
pub use voters::{RedundancyScheme, SchemeKind};
