//! Gate-level processing-in-memory arithmetic.
//!
//! Emitters produce [`MicroProgram`]s of NOT/NOR/INIT column gates for a
//! partitioned memory row; the simulator executes them, the cost model counts
//! their cycles and gates, and the harness checks them against exact oracles.

pub mod cost;
pub mod dump;
pub mod error;
pub mod float;
pub mod harness;
pub mod lane;
pub mod microcode;
pub mod model;
pub mod parallel;
pub mod program;
pub mod serial;
pub mod toolbox;

pub use cost::{cost, Accounting, CostReport};
pub use error::{PimError, Result};
pub use lane::Lane;
pub use model::{apply_step, init_row, CycleStep, GateInstance, GateKind, PartitionConfig, RowState, SwitchConfig};
pub use program::{run_program, validate_program, MicroProgram, OperandLayout, Role};

/// A single simulated row.
pub type Row = RowState<bool>;
/// Sixty-four rows simulated at once, one per bit of each cell word.
pub type Row64 = RowState<u64>;
