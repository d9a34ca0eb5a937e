//! Bit-serial emitters: one gate per cycle, operands in adjacent columns.

pub mod fixed;
pub mod float;
