//! Bit-parallel emitters: operands stored strided, one bit per partition, so
//! every partition works on its own bit in the same cycle.

pub mod fixed;
pub mod float;

/// Partitions used for `n` strided bits.
pub fn partitions_for(n: usize) -> usize {
    n.next_power_of_two()
}
