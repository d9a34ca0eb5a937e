//! Program construction: cell allocation, step emission, and the macro gate
//! library lowered onto NOT/NOR.

mod alloc;
mod macros;

pub use alloc::Allocator;
pub use macros::{lower_macro, Macro, Macros};

use crate::error::Result;
use crate::model::{Col, CycleStep, GateInstance, PartitionConfig};
use crate::program::{MicroProgram, OperandLayout, Placement, Role};

/// Offset of a signal that has one cell in each partition.
pub type Off = usize;

/// Room given to builders before compaction. Programs only keep the columns
/// they actually touch.
const SERIAL_CAPACITY: usize = 1 << 20;
const PARTITION_CAPACITY: usize = 1 << 14;

/// Accumulates steps and operand declarations, then packs them into a
/// [`MicroProgram`] whose width is exactly what was used.
#[derive(Debug, Clone)]
pub struct Builder {
    config: PartitionConfig,
    alloc: Allocator,
    steps: Vec<CycleStep>,
    operands: Vec<OperandLayout>,
    consts: [Option<Col>; 2],
}

impl Builder {
    pub fn with_config(config: PartitionConfig) -> Self {
        Builder { config, alloc: Allocator::new(config), steps: Vec::new(), operands: Vec::new(), consts: [None; 2] }
    }

    /// Single-partition builder.
    pub fn serial() -> Self {
        Self::with_config(PartitionConfig::unpartitioned(SERIAL_CAPACITY).unwrap())
    }

    /// Builder over `k` partitions.
    pub fn partitioned(k: usize) -> Result<Self> {
        Ok(Self::with_config(PartitionConfig::new(k, PARTITION_CAPACITY)?))
    }

    pub fn k(&self) -> usize {
        self.config.k()
    }

    pub fn config(&self) -> &PartitionConfig {
        &self.config
    }

    pub fn col(&self, partition: usize, off: Off) -> Col {
        self.config.col(partition, off)
    }

    pub fn steps(&self) -> usize {
        self.steps.len()
    }

    fn declare(&mut self, layout: OperandLayout) {
        self.operands.push(layout);
    }

    /// Contiguous operand in partition 0.
    pub fn contiguous(&mut self, name: &str, width: usize, role: Role) -> Result<Vec<Col>> {
        let cols = self.alloc.alloc_run(width, 0)?;
        self.declare(OperandLayout::contiguous(name, cols[0], width, role));
        Ok(cols)
    }

    pub fn input(&mut self, name: &str, width: usize) -> Result<Vec<Col>> {
        self.contiguous(name, width, Role::Input)
    }

    pub fn output(&mut self, name: &str, width: usize) -> Result<Vec<Col>> {
        self.contiguous(name, width, Role::Output)
    }

    /// Strided operand: bit `i` at the returned offset of partition `i`.
    pub fn strided(&mut self, name: &str, width: usize, role: Role) -> Result<Off> {
        let parts: Vec<usize> = (0..width).collect();
        let off = self.alloc.alloc_offset(&parts)?;
        self.declare(OperandLayout::strided(name, off, width, role));
        Ok(off)
    }

    /// Names one already-allocated cell as a one-bit operand.
    pub fn name_cell(&mut self, name: &str, col: Col, role: Role) {
        self.declare(OperandLayout::contiguous(name, col, 1, role));
    }

    /// Names the first `width` partitions of an existing signal.
    pub fn name_signal(&mut self, name: &str, off: Off, width: usize, role: Role) {
        self.declare(OperandLayout::strided(name, off, width, role));
    }

    pub fn alloc(&mut self) -> Result<Col> {
        Ok(self.alloc.alloc(1, Some(0))?[0])
    }

    pub fn alloc_n(&mut self, n: usize) -> Result<Vec<Col>> {
        self.alloc.alloc(n, Some(0))
    }

    pub fn free(&mut self, col: Col) {
        self.alloc.free(col);
    }

    pub fn free_all(&mut self, cols: &[Col]) {
        for &c in cols {
            self.alloc.free(c);
        }
    }

    /// A fresh signal with a cell in every partition.
    pub fn signal(&mut self) -> Result<Off> {
        let parts: Vec<usize> = (0..self.k()).collect();
        self.alloc.alloc_offset(&parts)
    }

    pub fn free_signal(&mut self, off: Off) {
        let parts: Vec<usize> = (0..self.k()).collect();
        self.alloc.free_offset(&parts, off);
    }

    /// Appends one step; switches connect exactly what the gates span.
    pub fn step(&mut self, gates: Vec<GateInstance>) {
        if !gates.is_empty() {
            self.steps.push(CycleStep::spanning(&self.config, gates));
        }
    }

    /// Column holding a constant, initialized on first use.
    pub fn constant(&mut self, bit: bool) -> Result<Col> {
        if let Some(c) = self.consts[bit as usize] {
            return Ok(c);
        }
        let c = self.alloc()?;
        self.step(vec![GateInstance::init(bit, c)]);
        self.consts[bit as usize] = Some(c);
        Ok(c)
    }

    /// Same gate in every listed partition, one step.
    pub fn local(&mut self, parts: &[usize], gate: &GateInstance) {
        let gates = parts
            .iter()
            .map(|&p| GateInstance {
                kind: gate.kind,
                inputs: gate.inputs.iter().map(|&o| self.col(p, o)).collect(),
                output: self.col(p, gate.output),
            })
            .collect();
        self.step(gates);
    }

    /// One step of NOT gates, each reading `src` in the first partition of a
    /// pair and writing `dst` in the second.
    pub fn cross_not(&mut self, pairs: &[(usize, usize)], src: Off, dst: Off) {
        let gates = pairs.iter().map(|&(from, to)| GateInstance::not(self.col(from, src), self.col(to, dst))).collect();
        self.step(gates);
    }

    /// One step of NOR gates: `a` read in the receiving partition, `b` in the
    /// sending partition, result written to `dst` in the receiving partition.
    pub fn cross_nor(&mut self, pairs: &[(usize, usize)], a: Off, b: Off, dst: Off) {
        let gates = pairs
            .iter()
            .map(|&(from, to)| GateInstance::nor(self.col(to, a), self.col(from, b), self.col(to, dst)))
            .collect();
        self.step(gates);
    }

    /// View that applies gates to every partition in `parts` at once.
    pub fn lanes(&mut self, parts: impl IntoIterator<Item = usize>) -> Lanes<'_> {
        Lanes { b: self, parts: parts.into_iter().collect() }
    }

    /// Packs the used columns and returns the program.
    pub fn finish(self) -> Result<MicroProgram> {
        let k = self.config.k();
        let width = self.alloc.used_width().max(1);
        let config = PartitionConfig::new(k, width)?;
        let old = self.config;
        let remap = |c: Col| config.col(old.partition_of(c), old.offset_of(c));
        let steps = self
            .steps
            .into_iter()
            .map(|s| CycleStep {
                switches: s.switches,
                gates: s
                    .gates
                    .into_iter()
                    .map(|g| GateInstance { kind: g.kind, inputs: g.inputs.into_iter().map(remap).collect(), output: remap(g.output) })
                    .collect(),
            })
            .collect();
        let operands = self
            .operands
            .into_iter()
            .map(|mut o| {
                if let Placement::Contiguous { base } = o.placement {
                    o.placement = Placement::Contiguous { base: remap(base) };
                }
                o
            })
            .collect();
        Ok(MicroProgram { config, steps, operands })
    }
}

/// The device gates plus cell allocation, over some cell handle.
///
/// Serial programs address single columns; [`Lanes`] addresses one offset in
/// a set of partitions and emits each gate in all of them in one step.
pub trait Gates {
    type Bit: Copy + Eq + std::fmt::Debug;

    fn nor_to(&mut self, a: Self::Bit, b: Self::Bit, out: Self::Bit);
    fn not_to(&mut self, a: Self::Bit, out: Self::Bit);
    fn init_to(&mut self, bit: bool, out: Self::Bit);
    fn fresh(&mut self) -> Result<Self::Bit>;
    fn release(&mut self, bit: Self::Bit);
}

impl Gates for Builder {
    type Bit = Col;

    fn nor_to(&mut self, a: Col, b: Col, out: Col) {
        self.step(vec![GateInstance::nor(a, b, out)]);
    }

    fn not_to(&mut self, a: Col, out: Col) {
        self.step(vec![GateInstance::not(a, out)]);
    }

    fn init_to(&mut self, bit: bool, out: Col) {
        self.step(vec![GateInstance::init(bit, out)]);
    }

    fn fresh(&mut self) -> Result<Col> {
        self.alloc()
    }

    fn release(&mut self, bit: Col) {
        self.free(bit);
    }
}

/// Gate emission across a fixed set of partitions.
pub struct Lanes<'a> {
    b: &'a mut Builder,
    parts: Vec<usize>,
}

impl Lanes<'_> {
    pub fn builder(&mut self) -> &mut Builder {
        self.b
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }
}

impl Gates for Lanes<'_> {
    type Bit = Off;

    fn nor_to(&mut self, a: Off, b: Off, out: Off) {
        self.b.local(&self.parts, &GateInstance::nor(a, b, out));
    }

    fn not_to(&mut self, a: Off, out: Off) {
        self.b.local(&self.parts, &GateInstance::not(a, out));
    }

    fn init_to(&mut self, bit: bool, out: Off) {
        self.b.local(&self.parts, &GateInstance::init(bit, out));
    }

    fn fresh(&mut self) -> Result<Off> {
        self.b.signal()
    }

    fn release(&mut self, bit: Off) {
        self.b.free_signal(bit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::validate_program;

    #[test]
    fn finish_compacts() {
        let mut b = Builder::partitioned(4).unwrap();
        let x = b.strided("x", 4, Role::Input).unwrap();
        let z = b.strided("z", 4, Role::Output).unwrap();
        b.lanes(0..4).not_to(x, z);
        let p = b.finish().unwrap();
        assert_eq!(p.config.partition_width(), 2);
        assert_eq!(p.row_width(), 8);
        assert!(validate_program(&p).is_ok());
        assert_eq!(p.steps[0].gates[3], GateInstance::not(6, 7));
    }

    #[test]
    fn constants_are_shared() {
        let mut b = Builder::serial();
        let one = b.constant(true).unwrap();
        assert_eq!(b.constant(true).unwrap(), one);
        assert_ne!(b.constant(false).unwrap(), one);
        assert_eq!(b.steps(), 2);
    }
}
