//! Micro-programs: ordered cycle steps plus the operand map that says where
//! each input and output lives in the row.

use std::collections::{BTreeSet, HashMap};

use crate::error::{PimError, Result};
use crate::lane::Lane;
use crate::model::{check_step, Col, CycleStep, GateKind, PartitionConfig, RowState, Rule, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Input,
    Output,
    Scratch,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Input => "input",
            Role::Output => "output",
            Role::Scratch => "scratch",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "input" => Role::Input,
            "output" => Role::Output,
            "scratch" => Role::Scratch,
            _ => return None,
        })
    }
}

/// How the bits of a number are placed in the row. Bit 0 is the LSB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placement {
    /// Bit `i` at column `base + i`.
    Contiguous { base: Col },
    /// Bit `i` at column `offset` of partition `i`.
    Strided { offset: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OperandLayout {
    pub name: String,
    pub placement: Placement,
    pub width: usize,
    pub role: Role,
}

impl OperandLayout {
    pub fn contiguous(name: impl Into<String>, base: Col, width: usize, role: Role) -> Self {
        OperandLayout { name: name.into(), placement: Placement::Contiguous { base }, width, role }
    }

    pub fn strided(name: impl Into<String>, offset: usize, width: usize, role: Role) -> Self {
        OperandLayout { name: name.into(), placement: Placement::Strided { offset }, width, role }
    }

    /// Column of bit `i`.
    pub fn column(&self, config: &PartitionConfig, i: usize) -> Col {
        match self.placement {
            Placement::Contiguous { base } => base + i,
            Placement::Strided { offset } => config.col(i, offset),
        }
    }

    pub fn columns(&self, config: &PartitionConfig) -> Vec<Col> {
        (0..self.width).map(|i| self.column(config, i)).collect()
    }

    fn check_bounds(&self, config: &PartitionConfig) -> Option<String> {
        match self.placement {
            Placement::Contiguous { base } if base + self.width > config.row_width() => Some(format!(
                "operand {} spans columns {base}..{} beyond row width {}",
                self.name,
                base + self.width,
                config.row_width()
            )),
            Placement::Strided { offset } if self.width > config.k() || offset >= config.partition_width() => {
                Some(format!(
                    "strided operand {} needs {} partitions at offset {offset}; geometry is {}x{}",
                    self.name,
                    self.width,
                    config.k(),
                    config.partition_width()
                ))
            }
            _ => None,
        }
    }
}

/// Reads `layout` out of a row. Multi-row words yield the value of `row`.
pub fn read_operand<L: Lane>(state: &RowState<L>, config: &PartitionConfig, layout: &OperandLayout, row: usize) -> u128 {
    (0..layout.width).fold(0u128, |acc, i| {
        acc | (u128::from(state.get(layout.column(config, i)).row(row)) << i)
    })
}

/// Writes `value` into `layout` for one row of the word.
pub fn write_operand<L: Lane>(
    state: &mut RowState<L>,
    config: &PartitionConfig,
    layout: &OperandLayout,
    row: usize,
    value: u128,
) -> Result<()> {
    if layout.width < 128 && value >> layout.width != 0 {
        return Err(PimError::InvalidArgument(format!(
            "value {value:#x} does not fit operand {} of {} bits",
            layout.name, layout.width
        )));
    }
    for i in 0..layout.width {
        let col = layout.column(config, i);
        let bit = (value >> i) & 1 == 1;
        state.set(col, state.get(col).with_row(row, bit));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MicroProgram {
    pub config: PartitionConfig,
    pub steps: Vec<CycleStep>,
    pub operands: Vec<OperandLayout>,
}

/// Outcome of [`validate_program`]: empty means the program is well formed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(PimError::Invalid(self.violations))
        }
    }
}

impl MicroProgram {
    pub fn new(config: PartitionConfig) -> Self {
        MicroProgram { config, steps: Vec::new(), operands: Vec::new() }
    }

    pub fn row_width(&self) -> usize {
        self.config.row_width()
    }

    pub fn operand(&self, name: &str) -> Result<&OperandLayout> {
        self.operands
            .iter()
            .find(|o| o.name == name)
            .ok_or_else(|| PimError::UnknownOperand(name.to_string()))
    }

    pub fn gate_count(&self) -> usize {
        self.steps.iter().map(|s| s.gates.len()).sum()
    }

    /// Columns written by some gate that belong to no operand.
    pub fn scratch(&self) -> BTreeSet<Col> {
        let named: BTreeSet<Col> = self.operands.iter().flat_map(|o| o.columns(&self.config)).collect();
        self.steps
            .iter()
            .flat_map(|s| s.gates.iter().map(|g| g.output))
            .filter(|c| !named.contains(c))
            .collect()
    }

    /// Runs the program on one fresh all-zero row with the given input values
    /// and returns every output operand in declaration order. Step constraints
    /// are not checked; see [`validate_program`].
    pub fn evaluate(&self, inputs: &[(&str, u128)]) -> Result<Vec<(String, u128)>> {
        let mut row = RowState::<bool>::new(self.row_width(), false)?;
        for &(name, value) in inputs {
            write_operand(&mut row, &self.config, self.operand(name)?, 0, value)?;
        }
        self.execute(&mut row);
        Ok(self
            .operands
            .iter()
            .filter(|o| o.role == Role::Output)
            .map(|o| (o.name.clone(), read_operand(&row, &self.config, o, 0)))
            .collect())
    }

    /// Executes a validated program on a row without re-checking constraints.
    pub fn execute<L: Lane>(&self, state: &mut RowState<L>) {
        for step in &self.steps {
            state.apply_step_unchecked(step);
        }
    }

    /// Flattens the program into a gate list for fast repeated execution.
    pub fn compile(&self) -> CompiledProgram {
        let ops = self
            .steps
            .iter()
            .flat_map(|s| s.gates.iter())
            .map(|g| {
                let a = g.inputs.first().copied().unwrap_or(0) as u32;
                let b = g.inputs.get(1).copied().unwrap_or(0) as u32;
                let kind = match g.kind {
                    GateKind::Init0 => 0u8,
                    GateKind::Init1 => 1,
                    GateKind::Not => 2,
                    GateKind::Nor2 => 3,
                };
                (kind, a, b, g.output as u32)
            })
            .collect();
        CompiledProgram { width: self.row_width(), ops }
    }
}

/// Gate list of a validated program, in execution order.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    width: usize,
    ops: Vec<(u8, u32, u32, u32)>,
}

impl CompiledProgram {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn run<L: Lane>(&self, cells: &mut [L]) {
        assert_eq!(cells.len(), self.width);
        for &(kind, a, b, out) in &self.ops {
            let v = match kind {
                0 => L::ZERO,
                1 => L::ONES,
                2 => !cells[a as usize],
                _ => !(cells[a as usize] | cells[b as usize]),
            };
            cells[out as usize] = v;
        }
    }
}

/// Checks every step and operand invariant, returning all violations found.
pub fn validate_program(prog: &MicroProgram) -> ValidationReport {
    let mut violations = Vec::new();
    let width = prog.row_width();
    for (i, step) in prog.steps.iter().enumerate() {
        for mut v in check_step(step, &prog.config, width) {
            v.step = Some(i);
            violations.push(v);
        }
    }

    let mut owner: HashMap<Col, &str> = HashMap::new();
    let mut bounded = true;
    for op in &prog.operands {
        if let Some(detail) = op.check_bounds(&prog.config) {
            violations.push(Violation { rule: Rule::OperandBound, step: None, gate: None, detail });
            bounded = false;
            continue;
        }
        for c in op.columns(&prog.config) {
            if let Some(other) = owner.insert(c, &op.name) {
                violations.push(Violation {
                    rule: Rule::OperandOverlap,
                    step: None,
                    gate: None,
                    detail: format!("column {c} belongs to both {other} and {}", op.name),
                });
            }
        }
    }
    if !bounded {
        return ValidationReport { violations };
    }

    let mut written: HashMap<Col, usize> = HashMap::new();
    for (i, step) in prog.steps.iter().enumerate() {
        for g in &step.gates {
            written.entry(g.output).or_insert(i);
        }
    }
    for op in &prog.operands {
        for c in op.columns(&prog.config) {
            match (op.role, written.get(&c)) {
                (Role::Input, Some(&s)) => violations.push(Violation {
                    rule: Rule::InputOverwrite,
                    step: Some(s),
                    gate: None,
                    detail: format!("input {} column {c} is overwritten", op.name),
                }),
                (Role::Output, None) => violations.push(Violation {
                    rule: Rule::OutputUnwritten,
                    step: None,
                    gate: None,
                    detail: format!("output {} column {c} is never written", op.name),
                }),
                _ => {}
            }
        }
    }
    ValidationReport { violations }
}

/// Snapshots after every step, when tracing is on.
pub type Trace<L> = Vec<RowState<L>>;

/// Validates `prog` and folds its steps over `state`.
pub fn run_program<L: Lane>(state: &RowState<L>, prog: &MicroProgram, trace: bool) -> Result<(RowState<L>, Option<Trace<L>>)> {
    if state.width() != prog.row_width() {
        return Err(PimError::InvalidArgument(format!(
            "row has {} cells, program expects {}",
            state.width(),
            prog.row_width()
        )));
    }
    validate_program(prog).into_result()?;
    let mut cur = state.clone();
    let mut snaps = trace.then(Vec::new);
    for step in &prog.steps {
        cur.apply_step_unchecked(step);
        if let Some(s) = snaps.as_mut() {
            s.push(cur.clone());
        }
    }
    Ok((cur, snaps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GateInstance;

    fn prog(width: usize, steps: Vec<Vec<GateInstance>>) -> MicroProgram {
        let config = PartitionConfig::unpartitioned(width).unwrap();
        let steps = steps.into_iter().map(|g| CycleStep::spanning(&config, g)).collect();
        MicroProgram { config, steps, operands: Vec::new() }
    }

    #[test]
    fn empty_program_is_identity() {
        let p = prog(4, vec![]);
        let s = RowState::<bool>::from_cells(vec![true, false, true, true]).unwrap();
        assert_eq!(run_program(&s, &p, false).unwrap().0, s);
    }

    #[test]
    fn single_init() {
        let p = prog(8, vec![vec![GateInstance::init(true, 5)]]);
        let (out, trace) = run_program(&RowState::<bool>::new(8, false).unwrap(), &p, true).unwrap();
        let ones: Vec<_> = (0..8).filter(|&c| out.get(c)).collect();
        assert_eq!(ones, vec![5]);
        assert_eq!(trace.unwrap().len(), 1);
    }

    #[test]
    fn validation_finds_bounds_and_conflicts() {
        let p = prog(4, vec![vec![GateInstance::not(0, 4)]]);
        assert!(validate_program(&p).has(Rule::ColumnBound));

        let config = PartitionConfig::new(2, 2).unwrap();
        let step = CycleStep::spanning(&config, vec![GateInstance::not(0, 1), GateInstance::not(2, 1)]);
        let p = MicroProgram { config, steps: vec![step], operands: vec![] };
        assert!(validate_program(&p).has(Rule::WriteConflict));
    }

    #[test]
    fn operand_roles_checked() {
        let mut p = prog(4, vec![vec![GateInstance::not(0, 1)]]);
        p.operands.push(OperandLayout::contiguous("x", 0, 2, Role::Input));
        p.operands.push(OperandLayout::contiguous("z", 2, 2, Role::Output));
        let r = validate_program(&p);
        assert!(r.has(Rule::InputOverwrite));
        assert!(r.has(Rule::OutputUnwritten));
    }

    #[test]
    fn operand_write_read() {
        let config = PartitionConfig::new(4, 2).unwrap();
        let mut s = RowState::<bool>::new(8, false).unwrap();
        let c = OperandLayout::contiguous("c", 0, 4, Role::Input);
        write_operand(&mut s, &config, &c, 0, 5).unwrap();
        assert_eq!(&s.cells()[..4], &[true, false, true, false]);
        let st = OperandLayout::strided("s", 1, 4, Role::Input);
        write_operand(&mut s, &config, &st, 0, 0b1010).unwrap();
        assert_eq!([s.get(1), s.get(3), s.get(5), s.get(7)], [false, true, false, true]);
        assert_eq!(read_operand(&s, &config, &st, 0), 0b1010);
        assert!(write_operand(&mut s, &config, &c, 0, 16).is_err());
    }
}
