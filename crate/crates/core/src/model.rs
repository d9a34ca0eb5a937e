//! The abstract array model: one row of binary cells, split into partitions
//! joined by switches, on which column gates execute one cycle at a time.

use std::fmt;

use crate::error::{PimError, Result};
use crate::lane::Lane;

/// Column index within a row.
pub type Col = usize;

/// Device-level gate kinds. Richer gates only exist in [`crate::microcode`]
/// and are lowered to these before they reach a program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    Init0,
    Init1,
    Not,
    Nor2,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Init0 | GateKind::Init1 => 0,
            GateKind::Not => 1,
            GateKind::Nor2 => 2,
        }
    }

    pub fn is_init(self) -> bool {
        matches!(self, GateKind::Init0 | GateKind::Init1)
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            GateKind::Init0 => "INIT0",
            GateKind::Init1 => "INIT1",
            GateKind::Not => "NOT",
            GateKind::Nor2 => "NOR",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Self> {
        Some(match s {
            "INIT0" => GateKind::Init0,
            "INIT1" => GateKind::Init1,
            "NOT" => GateKind::Not,
            "NOR" => GateKind::Nor2,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GateInstance {
    pub kind: GateKind,
    pub inputs: Vec<Col>,
    pub output: Col,
}

impl GateInstance {
    pub fn nor(a: Col, b: Col, out: Col) -> Self {
        GateInstance { kind: GateKind::Nor2, inputs: vec![a, b], output: out }
    }

    pub fn not(a: Col, out: Col) -> Self {
        GateInstance { kind: GateKind::Not, inputs: vec![a], output: out }
    }

    pub fn init(bit: bool, out: Col) -> Self {
        let kind = if bit { GateKind::Init1 } else { GateKind::Init0 };
        GateInstance { kind, inputs: Vec::new(), output: out }
    }

    pub fn columns(&self) -> impl Iterator<Item = Col> + '_ {
        self.inputs.iter().copied().chain(std::iter::once(self.output))
    }

    #[inline]
    pub fn eval<L: Lane>(&self, cells: &[L]) -> L {
        match self.kind {
            GateKind::Init0 => L::ZERO,
            GateKind::Init1 => L::ONES,
            GateKind::Not => !cells[self.inputs[0]],
            GateKind::Nor2 => !(cells[self.inputs[0]] | cells[self.inputs[1]]),
        }
    }
}

impl fmt::Display for GateInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.kind.mnemonic())?;
        for (i, c) in self.inputs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")->{}", self.output)
    }
}

/// Partition geometry of a row: `k` partitions of `partition_width` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PartitionConfig {
    k: usize,
    partition_width: usize,
}

impl PartitionConfig {
    pub fn new(k: usize, partition_width: usize) -> Result<Self> {
        if k == 0 || partition_width == 0 {
            return Err(PimError::InvalidArgument(format!(
                "partition count and width must be positive (k={k}, width={partition_width})"
            )));
        }
        if k > 1 && !k.is_power_of_two() {
            return Err(PimError::InvalidArgument(format!("partition count {k} is not a power of two")));
        }
        Ok(PartitionConfig { k, partition_width })
    }

    /// A single partition spanning `width` columns.
    pub fn unpartitioned(width: usize) -> Result<Self> {
        Self::new(1, width)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn partition_width(&self) -> usize {
        self.partition_width
    }

    pub fn row_width(&self) -> usize {
        self.k * self.partition_width
    }

    pub fn partition_of(&self, col: Col) -> usize {
        col / self.partition_width
    }

    pub fn offset_of(&self, col: Col) -> usize {
        col % self.partition_width
    }

    pub fn col(&self, partition: usize, offset: usize) -> Col {
        partition * self.partition_width + offset
    }
}

/// Switch states between adjacent partitions; `true` is connected.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SwitchConfig {
    pub states: Vec<bool>,
}

impl SwitchConfig {
    pub fn all(k: usize, connected: bool) -> Self {
        SwitchConfig { states: vec![connected; k.saturating_sub(1)] }
    }

    /// Connected groups as inclusive partition ranges.
    pub fn groups(&self) -> Vec<(usize, usize)> {
        let mut groups = Vec::new();
        let mut lo = 0;
        for (i, &s) in self.states.iter().enumerate() {
            if !s {
                groups.push((lo, i));
                lo = i + 1;
            }
        }
        groups.push((lo, self.states.len()));
        groups
    }

    pub fn to_bitstring(&self) -> String {
        self.states.iter().map(|&s| if s { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(s: &str) -> Option<Self> {
        let states = s
            .chars()
            .map(|c| match c {
                '1' => Some(true),
                '0' => Some(false),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(SwitchConfig { states })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CycleStep {
    pub switches: SwitchConfig,
    pub gates: Vec<GateInstance>,
}

impl CycleStep {
    /// Builds a step whose switches connect exactly the partitions each gate
    /// spans and disconnect everything else.
    pub fn spanning(config: &PartitionConfig, gates: Vec<GateInstance>) -> Self {
        let mut states = vec![false; config.k() - 1];
        for g in &gates {
            let parts: Vec<usize> = g.columns().map(|c| config.partition_of(c)).collect();
            let lo = parts.iter().copied().min().unwrap_or(0);
            let hi = parts.iter().copied().max().unwrap_or(0);
            for s in states.iter_mut().take(hi).skip(lo) {
                *s = true;
            }
        }
        CycleStep { switches: SwitchConfig { states }, gates }
    }

    /// True if some gate reads or writes across a partition boundary.
    pub fn is_inter_partition(&self, config: &PartitionConfig) -> bool {
        self.gates.iter().any(|g| {
            let p = config.partition_of(g.output);
            g.inputs.iter().any(|&c| config.partition_of(c) != p)
        })
    }
}

/// Which constraint a gate or step broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    ColumnBound,
    Arity,
    SelfOverlap,
    EmptyStep,
    SwitchLength,
    GroupSpan,
    GroupConflict,
    WriteConflict,
    ReadWriteConflict,
    UniformPattern,
    OperandBound,
    OperandOverlap,
    InputOverwrite,
    OutputUnwritten,
    WidthMismatch,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::ColumnBound => "column bound",
            Rule::Arity => "arity",
            Rule::SelfOverlap => "output overlaps input",
            Rule::EmptyStep => "empty step",
            Rule::SwitchLength => "switch length",
            Rule::GroupSpan => "group span",
            Rule::GroupConflict => "group conflict",
            Rule::WriteConflict => "write conflict",
            Rule::ReadWriteConflict => "read-write conflict",
            Rule::UniformPattern => "uniform pattern",
            Rule::OperandBound => "operand bound",
            Rule::OperandOverlap => "operand overlap",
            Rule::InputOverwrite => "input overwrite",
            Rule::OutputUnwritten => "output unwritten",
            Rule::WidthMismatch => "width mismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    pub step: Option<usize>,
    pub gate: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rule.name())?;
        if let Some(s) = self.step {
            write!(f, " at step {s}")?;
        }
        if let Some(g) = self.gate {
            write!(f, " gate {g}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Collects every constraint violation of one step under `config`.
pub fn check_step(step: &CycleStep, config: &PartitionConfig, row_width: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut v = |rule, gate: Option<usize>, detail: String| {
        out.push(Violation { rule, step: None, gate, detail })
    };
    if step.gates.is_empty() {
        v(Rule::EmptyStep, None, "step has no gates".into());
        return out;
    }
    if step.switches.states.len() != config.k() - 1 {
        v(
            Rule::SwitchLength,
            None,
            format!("expected {} switch states, found {}", config.k() - 1, step.switches.states.len()),
        );
        return out;
    }
    let mut bounded = true;
    for (i, g) in step.gates.iter().enumerate() {
        if g.inputs.len() != g.kind.arity() {
            v(Rule::Arity, Some(i), format!("{} takes {} inputs, got {}", g.kind.mnemonic(), g.kind.arity(), g.inputs.len()));
            bounded = false;
        }
        for c in g.columns() {
            if c >= row_width {
                v(Rule::ColumnBound, Some(i), format!("column {c} outside row of width {row_width}"));
                bounded = false;
            }
        }
        if g.inputs.contains(&g.output) {
            v(Rule::SelfOverlap, Some(i), format!("column {} is both input and output", g.output));
        }
    }
    if !bounded {
        return out;
    }

    let groups = step.switches.groups();
    let group_of = |p: usize| groups.iter().position(|&(lo, hi)| lo <= p && p <= hi).unwrap();
    let mut used_groups = vec![None; groups.len()];
    let mut signature = None;
    for (i, g) in step.gates.iter().enumerate() {
        let gid = group_of(config.partition_of(g.output));
        if g.inputs.iter().any(|&c| group_of(config.partition_of(c)) != gid) {
            v(Rule::GroupSpan, Some(i), format!("{g} crosses a disconnected switch"));
            continue;
        }
        if let Some(prev) = used_groups[gid] {
            v(Rule::GroupConflict, Some(i), format!("gates {prev} and {i} share partition group {:?}", groups[gid]));
        }
        used_groups[gid] = Some(i);
        let base = groups[gid].0;
        let rel = |c: Col| (config.partition_of(c) - base, config.offset_of(c));
        let sig = (g.kind, g.inputs.iter().map(|&c| rel(c)).collect::<Vec<_>>(), rel(g.output));
        match &signature {
            None => signature = Some(sig),
            Some(s) if *s != sig => {
                v(Rule::UniformPattern, Some(i), format!("{g} differs from the step's first gate pattern"))
            }
            _ => {}
        }
    }

    let mut written = std::collections::HashMap::new();
    for (i, g) in step.gates.iter().enumerate() {
        if let Some(prev) = written.insert(g.output, i) {
            v(Rule::WriteConflict, Some(i), format!("column {} written by gates {prev} and {i}", g.output));
        }
    }
    for (i, g) in step.gates.iter().enumerate() {
        for c in &g.inputs {
            if let Some(&w) = written.get(c) {
                if w != i {
                    v(Rule::ReadWriteConflict, Some(i), format!("column {c} read by gate {i} and written by gate {w}"));
                }
            }
        }
    }
    out
}

/// One row of cells. With a multi-row [`Lane`] word each cell carries that
/// many independent rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowState<L: Lane = bool> {
    cells: Vec<L>,
}

impl<L: Lane> RowState<L> {
    pub fn new(width: usize, fill: bool) -> Result<Self> {
        if width == 0 {
            return Err(PimError::InvalidArgument("row width must be at least 1".into()));
        }
        Ok(RowState { cells: vec![L::from_bit(fill); width] })
    }

    pub fn from_cells(cells: Vec<L>) -> Result<Self> {
        if cells.is_empty() {
            return Err(PimError::InvalidArgument("row width must be at least 1".into()));
        }
        Ok(RowState { cells })
    }

    pub fn width(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[L] {
        &self.cells
    }

    pub fn get(&self, col: Col) -> L {
        self.cells[col]
    }

    pub fn set(&mut self, col: Col, value: L) {
        self.cells[col] = value;
    }

    /// Executes one step after validating it.
    pub fn apply_step(&mut self, step: &CycleStep, config: &PartitionConfig) -> Result<()> {
        if config.row_width() != self.width() {
            return Err(PimError::InvalidArgument(format!(
                "partition geometry covers {} columns but the row has {}",
                config.row_width(),
                self.width()
            )));
        }
        if let Some(violation) = check_step(step, config, self.width()).into_iter().next() {
            return Err(PimError::Constraint { step: 0, violation });
        }
        self.apply_step_unchecked(step);
        Ok(())
    }

    /// Executes a step that is known to be valid. Gates within a valid step
    /// never read a column another gate of the same step writes, so applying
    /// them in order is the same as applying them simultaneously.
    #[inline]
    pub fn apply_step_unchecked(&mut self, step: &CycleStep) {
        for g in &step.gates {
            let v = g.eval(&self.cells);
            self.cells[g.output] = v;
        }
    }
}

/// Fresh row of `width` cells, all equal to `fill`.
pub fn init_row(width: usize, fill: bool) -> Result<RowState> {
    RowState::new(width, fill)
}

/// Functional form of [`RowState::apply_step`].
pub fn apply_step<L: Lane>(state: &RowState<L>, step: &CycleStep, config: &PartitionConfig) -> Result<RowState<L>> {
    let mut next = state.clone();
    next.apply_step(step, config)?;
    Ok(next)
}
