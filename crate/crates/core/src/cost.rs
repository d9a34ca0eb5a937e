//! Cycle, gate and area accounting for micro-programs, and the projection of
//! those counts onto a user-described memory.

use num_traits::Float;
use serde::Deserialize;

use crate::error::{PimError, Result};
use crate::program::MicroProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Accounting {
    /// One cycle per step.
    #[default]
    Logical,
    /// Memristive stateful logic: a gate output must be initialized in an
    /// earlier cycle. Steps whose outputs were not freshly initialized by an
    /// INIT step pay one implicit initialization cycle.
    Memristive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CostReport {
    pub cycles: u64,
    pub gates: u64,
    /// INIT gate instances, explicit ones only.
    pub inits: u64,
    /// Implicit initialization cycles added under memristive accounting.
    pub implicit_init_cycles: u64,
    /// Communication rounds: maximal runs of consecutive steps that cross a
    /// partition boundary under one switch configuration.
    pub rounds: u64,
    /// Largest number of simultaneously live scratch cells.
    pub scratch_peak: u64,
}

pub fn cost(prog: &MicroProgram, accounting: Accounting) -> CostReport {
    let mut report = CostReport::default();
    let mut fresh = vec![false; prog.row_width()];
    let mut prev_switches = None;
    for step in &prog.steps {
        report.cycles += 1;
        report.gates += step.gates.len() as u64;
        if step.is_inter_partition(&prog.config) {
            if prev_switches != Some(&step.switches) {
                report.rounds += 1;
            }
            prev_switches = Some(&step.switches);
        } else {
            prev_switches = None;
        }
        let all_init = step.gates.iter().all(|g| g.kind.is_init());
        if all_init {
            report.inits += step.gates.len() as u64;
            for g in &step.gates {
                fresh[g.output] = true;
            }
            continue;
        }
        report.inits += step.gates.iter().filter(|g| g.kind.is_init()).count() as u64;
        if accounting == Accounting::Memristive && step.gates.iter().any(|g| !g.kind.is_init() && !fresh[g.output]) {
            report.implicit_init_cycles += 1;
            report.cycles += 1;
        }
        for g in &step.gates {
            fresh[g.output] = false;
        }
    }
    report.scratch_peak = scratch_peak(prog);
    report
}

/// A scratch cell is live from its first write to its last access.
fn scratch_peak(prog: &MicroProgram) -> u64 {
    let scratch = prog.scratch();
    if scratch.is_empty() {
        return 0;
    }
    let mut first = vec![usize::MAX; prog.row_width()];
    let mut last = vec![0usize; prog.row_width()];
    for (i, step) in prog.steps.iter().enumerate() {
        for g in &step.gates {
            for c in g.columns() {
                first[c] = first[c].min(i);
                last[c] = last[c].max(i);
            }
        }
    }
    let mut delta = vec![0i64; prog.steps.len() + 1];
    for &c in &scratch {
        delta[first[c]] += 1;
        delta[last[c] + 1] -= 1;
    }
    let mut live = 0i64;
    let mut peak = 0i64;
    for d in delta {
        live += d;
        peak = peak.max(live);
    }
    peak as u64
}

/// Memory geometry and device figures for throughput projection. No defaults:
/// every value has to come from the caller.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct Hardware<F> {
    /// Rows per array.
    pub rows: u64,
    /// Columns per array.
    pub cols: u64,
    /// Number of arrays.
    pub arrays: u64,
    /// Seconds per cycle.
    pub clock_period: F,
    /// Joules per gate instance per row.
    pub energy_per_gate: F,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection<F> {
    /// Independent program instances packed side by side in one row.
    pub ops_per_row: u64,
    /// Operations completed by one pass of the program over the memory.
    pub ops_per_batch: u64,
    pub batch_seconds: F,
    pub batch_joules: F,
    pub throughput: F,
    pub throughput_per_watt: F,
}

pub fn project<F: Float>(hw: &Hardware<F>, row_width: usize, report: &CostReport) -> Result<Projection<F>> {
    if hw.rows == 0 || hw.arrays == 0 {
        return Err(PimError::InvalidArgument("rows and arrays must be positive".into()));
    }
    if !(hw.clock_period > F::zero()) || !(hw.energy_per_gate >= F::zero()) {
        return Err(PimError::InvalidArgument("clock period must be positive and energy non-negative".into()));
    }
    let ops_per_row = hw.cols / row_width.max(1) as u64;
    if ops_per_row == 0 {
        return Err(PimError::InvalidArgument(format!(
            "program needs {row_width} columns but arrays have {}",
            hw.cols
        )));
    }
    let cast = |v: u64| F::from(v).expect("count representable as float");
    let ops_per_batch = hw.rows * hw.arrays * ops_per_row;
    let batch_seconds = cast(report.cycles) * hw.clock_period;
    let batch_joules = cast(report.gates) * hw.energy_per_gate * cast(ops_per_batch);
    let throughput = cast(ops_per_batch) / batch_seconds;
    let throughput_per_watt = if batch_joules > F::zero() {
        cast(ops_per_batch) / batch_joules
    } else {
        F::infinity()
    };
    Ok(Projection { ops_per_row, ops_per_batch, batch_seconds, batch_joules, throughput, throughput_per_watt })
}
