//! Verification drivers: build a kernel, feed it inputs in 64-row batches,
//! and compare every output against the oracles.

pub mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{PimError, Result};
use crate::float::FloatFormat;
use crate::model::Col;
use crate::parallel::fixed::{
    emit_add_parallel, emit_div_parallel, emit_mult_parallel, emit_sub_parallel, MultTail,
};
use crate::parallel::float::{
    emit_fadd_parallel, emit_fadd_unsigned_parallel, emit_fdiv_parallel, emit_fmul_parallel, emit_fsub_parallel,
    emit_normalize_parallel, emit_varshift_parallel,
};
use crate::program::MicroProgram;
use crate::serial::fixed::{emit_add_serial, emit_div_serial, emit_mult_serial, emit_sub_serial, DEFAULT_KARATSUBA_THRESHOLD};
use crate::serial::float::{
    ceil_log2, emit_fadd_signed_serial, emit_fadd_unsigned_serial, emit_fdiv_serial, emit_fmul_serial,
    emit_fsub_signed_serial, emit_normalize_serial, emit_varshift_serial, Direction,
};

pub use oracle::{oracle_fixed, oracle_float, oracle_shift, OracleResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Serial,
    Parallel,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Serial, Variant::Parallel];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Serial => "serial",
            Variant::Parallel => "parallel",
        }
    }

    /// Accepts `serial`/`parallel` with an optional `-fixed`/`-float` suffix.
    pub fn parse(s: &str) -> Option<Self> {
        let base = s.strip_suffix("-fixed").or_else(|| s.strip_suffix("-float")).unwrap_or(s);
        match base {
            "serial" => Some(Variant::Serial),
            "parallel" => Some(Variant::Parallel),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    FAdd,
    /// Float addition restricted to operands of equal sign.
    FAddSameSign,
    FSub,
    FMul,
    FDiv,
    ShiftRight,
    ShiftLeft,
    Normalize,
}

impl Op {
    pub const ALL: [Op; 12] = [
        Op::Add,
        Op::Sub,
        Op::Mul,
        Op::Div,
        Op::FAdd,
        Op::FAddSameSign,
        Op::FSub,
        Op::FMul,
        Op::FDiv,
        Op::ShiftRight,
        Op::ShiftLeft,
        Op::Normalize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::FAdd => "fadd",
            Op::FAddSameSign => "fadd-unsigned",
            Op::FSub => "fsub",
            Op::FMul => "fmul",
            Op::FDiv => "fdiv",
            Op::ShiftRight => "varshift",
            Op::ShiftLeft => "varshift-left",
            Op::Normalize => "normalize",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Op::ALL.into_iter().find(|o| o.name() == s)
    }

    pub fn is_float(self) -> bool {
        matches!(self, Op::FAdd | Op::FAddSameSign | Op::FSub | Op::FMul | Op::FDiv)
    }

    pub fn is_shift(self) -> bool {
        matches!(self, Op::ShiftRight | Op::ShiftLeft | Op::Normalize)
    }
}

/// Everything needed to emit one program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelSpec {
    pub op: Op,
    pub variant: Variant,
    /// Operand width for fixed-point ops, value width for shifts.
    pub n: usize,
    /// Shift-amount width for variable shifts.
    pub nt: usize,
    pub fmt: FloatFormat,
    pub karatsuba_threshold: usize,
    pub mult_tail: MultTail,
}

impl KernelSpec {
    pub fn fixed(op: Op, variant: Variant, n: usize) -> Self {
        KernelSpec {
            op,
            variant,
            n,
            nt: 0,
            fmt: FloatFormat::SINGLE,
            karatsuba_threshold: DEFAULT_KARATSUBA_THRESHOLD,
            mult_tail: MultTail::PrefixAdder,
        }
    }

    pub fn float(op: Op, variant: Variant, fmt: FloatFormat) -> Self {
        KernelSpec { fmt, ..Self::fixed(op, variant, 0) }
    }

    /// A variable shift of an `nx`-bit value by an `nt`-bit amount.
    pub fn shift(op: Op, variant: Variant, nx: usize, nt: usize) -> Self {
        KernelSpec { nt, ..Self::fixed(op, variant, nx) }
    }

    /// `N` for fixed-point and shift kernels, `Ne,Nm` for float ones.
    pub fn size_label(&self) -> String {
        if self.op.is_float() {
            self.fmt.to_string()
        } else if matches!(self.op, Op::ShiftRight | Op::ShiftLeft) {
            format!("{}/{}", self.n, self.nt)
        } else {
            self.n.to_string()
        }
    }

    pub fn emit(&self) -> Result<MicroProgram> {
        let (n, fmt) = (self.n, &self.fmt);
        let dir = if self.op == Op::ShiftLeft { Direction::Left } else { Direction::Right };
        match (self.variant, self.op) {
            (Variant::Serial, Op::Add) => emit_add_serial(n),
            (Variant::Serial, Op::Sub) => emit_sub_serial(n),
            (Variant::Serial, Op::Mul) => emit_mult_serial(n, self.karatsuba_threshold),
            (Variant::Serial, Op::Div) => emit_div_serial(n),
            (Variant::Serial, Op::FAdd) => emit_fadd_signed_serial(fmt),
            (Variant::Serial, Op::FAddSameSign) => emit_fadd_unsigned_serial(fmt),
            (Variant::Serial, Op::FSub) => emit_fsub_signed_serial(fmt),
            (Variant::Serial, Op::FMul) => emit_fmul_serial(fmt),
            (Variant::Serial, Op::FDiv) => emit_fdiv_serial(fmt),
            (Variant::Serial, Op::ShiftRight | Op::ShiftLeft) => emit_varshift_serial(n, self.nt, dir),
            (Variant::Serial, Op::Normalize) => emit_normalize_serial(n),
            (Variant::Parallel, Op::Add) => emit_add_parallel(n),
            (Variant::Parallel, Op::Sub) => emit_sub_parallel(n),
            (Variant::Parallel, Op::Mul) => emit_mult_parallel(n, self.mult_tail),
            (Variant::Parallel, Op::Div) => emit_div_parallel(n),
            (Variant::Parallel, Op::FAdd) => emit_fadd_parallel(fmt),
            (Variant::Parallel, Op::FAddSameSign) => emit_fadd_unsigned_parallel(fmt),
            (Variant::Parallel, Op::FSub) => emit_fsub_parallel(fmt),
            (Variant::Parallel, Op::FMul) => emit_fmul_parallel(fmt),
            (Variant::Parallel, Op::FDiv) => emit_fdiv_parallel(fmt),
            (Variant::Parallel, Op::ShiftRight | Op::ShiftLeft) => emit_varshift_parallel(n, self.nt, dir),
            (Variant::Parallel, Op::Normalize) => emit_normalize_parallel(n),
        }
    }

    /// Input value widths, in oracle argument order.
    fn input_widths(&self) -> Vec<usize> {
        match self.op {
            Op::Div => vec![2 * self.n, self.n],
            Op::ShiftRight | Op::ShiftLeft => vec![self.n, self.nt],
            Op::Normalize => vec![self.n],
            op if op.is_float() => vec![self.fmt.width(); 2],
            _ => vec![self.n; 2],
        }
    }

    /// Operand pieces of each input and output value, low bits first.
    fn port_names(&self) -> (Vec<Vec<&'static str>>, Vec<Vec<&'static str>>) {
        let par = self.variant == Variant::Parallel;
        match self.op {
            Op::Add | Op::Sub => (vec![vec!["x"], vec!["y"]], vec![if par { vec!["z", "zn"] } else { vec!["z"] }]),
            Op::Mul => (vec![vec!["x"], vec!["y"]], vec![if par { vec!["z", "w"] } else { vec!["z"] }]),
            Op::Div => (vec![if par { vec!["z", "w"] } else { vec!["z"] }, vec!["d"]], vec![vec!["q"], vec!["r"]]),
            Op::ShiftRight | Op::ShiftLeft => (vec![vec!["x"], vec!["t"]], vec![vec!["z"]]),
            Op::Normalize => (vec![vec!["x"]], vec![vec!["z"], vec!["t"]]),
            _ => (vec![vec!["xm", "xe", "xs"], vec!["ym", "ye", "ys"]], vec![vec!["zm", "ze", "zs"]]),
        }
    }

    pub fn oracle(&self, inputs: &[u128]) -> OracleResult {
        if self.op.is_float() {
            oracle_float(&self.fmt, self.op, inputs[0], inputs[1])
        } else if self.op.is_shift() {
            oracle_shift(self.op, self.n, inputs)
        } else {
            oracle_fixed(self.op, self.n, inputs)
        }
    }
}

/// Row columns holding one value, bit `i` at `cols[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Port {
    pub name: String,
    pub cols: Vec<Col>,
}

/// An emitted program together with the mapping between oracle values and
/// row columns.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub spec: KernelSpec,
    /// Public so tests can tamper with it.
    pub program: MicroProgram,
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
}

impl Kernel {
    pub fn build(spec: KernelSpec) -> Result<Self> {
        let program = spec.emit()?;
        let (ins, outs) = spec.port_names();
        let port = |pieces: &[&str]| -> Result<Port> {
            let mut cols = Vec::new();
            for &name in pieces {
                cols.extend(program.operand(name)?.columns(&program.config));
            }
            Ok(Port { name: pieces.join("+"), cols })
        };
        let inputs = ins.iter().map(|p| port(p)).collect::<Result<Vec<_>>>()?;
        let outputs = outs.iter().map(|p| port(p)).collect::<Result<Vec<_>>>()?;
        for (p, w) in inputs.iter().zip(spec.input_widths()) {
            if p.cols.len() != w {
                return Err(PimError::InvalidArgument(format!("input {} has {} bits, expected {w}", p.name, p.cols.len())));
            }
        }
        Ok(Kernel { spec, program, inputs, outputs })
    }

    /// Runs up to 64 cases at once, one per row bit, and returns the outputs
    /// of each case.
    pub fn run_batch(&self, compiled: &crate::program::CompiledProgram, cases: &[Vec<u128>]) -> Vec<Vec<u128>> {
        assert!(cases.len() <= 64);
        let mut cells = vec![0u64; compiled.width()];
        for (row, case) in cases.iter().enumerate() {
            for (port, &v) in self.inputs.iter().zip(case) {
                for (i, &c) in port.cols.iter().enumerate() {
                    cells[c] |= (((v >> i) & 1) as u64) << row;
                }
            }
        }
        compiled.run(&mut cells);
        (0..cases.len())
            .map(|row| {
                self.outputs
                    .iter()
                    .map(|p| p.cols.iter().enumerate().fold(0u128, |acc, (i, &c)| acc | u128::from((cells[c] >> row) & 1) << i))
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub op: String,
    pub variant: String,
    pub size: String,
    /// In-domain cases checked.
    pub cases: u64,
    pub passed: u64,
    pub failed: u64,
    /// Cases drawn or enumerated but excluded by the oracle.
    pub excluded: u64,
    /// Inputs of the first failing case, as `a;b;...`.
    pub first_fail: Option<String>,
}

impl Report {
    pub const CSV_HEADER: &'static str = "op,variant,N_or_fmt,cases,passed,failed,first_fail_inputs";

    pub fn ok(&self) -> bool {
        self.failed == 0
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},\"{}\",{},{},{},{}",
            self.op,
            self.variant,
            self.size,
            self.cases,
            self.passed,
            self.failed,
            self.first_fail.as_deref().unwrap_or("")
        )
    }
}

/// Checks in-domain cases with their expected outputs, 64 per batch, in
/// parallel. The first failure is the lowest-indexed one.
fn check_cases(kernel: &Kernel, cases: Vec<(Vec<u128>, Vec<u128>)>, excluded: u64) -> Report {
    let compiled = kernel.program.compile();
    let results: Vec<(u64, Option<usize>)> = cases
        .par_chunks(64)
        .enumerate()
        .map(|(chunk, batch)| {
            let inputs: Vec<Vec<u128>> = batch.iter().map(|(i, _)| i.clone()).collect();
            let got = kernel.run_batch(&compiled, &inputs);
            let mut failed = 0;
            let mut first = None;
            for (j, (g, (_, want))) in got.iter().zip(batch).enumerate() {
                if g != want {
                    failed += 1;
                    first.get_or_insert(chunk * 64 + j);
                }
            }
            (failed, first)
        })
        .collect();
    let failed: u64 = results.iter().map(|r| r.0).sum();
    let first = results.iter().find_map(|r| r.1);
    let spec = &kernel.spec;
    Report {
        op: spec.op.name().to_string(),
        variant: spec.variant.name().to_string(),
        size: spec.size_label(),
        cases: cases.len() as u64,
        passed: cases.len() as u64 - failed,
        failed,
        excluded,
        first_fail: first.map(|i| cases[i].0.iter().map(|v| format!("{v:#x}")).collect::<Vec<_>>().join(";")),
    }
}

/// Every input combination, refused when there are more than `budget`.
pub fn check_exhaustive(kernel: &Kernel, budget: u128) -> Result<Report> {
    let widths = kernel.spec.input_widths();
    let total_bits: usize = widths.iter().sum();
    let total = if total_bits >= 127 { u128::MAX } else { 1u128 << total_bits };
    if total > budget {
        return Err(PimError::Budget { cases: total, budget });
    }
    let all: Vec<Option<(Vec<u128>, Vec<u128>)>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rest = idx;
            let inputs: Vec<u128> = widths
                .iter()
                .map(|&w| {
                    let v = rest & ((1 << w) - 1);
                    rest >>= w;
                    v
                })
                .collect();
            match kernel.spec.oracle(&inputs) {
                OracleResult::InDomain(want) => Some((inputs, want)),
                OracleResult::Excluded => None,
            }
        })
        .collect();
    let excluded = all.iter().filter(|c| c.is_none()).count() as u64;
    Ok(check_cases(kernel, all.into_iter().flatten().collect(), excluded))
}

fn random_bits(rng: &mut ChaCha8Rng, w: usize) -> u128 {
    let v: u128 = rng.gen();
    if w >= 128 {
        v
    } else {
        v & ((1 << w) - 1)
    }
}

/// A random normal value of `fmt`, with its exponent near `near` when given.
fn random_normal(rng: &mut ChaCha8Rng, fmt: &FloatFormat, near: Option<u128>) -> u128 {
    let max = fmt.max_exponent() - 1;
    let e = match near {
        Some(e) => (e as i128 + rng.gen_range(-2..=2)).clamp(1, max as i128) as u128,
        None => rng.gen_range(1..=max),
    };
    fmt.pack(rng.gen(), e, random_bits(rng, fmt.nm))
}

fn sample(spec: &KernelSpec, rng: &mut ChaCha8Rng) -> Vec<u128> {
    let n = spec.n;
    match spec.op {
        Op::Div => {
            // w < d keeps the quotient within n bits.
            let d = random_bits(rng, n).max(1);
            let w = rng.gen_range(0..d);
            vec![w << n | random_bits(rng, n), d]
        }
        Op::ShiftRight | Op::ShiftLeft => vec![random_bits(rng, n), random_bits(rng, spec.nt)],
        Op::Normalize => {
            // Spread leading-zero counts evenly.
            let lead = rng.gen_range(0..n);
            vec![(random_bits(rng, n) >> lead) | (1 << (n - 1 - lead))]
        }
        op if op.is_float() => {
            let fmt = &spec.fmt;
            let x = random_normal(rng, fmt, None);
            let near = match op {
                Op::FMul => Some((fmt.bias as u128 * 2).saturating_sub(fmt.unpack(x).1).max(1)),
                Op::FDiv => Some(fmt.unpack(x).1),
                _ if rng.gen_bool(0.5) => Some(fmt.unpack(x).1),
                _ => None,
            };
            let near = if rng.gen_bool(0.75) { near } else { None };
            let mut y = random_normal(rng, fmt, near);
            if matches!(op, Op::FAdd | Op::FSub) && rng.gen_bool(0.1) {
                // Identical magnitudes exercise exact cancellation.
                y = x ^ (u128::from(rng.gen::<bool>()) << (fmt.ne + fmt.nm));
            }
            if op == Op::FAddSameSign {
                y = (y & !(1 << (fmt.ne + fmt.nm))) | (x & (1 << (fmt.ne + fmt.nm)));
            }
            vec![x, y]
        }
        _ => vec![random_bits(rng, n), random_bits(rng, n)],
    }
}

/// `count` seeded in-domain cases. Sampling is sequential so a seed always
/// yields the same cases; evaluation is parallel.
pub fn check_random(kernel: &Kernel, count: u64, seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(count as usize);
    let mut excluded = 0u64;
    let limit = count.saturating_mul(100).max(1000);
    while (cases.len() as u64) < count && excluded < limit {
        let inputs = sample(&kernel.spec, &mut rng);
        match kernel.spec.oracle(&inputs) {
            OracleResult::InDomain(want) => cases.push((inputs, want)),
            OracleResult::Excluded => excluded += 1,
        }
    }
    check_cases(kernel, cases, excluded)
}

/// Shift-amount width that covers every shift of an `nx`-bit value.
pub fn default_nt(nx: usize) -> usize {
    ceil_log2(nx).max(1)
}
