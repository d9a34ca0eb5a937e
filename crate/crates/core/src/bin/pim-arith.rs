use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pim_arith::cost::{project, Hardware};
use pim_arith::float::FloatFormat;
use pim_arith::harness::{check_exhaustive, check_random, default_nt, Kernel, KernelSpec, Op, Report, Variant};
use pim_arith::parallel::fixed::MultTail;
use pim_arith::toolbox::{emit_broadcast, emit_prefix, emit_reduce, emit_shift, AssocOp};
use pim_arith::{cost, validate_program, Accounting, MicroProgram, PimError};

#[derive(Parser)]
#[command(name = "pim-arith", version, about = "In-memory NOT/NOR arithmetic: verify, cost, project, dump")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check emitted programs against exact oracles.
    Verify(VerifyArgs),
    /// Cycle, gate and scratch counts.
    Cost(CostArgs),
    /// Throughput and energy projection for a memory described in a TOML file.
    Throughput(ThroughputArgs),
    /// Write a program in the text dump format.
    Dump(DumpArgs),
}

#[derive(Args, Clone)]
struct Selector {
    /// add, sub, mul, div, fadd, fadd-unsigned, fsub, fmul, fdiv, varshift,
    /// varshift-left, normalize, toolbox-shift, toolbox-broadcast,
    /// toolbox-reduce, toolbox-prefix
    #[arg(long, value_parser = parse_op)]
    op: Option<OpName>,
    /// serial or parallel
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// Bit widths (value width for shifts, partition count for toolbox ops).
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Float format as `Ne,Nm`.
    #[arg(long, value_parser = parse_fmt)]
    fmt: Option<FloatFormat>,
    /// Shift-amount width for varshift.
    #[arg(long)]
    nt: Option<usize>,
    /// Karatsuba threshold for serial multiplication.
    #[arg(long)]
    threshold: Option<usize>,
    /// Final adder of the parallel multiplier.
    #[arg(long, value_enum, default_value_t = Tail::Prefix)]
    tail: Tail,
    /// Associative operator for toolbox-reduce and toolbox-prefix.
    #[arg(long, value_parser = parse_assoc, default_value = "or")]
    assoc: AssocOp,
    /// Shift distance for toolbox-shift, source partition for toolbox-broadcast.
    #[arg(long, default_value_t = 1)]
    j: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Tail {
    Prefix,
    Legacy,
}

#[derive(Clone, Copy, ValueEnum)]
enum AccountingArg {
    Logical,
    Memristive,
}

#[derive(Clone, Copy)]
enum OpName {
    Arith(Op),
    ToolShift,
    ToolBroadcast,
    ToolReduce,
    ToolPrefix,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    sel: Selector,
    /// Enumerate every input.
    #[arg(long, conflicts_with = "random")]
    exhaustive: bool,
    /// Number of seeded random in-domain cases.
    #[arg(long)]
    random: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest exhaustive case count accepted.
    #[arg(long, default_value_t = 1 << 24)]
    budget: u128,
    /// Run the whole suite instead of one selection.
    #[arg(long, conflicts_with = "op")]
    all: bool,
    /// With --all: smaller sizes and fewer random cases.
    #[arg(long, requires = "all")]
    quick: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CostArgs {
    #[command(flatten)]
    sel: Selector,
    #[arg(long, value_enum, default_value_t = AccountingArg::Logical)]
    accounting: AccountingArg,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ThroughputArgs {
    #[command(flatten)]
    sel: Selector,
    /// TOML file with rows, cols, arrays, clock_period and energy_per_gate.
    #[arg(long)]
    hw: PathBuf,
    #[arg(long, value_enum, default_value_t = AccountingArg::Logical)]
    accounting: AccountingArg,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    sel: Selector,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_op(s: &str) -> Result<OpName, String> {
    Ok(match s {
        "toolbox-shift" => OpName::ToolShift,
        "toolbox-broadcast" => OpName::ToolBroadcast,
        "toolbox-reduce" => OpName::ToolReduce,
        "toolbox-prefix" => OpName::ToolPrefix,
        _ => OpName::Arith(Op::parse(s).ok_or_else(|| format!("unknown op `{s}`"))?),
    })
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("unknown variant `{s}`, expected serial or parallel"))
}

fn parse_fmt(s: &str) -> Result<FloatFormat, String> {
    FloatFormat::parse(s).map_err(|e| e.to_string())
}

fn parse_assoc(s: &str) -> Result<AssocOp, String> {
    AssocOp::parse(s).ok_or_else(|| format!("unknown associative op `{s}`"))
}

/// One concrete program to build.
#[derive(Clone, Copy)]
enum Target {
    Kernel(KernelSpec),
    Toolbox { name: OpName, k: usize, assoc: AssocOp, j: usize },
}

impl Target {
    fn labels(&self) -> (String, String, String) {
        match self {
            Target::Kernel(s) => (s.op.name().into(), s.variant.name().into(), s.size_label()),
            Target::Toolbox { name, k, assoc, j } => {
                let op = match name {
                    OpName::ToolShift => format!("toolbox-shift/{j}"),
                    OpName::ToolBroadcast => format!("toolbox-broadcast/{j}"),
                    OpName::ToolReduce => format!("toolbox-reduce/{}", assoc.name()),
                    _ => format!("toolbox-prefix/{}", assoc.name()),
                };
                (op, "parallel".into(), k.to_string())
            }
        }
    }

    fn emit(&self) -> Result<MicroProgram, PimError> {
        match *self {
            Target::Kernel(s) => s.emit(),
            Target::Toolbox { name, k, assoc, j } => match name {
                OpName::ToolShift => emit_shift(k, j),
                OpName::ToolBroadcast => emit_broadcast(k, j),
                OpName::ToolReduce => emit_reduce(k, assoc),
                _ => emit_prefix(k, assoc),
            },
        }
    }
}

impl Selector {
    fn targets(&self) -> Result<Vec<Target>, String> {
        let name = self.op.ok_or("--op is required")?;
        if let OpName::Arith(op) = name {
            let variants = match self.variant {
                Some(v) => vec![v],
                None => Variant::ALL.to_vec(),
            };
            let mut out = Vec::new();
            for variant in variants {
                if op.is_float() {
                    out.push(self.tune(KernelSpec::float(op, variant, self.fmt.unwrap_or(FloatFormat::SINGLE))));
                    continue;
                }
                let sizes = if self.n.is_empty() { vec![if op.is_shift() { 24 } else { 32 }] } else { self.n.clone() };
                for n in sizes {
                    let spec = if matches!(op, Op::ShiftRight | Op::ShiftLeft) {
                        KernelSpec::shift(op, variant, n, self.nt.unwrap_or_else(|| default_nt(n)))
                    } else {
                        KernelSpec::fixed(op, variant, n)
                    };
                    out.push(self.tune(spec));
                }
            }
            Ok(out)
        } else {
            let sizes = if self.n.is_empty() { vec![16] } else { self.n.clone() };
            Ok(sizes.into_iter().map(|k| Target::Toolbox { name, k, assoc: self.assoc, j: self.j }).collect())
        }
    }

    fn tune(&self, mut spec: KernelSpec) -> Target {
        if let Some(t) = self.threshold {
            spec.karatsuba_threshold = t;
        }
        spec.mult_tail = match self.tail {
            Tail::Prefix => MultTail::PrefixAdder,
            Tail::Legacy => MultTail::LegacyIterations,
        };
        Target::Kernel(spec)
    }
}

/// CSV lines to a file or standard output.
fn emit_csv(path: &Option<PathBuf>, header: &str, rows: &[String]) -> std::io::Result<()> {
    let mut text = format!("{header}\n");
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn accounting(a: AccountingArg) -> Accounting {
    match a {
        AccountingArg::Logical => Accounting::Logical,
        AccountingArg::Memristive => Accounting::Memristive,
    }
}

/// The `--all` suite: every op and variant at a few sizes.
fn suite(quick: bool) -> Vec<(KernelSpec, Option<u64>)> {
    let (sizes, count) = if quick { (vec![4, 16], 1000) } else { (vec![4, 16, 32], 10_000) };
    let float_count = if quick { 1000 } else { 100_000 };
    let toy = FloatFormat::new(4, 3).expect("toy format");
    let mut out = Vec::new();
    for variant in Variant::ALL {
        for op in [Op::Add, Op::Sub, Op::Mul, Op::Div] {
            for &n in &sizes {
                out.push((KernelSpec::fixed(op, variant, n), if n == 4 { None } else { Some(count) }));
            }
        }
        for op in [Op::FAdd, Op::FAddSameSign, Op::FSub, Op::FMul, Op::FDiv] {
            out.push((KernelSpec::float(op, variant, toy), None));
            out.push((KernelSpec::float(op, variant, FloatFormat::SINGLE), Some(float_count)));
        }
        out.push((KernelSpec::shift(Op::ShiftRight, variant, 8, 3), None));
        out.push((KernelSpec::shift(Op::ShiftLeft, variant, 8, 3), None));
        out.push((KernelSpec::fixed(Op::Normalize, variant, 12), None));
        out.push((KernelSpec::shift(Op::ShiftRight, variant, 24, 5), Some(count)));
        out.push((KernelSpec::fixed(Op::Normalize, variant, 24), Some(count)));
    }
    out
}

fn verify(args: &VerifyArgs) -> Result<bool, String> {
    let jobs: Vec<(KernelSpec, Option<u64>)> = if args.all {
        suite(args.quick)
    } else {
        let mode = match (args.exhaustive, args.random) {
            (_, Some(c)) => Some(c),
            (true, None) => None,
            (false, None) => return Err("choose --exhaustive or --random COUNT".into()),
        };
        args.sel
            .targets()?
            .into_iter()
            .map(|t| match t {
                Target::Kernel(s) => Ok((s, mode)),
                Target::Toolbox { .. } => Err("toolbox ops have no verify mode; their tests cover them".to_string()),
            })
            .collect::<Result<_, _>>()?
    };
    let mut rows = Vec::new();
    let mut ok = true;
    for (spec, mode) in jobs {
        let kernel = Kernel::build(spec).map_err(|e| e.to_string())?;
        let validation = validate_program(&kernel.program);
        if !validation.is_ok() {
            eprintln!("{} {} {}: {:?}", spec.op.name(), spec.variant.name(), spec.size_label(), validation);
            ok = false;
        }
        let report: Report = match mode {
            Some(count) => check_random(&kernel, count, args.seed),
            None => check_exhaustive(&kernel, args.budget).map_err(|e| e.to_string())?,
        };
        eprintln!(
            "{:<14} {:<9} {:<6} {:>7} cases  {}",
            report.op,
            report.variant,
            report.size,
            report.cases,
            if report.ok() { "pass" } else { "FAIL" }
        );
        ok &= report.ok();
        rows.push(report.csv_row());
    }
    emit_csv(&args.csv, Report::CSV_HEADER, &rows).map_err(|e| e.to_string())?;
    Ok(ok)
}

fn cost_table(args: &CostArgs) -> Result<bool, String> {
    let mut rows = Vec::new();
    for t in args.sel.targets()? {
        let prog = t.emit().map_err(|e| e.to_string())?;
        let c = cost(&prog, accounting(args.accounting));
        let (op, variant, size) = t.labels();
        rows.push(format!(
            "{op},{variant},\"{size}\",{},{},{},{},{},{}",
            c.cycles,
            c.gates,
            c.scratch_peak,
            c.rounds,
            c.inits,
            prog.row_width()
        ));
    }
    emit_csv(&args.csv, "op,variant,N,cycles,gates,scratch_peak,rounds,inits,row_width", &rows).map_err(|e| e.to_string())?;
    Ok(true)
}

fn throughput(args: &ThroughputArgs) -> Result<bool, String> {
    let text = std::fs::read_to_string(&args.hw).map_err(|e| format!("{}: {e}", args.hw.display()))?;
    let hw: Hardware<f64> = toml::from_str(&text).map_err(|e| format!("{}: {e}", args.hw.display()))?;
    let mut rows = Vec::new();
    for t in args.sel.targets()? {
        let prog = t.emit().map_err(|e| e.to_string())?;
        let c = cost(&prog, accounting(args.accounting));
        let p = project(&hw, prog.row_width(), &c).map_err(|e| e.to_string())?;
        let (op, variant, size) = t.labels();
        rows.push(format!(
            "{op},{variant},\"{size}\",{},{},{},{},{:e},{:e}",
            c.cycles, c.gates, p.ops_per_row, p.ops_per_batch, p.throughput, p.throughput_per_watt
        ));
    }
    emit_csv(
        &args.csv,
        "op,variant,N_or_fmt,cycles,gates,ops_per_row,ops_per_batch,throughput_ops_per_s,throughput_per_watt",
        &rows,
    )
    .map_err(|e| e.to_string())?;
    Ok(true)
}

fn dump(args: &DumpArgs) -> Result<bool, String> {
    let targets = args.sel.targets()?;
    let [t] = targets.as_slice() else {
        return Err("dump needs exactly one program: give --variant and a single --n".into());
    };
    let text = pim_arith::dump::dump(&t.emit().map_err(|e| e.to_string())?);
    match &args.out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string())?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(a) => verify(a),
        Command::Cost(a) => cost_table(a),
        Command::Throughput(a) => throughput(a),
        Command::Dump(a) => dump(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
