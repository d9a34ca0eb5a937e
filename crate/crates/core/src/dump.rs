//! Line-oriented text form of a [`MicroProgram`].
//!
//! ```text
//! WIDTH 8
//! PARTITIONS 2
//! OPERAND x CONTIGUOUS 0 2 input
//! OPERAND s STRIDED 3 2 output
//! STEP 0 SW=0 ; NOR(0,1)->2 ; NOR(4,5)->6
//! ```
//!
//! Parsing then dumping reproduces the input byte for byte.

use std::fmt::Write as _;

use crate::error::{PimError, Result};
use crate::model::{CycleStep, GateInstance, GateKind, PartitionConfig, SwitchConfig};
use crate::program::{MicroProgram, OperandLayout, Placement, Role};

pub fn dump(prog: &MicroProgram) -> String {
    let mut out = String::new();
    writeln!(out, "WIDTH {}", prog.row_width()).unwrap();
    writeln!(out, "PARTITIONS {}", prog.config.k()).unwrap();
    for op in &prog.operands {
        let (tag, at) = match op.placement {
            Placement::Contiguous { base } => ("CONTIGUOUS", base),
            Placement::Strided { offset } => ("STRIDED", offset),
        };
        writeln!(out, "OPERAND {} {tag} {at} {} {}", op.name, op.width, op.role.name()).unwrap();
    }
    for (i, step) in prog.steps.iter().enumerate() {
        write!(out, "STEP {i} SW={}", step.switches.to_bitstring()).unwrap();
        for g in &step.gates {
            write!(out, " ; {g}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn err(line: usize, msg: impl Into<String>) -> PimError {
    PimError::Parse { line, msg: msg.into() }
}

fn num(line: usize, s: &str) -> Result<usize> {
    s.parse().map_err(|_| err(line, format!("expected a number, found `{s}`")))
}

fn parse_gate(line: usize, s: &str) -> Result<GateInstance> {
    let (head, out) = s.split_once(")->").ok_or_else(|| err(line, format!("malformed gate `{s}`")))?;
    let (kind, args) = head.split_once('(').ok_or_else(|| err(line, format!("malformed gate `{s}`")))?;
    let kind = GateKind::from_mnemonic(kind).ok_or_else(|| err(line, format!("unknown gate kind `{kind}`")))?;
    let inputs = if args.is_empty() {
        Vec::new()
    } else {
        args.split(',').map(|a| num(line, a)).collect::<Result<Vec<_>>>()?
    };
    if inputs.len() != kind.arity() {
        return Err(err(line, format!("{} takes {} inputs", kind.mnemonic(), kind.arity())));
    }
    Ok(GateInstance { kind, inputs, output: num(line, out)? })
}

/// Parses a dump. The result is structurally well formed but not validated
/// against step constraints; use [`crate::program::validate_program`] for that.
pub fn parse(text: &str) -> Result<MicroProgram> {
    let mut width = None;
    let mut config = None;
    let mut operands = Vec::new();
    let mut steps = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let words: Vec<&str> = raw.split(' ').collect();
        match words[0] {
            "WIDTH" if words.len() == 2 && width.is_none() => width = Some(num(line, words[1])?),
            "PARTITIONS" if words.len() == 2 && config.is_none() => {
                let w = width.ok_or_else(|| err(line, "PARTITIONS before WIDTH"))?;
                let k = num(line, words[1])?;
                if k == 0 || w % k != 0 {
                    return Err(err(line, format!("{k} partitions do not divide width {w}")));
                }
                config = Some(PartitionConfig::new(k, w / k).map_err(|e| err(line, e.to_string()))?);
            }
            "OPERAND" if words.len() == 6 && steps.is_empty() => {
                let at = num(line, words[3])?;
                let placement = match words[2] {
                    "CONTIGUOUS" => Placement::Contiguous { base: at },
                    "STRIDED" => Placement::Strided { offset: at },
                    other => return Err(err(line, format!("unknown layout `{other}`"))),
                };
                let role = Role::parse(words[5]).ok_or_else(|| err(line, format!("unknown role `{}`", words[5])))?;
                operands.push(OperandLayout { name: words[1].to_string(), placement, width: num(line, words[4])?, role });
            }
            "STEP" if words.len() >= 3 => {
                let cfg = config.ok_or_else(|| err(line, "STEP before PARTITIONS"))?;
                if num(line, words[1])? != steps.len() {
                    return Err(err(line, format!("expected step index {}", steps.len())));
                }
                let bits = words[2].strip_prefix("SW=").ok_or_else(|| err(line, "missing SW= field"))?;
                let switches = SwitchConfig::from_bitstring(bits)
                    .filter(|s| s.states.len() == cfg.k() - 1)
                    .ok_or_else(|| err(line, format!("switch bitstring `{bits}` is not {} bits of 0/1", cfg.k() - 1)))?;
                let rest = &words[3..];
                if !rest.len().is_multiple_of(2) || rest.is_empty() {
                    return Err(err(line, "step needs ` ; `-separated gates"));
                }
                let mut gates = Vec::new();
                for pair in rest.chunks(2) {
                    if pair[0] != ";" {
                        return Err(err(line, format!("expected `;`, found `{}`", pair[0])));
                    }
                    gates.push(parse_gate(line, pair[1])?);
                }
                steps.push(CycleStep { switches, gates });
            }
            _ => return Err(err(line, format!("unrecognized line `{raw}`"))),
        }
    }
    let config = config.ok_or_else(|| err(0, "missing WIDTH/PARTITIONS header"))?;
    Ok(MicroProgram { config, steps, operands })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MicroProgram {
        let config = PartitionConfig::new(2, 4).unwrap();
        MicroProgram {
            config,
            steps: vec![
                CycleStep::spanning(&config, vec![GateInstance::init(false, 2), GateInstance::init(false, 6)]),
                CycleStep::spanning(&config, vec![GateInstance::nor(0, 1, 2), GateInstance::nor(4, 5, 6)]),
                CycleStep::spanning(&config, vec![GateInstance::not(2, 7)]),
            ],
            operands: vec![
                OperandLayout::contiguous("x", 0, 2, Role::Input),
                OperandLayout::strided("s", 3, 2, Role::Output),
            ],
        }
    }

    #[test]
    fn roundtrip() {
        let text = dump(&sample());
        assert!(text.contains("STEP 2 SW=1 ; NOT(2)->7\n"));
        let back = parse(&text).unwrap();
        assert_eq!(back, sample());
        assert_eq!(dump(&back), text);
    }

    #[test]
    fn rejects_bad_switches() {
        let text = dump(&sample()).replace("SW=1", "SW=1x");
        assert!(matches!(parse(&text), Err(PimError::Parse { line: 7, .. })));
        let text = dump(&sample()).replace("SW=1", "SW=10");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("WIDTH 4\nPARTITIONS 1\nSTEP 0 SW= ; XOR(0,1)->2\n").is_err());
        assert!(parse("WIDTH 4\nPARTITIONS 3\n").is_err());
        assert!(parse("STEP 0 SW= ; NOT(0)->1\n").is_err());
    }
}
