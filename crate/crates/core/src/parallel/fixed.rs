//! Bit-parallel fixed-point arithmetic: carry-lookahead addition through a
//! prefix scan, carry-save add-shift multiplication and carry-save division
//! whose remainder sign comes from a carry reduction.

use std::ops::Range;

use crate::error::{PimError, Result};
use crate::microcode::{Builder, Gates, Macros, Off};
use crate::model::GateInstance;
use crate::program::{MicroProgram, Role};
use crate::toolbox::{broadcast, prefix, reduce, shift, shift_many, transfer, AssocOp};

use super::partitions_for;

/// How the multiplier folds its final carry-save pair into the high half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MultTail {
    /// One carry-lookahead addition.
    PrefixAdder,
    /// `n` more add-shift iterations with a zero partial product.
    LegacyIterations,
}

fn check_width(n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        return Err(PimError::InvalidArgument(format!("bit width {n} outside 1..={max}")));
    }
    Ok(())
}

/// Carry into the lowest position of an addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarryIn {
    Zero,
    One,
    /// The cell of this signal in the lowest partition of the range.
    Signal(Off),
}

/// Generate/propagate of `x + y` over `range`: returns `(g, a, p)` with
/// `p = x XOR y`.
fn generate_propagate(b: &mut Builder, range: Range<usize>, x: Off, y: Off) -> Result<(Off, Off, Off)> {
    let mut l = b.lanes(range);
    let none = l.nor(x, y)?;
    let a = l.not(none)?;
    let nx = l.not(x)?;
    let ny = l.not(y)?;
    let g = l.nor(nx, ny)?;
    let p = l.nor(none, g)?;
    for s in [none, nx, ny] {
        l.release(s);
    }
    Ok((g, a, p))
}

/// `z = x + y + carry` over the partitions of `range`. With `negate`, `y` is
/// complemented first. Returns the signal whose cell in the top partition of
/// the range holds the carry out; the caller frees it.
pub fn add_signals(b: &mut Builder, range: Range<usize>, x: Off, y: Off, negate: bool, carry: CarryIn, z: Off) -> Result<Off> {
    let lo = range.start;
    let ny = if negate { Some(b.lanes(range.clone()).not(y)?) } else { None };
    let (g, a, p) = generate_propagate(b, range.clone(), x, ny.unwrap_or(y))?;
    if let Some(s) = ny {
        b.free_signal(s);
    }
    match carry {
        CarryIn::Zero => {}
        // a carry into the lowest bit turns its propagate into a generate
        CarryIn::One => b.lanes([lo]).copy_to(a, g)?,
        CarryIn::Signal(cin) => {
            let mut l = b.lanes([lo]);
            let t = l.and(a, cin)?;
            l.or_to(g, t, g)?;
            l.release(t);
        }
    }
    prefix(b, range.clone(), AssocOp::Carry, &[g, a])?;
    let c = b.signal()?;
    match carry {
        CarryIn::Zero => shift(b, range.clone(), 1, g, c, Some(false))?,
        CarryIn::One => shift(b, range.clone(), 1, g, c, Some(true))?,
        CarryIn::Signal(cin) => {
            shift(b, range.clone(), 1, g, c, None)?;
            b.lanes([lo]).copy_to(cin, c)?;
        }
    }
    b.lanes(range).xor_to(p, c, z)?;
    for s in [a, p, c] {
        b.free_signal(s);
    }
    Ok(g)
}

fn emit_add_sub(n: usize, subtract: bool) -> Result<MicroProgram> {
    check_width(n, 64)?;
    let mut b = Builder::partitioned(partitions_for(n))?;
    let x = b.strided("x", n, Role::Input)?;
    let y = b.strided("y", n, Role::Input)?;
    let z = b.strided("z", n, Role::Output)?;
    let carry = add_signals(&mut b, 0..n, x, y, subtract, if subtract { CarryIn::One } else { CarryIn::Zero }, z)?;
    let top = if subtract {
        let t = b.signal()?;
        b.local(&[n - 1], &GateInstance::not(carry, t));
        t
    } else {
        carry
    };
    let col = b.col(n - 1, top);
    b.name_cell("zn", col, Role::Output);
    b.finish()
}

/// `z + 2^n zn = x + y` on strided operands.
pub fn emit_add_parallel(n: usize) -> Result<MicroProgram> {
    emit_add_sub(n, false)
}

/// `z + 2^n zn = x - y mod 2^(n+1)` on strided operands.
pub fn emit_sub_parallel(n: usize) -> Result<MicroProgram> {
    emit_add_sub(n, true)
}

/// `w * 2^n + z = x * y` over partitions `0..n`. Each iteration broadcasts
/// one multiplier bit, adds the partial product into a carry-save pair,
/// retires the lowest sum bit and shifts the sums down one partition.
pub fn mult_signals(b: &mut Builder, n: usize, x: Off, y: Off, z: Off, w: Off, tail: MultTail) -> Result<()> {
    let all = 0..n;
    let (s, c, nx, bit) = {
        let mut l = b.lanes(all.clone());
        let s = l.init(false)?;
        let c = l.init(false)?;
        let nx = l.not(x)?;
        (s, c, nx, l.fresh()?)
    };
    let retire = |b: &mut Builder, i: usize, out: Off| -> Result<()> {
        transfer(b, 0, s, i, out)?;
        shift(b, 0..n, -1, s, s, Some(false))
    };
    for i in 0..n {
        transfer(b, i, y, i, bit)?;
        broadcast(b, all.clone(), i, bit)?;
        let mut l = b.lanes(all.clone());
        let nbit = l.not(bit)?;
        let pp = l.nor(nx, nbit)?;
        l.fa_to(s, c, pp, s, c)?;
        l.release(nbit);
        l.release(pp);
        retire(b, i, z)?;
    }
    match tail {
        MultTail::PrefixAdder => {
            let carry = add_signals(b, 0..n, s, c, false, CarryIn::Zero, w)?;
            b.free_signal(carry);
        }
        MultTail::LegacyIterations => {
            let zero = b.lanes(all.clone()).init(false)?;
            for i in 0..n {
                b.lanes(all.clone()).fa_to(s, c, zero, s, c)?;
                retire(b, i, w)?;
            }
            b.free_signal(zero);
        }
    }
    for sig in [s, c, nx, bit] {
        b.free_signal(sig);
    }
    Ok(())
}

/// `w * 2^n + z = x * y` on strided operands.
pub fn emit_mult_parallel(n: usize, tail: MultTail) -> Result<MicroProgram> {
    check_width(n, 64)?;
    let mut b = Builder::partitioned(partitions_for(n))?;
    let x = b.strided("x", n, Role::Input)?;
    let y = b.strided("y", n, Role::Input)?;
    let z = b.strided("z", n, Role::Output)?;
    let w = b.strided("w", n, Role::Output)?;
    mult_signals(&mut b, n, x, y, z, w, tail)?;
    b.finish()
}

/// `q = (w * 2^n + z) / d`, `r` the remainder, for `d != 0` and `w < d`.
///
/// Non-restoring division with the remainder kept as a carry-save pair over
/// `n + 1` partitions. The sign of each partial remainder comes from a carry
/// reduction over the low `n` positions combined with the top sum and carry
/// bits.
pub fn div_signals(b: &mut Builder, n: usize, z: Off, w: Off, d: Off, q: Off, r: Off) -> Result<()> {
    let span = 0..n + 1;

    let (s, c, sub, dd, ndd) = {
        let mut l = b.lanes(span.clone());
        let s = l.init(false)?;
        let c = l.init(false)?;
        // the previous quotient bit, one copy per partition; 1 means subtract
        let sub = l.init(true)?;
        let dd = l.init(false)?;
        (s, c, sub, dd, l.fresh()?)
    };
    {
        let mut l = b.lanes(0..n);
        l.copy_to(w, s)?;
        l.copy_to(d, dd)?;
    }
    b.lanes(span.clone()).not_to(dd, ndd);

    for i in (0..n).rev() {
        shift_many(b, span.clone(), 1, &[(s, s), (c, c)], Some(false))?;
        transfer(b, i, z, 0, s)?;
        {
            // R + (d XOR sub) + sub: the top position is the sign extension
            let mut l = b.lanes(span.clone());
            let nsub = l.not(sub)?;
            let addend = l.xor_dual(dd, ndd, sub, nsub)?;
            l.fa_to(s, c, addend, s, c)?;
            l.release(nsub);
            l.release(addend);
        }
        shift(b, span.clone(), 1, c, c, None)?;
        transfer(b, 0, sub, 0, c)?;

        let (g, a, p) = generate_propagate(b, 0..n, s, c)?;
        b.free_signal(p);
        reduce(b, 0..n, AssocOp::Carry, &[g, a])?;
        let ncarry = b.signal()?;
        b.cross_not(&[(n - 1, n)], g, ncarry);
        // quotient bit = NOT sign = s_n XOR c_n XOR NOT carry
        b.lanes([n]).xor3_to(s, c, ncarry, sub)?;
        for t in [g, a, ncarry] {
            b.free_signal(t);
        }
        broadcast(b, span.clone(), n, sub)?;
        b.lanes([i]).copy_to(sub, q)?;
    }

    // a negative final remainder gets d added back
    let t = b.lanes(0..n).nor(ndd, sub)?;
    b.lanes(0..n).fa_to(s, c, t, s, c)?;
    shift(b, 0..n, 1, c, c, Some(false))?;
    let carry = add_signals(b, 0..n, s, c, false, CarryIn::Zero, r)?;
    for sig in [t, carry, s, c, sub, dd, ndd] {
        b.free_signal(sig);
    }
    Ok(())
}

/// `q = (w * 2^n + z) / d` and `r` on strided operands, for `d != 0` and
/// `w < d`. Uses the next power of two above `n` partitions.
pub fn emit_div_parallel(n: usize) -> Result<MicroProgram> {
    check_width(n, 63)?;
    let mut b = Builder::partitioned(partitions_for(n + 1))?;
    let z = b.strided("z", n, Role::Input)?;
    let w = b.strided("w", n, Role::Input)?;
    let d = b.strided("d", n, Role::Input)?;
    let q = b.strided("q", n, Role::Output)?;
    let r = b.strided("r", n, Role::Output)?;
    div_signals(&mut b, n, z, w, d, q, r)?;
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{cost, validate_program, Accounting};

    fn valid(p: MicroProgram) -> MicroProgram {
        let report = validate_program(&p);
        assert!(report.is_ok(), "{report:?}");
        p
    }

    fn run(p: &MicroProgram, inputs: &[(&str, u128)]) -> Vec<u128> {
        p.evaluate(inputs).unwrap().into_iter().map(|(_, v)| v).collect()
    }

    #[test]
    fn add_sub_exhaustive() {
        for n in 1..=5usize {
            let add = valid(emit_add_parallel(n).unwrap());
            let sub = valid(emit_sub_parallel(n).unwrap());
            let m = 1u128 << (n + 1);
            for x in 0..1u128 << n {
                for y in 0..1u128 << n {
                    let o = run(&add, &[("x", x), ("y", y)]);
                    assert_eq!(o[0] | o[1] << n, x + y, "add n={n} {x}+{y}");
                    let o = run(&sub, &[("x", x), ("y", y)]);
                    assert_eq!(o[0] | o[1] << n, (x + m - y) % m, "sub n={n} {x}-{y}");
                }
            }
        }
    }

    #[test]
    fn add_example() {
        let p = valid(emit_add_parallel(16).unwrap());
        let o = run(&p, &[("x", 51234), ("y", 12987)]);
        assert_eq!(o[0] | o[1] << 16, 64221);
    }

    #[test]
    fn mult_exhaustive() {
        for n in 1..=4usize {
            for tail in [MultTail::PrefixAdder, MultTail::LegacyIterations] {
                let p = valid(emit_mult_parallel(n, tail).unwrap());
                for x in 0..1u128 << n {
                    for y in 0..1u128 << n {
                        let o = run(&p, &[("x", x), ("y", y)]);
                        assert_eq!(o[0] | o[1] << n, x * y, "{tail:?} n={n} {x}*{y}");
                    }
                }
            }
        }
        let p = emit_mult_parallel(8, MultTail::PrefixAdder).unwrap();
        let o = run(&p, &[("x", 200), ("y", 131)]);
        assert_eq!(o[0] | o[1] << 8, 26200);
    }

    #[test]
    fn div_exhaustive() {
        for n in 1..=4usize {
            let p = valid(emit_div_parallel(n).unwrap());
            for d in 1..1u128 << n {
                for v in 0..d << n {
                    let o = run(&p, &[("z", v & ((1 << n) - 1)), ("w", v >> n), ("d", d)]);
                    assert_eq!(o, vec![v / d, v % d], "n={n} {v}/{d}");
                }
            }
        }
    }

    #[test]
    fn legacy_tail_costs_more() {
        let fast = cost(&emit_mult_parallel(32, MultTail::PrefixAdder).unwrap(), Accounting::Logical);
        let slow = cost(&emit_mult_parallel(32, MultTail::LegacyIterations).unwrap(), Accounting::Logical);
        assert!(slow.gates as f64 / fast.gates as f64 >= 1.4, "{} {}", slow.gates, fast.gates);
    }
}
