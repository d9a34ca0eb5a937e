//! Bit-parallel floating point on strided operands. The working mantissa
//! uses the same `nm + 4` positions as the serial emitters, position `i` in
//! partition `i`; exponents sit in partitions `0..ne` and signs in
//! partition 0.

use std::ops::Range;

use crate::error::{PimError, Result};
use crate::float::FloatFormat;
use crate::microcode::{Builder, Gates, Macros, Off};
use crate::program::{MicroProgram, Role};
use crate::serial::float::{ceil_log2, Direction, FloatOp};
use crate::toolbox::{broadcast, reduce, shift, transfer, AssocOp};

use super::fixed::{add_signals, div_signals, mult_signals, CarryIn, MultTail};
use super::partitions_for;

/// Copies the cell of `sig` in partition `src` into every cell of a fresh
/// signal.
fn spread(b: &mut Builder, src: usize, sig: Off) -> Result<Off> {
    let out = b.signal()?;
    transfer(b, src, sig, src, out)?;
    let k = b.k();
    broadcast(b, 0..k, src, out)?;
    Ok(out)
}

/// OR of `sig` over `range` into the top partition of the range of a fresh
/// signal; `sig` is left intact.
fn any(b: &mut Builder, range: Range<usize>, sig: Off) -> Result<Off> {
    let work = b.lanes(range.clone()).fresh()?;
    b.lanes(range.clone()).copy_to(sig, work)?;
    reduce(b, range, AssocOp::Or, &[work])?;
    Ok(work)
}

/// A fresh signal holding the bits of `value`, bit `i` in partition `i`.
fn constant(b: &mut Builder, value: u128) -> Result<Off> {
    let k = b.k();
    let ones: Vec<usize> = (0..k).filter(|&i| i < 128 && value >> i & 1 == 1).collect();
    let zeros: Vec<usize> = (0..k).filter(|i| !ones.contains(i)).collect();
    let sig = b.signal()?;
    b.lanes(ones).init_to(true, sig);
    b.lanes(zeros).init_to(false, sig);
    Ok(sig)
}

/// In-place variable shift of `x` over partitions `0..w` by the amount whose
/// bit `j` is the cell of `t` in partition `j`, `j < nt`.
///
/// Each amount bit is broadcast, the shifted copy is built with the
/// toolbox shift and one multiplexer per partition picks. With `sticky`,
/// returns a signal whose partition-0 cell is the OR of every bit shifted
/// out to the right.
pub fn varshift(b: &mut Builder, w: usize, x: Off, t: Off, nt: usize, dir: Direction, sticky: bool) -> Result<Option<Off>> {
    let acc = if sticky { Some(b.lanes([0]).init(false)?) } else { None };
    let gather = |b: &mut Builder, from: usize, term: Off| -> Result<()> {
        if let Some(acc) = acc {
            let tmp = b.signal()?;
            transfer(b, from, term, 0, tmp)?;
            b.lanes([0]).or_to(acc, tmp, acc)?;
            b.free_signal(tmp);
        }
        Ok(())
    };
    let regular = (0..nt).take_while(|&j| (1usize << j) < w).count();
    for j in 0..regular {
        let s = 1usize << j;
        let tb = spread(b, j, t)?;
        if sticky {
            let win = any(b, 0..s, x)?;
            b.lanes([s - 1]).and_to(win, tb, win)?;
            gather(b, s - 1, win)?;
            b.free_signal(win);
        }
        let moved = b.signal()?;
        let dist = if dir == Direction::Right { -(s as isize) } else { s as isize };
        shift(b, 0..w, dist, x, moved, Some(false))?;
        let mut l = b.lanes(0..w);
        let nb = l.not(tb)?;
        l.mux_to(tb, nb, moved, x, x)?;
        l.release(nb);
        b.free_signal(moved);
        b.free_signal(tb);
    }
    if nt > regular {
        // every remaining amount bit clears the whole word
        let big = any(b, regular..nt, t)?;
        let bb = spread(b, nt - 1, big)?;
        b.free_signal(big);
        if sticky {
            let all = any(b, 0..w, x)?;
            b.lanes([w - 1]).and_to(all, bb, all)?;
            gather(b, w - 1, all)?;
            b.free_signal(all);
        }
        let mut l = b.lanes(0..w);
        let nx = l.not(x)?;
        l.nor_to(bb, nx, x);
        l.release(nx);
        b.free_signal(bb);
    }
    Ok(acc)
}

/// In-place left normalization of `x` over `0..w`; bit `j` of the shift
/// count goes to the cell of `t` in partition `j`.
pub fn normalize(b: &mut Builder, w: usize, x: Off, t: Off) -> Result<()> {
    let k = b.k();
    for j in (0..ceil_log2(w)).rev() {
        let s = 1usize << j;
        // t_j = top s bits all zero
        let any_set = any(b, w - s..w, x)?;
        let win = b.lanes([w - 1]).not(any_set)?;
        b.free_signal(any_set);
        transfer(b, w - 1, win, j, t)?;
        broadcast(b, 0..k, w - 1, win)?;
        let moved = b.signal()?;
        shift(b, 0..w, s as isize, x, moved, Some(false))?;
        let mut l = b.lanes(0..w);
        let nb = l.not(win)?;
        l.mux_to(win, nb, moved, x, x)?;
        l.release(nb);
        b.free_signal(moved);
        b.free_signal(win);
    }
    Ok(())
}

/// Strided variable shift of `x` (`nx` bits) by `t` (`nt` bits) into `z`.
pub fn emit_varshift_parallel(nx: usize, nt: usize, dir: Direction) -> Result<MicroProgram> {
    if nx == 0 || nt == 0 || nx > 127 || nt > 7 {
        return Err(PimError::InvalidArgument(format!("variable shift needs 1<=Nx<=127 and 1<=Nt<=7, got {nx},{nt}")));
    }
    let mut b = Builder::partitioned(partitions_for(nx.max(nt)))?;
    let x = b.strided("x", nx, Role::Input)?;
    let t = b.strided("t", nt, Role::Input)?;
    let z = b.strided("z", nx, Role::Output)?;
    b.lanes(0..nx).copy_to(x, z)?;
    varshift(&mut b, nx, z, t, nt, dir, false)?;
    b.finish()
}

/// Strided normalization of `x`: outputs `z` and the shift count `t`.
pub fn emit_normalize_parallel(nx: usize) -> Result<MicroProgram> {
    if !(2..=127).contains(&nx) {
        return Err(PimError::InvalidArgument(format!("normalization needs 2<=Nx<=127, got {nx}")));
    }
    let mut b = Builder::partitioned(partitions_for(nx))?;
    let x = b.strided("x", nx, Role::Input)?;
    let z = b.strided("z", nx, Role::Output)?;
    let t = b.strided("t", ceil_log2(nx), Role::Output)?;
    b.lanes(0..nx).copy_to(x, z)?;
    normalize(&mut b, nx, z, t)?;
    b.finish()
}

/// Offsets of one strided float operand.
#[derive(Debug, Clone, Copy)]
pub struct FloatSignals {
    pub s: Off,
    pub e: Off,
    pub m: Off,
}

impl FloatSignals {
    fn declare(b: &mut Builder, name: &str, fmt: &FloatFormat, role: Role) -> Result<Self> {
        let m = b.strided(&format!("{name}m"), fmt.nm, role)?;
        let e = b.strided(&format!("{name}e"), fmt.ne, role)?;
        let s = b.strided(&format!("{name}s"), 1, role)?;
        Ok(FloatSignals { s, e, m })
    }
}

/// Partitions needed by the float emitters for `fmt`.
pub fn float_partitions(fmt: &FloatFormat) -> usize {
    partitions_for((fmt.nm + 6).max(fmt.ne + 1))
}

/// `v = c ? u >> 1 : u` over `0..w`, in place, keeping the dropped bit in
/// position 0. `u` has a meaningful cell in partition `w`; `c` is spread.
fn halve_if(b: &mut Builder, w: usize, u: Off, c: Off) -> Result<()> {
    let moved = b.signal()?;
    shift(b, 0..w + 1, -1, u, moved, Some(false))?;
    b.lanes([0]).or_to(moved, u, moved)?;
    let mut l = b.lanes(0..w);
    let nc = l.not(c)?;
    l.mux_to(c, nc, moved, u, u)?;
    l.release(nc);
    b.free_signal(moved);
    Ok(())
}

/// Round to nearest-even of the working mantissa `v` and pack fraction and
/// exponent into `out`.
fn round_pack(b: &mut Builder, fmt: &FloatFormat, v: Off, e_pre: Off, zero: Off, out: &FloatSignals) -> Result<()> {
    let (ne, nm) = (fmt.ne, fmt.nm);
    // gather sticky, round and guard next to the lowest kept bit
    let low = any(b, 0..2, v)?;
    let near = b.signal()?;
    transfer(b, 1, low, 3, near)?;
    let guard = b.signal()?;
    transfer(b, 2, v, 3, guard)?;
    {
        let mut l = b.lanes([3]);
        l.or_to(near, v, near)?;
        l.and_to(near, guard, near)?;
    }
    let frac = b.signal()?;
    let carry = add_signals(b, 3..3 + nm, v, zero, false, CarryIn::Signal(near), frac)?;
    shift(b, 0..3 + nm, -3, frac, out.m, None)?;
    let bump = b.signal()?;
    transfer(b, nm + 2, carry, 0, bump)?;
    let c2 = add_signals(b, 0..ne, e_pre, zero, false, CarryIn::Signal(bump), out.e)?;
    for sig in [low, near, guard, frac, carry, bump, c2] {
        b.free_signal(sig);
    }
    Ok(())
}

/// Copies a strided operand into a fresh signal that is zero elsewhere.
fn widen(b: &mut Builder, sig: Off, width: usize) -> Result<Off> {
    let k = b.k();
    let out = b.lanes(0..k).init(false)?;
    b.lanes(0..width).copy_to(sig, out)?;
    Ok(out)
}

/// Float addition on strided operands; see the serial version for the
/// data flow.
pub fn fadd(b: &mut Builder, fmt: &FloatFormat, x: &FloatSignals, y: &FloatSignals, out: &FloatSignals, signed: bool) -> Result<()> {
    let (ne, nm) = (fmt.ne, fmt.nm);
    let w = nm + 4;
    let k = b.k();
    let zero = b.lanes(0..k).init(false)?;

    let ex = widen(b, x.e, ne)?;
    let ey = widen(b, y.e, ne)?;
    let de = b.signal()?;
    let borrow = add_signals(b, 0..ne + 1, ex, ey, true, CarryIn::One, de)?;
    b.free_signal(borrow);
    let swap = spread(b, ne, de)?;
    let nswap = b.lanes(0..k).not(swap)?;
    let (emax, flipped, big, small) = {
        let mut l = b.lanes(0..ne);
        let emax = l.mux(swap, nswap, ey, ex)?;
        let nde = l.not(de)?;
        let flipped = l.xor_dual(de, nde, swap, nswap)?;
        l.release(nde);
        let mut l = b.lanes(0..nm);
        let big = l.mux(swap, nswap, y.m, x.m)?;
        let small = l.mux(swap, nswap, x.m, y.m)?;
        (emax, flipped, big, small)
    };
    let amount = b.signal()?;
    let c = add_signals(b, 0..ne, flipped, zero, false, CarryIn::Signal(swap), amount)?;
    let sa = if signed { Some(b.lanes([0]).mux(swap, nswap, y.s, x.s)?) } else { None };
    for sig in [c, ex, ey, de, flipped, swap, nswap] {
        b.free_signal(sig);
    }

    // [0, 0, 0, fraction, 1] with two clear positions above for the sum
    let place = |b: &mut Builder, m: Off| -> Result<Off> {
        let out = b.signal()?;
        shift(b, 0..w + 2, 3, m, out, Some(false))?;
        b.lanes([w - 1]).init_to(true, out);
        b.lanes([w, w + 1]).init_to(false, out);
        Ok(out)
    };
    let aligned = place(b, small)?;
    let wide = place(b, big)?;
    b.free_signal(small);
    b.free_signal(big);
    let sticky = varshift(b, w, aligned, amount, ne, Direction::Right, true)?.expect("sticky requested");
    b.lanes([0]).or_to(aligned, sticky, aligned)?;
    b.free_signal(sticky);
    b.free_signal(amount);

    let mag = b.signal()?;
    let (ds, neg) = if signed {
        let ds0 = b.lanes([0]).xor(x.s, y.s)?;
        let ds = spread(b, 0, ds0)?;
        b.free_signal(ds0);
        let addend = b.lanes(0..w + 2).xor(aligned, ds)?;
        let sum = b.signal()?;
        let c = add_signals(b, 0..w + 2, wide, addend, false, CarryIn::Signal(ds), sum)?;
        b.free_signal(c);
        b.free_signal(addend);
        let neg = spread(b, w + 1, sum)?;
        let flipped = b.lanes(0..w + 1).xor(sum, neg)?;
        let c = add_signals(b, 0..w + 1, flipped, zero, false, CarryIn::Signal(neg), mag)?;
        for sig in [c, flipped, sum] {
            b.free_signal(sig);
        }
        (Some(ds), Some(neg))
    } else {
        let c = add_signals(b, 0..w, wide, aligned, false, CarryIn::Zero, mag)?;
        transfer(b, w - 1, c, w, mag)?;
        b.free_signal(c);
        (None, None)
    };
    b.free_signal(aligned);
    b.free_signal(wide);

    let c1 = spread(b, w, mag)?;
    halve_if(b, w, mag, c1)?;
    let e_pre = b.signal()?;
    if signed {
        let t = b.lanes(0..k).init(false)?;
        normalize(b, w, mag, t)?;
        // e_max - t + c1 as e_max + (NOT t AND NOT c1) + 1; c1 implies t = 0
        let addend = b.lanes(0..ne).nor(t, c1)?;
        let raw = b.signal()?;
        let c = add_signals(b, 0..ne, emax, addend, false, CarryIn::One, raw)?;
        let nz = spread(b, w - 1, mag)?;
        {
            let mut l = b.lanes(0..ne);
            let zflag = l.not(nz)?;
            let nraw = l.not(raw)?;
            l.nor_to(nraw, zflag, e_pre);
            l.release(nraw);
            l.release(zflag);
        }
        {
            let mut l = b.lanes([0]);
            let sign = l.xor(sa.unwrap(), neg.unwrap())?;
            l.and_to(sign, nz, out.s)?;
            l.release(sign);
        }
        for sig in [t, addend, raw, c, nz, sa.unwrap(), ds.unwrap(), neg.unwrap()] {
            b.free_signal(sig);
        }
    } else {
        let c = add_signals(b, 0..ne, emax, zero, false, CarryIn::Signal(c1), e_pre)?;
        b.free_signal(c);
        b.lanes([0]).copy_to(x.s, out.s)?;
    }
    round_pack(b, fmt, mag, e_pre, zero, out)?;
    for sig in [c1, emax, e_pre, mag, zero] {
        b.free_signal(sig);
    }
    Ok(())
}

/// Float multiplication: strided mantissa product, exponent sum less the
/// bias, one conditional right shift, rounding.
pub fn fmul(b: &mut Builder, fmt: &FloatFormat, x: &FloatSignals, y: &FloatSignals, out: &FloatSignals) -> Result<()> {
    let (ne, nm) = (fmt.ne, fmt.nm);
    let w = nm + 4;
    let n = nm + 1;
    let k = b.k();
    let zero = b.lanes(0..k).init(false)?;
    b.lanes([0]).xor_to(x.s, y.s, out.s)?;

    let mx = widen(b, x.m, nm)?;
    let my = widen(b, y.m, nm)?;
    b.lanes([nm]).init_to(true, mx);
    b.lanes([nm]).init_to(true, my);
    let lo = widen(b, zero, 0)?;
    let hi = widen(b, zero, 0)?;
    mult_signals(b, n, mx, my, lo, hi, MultTail::PrefixAdder)?;

    // window of the product with the hidden one at the top when below 2;
    // lower bits fold into position 0
    let off = nm as isize - 3;
    if off >= 1 {
        let jam = any(b, 0..off as usize + 1, lo)?;
        transfer(b, off as usize, jam, off as usize, lo)?;
        b.free_signal(jam);
    }
    let u = b.signal()?;
    let upper = b.signal()?;
    shift(b, 0..k, -off, lo, u, Some(false))?;
    shift(b, 0..w + 1, 4, hi, upper, Some(false))?;
    b.lanes(4..w + 1).copy_to(upper, u)?;
    for sig in [mx, my, lo, hi, upper] {
        b.free_signal(sig);
    }
    let c = spread(b, w, u)?;
    halve_if(b, w, u, c)?;

    let sum = b.signal()?;
    let c0 = add_signals(b, 0..ne, x.e, y.e, false, CarryIn::Zero, sum)?;
    let minus_bias = constant(b, ((1u128 << ne) - fmt.bias as u128) % (1 << ne))?;
    let e_pre = b.signal()?;
    let c1 = add_signals(b, 0..ne, sum, minus_bias, false, CarryIn::Signal(c), e_pre)?;
    round_pack(b, fmt, u, e_pre, zero, out)?;
    for sig in [u, c, sum, c0, minus_bias, e_pre, c1, zero] {
        b.free_signal(sig);
    }
    Ok(())
}

/// Float division: `nm + 3` quotient bits from the strided divider with
/// the nonzero remainder as sticky bit.
pub fn fdiv(b: &mut Builder, fmt: &FloatFormat, x: &FloatSignals, y: &FloatSignals, out: &FloatSignals) -> Result<()> {
    let (ne, nm) = (fmt.ne, fmt.nm);
    let w = nm + 4;
    let d_len = nm + 3;
    let k = b.k();
    let zero = b.lanes(0..k).init(false)?;
    b.lanes([0]).xor_to(x.s, y.s, out.s)?;

    // dividend: hidden-bit mantissa of x shifted up by nm + 2 places
    let low = widen(b, zero, 0)?;
    transfer(b, 0, x.m, nm + 2, low)?;
    let high = widen(b, zero, 0)?;
    shift(b, 0..nm, -1, x.m, high, None)?;
    b.lanes([nm - 1]).init_to(true, high);
    let divisor = widen(b, y.m, nm)?;
    b.lanes([nm]).init_to(true, divisor);
    let q = b.signal()?;
    let r = b.signal()?;
    div_signals(b, d_len, low, high, divisor, q, r)?;
    let rem = any(b, 0..d_len, r)?;

    // [rem, q], moved up one place when the quotient is below 1
    let u = b.signal()?;
    shift(b, 0..w, 1, q, u, None)?;
    transfer(b, d_len - 1, rem, 0, u)?;
    let c = spread(b, w - 1, u)?;
    let up = b.signal()?;
    shift(b, 0..w, 1, u, up, Some(false))?;
    {
        let mut l = b.lanes(0..w);
        let nc = l.not(c)?;
        l.mux_to(c, nc, u, up, u)?;
        l.release(nc);
    }

    let diff = b.signal()?;
    let c0 = add_signals(b, 0..ne, x.e, y.e, true, CarryIn::Signal(c), diff)?;
    let bias = constant(b, fmt.bias as u128)?;
    let e_pre = b.signal()?;
    let c1 = add_signals(b, 0..ne, diff, bias, false, CarryIn::Zero, e_pre)?;
    round_pack(b, fmt, u, e_pre, zero, out)?;
    for sig in [low, high, divisor, q, r, rem, u, c, up, diff, c0, bias, e_pre, c1, zero] {
        b.free_signal(sig);
    }
    Ok(())
}

/// Strided float operation with operands `x`, `y` and result `z`, each as
/// `<name>m`, `<name>e`, `<name>s`.
pub fn emit_float_parallel(op: FloatOp, fmt: &FloatFormat) -> Result<MicroProgram> {
    let mut b = Builder::partitioned(float_partitions(fmt))?;
    let x = FloatSignals::declare(&mut b, "x", fmt, Role::Input)?;
    let y = FloatSignals::declare(&mut b, "y", fmt, Role::Input)?;
    let z = FloatSignals::declare(&mut b, "z", fmt, Role::Output)?;
    match op {
        FloatOp::Add => fadd(&mut b, fmt, &x, &y, &z, true)?,
        FloatOp::Sub => {
            let ns = b.lanes([0]).not(y.s)?;
            fadd(&mut b, fmt, &x, &FloatSignals { s: ns, ..y }, &z, true)?;
            b.free_signal(ns);
        }
        FloatOp::Mul => fmul(&mut b, fmt, &x, &y, &z)?,
        FloatOp::Div => fdiv(&mut b, fmt, &x, &y, &z)?,
    }
    b.finish()
}

/// Addition of two same-sign floats on strided operands.
pub fn emit_fadd_unsigned_parallel(fmt: &FloatFormat) -> Result<MicroProgram> {
    let mut b = Builder::partitioned(float_partitions(fmt))?;
    let x = FloatSignals::declare(&mut b, "x", fmt, Role::Input)?;
    let y = FloatSignals::declare(&mut b, "y", fmt, Role::Input)?;
    let z = FloatSignals::declare(&mut b, "z", fmt, Role::Output)?;
    fadd(&mut b, fmt, &x, &y, &z, false)?;
    b.finish()
}

pub fn emit_fadd_parallel(fmt: &FloatFormat) -> Result<MicroProgram> {
    emit_float_parallel(FloatOp::Add, fmt)
}

pub fn emit_fsub_parallel(fmt: &FloatFormat) -> Result<MicroProgram> {
    emit_float_parallel(FloatOp::Sub, fmt)
}

pub fn emit_fmul_parallel(fmt: &FloatFormat) -> Result<MicroProgram> {
    emit_float_parallel(FloatOp::Mul, fmt)
}

pub fn emit_fdiv_parallel(fmt: &FloatFormat) -> Result<MicroProgram> {
    emit_float_parallel(FloatOp::Div, fmt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::serial::float::{emit_float_serial, emit_fadd_unsigned_serial};
    use crate::validate_program;
    use rand::{Rng, SeedableRng};

    fn valid(p: MicroProgram) -> MicroProgram {
        let report = validate_program(&p);
        assert!(report.is_ok(), "{report:?}");
        p
    }

    fn run(p: &MicroProgram, inputs: &[(&str, u128)]) -> Vec<u128> {
        p.evaluate(inputs).unwrap().into_iter().map(|(_, v)| v).collect()
    }

    #[test]
    fn varshift_exhaustive() {
        for (nx, nt) in [(8usize, 3usize), (8, 4), (5, 3)] {
            for dir in [Direction::Left, Direction::Right] {
                let p = valid(emit_varshift_parallel(nx, nt, dir).unwrap());
                for x in 0..1u128 << nx {
                    for t in 0..1u128 << nt {
                        let want = match dir {
                            Direction::Right => x >> t,
                            Direction::Left => (x << t) & ((1 << nx) - 1),
                        };
                        assert_eq!(run(&p, &[("x", x), ("t", t)]), vec![want], "{dir:?} {nx} {x} {t}");
                    }
                }
            }
        }
    }

    #[test]
    fn normalize_exhaustive() {
        for w in [2usize, 5, 8] {
            let p = valid(emit_normalize_parallel(w).unwrap());
            for x in 1u128..1 << w {
                let t = x.leading_zeros() as usize - (128 - w);
                assert_eq!(run(&p, &[("x", x)]), vec![(x << t) & ((1 << w) - 1), t as u128]);
            }
        }
        let p = emit_normalize_parallel(8).unwrap();
        assert_eq!(run(&p, &[("x", 0b0000_0110)]), vec![0b1100_0000, 5]);
    }

    fn inputs(fmt: &FloatFormat, a: u128, b: u128) -> Vec<(&'static str, u128)> {
        let (s1, e1, m1) = fmt.unpack(a);
        let (s2, e2, m2) = fmt.unpack(b);
        vec![("xm", m1), ("xe", e1), ("xs", s1 as u128), ("ym", m2), ("ye", e2), ("ys", s2 as u128)]
    }

    #[test]
    fn agrees_with_serial() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for fmt in [FloatFormat::new(4, 3).unwrap(), FloatFormat::new(5, 2).unwrap(), FloatFormat::new(3, 1).unwrap()] {
            for (op, unsigned) in [FloatOp::Add, FloatOp::Sub, FloatOp::Mul, FloatOp::Div].into_iter().map(|o| (o, false)).chain([(FloatOp::Add, true)]) {
                let par = valid(if unsigned { emit_fadd_unsigned_parallel(&fmt) } else { emit_float_parallel(op, &fmt) }.unwrap());
                let ser = if unsigned { emit_fadd_unsigned_serial(&fmt) } else { emit_float_serial(op, &fmt) }.unwrap();
                for _ in 0..300 {
                    let a = fmt.pack(rng.gen(), rng.gen_range(1..fmt.max_exponent()), rng.gen_range(0..1 << fmt.nm));
                    let mut b = fmt.pack(rng.gen(), rng.gen_range(1..fmt.max_exponent()), rng.gen_range(0..1 << fmt.nm));
                    if unsigned {
                        b = b & !(1 << (fmt.ne + fmt.nm)) | a & (1 << (fmt.ne + fmt.nm));
                    }
                    let io = inputs(&fmt, a, b);
                    assert_eq!(run(&par, &io), run(&ser, &io), "{fmt} {op:?} {a:b} {b:b}");
                }
            }
        }
    }

    #[test]
    fn single_precision_examples() {
        let fmt = FloatFormat::SINGLE;
        let cases = [(FloatOp::Add, 1.5f32, 2.25f32), (FloatOp::Sub, 10.013, 10.0), (FloatOp::Mul, 3.0, 1.0 / 3.0), (FloatOp::Div, 1.0, 3.0)];
        for (op, a, b) in cases {
            let p = valid(emit_float_parallel(op, &fmt).unwrap());
            let want = match op {
                FloatOp::Add => a + b,
                FloatOp::Sub => a - b,
                FloatOp::Mul => a * b,
                FloatOp::Div => a / b,
            };
            let out = run(&p, &inputs(&fmt, u128::from(a.to_bits()), u128::from(b.to_bits())));
            assert_eq!(fmt.pack(out[2] == 1, out[1], out[0]) as u32, want.to_bits(), "{op:?}");
        }
    }
}
