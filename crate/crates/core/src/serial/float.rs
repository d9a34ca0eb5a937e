//! Bit-serial floating point: variable shifts, normalization, and the four
//! arithmetic operations with round-to-nearest-even.
//!
//! Mantissas are processed in a working width of `nm + 4` bits: from the top,
//! the hidden one, `nm` fraction bits, then guard, round and a sticky bit at
//! position 0 into which every discarded bit is OR-ed.

use crate::error::{PimError, Result};
use crate::float::FloatFormat;
use crate::microcode::{Builder, Gates, Macros};
use crate::model::Col;
use crate::program::MicroProgram;
use crate::serial::fixed::{divide, mult, ripple, subtract, Bit, DEFAULT_KARATSUBA_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

pub(crate) fn ceil_log2(n: usize) -> usize {
    (usize::BITS - n.saturating_sub(1).leading_zeros()) as usize
}

/// NOR of all `cols`: an OR chain whose last link is left complemented.
/// `2n - 3` gates for `n >= 2`, one NOT for `n == 1`.
pub fn nor_reduce(b: &mut Builder, cols: &[Col]) -> Result<Col> {
    let (&last, rest) = cols.split_last().expect("nor_reduce of nothing");
    if rest.is_empty() {
        return b.not(last);
    }
    let mut acc = rest[0];
    let mut owned = false;
    for &c in &rest[1..] {
        let next = b.or(acc, c)?;
        if owned {
            b.free(acc);
        }
        acc = next;
        owned = true;
    }
    let out = b.nor(acc, last)?;
    if owned {
        b.free(acc);
    }
    Ok(out)
}

/// OR of all `cols` into a fresh cell.
pub fn or_reduce(b: &mut Builder, cols: &[Col]) -> Result<Col> {
    let n = nor_reduce(b, cols)?;
    let out = b.not(n)?;
    b.free(n);
    Ok(out)
}

/// `z = x >> t` as a logarithmic shifter: stage `j` moves every bit down by
/// `2^j` through a multiplexer when `t_j` is set and clears the vacated top.
/// Amount bits whose stage would clear the whole word are OR-ed and applied
/// as one clearing stage.
///
/// With `sticky`, returns a fresh cell holding the OR of every bit shifted
/// out; each stage adds `t_j AND OR(low 2^j bits)` before it shifts.
pub fn shift_right(b: &mut Builder, x: &[Col], t: &[Col], z: &[Col], sticky: bool) -> Result<Option<Col>> {
    let w = x.len();
    let mut acc: Option<Col> = None;
    let mut src = x.to_vec();
    let accumulate = |b: &mut Builder, term: Col, acc: &mut Option<Col>| -> Result<()> {
        match *acc {
            None => *acc = Some(term),
            Some(a) => {
                b.or_to(a, term, a)?;
                b.free(term);
            }
        }
        Ok(())
    };
    let regular = (0..t.len()).take_while(|&j| (1usize << j) < w).count();
    for (j, &tj) in t.iter().enumerate().take(regular) {
        let s = 1 << j;
        let nt = b.not(tj)?;
        if sticky {
            let nwin = nor_reduce(b, &src[..s])?;
            let term = b.nor(nt, nwin)?;
            b.free(nwin);
            accumulate(b, term, &mut acc)?;
        }
        for i in 0..w - s {
            b.mux_to(tj, nt, src[i + s], src[i], z[i])?;
        }
        for i in w - s..w {
            let n = b.not(src[i])?;
            b.nor_to(tj, n, z[i]);
            b.free(n);
        }
        b.free(nt);
        src = z.to_vec();
    }
    if t.len() > regular {
        let nbig = nor_reduce(b, &t[regular..])?;
        if sticky {
            let nall = nor_reduce(b, &src)?;
            let term = b.nor(nbig, nall)?;
            b.free(nall);
            accumulate(b, term, &mut acc)?;
        }
        let big = b.not(nbig)?;
        for i in 0..w {
            let n = b.not(src[i])?;
            b.nor_to(big, n, z[i]);
            b.free(n);
        }
        b.free(big);
        b.free(nbig);
    } else if regular == 0 {
        for i in 0..w {
            b.copy_to(x[i], z[i])?;
        }
    }
    Ok(acc)
}

/// Shifts `x` left until its top bit is set, writing the result to `z` and
/// the shift amount to `t` (`ceil(log2(width))` bits).
///
/// Binary search from the largest power of two down: stage `j` sets `t_j`
/// when the top `2^j` bits are all zero and then shifts by `2^j`.
pub fn normalize(b: &mut Builder, x: &[Col], z: &[Col], t: &[Col]) -> Result<()> {
    let w = x.len();
    debug_assert!(w >= 2 && t.len() == ceil_log2(w));
    let mut src = x.to_vec();
    for j in (0..t.len()).rev() {
        let s = 1 << j;
        let tj = t[j];
        if s == 1 {
            // top bit of the result is OR(top two bits); its complement is
            // computed first because the top bit doubles as NOT t_0
            b.not_to(src[w - 1], tj);
            let top = b.nor(src[w - 1], src[w - 2])?;
            let nt = src[w - 1];
            for i in (1..w - 1).rev() {
                b.mux_to(tj, nt, src[i - 1], src[i], z[i])?;
            }
            let n = b.not(src[0])?;
            b.nor_to(tj, n, z[0]);
            b.free(n);
            b.not_to(top, z[w - 1]);
            b.free(top);
        } else {
            let mut acc = src[w - 1];
            let mut owned = false;
            for k in 2..s {
                let next = b.or(acc, src[w - k])?;
                if owned {
                    b.free(acc);
                }
                acc = next;
                owned = true;
            }
            b.nor_to(acc, src[w - s], tj);
            if owned {
                b.free(acc);
            }
            let nt = b.not(tj)?;
            for i in (s..w).rev() {
                b.mux_to(tj, nt, src[i - s], src[i], z[i])?;
            }
            for i in 0..s {
                let n = b.not(src[i])?;
                b.nor_to(tj, n, z[i]);
                b.free(n);
            }
            b.free(nt);
        }
        src = z.to_vec();
    }
    Ok(())
}

/// Variable shift of an `nx`-bit `x` by the `nt`-bit amount `t` into `z`.
pub fn emit_varshift_serial(nx: usize, nt: usize, dir: Direction) -> Result<MicroProgram> {
    if nx == 0 || nt == 0 || nx > 127 || nt > 7 {
        return Err(PimError::InvalidArgument(format!("variable shift needs 1<=Nx<=127 and 1<=Nt<=7, got {nx},{nt}")));
    }
    let mut b = Builder::serial();
    let x = b.input("x", nx)?;
    let t = b.input("t", nt)?;
    let z = b.output("z", nx)?;
    match dir {
        Direction::Right => {
            shift_right(&mut b, &x, &t, &z, false)?;
        }
        Direction::Left => {
            let xr: Vec<Col> = x.iter().rev().copied().collect();
            let zr: Vec<Col> = z.iter().rev().copied().collect();
            shift_right(&mut b, &xr, &t, &zr, false)?;
        }
    }
    b.finish()
}

/// Normalization of an `nx`-bit `x`: outputs `z` and the shift count `t`.
pub fn emit_normalize_serial(nx: usize) -> Result<MicroProgram> {
    if !(2..=127).contains(&nx) {
        return Err(PimError::InvalidArgument(format!("normalization needs 2<=Nx<=127, got {nx}")));
    }
    let mut b = Builder::serial();
    let x = b.input("x", nx)?;
    let z = b.output("z", nx)?;
    let t = b.output("t", ceil_log2(nx))?;
    normalize(&mut b, &x, &z, &t)?;
    b.finish()
}

/// Columns of one float operand.
#[derive(Debug, Clone)]
pub struct FloatCols {
    pub s: Col,
    pub e: Vec<Col>,
    pub m: Vec<Col>,
}

impl FloatCols {
    /// Declares operands `<name>m`, `<name>e`, `<name>s`.
    pub fn input(b: &mut Builder, name: &str, fmt: &FloatFormat) -> Result<Self> {
        let m = b.input(&format!("{name}m"), fmt.nm)?;
        let e = b.input(&format!("{name}e"), fmt.ne)?;
        let s = b.input(&format!("{name}s"), 1)?[0];
        Ok(FloatCols { s, e, m })
    }

    pub fn output(b: &mut Builder, name: &str, fmt: &FloatFormat) -> Result<Self> {
        let m = b.output(&format!("{name}m"), fmt.nm)?;
        let e = b.output(&format!("{name}e"), fmt.ne)?;
        let s = b.output(&format!("{name}s"), 1)?[0];
        Ok(FloatCols { s, e, m })
    }
}

/// `c ? u >> 1 : u`, keeping the dropped bit in position 0.
/// `u` is one bit wider than the result.
fn right_one_jam(b: &mut Builder, u: &[Col], c: Col) -> Result<Vec<Col>> {
    let w = u.len() - 1;
    let nc = b.not(c)?;
    let v = b.alloc_n(w)?;
    let j = b.or(u[0], u[1])?;
    b.mux_to(c, nc, j, u[0], v[0])?;
    b.free(j);
    for i in 1..w {
        b.mux_to(c, nc, u[i + 1], u[i], v[i])?;
    }
    b.free(nc);
    Ok(v)
}

/// Rounds the normalized working mantissa `v` to nearest-even and writes the
/// fraction and exponent of `out`. A carry out of the fraction bumps `e_pre`.
fn round_pack(b: &mut Builder, v: &[Col], e_pre: &[Col], out: &FloatCols) -> Result<()> {
    let nm = out.m.len();
    let low = b.nor(v[0], v[1])?;
    let rest = b.not(low)?;
    b.free(low);
    let none = b.nor(rest, v[3])?;
    b.free(rest);
    let ng = b.not(v[2])?;
    let up = b.nor(ng, none)?;
    b.free(ng);
    b.free(none);
    let c2 = b.alloc()?;
    ripple(b, &v[3..3 + nm], &[], Bit::Col(up), &out.m, Some(c2))?;
    b.free(up);
    ripple(b, e_pre, &[], Bit::Col(c2), &out.e, None)?;
    b.free(c2);
    Ok(())
}

fn cols(v: &[Col]) -> Vec<Bit> {
    v.iter().map(|&c| Bit::Col(c)).collect()
}

fn const_bits(value: u128, width: usize) -> Vec<Bit> {
    (0..width).map(|i| if value >> i & 1 == 1 { Bit::One } else { Bit::Zero }).collect()
}

/// Float addition. `signed` handles operands of either sign, including
/// cancellation to zero; otherwise both operands must share a sign.
pub fn fadd(b: &mut Builder, fmt: &FloatFormat, x: &FloatCols, y: &FloatCols, out: &FloatCols, signed: bool) -> Result<()> {
    let (ne, nm) = (fmt.ne, fmt.nm);
    let w = nm + 4;
    let zero = b.constant(false)?;
    let one = b.constant(true)?;

    // exponent difference; its sign says whether y has the larger exponent
    let de = b.alloc_n(ne + 1)?;
    subtract(b, &x.e, &y.e, &de)?;
    let swap = de[ne];
    let nswap = b.not(swap)?;
    let emax = b.alloc_n(ne)?;
    for i in 0..ne {
        b.mux_to(swap, nswap, y.e[i], x.e[i], emax[i])?;
    }
    let flipped = b.alloc_n(ne)?;
    for i in 0..ne {
        let n = b.not(de[i])?;
        b.xor_dual_to(de[i], n, swap, nswap, flipped[i])?;
        b.free(n);
    }
    let shift = b.alloc_n(ne)?;
    ripple(b, &flipped, &[], Bit::Col(swap), &shift, None)?;
    b.free_all(&flipped);

    // larger-exponent mantissa stays put, the other one is aligned to it
    let big = b.alloc_n(nm)?;
    let small = b.alloc_n(nm)?;
    for i in 0..nm {
        b.mux_to(swap, nswap, y.m[i], x.m[i], big[i])?;
        b.mux_to(swap, nswap, x.m[i], y.m[i], small[i])?;
    }
    let sa = if signed {
        let s = b.alloc()?;
        b.mux_to(swap, nswap, y.s, x.s, s)?;
        Some(s)
    } else {
        None
    };
    b.free(nswap);
    b.free_all(&de);
    let padded: Vec<Col> = [zero, zero, zero].into_iter().chain(small.iter().copied()).chain([one]).collect();
    let aligned = b.alloc_n(w)?;
    let sticky = shift_right(b, &padded, &shift, &aligned, true)?.expect("sticky requested");
    b.or_to(aligned[0], sticky, aligned[0])?;
    b.free(sticky);
    b.free_all(&small);
    b.free_all(&shift);
    let wide: Vec<Col> = [zero, zero, zero].into_iter().chain(big.iter().copied()).chain([one]).collect();

    let (mag, ds, neg) = if signed {
        // effective subtraction adds the complement plus one
        let ds = b.xor(x.s, y.s)?;
        let nds = b.not(ds)?;
        let mut addend = Vec::with_capacity(w + 2);
        for &a in &aligned {
            let n = b.not(a)?;
            addend.push(Bit::Col(b.xor_dual(a, n, ds, nds)?));
            b.free(n);
        }
        addend.extend([Bit::Col(ds), Bit::Col(ds)]);
        let sum = b.alloc_n(w + 2)?;
        ripple(b, &wide, &addend, Bit::Col(ds), &sum, None)?;
        for bit in &addend[..w] {
            if let Bit::Col(c) = bit {
                b.free(*c);
            }
        }
        b.free(nds);
        let neg = sum[w + 1];
        let nneg = b.not(neg)?;
        let flip = b.alloc_n(w + 1)?;
        for i in 0..=w {
            let n = b.not(sum[i])?;
            b.xor_dual_to(sum[i], n, neg, nneg, flip[i])?;
            b.free(n);
        }
        b.free(nneg);
        let mag = b.alloc_n(w + 1)?;
        ripple(b, &flip, &[], Bit::Col(neg), &mag, None)?;
        b.free_all(&flip);
        b.free_all(&sum[..=w]);
        (mag, Some(ds), Some(neg))
    } else {
        let mag = b.alloc_n(w + 1)?;
        ripple(b, &wide, &cols(&aligned), Bit::Zero, &mag[..w], Some(mag[w]))?;
        (mag, None, None)
    };
    b.free_all(&aligned);
    b.free_all(&big);

    let c1 = mag[w];
    let v = right_one_jam(b, &mag, c1)?;
    b.free_all(&mag[..w]);

    let e_pre = b.alloc_n(ne)?;
    let v = if signed {
        let l = ceil_log2(w);
        let t = b.alloc_n(l)?;
        let vn = b.alloc_n(w)?;
        normalize(b, &v, &vn, &t)?;
        b.free_all(&v);
        // e_max - t + c1 as e_max + (NOT t AND NOT c1) + 1; c1 implies t = 0
        let mut addend = Vec::with_capacity(ne);
        for i in 0..ne {
            addend.push(Bit::Col(if i < l { b.nor(t[i], c1)? } else { b.not(c1)? }));
        }
        let raw = b.alloc_n(ne)?;
        ripple(b, &emax, &addend, Bit::One, &raw, None)?;
        for bit in addend {
            if let Bit::Col(c) = bit {
                b.free(c);
            }
        }
        b.free_all(&t);
        // a zero result has no leading one; force the all-zero encoding
        let nz = vn[w - 1];
        let zflag = b.not(nz)?;
        for i in 0..ne {
            let n = b.not(raw[i])?;
            b.nor_to(n, zflag, e_pre[i]);
            b.free(n);
        }
        b.free_all(&raw);
        let sign = b.xor(sa.unwrap(), neg.unwrap())?;
        let n = b.not(sign)?;
        b.nor_to(n, zflag, out.s);
        b.free(n);
        b.free(sign);
        b.free(zflag);
        b.free(sa.unwrap());
        b.free(ds.unwrap());
        b.free(neg.unwrap());
        vn
    } else {
        ripple(b, &emax, &[], Bit::Col(c1), &e_pre, None)?;
        b.copy_to(x.s, out.s)?;
        v
    };
    b.free(c1);
    b.free_all(&emax);
    round_pack(b, &v, &e_pre, out)?;
    b.free_all(&v);
    b.free_all(&e_pre);
    Ok(())
}

/// Float multiplication: mantissa product through [`mult`], exponent
/// `e1 + e2 - bias`, one conditional right shift, rounding.
pub fn fmul(b: &mut Builder, fmt: &FloatFormat, x: &FloatCols, y: &FloatCols, out: &FloatCols, threshold: usize) -> Result<()> {
    let (ne, nm) = (fmt.ne, fmt.nm);
    let w = nm + 4;
    let zero = b.constant(false)?;
    let one = b.constant(true)?;
    b.xor_to(x.s, y.s, out.s)?;

    let mx: Vec<Col> = x.m.iter().copied().chain([one]).collect();
    let my: Vec<Col> = y.m.iter().copied().chain([one]).collect();
    let p = b.alloc_n(2 * nm + 2)?;
    mult(b, &mx, &my, &p, threshold)?;
    let c = p[2 * nm + 1];

    let sum = b.alloc_n(ne)?;
    ripple(b, &x.e, &cols(&y.e), Bit::Zero, &sum, None)?;
    let e_pre = b.alloc_n(ne)?;
    let minus_bias = (fmt.bias as i128).rem_euclid(1 << ne) as u128;
    let minus_bias = ((1u128 << ne) - minus_bias) % (1 << ne);
    ripple(b, &sum, &const_bits(minus_bias, ne), Bit::Col(c), &e_pre, None)?;
    b.free_all(&sum);

    // window with the hidden one at the top when the product is below 2;
    // everything under it is folded into the sticky position
    let off = nm as isize - 3;
    let mut u = Vec::with_capacity(w + 1);
    let mut jam = None;
    if off >= 1 {
        let j = or_reduce(b, &p[..=off as usize])?;
        jam = Some(j);
        u.push(j);
    } else {
        u.push(if off == 0 { p[0] } else { zero });
    }
    for i in 1..=w {
        let idx = i as isize + off;
        u.push(if idx >= 0 { p[idx as usize] } else { zero });
    }
    let v = right_one_jam(b, &u, c)?;
    if let Some(j) = jam {
        b.free(j);
    }
    b.free_all(&p);
    round_pack(b, &v, &e_pre, out)?;
    b.free_all(&v);
    b.free_all(&e_pre);
    Ok(())
}

/// Float division: `nm + 3` quotient bits from [`divide`], exponent
/// `e1 - e2 + bias - 1 + c` where `c` is set when the quotient is at least 1,
/// a nonzero remainder feeding the sticky bit.
pub fn fdiv(b: &mut Builder, fmt: &FloatFormat, x: &FloatCols, y: &FloatCols, out: &FloatCols) -> Result<()> {
    let (ne, nm) = (fmt.ne, fmt.nm);
    let zero = b.constant(false)?;
    let one = b.constant(true)?;
    b.xor_to(x.s, y.s, out.s)?;

    let d_len = nm + 3;
    let divisor: Vec<Col> = y.m.iter().copied().chain([one, zero, zero]).collect();
    let dividend: Vec<Col> = std::iter::repeat_n(zero, nm + 2)
        .chain(x.m.iter().copied())
        .chain([one])
        .chain(std::iter::repeat_n(zero, 3))
        .collect();
    debug_assert_eq!(dividend.len(), 2 * d_len);
    let q = b.alloc_n(d_len)?;
    let r = b.alloc_n(d_len)?;
    divide(b, &dividend, &divisor, &q, &r)?;
    let nrem = nor_reduce(b, &r)?;
    b.free_all(&r);
    let rem = b.not(nrem)?;
    let c = q[d_len - 1];
    let nc = b.not(c)?;

    // quotient below 1 moves up one place
    let w = nm + 4;
    let u: Vec<Col> = std::iter::once(rem).chain(q.iter().copied()).collect();
    let v = b.alloc_n(w)?;
    b.nor_to(nc, nrem, v[0]);
    for i in 1..w {
        b.mux_to(c, nc, u[i], u[i - 1], v[i])?;
    }
    b.free(nc);
    b.free(nrem);
    b.free(rem);

    let diff = b.alloc_n(ne)?;
    let ny: Vec<Bit> = y.e.iter().map(|&c| Bit::Not(c)).collect();
    ripple(b, &x.e, &ny, Bit::Col(c), &diff, None)?;
    b.free_all(&q);
    let e_pre = b.alloc_n(ne)?;
    let bias = (fmt.bias as i128).rem_euclid(1 << ne) as u128;
    ripple(b, &diff, &const_bits(bias, ne), Bit::Zero, &e_pre, None)?;
    b.free_all(&diff);
    round_pack(b, &v, &e_pre, out)?;
    b.free_all(&v);
    b.free_all(&e_pre);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloatOp {
    Add,
    Sub,
    Mul,
    Div,
}

fn emit(fmt: &FloatFormat, body: impl FnOnce(&mut Builder, &FloatCols, &FloatCols, &FloatCols) -> Result<()>) -> Result<MicroProgram> {
    let mut b = Builder::serial();
    let x = FloatCols::input(&mut b, "x", fmt)?;
    let y = FloatCols::input(&mut b, "y", fmt)?;
    let z = FloatCols::output(&mut b, "z", fmt)?;
    body(&mut b, &x, &y, &z)?;
    b.finish()
}

/// Addition of two floats of the same sign.
pub fn emit_fadd_unsigned_serial(fmt: &FloatFormat) -> Result<MicroProgram> {
    emit(fmt, |b, x, y, z| fadd(b, fmt, x, y, z, false))
}

pub fn emit_fadd_signed_serial(fmt: &FloatFormat) -> Result<MicroProgram> {
    emit(fmt, |b, x, y, z| fadd(b, fmt, x, y, z, true))
}

/// `x - y` as `x + (-y)`.
pub fn emit_fsub_signed_serial(fmt: &FloatFormat) -> Result<MicroProgram> {
    emit(fmt, |b, x, y, z| {
        let ns = b.not(y.s)?;
        let neg = FloatCols { s: ns, e: y.e.clone(), m: y.m.clone() };
        fadd(b, fmt, x, &neg, z, true)?;
        b.free(ns);
        Ok(())
    })
}

pub fn emit_fmul_serial(fmt: &FloatFormat) -> Result<MicroProgram> {
    emit(fmt, |b, x, y, z| fmul(b, fmt, x, y, z, DEFAULT_KARATSUBA_THRESHOLD))
}

pub fn emit_fdiv_serial(fmt: &FloatFormat) -> Result<MicroProgram> {
    emit(fmt, |b, x, y, z| fdiv(b, fmt, x, y, z))
}

pub fn emit_float_serial(op: FloatOp, fmt: &FloatFormat) -> Result<MicroProgram> {
    match op {
        FloatOp::Add => emit_fadd_signed_serial(fmt),
        FloatOp::Sub => emit_fsub_signed_serial(fmt),
        FloatOp::Mul => emit_fmul_serial(fmt),
        FloatOp::Div => emit_fdiv_serial(fmt),
    }
}
