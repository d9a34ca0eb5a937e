//! Bit-serial fixed-point arithmetic on contiguous operands in one partition.

use crate::error::{PimError, Result};
use crate::microcode::{Builder, Gates, Macros};
use crate::model::Col;
use crate::program::MicroProgram;

/// Operand size at or below which multiplication falls back to shift-and-add.
pub const DEFAULT_KARATSUBA_THRESHOLD: usize = 20;

/// One addend bit of [`ripple`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bit {
    Zero,
    One,
    Col(Col),
    /// Complement of a column, materialized with one NOT when used.
    Not(Col),
}

/// `z = a + v + carry_in` over `z.len()` bits, with `a` and `v` zero-extended.
///
/// `z` may alias `a` for in-place accumulation. The carry out of the top bit
/// goes to `cout` when given and is dropped otherwise.
pub fn ripple(b: &mut Builder, a: &[Col], v: &[Bit], carry_in: Bit, z: &[Col], cout: Option<Col>) -> Result<()> {
    let mut carry = carry_in;
    let mut owned: Option<Col> = None;
    for (i, &zi) in z.iter().enumerate() {
        let last = i + 1 == z.len();
        let mut temps = Vec::new();
        let mut ops = Vec::with_capacity(3);
        if let Some(&ai) = a.get(i) {
            ops.push(ai);
        }
        for bit in [v.get(i).copied().unwrap_or(Bit::Zero), carry] {
            match bit {
                Bit::Zero => {}
                Bit::One => ops.push(b.constant(true)?),
                Bit::Col(c) => ops.push(c),
                Bit::Not(c) => {
                    let t = b.not(c)?;
                    temps.push(t);
                    ops.push(t);
                }
            }
        }
        let carry_target = match (last, cout) {
            (true, Some(c)) => Some(c),
            (true, None) => None,
            (false, _) => Some(match owned {
                Some(c) => c,
                None => {
                    let c = b.alloc()?;
                    owned = Some(c);
                    c
                }
            }),
        };
        match (ops.len(), carry_target) {
            (3, Some(c)) => b.fa_to(ops[0], ops[1], ops[2], zi, c)?,
            (3, None) => b.xor3_to(ops[0], ops[1], ops[2], zi)?,
            (2, Some(c)) => b.ha_to(ops[0], ops[1], zi, c)?,
            (2, None) => b.xor_to(ops[0], ops[1], zi)?,
            (1, target) => {
                if ops[0] != zi {
                    b.copy_to(ops[0], zi)?;
                }
                if let Some(c) = target {
                    if last {
                        b.init_to(false, c);
                    }
                }
            }
            (_, target) => {
                b.init_to(false, zi);
                if let (true, Some(c)) = (last, target) {
                    b.init_to(false, c);
                }
            }
        }
        carry = if ops.len() >= 2 { carry_target.map_or(Bit::Zero, Bit::Col) } else { Bit::Zero };
        for t in temps {
            b.free(t);
        }
    }
    if let Some(c) = owned {
        b.free(c);
    }
    Ok(())
}

/// `z = a - v` modulo `2^z.len()`, as `a + !v + 1`.
pub fn subtract(b: &mut Builder, a: &[Col], v: &[Col], z: &[Col]) -> Result<()> {
    let nv: Vec<Bit> = (0..z.len()).map(|i| v.get(i).map_or(Bit::One, |&c| Bit::Not(c))).collect();
    ripple(b, a, &nv, Bit::One, z, None)
}

fn check_width(n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        return Err(PimError::InvalidArgument(format!("bit width {n} outside 1..={max}")));
    }
    Ok(())
}

/// `z = x + y` with `z` one bit wider than the inputs: an initialized carry
/// cell followed by one full adder per bit.
pub fn emit_add_serial(n: usize) -> Result<MicroProgram> {
    check_width(n, 127)?;
    let mut b = Builder::serial();
    let x = b.input("x", n)?;
    let y = b.input("y", n)?;
    let z = b.output("z", n + 1)?;
    let c = b.alloc()?;
    b.init_to(false, c);
    let y: Vec<Bit> = y.into_iter().map(Bit::Col).collect();
    ripple(&mut b, &x, &y, Bit::Col(c), &z[..n], Some(z[n]))?;
    b.free(c);
    b.finish()
}

/// `z = x - y` modulo `2^(n+1)`: complemented `y`, carry-in 1, and the top
/// bit taken as the complement of the carry out.
pub fn emit_sub_serial(n: usize) -> Result<MicroProgram> {
    check_width(n, 127)?;
    let mut b = Builder::serial();
    let x = b.input("x", n)?;
    let y = b.input("y", n)?;
    let z = b.output("z", n + 1)?;
    let cout = b.alloc()?;
    let ny: Vec<Bit> = y.into_iter().map(Bit::Not).collect();
    ripple(&mut b, &x, &ny, Bit::One, &z[..n], Some(cout))?;
    b.not_to(cout, z[n]);
    b.free(cout);
    b.finish()
}

/// Shift-and-add product of equal-width `x` and `y` into `z` (twice as wide).
fn mult_base(b: &mut Builder, x: &[Col], y: &[Col], z: &[Col]) -> Result<()> {
    let n = x.len();
    let nx: Vec<Col> = x.iter().map(|&c| b.not(c)).collect::<Result<_>>()?;
    let ny0 = b.not(y[0])?;
    for j in 0..n {
        b.nor_to(nx[j], ny0, z[j]);
    }
    b.free(ny0);
    b.init_to(false, z[n]);
    for i in 1..n {
        let nyi = b.not(y[i])?;
        let mut carry: Option<Col> = None;
        for j in 0..n {
            let pp = b.nor(nx[j], nyi)?;
            let target = if j + 1 == n {
                z[i + n]
            } else {
                match carry {
                    Some(c) => c,
                    None => b.alloc()?,
                }
            };
            match carry {
                Some(c) => b.fa_to(z[i + j], pp, c, z[i + j], target)?,
                None => b.ha_to(z[i + j], pp, z[i + j], target)?,
            }
            b.free(pp);
            if j + 1 < n {
                carry = Some(target);
            } else if let Some(c) = carry {
                b.free(c);
            }
        }
        b.free(nyi);
    }
    b.free_all(&nx);
    Ok(())
}

/// Product of equal-width `x` and `y` into `z`, splitting recursively while
/// the width exceeds `threshold`.
pub fn mult(b: &mut Builder, x: &[Col], y: &[Col], z: &[Col], threshold: usize) -> Result<()> {
    let n = x.len();
    debug_assert!(y.len() == n && z.len() == 2 * n);
    if n <= threshold || n < 4 {
        return mult_base(b, x, y, z);
    }
    let h = n.div_ceil(2);
    let (x0, x1) = x.split_at(h);
    let (y0, y1) = y.split_at(h);

    let sx = b.alloc_n(h + 1)?;
    let sy = b.alloc_n(h + 1)?;
    let x1b: Vec<Bit> = x1.iter().map(|&c| Bit::Col(c)).collect();
    let y1b: Vec<Bit> = y1.iter().map(|&c| Bit::Col(c)).collect();
    ripple(b, x0, &x1b, Bit::Zero, &sx[..h], Some(sx[h]))?;
    ripple(b, y0, &y1b, Bit::Zero, &sy[..h], Some(sy[h]))?;
    let mid = b.alloc_n(2 * h + 2)?;
    mult(b, &sx, &sy, &mid, threshold)?;
    // the sums are dead once the middle product exists; their cells go back
    // to the pool for the two outer products
    b.free_all(&sx);
    b.free_all(&sy);

    mult(b, x0, y0, &z[..2 * h], threshold)?;
    mult(b, x1, y1, &z[2 * h..], threshold)?;

    // cross term x0*y1 + x1*y0 is below 2^(n+1)
    let cross = &mid[..n + 1];
    subtract(b, cross, &z[..2 * h], cross)?;
    subtract(b, cross, &z[2 * h..], cross)?;
    b.free_all(&mid[n + 1..]);

    let upper = z[h..].to_vec();
    let cb: Vec<Bit> = cross.iter().map(|&c| Bit::Col(c)).collect();
    ripple(b, &upper, &cb, Bit::Zero, &upper, None)?;
    b.free_all(cross);
    Ok(())
}

/// `z = x * y`, `z` twice as wide as the inputs.
pub fn emit_mult_serial(n: usize, threshold: usize) -> Result<MicroProgram> {
    check_width(n, 64)?;
    if threshold < 2 {
        return Err(PimError::InvalidArgument(format!("Karatsuba threshold {threshold} below 2")));
    }
    let mut b = Builder::serial();
    let x = b.input("x", n)?;
    let y = b.input("y", n)?;
    let z = b.output("z", 2 * n)?;
    mult(&mut b, &x, &y, &z, threshold)?;
    b.finish()
}

/// Non-restoring division of the `2n`-bit `z` by the `n`-bit `d` into
/// `q` and `r`. Requires `d != 0` and `z < d * 2^n`.
///
/// The partial remainder is `n + 1` bits wide. Each iteration shifts it left
/// by relabeling columns, then adds `d` or subtracts it depending on the
/// previous quotient bit: the addend is `d XOR q_prev` with carry-in
/// `q_prev`, so the emitted gates never depend on data.
pub fn divide(b: &mut Builder, z: &[Col], d: &[Col], q: &[Col], r: &[Col]) -> Result<()> {
    let n = d.len();
    debug_assert!(z.len() == 2 * n && q.len() == n && r.len() == n);
    let nd: Vec<Col> = d.iter().map(|&c| b.not(c)).collect::<Result<_>>()?;

    // `rem` holds the shifted remainder, LSB first; columns of `z` are read
    // in place and never written
    let mut rem: Vec<Col> = z[n - 1..].to_vec();
    let mut owned: Vec<bool> = vec![false; n + 1];
    // `(q_prev, not q_prev)`; None before the first iteration, where it is 1
    let mut prev: Option<(Col, Col)> = None;
    for i in (0..n).rev() {
        let addend: Vec<Bit> = match prev {
            None => nd.iter().map(|&c| Bit::Col(c)).chain([Bit::One]).collect(),
            Some((qp, nqp)) => {
                let mut v = Vec::with_capacity(n + 1);
                for j in 0..n {
                    v.push(Bit::Col(b.xor_dual(d[j], nd[j], qp, nqp)?));
                }
                v.push(Bit::Col(qp));
                v
            }
        };
        let carry_in = prev.map_or(Bit::One, |(qp, _)| Bit::Col(qp));
        let next = b.alloc_n(n + 1)?;
        ripple(b, &rem, &addend, carry_in, &next, None)?;
        for bit in &addend[..n] {
            if let (Bit::Col(c), Some(_)) = (bit, prev) {
                b.free(*c);
            }
        }
        for (c, own) in rem.iter().zip(&owned) {
            if *own {
                b.free(*c);
            }
        }
        let sign = next[n];
        b.not_to(sign, q[i]);
        if let Some((_, nqp)) = prev {
            b.free(nqp);
        }
        prev = Some((q[i], sign));
        if i > 0 {
            rem = std::iter::once(z[i - 1]).chain(next[..n].iter().copied()).collect();
            owned = std::iter::once(false).chain(std::iter::repeat_n(true, n)).collect();
        } else {
            rem = next[..n].to_vec();
            owned = vec![true; n];
        }
    }
    // remainder correction: add d back when the last remainder is negative
    let q0 = q[0];
    let fix: Vec<Bit> = nd.iter().map(|&c| b.nor(c, q0).map(Bit::Col)).collect::<Result<_>>()?;
    ripple(b, &rem, &fix, Bit::Zero, r, None)?;
    for bit in fix {
        if let Bit::Col(c) = bit {
            b.free(c);
        }
    }
    b.free_all(&rem);
    if let Some((_, nqp)) = prev {
        b.free(nqp);
    }
    b.free_all(&nd);
    Ok(())
}

pub fn emit_div_serial(n: usize) -> Result<MicroProgram> {
    check_width(n, 64)?;
    let mut b = Builder::serial();
    let z = b.input("z", 2 * n)?;
    let d = b.input("d", n)?;
    let q = b.output("q", n)?;
    let r = b.output("r", n)?;
    divide(&mut b, &z, &d, &q, &r)?;
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{cost, Accounting};

    fn outs(p: &MicroProgram, ins: &[(&str, u128)]) -> Vec<u128> {
        p.evaluate(ins).unwrap().into_iter().map(|(_, v)| v).collect()
    }

    #[test]
    fn add_examples() {
        let p = emit_add_serial(4).unwrap();
        assert_eq!(outs(&p, &[("x", 5), ("y", 7)]), vec![12]);
        assert_eq!(outs(&p, &[("x", 0), ("y", 0)]), vec![0]);
        assert_eq!(outs(&p, &[("x", 15), ("y", 1)]), vec![16]);
        assert_eq!(cost(&p, Accounting::Logical).gates, 9 * 4 + 1);
    }

    #[test]
    fn sub_examples() {
        let p = emit_sub_serial(4).unwrap();
        assert_eq!(outs(&p, &[("x", 7), ("y", 5)]), vec![2]);
        assert_eq!(outs(&p, &[("x", 9), ("y", 9)]), vec![0]);
        assert_eq!(outs(&p, &[("x", 0), ("y", 1)]), vec![31]);
    }

    #[test]
    fn mult_exhaustive_small() {
        for n in 1..=5 {
            let p = emit_mult_serial(n, 2).unwrap();
            for x in 0..1u128 << n {
                for y in 0..1u128 << n {
                    assert_eq!(outs(&p, &[("x", x), ("y", y)]), vec![x * y], "n={n} {x}*{y}");
                }
            }
        }
        let p = emit_mult_serial(8, 20).unwrap();
        assert_eq!(outs(&p, &[("x", 13), ("y", 11)]), vec![143]);
    }

    #[test]
    fn div_exhaustive_small() {
        for n in 1..=4 {
            let p = emit_div_serial(n).unwrap();
            for d in 1..1u128 << n {
                for z in 0..d << n {
                    assert_eq!(outs(&p, &[("z", z), ("d", d)]), vec![z / d, z % d], "n={n} {z}/{d}");
                }
            }
        }
    }
}
