//! Macro gates and their fixed NOT/NOR lowerings.
//!
//! | macro | gates | notes |
//! |-------|-------|-------|
//! | OR2   | 2 | NOR, NOT |
//! | AND2  | 3 | NOT, NOT, NOR; 1 when both complements are at hand |
//! | XNOR2 | 4 | |
//! | XOR2  | 5 | XNOR2 then NOT; 3 when both complements are at hand |
//! | XOR3  | 8 | full adder without the carry |
//! | MUX   | 3 | needs the complement of the select |
//! | HA    | 6 | |
//! | FA    | 9 | |

use super::Gates;
use crate::error::{PimError, Result};

/// Macro gate kinds accepted by [`lower_macro`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Macro {
    Or2,
    And2,
    Xnor2,
    Xor2,
    Xor3,
    /// Inputs `(s, not_s, a, b)`, output `s ? a : b`.
    Mux,
    /// Outputs `(sum, carry)`.
    Ha,
    /// Outputs `(sum, carry)`.
    Fa,
}

impl Macro {
    pub fn inputs(self) -> usize {
        match self {
            Macro::Or2 | Macro::And2 | Macro::Xnor2 | Macro::Xor2 | Macro::Ha => 2,
            Macro::Xor3 | Macro::Fa => 3,
            Macro::Mux => 4,
        }
    }

    pub fn outputs(self) -> usize {
        match self {
            Macro::Ha | Macro::Fa => 2,
            _ => 1,
        }
    }

    pub fn gate_count(self) -> usize {
        match self {
            Macro::Or2 => 2,
            Macro::And2 | Macro::Mux => 3,
            Macro::Xnor2 => 4,
            Macro::Xor2 => 5,
            Macro::Ha => 6,
            Macro::Xor3 => 8,
            Macro::Fa => 9,
        }
    }
}

/// Emits `kind` reading `inputs` and writing `outputs`.
pub fn lower_macro<G: Gates>(g: &mut G, kind: Macro, inputs: &[G::Bit], outputs: &[G::Bit]) -> Result<()> {
    if inputs.len() != kind.inputs() || outputs.len() != kind.outputs() {
        return Err(PimError::InvalidArgument(format!(
            "{kind:?} takes {} inputs and {} outputs",
            kind.inputs(),
            kind.outputs()
        )));
    }
    let i = inputs;
    let o = outputs;
    match kind {
        Macro::Or2 => g.or_to(i[0], i[1], o[0]),
        Macro::And2 => g.and_to(i[0], i[1], o[0]),
        Macro::Xnor2 => g.xnor_to(i[0], i[1], o[0]),
        Macro::Xor2 => g.xor_to(i[0], i[1], o[0]),
        Macro::Xor3 => g.xor3_to(i[0], i[1], i[2], o[0]),
        Macro::Mux => {
            g.mux_to(i[0], i[1], i[2], i[3], o[0])?;
            Ok(())
        }
        Macro::Ha => g.ha_to(i[0], i[1], o[0], o[1]),
        Macro::Fa => g.fa_to(i[0], i[1], i[2], o[0], o[1]),
    }
}

/// Macro library on top of [`Gates`]. `*_to` variants write a given output
/// cell; the others allocate it. Temporaries are released before returning.
pub trait Macros: Gates {
    fn nor(&mut self, a: Self::Bit, b: Self::Bit) -> Result<Self::Bit> {
        let out = self.fresh()?;
        self.nor_to(a, b, out);
        Ok(out)
    }

    fn not(&mut self, a: Self::Bit) -> Result<Self::Bit> {
        let out = self.fresh()?;
        self.not_to(a, out);
        Ok(out)
    }

    fn init(&mut self, bit: bool) -> Result<Self::Bit> {
        let out = self.fresh()?;
        self.init_to(bit, out);
        Ok(out)
    }

    /// Two NOTs.
    fn copy_to(&mut self, a: Self::Bit, out: Self::Bit) -> Result<()> {
        let t = self.not(a)?;
        self.not_to(t, out);
        self.release(t);
        Ok(())
    }

    fn or_to(&mut self, a: Self::Bit, b: Self::Bit, out: Self::Bit) -> Result<()> {
        let t = self.nor(a, b)?;
        self.not_to(t, out);
        self.release(t);
        Ok(())
    }

    fn or(&mut self, a: Self::Bit, b: Self::Bit) -> Result<Self::Bit> {
        let out = self.fresh()?;
        self.or_to(a, b, out)?;
        Ok(out)
    }

    fn and_to(&mut self, a: Self::Bit, b: Self::Bit, out: Self::Bit) -> Result<()> {
        let na = self.not(a)?;
        let nb = self.not(b)?;
        self.nor_to(na, nb, out);
        self.release(na);
        self.release(nb);
        Ok(())
    }

    fn and(&mut self, a: Self::Bit, b: Self::Bit) -> Result<Self::Bit> {
        let out = self.fresh()?;
        self.and_to(a, b, out)?;
        Ok(out)
    }

    fn xnor_to(&mut self, a: Self::Bit, b: Self::Bit, out: Self::Bit) -> Result<()> {
        let t1 = self.nor(a, b)?;
        let t2 = self.nor(a, t1)?;
        let t3 = self.nor(b, t1)?;
        self.nor_to(t2, t3, out);
        for t in [t1, t2, t3] {
            self.release(t);
        }
        Ok(())
    }

    fn xnor(&mut self, a: Self::Bit, b: Self::Bit) -> Result<Self::Bit> {
        let out = self.fresh()?;
        self.xnor_to(a, b, out)?;
        Ok(out)
    }

    fn xor_to(&mut self, a: Self::Bit, b: Self::Bit, out: Self::Bit) -> Result<()> {
        let t = self.xnor(a, b)?;
        self.not_to(t, out);
        self.release(t);
        Ok(())
    }

    fn xor(&mut self, a: Self::Bit, b: Self::Bit) -> Result<Self::Bit> {
        let out = self.fresh()?;
        self.xor_to(a, b, out)?;
        Ok(out)
    }

    /// XOR from both polarities of both inputs: 3 gates.
    fn xor_dual_to(&mut self, a: Self::Bit, na: Self::Bit, b: Self::Bit, nb: Self::Bit, out: Self::Bit) -> Result<()> {
        let t1 = self.nor(a, b)?;
        let t2 = self.nor(na, nb)?;
        self.nor_to(t1, t2, out);
        self.release(t1);
        self.release(t2);
        Ok(())
    }

    fn xor_dual(&mut self, a: Self::Bit, na: Self::Bit, b: Self::Bit, nb: Self::Bit) -> Result<Self::Bit> {
        let out = self.fresh()?;
        self.xor_dual_to(a, na, b, nb, out)?;
        Ok(out)
    }

    /// `s ? a : b` given `s` and its complement: 3 gates.
    fn mux_to(&mut self, s: Self::Bit, ns: Self::Bit, a: Self::Bit, b: Self::Bit, out: Self::Bit) -> Result<()> {
        let t1 = self.nor(a, ns)?;
        let t2 = self.nor(b, s)?;
        self.nor_to(t1, t2, out);
        self.release(t1);
        self.release(t2);
        Ok(())
    }

    fn mux(&mut self, s: Self::Bit, ns: Self::Bit, a: Self::Bit, b: Self::Bit) -> Result<Self::Bit> {
        let out = self.fresh()?;
        self.mux_to(s, ns, a, b, out)?;
        Ok(out)
    }

    /// Half adder, 6 gates. `carry` must differ from `a` and `b`.
    fn ha_to(&mut self, a: Self::Bit, b: Self::Bit, sum: Self::Bit, carry: Self::Bit) -> Result<()> {
        let t1 = self.nor(a, b)?;
        let t2 = self.nor(a, t1)?;
        let t3 = self.nor(b, t1)?;
        let x = self.nor(t2, t3)?;
        self.not_to(x, sum);
        self.nor_to(sum, t1, carry);
        for t in [t1, t2, t3, x] {
            self.release(t);
        }
        Ok(())
    }

    fn ha(&mut self, a: Self::Bit, b: Self::Bit) -> Result<(Self::Bit, Self::Bit)> {
        let sum = self.fresh()?;
        let carry = self.fresh()?;
        self.ha_to(a, b, sum, carry)?;
        Ok((sum, carry))
    }

    /// Full adder, 9 NOR gates. `sum` may alias `a` or `b` and `cout` may
    /// alias any input, since each is written after its last read.
    fn fa_to(&mut self, a: Self::Bit, b: Self::Bit, c: Self::Bit, sum: Self::Bit, cout: Self::Bit) -> Result<()> {
        let t1 = self.nor(a, b)?;
        let t2 = self.nor(a, t1)?;
        let t3 = self.nor(b, t1)?;
        let t4 = self.nor(t2, t3)?;
        self.release(t2);
        self.release(t3);
        let t5 = self.nor(t4, c)?;
        let t6 = self.nor(t4, t5)?;
        let t7 = self.nor(c, t5)?;
        self.nor_to(t6, t7, sum);
        self.nor_to(t1, t5, cout);
        for t in [t1, t4, t5, t6, t7] {
            self.release(t);
        }
        Ok(())
    }

    fn fa(&mut self, a: Self::Bit, b: Self::Bit, c: Self::Bit) -> Result<(Self::Bit, Self::Bit)> {
        let sum = self.fresh()?;
        let cout = self.fresh()?;
        self.fa_to(a, b, c, sum, cout)?;
        Ok((sum, cout))
    }

    /// Sum of a full adder without its carry, 8 gates.
    fn xor3_to(&mut self, a: Self::Bit, b: Self::Bit, c: Self::Bit, out: Self::Bit) -> Result<()> {
        let t4 = self.xnor(a, b)?;
        let t5 = self.nor(t4, c)?;
        let t6 = self.nor(t4, t5)?;
        let t7 = self.nor(c, t5)?;
        self.nor_to(t6, t7, out);
        for t in [t4, t5, t6, t7] {
            self.release(t);
        }
        Ok(())
    }

    fn xor3(&mut self, a: Self::Bit, b: Self::Bit, c: Self::Bit) -> Result<Self::Bit> {
        let out = self.fresh()?;
        self.xor3_to(a, b, c, out)?;
        Ok(out)
    }
}

impl<G: Gates + ?Sized> Macros for G {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microcode::Builder;
    use crate::model::RowState;
    use crate::program::{run_program, validate_program};

    /// Runs `kind` on every input combination and checks it against `f`.
    fn exhaustive(kind: Macro, f: impl Fn(&[bool]) -> Vec<bool>) {
        let mut b = Builder::serial();
        let ins = b.input("i", kind.inputs()).unwrap();
        let outs = b.output("o", kind.outputs()).unwrap();
        let before = b.steps();
        lower_macro(&mut b, kind, &ins, &outs).unwrap();
        assert_eq!(b.steps() - before, kind.gate_count(), "{kind:?}");
        let prog = b.finish().unwrap();
        assert!(validate_program(&prog).is_ok());
        for v in 0..1u32 << kind.inputs() {
            let bits: Vec<bool> = (0..kind.inputs()).map(|i| v >> i & 1 == 1).collect();
            let mut row = RowState::<bool>::new(prog.row_width(), false).unwrap();
            for (i, &c) in ins.iter().enumerate() {
                row.set(c, bits[i]);
            }
            let (out, _) = run_program(&row, &prog, false).unwrap();
            let got: Vec<bool> = outs.iter().map(|&c| out.get(c)).collect();
            assert_eq!(got, f(&bits), "{kind:?} on {bits:?}");
        }
    }

    #[test]
    fn truth_tables() {
        exhaustive(Macro::Or2, |b| vec![b[0] | b[1]]);
        exhaustive(Macro::And2, |b| vec![b[0] & b[1]]);
        exhaustive(Macro::Xnor2, |b| vec![!(b[0] ^ b[1])]);
        exhaustive(Macro::Xor2, |b| vec![b[0] ^ b[1]]);
        exhaustive(Macro::Xor3, |b| vec![b[0] ^ b[1] ^ b[2]]);
        exhaustive(Macro::Ha, |b| vec![b[0] ^ b[1], b[0] & b[1]]);
        exhaustive(Macro::Fa, |b| {
            let n = b.iter().filter(|&&x| x).count();
            vec![n % 2 == 1, n >= 2]
        });
    }

    #[test]
    fn mux_selects() {
        // inputs are (s, not_s, a, b); only consistent select pairs matter
        let mut b = Builder::serial();
        let ins = b.input("i", 4).unwrap();
        let out = b.output("o", 1).unwrap();
        lower_macro(&mut b, Macro::Mux, &ins, &out).unwrap();
        let prog = b.finish().unwrap();
        for s in [false, true] {
            for a in [false, true] {
                for bb in [false, true] {
                    let mut row = RowState::<bool>::new(prog.row_width(), false).unwrap();
                    for (c, v) in ins.iter().zip([s, !s, a, bb]) {
                        row.set(*c, v);
                    }
                    let (r, _) = run_program(&row, &prog, false).unwrap();
                    assert_eq!(r.get(out[0]), if s { a } else { bb });
                }
            }
        }
    }

    #[test]
    fn fa_in_place() {
        // sum over a, carry over c
        let mut b = Builder::serial();
        let a = b.alloc().unwrap();
        let bb = b.alloc().unwrap();
        let c = b.alloc().unwrap();
        b.fa_to(a, bb, c, a, c).unwrap();
        let prog = b.finish().unwrap();
        for v in 0..8u32 {
            let mut row = RowState::<bool>::new(prog.row_width(), false).unwrap();
            for (i, col) in [a, bb, c].into_iter().enumerate() {
                row.set(col, v >> i & 1 == 1);
            }
            let (r, _) = run_program(&row, &prog, false).unwrap();
            let n = v.count_ones();
            assert_eq!((r.get(a), r.get(c)), (n % 2 == 1, n >= 2));
        }
    }

    #[test]
    fn arity_checked() {
        let mut b = Builder::serial();
        let x = b.alloc().unwrap();
        assert!(lower_macro(&mut b, Macro::Fa, &[x], &[x]).is_err());
    }
}
