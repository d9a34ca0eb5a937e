//! Binary floating-point formats: sign, biased exponent, fraction with a
//! hidden leading one. Bit layout is fraction in the low bits, then the
//! exponent, then the sign, so `(8, 23)` matches IEEE-754 single precision.

use crate::error::{PimError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FloatFormat {
    /// Exponent bits.
    pub ne: usize,
    /// Fraction bits, not counting the hidden one.
    pub nm: usize,
    pub bias: i64,
}

impl FloatFormat {
    pub const SINGLE: FloatFormat = FloatFormat { ne: 8, nm: 23, bias: 127 };

    pub fn new(ne: usize, nm: usize) -> Result<Self> {
        if !(2..=15).contains(&ne) || !(1..=60).contains(&nm) {
            return Err(PimError::InvalidArgument(format!("float format ({ne},{nm}) needs 2<=Ne<=15 and 1<=Nm<=60")));
        }
        Ok(FloatFormat { ne, nm, bias: (1 << (ne - 1)) - 1 })
    }

    /// Parses `"Ne,Nm"`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || PimError::InvalidArgument(format!("float format `{s}` is not `Ne,Nm`"));
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        Self::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?)
    }

    pub fn width(&self) -> usize {
        1 + self.ne + self.nm
    }

    pub fn max_exponent(&self) -> u128 {
        (1 << self.ne) - 1
    }

    pub fn pack(&self, sign: bool, exp: u128, frac: u128) -> u128 {
        (u128::from(sign) << (self.ne + self.nm)) | (exp << self.nm) | frac
    }

    /// `(sign, exponent field, fraction field)`.
    pub fn unpack(&self, bits: u128) -> (bool, u128, u128) {
        let frac = bits & ((1 << self.nm) - 1);
        let exp = (bits >> self.nm) & self.max_exponent();
        (bits >> (self.ne + self.nm) & 1 == 1, exp, frac)
    }

    /// Nonzero, finite, not subnormal.
    pub fn is_normal(&self, bits: u128) -> bool {
        let (_, e, _) = self.unpack(bits);
        e != 0 && e != self.max_exponent()
    }
}

impl std::fmt::Display for FloatFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.ne, self.nm)
    }
}
