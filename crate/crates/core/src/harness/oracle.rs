//! Ground truth: host integer arithmetic for fixed point and exact rational
//! arithmetic rounded once to nearest-even for floating point.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};

use crate::float::FloatFormat;

use super::Op;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleResult {
    /// Expected output values, one per output port.
    InDomain(Vec<u128>),
    /// Outside the operation's contract; neither a pass nor a failure.
    Excluded,
}

impl OracleResult {
    pub fn values(&self) -> Option<&[u128]> {
        match self {
            OracleResult::InDomain(v) => Some(v),
            OracleResult::Excluded => None,
        }
    }
}

fn mask(bits: usize) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1 << bits) - 1
    }
}

/// Fixed-point reference. Inputs are `[x, y]`, or `[z, d]` for division
/// with a `2n`-bit dividend.
pub fn oracle_fixed(op: Op, n: usize, inputs: &[u128]) -> OracleResult {
    let (a, b) = (inputs[0], inputs[1]);
    let values = match op {
        Op::Add => vec![a + b],
        Op::Sub => vec![a.wrapping_sub(b) & mask(n + 1)],
        Op::Mul => vec![a * b],
        Op::Div => {
            if b == 0 || a >> n >= b {
                return OracleResult::Excluded;
            }
            vec![a / b, a % b]
        }
        _ => panic!("{op:?} is not a fixed-point operation"),
    };
    OracleResult::InDomain(values)
}

/// Variable shift and normalization reference.
pub fn oracle_shift(op: Op, nx: usize, inputs: &[u128]) -> OracleResult {
    let x = inputs[0];
    match op {
        Op::ShiftRight => OracleResult::InDomain(vec![x.checked_shr(inputs[1] as u32).unwrap_or(0)]),
        Op::ShiftLeft => OracleResult::InDomain(vec![x.checked_shl(inputs[1] as u32).unwrap_or(0) & mask(nx)]),
        Op::Normalize => {
            if x == 0 {
                return OracleResult::Excluded;
            }
            let t = x.leading_zeros() as usize - (128 - nx);
            OracleResult::InDomain(vec![(x << t) & mask(nx), t as u128])
        }
        _ => panic!("{op:?} is not a shift operation"),
    }
}

/// Rounds `num / den * 2^exp2` (positive) to nearest-even in `fmt` and packs
/// it with `sign`. `None` when the result is not a normal number.
fn round_pack(fmt: &FloatFormat, sign: bool, num: &BigUint, den: &BigUint, exp2: i64) -> Option<u128> {
    // floor(log2(num / den))
    let mut lg = num.bits() as i64 - den.bits() as i64;
    let below = if lg >= 0 { num < &(den << lg as u64) } else { &(num << (-lg) as u64) < den };
    if below {
        lg -= 1;
    }
    let shift = fmt.nm as i64 - lg;
    let (n, d) = if shift >= 0 { (num << shift as u64, den.clone()) } else { (num.clone(), den << (-shift) as u64) };
    let mut q = &n / &d;
    let r2 = (&n % &d) << 1u32;
    if r2 > d || (r2 == d && q.bit(0)) {
        q += 1u32;
    }
    let mut e = lg + exp2;
    if q.bits() as usize > fmt.nm + 1 {
        q >>= 1u32;
        e += 1;
    }
    let biased = e + fmt.bias;
    if biased < 1 || biased as u128 >= fmt.max_exponent() {
        return None;
    }
    let frac = q - (BigUint::one() << fmt.nm);
    let frac = frac.iter_u64_digits().next().unwrap_or(0) as u128
        | (frac.iter_u64_digits().nth(1).unwrap_or(0) as u128) << 64;
    Some(fmt.pack(sign, biased as u128, frac))
}

/// Significand with the hidden one and unbiased exponent of its last bit.
fn decode(fmt: &FloatFormat, bits: u128) -> (bool, BigUint, i64) {
    let (s, e, m) = fmt.unpack(bits);
    (s, BigUint::from(m | 1 << fmt.nm), e as i64 - fmt.bias - fmt.nm as i64)
}

/// Floating-point reference for `x op y`: the exact result rounded once.
/// Operands must be normal. Results that are not normal are excluded,
/// except an exact zero from addition, which is the all-zero encoding.
pub fn oracle_float(fmt: &FloatFormat, op: Op, x: u128, y: u128) -> OracleResult {
    if !fmt.is_normal(x) || !fmt.is_normal(y) {
        return OracleResult::Excluded;
    }
    let (sx, mx, ex) = decode(fmt, x);
    let (mut sy, my, ey) = decode(fmt, y);
    let one = BigUint::one();
    let packed = match op {
        Op::FAdd | Op::FSub | Op::FAddSameSign => {
            if op == Op::FSub {
                sy = !sy;
            }
            if op == Op::FAddSameSign && sx != sy {
                return OracleResult::Excluded;
            }
            let low = ex.min(ey);
            let signed = |s: bool, m: BigUint, e: i64| BigInt::from_biguint(if s { Sign::Minus } else { Sign::Plus }, m << (e - low) as u64);
            let sum = signed(sx, mx, ex) + signed(sy, my, ey);
            if sum.is_zero() {
                return OracleResult::InDomain(vec![0]);
            }
            let (sign, mag) = sum.into_parts();
            round_pack(fmt, sign == Sign::Minus, &mag, &one, low)
        }
        Op::FMul => round_pack(fmt, sx != sy, &(mx * my), &one, ex + ey),
        Op::FDiv => round_pack(fmt, sx != sy, &mx, &my, ex - ey),
        _ => panic!("{op:?} is not a floating-point operation"),
    };
    match packed {
        Some(z) => OracleResult::InDomain(vec![z]),
        None => OracleResult::Excluded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn fixed_examples() {
        assert_eq!(oracle_fixed(Op::Add, 4, &[15, 1]), OracleResult::InDomain(vec![16]));
        assert_eq!(oracle_fixed(Op::Div, 4, &[100, 7]), OracleResult::InDomain(vec![14, 2]));
        assert_eq!(oracle_fixed(Op::Div, 4, &[5, 0]), OracleResult::Excluded);
        assert_eq!(oracle_fixed(Op::Sub, 4, &[0, 1]), OracleResult::InDomain(vec![31]));
    }

    #[test]
    fn float_matches_host_single() {
        let fmt = FloatFormat::SINGLE;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut seen = 0;
        for _ in 0..100_000 {
            let a: f32 = f32::from_bits(rng.gen());
            let b: f32 = if rng.gen_bool(0.2) { f32::from_bits(a.to_bits() ^ rng.gen_range(0..64)) } else { f32::from_bits(rng.gen()) };
            for (op, want) in [(Op::FAdd, a + b), (Op::FSub, a - b), (Op::FMul, a * b), (Op::FDiv, a / b)] {
                let got = oracle_float(&fmt, op, a.to_bits().into(), b.to_bits().into());
                let exact_zero = want == 0.0 && matches!(op, Op::FAdd | Op::FSub);
                if a.is_normal() && b.is_normal() && (want.is_normal() || exact_zero) {
                    let want = if want == 0.0 { 0 } else { want.to_bits() };
                    assert_eq!(got, OracleResult::InDomain(vec![want.into()]), "{op:?} {a:e} {b:e}");
                    seen += 1;
                } else {
                    assert_eq!(got, OracleResult::Excluded, "{op:?} {a:e} {b:e}");
                }
            }
        }
        assert!(seen > 100_000);
    }

    #[test]
    fn halfway_rounds_to_even() {
        // (4,3): 1.000 + 0.0001 (binary) is exactly halfway between 1.000 and 1.001
        let fmt = FloatFormat::new(4, 3).unwrap();
        let one = fmt.pack(false, 7, 0);
        let sixteenth = fmt.pack(false, 3, 0);
        assert_eq!(oracle_float(&fmt, Op::FAdd, one, sixteenth), OracleResult::InDomain(vec![one]));
        // 1.001 + 0.0001 is halfway between 1.001 and 1.010: rounds up to even
        let next = fmt.pack(false, 7, 1);
        assert_eq!(oracle_float(&fmt, Op::FAdd, next, sixteenth), OracleResult::InDomain(vec![fmt.pack(false, 7, 2)]));
    }

    #[test]
    fn identities() {
        let fmt = FloatFormat::new(5, 6).unwrap();
        let one = fmt.pack(false, fmt.bias as u128, 0);
        for x in [fmt.pack(false, 3, 17), fmt.pack(true, 20, 63)] {
            assert_eq!(oracle_float(&fmt, Op::FMul, x, one), OracleResult::InDomain(vec![x]));
            assert_eq!(oracle_float(&fmt, Op::FDiv, x, x), OracleResult::InDomain(vec![one]));
            assert_eq!(oracle_float(&fmt, Op::FSub, x, x), OracleResult::InDomain(vec![0]));
        }
    }
}
