//! Communication between partitions for strided signals: shift, broadcast,
//! reduction and prefix scan.
//!
//! A signal is one cell at a fixed offset in every partition. Gates that
//! reach across partitions connect the whole span between their partitions,
//! so every pattern here keeps the spans of one step disjoint and equal in
//! shape. Copies through another partition arrive complemented and are fixed
//! by one local NOT.

use std::ops::Range;

use crate::error::{PimError, Result};
use crate::microcode::{Builder, Off};
use crate::model::GateInstance;
use crate::program::{MicroProgram, Role};

/// Associative operators for [`reduce`] and [`prefix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssocOp {
    And,
    Or,
    Xor,
    /// Carry combination on (generate, propagate) pairs:
    /// `(g, a) then (g', a')` gives `(g' + a'g, a'a)` with the primed pair
    /// the more significant one.
    Carry,
}

impl AssocOp {
    pub const ALL: [AssocOp; 4] = [AssocOp::And, AssocOp::Or, AssocOp::Xor, AssocOp::Carry];

    /// Cells per element: two for [`AssocOp::Carry`], one otherwise.
    pub fn arity(self) -> usize {
        if self == AssocOp::Carry {
            2
        } else {
            1
        }
    }

    /// Host evaluation of `low ∘ high` on elements packed as `g | a << 1`.
    pub fn apply(self, low: u8, high: u8) -> u8 {
        match self {
            AssocOp::And => low & high,
            AssocOp::Or => low | high,
            AssocOp::Xor => low ^ high,
            AssocOp::Carry => {
                let (g, a) = (low & 1, low >> 1 & 1);
                let (gh, ah) = (high & 1, high >> 1 & 1);
                (gh | (ah & g)) | (ah & a) << 1
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AssocOp::And => "and",
            AssocOp::Or => "or",
            AssocOp::Xor => "xor",
            AssocOp::Carry => "carry",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        AssocOp::ALL.into_iter().find(|op| op.name() == s)
    }
}

fn all(b: &Builder) -> Vec<usize> {
    (0..b.k()).collect()
}

/// `dst[p] = src[p - dist]` for `p` in `range`. Receivers whose source falls
/// outside the range get `fill`, or keep their value when `fill` is `None`.
/// `dst` may equal `src`.
///
/// Spans of `|dist| + 1` partitions must not overlap, so senders are split
/// into `|dist| + 1` residue classes, one inter-partition step each.
pub fn shift(b: &mut Builder, range: Range<usize>, dist: isize, src: Off, dst: Off, fill: Option<bool>) -> Result<()> {
    shift_many(b, range, dist, &[(src, dst)], fill)
}

/// [`shift`] of several signals at once. Their transfers share switch
/// settings, so the number of inter-partition rounds does not grow.
pub fn shift_many(b: &mut Builder, range: Range<usize>, dist: isize, moves: &[(Off, Off)], fill: Option<bool>) -> Result<()> {
    let span = dist.unsigned_abs();
    let tmps: Vec<Off> = moves.iter().map(|_| b.signal()).collect::<Result<_>>()?;
    if span == 0 {
        let parts: Vec<usize> = range.collect();
        for (&(src, dst), &tmp) in moves.iter().zip(&tmps) {
            if src != dst {
                b.local(&parts, &GateInstance::not(src, tmp));
                b.local(&parts, &GateInstance::not(tmp, dst));
            }
        }
    } else {
        let receivers: Vec<usize> =
            range.clone().filter(|&p| p as isize - dist >= range.start as isize && ((p as isize - dist) as usize) < range.end).collect();
        for class in 0..=span {
            let pairs: Vec<(usize, usize)> = receivers
                .iter()
                .map(|&to| ((to as isize - dist) as usize, to))
                .filter(|&(from, _)| (from - range.start) % (span + 1) == class)
                .collect();
            for (&(src, _), &tmp) in moves.iter().zip(&tmps) {
                b.cross_not(&pairs, src, tmp);
            }
        }
        for (&(_, dst), &tmp) in moves.iter().zip(&tmps) {
            b.local(&receivers, &GateInstance::not(tmp, dst));
        }
        if let Some(bit) = fill {
            let rest: Vec<usize> = range.filter(|p| !receivers.contains(p)).collect();
            for &(_, dst) in moves {
                b.local(&rest, &GateInstance::init(bit, dst));
            }
        }
    }
    for tmp in tmps {
        b.free_signal(tmp);
    }
    Ok(())
}

/// Copies one cell between partitions: one inter-partition step and a local
/// NOT, or two local NOTs when `from == to`.
pub fn transfer(b: &mut Builder, from: usize, src: Off, to: usize, dst: Off) -> Result<()> {
    let tmp = b.signal()?;
    if from == to {
        b.local(&[from], &GateInstance::not(src, tmp));
    } else {
        b.cross_not(&[(from, to)], src, tmp);
    }
    b.local(&[to], &GateInstance::not(tmp, dst));
    b.free_signal(tmp);
    Ok(())
}

/// Copies `off` in partition `src` to every partition of `range`, doubling
/// the set of holders each level: one inter-partition step plus one local
/// NOT per level.
///
/// Ranges that are not a power of two are covered by a power-of-two window
/// aligned so that a dropped partner never has an in-range block below it,
/// which needs the source at either end of the range; other sources are
/// first moved to the bottom.
pub fn broadcast(b: &mut Builder, range: Range<usize>, src: usize, off: Off) -> Result<()> {
    if !range.contains(&src) {
        return Err(PimError::InvalidArgument(format!("broadcast source {src} outside partitions {range:?}")));
    }
    let n = range.len();
    let size = n.next_power_of_two();
    let (src, base) = if n == size || src == range.start {
        (src, range.start as isize)
    } else if src + 1 == range.end {
        (src, range.end as isize - size as isize)
    } else {
        transfer(b, src, off, range.start, off)?;
        (range.start, range.start as isize)
    };
    let rel = (src as isize - base) as usize;
    let inside = |p: isize| p >= range.start as isize && p < range.end as isize;
    let tmp = b.signal()?;
    let mut half = size / 2;
    while half >= 1 {
        let o = rel % (2 * half);
        let (from_rel, to_rel) = if o < half { (o, o + half) } else { (o, o - half) };
        let pairs: Vec<(usize, usize)> = (0..size / (2 * half))
            .map(|blk| (base + (blk * 2 * half + from_rel) as isize, base + (blk * 2 * half + to_rel) as isize))
            .filter(|&(from, to)| inside(from) && inside(to))
            .map(|(from, to)| (from as usize, to as usize))
            .collect();
        b.cross_not(&pairs, off, tmp);
        let to: Vec<usize> = pairs.iter().map(|&(_, t)| t).collect();
        b.local(&to, &GateInstance::not(tmp, off));
        half /= 2;
    }
    b.free_signal(tmp);
    Ok(())
}

/// One level of combining: for each `(from, to)` pair, the element at `to`
/// becomes `element(from) ∘ element(to)` with `from` the less significant.
/// `vals` holds one offset, or `[g, a]` for [`AssocOp::Carry`].
fn combine(b: &mut Builder, pairs: &[(usize, usize)], op: AssocOp, vals: &[Off]) -> Result<()> {
    if pairs.is_empty() {
        return Ok(());
    }
    let parts = all(b);
    let receivers: Vec<usize> = pairs.iter().map(|&(_, t)| t).collect();
    match op {
        AssocOp::Or => {
            let t = b.signal()?;
            b.cross_nor(pairs, vals[0], vals[0], t);
            b.local(&receivers, &GateInstance::not(t, vals[0]));
            b.free_signal(t);
        }
        AssocOp::And => {
            let nv = b.signal()?;
            b.local(&parts, &GateInstance::not(vals[0], nv));
            b.cross_nor(pairs, nv, nv, vals[0]);
            b.free_signal(nv);
        }
        AssocOp::Xor => {
            // NOR(NOR(x, y), AND(x, y)), both inner terms across the switch
            let nv = b.signal()?;
            let either = b.signal()?;
            let both = b.signal()?;
            b.local(&parts, &GateInstance::not(vals[0], nv));
            b.cross_nor(pairs, vals[0], vals[0], either);
            b.cross_nor(pairs, nv, nv, both);
            b.local(&receivers, &GateInstance::nor(either, both, vals[0]));
            for s in [nv, either, both] {
                b.free_signal(s);
            }
        }
        AssocOp::Carry => {
            let (g, a) = (vals[0], vals[1]);
            let na = b.signal()?;
            let ng = b.signal()?;
            let through = b.signal()?;
            b.local(&parts, &GateInstance::not(a, na));
            b.local(&parts, &GateInstance::not(g, ng));
            // a_high AND g_low, then a_high AND a_low
            b.cross_nor(pairs, na, ng, through);
            b.cross_nor(pairs, na, na, a);
            b.local(&receivers, &GateInstance::nor(g, through, ng));
            b.local(&receivers, &GateInstance::not(ng, g));
            for s in [na, ng, through] {
                b.free_signal(s);
            }
        }
    }
    Ok(())
}

fn check_vals(op: AssocOp, vals: &[Off]) -> Result<()> {
    if vals.len() != op.arity() {
        return Err(PimError::InvalidArgument(format!("{} takes {} cells per element, got {}", op.name(), op.arity(), vals.len())));
    }
    Ok(())
}

/// Folds the elements of `range` in place; the last partition of the range
/// ends up with the fold of all of them. Other cells are clobbered.
pub fn reduce(b: &mut Builder, range: Range<usize>, op: AssocOp, vals: &[Off]) -> Result<()> {
    check_vals(op, vals)?;
    let top = range.end - 1;
    let mut s = 1;
    while s < range.len() {
        let pairs: Vec<(usize, usize)> = range
            .clone()
            .filter(|&p| (top - p).is_multiple_of(2 * s) && p >= range.start + s)
            .map(|p| (p - s, p))
            .collect();
        combine(b, &pairs, op, vals)?;
        s *= 2;
    }
    Ok(())
}

/// Inclusive scan in place over `range`: an up-sweep building power-of-two
/// blocks, then a down-sweep filling in the rest.
pub fn prefix(b: &mut Builder, range: Range<usize>, op: AssocOp, vals: &[Off]) -> Result<()> {
    check_vals(op, vals)?;
    let n = range.len();
    // positions counted from 1 so that block ends are multiples of 2s
    let at = |i: usize| range.start + i - 1;
    let mut s = 1;
    while 2 * s <= n {
        let pairs: Vec<(usize, usize)> = (1..=n).filter(|i| i % (2 * s) == 0).map(|i| (at(i - s), at(i))).collect();
        combine(b, &pairs, op, vals)?;
        s *= 2;
    }
    s /= 2;
    while s >= 1 {
        let pairs: Vec<(usize, usize)> =
            (1..=n).filter(|&i| i > s && i % (2 * s) == s).map(|i| (at(i - s), at(i))).collect();
        combine(b, &pairs, op, vals)?;
        s /= 2;
    }
    Ok(())
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 || !k.is_power_of_two() {
        return Err(PimError::InvalidArgument(format!("partition count {k} must be a power of two of at least 2")));
    }
    Ok(())
}

fn element_names(op: AssocOp, prefix: &str) -> Vec<String> {
    if op == AssocOp::Carry {
        vec![format!("{prefix}g"), format!("{prefix}a")]
    } else {
        vec![prefix.to_string()]
    }
}

/// Shift of the strided `x` by `j` partitions towards the top into `z`,
/// zero-filled.
pub fn emit_shift(k: usize, j: usize) -> Result<MicroProgram> {
    check_k(k)?;
    if j == 0 || j >= k {
        return Err(PimError::InvalidArgument(format!("shift distance {j} outside 1..{k}")));
    }
    let mut b = Builder::partitioned(k)?;
    let x = b.strided("x", k, Role::Input)?;
    let z = b.strided("z", k, Role::Output)?;
    shift(&mut b, 0..k, j as isize, x, z, Some(false))?;
    b.finish()
}

/// Copies bit `src` of the strided `x` into every bit of `z`.
pub fn emit_broadcast(k: usize, src: usize) -> Result<MicroProgram> {
    check_k(k)?;
    let mut b = Builder::partitioned(k)?;
    let x = b.strided("x", k, Role::Input)?;
    let z = b.strided("z", k, Role::Output)?;
    let tmp = b.signal()?;
    b.local(&[src], &GateInstance::not(x, tmp));
    b.local(&[src], &GateInstance::not(tmp, z));
    b.free_signal(tmp);
    broadcast(&mut b, 0..k, src, z)?;
    b.finish()
}

fn copy_in(b: &mut Builder, k: usize, op: AssocOp, out_role: Role, out_prefix: &str) -> Result<Vec<Off>> {
    let inputs: Vec<Off> = element_names(op, "x").iter().map(|n| b.strided(n, k, Role::Input)).collect::<Result<_>>()?;
    let work: Vec<Off> = if out_role == Role::Output {
        element_names(op, out_prefix).iter().map(|n| b.strided(n, k, Role::Output)).collect::<Result<_>>()?
    } else {
        (0..op.arity()).map(|_| b.signal()).collect::<Result<_>>()?
    };
    let parts: Vec<usize> = (0..k).collect();
    let tmp = b.signal()?;
    for (&i, &w) in inputs.iter().zip(&work) {
        b.local(&parts, &GateInstance::not(i, tmp));
        b.local(&parts, &GateInstance::not(tmp, w));
    }
    b.free_signal(tmp);
    Ok(work)
}

/// Fold of the strided `x` (or `xg`, `xa`) into the one-bit `z` (or `zg`,
/// `za`) in the last partition.
pub fn emit_reduce(k: usize, op: AssocOp) -> Result<MicroProgram> {
    check_k(k)?;
    let mut b = Builder::partitioned(k)?;
    let work = copy_in(&mut b, k, op, Role::Scratch, "z")?;
    reduce(&mut b, 0..k, op, &work)?;
    for (name, &w) in element_names(op, "z").iter().zip(&work) {
        let col = b.col(k - 1, w);
        b.name_cell(name, col, Role::Output);
    }
    b.finish()
}

/// Inclusive scan of the strided `x` (or `xg`, `xa`) into `z` (or `zg`, `za`).
pub fn emit_prefix(k: usize, op: AssocOp) -> Result<MicroProgram> {
    check_k(k)?;
    let mut b = Builder::partitioned(k)?;
    let work = copy_in(&mut b, k, op, Role::Output, "z")?;
    prefix(&mut b, 0..k, op, &work)?;
    b.finish()
}
