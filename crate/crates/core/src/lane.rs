//! Cell word types.
//!
//! A cell of the simulated row is stored as a [`Lane`] word. A `bool` models
//! exactly one row. An unsigned integer models `BITS` independent rows that all
//! receive the same gate sequence, which is how element-parallel execution
//! behaves on a real array (every row sees the same column operation).

use std::fmt::Debug;
use std::ops::{BitAnd, BitOr, BitXor, Not};

use num_traits::{PrimInt, Unsigned};

/// Word type holding one cell for one or more rows.
pub trait Lane:
    Copy
    + Eq
    + Debug
    + Send
    + Sync
    + Not<Output = Self>
    + BitOr<Output = Self>
    + BitAnd<Output = Self>
    + BitXor<Output = Self>
    + 'static
{
    /// Number of rows carried by one word.
    const ROWS: usize;
    const ZERO: Self;
    const ONES: Self;

    fn from_bit(bit: bool) -> Self {
        if bit {
            Self::ONES
        } else {
            Self::ZERO
        }
    }

    /// Bit of row `row`.
    fn row(self, row: usize) -> bool;

    /// Returns `self` with the bit of row `row` set to `bit`.
    fn with_row(self, row: usize, bit: bool) -> Self;
}

impl Lane for bool {
    const ROWS: usize = 1;
    const ZERO: Self = false;
    const ONES: Self = true;

    fn row(self, row: usize) -> bool {
        debug_assert_eq!(row, 0);
        self
    }

    fn with_row(self, row: usize, bit: bool) -> Self {
        debug_assert_eq!(row, 0);
        bit
    }
}

fn int_row<T: PrimInt + Unsigned>(word: T, row: usize) -> bool {
    (word >> row) & T::one() == T::one()
}

fn int_with_row<T: PrimInt + Unsigned>(word: T, row: usize, bit: bool) -> T {
    let mask = T::one() << row;
    if bit {
        word | mask
    } else {
        word & !mask
    }
}

macro_rules! impl_lane_int {
    ($($t:ty),*) => {
        $(
            impl Lane for $t {
                const ROWS: usize = <$t>::BITS as usize;
                const ZERO: Self = 0;
                const ONES: Self = <$t>::MAX;

                fn row(self, row: usize) -> bool {
                    int_row(self, row)
                }

                fn with_row(self, row: usize, bit: bool) -> Self {
                    int_with_row(self, row, bit)
                }
            }
        )*
    };
}

impl_lane_int!(u8, u16, u32, u64, u128);
