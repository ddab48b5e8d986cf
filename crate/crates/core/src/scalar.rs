//! Integer scalar used for valuations, prices and transfers.

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::iter::Sum;

use num_traits::{PrimInt, Signed};

/// Signed machine integer carrying money amounts.
///
/// Every quantity in the market is an exact integer: valuations, prices,
/// transfers and indirect utilities. The one-unit price steps of the auction
/// only decrease the Lyapunov value by exactly one when arithmetic is exact,
/// so floating point types are deliberately not admitted here.
pub trait Scalar:
    PrimInt + Signed + Sum + Hash + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless widening used for error messages and reports.
    fn widen(self) -> i128 {
        self.to_i128()
            .expect("primitive signed integers fit in i128")
    }

    /// Narrowing conversion from a widened value, `None` on overflow.
    fn narrow(value: i128) -> Option<Self> {
        Self::from(value)
    }
}

impl<T> Scalar for T where
    T: PrimInt + Signed + Sum + Hash + Debug + Display + Default + Send + Sync + 'static
{
}
