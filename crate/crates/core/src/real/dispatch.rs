use super::{DoubleDouble, Real, Wide};
use crate::Error;

/// Smallest supported precision in decimal digits.
pub const MIN_DIGITS: u32 = 15;
/// Largest supported precision in decimal digits.
pub const MAX_DIGITS: u32 = <Wide<10> as Real>::DIGITS;

/// A computation that can run at any backend precision.
///
/// `with_digits` instantiates `run` with the smallest backend whose
/// guaranteed digit count is at least the requested one.
pub trait PrecisionTask {
    type Output;
    fn run<R: Real>(self) -> Self::Output;
}

pub fn with_digits<T: PrecisionTask>(digits: u32, task: T) -> Result<T::Output, Error> {
    if digits < MIN_DIGITS {
        return Err(Error::UnsupportedPrecision(digits));
    }
    Ok(if digits <= <f64 as Real>::DIGITS {
        task.run::<f64>()
    } else if digits <= DoubleDouble::DIGITS {
        task.run::<DoubleDouble>()
    } else if digits <= Wide::<3>::DIGITS {
        task.run::<Wide<3>>()
    } else if digits <= Wide::<4>::DIGITS {
        task.run::<Wide<4>>()
    } else if digits <= Wide::<6>::DIGITS {
        task.run::<Wide<6>>()
    } else if digits <= Wide::<8>::DIGITS {
        task.run::<Wide<8>>()
    } else if digits <= Wide::<10>::DIGITS {
        task.run::<Wide<10>>()
    } else {
        return Err(Error::UnsupportedPrecision(digits));
    })
}

/// Name of the backend `with_digits` would select.
pub fn backend_name(digits: u32) -> Option<&'static str> {
    struct Name;
    impl PrecisionTask for Name {
        type Output = &'static str;
        fn run<R: Real>(self) -> &'static str {
            R::NAME
        }
    }
    with_digits(digits, Name).ok()
}
