//! Exact rational comparisons against `f64` parameters.
//!
//! Every finite `f64` is a dyadic rational, so thresholds such as
//! `d < eps * p` can be decided without rounding.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Largest integer `d` with `d < x * k`.
pub fn largest_below(x: f64, k: u64) -> i128 {
    let r = rational(x) * BigRational::from_integer(BigInt::from(k));
    let c: BigInt = r.ceil().to_integer();
    (c - BigInt::from(1)).to_i128().expect("bound fits in i128")
}

/// `ceil(1 / x)` for `x > 0`.
pub fn ceil_recip(x: f64) -> u64 {
    let r = rational(x);
    assert!(r.is_positive(), "ceil_recip needs a positive argument");
    r.recip().ceil().to_integer().to_u64().expect("fits in u64")
}

/// `num / den < x`, decided exactly.
pub fn ratio_lt(num: u64, den: u64, x: f64) -> bool {
    assert!(!den.is_zero());
    BigRational::new(BigInt::from(num), BigInt::from(den)) < rational(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_below_is_strict() {
        assert_eq!(largest_below(0.5, 10), 4);
        assert_eq!(largest_below(0.25, 7), 1);
        assert_eq!(largest_below(0.1, 11), 1);
        // 0.1 is slightly above 1/10, so 0.1 * 10 > 1
        assert_eq!(largest_below(0.1, 10), 1);
        assert_eq!(largest_below(0.125, 8), 0);
    }

    #[test]
    fn reciprocal_ceiling() {
        assert_eq!(ceil_recip(0.5), 2);
        assert_eq!(ceil_recip(0.3), 4);
        assert_eq!(ceil_recip(0.25), 4);
        // f64 0.1 exceeds 1/10, so its reciprocal is just under 10
        assert_eq!(ceil_recip(0.1), 10);
    }

    #[test]
    fn ratio_comparison() {
        assert!(ratio_lt(1, 11, 0.1));
        // f64 0.1 is a hair above 1/10
        assert!(ratio_lt(1, 10, 0.1));
        assert!(!ratio_lt(1, 2, 0.5));
    }
}
