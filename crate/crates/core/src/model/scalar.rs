use num_rational::BigRational;
use num_traits::{One, Zero};

/// Numeric carrier for tree evaluation: `f64` for estimation, `BigRational`
/// for exact moment computation over finite supports.
pub trait Scalar: Clone + PartialOrd {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    /// `self > t`
    fn exceeds(&self, t: f64) -> bool;
    /// `self < t`
    fn below(&self, t: f64) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn exceeds(&self, t: f64) -> bool {
        *self > t
    }
    fn below(&self, t: f64) -> bool {
        *self < t
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn exceeds(&self, t: f64) -> bool {
        if t.is_nan() || t == f64::INFINITY {
            return false;
        }
        if t == f64::NEG_INFINITY {
            return true;
        }
        *self > exact(t)
    }
    fn below(&self, t: f64) -> bool {
        if t.is_nan() || t == f64::NEG_INFINITY {
            return false;
        }
        if t == f64::INFINITY {
            return true;
        }
        *self < exact(t)
    }
}

/// Exact binary value of a finite float as a rational.
pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn to_f64(q: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}
