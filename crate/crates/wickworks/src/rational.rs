//! Arbitrary-precision rationals and the integer combinatorics used everywhere.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Reduced fraction with positive denominator.
pub type Rational = BigRational;

pub fn ri(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rq(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rbig(n: BigInt) -> Rational {
    Rational::from_integer(n)
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// (n−1)!! for even n, zero for odd n. This is E[X^n] for a standard normal X.
pub fn gaussian_moment(n: usize) -> BigInt {
    if n % 2 == 1 {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    let mut k = 1;
    while k < n {
        acc *= BigInt::from(k);
        k += 2;
    }
    acc
}

pub fn rpow(x: &Rational, e: usize) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Multi-index factorial k! = Π k_i!.
pub fn multi_factorial(k: &[usize]) -> BigInt {
    k.iter().fold(BigInt::one(), |acc, &ki| acc * factorial(ki))
}
