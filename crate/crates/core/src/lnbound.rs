//! Rational enclosures of natural logarithms.
//!
//! Round counts such as `ceil(c * ln(1/eps))` must never come out too small,
//! so they are computed from a rational interval that provably contains the
//! logarithm and refined until the ceiling is decided.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::measure::{int, Rat};

/// Closed rational interval `[lo, hi]` containing a real number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rat,
    pub hi: Rat,
}

impl Enclosure {
    fn scale(&self, c: &Rat) -> Enclosure {
        let (a, b) = (c * &self.lo, c * &self.hi);
        if a <= b {
            Enclosure { lo: a, hi: b }
        } else {
            Enclosure { lo: b, hi: a }
        }
    }

    fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }
}

/// `2 * atanh(z)` for `0 <= z < 1` using `terms` series terms.
fn two_atanh(z: &Rat, terms: u32) -> Enclosure {
    let z2 = z * z;
    let mut power = z.clone();
    let mut sum = Rat::zero();
    for k in 0..terms {
        sum += &power / int(2 * k as i64 + 1);
        power = &power * &z2;
    }
    let tail = &power / (int(2 * terms as i64 + 1) * (Rat::one() - &z2));
    Enclosure {
        lo: int(2) * &sum,
        hi: int(2) * (sum + tail),
    }
}

/// Enclosure of `ln x` for rational `x > 0`.
pub fn ln_enclosure(x: &Rat, terms: u32) -> Enclosure {
    assert!(x.is_positive(), "logarithm of a nonpositive number");
    let two = int(2);
    let mut y = x.clone();
    let mut e: i64 = 0;
    while y >= two {
        y /= &two;
        e += 1;
    }
    while y < Rat::one() {
        y *= &two;
        e -= 1;
    }
    let z = (&y - Rat::one()) / (&y + Rat::one());
    let frac = two_atanh(&z, terms);
    if e == 0 {
        return frac;
    }
    let ln2 = two_atanh(&Rat::new(BigInt::one(), BigInt::from(3)), terms);
    ln2.scale(&int(e)).add(&frac)
}

fn ceil(r: &Rat) -> BigInt {
    let (q, rem) = r.numer().div_mod_floor(r.denom());
    if rem.is_zero() {
        q
    } else {
        q + 1
    }
}

/// `ceil(coef * ln x)`, exact whenever `coef * ln x` is not an integer.
///
/// `ln x` is irrational for every rational `x != 1`, so the product is an
/// integer only when `coef` or `ln x` vanishes.
pub fn ceil_coef_ln(coef: &Rat, x: &Rat) -> BigInt {
    if coef.is_zero() || x.is_one() {
        return BigInt::zero();
    }
    let mut terms = 8;
    loop {
        let enc = ln_enclosure(x, terms).scale(coef);
        let (a, b) = (ceil(&enc.lo), ceil(&enc.hi));
        if a == b {
            return a;
        }
        terms *= 2;
        assert!(terms < 1 << 16, "logarithm refinement did not converge");
    }
}

/// `ceil(ln a / ln b)` for rationals `a >= 1`, `b > 1`.
pub fn ceil_ln_ratio(a: &Rat, b: &Rat) -> BigInt {
    assert!(*b > Rat::one(), "base must exceed one");
    if a.is_one() {
        return BigInt::zero();
    }
    let mut terms = 8;
    loop {
        let num = ln_enclosure(a, terms);
        let den = ln_enclosure(b, terms);
        let lo = &num.lo / &den.hi;
        let hi = &num.hi / &den.lo;
        let (x, y) = (ceil(&lo), ceil(&hi));
        if x == y {
            return x;
        }
        // An exact integer ratio (a = b^j) never separates; detect it directly.
        if y.clone() - x.clone() == BigInt::one() {
            let j = &x;
            if let Ok(exp) = u32::try_from(j.clone()) {
                if num_traits::pow::pow(b.clone(), exp as usize) == *a {
                    return x;
                }
            }
        }
        terms *= 2;
        assert!(terms < 1 << 16, "logarithm refinement did not converge");
    }
}
