//! Exact real numbers of the form `a + b*sqrt(r)` with rational `a`, `b`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;

use crate::interval::Interval;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Surd {
    pub a: BigRational,
    pub b: BigRational,
    pub r: BigInt,
}

fn rat(n: BigInt) -> BigRational {
    BigRational::from_integer(n)
}

impl Surd {
    pub fn new(a: BigRational, b: BigRational, r: BigInt) -> Self {
        debug_assert!(!r.is_negative());
        Surd { a, b, r }
    }

    pub fn rational(a: BigRational, r: &BigInt) -> Self {
        Surd { a, b: BigRational::zero(), r: r.clone() }
    }

    pub fn int(a: BigInt, r: &BigInt) -> Self {
        Self::rational(rat(a), r)
    }

    pub fn zero(r: &BigInt) -> Self {
        Self::rational(BigRational::zero(), r)
    }

    pub fn one(r: &BigInt) -> Self {
        Self::rational(BigRational::one(), r)
    }

    fn same(&self, o: &Self) {
        assert_eq!(self.r, o.r, "surds with different radicands");
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        self.same(o);
        Surd { a: &self.a + &o.a, b: &self.b + &o.b, r: self.r.clone() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.same(o);
        Surd { a: &self.a - &o.a, b: &self.b - &o.b, r: self.r.clone() }
    }

    pub fn neg(&self) -> Self {
        Surd { a: -&self.a, b: -&self.b, r: self.r.clone() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.same(o);
        let rr = rat(self.r.clone());
        Surd {
            a: &self.a * &o.a + &self.b * &o.b * rr,
            b: &self.a * &o.b + &self.b * &o.a,
            r: self.r.clone(),
        }
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        Surd { a: &self.a * q, b: &self.b * q, r: self.r.clone() }
    }

    pub fn square(&self) -> Self {
        self.mul(self)
    }

    /// Galois conjugate `a - b*sqrt(r)`.
    pub fn conj(&self) -> Self {
        Surd { a: self.a.clone(), b: -&self.b, r: self.r.clone() }
    }

    /// `a^2 - r*b^2`.
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - &self.b * &self.b * rat(self.r.clone())
    }

    /// Multiplicative inverse; `None` when the norm vanishes.
    pub fn recip(&self) -> Option<Self> {
        let n = self.norm();
        if n.is_zero() {
            return None;
        }
        Some(self.conj().scale(&n.recip()))
    }

    pub fn div(&self, o: &Self) -> Option<Self> {
        o.recip().map(|inv| self.mul(&inv))
    }

    /// Exact sign of the real number.
    pub fn sign(&self) -> Ordering {
        let sa = self.a.cmp(&BigRational::zero());
        let sb = if self.r.is_zero() {
            Ordering::Equal
        } else {
            self.b.cmp(&BigRational::zero())
        };
        match (sa, sb) {
            (x, Ordering::Equal) => x,
            (Ordering::Equal, y) => y,
            (x, y) if x == y => x,
            (x, _) => {
                // opposite signs: compare a^2 with b^2 r
                let lhs = &self.a * &self.a;
                let rhs = &self.b * &self.b * rat(self.r.clone());
                match lhs.cmp(&rhs) {
                    Ordering::Greater => x,
                    Ordering::Less => x.reverse(),
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.sign() == Ordering::Less
    }

    pub fn cmp_value(&self, o: &Self) -> Ordering {
        self.sub(o).sign()
    }

    /// `(P + Q*sqrt(r)) / L` with integers and `L > 0`.
    fn integral_form(&self) -> (BigInt, BigInt, BigInt) {
        let l = self.a.denom().lcm(self.b.denom());
        let p = self.a.numer() * (&l / self.a.denom());
        let q = self.b.numer() * (&l / self.b.denom());
        (p, q, l)
    }

    /// Exact floor.
    pub fn floor(&self) -> BigInt {
        let (p, q, l) = self.integral_form();
        let m = &q * &q * &self.r;
        let s = m.sqrt();
        let top = if !q.is_negative() {
            p + s
        } else if &s * &s == m {
            p - s
        } else {
            p - s - 1
        };
        top.div_floor(&l)
    }

    pub fn ceil(&self) -> BigInt {
        -self.neg().floor()
    }

    /// Enclosure of the value at `prec` fractional bits.
    pub fn to_interval(&self, prec: u32) -> Interval {
        let a = Interval::from_rational(&self.a, prec);
        if self.b.is_zero() || self.r.is_zero() {
            return a;
        }
        let b = Interval::from_rational(&self.b, prec);
        a.add(&b.mul(&Interval::sqrt_int(&self.r, prec)))
    }

    /// Enclosure with enough fractional bits that the value's magnitude does
    /// not swamp the rounding error.
    pub fn to_interval_auto(&self, extra: u32) -> Interval {
        self.to_interval(self.magnitude_bits() + extra)
    }

    /// Rough bit size of the defining data.
    pub fn magnitude_bits(&self) -> u32 {
        let bits = [
            self.a.numer().bits(),
            self.a.denom().bits(),
            self.b.numer().bits(),
            self.b.denom().bits(),
            self.r.bits(),
        ];
        bits.iter().copied().max().unwrap_or(0) as u32
    }

    pub fn to_f64(&self) -> f64 {
        self.to_interval(64).mid_f64()
    }
}
