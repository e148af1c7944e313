//! Dyadic interval enclosures `[lo, hi] * 2^-prec` with outward rounding.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: BigInt,
    pub hi: BigInt,
    pub prec: u32,
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

impl Interval {
    pub fn from_int(n: &BigInt, prec: u32) -> Self {
        let v = n << prec as usize;
        Interval { lo: v.clone(), hi: v, prec }
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        Self::from_int(&BigInt::from(n), prec)
    }

    pub fn from_rational(r: &BigRational, prec: u32) -> Self {
        let num = r.numer() << prec as usize;
        Interval {
            lo: num.div_floor(r.denom()),
            hi: ceil_div(&num, r.denom()),
            prec,
        }
    }

    /// Enclosure of the square root of a nonnegative integer.
    pub fn sqrt_int(n: &BigInt, prec: u32) -> Self {
        assert!(!n.is_negative());
        let scaled: BigInt = n << (2 * prec as usize);
        let lo = scaled.sqrt();
        let hi = if &lo * &lo == scaled { lo.clone() } else { &lo + 1 };
        Interval { lo, hi, prec }
    }

    /// Enclosure of the square root of a nonnegative interval.
    pub fn sqrt(&self) -> Self {
        assert!(!self.lo.is_negative(), "sqrt of an interval reaching below zero");
        let lo_s: BigInt = &self.lo << self.prec as usize;
        let hi_s: BigInt = &self.hi << self.prec as usize;
        let lo = lo_s.sqrt();
        let r = hi_s.sqrt();
        let hi = if &r * &r == hi_s { r } else { r + 1 };
        Interval { lo, hi, prec: self.prec }
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.prec, other.prec, "interval precision mismatch");
    }

    pub fn add(&self, o: &Self) -> Self {
        self.check(o);
        Interval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi, prec: self.prec }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.check(o);
        Interval { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo, prec: self.prec }
    }

    pub fn neg(&self) -> Self {
        Interval { lo: -&self.hi, hi: -&self.lo, prec: self.prec }
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.check(o);
        let ps = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let mn = ps.iter().min().unwrap();
        let mx = ps.iter().max().unwrap();
        let one = BigInt::one() << self.prec as usize;
        Interval { lo: mn.div_floor(&one), hi: ceil_div(mx, &one), prec: self.prec }
    }

    pub fn mul_int(&self, n: &BigInt) -> Self {
        let a = &self.lo * n;
        let b = &self.hi * n;
        if n.is_negative() {
            Interval { lo: b, hi: a, prec: self.prec }
        } else {
            Interval { lo: a, hi: b, prec: self.prec }
        }
    }

    /// Division; panics when the divisor contains zero.
    pub fn div(&self, o: &Self) -> Self {
        self.check(o);
        assert!(o.is_positive() || o.is_negative(), "division by an interval containing zero");
        let s = self.prec as usize;
        let num = [&self.lo << s, &self.hi << s];
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for a in &num {
            for b in [&o.lo, &o.hi] {
                let f = a.div_floor(b);
                let c = ceil_div(a, b);
                lo = Some(match lo { Some(l) if l < f => l, _ => f });
                hi = Some(match hi { Some(h) if h > c => h, _ => c });
            }
        }
        Interval { lo: lo.unwrap(), hi: hi.unwrap(), prec: self.prec }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Interval::from_i64(1, self.prec);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn abs(&self) -> Self {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            let m = if -&self.lo > self.hi { -&self.lo } else { self.hi.clone() };
            Interval { lo: BigInt::zero(), hi: m, prec: self.prec }
        }
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.hi.is_negative()
    }

    /// Strict comparison when the enclosures separate.
    pub fn cmp_strict(&self, o: &Self) -> Option<Ordering> {
        self.check(o);
        if self.hi < o.lo {
            Some(Ordering::Less)
        } else if self.lo > o.hi {
            Some(Ordering::Greater)
        } else {
            None
        }
    }

    pub fn contains_rational(&self, r: &BigRational) -> bool {
        let scale = BigRational::from_integer(BigInt::one() << self.prec as usize);
        let v = r * scale;
        BigRational::from_integer(self.lo.clone()) <= v && v <= BigRational::from_integer(self.hi.clone())
    }

    pub fn lo_f64(&self) -> f64 {
        scaled_to_f64(&self.lo, self.prec)
    }

    pub fn hi_f64(&self) -> f64 {
        scaled_to_f64(&self.hi, self.prec)
    }

    pub fn mid_f64(&self) -> f64 {
        (self.lo_f64() + self.hi_f64()) / 2.0
    }

    pub fn lo_rational(&self) -> BigRational {
        BigRational::new(self.lo.clone(), BigInt::one() << self.prec as usize)
    }

    pub fn hi_rational(&self) -> BigRational {
        BigRational::new(self.hi.clone(), BigInt::one() << self.prec as usize)
    }

    /// Floor of the lower endpoint.
    pub fn floor_lo(&self) -> BigInt {
        self.lo.div_floor(&(BigInt::one() << self.prec as usize))
    }

    /// Ceiling of the upper endpoint.
    pub fn ceil_hi(&self) -> BigInt {
        ceil_div(&self.hi, &(BigInt::one() << self.prec as usize))
    }
}

fn scaled_to_f64(v: &BigInt, prec: u32) -> f64 {
    let bits = v.bits();
    if bits > 1000 {
        let shift = bits - 900;
        let r = (v >> shift as usize).to_f64().unwrap_or(f64::NAN);
        r * 2f64.powi(shift as i32 - prec as i32)
    } else {
        v.to_f64().unwrap_or(f64::NAN) / 2f64.powi(prec as i32)
    }
}

/// Sign of a real quantity given by enclosures at increasing precision.
/// `None` means the enclosures never excluded zero up to `max_prec`.
pub fn decide_sign<F>(f: F, start_prec: u32, max_prec: u32) -> Option<Ordering>
where
    F: Fn(u32) -> Interval,
{
    let mut p = start_prec.max(8);
    loop {
        let iv = f(p);
        if iv.is_positive() {
            return Some(Ordering::Greater);
        }
        if iv.is_negative() {
            return Some(Ordering::Less);
        }
        if p >= max_prec {
            return None;
        }
        p = (p * 2).min(max_prec);
    }
}
