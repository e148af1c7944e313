use num_bigint::BigInt;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::cmp::Ordering;

use super::{sort_canonical, FieldContext, QuadInt, Surd};
use crate::error::{Error, Result};
use crate::interval::Interval;

/// A bound on the absolute value of an embedding.
#[derive(Debug, Clone)]
pub enum BoxBound {
    /// The bound itself, a nonnegative rational.
    Rational(BigRational),
    /// The bound is the square root of this nonnegative real.
    Sqrt(Surd),
}

impl BoxBound {
    fn squared(&self, d: &BigInt) -> Surd {
        match self {
            BoxBound::Rational(q) => Surd::rational(q * q, d),
            BoxBound::Sqrt(s) => s.clone(),
        }
    }
}

/// All `g` in O_K with `|g| <= B1` and `|g'| <= B2`, canonically sorted.
pub fn enumerate_box(field: &FieldContext, b1: &BoxBound, b2: &BoxBound) -> Vec<QuadInt> {
    let d = field.d();
    if let BoxBound::Rational(q) = b1 {
        if q < &BigRational::zero() {
            return Vec::new();
        }
    }
    if let BoxBound::Rational(q) = b2 {
        if q < &BigRational::zero() {
            return Vec::new();
        }
    }
    let mut v = enumerate_region(field, &Surd::zero(d), &b1.squared(d), &b2.squared(d));
    sort_canonical(&mut v);
    v
}

fn omega_surds(field: &FieldContext) -> (Surd, Surd) {
    let d = field.d();
    if field.one_mod_4() {
        let h = BigRational::new(BigInt::one(), BigInt::from(2));
        let w = Surd::new(h.clone(), h, d.clone());
        (w.clone(), w.conj())
    } else {
        let w = Surd::new(BigRational::zero(), BigRational::one(), d.clone());
        (w.clone(), w.conj())
    }
}

fn sqrt_nonneg(s: &Surd, prec: u32) -> Interval {
    let mut iv = s.to_interval(prec);
    if iv.lo < BigInt::zero() {
        iv.lo = BigInt::zero();
    }
    if iv.hi < BigInt::zero() {
        iv.hi = BigInt::zero();
    }
    iv.sqrt()
}

/// All `z` in O_K with `(z - c)^2 <= r1` in the first embedding and
/// `(z' - c')^2 <= r2` in the second. `c` is a field element given as a
/// surd over D; `r1`, `r2` are arbitrary reals in `Q(sqrt D)`.
///
/// Sorted by the `omega` coordinate, then the rational one.
pub fn enumerate_region(field: &FieldContext, c: &Surd, r1: &Surd, r2: &Surd) -> Vec<QuadInt> {
    if r1.sign() == Ordering::Less || r2.sign() == Ordering::Less {
        return Vec::new();
    }
    let d = field.d();
    let prec = 64 + c.magnitude_bits().max(r1.magnitude_bits()).max(r2.magnitude_bits()) + d.bits() as u32;
    let (w1, w2) = omega_surds(field);
    let w1i = w1.to_interval(prec);
    let w2i = w2.to_interval(prec);
    let c1 = c.to_interval(prec);
    let c2 = c.conj().to_interval(prec);
    let s1 = sqrt_nonneg(r1, prec);
    let s2 = sqrt_nonneg(r2, prec);
    let i1 = Interval { lo: &c1.lo - &s1.hi, hi: &c1.hi + &s1.hi, prec };
    let i2 = Interval { lo: &c2.lo - &s2.hi, hi: &c2.hi + &s2.hi, prec };

    let emb = |z: &(BigInt, BigInt), w: &Interval| Interval::from_int(&z.0, prec).add(&w.mul_int(&z.1));
    let standard = ((BigInt::one(), BigInt::zero()), (BigInt::zero(), BigInt::one()));
    let mut basis = reduced_basis(&w1i, &w2i, &s1, &s2, prec);
    let nonzero = |iv: &Interval| iv.is_positive() || iv.is_negative();
    if ![emb(&basis.0, &w1i), emb(&basis.0, &w2i)].iter().all(nonzero) {
        basis = standard;
    }
    let (e, f) = basis;
    let p1 = emb(&e, &w1i);
    let p2 = emb(&e, &w2i);
    let q1 = emb(&f, &w1i);
    let q2 = emb(&f, &w2i);
    // z = a e + b f; eliminate a
    let det = p1.mul(&q2).sub(&p2.mul(&q1));
    let bs = p1.mul(&i2).sub(&p2.mul(&i1)).div(&det);
    let mut out = Vec::new();
    let mut b = bs.floor_lo();
    let bhi = bs.ceil_hi();
    while b <= bhi {
        let a1 = i1.sub(&q1.mul_int(&b)).div(&p1);
        let a2 = i2.sub(&q2.mul_int(&b)).div(&p2);
        let mut a = a1.floor_lo().max(a2.floor_lo());
        let ahi = a1.ceil_hi().min(a2.ceil_hi());
        while a <= ahi {
            let z = field.elem(&a * &e.0 + &b * &f.0, &a * &e.1 + &b * &f.1);
            let w = z.to_surd().sub(c);
            if r1.sub(&w.square()).sign() != Ordering::Less
                && r2.sub(&w.conj().square()).sign() != Ordering::Less
            {
                out.push(z);
            }
            a += 1;
        }
        b += 1;
    }
    out.sort_by(|a, b| a.y.cmp(&b.y).then(a.x.cmp(&b.x)));
    out
}

type Coords = (BigInt, BigInt);

/// Lagrange reduction of O_K embedded as `(z/s1, z'/s2)`, in fixed point.
/// Returns the coordinates of the new basis in `{1, omega}`.
fn reduced_basis(w1: &Interval, w2: &Interval, s1: &Interval, s2: &Interval, prec: u32) -> (Coords, Coords) {
    let mid = |iv: &Interval| (&iv.lo + &iv.hi) >> 1usize;
    let one = BigInt::one() << prec as usize;
    let scale = |iv: &Interval| {
        let m = mid(iv);
        if m < BigInt::one() { BigInt::one() } else { m }
    };
    let (t1, t2) = (scale(s1), scale(s2));
    let (m1, m2) = (mid(w1), mid(w2));
    let vec_of = |z: &Coords| {
        let e1 = &z.0 * &one + &z.1 * &m1;
        let e2 = &z.0 * &one + &z.1 * &m2;
        ((e1 << prec as usize) / &t1, (e2 << prec as usize) / &t2)
    };
    let dot = |u: &Coords, v: &Coords| -> BigInt { &u.0 * &v.0 + &u.1 * &v.1 };
    let mut zu: Coords = (BigInt::one(), BigInt::zero());
    let mut zv: Coords = (BigInt::zero(), BigInt::one());
    let mut u = vec_of(&zu);
    let mut v = vec_of(&zv);
    if dot(&u, &u) > dot(&v, &v) {
        std::mem::swap(&mut zu, &mut zv);
        std::mem::swap(&mut u, &mut v);
    }
    for _ in 0..256 {
        let uu: BigInt = dot(&u, &u);
        if uu.is_zero() {
            break;
        }
        let uv: BigInt = dot(&u, &v);
        let two_uu: BigInt = &uu * 2;
        let num: BigInt = uv * 2 + &uu;
        let mu = num.div_floor(&two_uu);
        if mu.is_zero() {
            break;
        }
        zv = (&zv.0 - &mu * &zu.0, &zv.1 - &mu * &zu.1);
        v = vec_of(&zv);
        if dot(&v, &v) >= dot(&u, &u) {
            break;
        }
        std::mem::swap(&mut zu, &mut zv);
        std::mem::swap(&mut u, &mut v);
    }
    (zu, zv)
}

/// All `c` in O_K with `g - c^2` totally positive; always contains 0.
pub fn enumerate_dominated_squares(g: &QuadInt) -> Result<Vec<QuadInt>> {
    if !g.is_totally_positive() {
        return Err(Error::NotTotallyPositive);
    }
    let field = g.field();
    let s = g.to_surd();
    let mut v: Vec<QuadInt> = enumerate_region(field, &Surd::zero(field.d()), &s, &s.conj())
        .into_iter()
        .filter(|c| g.succ(&c.square()))
        .collect();
    sort_canonical(&mut v);
    Ok(v)
}
