//! Real quadratic fields `Q(sqrt D)` and their rings of integers.

mod boxenum;
mod certificate;
mod generators;
mod order;
pub mod surd;

pub use boxenum::{enumerate_box, enumerate_dominated_squares, enumerate_region, BoxBound};
pub use certificate::{check_prop24, Certificate, CheckRecord, Cond4Mode, Verdict};
pub use generators::small_norm_generators;
pub use order::{
    decompose_oracle, is_indecomposable, same_square_class, square_class_witness, IndecMode,
};
pub use surd::Surd;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::arith::{is_squarefree, sqrt_exact, Effort, Squarefree};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DiscClass {
    /// D = 1 mod 4, omega = (1 + sqrt D)/2.
    #[serde(rename = "1")]
    One,
    /// D = 2, 3 mod 4, omega = sqrt D.
    #[serde(rename = "2,3")]
    TwoThree,
}

#[derive(Debug)]
struct FieldData {
    d: BigInt,
    disc_class: DiscClass,
    delta_sq: BigInt,
    /// (D - 1)/4 when D = 1 mod 4, else D; omega^2 = [omega +] m.
    m: BigInt,
}

/// The field `Q(sqrt D)` with its integral basis `{1, omega}`.
#[derive(Debug, Clone)]
pub struct FieldContext(Arc<FieldData>);

impl PartialEq for FieldContext {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.d == other.0.d
    }
}

impl Eq for FieldContext {}

impl Hash for FieldContext {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.d.hash(state);
    }
}

impl Serialize for FieldContext {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("FieldContext", 4)?;
        st.serialize_field("D", &self.0.d.to_string())?;
        st.serialize_field("disc_class", &self.0.disc_class)?;
        st.serialize_field("delta_sq", &self.0.delta_sq.to_string())?;
        st.serialize_field("omega", self.omega_descr())?;
        st.end()
    }
}

/// Builds `Q(sqrt D)`; `D` must be squarefree and at least 2.
pub fn make_field(d: &BigInt) -> Result<FieldContext> {
    make_field_with(d, &Effort::default())
}

pub fn make_field_with(d: &BigInt, effort: &Effort) -> Result<FieldContext> {
    if d < &BigInt::from(2) {
        return Err(Error::OutOfRange(format!("D = {d} must be at least 2")));
    }
    match is_squarefree(d, effort)? {
        Squarefree::Yes => {}
        Squarefree::No => return Err(Error::NotSquarefree(d.clone())),
        Squarefree::Unresolved => return Err(Error::SquarefreeUnresolved(d.clone())),
    }
    Ok(field_unchecked(d))
}

/// Field context without the squarefree check. Used for diagnostics and for
/// values already known to be squarefree.
pub fn field_unchecked(d: &BigInt) -> FieldContext {
    let one_mod_4 = d.mod_floor(&BigInt::from(4)).is_one();
    let (disc_class, delta_sq, m) = if one_mod_4 {
        (DiscClass::One, d.clone(), (d - 1) / 4)
    } else {
        (DiscClass::TwoThree, d * 4, d.clone())
    };
    FieldContext(Arc::new(FieldData {
        d: d.clone(),
        disc_class,
        delta_sq,
        m,
    }))
}

impl FieldContext {
    pub fn d(&self) -> &BigInt {
        &self.0.d
    }

    pub fn disc_class(&self) -> DiscClass {
        self.0.disc_class
    }

    pub fn one_mod_4(&self) -> bool {
        self.0.disc_class == DiscClass::One
    }

    /// The square of the indecomposability threshold delta.
    pub fn delta_sq(&self) -> &BigInt {
        &self.0.delta_sq
    }

    /// Field discriminant: D or 4D.
    pub fn discriminant(&self) -> BigInt {
        self.0.delta_sq.clone()
    }

    pub fn omega_descr(&self) -> &'static str {
        match self.0.disc_class {
            DiscClass::One => "(1+sqrt(D))/2",
            DiscClass::TwoThree => "sqrt(D)",
        }
    }

    pub fn elem(&self, x: impl Into<BigInt>, y: impl Into<BigInt>) -> QuadInt {
        QuadInt {
            field: self.clone(),
            x: x.into(),
            y: y.into(),
        }
    }

    pub fn int(&self, n: impl Into<BigInt>) -> QuadInt {
        self.elem(n, 0)
    }

    pub fn zero(&self) -> QuadInt {
        self.int(0)
    }

    pub fn one(&self) -> QuadInt {
        self.int(1)
    }

    pub fn omega(&self) -> QuadInt {
        self.elem(0, 1)
    }

    /// `a + b*sqrt(D)` for integers a, b.
    pub fn from_sqrt_coords(&self, a: impl Into<BigInt>, b: impl Into<BigInt>) -> QuadInt {
        let (a, b) = (a.into(), b.into());
        match self.0.disc_class {
            DiscClass::One => self.elem(&a - &b, &b * 2),
            DiscClass::TwoThree => self.elem(a, b),
        }
    }

    /// `(a + b*sqrt(D))/2` when it lies in the ring of integers.
    pub fn from_doubled(&self, a: &BigInt, b: &BigInt) -> Option<QuadInt> {
        let two = BigInt::from(2);
        match self.0.disc_class {
            DiscClass::One => {
                if (a - b).is_odd() {
                    return None;
                }
                Some(self.elem((a - b) / &two, b.clone()))
            }
            DiscClass::TwoThree => {
                if a.is_odd() || b.is_odd() {
                    return None;
                }
                Some(self.elem(a / &two, b / &two))
            }
        }
    }

    /// The element of O_K equal to a field element given as a surd over D.
    pub fn from_surd(&self, s: &Surd) -> Option<QuadInt> {
        assert_eq!(&s.r, self.d());
        let a2 = &s.a * BigRational::from_integer(BigInt::from(2));
        let b2 = &s.b * BigRational::from_integer(BigInt::from(2));
        if !a2.is_integer() || !b2.is_integer() {
            return None;
        }
        self.from_doubled(&a2.to_integer(), &b2.to_integer())
    }

    pub fn surd(&self, a: BigRational, b: BigRational) -> Surd {
        Surd::new(a, b, self.d().clone())
    }

    pub fn surd_rational(&self, a: BigRational) -> Surd {
        Surd::rational(a, self.d())
    }
}

/// An element `x + y*omega` of O_K.
#[derive(Clone)]
pub struct QuadInt {
    field: FieldContext,
    pub x: BigInt,
    pub y: BigInt,
}

impl PartialEq for QuadInt {
    fn eq(&self, other: &Self) -> bool {
        self.x == other.x && self.y == other.y && self.field == other.field
    }
}

impl Eq for QuadInt {}

impl Hash for QuadInt {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.x.hash(state);
        self.y.hash(state);
    }
}

impl fmt::Debug for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.y.is_zero() {
            write!(f, "{}", self.x)
        } else if self.y.is_negative() {
            write!(f, "{}-{}w", self.x, -&self.y)
        } else {
            write!(f, "{}+{}w", self.x, self.y)
        }
    }
}

impl Serialize for QuadInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x.to_string(), self.y.to_string()].serialize(s)
    }
}

impl QuadInt {
    pub fn field(&self) -> &FieldContext {
        &self.field
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.y.is_zero()
    }

    pub fn same_field(&self, other: &QuadInt) -> Result<()> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(Error::MixedFields)
        }
    }

    pub fn conjugate(&self) -> QuadInt {
        match self.field.0.disc_class {
            DiscClass::One => self.field.elem(&self.x + &self.y, -&self.y),
            DiscClass::TwoThree => self.field.elem(self.x.clone(), -&self.y),
        }
    }

    pub fn norm(&self) -> BigInt {
        let m = &self.field.0.m;
        match self.field.0.disc_class {
            DiscClass::One => &self.x * &self.x + &self.x * &self.y - &self.y * &self.y * m,
            DiscClass::TwoThree => &self.x * &self.x - &self.y * &self.y * m,
        }
    }

    pub fn trace(&self) -> BigInt {
        match self.field.0.disc_class {
            DiscClass::One => &self.x * 2 + &self.y,
            DiscClass::TwoThree => &self.x * 2,
        }
    }

    /// `(A, B)` with the element equal to `(A + B*sqrt(D))/2`.
    pub fn doubled_coords(&self) -> (BigInt, BigInt) {
        match self.field.0.disc_class {
            DiscClass::One => (&self.x * 2 + &self.y, self.y.clone()),
            DiscClass::TwoThree => (&self.x * 2, &self.y * 2),
        }
    }

    /// First real embedding as an exact surd over D.
    pub fn to_surd(&self) -> Surd {
        let (a, b) = self.doubled_coords();
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        Surd::new(
            BigRational::from_integer(a) * &half,
            BigRational::from_integer(b) * &half,
            self.field.d().clone(),
        )
    }

    /// Sign of the first (`conj = false`) or second real embedding.
    pub fn embedding_sign(&self, conj: bool) -> Ordering {
        let (a, b) = self.doubled_coords();
        let b = if conj { -b } else { b };
        let sa = a.sign();
        let sb = b.sign();
        use num_bigint::Sign::*;
        match (sa, sb) {
            (NoSign, NoSign) => Ordering::Equal,
            (Plus, NoSign) | (NoSign, Plus) | (Plus, Plus) => Ordering::Greater,
            (Minus, NoSign) | (NoSign, Minus) | (Minus, Minus) => Ordering::Less,
            _ => {
                let lhs = &a * &a;
                let rhs = &b * &b * self.field.d();
                match lhs.cmp(&rhs) {
                    Ordering::Equal => Ordering::Equal,
                    Ordering::Greater => {
                        if sa == Plus {
                            Ordering::Greater
                        } else {
                            Ordering::Less
                        }
                    }
                    Ordering::Less => {
                        if sb == Plus {
                            Ordering::Greater
                        } else {
                            Ordering::Less
                        }
                    }
                }
            }
        }
    }

    pub fn is_totally_positive(&self) -> bool {
        self.trace().is_positive() && self.norm().is_positive()
    }

    /// `self - other` totally positive.
    pub fn succ(&self, other: &QuadInt) -> bool {
        (self - other).is_totally_positive()
    }

    /// Largest rational integer dividing the element.
    pub fn content(&self) -> Result<BigInt> {
        if self.is_zero() {
            return Err(Error::ZeroElement);
        }
        Ok(self.x.gcd(&self.y))
    }

    pub fn checked_add(&self, o: &QuadInt) -> Result<QuadInt> {
        self.same_field(o)?;
        Ok(self.field.elem(&self.x + &o.x, &self.y + &o.y))
    }

    pub fn checked_sub(&self, o: &QuadInt) -> Result<QuadInt> {
        self.same_field(o)?;
        Ok(self.field.elem(&self.x - &o.x, &self.y - &o.y))
    }

    pub fn checked_mul(&self, o: &QuadInt) -> Result<QuadInt> {
        self.same_field(o)?;
        let m = &self.field.0.m;
        let yy = &self.y * &o.y;
        Ok(match self.field.0.disc_class {
            DiscClass::One => self.field.elem(
                &self.x * &o.x + &yy * m,
                &self.x * &o.y + &self.y * &o.x + &yy,
            ),
            DiscClass::TwoThree => {
                self.field.elem(&self.x * &o.x + &yy * m, &self.x * &o.y + &self.y * &o.x)
            }
        })
    }

    pub fn scale(&self, n: &BigInt) -> QuadInt {
        self.field.elem(&self.x * n, &self.y * n)
    }

    pub fn pow(&self, e: u32) -> QuadInt {
        let mut acc = self.field.one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn square(&self) -> QuadInt {
        self * self
    }

    /// Exact quotient `self / o` when it lies in O_K.
    pub fn div_exact(&self, o: &QuadInt) -> Result<Option<QuadInt>> {
        self.same_field(o)?;
        if o.is_zero() {
            return Err(Error::ZeroElement);
        }
        let n = o.norm();
        let num = self * &o.conjugate();
        if num.x.is_multiple_of(&n) && num.y.is_multiple_of(&n) {
            Ok(Some(self.field.elem(&num.x / &n, &num.y / &n)))
        } else {
            Ok(None)
        }
    }

    pub fn div_int_exact(&self, n: &BigInt) -> Option<QuadInt> {
        if n.is_zero() || !self.x.is_multiple_of(n) || !self.y.is_multiple_of(n) {
            return None;
        }
        Some(self.field.elem(&self.x / n, &self.y / n))
    }

    /// Canonical order: coefficient of sqrt(D) first, then rational part.
    pub fn canonical_cmp(&self, o: &QuadInt) -> Ordering {
        let (a1, b1) = self.doubled_coords();
        let (a2, b2) = o.doubled_coords();
        b1.cmp(&b2).then(a1.cmp(&a2))
    }

    /// Approximate embeddings, for display only.
    pub fn embeddings_f64(&self) -> (f64, f64) {
        let s = self.to_surd();
        (s.to_f64(), s.conj().to_f64())
    }
}

pub fn sort_canonical(v: &mut [QuadInt]) {
    v.sort_by(|a, b| a.canonical_cmp(b));
}

/// The integer square root of an element of O_K, if it is a square.
pub fn sqrt_in_ring(a: &QuadInt) -> Option<QuadInt> {
    let f = a.field();
    let s = a.to_surd();
    let n = a.norm();
    let rn = sqrt_exact(&n)?;
    let two = BigRational::from_integer(BigInt::from(2));
    let d = BigRational::from_integer(f.d().clone());
    for nn in [rn.clone(), -rn] {
        let nn = BigRational::from_integer(nn);
        let e2 = (&s.a + &nn) / &two;
        let f2 = (&s.a - &nn) / (&two * &d);
        let (Some(e), Some(g)) = (rational_sqrt(&e2), rational_sqrt(&f2)) else {
            continue;
        };
        let g = if (&e * &g * &two) == s.b { g } else { -g };
        if &e * &g * &two != s.b {
            continue;
        }
        if let Some(r) = f.from_surd(&f.surd(e, g)) {
            return Some(r);
        }
    }
    None
}

pub(crate) fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let n = sqrt_exact(q.numer())?;
    let d = sqrt_exact(q.denom())?;
    Some(BigRational::new(n, d))
}

macro_rules! binop {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl<'a> $tr<&'a QuadInt> for &'a QuadInt {
            type Output = QuadInt;
            fn $m(self, o: &'a QuadInt) -> QuadInt {
                self.$checked(o).expect("arithmetic on elements of different fields")
            }
        }
        impl $tr<QuadInt> for QuadInt {
            type Output = QuadInt;
            fn $m(self, o: QuadInt) -> QuadInt {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a QuadInt> for QuadInt {
            type Output = QuadInt;
            fn $m(self, o: &'a QuadInt) -> QuadInt {
                (&self).$m(o)
            }
        }
        impl<'a> $tr<QuadInt> for &'a QuadInt {
            type Output = QuadInt;
            fn $m(self, o: QuadInt) -> QuadInt {
                self.$m(&o)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Neg for &QuadInt {
    type Output = QuadInt;
    fn neg(self) -> QuadInt {
        self.field.elem(-&self.x, -&self.y)
    }
}

impl Neg for QuadInt {
    type Output = QuadInt;
    fn neg(self) -> QuadInt {
        -&self
    }
}
