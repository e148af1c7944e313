use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use super::{enumerate_region, sort_canonical, sqrt_in_ring, QuadInt};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndecMode {
    /// Norm below delta and content one.
    Sufficient,
    /// Exhaustive search for a decomposition.
    Oracle,
}

/// Some `(b, c)` with `b, c` totally positive and `b + c = a`.
pub fn decompose_oracle(a: &QuadInt) -> Result<Option<(QuadInt, QuadInt)>> {
    if !a.is_totally_positive() {
        return Err(Error::NotTotallyPositive);
    }
    let field = a.field();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let c = a.to_surd().scale(&half);
    let r = c.square();
    // 0 <= b <= a in both embeddings is the ball around a/2 of radius a/2
    let mut cands = enumerate_region(field, &c, &r, &r.conj());
    sort_canonical(&mut cands);
    Ok(cands.into_iter().find_map(|b| {
        let rest = a - &b;
        (b.is_totally_positive() && rest.is_totally_positive()).then_some((b, rest))
    }))
}

pub fn is_indecomposable(a: &QuadInt, mode: IndecMode) -> Result<bool> {
    if !a.is_totally_positive() {
        return Err(Error::NotTotallyPositive);
    }
    match mode {
        IndecMode::Sufficient => {
            let n = a.norm();
            if &n * &n >= *a.field().delta_sq() {
                return Err(Error::PreconditionNotMet(format!(
                    "norm {n} is not below delta"
                )));
            }
            let c = a.content()?;
            if !c.is_one() {
                return Err(Error::PreconditionNotMet(format!("content {c} exceeds 1")));
            }
            Ok(true)
        }
        IndecMode::Oracle => Ok(decompose_oracle(a)?.is_none()),
    }
}

/// A square root in O_K of `a*b`. It exists exactly when `a/b` is a square
/// in K, and then `a = b (y/b)^2`.
pub fn square_class_witness(a: &QuadInt, b: &QuadInt) -> Result<Option<QuadInt>> {
    a.same_field(b)?;
    if a.is_zero() || b.is_zero() {
        return Err(Error::ZeroElement);
    }
    Ok(sqrt_in_ring(&(a * b)))
}

/// Whether `a` and `b` differ by a square factor.
pub fn same_square_class(a: &QuadInt, b: &QuadInt) -> Result<bool> {
    Ok(square_class_witness(a, b)?.is_some())
}
