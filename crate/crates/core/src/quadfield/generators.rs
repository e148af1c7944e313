use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::{FieldContext, QuadInt, Surd};
use crate::arith::{is_squarefree_u64, kronecker, sqrt_exact};
use crate::cfrac::fundamental_unit;
use crate::error::{Error, Result};

/// Generator of the totally positive unit group.
fn totally_positive_unit(field: &FieldContext) -> QuadInt {
    let (eps, norm) = fundamental_unit(field);
    if norm < 0 {
        eps.square()
    } else {
        eps
    }
}

fn sigma1_sq_cmp(z: &QuadInt, n: &BigRational) -> Ordering {
    z.to_surd().square().sub(&Surd::rational(n.clone(), z.field().d())).sign()
}

/// Moves a totally positive `z` of norm `n` into the window
/// `sqrt(n) <= z < sqrt(n) * u` of the first embedding.
fn normalize(z: QuadInt, n: &BigInt, u: &QuadInt) -> QuadInt {
    let u_inv = u.conjugate();
    let lo = BigRational::from_integer(n.clone());
    let us = u.to_surd();
    let hi = us.square().scale(&lo);
    let mut z = z;
    while z.to_surd().square().sub(&hi).sign() != Ordering::Less {
        z = &z * &u_inv;
    }
    while sigma1_sq_cmp(&z, &lo) == Ordering::Less {
        z = &z * u;
    }
    z
}

/// All totally positive elements of norm `n` in the normalization window.
fn window_elements(field: &FieldContext, n: &BigInt, u: &QuadInt) -> Vec<QuadInt> {
    let d = field.d();
    // B = (z - z')/sqrt(D) lies in (-sqrt(n/D), sqrt(n) * u / sqrt(D))
    let us = u.to_surd();
    let bmax_sq = us.square().scale(&BigRational::new(n.clone(), d.clone()));
    let bmax = bmax_sq.to_interval_auto(16).ceil_hi().sqrt() + 2;
    let nd: BigInt = n / d;
    let bmin: BigInt = -(nd.sqrt() + BigInt::from(2));
    let mut out = Vec::new();
    let mut b = bmin;
    let four_n = n * 4;
    while b <= bmax {
        let a2 = &b * &b * d + &four_n;
        if let Some(a) = sqrt_exact(&a2) {
            if let Some(z) = field.from_doubled(&a, &b) {
                if z.is_totally_positive() && z.norm() == *n {
                    out.push(normalize(z, n, u));
                }
            }
        }
        b += 1;
    }
    out.sort_by(|x, y| x.to_surd().cmp_value(&y.to_surd()));
    out.dedup();
    out
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            v.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        v.push(n);
    }
    v
}

/// One totally positive generator of norm n for each squarefree `n <= nmax`
/// that is a norm of an ideal. Each generator belongs to the ideal built from
/// a fixed choice of prime ideal above each prime, and is the associate of
/// smallest first embedding not below `sqrt(n)`.
///
/// The field is assumed to have narrow class number one; a missing generator
/// is reported as `NoGeneratorFound`.
pub fn small_norm_generators(field: &FieldContext, nmax: u64) -> Result<Vec<QuadInt>> {
    if nmax < 1 {
        return Err(Error::OutOfRange("nmax must be at least 1".into()));
    }
    let disc = field.discriminant();
    let u = totally_positive_unit(field);
    let mut chosen: BTreeMap<u64, QuadInt> = BTreeMap::new();
    let mut out = vec![field.one()];
    for n in 2..=nmax {
        if !is_squarefree_u64(n) {
            continue;
        }
        let ps = prime_factors(n);
        let splits = ps
            .iter()
            .all(|&p| kronecker(&disc, &BigInt::from(p)) != -1);
        if !splits {
            continue;
        }
        for &p in &ps {
            if chosen.contains_key(&p) {
                continue;
            }
            let cands = window_elements(field, &BigInt::from(p), &u);
            let first = cands
                .into_iter()
                .next()
                .ok_or_else(|| Error::NoGeneratorFound(BigInt::from(p)))?;
            chosen.insert(p, first);
        }
        let nb = BigInt::from(n);
        let gen = window_elements(field, &nb, &u).into_iter().find(|z| {
            ps.iter().all(|p| {
                let ap = &chosen[p];
                let prod = z * &ap.conjugate();
                let pb = BigInt::from(*p);
                prod.x.is_multiple_of(&pb) && prod.y.is_multiple_of(&pb)
            })
        });
        match gen {
            Some(g) => out.push(g),
            None => return Err(Error::NoGeneratorFound(nb)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::{check_prop24, make_field, Cond4Mode};
    use num_traits::{One, ToPrimitive};

    #[test]
    fn generators_over_73() {
        let k = make_field(&BigInt::from(73)).unwrap();
        assert_eq!(small_norm_generators(&k, 1).unwrap(), vec![k.one()]);
        let g = small_norm_generators(&k, 2).unwrap();
        assert_eq!(g, vec![k.one(), k.elem(4, 1)]);
        let c = check_prop24(&k, &g, Cond4Mode::Condition5).unwrap();
        assert!(c.valid);
    }

    #[test]
    fn generators_over_2() {
        let k = make_field(&BigInt::from(2)).unwrap();
        let g = small_norm_generators(&k, 2).unwrap();
        assert_eq!(g, vec![k.one(), k.from_sqrt_coords(2, 1)]);
    }

    #[test]
    fn generators_have_requested_norms() {
        for d in [2i64, 5, 13, 17, 29, 37, 41, 53, 61, 73] {
            let k = make_field(&BigInt::from(d)).unwrap();
            let disc = k.discriminant();
            let g = small_norm_generators(&k, 30).unwrap();
            let mut expected = vec![1u64];
            for n in 2..=30u64 {
                if is_squarefree_u64(n)
                    && prime_factors(n).iter().all(|&p| kronecker(&disc, &BigInt::from(p)) != -1)
                {
                    expected.push(n);
                }
            }
            let norms: Vec<u64> = g.iter().map(|z| z.norm().to_u64().unwrap()).collect();
            assert_eq!(norms, expected, "D={d}");
            for z in &g {
                assert!(z.is_totally_positive());
                assert!(z.content().unwrap().is_one());
            }
        }
    }

    #[test]
    fn nonprincipal_ideal_is_reported() {
        // Q(sqrt 10) has class number 2; x^2 - 10y^2 = 2 has no solution mod 5
        let k = make_field(&BigInt::from(10)).unwrap();
        assert_eq!(small_norm_generators(&k, 2), Err(Error::NoGeneratorFound(BigInt::from(2))));
    }
}
