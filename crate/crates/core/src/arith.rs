//! Integer helpers: square roots, Kronecker symbols and a budgeted
//! squarefree test.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_modular::ModularSymbols;
use num_prime::nt_funcs::is_prime;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Floor of the square root. Panics on negative input.
pub fn isqrt(n: &BigInt) -> BigInt {
    assert!(!n.is_negative(), "isqrt of a negative number");
    n.sqrt()
}

/// Exact square root when `n` is a perfect square.
pub fn sqrt_exact(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    if &r * &r == *n {
        Some(r)
    } else {
        None
    }
}

pub fn is_square(n: &BigInt) -> bool {
    sqrt_exact(n).is_some()
}

/// Kronecker symbol (a/n).
pub fn kronecker(a: &BigInt, n: &BigInt) -> i32 {
    a.kronecker(n) as i32
}

pub fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}

/// Factorization budget for squarefree decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effort {
    /// Trial division runs over primes below this bound.
    pub trial_bound: u64,
    /// Iterations per Pollard rho attempt.
    pub rho_iterations: usize,
    /// Number of rho attempts with different offsets before giving up on a cofactor.
    pub rho_attempts: usize,
}

impl Default for Effort {
    fn default() -> Self {
        Effort {
            trial_bound: 1 << 16,
            rho_iterations: 1 << 18,
            rho_attempts: 8,
        }
    }
}

impl Effort {
    /// Budget scaled by a single knob; `level` is the per-attempt rho iteration count.
    pub fn with_rho_iterations(level: usize) -> Self {
        Effort {
            rho_iterations: level.max(1),
            ..Effort::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Squarefree {
    Yes,
    No,
    Unresolved,
}

fn prime_table() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| num_prime::nt_funcs::primes(1 << 20))
}

/// Primes up to `limit`.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit <= 1 << 20 {
        let t = prime_table();
        let end = t.partition_point(|&p| p <= limit);
        t[..end].to_vec()
    } else {
        num_prime::nt_funcs::primes(limit + 1)
            .into_iter()
            .filter(|&p| p <= limit)
            .collect()
    }
}

fn trial_primes(bound: u64) -> Vec<u64> {
    primes_up_to(bound.max(2))
}

/// Squarefree test of |n| within `effort`.
///
/// Trial division first; a cofactor below the cube of the trial bound is
/// squarefree iff it is not a perfect square. Larger cofactors are split by
/// Pollard rho, checking shared factors at each split.
pub fn is_squarefree(n: &BigInt, effort: &Effort) -> Result<Squarefree> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    let mut m: BigUint = n.magnitude().clone();
    if let Some(small) = m.to_u64() {
        return Ok(squarefree_u64(small, effort));
    }
    let bound = effort.trial_bound.max(2);
    for &p in trial_primes(bound).iter() {
        let bp = BigUint::from(p);
        if (&m % &bp).is_zero() {
            m /= &bp;
            if (&m % &bp).is_zero() {
                return Ok(Squarefree::No);
            }
        }
        if m.is_one() {
            return Ok(Squarefree::Yes);
        }
    }
    Ok(cofactor_verdict(m, bound, effort))
}

fn squarefree_u64(mut m: u64, effort: &Effort) -> Squarefree {
    if m <= 1 {
        return Squarefree::Yes;
    }
    let bound = effort.trial_bound.max(2);
    for &p in trial_primes(bound).iter() {
        if p * p > m {
            return Squarefree::Yes;
        }
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return Squarefree::No;
            }
        }
    }
    if m == 1 {
        return Squarefree::Yes;
    }
    cofactor_verdict(BigUint::from(m), bound, effort)
}

/// `c` has no prime factor below `bound`.
fn cofactor_verdict(c: BigUint, bound: u64, effort: &Effort) -> Squarefree {
    let b = BigUint::from(bound);
    let mut pending = vec![c];
    let mut done: Vec<BigUint> = Vec::new();
    while let Some(c) = pending.pop() {
        if c.is_one() {
            continue;
        }
        let ci = BigInt::from_biguint(Sign::Plus, c.clone());
        if is_square(&ci) {
            return Squarefree::No;
        }
        if c < &b * &b * &b || is_prime(&c, None).probably() {
            for d in &done {
                if !c.gcd(d).is_one() {
                    return Squarefree::No;
                }
            }
            done.push(c);
            continue;
        }
        let Some(d) = split(&c, effort) else {
            return Squarefree::Unresolved;
        };
        let e = &c / &d;
        let g = d.gcd(&e);
        if !g.is_one() {
            return Squarefree::No;
        }
        pending.push(d);
        pending.push(e);
    }
    // pieces are pairwise coprime and individually squarefree
    Squarefree::Yes
}

fn split(c: &BigUint, effort: &Effort) -> Option<BigUint> {
    use num_prime::factor::pollard_rho;
    for attempt in 0..effort.rho_attempts {
        let offset = 1 + attempt as u64;
        let start = 2 + attempt as u64;
        if let Some(c128) = c.to_u128() {
            if let (Some(d), _) = pollard_rho(&c128, start as u128, offset as u128, effort.rho_iterations) {
                return Some(BigUint::from(d));
            }
        } else if let (Some(d), _) = pollard_rho(
            c,
            BigUint::from(start),
            BigUint::from(offset),
            effort.rho_iterations,
        ) {
            return Some(d);
        }
    }
    None
}

/// Squarefreeness of a small nonzero integer by trial division, always decided.
pub fn is_squarefree_u64(n: u64) -> bool {
    assert!(n != 0);
    let mut m = n;
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    fn oracle_squarefree(n: u64) -> bool {
        (2..).take_while(|d| d * d <= n).all(|d| n % (d * d) != 0)
    }

    #[test]
    fn squarefree_examples() {
        let e = Effort::default();
        assert_eq!(is_squarefree(&big(50), &e), Ok(Squarefree::No));
        assert_eq!(is_squarefree(&big(4757), &e), Ok(Squarefree::Yes));
        assert_eq!(is_squarefree(&big(1), &e), Ok(Squarefree::Yes));
        assert_eq!(is_squarefree(&big(-6), &e), Ok(Squarefree::Yes));
        assert_eq!(is_squarefree(&big(0), &e), Err(Error::ZeroInput));
    }

    #[test]
    fn squarefree_matches_trial_oracle() {
        let e = Effort {
            trial_bound: 7,
            ..Effort::default()
        };
        for n in 1..5000u64 {
            assert_eq!(
                is_squarefree(&BigInt::from(n), &e).unwrap() == Squarefree::Yes,
                oracle_squarefree(n),
                "n = {n}"
            );
        }
    }

    #[test]
    fn squarefree_large_cofactors() {
        let e = Effort::default();
        let p: BigInt = "1000000007".parse().unwrap();
        let q: BigInt = "998244353".parse().unwrap();
        let r: BigInt = "1000000009".parse().unwrap();
        assert_eq!(is_squarefree(&(&p * &q * &r), &e), Ok(Squarefree::Yes));
        assert_eq!(is_squarefree(&(&p * &p * &q), &e), Ok(Squarefree::No));
        assert_eq!(is_squarefree(&(&p * &q * &q * &r), &e), Ok(Squarefree::No));
        let big_prime: BigInt = "170141183460469231731687303715884105727".parse().unwrap();
        assert_eq!(is_squarefree(&(&big_prime * 6), &e), Ok(Squarefree::Yes));
        assert_eq!(is_squarefree(&(&big_prime * &big_prime), &e), Ok(Squarefree::No));
    }

    #[test]
    fn squarefree_reports_unresolved_when_budget_is_tiny() {
        let e = Effort {
            trial_bound: 10,
            rho_iterations: 1,
            rho_attempts: 1,
        };
        let p: BigInt = "1000000000039".parse().unwrap();
        let q: BigInt = "1000000000061".parse().unwrap();
        let r: BigInt = "1000000000063".parse().unwrap();
        assert_eq!(is_squarefree(&(&p * &q * &r), &e), Ok(Squarefree::Unresolved));
    }

    #[test]
    fn kronecker_matches_euler_criterion() {
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
            for a in -40i64..40 {
                let r = a.rem_euclid(p as i64) as u64;
                let euler = if r == 0 {
                    0
                } else {
                    let mut acc = 1u64;
                    for _ in 0..(p - 1) / 2 {
                        acc = acc * r % p;
                    }
                    if acc == 1 { 1 } else { -1 }
                };
                assert_eq!(kronecker(&big(a), &big(p as i64)), euler);
            }
        }
        assert_eq!(kronecker(&big(73), &big(2)), 1);
        assert_eq!(kronecker(&big(5), &big(2)), -1);
        assert_eq!(kronecker(&big(8), &big(2)), 0);
    }

    #[test]
    fn sqrt_helpers() {
        assert_eq!(isqrt(&big(73)), big(8));
        assert_eq!(sqrt_exact(&big(144)), Some(big(12)));
        assert_eq!(sqrt_exact(&big(145)), None);
        assert_eq!(sqrt_exact(&big(-4)), None);
    }
}
