//! Simultaneous squarefree values of a quadratic `f` and linear `g_j`.

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::collections::BTreeMap;

use crate::arith::{self, kronecker, primes_up_to, Effort, Squarefree};
use crate::error::{Error, Result};
use crate::interval::Interval;

/// Initial segment scanned for a squarefree value of each polynomial.
const SCAN: i64 = 200;
/// Largest trial prime for the residue sieve.
const SIEVE_PRIME_LIMIT: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SieveSpec {
    /// `(a, b, c)` for `a x^2 + b x + c`.
    pub f: (i64, i64, i64),
    /// `(k, r)` for `k x + r`.
    pub gs: Vec<(i64, i64)>,
    pub delta: i64,
    /// Some polynomial had no squarefree value on the scanned segment.
    pub flagged: bool,
}

fn eval_f(f: (i64, i64, i64), n: i128) -> i128 {
    (f.0 as i128 * n + f.1 as i128) * n + f.2 as i128
}

fn eval_g(g: (i64, i64), n: i128) -> i128 {
    g.0 as i128 * n + g.1 as i128
}

impl SieveSpec {
    pub fn new(f: (i64, i64, i64), gs: Vec<(i64, i64)>) -> Result<Self> {
        let delta = (f.1 as i128).pow(2) - 4 * f.0 as i128 * f.2 as i128;
        if f.0 == 0 {
            return Err(Error::InvalidSpec("f must be quadratic".into()));
        }
        if delta == 0 {
            return Err(Error::InvalidSpec("discriminant is zero".into()));
        }
        if gs.iter().any(|g| g.0 == 0) {
            return Err(Error::InvalidSpec("g_j must be linear".into()));
        }
        let delta = i64::try_from(delta).map_err(|_| Error::OutOfRange("discriminant too large".into()))?;
        let sf = |v: i128| v != 0 && arith::is_squarefree_u64(v.unsigned_abs() as u64);
        let f_ok = (1..=SCAN).any(|n| sf(eval_f(f, n as i128)));
        let g_ok = gs.iter().all(|&g| (1..=SCAN).any(|n| sf(eval_g(g, n as i128))));
        Ok(SieveSpec {
            f,
            gs,
            delta,
            flagged: !(f_ok && g_ok),
        })
    }

    pub fn m(&self) -> usize {
        self.gs.len()
    }

    fn polys(&self) -> Vec<Poly> {
        let mut v = vec![Poly::Quad(self.f)];
        v.extend(self.gs.iter().map(|&g| Poly::Lin(g)));
        v
    }
}

#[derive(Debug, Clone, Copy)]
enum Poly {
    Quad((i64, i64, i64)),
    Lin((i64, i64)),
}

impl Poly {
    fn eval(&self, n: i128) -> i128 {
        match *self {
            Poly::Quad(f) => eval_f(f, n),
            Poly::Lin(g) => eval_g(g, n),
        }
    }

    fn eval_mod(&self, n: u64, m: u64) -> u64 {
        let m = m as i128;
        let n = n as i128;
        match *self {
            Poly::Quad((a, b, c)) => {
                ((a as i128 % m * n % m * n + b as i128 % m * n + c as i128) % m).rem_euclid(m) as u64
            }
            Poly::Lin((k, r)) => ((k as i128 % m * n + r as i128) % m).rem_euclid(m) as u64,
        }
    }

    /// Upper bound for `|h(n)|` on `1..=x`.
    fn max_abs(&self, x: u64) -> u128 {
        let x = x as u128;
        match *self {
            Poly::Quad((a, b, c)) => {
                a.unsigned_abs() as u128 * x * x + b.unsigned_abs() as u128 * x + c.unsigned_abs() as u128
            }
            Poly::Lin((k, r)) => k.unsigned_abs() as u128 * x + r.unsigned_abs() as u128,
        }
    }
}

/// Squarefree test with `0` rejected.
pub fn is_squarefree(n: &BigInt, effort: &Effort) -> Result<Squarefree> {
    arith::is_squarefree(n, effort)
}

/// Marks `n` in `1..=x` with `h(n)` not squarefree, by dividing out every
/// prime up to the cube root of the largest value and testing the cofactor
/// for being a square.
fn sieve_poly(h: Poly, x: u64, bad: &mut [bool]) {
    let max = h.max_abs(x);
    let bound = (max as f64).cbrt() as u64 + 2;
    let mut rem: Vec<u128> = (1..=x).map(|n| h.eval(n as i128).unsigned_abs()).collect();
    for (i, r) in rem.iter().enumerate() {
        if *r == 0 {
            bad[i] = true;
        }
    }
    for p in primes_up_to(bound) {
        let p128 = p as u128;
        for r in 0..p {
            if h.eval_mod(r, p) != 0 {
                continue;
            }
            let mut n = if r == 0 { p } else { r };
            while n <= x {
                let i = (n - 1) as usize;
                let v = &mut rem[i];
                if *v != 0 && *v % p128 == 0 {
                    *v /= p128;
                    if *v % p128 == 0 {
                        bad[i] = true;
                        while *v % p128 == 0 {
                            *v /= p128;
                        }
                    }
                }
                n += p;
            }
        }
    }
    for (i, &v) in rem.iter().enumerate() {
        if !bad[i] && v > 1 {
            let s = v.sqrt();
            if s * s == v {
                bad[i] = true;
            }
        }
    }
}

/// Number of `n` in `1..=x` with `f(n)` and every `g_j(n)` squarefree.
pub fn count_simultaneous(spec: &SieveSpec, x: u64, effort: &Effort) -> Result<u64> {
    if x < 1 {
        return Err(Error::OutOfRange("X must be at least 1".into()));
    }
    let polys = spec.polys();
    let fits = polys
        .iter()
        .all(|h| ((h.max_abs(x) as f64).cbrt() as u64) < SIEVE_PRIME_LIMIT && h.max_abs(x) < (1u128 << 100));
    if fits {
        let mut bad = vec![false; x as usize];
        for h in polys {
            sieve_poly(h, x, &mut bad);
        }
        return Ok(bad.iter().filter(|b| !**b).count() as u64);
    }
    let mut count = 0u64;
    for n in 1..=x {
        let mut ok = true;
        for h in &polys {
            let v = BigInt::from(h.eval(n as i128));
            if v.is_zero() {
                ok = false;
                break;
            }
            match is_squarefree(&v, effort)? {
                Squarefree::Yes => {}
                Squarefree::No => {
                    ok = false;
                    break;
                }
                Squarefree::Unresolved => return Err(Error::UnresolvedFactorization(BigInt::from(n))),
            }
        }
        if ok {
            count += 1;
        }
    }
    Ok(count)
}

fn mobius(d: u64) -> i64 {
    let mut n = d;
    let mut s = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            s = -s;
        }
        p += 1;
    }
    if n > 1 {
        s = -s;
    }
    s
}

fn mu2_by_divisors(v: u128) -> i64 {
    let mut s = 0;
    let mut d = 1u128;
    while d * d <= v {
        if v % (d * d) == 0 {
            s += mobius(d as u64);
        }
        d += 1;
    }
    s
}

/// The same count through `mu^2(v) = sum_{d^2 | v} mu(d)`, with the sum for
/// `f` taken over `d <= sqrt(max |f|)` in residue classes. Meant for small `X`.
pub fn count_simultaneous_mobius(spec: &SieveSpec, x: u64) -> i64 {
    let fpoly = Poly::Quad(spec.f);
    let dmax = (fpoly.max_abs(x) as f64).sqrt() as u64 + 1;
    // roots of f modulo p^2
    let mut prime_roots: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for p in primes_up_to(dmax) {
        let m = p * p;
        let roots: Vec<u64> = (0..p)
            .filter(|&r| fpoly.eval_mod(r, p) == 0)
            .flat_map(|r| (0..p).map(move |j| r + j * p))
            .filter(|&r| fpoly.eval_mod(r, m) == 0)
            .collect();
        if !roots.is_empty() {
            prime_roots.insert(p, roots);
        }
    }
    let gvals = |n: u64| -> i64 {
        spec.gs
            .iter()
            .map(|&g| {
                let v = eval_g(g, n as i128).unsigned_abs();
                if v == 0 {
                    0
                } else {
                    mu2_by_divisors(v)
                }
            })
            .product()
    };
    // squarefree d <= dmax built from primes with roots, with roots mod d^2 by CRT
    let mut total = 0i64;
    let mut stack: Vec<(u64, i64, u128, Vec<u128>, usize)> = vec![(1, 1, 1, vec![0], 0)];
    let primes: Vec<(u64, Vec<u64>)> = prime_roots.into_iter().collect();
    while let Some((d, mu, m, roots, start)) = stack.pop() {
        for &r in &roots {
            let mut n = if r == 0 { m } else { r };
            while n <= x as u128 {
                let nn = n as u64;
                if eval_f(spec.f, nn as i128) != 0 {
                    total += mu * gvals(nn);
                }
                n += m;
            }
        }
        for (idx, (p, pr)) in primes.iter().enumerate().skip(start) {
            if d * p > dmax {
                break;
            }
            let pm = (*p as u128) * (*p as u128);
            let nm = m * pm;
            let inv = mod_inverse(m % pm, pm);
            let mut nr = Vec::with_capacity(roots.len() * pr.len());
            for &a in &roots {
                for &b in pr {
                    // n = a mod m, n = b mod p^2
                    let t = ((b as u128 + pm - a % pm) % pm) * inv % pm;
                    nr.push(a + m * t);
                }
            }
            stack.push((d * p, -mu, nm, nr, idx + 1));
        }
    }
    // f(n) = 0 is never squarefree; those n were skipped above
    total
}

fn mod_inverse(a: u128, m: u128) -> u128 {
    if m == 1 {
        return 0;
    }
    let r = BigInt::from(a).extended_gcd(&BigInt::from(m));
    r.x.mod_floor(&BigInt::from(m)).to_u128().expect("fits")
}

/// `rho(d)`: residues modulo `lcm(d_j^2)` with `d_0^2 | f(n)` and `d_j^2 | g_j(n)`.
pub fn local_density(spec: &SieveSpec, d: &[u64]) -> Result<u64> {
    if d.len() != spec.m() + 1 {
        return Err(Error::InvalidSpec(format!("expected {} moduli", spec.m() + 1)));
    }
    for &di in d {
        if di == 0 || !arith::is_squarefree_u64(di) {
            return Err(Error::NonSquarefreeModulus(di));
        }
    }
    let polys = spec.polys();
    let mut primes: Vec<u64> = Vec::new();
    for &di in d {
        let mut n = di;
        let mut p = 2;
        while p * p <= n {
            if n % p == 0 {
                primes.push(p);
                n /= p;
            }
            p += 1;
        }
        if n > 1 {
            primes.push(n);
        }
    }
    primes.sort_unstable();
    primes.dedup();
    let mut rho = 1u64;
    for p in primes {
        let m = p * p;
        let active: Vec<&Poly> = polys.iter().zip(d).filter(|(_, &di)| di % p == 0).map(|(h, _)| h).collect();
        let c = (0..m).filter(|&n| active.iter().all(|h| h.eval_mod(n, m) == 0)).count() as u64;
        rho *= c;
    }
    Ok(rho)
}

/// `#{n mod p^2 : p^2 divides f(n) or some g_j(n)}` by scanning.
fn local_hits_scan(polys: &[Poly], p: u64) -> u64 {
    let m = p * p;
    (0..m).filter(|&n| polys.iter().any(|h| h.eval_mod(n, m) == 0)).count() as u64
}

fn resultant_fg(f: (i64, i64, i64), g: (i64, i64)) -> BigInt {
    let (a, b, c) = (BigInt::from(f.0), BigInt::from(f.1), BigInt::from(f.2));
    let (k, r) = (BigInt::from(g.0), BigInt::from(g.1));
    &a * &r * &r - &b * &r * &k + &c * &k * &k
}

#[derive(Debug, Clone, Serialize)]
pub struct EulerEnclosure {
    pub lo: f64,
    pub hi: f64,
    pub prime_cutoff: u64,
    /// Some local factor vanishes, so the density is zero.
    pub degenerate: bool,
    #[serde(skip)]
    pub interval: Interval,
}

impl EulerEnclosure {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Relative distance of `v` to the enclosure, 0 inside.
    pub fn relative_gap(&self, v: f64) -> f64 {
        if self.contains(v) {
            0.0
        } else {
            let d = if v < self.lo { self.lo - v } else { v - self.hi };
            d / self.hi.abs().max(f64::MIN_POSITIVE)
        }
    }
}

/// Enclosure of the density `C = prod_p (1 - hits(p)/p^2)`: exact factors for
/// `p <= P` and `1 - sum_{p > P} (m + 2)/p^2 > 1 - (m + 2)/P` for the tail.
pub fn euler_constant(spec: &SieveSpec, prime_cutoff: u64) -> Result<EulerEnclosure> {
    if prime_cutoff < 100 {
        return Err(Error::OutOfRange("prime cutoff must be at least 100".into()));
    }
    const PREC: u32 = 128;
    let polys = spec.polys();
    let m = spec.m() as u64;
    // primes where roots may collide, ramify or fail to lift
    let mut special = BigInt::from(2) * BigInt::from(spec.f.0) * BigInt::from(spec.delta);
    let mut exact_collisions: Vec<bool> = Vec::new();
    let mut root_keys: Vec<BigRational> = Vec::new();
    for &g in &spec.gs {
        special *= BigInt::from(g.0);
        let res = resultant_fg(spec.f, g);
        exact_collisions.push(res.is_zero());
        if !res.is_zero() {
            special *= res;
        }
        root_keys.push(BigRational::new(BigInt::from(-g.1), BigInt::from(g.0)));
    }
    for i in 0..spec.gs.len() {
        for j in i + 1..spec.gs.len() {
            let (gi, gj) = (spec.gs[i], spec.gs[j]);
            let c = BigInt::from(gi.0) * BigInt::from(gj.1) - BigInt::from(gj.0) * BigInt::from(gi.1);
            if !c.is_zero() {
                special *= c;
            }
        }
    }
    // distinct rational roots of the g_j that are not roots of f
    let mut lin_classes: Vec<(BigRational, bool)> = Vec::new();
    for (key, coll) in root_keys.into_iter().zip(exact_collisions) {
        if let Some(e) = lin_classes.iter_mut().find(|(k, _)| *k == key) {
            e.1 |= coll;
        } else {
            lin_classes.push((key, coll));
        }
    }
    let lin_extra = lin_classes.iter().filter(|(_, coll)| !coll).count() as u64;
    let disc = BigInt::from(spec.delta);
    let mut prod = Interval::from_i64(1, PREC);
    let mut degenerate = false;
    for p in primes_up_to(prime_cutoff) {
        let pb = BigInt::from(p);
        let hits = if special.is_multiple_of(&pb) {
            local_hits_scan(&polys, p)
        } else {
            let chi = kronecker(&disc, &pb);
            (1 + chi) as u64 + lin_extra
        };
        let p2 = p * p;
        if hits >= p2 {
            degenerate = true;
        }
        let factor = BigRational::new(BigInt::from(p2 as i64 - hits as i64), BigInt::from(p2));
        prod = prod.mul(&Interval::from_rational(&factor, PREC));
    }
    let tail = BigRational::new(BigInt::from(m + 2), BigInt::from(prime_cutoff));
    let lower = prod.mul(&Interval::from_rational(&(BigRational::from_integer(1.into()) - tail), PREC));
    let interval = Interval {
        lo: lower.lo.clone().max(BigInt::zero()),
        hi: prod.hi.clone(),
        prec: PREC,
    };
    let degenerate = degenerate || !interval.lo.is_positive();
    Ok(EulerEnclosure {
        lo: interval.lo_f64(),
        hi: interval.hi_f64(),
        prime_cutoff,
        degenerate,
        interval,
    })
}

/// `f(4x)` and `g_j(4x)`.
pub fn shift_mod4(spec: &SieveSpec) -> Result<SieveSpec> {
    let (a, b, c) = spec.f;
    let big = |v: i128| i64::try_from(v).map_err(|_| Error::OutOfRange("shifted coefficient too large".into()));
    let f = (big(16 * a as i128)?, big(4 * b as i128)?, c);
    let gs = spec
        .gs
        .iter()
        .map(|&(k, r)| Ok((big(4 * k as i128)?, r)))
        .collect::<Result<Vec<_>>>()?;
    SieveSpec::new(f, gs)
}

/// Values of `f` and each `g_j` at `n`.
pub fn values_at(spec: &SieveSpec, n: i64) -> Vec<BigInt> {
    spec.polys().iter().map(|h| BigInt::from(h.eval(n as i128))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(spec: &SieveSpec, x: u64) -> u64 {
        (1..=x as i64)
            .filter(|&n| {
                values_at(spec, n)
                    .iter()
                    .all(|v| !v.is_zero() && arith::is_squarefree_u64(v.abs().to_u64().unwrap()))
            })
            .count() as u64
    }

    fn spec(f: (i64, i64, i64), gs: Vec<(i64, i64)>) -> SieveSpec {
        SieveSpec::new(f, gs).unwrap()
    }

    #[test]
    fn squarefree_wrapper() {
        let e = Effort::default();
        assert_eq!(is_squarefree(&BigInt::from(50), &e), Ok(Squarefree::No));
        assert_eq!(is_squarefree(&BigInt::from(4757), &e), Ok(Squarefree::Yes));
        assert_eq!(is_squarefree(&BigInt::from(1), &e), Ok(Squarefree::Yes));
        assert_eq!(is_squarefree(&BigInt::from(0), &e), Err(Error::ZeroInput));
    }

    #[test]
    fn small_counts() {
        let e = Effort::default();
        assert_eq!(count_simultaneous(&spec((1, 0, 1), vec![]), 10, &e), Ok(9));
        assert_eq!(count_simultaneous(&spec((1, 0, 1), vec![(2, 1)]), 10, &e), Ok(8));
        assert!(matches!(SieveSpec::new((1, 0, 0), vec![]), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn counts_match_naive_and_mobius() {
        let e = Effort::default();
        for s in [
            spec((1, 0, 1), vec![(2, 1)]),
            spec((1, 1, 1), vec![(3, 2), (1, 5)]),
            spec((2, -3, -7), vec![(4, 1)]),
            spec((1, 0, -2), vec![(1, 0)]),
        ] {
            let n = naive(&s, 3000);
            assert_eq!(count_simultaneous(&s, 3000, &e).unwrap(), n, "{s:?}");
            assert_eq!(count_simultaneous_mobius(&s, 3000), n as i64, "{s:?}");
        }
    }

    #[test]
    fn densities() {
        let s = spec((1, 0, 1), vec![]);
        assert_eq!(local_density(&s, &[2]), Ok(0));
        assert_eq!(local_density(&s, &[5]), Ok(2));
        assert_eq!(local_density(&s, &[1]), Ok(1));
        assert_eq!(local_density(&s, &[4]), Err(Error::NonSquarefreeModulus(4)));
        let s = spec((1, 0, 1), vec![(2, 1)]);
        assert_eq!(local_density(&s, &[1, 1]), Ok(1));
        let brute = |d: &[u64]| -> u64 {
            let l: u64 = d.iter().map(|x| x * x).fold(1, |a, b| a.lcm(&b));
            (0..l)
                .filter(|&n| {
                    let v = values_at(&s, n as i64);
                    v.iter().zip(d).all(|(v, di)| v.is_multiple_of(&BigInt::from(di * di)))
                })
                .count() as u64
        };
        for d in [[5u64, 1], [1, 3], [5, 3], [3, 3], [13, 5], [10, 1]] {
            assert_eq!(local_density(&s, &d).unwrap(), brute(&d), "{d:?}");
        }
    }

    #[test]
    fn local_density_even_linear() {
        let s = spec((1, 0, 1), vec![(2, 2)]);
        // 2x + 2 = 0 mod 4 iff x odd
        assert_eq!(local_density(&s, &[1, 2]), Ok(2));
    }

    #[test]
    fn density_of_x2_plus_1() {
        let s = spec((1, 0, 1), vec![]);
        let c = euler_constant(&s, 100_000).unwrap();
        assert!(!c.degenerate);
        assert!(c.lo >= 0.89 && c.hi <= 0.90, "{c:?}");
        let ratio = count_simultaneous(&s, 100_000, &Effort::default()).unwrap() as f64 / 1e5;
        assert!(c.relative_gap(ratio) < 0.01, "{ratio} {c:?}");
    }

    #[test]
    fn degenerate_spec_is_flagged() {
        let s = spec((4, 4, 4), vec![]);
        assert!(s.flagged);
        let c = euler_constant(&s, 100).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.lo, 0.0);
    }

    #[test]
    fn ratios_approach_the_euler_product() {
        for (f, g) in [((1, 0, 1), vec![(2, 1)]), ((1, 0, 1), vec![])] {
            let s = spec(f, g);
            let e = euler_constant(&s, 100_000).unwrap();
            let mid = (e.lo + e.hi) / 2.0;
            let gaps: Vec<f64> = [10_000u64, 100_000, 1_000_000]
                .iter()
                .map(|&x| {
                    let r = count_simultaneous(&s, x, &Effort::default()).unwrap() as f64 / x as f64;
                    (r - mid).abs() / mid
                })
                .collect();
            assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
            assert!(gaps[2] < 0.02);
        }
    }

    #[test]
    fn shifts() {
        let s = spec((1, 0, 1), vec![(2, 1)]);
        let t = shift_mod4(&s).unwrap();
        assert_eq!(t.f, (16, 0, 1));
        assert_eq!(t.gs, vec![(8, 1)]);
        for n in 1..50 {
            assert_eq!(eval_f(t.f, n).rem_euclid(4), 1);
        }
        let e = Effort::default();
        let restricted = (1..=400i64)
            .filter(|n| n % 4 == 0)
            .filter(|&n| values_at(&s, n).iter().all(|v| arith::is_squarefree_u64(v.to_u64().unwrap())))
            .count() as u64;
        assert_eq!(count_simultaneous(&t, 100, &e).unwrap(), restricted);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn density_is_multiplicative(a in 1i64..4, b in -5i64..6, c in -7i64..8, k in 1i64..5, r in -4i64..5) {
            prop_assume!(b * b - 4 * a * c != 0);
            let s = SieveSpec::new((a, b, c), vec![(k, r)]).unwrap();
            for (d, e) in [([3u64, 1u64], [5u64, 7u64]), ([2, 5], [7, 3]), ([6, 1], [5, 1])] {
                let de = [d[0] * e[0], d[1] * e[1]];
                let lhs = local_density(&s, &de).unwrap();
                let rhs = local_density(&s, &d).unwrap() * local_density(&s, &e).unwrap();
                prop_assert_eq!(lhs, rhs);
            }
        }

        #[test]
        fn euler_factors_match_scan(a in 1i64..4, b in -5i64..6, c in -7i64..8, k in 1i64..5, r in -4i64..5) {
            prop_assume!(b * b - 4 * a * c != 0);
            let s = SieveSpec::new((a, b, c), vec![(k, r)]).unwrap();
            let fast = euler_constant(&s, 100).unwrap();
            let polys = s.polys();
            let mut prod = 1.0f64;
            for p in primes_up_to(100) {
                prod *= 1.0 - local_hits_scan(&polys, p) as f64 / (p * p) as f64;
            }
            prop_assert!((prod - fast.hi).abs() < 1e-12, "{} vs {:?}", prod, fast);
        }
    }
}
