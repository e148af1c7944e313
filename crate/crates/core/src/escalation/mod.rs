//! Classical lattices over O_K given by Gram matrices, representation by
//! exhaustive search, and escalation.

mod search;

pub use search::{
    diagonal_lower_bound, diagonal_report, lower_bound_search, lower_bound_search_with, named_queue,
    DiagonalReport, NodeRecord, RankBound, SearchLimits,
};

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::quadfield::{enumerate_dominated_squares, enumerate_region, FieldContext, QuadInt, Surd};

/// `A = L D L^T` over K, with unit lower triangular `L`.
#[derive(Debug, Clone)]
struct Ldl {
    d: Vec<Surd>,
    l: Vec<Vec<Surd>>,
}

/// Totally positive definite symmetric Gram matrix over O_K.
#[derive(Debug, Clone)]
pub struct GramLattice {
    field: FieldContext,
    a: Vec<Vec<QuadInt>>,
    ldl: Ldl,
}

impl PartialEq for GramLattice {
    fn eq(&self, o: &Self) -> bool {
        self.field == o.field && self.a == o.a
    }
}

impl Eq for GramLattice {}

impl Serialize for GramLattice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.a.serialize(s)
    }
}

fn is_tp(s: &Surd) -> bool {
    s.is_positive() && s.conj().is_positive()
}

/// LDL of the leading block; stops at the first non totally positive pivot.
fn ldl(field: &FieldContext, a: &[Vec<QuadInt>]) -> std::result::Result<Ldl, usize> {
    let n = a.len();
    let r = field.d();
    let mut d: Vec<Surd> = Vec::with_capacity(n);
    let mut l: Vec<Vec<Surd>> = vec![vec![Surd::zero(r); n]; n];
    for i in 0..n {
        l[i][i] = Surd::one(r);
        for j in 0..i {
            let mut s = a[i][j].to_surd();
            for k in 0..j {
                s = s.sub(&l[i][k].mul(&l[j][k]).mul(&d[k]));
            }
            l[i][j] = s.div(&d[j]).expect("pivot is nonzero");
        }
        let mut s = a[i][i].to_surd();
        for k in 0..i {
            s = s.sub(&l[i][k].square().mul(&d[k]));
        }
        if !is_tp(&s) {
            return Err(i + 1);
        }
        d.push(s);
    }
    Ok(Ldl { d, l })
}

/// Validated lattice from a symmetric matrix.
pub fn make_lattice(field: &FieldContext, entries: Vec<Vec<QuadInt>>) -> Result<GramLattice> {
    let n = entries.len();
    for row in &entries {
        if row.len() != n {
            return Err(Error::NotSymmetric);
        }
        for e in row {
            if e.field() != field {
                return Err(Error::MixedFields);
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            if entries[i][j] != entries[j][i] {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let ldl = ldl(field, &entries).map_err(|size| Error::NotTotallyPositiveDefinite { size })?;
    Ok(GramLattice {
        field: field.clone(),
        a: entries,
        ldl,
    })
}

/// Diagonal lattice `<a_1, ..., a_n>`.
pub fn diagonal(field: &FieldContext, diag: &[QuadInt]) -> Result<GramLattice> {
    let n = diag.len();
    let m = (0..n)
        .map(|i| (0..n).map(|j| if i == j { diag[i].clone() } else { field.zero() }).collect())
        .collect();
    make_lattice(field, m)
}

impl GramLattice {
    pub fn empty(field: &FieldContext) -> Self {
        GramLattice {
            field: field.clone(),
            a: Vec::new(),
            ldl: Ldl { d: Vec::new(), l: Vec::new() },
        }
    }

    pub fn rank(&self) -> usize {
        self.a.len()
    }

    pub fn field(&self) -> &FieldContext {
        &self.field
    }

    pub fn gram(&self) -> &[Vec<QuadInt>] {
        &self.a
    }

    pub fn entry(&self, i: usize, j: usize) -> &QuadInt {
        &self.a[i][j]
    }

    /// Leading principal minors, each totally positive.
    pub fn leading_minors(&self) -> Vec<QuadInt> {
        let mut acc = Surd::one(self.field.d());
        self.ldl
            .d
            .iter()
            .map(|d| {
                acc = acc.mul(d);
                self.field.from_surd(&acc).expect("minors are integral")
            })
            .collect()
    }

    pub fn determinant(&self) -> QuadInt {
        self.leading_minors().pop().unwrap_or_else(|| self.field.one())
    }

    /// `x^T A x`.
    pub fn evaluate(&self, x: &[QuadInt]) -> QuadInt {
        let mut s = self.field.zero();
        for i in 0..self.rank() {
            for j in 0..self.rank() {
                s = s + &self.a[i][j] * &x[i] * &x[j];
            }
        }
        s
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rank()).all(|i| (0..self.rank()).all(|j| i == j || self.a[i][j].is_zero()))
    }

    /// Integer coordinates identifying the matrix.
    pub fn key(&self) -> Vec<(String, String)> {
        self.a
            .iter()
            .flatten()
            .map(|e| (e.x.to_string(), e.y.to_string()))
            .collect()
    }
}

/// Some `x` with `x^T A x = target`, found by exhaustive search over the
/// ellipsoids cut out by both embeddings.
pub fn represents(lat: &GramLattice, target: &QuadInt) -> Option<Vec<QuadInt>> {
    let field = &lat.field;
    if target.is_zero() {
        return Some(vec![field.zero(); lat.rank()]);
    }
    if lat.rank() == 0 || !target.is_totally_positive() {
        return None;
    }
    let n = lat.rank();
    let mut x: Vec<QuadInt> = vec![field.zero(); n];
    if search(lat, n - 1, &target.to_surd(), &mut x) {
        Some(x)
    } else {
        None
    }
}

fn search(lat: &GramLattice, i: usize, rem: &Surd, x: &mut [QuadInt]) -> bool {
    let field = &lat.field;
    let n = lat.rank();
    let mut c = Surd::zero(field.d());
    for j in i + 1..n {
        c = c.sub(&lat.ldl.l[j][i].mul(&x[j].to_surd()));
    }
    let di = &lat.ldl.d[i];
    let r1 = rem.div(di).expect("pivot is nonzero");
    let mut cands = enumerate_region(field, &c, &r1, &r1.conj());
    cands.sort_by_key(|z| {
        let (a, b) = z.doubled_coords();
        (b.magnitude().clone(), a.magnitude().clone(), b < BigInt::zero(), a < BigInt::zero())
    });
    for z in cands {
        let w = z.to_surd().sub(&c);
        let next = rem.sub(&di.mul(&w.square()));
        x[i] = z;
        if i == 0 {
            if next.is_zero() {
                return true;
            }
        } else if search(lat, i - 1, &next, x) {
            return true;
        }
    }
    x[i] = field.zero();
    false
}

/// First queue element not represented by the lattice.
pub fn truant(lat: &GramLattice, queue: &[QuadInt]) -> Option<QuadInt> {
    queue.iter().find(|t| represents(lat, t).is_none()).cloned()
}

/// Applies basis sign flips so that a BFS spanning forest of the nonzero
/// off-diagonal pattern has only positive entries.
pub fn canonical_signs(a: &[Vec<QuadInt>]) -> Vec<Vec<QuadInt>> {
    let n = a.len();
    let mut sign: Vec<Option<bool>> = vec![None; n];
    for root in 0..n {
        if sign[root].is_some() {
            continue;
        }
        sign[root] = Some(false);
        let mut q = VecDeque::from([root]);
        while let Some(u) = q.pop_front() {
            for v in 0..n {
                if sign[v].is_some() || a[u][v].is_zero() {
                    continue;
                }
                let e = &a[u][v];
                let negative = e.canonical_cmp(&-e) == Ordering::Less;
                sign[v] = Some(sign[u].unwrap() ^ negative);
                q.push_back(v);
            }
        }
    }
    let s: Vec<bool> = sign.into_iter().map(|x| x.unwrap()).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if s[i] ^ s[j] { -&a[i][j] } else { a[i][j].clone() })
                .collect()
        })
        .collect()
}

/// All totally positive definite `[[A, c], [c^T, target]]`, up to basis sign
/// flips, in a fixed order.
pub fn escalate(lat: &GramLattice, target: &QuadInt) -> Result<Vec<GramLattice>> {
    if represents(lat, target).is_some() {
        return Err(Error::AlreadyRepresented);
    }
    let field = &lat.field;
    let n = lat.rank();
    let mut per: Vec<Vec<QuadInt>> = Vec::with_capacity(n);
    for i in 0..n {
        per.push(enumerate_dominated_squares(&(&lat.a[i][i] * target))?);
    }
    let tau = target.to_surd();
    let mut found: Vec<Vec<QuadInt>> = Vec::new();
    let mut c: Vec<QuadInt> = Vec::with_capacity(n);
    let mut y: Vec<Surd> = Vec::with_capacity(n);
    extend(lat, &per, &tau, &Surd::zero(field.d()), &mut c, &mut y, &mut found);
    let mut out: Vec<GramLattice> = Vec::new();
    let mut keys = std::collections::BTreeSet::new();
    for cv in found {
        let mut m: Vec<Vec<QuadInt>> = lat.a.clone();
        for (i, row) in m.iter_mut().enumerate() {
            row.push(cv[i].clone());
        }
        let mut last = cv.clone();
        last.push(target.clone());
        m.push(last);
        let m = canonical_signs(&m);
        let l = make_lattice(field, m).expect("extension is positive definite");
        if keys.insert(l.key()) {
            out.push(l);
        }
    }
    out.sort_by(|x, y| x.key().cmp(&y.key()));
    Ok(out)
}

/// Chooses `c_j` in order; `tau - c^T A^{-1} c` restricted to the first
/// coordinates must stay totally positive.
fn extend(
    lat: &GramLattice,
    per: &[Vec<QuadInt>],
    tau: &Surd,
    s: &Surd,
    c: &mut Vec<QuadInt>,
    y: &mut Vec<Surd>,
    found: &mut Vec<Vec<QuadInt>>,
) {
    let j = c.len();
    if j == per.len() {
        found.push(c.clone());
        return;
    }
    for cj in &per[j] {
        let mut yj = cj.to_surd();
        for k in 0..j {
            yj = yj.sub(&lat.ldl.l[j][k].mul(&y[k]));
        }
        let s2 = s.add(&yj.square().div(&lat.ldl.d[j]).expect("pivot is nonzero"));
        if !is_tp(&tau.sub(&s2)) {
            continue;
        }
        c.push(cj.clone());
        y.push(yj);
        extend(lat, per, tau, &s2, c, y, found);
        c.pop();
        y.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::make_field;
    use proptest::prelude::*;

    struct K73 {
        k: FieldContext,
        rho: QuadInt,
        sigma: QuadInt,
    }

    fn k73() -> K73 {
        let k = make_field(&BigInt::from(73)).unwrap();
        K73 {
            rho: k.elem(4, 1),
            sigma: k.elem(83, 22),
            k,
        }
    }

    fn mat(k: &FieldContext, rows: Vec<Vec<QuadInt>>) -> Vec<Vec<QuadInt>> {
        let _ = k;
        rows
    }

    #[test]
    fn lattice_construction() {
        let K73 { k, rho, sigma } = k73();
        let rp = rho.conjugate();
        let one = k.one();
        let z = k.zero();
        let l = make_lattice(&k, mat(&k, vec![vec![rho.clone(), one.clone()], vec![one.clone(), rp.clone()]])).unwrap();
        assert_eq!(l.determinant(), one);
        let m = vec![
            vec![rho.clone(), one.clone(), z.clone()],
            vec![one.clone(), rp.clone(), one.clone()],
            vec![z.clone(), one.clone(), &rp * &sigma],
        ];
        assert_eq!(make_lattice(&k, m), Err(Error::NotTotallyPositiveDefinite { size: 3 }));
        let m = vec![
            vec![rp.clone(), one.clone(), z.clone()],
            vec![one.clone(), &rp * &sigma, rho.clone()],
            vec![z.clone(), rho.clone(), k.int(2)],
        ];
        assert_eq!(make_lattice(&k, m), Err(Error::NotTotallyPositiveDefinite { size: 3 }));
        let m = vec![vec![one.clone(), one.clone()], vec![z.clone(), one.clone()]];
        assert_eq!(make_lattice(&k, m), Err(Error::NotSymmetric));
    }

    #[test]
    fn representation_examples() {
        let K73 { k, rho, sigma } = k73();
        let one = k.one();
        let l1 = diagonal(&k, &[one.clone()]).unwrap();
        assert_eq!(represents(&l1, &one), Some(vec![one.clone()]));
        let l3 = diagonal(&k, &[one.clone(), rho.clone(), sigma.clone()]).unwrap();
        assert_eq!(represents(&l3, &rho.conjugate()), None);
        let m = make_lattice(&k, vec![vec![k.int(1), k.int(1)], vec![k.int(1), k.int(2)]]).unwrap();
        let x = represents(&m, &k.int(2)).unwrap();
        assert_eq!(m.evaluate(&x), k.int(2));
        assert_eq!(represents(&m, &k.int(5)).map(|x| m.evaluate(&x)), Some(k.int(5)));
        assert_eq!(represents(&m, &k.int(3)), None);
    }

    #[test]
    fn truants() {
        let K73 { k, rho, sigma } = k73();
        let rp = rho.conjugate();
        let sp = sigma.conjugate();
        let queue = named_queue("paper73", &k).unwrap();
        let l1 = diagonal(&k, &[k.one()]).unwrap();
        assert_eq!(truant(&l1, &queue), Some(rho.clone()));
        assert_eq!(truant(&l1, &[]), None);
        let one = k.one();
        let z = k.zero();
        for a in [0, 1] {
            for b in [0, 1] {
                let m = vec![
                    vec![one.clone(), z.clone(), z.clone(), z.clone(), z.clone()],
                    vec![z.clone(), rho.clone(), k.int(a), z.clone(), z.clone()],
                    vec![z.clone(), k.int(a), rp.clone(), z.clone(), z.clone()],
                    vec![z.clone(), z.clone(), z.clone(), sigma.clone(), k.int(b)],
                    vec![z.clone(), z.clone(), z.clone(), k.int(b), sp.clone()],
                ];
                let l5 = make_lattice(&k, m).unwrap();
                assert_eq!(truant(&l5, &queue), Some(k.int(2)), "a={a} b={b}");
                for e in escalate(&l5, &k.int(2)).unwrap() {
                    let c: Vec<&QuadInt> = (0..5).map(|i| e.entry(i, 5)).collect();
                    for (i, ci) in c.iter().enumerate() {
                        if i == 0 {
                            assert!(ci.is_zero() || **ci == one);
                        } else {
                            assert!(ci.is_zero());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn escalation_examples() {
        let K73 { k, rho, sigma } = k73();
        let l1 = diagonal(&k, &[k.one()]).unwrap();
        let e = escalate(&l1, &rho).unwrap();
        assert_eq!(e, vec![diagonal(&k, &[k.one(), rho.clone()]).unwrap()]);
        let l = diagonal(&k, &[k.one(), sigma.clone(), rho.clone()]).unwrap();
        let e = escalate(&l, &rho.conjugate()).unwrap();
        let cross: Vec<QuadInt> = e.iter().map(|m| m.entry(2, 3).clone()).collect();
        assert_eq!(cross, vec![k.zero(), k.one()]);
        for m in &e {
            assert!(m.entry(0, 3).is_zero() && m.entry(1, 3).is_zero());
            assert!(represents(m, &rho.conjugate()).is_some());
        }
        assert_eq!(escalate(&l1, &k.one()), Err(Error::AlreadyRepresented));
    }

    fn det3(m: &[Vec<QuadInt>]) -> QuadInt {
        let c = |i: usize, j: usize| m[i][j].clone();
        c(0, 0) * (c(1, 1) * c(2, 2) - c(1, 2) * c(2, 1)) - c(0, 1) * (c(1, 0) * c(2, 2) - c(1, 2) * c(2, 0))
            + c(0, 2) * (c(1, 0) * c(2, 1) - c(1, 1) * c(2, 0))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]
        #[test]
        fn definiteness_matches_minors(v in proptest::collection::vec((-6i64..12, -3i64..4), 6)) {
            let k = make_field(&BigInt::from(73)).unwrap();
            let e: Vec<QuadInt> = v.iter().map(|&(x, y)| k.elem(x, y)).collect();
            let m = vec![
                vec![e[0].clone(), e[1].clone(), e[2].clone()],
                vec![e[1].clone(), e[3].clone(), e[4].clone()],
                vec![e[2].clone(), e[4].clone(), e[5].clone()],
            ];
            let m1 = e[0].clone();
            let m2 = &e[0] * &e[3] - e[1].square();
            let m3 = det3(&m);
            let oracle = m1.is_totally_positive() && m2.is_totally_positive() && m3.is_totally_positive();
            let got = make_lattice(&k, m);
            prop_assert_eq!(got.is_ok(), oracle);
            if let Ok(l) = got {
                prop_assert_eq!(l.leading_minors(), vec![m1, m2, m3]);
            }
        }

        #[test]
        fn representation_is_exhaustive(v in proptest::collection::vec((1i64..6, -2i64..3), 3), tx in 1i64..20, ty in -3i64..4) {
            let k = make_field(&BigInt::from(73)).unwrap();
            let rho = k.elem(4, 1);
            let diag = [k.elem(v[0].0, 0), rho.clone(), k.elem(v[2].0, 0)];
            let off = k.elem(v[1].1, 0);
            let m = vec![
                vec![diag[0].clone(), off.clone(), k.zero()],
                vec![off.clone(), diag[1].clone(), k.zero()],
                vec![k.zero(), k.zero(), diag[2].clone()],
            ];
            prop_assume!(make_lattice(&k, m.clone()).is_ok());
            let l = make_lattice(&k, m).unwrap();
            let t = k.elem(tx, ty);
            prop_assume!(t.is_totally_positive());
            let found = represents(&l, &t);
            if let Some(x) = &found {
                prop_assert_eq!(l.evaluate(x), t.clone());
            }
            // brute force over a larger coefficient box
            let mut brute = false;
            let range: Vec<QuadInt> = (-4i64..=4).flat_map(|a| (-1i64..=1).map(move |b| (a, b))).map(|(a, b)| k.elem(a, b)).collect();
            'outer: for x0 in &range {
                for x1 in &range {
                    for x2 in &range {
                        if l.evaluate(&[x0.clone(), x1.clone(), x2.clone()]) == t {
                            brute = true;
                            break 'outer;
                        }
                    }
                }
            }
            if brute {
                prop_assert!(found.is_some());
            }
        }
    }
}
