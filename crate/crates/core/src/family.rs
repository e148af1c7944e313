//! Fields with `sqrt(D) = [k; u, ..., u, 2k]` (`l` copies of `u`), the
//! search for good parameters `t`, and certificates built from the
//! convergents `alpha_i`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::arith::{is_squarefree, Effort, Squarefree};
use crate::cfrac::{convergents, expand_sqrt_limited, q_sequence};
use crate::error::{Error, Result};
use crate::quadfield::{
    check_prop24, enumerate_dominated_squares, field_unchecked, Certificate, Cond4Mode, FieldContext,
    QuadInt,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyInstance {
    #[serde(serialize_with = "crate::ser::bigint")]
    pub u: BigInt,
    pub l: usize,
    #[serde(serialize_with = "crate::ser::bigint")]
    pub t: BigInt,
    #[serde(serialize_with = "crate::ser::bigint")]
    pub k: BigInt,
    #[serde(rename = "D", serialize_with = "crate::ser::bigint")]
    pub d: BigInt,
    #[serde(serialize_with = "crate::ser::bigint_vec")]
    pub q_seq: Vec<BigInt>,
    /// `N_i` for odd `i <= l`.
    #[serde(rename = "N", serialize_with = "ser_map")]
    pub n_of: BTreeMap<usize, BigInt>,
    /// `k_i = q_i q_{l-i-1}` for odd `i <= l`.
    #[serde(rename = "k_i", serialize_with = "ser_map")]
    pub k_of: BTreeMap<usize, BigInt>,
    /// Built from the odd-`u`, odd-`t` branch, outside the squarefree search setting.
    pub off_path: bool,
}

fn ser_map<S: serde::Serializer>(m: &BTreeMap<usize, BigInt>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut mm = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        mm.serialize_entry(&k.to_string(), &v.to_string())?;
    }
    mm.end()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Admissibility {
    pub ok: bool,
    pub reasons: Vec<String>,
}

/// `u = 2 mod 4`, `u^2/4 + 1` squarefree, `l` odd and `q_l` even.
pub fn admissible(u: &BigInt, l: usize) -> Admissibility {
    let mut reasons = Vec::new();
    if !u.is_positive() || l == 0 {
        reasons.push("u and l must be positive".to_string());
        return Admissibility { ok: false, reasons };
    }
    if u.mod_floor(&BigInt::from(4)) != BigInt::from(2) {
        reasons.push(format!("u = {u} is not 2 mod 4"));
    } else {
        let c: BigInt = u * u / 4 + 1;
        if is_squarefree(&c, &Effort::default()) != Ok(Squarefree::Yes) {
            reasons.push(format!("u^2/4 + 1 = {c} is not squarefree"));
        }
    }
    if l % 2 == 0 {
        reasons.push(format!("l = {l} is even"));
    }
    let q = q_sequence(u, l);
    if q[l].is_odd() {
        reasons.push(format!("q_l = {} is odd", q[l]));
    }
    Admissibility {
        ok: reasons.is_empty(),
        reasons,
    }
}

/// `q_i` with `q_{-1} = 0`.
fn qi(q: &[BigInt], i: i64) -> BigInt {
    if i < 0 {
        BigInt::zero()
    } else {
        q[i as usize].clone()
    }
}

/// The two closed forms of D: `k^2 + t q_{l-1} + 1` and
/// `(t^2 q_l^2 + 2t(u q_l + 2 q_{l-1}) + u^2 + 4) / 4` (returned times 4).
pub fn d_closed_forms(u: &BigInt, l: usize, t: &BigInt) -> (BigInt, BigInt) {
    let q = q_sequence(u, l);
    let ql = &q[l];
    let ql1 = qi(&q, l as i64 - 1);
    let k: BigInt = (ql * t + u) / 2;
    let d1 = &k * &k + t * &ql1 + 1;
    let d4 = t * t * ql * ql + t * 2 * (u * ql + &ql1 * 2) + u * u + 4;
    (d1, d4)
}

/// `N_i = (-1)^{i+1} (t q_i q_{l-i-1} + 1)`.
pub fn n_formula(q: &[BigInt], l: usize, t: &BigInt, i: usize) -> BigInt {
    let v = t * &q[i] * qi(q, l as i64 - i as i64 - 1) + 1;
    if i % 2 == 1 {
        v
    } else {
        -v
    }
}

/// `gamma^2 = (k p_l + p_{l-1}) / q_l` for `gamma = [k; u, ..., u, 2k]`.
pub fn gamma_squared(u: &BigInt, l: usize, k: &BigInt) -> BigRational {
    let q = q_sequence(u, l);
    let p = |i: i64| k * qi(&q, i) + qi(&q, i - 1);
    BigRational::new(k * p(l as i64) + p(l as i64 - 1), q[l].clone())
}

pub fn instantiate(u: &BigInt, l: usize, t: &BigInt) -> Result<FamilyInstance> {
    if !u.is_positive() || l == 0 || !t.is_positive() {
        return Err(Error::OutOfRange("u, l and t must be positive".to_string()));
    }
    let adm = admissible(u, l);
    let off_path = !adm.ok;
    if off_path && !(u.is_odd() && t.is_odd()) {
        return Err(Error::Inadmissible(adm.reasons.join("; ")));
    }
    let q = q_sequence(u, l);
    let twice_k = &q[l] * t + u;
    if twice_k.is_odd() {
        return Err(Error::ParityViolation);
    }
    let k: BigInt = &twice_k / 2;
    let (d1, d4) = d_closed_forms(u, l, t);
    assert_eq!(&d1 * 4, d4, "closed forms of D disagree");
    let mut n_of = BTreeMap::new();
    let mut k_of = BTreeMap::new();
    for i in (1..=l).step_by(2) {
        n_of.insert(i, n_formula(&q, l, t, i));
        k_of.insert(i, &q[i] * qi(&q, l as i64 - i as i64 - 1));
    }
    Ok(FamilyInstance {
        u: u.clone(),
        l,
        t: t.clone(),
        k,
        d: d1,
        q_seq: q,
        n_of,
        k_of,
        off_path,
    })
}

/// First failing sub-check of `verify_instance`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Mismatch {
    Period { expected: String, found: String },
    Norm { i: usize, formula: String, direct: String },
    Divisibility,
}

impl FamilyInstance {
    /// `p_i = k q_i + q_{i-1}` for `i <= l`.
    pub fn p(&self, i: usize) -> BigInt {
        &self.k * &self.q_seq[i] + qi(&self.q_seq, i as i64 - 1)
    }

    pub fn field(&self) -> FieldContext {
        field_unchecked(&self.d)
    }

    /// `alpha_i = p_i + q_i sqrt(D)`.
    pub fn alpha(&self, field: &FieldContext, i: usize) -> QuadInt {
        field.from_sqrt_coords(self.p(i), self.q_seq[i].clone())
    }

    /// Odd indices `i <= (l-1)/2`, where the norms are pairwise different.
    pub fn candidate_indices(&self) -> Vec<usize> {
        (1..=self.l.saturating_sub(1) / 2).filter(|i| i % 2 == 1).collect()
    }
}

/// Checks the expansion of `sqrt(D)`, the norm formula against `p^2 - D q^2`,
/// and `q_l | k p_l + p_{l-1}`.
pub fn verify_instance(inst: &FamilyInstance) -> std::result::Result<(), Mismatch> {
    let mut expected: Vec<BigInt> = vec![inst.u.clone(); inst.l];
    expected.push(&inst.k * 2);
    let fmt = |a0: &BigInt, v: &[BigInt]| {
        let body: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        format!("[{a0}; {}]", body.join(","))
    };
    let exp = match expand_sqrt_limited(&inst.d, inst.l + 1) {
        Ok(Some(e)) => e,
        Ok(None) => {
            return Err(Mismatch::Period {
                expected: fmt(&inst.k, &expected),
                found: format!("period longer than {}", inst.l + 1),
            })
        }
        Err(e) => {
            return Err(Mismatch::Period {
                expected: fmt(&inst.k, &expected),
                found: e.to_string(),
            })
        }
    };
    if exp.a0 != inst.k || exp.period != expected {
        return Err(Mismatch::Period {
            expected: fmt(&inst.k, &expected),
            found: fmt(&exp.a0, &exp.period),
        });
    }
    for c in convergents(&exp, inst.l + 1) {
        let f = n_formula(&inst.q_seq, inst.l, &inst.t, c.i);
        if f != c.n || c.p != inst.p(c.i) || c.q != inst.q_seq[c.i] {
            return Err(Mismatch::Norm {
                i: c.i,
                formula: f.to_string(),
                direct: c.n.to_string(),
            });
        }
    }
    let l = inst.l;
    let lhs = &inst.k * inst.p(l) + inst.p(l - 1);
    if !lhs.is_multiple_of(&inst.q_seq[l]) {
        return Err(Mismatch::Divisibility);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchFilters {
    /// Keep only `D = 2 mod 4`.
    pub mod4: bool,
    pub effort: Effort,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormEvidence {
    pub i: usize,
    #[serde(rename = "N", serialize_with = "crate::ser::bigint")]
    pub n: BigInt,
    #[serde(serialize_with = "crate::ser::bigint")]
    pub k_i: BigInt,
    pub squarefree: Squarefree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Evidence {
    pub d_squarefree: Squarefree,
    #[serde(serialize_with = "crate::ser::bigint")]
    pub d_mod_4: BigInt,
    pub norms: Vec<NormEvidence>,
    pub k_i_distinct: bool,
    pub non_units: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchHit {
    pub instance: FamilyInstance,
    pub evidence: Evidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanRecord {
    #[serde(serialize_with = "crate::ser::bigint")]
    pub t: BigInt,
    pub accepted: bool,
    /// First reason for rejection.
    pub reason: Option<String>,
    pub unresolved: bool,
}

fn evaluate(inst: &FamilyInstance, filters: &SearchFilters) -> (Evidence, Option<String>, bool) {
    let d_sf = is_squarefree(&inst.d, &filters.effort).unwrap_or(Squarefree::No);
    let d_mod_4 = inst.d.mod_floor(&BigInt::from(4));
    let idx = inst.candidate_indices();
    let mut norms = Vec::new();
    let mut unresolved = d_sf == Squarefree::Unresolved;
    let mut reason = match d_sf {
        Squarefree::Yes => None,
        Squarefree::No => Some(format!("D = {} is not squarefree", inst.d)),
        Squarefree::Unresolved => Some(format!("squarefreeness of D = {} unresolved", inst.d)),
    };
    if reason.is_none() && filters.mod4 && d_mod_4 != BigInt::from(2) {
        reason = Some(format!("D = {d_mod_4} mod 4"));
    }
    let mut non_units = true;
    for &i in &idx {
        let n = inst.n_of[&i].clone();
        let sf = if reason.is_none() {
            is_squarefree(&n, &filters.effort).unwrap_or(Squarefree::No)
        } else {
            Squarefree::Unresolved
        };
        if n.abs().is_one() {
            non_units = false;
        }
        if reason.is_none() {
            match sf {
                Squarefree::Yes => {}
                Squarefree::No => reason = Some(format!("N_{i} = {n} is not squarefree")),
                Squarefree::Unresolved => {
                    unresolved = true;
                    reason = Some(format!("squarefreeness of N_{i} = {n} unresolved"))
                }
            }
        }
        norms.push(NormEvidence {
            i,
            n,
            k_i: inst.k_of[&i].clone(),
            squarefree: sf,
        });
    }
    let mut ks: Vec<&BigInt> = idx.iter().map(|i| &inst.k_of[i]).collect();
    ks.sort();
    let k_i_distinct = ks.windows(2).all(|w| w[0] != w[1]);
    if reason.is_none() && !k_i_distinct {
        reason = Some("k_i not pairwise distinct".to_string());
    }
    if reason.is_none() && !non_units {
        reason = Some("some alpha_i is a unit".to_string());
    }
    (
        Evidence {
            d_squarefree: d_sf,
            d_mod_4,
            norms,
            k_i_distinct,
            non_units,
        },
        reason,
        unresolved,
    )
}

/// Every `t` in `[t_min, t_max]` with a squarefree `D` (optionally `2 mod 4`),
/// squarefree non-unit `N_i` and distinct `k_i` for odd `i <= (l-1)/2`, in
/// ascending order, together with a per-`t` scan log.
pub fn scan_t(
    u: &BigInt,
    l: usize,
    t_min: &BigInt,
    t_max: &BigInt,
    filters: &SearchFilters,
) -> Result<(Vec<SearchHit>, Vec<ScanRecord>)> {
    let adm = admissible(u, l);
    if !adm.ok {
        return Err(Error::Inadmissible(adm.reasons.join("; ")));
    }
    let mut ts = Vec::new();
    let mut t = t_min.max(&BigInt::one()).clone();
    while &t <= t_max {
        ts.push(t.clone());
        t += 1;
    }
    let results: Vec<(Option<SearchHit>, ScanRecord)> = ts
        .par_iter()
        .map(|t| {
            let inst = instantiate(u, l, t).expect("admissible parameters instantiate");
            let (evidence, reason, unresolved) = evaluate(&inst, filters);
            let rec = ScanRecord {
                t: t.clone(),
                accepted: reason.is_none(),
                reason: reason.clone(),
                unresolved,
            };
            let hit = reason.is_none().then(|| SearchHit { instance: inst, evidence });
            (hit, rec)
        })
        .collect();
    let mut hits = Vec::new();
    let mut log = Vec::new();
    for (h, r) in results {
        if let Some(h) = h {
            hits.push(h);
        }
        log.push(r);
    }
    Ok((hits, log))
}

pub fn search_t(
    u: &BigInt,
    l: usize,
    t_min: &BigInt,
    t_max: &BigInt,
    filters: &SearchFilters,
) -> Result<Vec<SearchHit>> {
    Ok(scan_t(u, l, t_min, t_max, filters)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeMode {
    /// Odd `i <= (l-4)/2`, where dominated squares are known to vanish.
    Prop11,
    /// Odd `i <= (l-1)/2`; dominated squares must be enumerated.
    Direct,
}

pub fn candidate_window(l: usize, mode: RangeMode) -> Vec<usize> {
    let top = match mode {
        RangeMode::Prop11 => (l as i64 - 4).div_euclid(2),
        RangeMode::Direct => (l as i64 - 1).div_euclid(2),
    };
    (1..=top.max(0) as usize).filter(|i| i % 2 == 1).collect()
}

/// `{1} ∪ {alpha_i}` over the window of `mode`.
pub fn build_candidate_set(inst: &FamilyInstance, mode: RangeMode) -> Result<Vec<QuadInt>> {
    let idx = candidate_window(inst.l, mode);
    if idx.is_empty() && mode == RangeMode::Prop11 {
        return Err(Error::EmptyWindow);
    }
    let field = inst.field();
    let mut v = vec![field.one()];
    v.extend(idx.into_iter().map(|i| inst.alpha(&field, i)));
    Ok(v)
}

/// Certificate for the candidate set, with condition (4) by enumeration.
pub fn certify_non_universality(inst: &FamilyInstance, mode: RangeMode) -> Result<Certificate> {
    let set = build_candidate_set(inst, mode)?;
    let field = set[0].field().clone();
    check_prop24(&field, &set, Cond4Mode::Brute)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prop11Check {
    pub i: usize,
    pub j: usize,
    pub holds: bool,
    pub nonzero_found: usize,
    /// Hypotheses of the window statement that the inputs violate.
    pub window_violations: Vec<String>,
}

/// Whether the only `mu` with `alpha_i alpha_j - mu^2` totally positive is 0.
pub fn prop11_brute_check(inst: &FamilyInstance, i: usize, j: usize) -> Result<Prop11Check> {
    if i > inst.l || j > inst.l {
        return Err(Error::OutOfRange(format!("indices must not exceed l = {}", inst.l)));
    }
    let mut notes = Vec::new();
    if i % 2 == 0 || j % 2 == 0 {
        notes.push("i and j must be odd".to_string());
    }
    if i >= j {
        notes.push("need i < j".to_string());
    }
    if 2 * j + 4 > inst.l {
        notes.push(format!("j = {j} exceeds (l-4)/2"));
    }
    let five = BigInt::from(5);
    if !(inst.k > inst.u && inst.u >= five) {
        notes.push(format!("need k > u >= 5 (k = {}, u = {})", inst.k, inst.u));
    }
    if inst.d.mod_floor(&BigInt::from(4)).is_one() {
        notes.push("D = 1 mod 4".to_string());
    }
    let field = inst.field();
    let g = &inst.alpha(&field, i) * &inst.alpha(&field, j);
    let sq = enumerate_dominated_squares(&g)?;
    let nonzero = sq.iter().filter(|c| !c.is_zero()).count();
    Ok(Prop11Check {
        i,
        j,
        holds: nonzero == 0,
        nonzero_found: nonzero,
        window_violations: notes,
    })
}

/// Small helper for reports: `t` as a machine integer when it fits.
pub fn t_u64(inst: &FamilyInstance) -> Option<u64> {
    inst.t.to_u64()
}
