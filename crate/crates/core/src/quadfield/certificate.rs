use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use super::{enumerate_dominated_squares, same_square_class, FieldContext, QuadInt};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cond4Mode {
    /// Enumerate every square dominated by each product.
    Brute,
    /// Small norms and primitive products, which force indecomposability.
    Condition5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pair: Option<(usize, usize)>,
    pub verdict: Verdict,
    pub evidence: String,
}

/// Outcome of checking a candidate set against the rank criterion.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    #[serde(rename = "D", serialize_with = "ser_field_d")]
    pub field: FieldContext,
    pub elements: Vec<QuadInt>,
    pub mode: Cond4Mode,
    #[serde(rename = "conditions")]
    pub checks: Vec<CheckRecord>,
    /// Number of elements when valid: no universal classical form in M - 1 variables exists.
    #[serde(rename = "M")]
    pub conclusion_m: Option<usize>,
    pub valid: bool,
}

fn ser_field_d<S: serde::Serializer>(f: &FieldContext, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&f.d().to_string())
}

fn record(kind: &str, index: Option<usize>, pair: Option<(usize, usize)>, ok: bool, evidence: String) -> CheckRecord {
    CheckRecord {
        kind: kind.to_string(),
        index,
        pair,
        verdict: Verdict::of(ok),
        evidence,
    }
}

/// Checks that `elems` (starting with 1) certify that no universal classical
/// form in `|elems| - 1` variables exists over the field.
pub fn check_prop24(field: &FieldContext, elems: &[QuadInt], mode: Cond4Mode) -> Result<Certificate> {
    if elems.is_empty() || elems[0] != field.one() {
        return Err(Error::FirstElementNotOne);
    }
    for e in elems {
        if e.field() != field {
            return Err(Error::MixedFields);
        }
    }
    let delta_sq = field.delta_sq();
    let mut checks = Vec::new();
    let mut tp = Vec::with_capacity(elems.len());
    for (i, a) in elems.iter().enumerate() {
        let pos = a.is_totally_positive();
        tp.push(pos);
        checks.push(record("totally_positive", Some(i), None, pos, format!("element {a}")));
        let n = a.norm();
        let n2 = &n * &n;
        let ok = n2 < *delta_sq;
        checks.push(record(
            "norm_bound",
            Some(i),
            None,
            ok,
            format!("N = {n}, N^2 = {n2} vs delta^2 = {delta_sq}"),
        ));
        let c = a.content().unwrap_or_else(|_| BigInt::from(0));
        checks.push(record("primitive", Some(i), None, c.is_one(), format!("content = {c}")));
        if mode == Cond4Mode::Condition5 {
            let n4 = &n2 * &n2;
            checks.push(record(
                "condition5_norm",
                Some(i),
                None,
                n4 < *delta_sq,
                format!("N^4 = {n4} vs delta^2 = {delta_sq}"),
            ));
        }
    }
    for i in 0..elems.len() {
        for j in (i + 1)..elems.len() {
            let (a, b) = (&elems[i], &elems[j]);
            let sq = if tp[i] && tp[j] {
                same_square_class(a, b)?
            } else {
                true
            };
            checks.push(record(
                "distinct_square_class",
                None,
                Some((i, j)),
                !sq,
                if sq {
                    "a_i * a_j is a square or an element is not totally positive".to_string()
                } else {
                    "a_i * a_j is not a square in O_K".to_string()
                },
            ));
            let prod = a * b;
            match mode {
                Cond4Mode::Brute => {
                    let (ok, ev) = if prod.is_totally_positive() {
                        let sq = enumerate_dominated_squares(&prod)?;
                        let nonzero: Vec<&QuadInt> = sq.iter().filter(|c| !c.is_zero()).collect();
                        let ev = match nonzero.first() {
                            None => "box enumeration, 0 nonzero squares found".to_string(),
                            Some(w) => format!(
                                "box enumeration, {} nonzero squares found, e.g. {w}",
                                nonzero.len()
                            ),
                        };
                        (nonzero.is_empty(), ev)
                    } else {
                        (false, "product is not totally positive".to_string())
                    };
                    checks.push(record("dominated_squares", None, Some((i, j)), ok, ev));
                }
                Cond4Mode::Condition5 => {
                    let c = prod.content().unwrap_or_else(|_| BigInt::from(0));
                    checks.push(record(
                        "condition5_primitive_product",
                        None,
                        Some((i, j)),
                        c.is_one(),
                        format!("content(a_i * a_j) = {c}"),
                    ));
                }
            }
        }
    }
    let valid = checks.iter().all(|c| c.verdict == Verdict::Pass);
    Ok(Certificate {
        field: field.clone(),
        elements: elems.to_vec(),
        mode,
        checks,
        conclusion_m: valid.then_some(elems.len()),
        valid,
    })
}

impl Certificate {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Fail)
    }
}
