//! Serde helpers: exact integers are written as decimal strings.

use num_bigint::BigInt;
use serde::ser::SerializeSeq;
use serde::Serializer;

pub fn bigint<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub fn bigint_vec<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&x.to_string())?;
    }
    seq.end()
}
