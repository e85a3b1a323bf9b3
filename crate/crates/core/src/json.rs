//! JSON shapes for exact numbers: big integers as decimal strings, and
//! rationals as `{"num": "...", "den": "...", "approx": f64}`.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::ser::{SerializeMap, SerializeSeq, SerializeStruct};
use serde::Serializer;

use crate::Rational;

pub fn rational<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
    let mut st = s.serialize_struct("Rational", 3)?;
    st.serialize_field("num", &v.numer().to_string())?;
    st.serialize_field("den", &v.denom().to_string())?;
    st.serialize_field("approx", &v.to_f64().unwrap_or(f64::NAN))?;
    st.end()
}

pub fn biguint<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub fn biguint_map<S: Serializer, V: serde::Serialize>(
    m: &std::collections::BTreeMap<BigUint, V>,
    s: S,
) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(&k.to_string(), v)?;
    }
    map.end()
}

/// Serialises a rational by reference, for use inside collections.
pub struct Exact<'a>(pub &'a Rational);

impl serde::Serialize for Exact<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        rational(self.0, s)
    }
}

pub fn rationals<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Exact(x))?;
    }
    seq.end()
}
