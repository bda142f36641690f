//! Number formatting shared by the CSV and JSON writers.

use num_complex::Complex64 as C64;
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::Serializer;

/// Shortest round-trip scientific representation (at most 17 significant digits).
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn ser_complex<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    let mut st = s.serialize_struct("complex", 2)?;
    st.serialize_field("re", &z.re)?;
    st.serialize_field("im", &z.im)?;
    st.end()
}

struct Wrap<'a>(&'a C64);

impl serde::Serialize for Wrap<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ser_complex(self.0, s)
    }
}

pub fn ser_complex_vec<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&Wrap(z))?;
    }
    seq.end()
}
