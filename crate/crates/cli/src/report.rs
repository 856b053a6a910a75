//! Report serialization. Floats are printed like C's `%.17g` so reports are
//! byte-identical whenever the computed values are.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;
pub use synsafe_core::scalar::format_g17 as g17;

pub const SCHEMA: u32 = 1;

/// A float serialized through [`g17`]; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(g17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}
