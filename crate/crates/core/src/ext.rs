//! Extended reals `ℝ ∪ {−∞, +∞}`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A real number or one of the two infinities. Never NaN.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);
    pub const NEG_INFINITY: ExtReal = ExtReal(f64::NEG_INFINITY);
    pub const ZERO: ExtReal = ExtReal(0.0);

    /// Wraps a float; NaN is rejected.
    pub fn new(x: f64) -> Result<ExtReal> {
        if x.is_nan() {
            Err(Error::IllPosed("NaN is not an extended real".into()))
        } else {
            Ok(ExtReal(x))
        }
    }

    /// Wraps a float known not to be NaN.
    ///
    /// Panics on NaN; only used on values produced by arithmetic that
    /// cannot yield NaN.
    pub fn from_f64(x: f64) -> ExtReal {
        assert!(!x.is_nan(), "NaN passed to ExtReal::from_f64");
        ExtReal(x)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_pos_inf(self) -> bool {
        self.0 == f64::INFINITY
    }

    pub fn is_neg_inf(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Addition that rejects `(+∞) + (−∞)`.
    pub fn checked_add(self, other: ExtReal) -> Result<ExtReal> {
        if (self.is_pos_inf() && other.is_neg_inf()) || (self.is_neg_inf() && other.is_pos_inf()) {
            return Err(Error::UndefinedSum);
        }
        Ok(ExtReal(self.0 + other.0))
    }

    /// Multiplication by a nonnegative real with `0·(±∞) = 0`.
    pub fn scale_nonneg(self, lambda: f64) -> ExtReal {
        debug_assert!(lambda >= 0.0);
        if lambda == 0.0 {
            ExtReal::ZERO
        } else {
            ExtReal(self.0 * lambda)
        }
    }

    /// Positive part `max(x, 0)`.
    pub fn pos(self) -> ExtReal {
        ExtReal(self.0.max(0.0))
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn total_cmp(&self, other: &ExtReal) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pos_inf() {
            write!(f, "inf")
        } else if self.is_neg_inf() {
            write!(f, "-inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Sums extended reals in index order.
pub fn checked_sum<I: IntoIterator<Item = ExtReal>>(items: I) -> Result<ExtReal> {
    let mut acc = ExtReal::ZERO;
    let mut saw_pos = false;
    let mut saw_neg = false;
    for x in items {
        saw_pos |= x.is_pos_inf();
        saw_neg |= x.is_neg_inf();
        if saw_pos && saw_neg {
            return Err(Error::UndefinedSum);
        }
        acc = acc.checked_add(x)?;
    }
    Ok(acc)
}

/// Serializes a float that may be infinite: finite values as JSON numbers,
/// infinities as the strings `"inf"` / `"-inf"`.
pub(crate) fn serialize_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    let x = *x;
    if x == f64::INFINITY {
        s.serialize_str("inf")
    } else if x == f64::NEG_INFINITY {
        s.serialize_str("-inf")
    } else {
        s.serialize_f64(x)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Num(f64),
    Str(String),
}

pub(crate) fn parse_f64_token(token: &str) -> Option<f64> {
    match token {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => None,
    }
}

pub(crate) fn deserialize_f64<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    match NumOrStr::deserialize(d)? {
        NumOrStr::Num(x) => Ok(x),
        NumOrStr::Str(s) => parse_f64_token(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("expected number, \"inf\" or \"-inf\", got {s:?}"))),
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_f64(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let x = deserialize_f64(d)?;
        ExtReal::new(x).map_err(serde::de::Error::custom)
    }
}
