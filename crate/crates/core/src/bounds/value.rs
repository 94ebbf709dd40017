use std::fmt;

use serde::{Serialize, Serializer};

/// A nonnegative quantity that may exceed the `f64` range.
///
/// `value` holds the number whenever it is finite; `log10` is always set
/// (`-∞` for zero). Both are computed directly in `f64` when representable so
/// that exact scalings (powers of two, integer factors) survive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    #[serde(serialize_with = "finite_or_null")]
    pub value: Option<f64>,
    #[serde(serialize_with = "finite_f64_or_null")]
    pub log10: f64,
}

fn finite_or_null<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) if x.is_finite() => s.serialize_f64(*x),
        _ => s.serialize_none(),
    }
}

fn finite_f64_or_null<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

impl BoundValue {
    /// Uses `direct` when it is finite, otherwise `log10()`.
    pub fn new(direct: f64, log10: impl FnOnce() -> f64) -> Self {
        if direct.is_finite() {
            BoundValue::from_f64(direct)
        } else {
            BoundValue::from_log10(log10())
        }
    }

    pub fn from_f64(v: f64) -> Self {
        BoundValue {
            value: Some(v),
            log10: v.log10(),
        }
    }

    pub fn from_log10(log10: f64) -> Self {
        let v = 10f64.powf(log10);
        BoundValue {
            value: v.is_finite().then_some(v),
            log10,
        }
    }

    pub fn zero() -> Self {
        BoundValue::from_f64(0.0)
    }

    /// The value, `+∞` when it overflows `f64`.
    pub fn get(&self) -> f64 {
        self.value.unwrap_or(f64::INFINITY)
    }

    pub fn overflows(&self) -> bool {
        self.value.is_none()
    }

    /// Natural logarithm, available even when the value overflows.
    pub fn ln(&self) -> f64 {
        match self.value {
            Some(v) => v.ln(),
            None => self.log10 * std::f64::consts::LN_10,
        }
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value {
            Some(v) => write!(f, "{v:.6e}"),
            None => write!(f, "10^{:.4}", self.log10),
        }
    }
}
