//! Non-negative reals carried by their natural logarithm.
//!
//! Volume factors for state-sized networks exceed `10^28000` and evidences sit
//! far below `f64` underflow, so every count and probability is stored as
//! `ln |x|`. Zero is an explicit flag rather than `-inf` so that it survives
//! serialization and comparisons unambiguously.

use core::cmp::Ordering;
use core::fmt;
use core::ops::{Div, Mul};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::math;

#[derive(Clone, Copy, PartialEq)]
pub struct LogValue {
    log_magnitude: f64,
    is_zero: bool,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { log_magnitude: f64::NEG_INFINITY, is_zero: true };
    pub const ONE: LogValue = LogValue { log_magnitude: 0.0, is_zero: false };

    /// Builds from a natural log; `-inf` maps to zero. NaN and `+inf` are rejected.
    pub fn from_ln(ln: f64) -> Option<Self> {
        if ln.is_nan() || ln == f64::INFINITY {
            return None;
        }
        if ln == f64::NEG_INFINITY {
            return Some(Self::ZERO);
        }
        Some(Self { log_magnitude: ln, is_zero: false })
    }

    /// Builds from a natural log that the caller knows is finite.
    ///
    /// # Panics
    /// On NaN or `+inf`.
    pub fn ln_unchecked(ln: f64) -> Self {
        Self::from_ln(ln).expect("log value must not be NaN or +inf")
    }

    pub fn from_f64(x: f64) -> Option<Self> {
        if !(x >= 0.0) || !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::ZERO);
        }
        Some(Self { log_magnitude: math::ln(x), is_zero: false })
    }

    pub fn from_count(count: u128) -> Self {
        if count == 0 {
            Self::ZERO
        } else {
            Self { log_magnitude: math::ln(count as f64), is_zero: false }
        }
    }

    /// Natural log; `-inf` when zero.
    #[inline]
    pub fn ln(self) -> f64 {
        if self.is_zero {
            f64::NEG_INFINITY
        } else {
            self.log_magnitude
        }
    }

    pub fn log10(self) -> f64 {
        self.ln() / core::f64::consts::LN_10
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.is_zero
    }

    /// `exp` back to linear scale; under/overflows like `f64`.
    pub fn to_f64(self) -> f64 {
        if self.is_zero {
            0.0
        } else {
            math::exp(self.log_magnitude)
        }
    }

    /// Scientific notation split `(mantissa, exponent)` with `1 <= mantissa < 10`.
    pub fn scientific(self) -> Option<(f64, i64)> {
        if self.is_zero {
            return None;
        }
        let l10 = self.log10();
        let exponent = math::floor(l10);
        Some((libm::pow(10.0, l10 - exponent), exponent as i64))
    }

    /// Sum with max shift; exact when the operands differ by more than ~745 nats.
    pub fn add(self, other: Self) -> Self {
        match (self.is_zero, other.is_zero) {
            (true, _) => other,
            (_, true) => self,
            _ => Self {
                log_magnitude: math::ln_add_exp(self.log_magnitude, other.log_magnitude),
                is_zero: false,
            },
        }
    }

    /// `self - other`, or `None` when the result would be negative.
    pub fn checked_sub(self, other: Self) -> Option<Self> {
        if other.is_zero {
            return Some(self);
        }
        if self.is_zero {
            return None;
        }
        match self.log_magnitude.partial_cmp(&other.log_magnitude)? {
            Ordering::Less => None,
            Ordering::Equal => Some(Self::ZERO),
            Ordering::Greater => {
                let d = other.log_magnitude - self.log_magnitude;
                Some(Self {
                    log_magnitude: self.log_magnitude + math::ln_1p(-math::exp(d)),
                    is_zero: false,
                })
            }
        }
    }

    pub fn sum<I: IntoIterator<Item = LogValue>>(values: I) -> Self {
        let logs: alloc::vec::Vec<f64> =
            values.into_iter().filter(|v| !v.is_zero).map(|v| v.log_magnitude).collect();
        if logs.is_empty() {
            Self::ZERO
        } else {
            Self { log_magnitude: math::ln_sum_exp(&logs), is_zero: false }
        }
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        if self.is_zero || rhs.is_zero {
            return LogValue::ZERO;
        }
        LogValue { log_magnitude: self.log_magnitude + rhs.log_magnitude, is_zero: false }
    }
}

impl Div for LogValue {
    type Output = LogValue;
    /// # Panics
    /// On division by zero.
    fn div(self, rhs: LogValue) -> LogValue {
        assert!(!rhs.is_zero, "division of a log value by zero");
        if self.is_zero {
            return LogValue::ZERO;
        }
        LogValue { log_magnitude: self.log_magnitude - rhs.log_magnitude, is_zero: false }
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.ln().partial_cmp(&other.ln())
    }
}

impl fmt::Debug for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero {
            f.write_str("LogValue(0)")
        } else {
            write!(f, "LogValue(e^{})", self.log_magnitude)
        }
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.scientific() {
            None => f.write_str("0"),
            Some((m, e)) => write!(f, "{m:.2}e{e}"),
        }
    }
}

/// Serialized as the natural log, `null` for zero.
impl Serialize for LogValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_zero {
            s.serialize_none()
        } else {
            s.serialize_some(&self.log_magnitude)
        }
    }
}

impl<'de> Deserialize<'de> for LogValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Option::<f64>::deserialize(d)?;
        match v {
            None => Ok(LogValue::ZERO),
            Some(ln) => LogValue::from_ln(ln)
                .ok_or_else(|| serde::de::Error::custom("log value must be finite or null")),
        }
    }
}
