//! Simulation time: the non-negative reals extended with +infinity.
//!
//! `Time` is the domain of every time advance and simulator clock. Passive
//! states advance by [`Time::INFINITY`]; addition saturates there, so
//! `tN = tL + ta(s)` is total. NaN is rejected at construction, which makes
//! the order total and lets clocks be compared and sorted freely.
//!
//! On the wire a finite time encodes as a JSON number and +infinity encodes
//! as the string `"inf"`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CoreError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Time(f64);

impl Time {
    pub const ZERO: Time = Time(0.0);
    pub const INFINITY: Time = Time(f64::INFINITY);

    /// Builds a finite, non-negative time.
    pub fn finite(value: f64) -> Result<Time, CoreError> {
        if value.is_finite() && value >= 0.0 {
            Ok(Time(value))
        } else {
            Err(CoreError::InvalidTime { value })
        }
    }

    /// Builds a time from a raw float, accepting +infinity.
    pub fn from_f64(value: f64) -> Result<Time, CoreError> {
        if value == f64::INFINITY {
            Ok(Time::INFINITY)
        } else {
            Time::finite(value)
        }
    }

    pub fn as_f64(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    /// Elapsed time since `earlier`.
    ///
    /// Panics if time would run backwards or if `self` is infinite; the
    /// simulation protocol guarantees `tL <= t < infinity` at every call
    /// site, so a violation is a bug, not an input error.
    pub fn since(self, earlier: Time) -> Time {
        assert!(self >= earlier, "time went backwards: {self} < {earlier}");
        assert!(self.is_finite(), "elapsed time from an infinite instant");
        Time(self.0 - earlier.0)
    }

    /// Remaining time after `elapsed` has passed, clamped at zero.
    /// Infinity absorbs any finite elapsed time.
    pub fn minus(self, elapsed: Time) -> Time {
        if self.is_infinite() {
            Time::INFINITY
        } else {
            Time((self.0 - elapsed.0).max(0.0))
        }
    }

    pub fn min(self, other: Time) -> Time {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl Eq for Time {}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).expect("Time is never NaN")
    }
}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for Time {
    type Output = Time;

    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Time, D::Error> {
        struct TimeVisitor;

        impl de::Visitor<'_> for TimeVisitor {
            type Value = Time;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Time, E> {
                Time::finite(v).map_err(|e| E::custom(e.to_string()))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Time, E> {
                self.visit_f64(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Time, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Time, E> {
                if v == "inf" {
                    Ok(Time::INFINITY)
                } else {
                    Err(E::custom(format!("unexpected time string {v:?}")))
                }
            }
        }

        deserializer.deserialize_any(TimeVisitor)
    }
}
