//! Durations in config files, written as float milliseconds or microseconds.

macro_rules! unit_module {
    ($name:ident, $per_sec:expr) => {
        pub mod $name {
            use serde::{Deserialize, Deserializer, Serializer};
            use std::time::Duration;

            pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_f64(d.as_secs_f64() * $per_sec)
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
                let v = f64::deserialize(d)?;
                if !v.is_finite() || v < 0.0 {
                    return Err(serde::de::Error::custom(format!(
                        "duration must be a non-negative number, got {v}"
                    )));
                }
                Ok(Duration::from_nanos((v * (1e9 / $per_sec)).round() as u64))
            }
        }
    };
}

unit_module!(millis, 1e3);
unit_module!(micros, 1e6);
