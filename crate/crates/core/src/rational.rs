//! Exact rational arithmetic. Payoffs and probabilities never touch floats.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = Ratio<i128>;

pub fn q(n: i64) -> Q {
    Q::from_integer(n as i128)
}

/// Converts a finite `f64` to the rational given by its shortest decimal
/// representation, so `0.1` becomes exactly `1/10`.
pub fn from_decimal(value: f64) -> Result<Q> {
    if !value.is_finite() {
        return Err(Error::config(format!("non-finite number {value}")));
    }
    parse_decimal(&format!("{value}"))
}

pub fn parse_decimal(text: &str) -> Result<Q> {
    let bad = || Error::config(format!("cannot read {text:?} as a decimal number"));
    let text = text.trim();
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if frac_part.len() > 30 {
        return Err(bad());
    }
    let all: String = [int_part, frac_part].concat();
    if !all.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let numer: i128 = all.parse().map_err(|_| bad())?;
    let denom = 10i128.checked_pow(frac_part.len() as u32).ok_or_else(bad)?;
    let value = Q::new(numer, denom);
    Ok(if negative { -value } else { value })
}

pub fn to_f64(value: Q) -> f64 {
    value.numer().to_f64().unwrap_or(f64::NAN) / value.denom().to_f64().unwrap_or(f64::NAN)
}

/// Smallest integer not below `value`.
pub fn ceil_i64(value: Q) -> i64 {
    let (quot, rem) = value.numer().div_mod_floor(value.denom());
    let up = if rem.is_zero() { quot } else { quot + 1 };
    up as i64
}

pub fn is_nonnegative(value: Q) -> bool {
    !value.is_negative()
}

/// Serde adapter storing a rational as a plain decimal number.
pub mod decimal_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Q, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(to_f64(*value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Q, D::Error> {
        let raw = f64::deserialize(deserializer)?;
        from_decimal(raw).map_err(serde::de::Error::custom)
    }
}
