//! Scalar and identifier values as they appear in the JSON documents.
//!
//! A scalar may be written as a JSON number, a decimal or rational string
//! (`"0.6"`, `"3/5"`, `"-1/2"`), or a `[re, im]` pair whose parts are
//! themselves numbers or strings.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::index::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
    Pair([RealPart; 2]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RealPart {
    Number(f64),
    Text(String),
}

impl RealPart {
    fn value(&self) -> Result<f64, String> {
        match self {
            RealPart::Number(x) => Ok(*x),
            RealPart::Text(s) => parse_real(s),
        }
    }
}

impl Scalar {
    pub fn value(&self) -> Result<C64, String> {
        match self {
            Scalar::Number(x) => Ok(C64::new(*x, 0.0)),
            Scalar::Text(s) => parse_real(s).map(|x| C64::new(x, 0.0)),
            Scalar::Pair([re, im]) => Ok(C64::new(re.value()?, im.value()?)),
        }
    }

    pub fn from_c64(z: C64) -> Self {
        if z.im == 0.0 {
            Scalar::Number(z.re)
        } else {
            Scalar::Pair([RealPart::Number(z.re), RealPart::Number(z.im)])
        }
    }
}

/// Parses `"p/q"` or a decimal literal.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = if let Some((num, den)) = s.split_once('/') {
        let p: f64 = num
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in `{s}`"))?;
        let q: f64 = den
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator in `{s}`"))?;
        if q == 0.0 {
            return Err(format!("zero denominator in `{s}`"));
        }
        p / q
    } else {
        s.parse::<f64>().map_err(|_| format!("not a number: `{s}`"))?
    };
    if !value.is_finite() {
        return Err(format!("non-finite value `{s}`"));
    }
    Ok(value)
}

/// Vertex or point identifier; integers and strings are both accepted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ident {
    Int(i64),
    Text(String),
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ident::Int(i) => write!(f, "{i}"),
            Ident::Text(s) => f.write_str(s),
        }
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident::Text(s.to_string())
    }
}

impl From<i64> for Ident {
    fn from(i: i64) -> Self {
        Ident::Int(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals_decimals_and_pairs() {
        let s: Scalar = serde_json::from_str("\"3/5\"").unwrap();
        assert_eq!(s.value().unwrap(), C64::new(0.6, 0.0));
        let s: Scalar = serde_json::from_str("\"0.25\"").unwrap();
        assert_eq!(s.value().unwrap(), C64::new(0.25, 0.0));
        let s: Scalar = serde_json::from_str("2").unwrap();
        assert_eq!(s.value().unwrap(), C64::new(2.0, 0.0));
        let s: Scalar = serde_json::from_str("[\"1/2\", -1]").unwrap();
        assert_eq!(s.value().unwrap(), C64::new(0.5, -1.0));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("abc").is_err());
        assert!(parse_real("inf").is_err());
    }
}
