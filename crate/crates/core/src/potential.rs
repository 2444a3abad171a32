//! Even polynomial potentials `V(x) = sum_k b_{2k} x^{2k}` with exact
//! rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rug::{Float, Integer, Rational};
use serde_json::{Map, Value};

use crate::bigreal::Digits;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PotentialError {
    #[error("exponent key `{0}` is not of the form x^<even positive integer>")]
    BadExponent(String),
    #[error("exponent x^{0} is odd; only even powers are supported")]
    OddExponent(u32),
    #[error("exponent x^{0} appears more than once")]
    DuplicateExponent(u32),
    #[error("cannot parse coefficient `{0}` (use an integer, a decimal like -0.877, or a fraction like 105/64)")]
    BadNumber(String),
    #[error("coefficient for {0} must be given as a string")]
    NotAString(String),
    #[error("leading coefficient b_{exponent} = {value} must be positive")]
    NonPositiveLeading { exponent: u32, value: String },
    #[error(
        "potential must be a JSON object mapping \"x^2\", \"x^4\", ... to coefficient strings"
    )]
    NotAnObject,
}

/// An even polynomial potential. Terms are stored by `k` (the power is
/// `2k`), sorted ascending, with zero coefficients dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Potential {
    name: Option<String>,
    terms: Vec<(u32, Rational)>,
}

impl Potential {
    /// Builds a potential from `(k, b_{2k})` pairs. The highest nonzero
    /// coefficient must be positive.
    pub fn new<I>(terms: I) -> Result<Self, PotentialError>
    where
        I: IntoIterator<Item = (u32, Rational)>,
    {
        let mut map = BTreeMap::new();
        for (k, b) in terms {
            if k == 0 {
                return Err(PotentialError::BadExponent("x^0".into()));
            }
            if map.insert(k, b).is_some() {
                return Err(PotentialError::DuplicateExponent(2 * k));
            }
        }
        let terms: Vec<(u32, Rational)> = map.into_iter().filter(|(_, b)| *b != 0).collect();
        if let Some((k, lead)) = terms.last() {
            if *lead < 0 {
                return Err(PotentialError::NonPositiveLeading {
                    exponent: 2 * k,
                    value: lead.to_string(),
                });
            }
        }
        Ok(Potential { name: None, terms })
    }

    /// The free particle in a box.
    pub fn zero() -> Self {
        Potential {
            name: None,
            terms: Vec::new(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn terms(&self) -> &[(u32, Rational)] {
        &self.terms
    }

    /// Highest `k` present (0 for the zero potential).
    pub fn max_k(&self) -> u32 {
        self.terms.last().map_or(0, |(k, _)| *k)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Dense coefficient vector `[b_2, b_4, ..., b_{2N}]` rounded to `bits`.
    pub fn dense_coefficients(&self, bits: u32) -> Vec<Float> {
        let n = self.max_k() as usize;
        let mut out = vec![Float::new(bits); n];
        for (k, b) in &self.terms {
            out[*k as usize - 1] = Float::with_val(bits, b);
        }
        out
    }

    /// `V(x)` at the requested precision; exact zero for the empty potential.
    pub fn eval(&self, x: &Float, precision: Digits) -> Float {
        let bits = precision.bits().max(x.prec());
        let x2 = Float::with_val(bits, x.square_ref());
        let mut acc = Float::new(bits);
        // Horner in x^2 over k = N..1
        for k in (1..=self.max_k()).rev() {
            if let Some(b) = self.coefficient(k) {
                acc += b;
            }
            acc *= &x2;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let x2 = x * x;
        let mut acc = 0.0;
        for k in (1..=self.max_k()).rev() {
            if let Some(b) = self.coefficient(k) {
                acc += b.to_f64();
            }
            acc *= x2;
        }
        acc
    }

    pub fn coefficient(&self, k: u32) -> Option<&Rational> {
        self.terms
            .binary_search_by_key(&k, |(kk, _)| *kk)
            .ok()
            .map(|i| &self.terms[i].1)
    }

    /// Minimum of `V` over `[-l, l]`, sampled on a fine grid.
    pub fn sampled_min(&self, l: f64) -> f64 {
        const SAMPLES: usize = 4000;
        (0..=SAMPLES)
            .map(|i| self.eval_f64(l * i as f64 / SAMPLES as f64))
            .fold(0.0_f64, f64::min)
    }

    /// Parses a JSON object such as `{"x^2": "1", "x^4": "-4", "x^6": "1"}`.
    pub fn from_json(value: &Value) -> Result<Self, PotentialError> {
        match value {
            Value::Object(map) => parse_potential(map),
            _ => Err(PotentialError::NotAnObject),
        }
    }

    /// Inverse of [`Potential::from_json`]; coefficients are written as
    /// reduced fractions or integers.
    pub fn to_json(&self) -> Value {
        let map: Map<String, Value> = self
            .terms
            .iter()
            .map(|(k, b)| (format!("x^{}", 2 * k), Value::String(b.to_string())))
            .collect();
        Value::Object(map)
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, b)) in self.terms.iter().enumerate() {
            let neg = *b < 0;
            let mag = Rational::from(b.abs_ref());
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if mag == 1 {
                write!(f, "x^{}", 2 * k)?;
            } else {
                write!(f, "{} x^{}", mag, 2 * k)?;
            }
        }
        Ok(())
    }
}

/// Parses the exponent-keyed coefficient record of a config file.
pub fn parse_potential(record: &Map<String, Value>) -> Result<Potential, PotentialError> {
    let mut terms = Vec::with_capacity(record.len());
    let mut seen = BTreeMap::new();
    for (key, value) in record {
        let power = parse_exponent(key)?;
        if power % 2 == 1 {
            return Err(PotentialError::OddExponent(power));
        }
        if seen.insert(power, ()).is_some() {
            return Err(PotentialError::DuplicateExponent(power));
        }
        let text = value
            .as_str()
            .ok_or_else(|| PotentialError::NotAString(key.clone()))?;
        terms.push((power / 2, parse_coefficient(text)?));
    }
    Potential::new(terms)
}

fn parse_exponent(key: &str) -> Result<u32, PotentialError> {
    let bad = || PotentialError::BadExponent(key.to_string());
    let digits = key.trim().strip_prefix("x^").ok_or_else(bad)?;
    let power: u32 = digits.parse().map_err(|_| bad())?;
    if power == 0 {
        return Err(bad());
    }
    Ok(power)
}

/// Parses `p/q`, integers and decimal literals (optionally with an exponent)
/// into an exact rational.
pub fn parse_coefficient(text: &str) -> Result<Rational, PotentialError> {
    let bad = || PotentialError::BadNumber(text.to_string());
    let s = text.trim().replace('\u{2212}', "-");
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_decimal_exact(num.trim()).ok_or_else(bad)?;
        let den = parse_decimal_exact(den.trim()).ok_or_else(bad)?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(num / den);
    }
    parse_decimal_exact(&s).ok_or_else(bad)
}

fn parse_decimal_exact(s: &str) -> Option<Rational> {
    let (negative, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let numer = Integer::from_str(&digits).ok()?;
    let scale = exponent - frac.len() as i32;
    let mut value = Rational::from(numer);
    if scale >= 0 {
        value *= Integer::from(Integer::u_pow_u(10, scale as u32));
    } else {
        value /= Integer::from(Integer::u_pow_u(10, (-scale) as u32));
    }
    if negative {
        value = -value;
    }
    Some(value)
}
