//! Arbitrary-precision scalar helpers.
//!
//! Every numeric quantity in the solver is an MPFR float ([`BigReal`]).
//! Precision is specified in decimal digits through [`Digits`] and converted
//! to mantissa bits on demand.

use std::cmp::Ordering;
use std::fmt;

use rug::ops::Pow;
use rug::{Float, Integer};
use serde::{Deserialize, Serialize};

pub type BigReal = Float;

const LOG2_10: f64 = std::f64::consts::LOG2_10;
const LOG10_2: f64 = std::f64::consts::LOG10_2;

/// A count of decimal digits, used both for precision requests and for
/// reporting achieved accuracy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Digits(pub u32);

impl Digits {
    /// Mantissa bits needed to hold this many decimal digits, plus guard bits.
    pub fn bits(self) -> u32 {
        (f64::from(self.0) * LOG2_10).ceil() as u32 + 8
    }

    pub fn from_bits(bits: u32) -> Self {
        Digits((f64::from(bits.saturating_sub(8)) * LOG10_2).floor() as u32)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn saturating_add(self, extra: u32) -> Self {
        Digits(self.0.saturating_add(extra))
    }
}

impl fmt::Display for Digits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `log10 |x|`, or `-inf` for zero.
pub fn log10_abs(x: &Float) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (mant, exp) = x.to_f64_exp();
    mant.abs().log10() + f64::from(exp) * LOG10_2
}

/// `10^e` at the given bit precision.
pub fn pow10(e: i32, bits: u32) -> Float {
    Float::with_val(bits, 10u32).pow(e)
}

/// Number of decimal digits on which `a` and `b` agree, measured relative to
/// `max(|b|, floor)`. Returns `f64::INFINITY` when they are identical.
pub fn agreement_digits(a: &Float, b: &Float, floor_log10: f64) -> f64 {
    let prec = a.prec().max(b.prec());
    let diff = Float::with_val(prec, a - b);
    if diff.is_zero() {
        return f64::INFINITY;
    }
    let reference = log10_abs(b).max(floor_log10);
    reference - log10_abs(&diff)
}

/// Parses a plain decimal literal (`-1.25`, `3e-4`) into a float at `bits`.
pub fn parse_decimal(s: &str, bits: u32) -> Option<Float> {
    let s = s.trim();
    let s = s.strip_prefix('+').unwrap_or(s);
    let s = s.replace('\u{2212}', "-");
    let parsed = Float::parse(&s).ok()?;
    Some(Float::with_val(bits, parsed))
}

fn scaled_integer(x: &Float, decimals: usize, truncate: bool) -> Integer {
    let extra = (decimals as f64 * LOG2_10).ceil() as u32 + 64;
    let bits = x.prec() + extra;
    let scale = pow10(decimals as i32, bits);
    let scaled = Float::with_val(bits, x * &scale);
    let rounded = if truncate {
        scaled.trunc()
    } else {
        scaled.round()
    };
    rounded.to_integer().unwrap_or_default()
}

fn insert_point(digits: Integer, decimals: usize) -> String {
    let negative = digits.cmp0() == Ordering::Less;
    let mut body = digits.abs().to_string();
    if body.len() <= decimals {
        body = format!("{}{}", "0".repeat(decimals + 1 - body.len()), body);
    }
    let split = body.len() - decimals;
    let mut out = String::with_capacity(body.len() + 2);
    if negative {
        out.push('-');
    }
    out.push_str(&body[..split]);
    if decimals > 0 {
        out.push('.');
        out.push_str(&body[split..]);
    }
    out
}

/// Fixed-point rendering rounded to nearest with `decimals` places.
pub fn to_fixed(x: &Float, decimals: usize) -> String {
    insert_point(scaled_integer(x, decimals, false), decimals)
}

/// Fixed-point rendering truncated toward zero with `decimals` places.
pub fn to_fixed_truncated(x: &Float, decimals: usize) -> String {
    insert_point(scaled_integer(x, decimals, true), decimals)
}

/// Fixed-point rendering with `sig` significant digits. Integer parts wider
/// than `sig` are kept whole.
pub fn to_significant(x: &Float, sig: usize) -> String {
    if x.is_zero() {
        return to_fixed(x, sig.saturating_sub(1));
    }
    let lead = log10_abs(x).floor() as i64;
    let mut decimals = (sig as i64 - 1 - lead).max(0) as usize;
    let s = to_fixed(x, decimals);
    // rounding may carry into a new leading digit
    let digits = s
        .chars()
        .filter(char::is_ascii_digit)
        .skip_while(|&c| c == '0')
        .count();
    if digits > sig && decimals > 0 {
        decimals -= 1;
        return to_fixed(x, decimals);
    }
    s
}

/// Scientific rendering `d.ddddde±x` with `sig` significant digits.
pub fn to_scientific(x: &Float, sig: usize) -> String {
    let sig = sig.max(1);
    if x.is_zero() {
        return format!("{}e0", to_fixed(&Float::new(64), sig - 1));
    }
    let mut e10 = log10_abs(x).floor() as i32;
    let bits = x.prec() + (sig as f64 * LOG2_10).ceil() as u32 + 64;
    let mut mantissa;
    loop {
        let shift = pow10(sig as i32 - 1 - e10, bits);
        mantissa = Float::with_val(bits, x * &shift).round();
        let digits = mantissa
            .to_integer()
            .unwrap_or_default()
            .abs()
            .to_string()
            .len();
        match digits.cmp(&sig) {
            Ordering::Greater => e10 += 1,
            Ordering::Less => e10 -= 1,
            Ordering::Equal => break,
        }
    }
    let int = mantissa.to_integer().unwrap_or_default();
    format!("{}e{}", insert_point(int, sig - 1), e10)
}

/// Groups the fractional digits of a fixed-point string in blocks of three,
/// e.g. `-2.000000000` becomes `-2.000 000 000`.
pub fn group_fraction(s: &str) -> String {
    match s.split_once('.') {
        None => s.to_string(),
        Some((int, frac)) => {
            let blocks: Vec<&str> = frac
                .as_bytes()
                .chunks(3)
                .map(|c| std::str::from_utf8(c).unwrap_or_default())
                .collect();
            format!("{}.{}", int, blocks.join(" "))
        }
    }
}

/// Count of leading significant digits shared by two decimal strings after
/// stripping signs, leading zeros and the decimal point. Strings of opposite
/// sign share no digits.
pub fn matching_significant_digits(a: &str, b: &str) -> usize {
    let neg_a = a.trim_start().starts_with('-');
    let neg_b = b.trim_start().starts_with('-');
    let mantissa = |s: &str| -> (String, i64) {
        let s = s.trim().trim_start_matches(['-', '+']);
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        let all: String = int.chars().chain(frac.chars()).collect();
        let lead = all.chars().take_while(|&c| c == '0').count();
        // position of the first significant digit relative to the point
        let magnitude = int.len() as i64 - lead as i64;
        (all[lead..].to_string(), magnitude)
    };
    let (ma, ea) = mantissa(a);
    let (mb, eb) = mantissa(b);
    if ma.is_empty() && mb.is_empty() {
        return usize::MAX;
    }
    if neg_a != neg_b || ea != eb {
        return 0;
    }
    ma.chars()
        .zip(mb.chars())
        .take_while(|(x, y)| x == y)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits_to_bits_covers_request() {
        for d in [10u32, 16, 20, 40, 100, 2000] {
            let bits = Digits(d).bits();
            assert!(f64::from(bits) * LOG10_2 >= f64::from(d));
            assert!(Digits::from_bits(bits).get() >= d);
        }
    }

    #[test]
    fn fixed_rendering_rounds_and_pads() {
        let x = Float::with_val(128, -2);
        assert_eq!(to_fixed(&x, 3), "-2.000");
        let y = parse_decimal("0.0376", 128).unwrap();
        assert_eq!(to_fixed(&y, 3), "0.038");
        assert_eq!(to_fixed_truncated(&y, 3), "0.037");
        assert_eq!(to_fixed(&Float::with_val(64, 0), 2), "0.00");
        let z = parse_decimal("-0.004", 128).unwrap();
        assert_eq!(to_fixed(&z, 2), "0.00");
    }

    #[test]
    fn significant_rendering() {
        assert_eq!(
            to_significant(&Float::with_val(64, 670.28144137), 6),
            "670.281"
        );
        assert_eq!(to_significant(&Float::with_val(64, 0.0376), 2), "0.038");
        assert_eq!(to_significant(&Float::with_val(64, 9.9999), 3), "10.0");
        assert_eq!(to_significant(&Float::with_val(64, -2), 4), "-2.000");
    }

    #[test]
    fn scientific_rendering() {
        let x = parse_decimal("0.000123456", 128).unwrap();
        assert_eq!(to_scientific(&x, 3), "1.23e-4");
        let y = parse_decimal("-99.96", 128).unwrap();
        assert_eq!(to_scientific(&y, 3), "-1.00e2");
    }

    #[test]
    fn grouping_matches_typeset_tables() {
        assert_eq!(
            group_fraction("-2.000000000000000000"),
            "-2.000 000 000 000 000 000"
        );
        assert_eq!(group_fraction("13.5789841"), "13.578 984 1");
    }

    #[test]
    fn significant_digit_matching() {
        assert_eq!(matching_significant_digits("-1.7727", "-1.7728"), 4);
        assert_eq!(matching_significant_digits("0.0833", "0.0834"), 2);
        assert_eq!(matching_significant_digits("1.0", "-1.0"), 0);
        assert_eq!(matching_significant_digits("13.88", "1.388"), 0);
    }

    #[test]
    fn agreement_uses_floor_near_zero() {
        let a = Float::with_val(128, 1e-40);
        let b = Float::with_val(128, 0);
        assert!((agreement_digits(&a, &b, -30.0) - 10.0).abs() < 1e-9);
    }
}
