//! Power-series solutions of `psi'' = (V - E) psi` about the origin.
//!
//! With `psi = sum a_n x^n` the coefficients obey
//!
//! ```text
//! a_n = ( -E a_{n-2} + sum_{k=1}^{N} b_{2k} a_{n-2-2k} ) / (n (n - 1)),   n >= 2
//! ```
//!
//! seeded by `(a_0, a_1) = (1, 0)` for even and `(0, 1)` for odd solutions.
//! The solution is entire, so the series converges for every `x`, but at the
//! walls the partial sums can exceed the final value by dozens of orders of
//! magnitude. [`psi_at`] therefore picks both the truncation order and the
//! working precision adaptively.

use rug::{Assign, Float};
use serde::{Deserialize, Serialize};

use crate::bigreal::{agreement_digits, log10_abs, Digits};
use crate::error::{Result, SolverError};
use crate::potential::Potential;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Number of consecutive negligible terms required before truncating.
pub const TAIL_RUN: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Index of the first nonzero coefficient.
    pub fn offset(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    /// Parity of the `level`-th state of a symmetric well.
    pub fn of_level(level: usize) -> Self {
        if level.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

/// Ceilings and start-up padding for adaptive series evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesConfig {
    pub order_ceiling: usize,
    pub precision_ceiling: Digits,
    /// Extra digits added to the initial working precision, normally the
    /// cancellation loss observed in a previous nearby evaluation.
    pub start_padding: Digits,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            order_ceiling: 20_000,
            precision_ceiling: Digits(2_000),
            start_padding: Digits(0),
        }
    }
}

impl SeriesConfig {
    pub fn padded(&self, loss: f64) -> Self {
        let pad = if loss.is_finite() && loss > 0.0 {
            (loss.ceil() as u32).min(self.precision_ceiling.get())
        } else {
            0
        };
        SeriesConfig {
            start_padding: Digits(pad),
            ..self.clone()
        }
    }

    fn exhausted(&self, reason: impl Into<String>) -> SolverError {
        SolverError::PrecisionExhausted {
            reason: reason.into(),
            precision_ceiling: self.precision_ceiling,
            order_ceiling: self.order_ceiling,
        }
    }
}

/// `log10` of the absolute floor below which a value (in units where the
/// seed coefficient is 1) counts as zero when comparing evaluations.
pub fn zero_floor_log10(target: Digits) -> f64 {
    -(2.0 * f64::from(target.get()) + 10.0)
}

/// Truncated coefficient vector for a fixed energy and parity.
#[derive(Clone, Debug)]
pub struct SeriesSolution {
    pub parity: Parity,
    pub energy: Float,
    /// `a_0 ..= a_{n_max}`; entries of the wrong parity are exact zeros.
    pub coeffs: Vec<Float>,
    pub n_max: usize,
    pub working_precision: Digits,
}

impl SeriesSolution {
    /// Sum of `a_n x^n` together with the largest partial-sum magnitude.
    pub fn evaluate(&self, x: &Float) -> (Float, Float) {
        let bits = self.working_precision.bits();
        let x = Float::with_val(bits, x);
        let x2 = Float::with_val(bits, x.square_ref());
        let start = self.parity.offset();
        let mut power = match self.parity {
            Parity::Even => Float::with_val(bits, 1),
            Parity::Odd => x.clone(),
        };
        let mut sum = Float::new(bits);
        let mut scale = Float::new(bits);
        for a in self.coeffs.iter().skip(start).step_by(2) {
            sum += Float::with_val(bits, a * &power);
            if sum.cmp_abs(&scale) == Some(std::cmp::Ordering::Greater) {
                scale.assign(sum.abs_ref());
            }
            power *= &x2;
        }
        (sum, scale)
    }

    /// `log10(max |partial sum| / |sum|)` at `x`.
    pub fn cancellation_loss(&self, x: &Float) -> f64 {
        let (sum, scale) = self.evaluate(x);
        log10_abs(&scale) - log10_abs(&sum)
    }
}

/// Runs the coefficient recurrence up to `n_max` at `working_precision`.
pub fn series_coefficients(
    potential: &Potential,
    energy: &Float,
    parity: Parity,
    n_max: usize,
    working_precision: Digits,
) -> SeriesSolution {
    let n_max = n_max.max(2);
    let bits = working_precision.bits();
    let b = potential.dense_coefficients(bits);
    let neg_e = -Float::with_val(bits, energy);
    let mut a: Vec<Float> = (0..=n_max).map(|_| Float::new(bits)).collect();
    a[parity.offset()].assign(1);
    let mut acc = Float::new(bits);
    for n in 2..=n_max {
        if n % 2 != parity.offset() {
            continue;
        }
        acc.assign(&neg_e * &a[n - 2]);
        for (k, bk) in b.iter().enumerate() {
            let back = 2 * (k + 1) + 2;
            if back > n {
                break;
            }
            if !bk.is_zero() {
                acc += bk * &a[n - back];
            }
        }
        acc /= (n * (n - 1)) as u32;
        a[n].assign(&acc);
    }
    SeriesSolution {
        parity,
        energy: energy.clone(),
        coeffs: a,
        n_max,
        working_precision,
    }
}

/// Result of an adaptive evaluation of `psi(x; E)`.
#[derive(Clone, Debug)]
pub struct PsiValue {
    pub value: Float,
    /// Largest partial-sum magnitude seen while summing.
    pub scale: Float,
    pub n_max: usize,
    pub working_precision: Digits,
    pub cancellation_loss: f64,
}

/// Sums the series at a single working precision, truncating once
/// [`TAIL_RUN`] consecutive terms fall below `10^-(target+4)` of the current
/// partial sum (never measured against less than the zero floor). Returns
/// `None` if the order ceiling is hit first.
pub fn sum_series(
    potential: &Potential,
    energy: &Float,
    parity: Parity,
    x: &Float,
    working_precision: Digits,
    target: Digits,
    order_ceiling: usize,
) -> Option<PsiValue> {
    let bits = working_precision.bits();
    let x = Float::with_val(bits, x);
    let x2 = Float::with_val(bits, x.square_ref());
    let neg_ex2 = Float::with_val(bits, -Float::with_val(bits, energy * &x2));

    // scaled recurrence on t_n = a_n x^n: the b_{2k} term picks up x^{2k+2}
    let mut scaled: Vec<(usize, Float)> = Vec::new();
    let mut power = x2.clone();
    for (k, b) in potential.dense_coefficients(bits).into_iter().enumerate() {
        power *= &x2;
        if !b.is_zero() {
            scaled.push((k + 1, b * &power));
        }
    }
    let depth = potential.max_k() as usize + 1;

    let offset = parity.offset();
    let mut ring: Vec<Float> = (0..depth).map(|_| Float::new(bits)).collect();
    match parity {
        Parity::Even => ring[0].assign(1),
        Parity::Odd => ring[0].assign(&x),
    }
    let mut sum = ring[0].clone();
    let mut scale = Float::with_val(bits, sum.abs_ref());

    let tol_bits = ((f64::from(target.get()) + 4.0) * LOG2_10).ceil() as i64;
    let floor_exp = (zero_floor_log10(target) * LOG2_10).floor() as i64;
    let exp_of = |f: &Float| -> i64 { f.get_exp().map_or(i64::MIN / 4, i64::from) };

    let mut acc = Float::new(bits);
    let mut small_run = 0usize;
    let mut j = 0usize;
    loop {
        j += 1;
        let n = 2 * j + offset;
        if n > order_ceiling {
            return None;
        }
        acc.assign(&neg_ex2 * &ring[(j - 1) % depth]);
        for (k, beta) in &scaled {
            if *k + 1 > j {
                break;
            }
            acc += beta * &ring[(j - 1 - k) % depth];
        }
        acc /= (n * (n - 1)) as u32;
        sum += &acc;
        if sum.cmp_abs(&scale) == Some(std::cmp::Ordering::Greater) {
            scale.assign(sum.abs_ref());
        }
        let reference = exp_of(&sum).max(floor_exp);
        if exp_of(&acc) + tol_bits < reference {
            small_run += 1;
        } else {
            small_run = 0;
        }
        std::mem::swap(&mut ring[j % depth], &mut acc);
        if small_run >= TAIL_RUN && j > depth {
            let loss = (log10_abs(&scale) - log10_abs(&sum)).max(0.0);
            return Some(PsiValue {
                value: sum,
                scale,
                n_max: n,
                working_precision,
                cancellation_loss: loss,
            });
        }
    }
}

/// Evaluates `psi(x; E)` to `target` digits, escalating the working
/// precision by doubling until two successive precisions agree.
pub fn psi_at(
    potential: &Potential,
    energy: &Float,
    parity: Parity,
    x: &Float,
    target: Digits,
    config: &SeriesConfig,
) -> Result<PsiValue> {
    let ceiling = config.precision_ceiling;
    let start = Digits(target.get() + 20 + config.start_padding.get()).min(ceiling);
    let floor = zero_floor_log10(target);
    let run = |wp: Digits| {
        sum_series(
            potential,
            energy,
            parity,
            x,
            wp,
            target,
            config.order_ceiling,
        )
        .ok_or_else(|| config.exhausted(format!("series order exceeded at {wp} digits")))
    };
    let mut low = run(start)?;
    loop {
        let wp = Digits(low.working_precision.get() * 2);
        if wp > ceiling {
            return Err(config.exhausted(format!(
                "working precision would exceed ceiling after {} digits",
                low.working_precision
            )));
        }
        let high = run(wp)?;
        if agreement_digits(&low.value, &high.value, floor) >= f64::from(target.get()) {
            return Ok(high);
        }
        low = high;
    }
}
