//! Expectation values `<x^{2m}>` and wavefunction grids.
//!
//! Moments integrate the squared series term by term over `[-L, L]`:
//! with `psi^2 = sum_j c_j x^j` (only even `j` survive for a definite
//! parity), `I_q = int x^q psi^2 dx = sum_j c_j 2 L^{j+q+1} / (j+q+1)` and
//! `<x^{2m}> = I_{2m} / I_0`.

use std::cmp::Ordering;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Assign, Float};
use serde::{Deserialize, Serialize};

use crate::bigreal::{agreement_digits, log10_abs, Digits};
use crate::eigen::{BoundaryProblem, Eigenpair};
use crate::error::{Result, SolverError};
use crate::series::{psi_at, series_coefficients, Parity, SeriesSolution};

#[derive(Clone, Debug)]
pub struct MomentReport {
    pub potential: Option<String>,
    pub level: usize,
    pub m: u32,
    pub value: Float,
    /// Smaller of the truncation-doubling and precision-doubling agreements.
    pub converged_digits: f64,
}

/// Self-convolution `c_j = sum_i a_i a_{j-i}` of the series coefficients,
/// indexed `0 ..= 2 n_max`.
pub fn squared_series(s: &SeriesSolution) -> Vec<Float> {
    let bits = s.working_precision.bits();
    let offset = s.parity.offset();
    let compact: Vec<Float> = s.coeffs.iter().skip(offset).step_by(2).cloned().collect();
    let squared = convolve_compact(&compact, bits);
    let mut out: Vec<Float> = (0..=2 * s.n_max).map(|_| Float::new(bits)).collect();
    for (i, c) in squared.into_iter().enumerate() {
        let j = 2 * i + 2 * offset;
        if j < out.len() {
            out[j] = c;
        }
    }
    out
}

/// Square of a parity-compacted series: entry `s` multiplies
/// `x^{2s + 2 offset}`.
fn convolve_compact(b: &[Float], bits: u32) -> Vec<Float> {
    let len = b.len();
    if len == 0 {
        return Vec::new();
    }
    (0..2 * len - 1)
        .into_par_iter()
        .map(|s| {
            let mut acc = Float::new(bits);
            let lo = s.saturating_sub(len - 1);
            let hi = s / 2;
            for k in lo..=hi {
                if 2 * k == s {
                    acc += Float::with_val(bits, b[k].square_ref());
                } else {
                    let mut prod = Float::with_val(bits, &b[k] * &b[s - k]);
                    prod *= 2u32;
                    acc += &prod;
                }
            }
            acc
        })
        .collect()
}

/// `I_q` for every `q` in `powers`, from a series truncated at `n_max` and
/// carried at `working_precision`.
fn integrals(
    bp: &BoundaryProblem,
    energy: &Float,
    parity: Parity,
    n_max: usize,
    working_precision: Digits,
    powers: &[u32],
) -> Vec<Float> {
    let s = series_coefficients(&bp.potential, energy, parity, n_max, working_precision);
    let bits = working_precision.bits();
    let offset = parity.offset();
    let compact: Vec<Float> = s.coeffs.iter().skip(offset).step_by(2).cloned().collect();
    let squared = convolve_compact(&compact, bits);
    let l = Float::with_val(bits, &bp.half_width);
    let l2 = Float::with_val(bits, l.square_ref());
    powers
        .par_iter()
        .map(|&q| {
            // term s: c_s * 2 L^{e+1} / (e+1) with e = 2s + 2 offset + q
            let first = 2 * offset as u32 + q + 1;
            let mut power = Float::with_val(bits, (&l).pow(first));
            let mut sum = Float::new(bits);
            let mut term = Float::new(bits);
            for (i, c) in squared.iter().enumerate() {
                let denom = first + 2 * i as u32;
                term.assign(c * &power);
                term /= denom;
                sum += &term;
                power *= &l2;
            }
            sum *= 2u32;
            sum
        })
        .collect()
}

/// `I_0` followed by `<x^q>` for each requested power.
fn normalized(raw: &[Float]) -> Vec<Float> {
    let norm = &raw[0];
    let mut out = vec![norm.clone()];
    out.extend(raw[1..].iter().map(|v| Float::with_val(v.prec(), v / norm)));
    out
}

fn min_agreement(a: &[Float], b: &[Float]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| agreement_digits(x, y, f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min)
}

/// Adaptive evaluation of `[I_0, <x^q1>, <x^q2>, ...]`. The series order and
/// working precision are doubled until each doubling changes every entry by
/// less than `10^-target` relative. Returns the values and the smaller of the
/// two agreement digit counts.
fn stable_moments(
    bp: &BoundaryProblem,
    eig: &Eigenpair,
    powers: &[u32],
) -> Result<(Vec<Float>, f64)> {
    let target = f64::from(bp.target.get());
    let mut all = vec![0];
    all.extend_from_slice(powers);
    let mut n = eig.series_order.max(16);
    let mut wp = eig.working_precision.max(bp.target.saturating_add(20));
    let cfg = &bp.series;
    let exhausted = |why: String| SolverError::PrecisionExhausted {
        reason: why,
        precision_ceiling: cfg.precision_ceiling,
        order_ceiling: cfg.order_ceiling,
    };
    loop {
        if 2 * n > cfg.order_ceiling {
            return Err(exhausted(format!(
                "moment series order would exceed {}",
                cfg.order_ceiling
            )));
        }
        if Digits(wp.get() * 2) > cfg.precision_ceiling {
            return Err(exhausted(format!(
                "moment precision would exceed {}",
                cfg.precision_ceiling
            )));
        }
        let base = normalized(&integrals(bp, &eig.energy, eig.parity, n, wp, &all));
        let longer = normalized(&integrals(bp, &eig.energy, eig.parity, 2 * n, wp, &all));
        let truncation = min_agreement(&base, &longer);
        if truncation < target {
            n *= 2;
            continue;
        }
        let finer = normalized(&integrals(
            bp,
            &eig.energy,
            eig.parity,
            2 * n,
            Digits(wp.get() * 2),
            &all,
        ));
        let precision = min_agreement(&longer, &finer);
        if precision < target {
            wp = Digits(wp.get() * 2);
            continue;
        }
        return Ok((finer, truncation.min(precision)));
    }
}

/// `<x^{2m}>` for a single `m`; `m = 0` gives exactly 1.
pub fn moment(bp: &BoundaryProblem, eig: &Eigenpair, m: u32) -> Result<MomentReport> {
    Ok(moments(bp, eig, &[m])?.remove(0))
}

/// `<x^{2m}>` for each `m`, sharing one squared series.
pub fn moments(bp: &BoundaryProblem, eig: &Eigenpair, ms: &[u32]) -> Result<Vec<MomentReport>> {
    let powers: Vec<u32> = ms.iter().filter(|&&m| m > 0).map(|&m| 2 * m).collect();
    let (values, digits) = if powers.is_empty() {
        (vec![Float::with_val(64, 1)], f64::INFINITY)
    } else {
        stable_moments(bp, eig, &powers)?
    };
    let mut next = 1;
    Ok(ms
        .iter()
        .map(|&m| {
            let (value, converged_digits) = if m == 0 {
                (Float::with_val(bp.target.bits(), 1), f64::INFINITY)
            } else {
                next += 1;
                (values[next - 1].clone(), digits)
            };
            MomentReport {
                potential: bp.potential.name().map(str::to_string),
                level: eig.level,
                m,
                value,
                converged_digits,
            }
        })
        .collect())
}

/// `int_{-L}^{L} psi^2 dx` in the normalization `a_0 = 1` (even) or
/// `a_1 = 1` (odd).
pub fn norm_integral(bp: &BoundaryProblem, eig: &Eigenpair) -> Result<Float> {
    Ok(stable_moments(bp, eig, &[])?.0.remove(0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    None,
    UnitNorm,
    PeakOne,
}

/// `psi` on `points` uniformly spaced points of `[-L, L]`, endpoints
/// included. Values at the walls are set to exactly zero when they are below
/// `10^-target` of the peak.
pub fn wavefunction_grid(
    bp: &BoundaryProblem,
    eig: &Eigenpair,
    points: usize,
    normalization: Normalization,
) -> Result<Vec<(Float, Float)>> {
    if points < 2 {
        return Err(SolverError::InvalidInput(format!(
            "wavefunction grid needs at least 2 points, got {points}"
        )));
    }
    let bits = bp.target.bits().max(bp.half_width.prec()) + 16;
    let last = points - 1;
    let xs: Vec<Float> = (0..points)
        .map(|i| {
            let num = 2 * i as i64 - last as i64;
            Float::with_val(bits, &bp.half_width * num) / last as u32
        })
        .collect();
    // evaluate the non-negative half and mirror by parity
    let first_nonneg = last.div_ceil(2);
    let half: Vec<Float> = xs[first_nonneg..]
        .par_iter()
        .map(|x| {
            psi_at(
                &bp.potential,
                &eig.energy,
                eig.parity,
                x,
                bp.target,
                &bp.series.padded(eig.cancellation_loss),
            )
            .map(|v| v.value)
        })
        .collect::<Result<_>>()?;
    let mut values: Vec<Float> = Vec::with_capacity(points);
    for i in 0..points {
        let v = if i >= first_nonneg {
            half[i - first_nonneg].clone()
        } else {
            let mirror = &half[last - i - first_nonneg];
            match eig.parity {
                Parity::Even => mirror.clone(),
                Parity::Odd => Float::with_val(mirror.prec(), -mirror),
            }
        };
        values.push(v);
    }

    let mut peak = Float::new(bits);
    for v in &values {
        if v.cmp_abs(&peak) == Some(Ordering::Greater) {
            peak = Float::with_val(v.prec(), v.abs_ref());
        }
    }
    let wall_limit = log10_abs(&peak) - f64::from(bp.target.get());
    for idx in [0, last] {
        if log10_abs(&values[idx]) <= wall_limit {
            values[idx] = Float::new(bits);
        }
    }

    let divisor = match normalization {
        Normalization::None => None,
        Normalization::PeakOne => Some(peak),
        Normalization::UnitNorm => Some(norm_integral(bp, eig)?.sqrt()),
    };
    if let Some(d) = divisor {
        for v in &mut values {
            *v /= &d;
        }
    }
    Ok(xs.into_iter().zip(values).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{refine_root, Bracket};
    use crate::potential::Potential;
    use rug::float::Constant;

    fn box_ground(l: f64) -> (BoundaryProblem, Eigenpair) {
        let bp =
            BoundaryProblem::new(Potential::zero(), Float::with_val(64, l), Digits(20)).unwrap();
        let e0 = std::f64::consts::PI.powi(2) / (4.0 * l * l);
        let b = Bracket {
            lo: Float::with_val(64, e0 * 0.9),
            hi: Float::with_val(64, e0 * 1.1),
        };
        let eig = refine_root(&bp, Parity::Even, &b).unwrap();
        (bp, eig)
    }

    #[test]
    fn squared_series_by_hand() {
        let mut s = SeriesSolution {
            parity: Parity::Even,
            energy: Float::with_val(64, 0),
            coeffs: vec![1.0, 0.0, 3.0, 0.0, 5.0]
                .into_iter()
                .map(|v| Float::with_val(64, v))
                .collect(),
            n_max: 4,
            working_precision: Digits(16),
        };
        let c = squared_series(&s);
        assert_eq!(c[0], 1);
        assert_eq!(c[2], 6); // 2 a_2
        assert_eq!(c[4], 19); // a_2^2 + 2 a_4
        assert!(c[1].is_zero() && c[3].is_zero());

        s.parity = Parity::Odd;
        s.coeffs = vec![0.0, 1.0, 0.0, 7.0, 0.0]
            .into_iter()
            .map(|v| Float::with_val(64, v))
            .collect();
        let c = squared_series(&s);
        assert_eq!(c[2], 1);
        assert_eq!(c[4], 14);
        assert!(c[0].is_zero());
    }

    #[test]
    fn box_squared_series_is_cos_squared() {
        // cos^2(k x) = (1 + cos 2kx) / 2 = 1 - k^2 x^2 + k^4 x^4 / 3 - ...
        let (bp, eig) = box_ground(1.0);
        let s = series_coefficients(&bp.potential, &eig.energy, Parity::Even, 12, Digits(40));
        let c = squared_series(&s);
        let k2 = eig.energy.to_f64();
        assert!((c[2].to_f64() + k2).abs() < 1e-14);
        assert!((c[4].to_f64() - k2 * k2 / 3.0).abs() < 1e-13);
        assert!((c[6].to_f64() + 2.0 * k2.powi(3) / 45.0).abs() < 1e-12);
    }

    #[test]
    fn box_second_moment_is_analytic() {
        let (bp, eig) = box_ground(1.0);
        let m = moment(&bp, &eig, 1).unwrap();
        let bits = 200;
        let pi2 = Float::with_val(bits, Float::with_val(bits, Constant::Pi).square_ref());
        let exact = Float::with_val(bits, 1) / 3u32 - Float::with_val(bits, 2u32 / &pi2);
        assert!(agreement_digits(&m.value, &exact, -40.0) >= 12.0);
        assert!(m.converged_digits >= 20.0);
    }

    #[test]
    fn zeroth_moment_is_one() {
        let (bp, eig) = box_ground(1.0);
        let m = moment(&bp, &eig, 0).unwrap();
        assert_eq!(m.value, 1);
    }

    #[test]
    fn grid_endpoints_and_normalizations() {
        let (bp, eig) = box_ground(1.0);
        let grid = wavefunction_grid(&bp, &eig, 21, Normalization::PeakOne).unwrap();
        assert_eq!(grid.len(), 21);
        assert!(grid[0].1.is_zero() && grid[20].1.is_zero());
        assert_eq!(grid[10].1, 1);
        assert_eq!(grid[0].0, -1);
        assert_eq!(grid[20].0, 1);
        let unit = wavefunction_grid(&bp, &eig, 21, Normalization::UnitNorm).unwrap();
        // cos(pi x / 2) / sqrt(int cos^2) = cos(pi x / 2) at L = 1
        assert!((unit[10].1.to_f64() - 1.0).abs() < 1e-15);
        assert!(wavefunction_grid(&bp, &eig, 1, Normalization::None).is_err());
    }
}
