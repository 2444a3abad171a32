//! Eigenvalues of the walled problem as roots of `E -> psi(L; E)`.
//!
//! Even and odd states are found separately: a sign scan over a uniform
//! energy grid localizes each root, a safeguarded secant/bisection iteration
//! refines it, and the interior node count of the resulting eigenfunction
//! fixes its level index.

use std::cmp::Ordering;

use rayon::prelude::*;
use rug::Float;

use crate::bigreal::{agreement_digits, log10_abs, pow10, to_fixed, Digits};
use crate::error::{Result, SolverError};
use crate::potential::Potential;
use crate::series::{
    psi_at, series_coefficients, zero_floor_log10, Parity, PsiValue, SeriesConfig,
};

/// Grid steps per parity scan window.
pub const DEFAULT_SCAN_STEPS: usize = 512;
/// Width of the first scan window above the energy floor.
const FIRST_WINDOW: f64 = 16.0;
/// Half-grid used to estimate the eigenfunction's peak during refinement.
const PEAK_SAMPLES: usize = 32;
/// Precision used for sign scans; only the sign of the boundary value matters.
const SCAN_DIGITS: Digits = Digits(10);
const MAX_RESCANS: usize = 3;

/// Schrödinger operator on `[-L, L]` with Dirichlet walls.
#[derive(Clone, Debug)]
pub struct BoundaryProblem {
    pub potential: Potential,
    pub half_width: Float,
    pub target: Digits,
    pub series: SeriesConfig,
}

impl BoundaryProblem {
    pub fn new(potential: Potential, half_width: Float, target: Digits) -> Result<Self> {
        if half_width <= 0 || !half_width.is_finite() {
            return Err(SolverError::InvalidInput(format!(
                "wall half-width must be positive, got {}",
                half_width.to_f64()
            )));
        }
        if target.get() < 10 {
            return Err(SolverError::InvalidInput(format!(
                "target precision must be at least 10 digits, got {target}"
            )));
        }
        Ok(BoundaryProblem {
            potential,
            half_width,
            target,
            series: SeriesConfig::default(),
        })
    }

    pub fn with_target(&self, target: Digits) -> Self {
        BoundaryProblem {
            target,
            ..self.clone()
        }
    }

    pub fn with_series_config(mut self, series: SeriesConfig) -> Self {
        self.series = series;
        self
    }

    pub fn half_width_f64(&self) -> f64 {
        self.half_width.to_f64()
    }

    /// Bits for energies resolved to `digits` decimal places relative to
    /// `max(|E|, 1)`.
    fn energy_bits(&self, digits: u32, magnitude: f64) -> u32 {
        let extra = magnitude.abs().max(1.0).log10().ceil() as u32;
        Digits(digits + extra + 10).bits()
    }

    pub(crate) fn psi(
        &self,
        parity: Parity,
        energy: &Float,
        x: &Float,
        loss: f64,
    ) -> Result<PsiValue> {
        psi_at(
            &self.potential,
            energy,
            parity,
            x,
            self.target,
            &self.series.padded(loss),
        )
    }
}

/// A converged eigenvalue with its bookkeeping.
#[derive(Clone, Debug)]
pub struct Eigenpair {
    /// 0-based position in the merged spectrum.
    pub level: usize,
    pub parity: Parity,
    pub energy: Float,
    /// Decimal digits fixed by the final bracket: relative for `|E| >= 1`,
    /// absolute otherwise.
    pub converged_digits: f64,
    pub nodes: usize,
    /// Set when a neighbouring level lies within the target resolution.
    pub doublet: bool,
    /// Working precision and order of the last boundary evaluation.
    pub working_precision: Digits,
    pub series_order: usize,
    pub cancellation_loss: f64,
}

impl Eigenpair {
    pub fn energy_string(&self, decimals: usize) -> String {
        to_fixed(&self.energy, decimals)
    }
}

/// `psi(L; E)` divided by the largest partial-sum magnitude of its series.
#[derive(Clone, Debug)]
pub struct BoundaryValue {
    pub value: Float,
    pub raw: PsiValue,
}

pub fn boundary_value(
    bp: &BoundaryProblem,
    parity: Parity,
    energy: &Float,
) -> Result<BoundaryValue> {
    let raw = bp.psi(parity, energy, &bp.half_width, 0.0)?;
    let value = if raw.scale.is_zero() {
        raw.value.clone()
    } else {
        Float::with_val(raw.value.prec(), &raw.value / &raw.scale)
    };
    Ok(BoundaryValue { value, raw })
}

/// An energy interval on which the boundary function changes sign.
#[derive(Clone, Debug, PartialEq)]
pub struct Bracket {
    pub lo: Float,
    pub hi: Float,
}

impl Bracket {
    pub fn contains(&self, e: f64) -> bool {
        self.lo <= e && e <= self.hi
    }
}

fn energy_grid(bp: &BoundaryProblem, e_min: &Float, e_max: &Float, steps: usize) -> Vec<Float> {
    let bits = bp.energy_bits(
        bp.target.get(),
        e_max.to_f64().abs().max(e_min.to_f64().abs()),
    );
    let width = Float::with_val(bits, e_max - e_min);
    (0..=steps)
        .map(|i| {
            if i == steps {
                return Float::with_val(bits, e_max);
            }
            let offset = Float::with_val(bits, &width * i as u32) / steps as u32;
            Float::with_val(bits, e_min + &offset)
        })
        .collect()
}

fn is_negative(x: &Float) -> bool {
    x.cmp0() == Some(Ordering::Less)
}

/// Uniform sign scan of the boundary function over `[e_min, e_max]`.
pub fn scan_brackets(
    bp: &BoundaryProblem,
    parity: Parity,
    e_min: &Float,
    e_max: &Float,
    steps: usize,
) -> Result<Vec<Bracket>> {
    if steps < 2 || e_min >= e_max {
        return Err(SolverError::InvalidInput(
            "scan needs e_min < e_max and at least 2 steps".into(),
        ));
    }
    let grid = energy_grid(bp, e_min, e_max, steps);
    let values: Vec<Float> = grid
        .par_iter()
        .map(|e| boundary_value(bp, parity, e).map(|b| b.value))
        .collect::<Result<_>>()?;
    Ok(sign_changes(&grid, &values))
}

fn sign_changes(grid: &[Float], values: &[Float]) -> Vec<Bracket> {
    values
        .windows(2)
        .zip(grid.windows(2))
        .filter(|(v, _)| is_negative(&v[0]) != is_negative(&v[1]))
        .map(|(_, e)| Bracket {
            lo: e[0].clone(),
            hi: e[1].clone(),
        })
        .collect()
}

/// Iteration state of the safeguarded secant/bisection refinement. The root
/// is always bracketed by `best` and `contra`.
struct RootState {
    prev: Float,
    f_prev: Float,
    best: Float,
    f_best: Float,
    contra: Float,
    f_contra: Float,
    step: Float,
    last_step: Float,
    loss: f64,
    last_eval: Option<PsiValue>,
    evaluations: usize,
}

struct Refiner<'a> {
    bp: &'a BoundaryProblem,
    parity: Parity,
}

impl Refiner<'_> {
    fn eval(&self, state_loss: f64, e: &Float) -> Result<PsiValue> {
        self.bp.psi(self.parity, e, &self.bp.half_width, state_loss)
    }

    /// Runs until the bracket is narrower than `10^-digits * max(|E|, 1)`.
    fn converge(&self, s: &mut RootState, digits: u32) -> Result<()> {
        let bits = self
            .bp
            .energy_bits(digits, s.best.to_f64())
            .max(s.best.prec());
        let unit = Float::with_val(bits, s.best.abs_ref()).max(&Float::with_val(bits, 1));
        // half the requested bracket width
        let tol = Float::with_val(bits, &unit * pow10(-(digits as i32), bits)) / 2u32;
        loop {
            if !s.f_best.is_zero()
                && !s.f_contra.is_zero()
                && is_negative(&s.f_best) == is_negative(&s.f_contra)
            {
                s.contra = s.prev.clone();
                s.f_contra = s.f_prev.clone();
                s.step = Float::with_val(bits, &s.best - &s.prev);
                s.last_step = s.step.clone();
            }
            if s.f_contra.cmp_abs(&s.f_best) == Some(Ordering::Less) {
                s.prev = s.best.clone();
                s.f_prev = s.f_best.clone();
                std::mem::swap(&mut s.best, &mut s.contra);
                std::mem::swap(&mut s.f_best, &mut s.f_contra);
                s.contra = s.prev.clone();
                s.f_contra = s.f_prev.clone();
            }
            let half = Float::with_val(bits, &s.contra - &s.best) / 2u32;
            if s.f_best.is_zero() || half.cmp_abs(&tol) != Some(Ordering::Greater) {
                return Ok(());
            }
            let mut took_secant = false;
            if s.last_step.cmp_abs(&tol) != Some(Ordering::Less)
                && s.f_prev.cmp_abs(&s.f_best) == Some(Ordering::Greater)
            {
                // secant through the last two iterates
                let denom = Float::with_val(bits, &s.f_best - &s.f_prev);
                let run = Float::with_val(bits, &s.best - &s.prev);
                let cand = -Float::with_val(bits, &s.f_best * &run) / &denom;
                let toward = is_negative(&cand) == is_negative(&half);
                let limit =
                    Float::with_val(bits, &half * 3u32) / 2u32 - Float::with_val(bits, &tol / 2u32);
                let half_last = Float::with_val(bits, &s.last_step / 2u32);
                if toward
                    && cand.is_finite()
                    && cand.cmp_abs(&limit) == Some(Ordering::Less)
                    && cand.cmp_abs(&half_last) == Some(Ordering::Less)
                {
                    s.last_step = s.step.clone();
                    s.step = cand;
                    took_secant = true;
                }
            }
            if !took_secant {
                s.step = half.clone();
                s.last_step = half.clone();
            }
            s.prev = s.best.clone();
            s.f_prev = s.f_best.clone();
            if s.step.cmp_abs(&tol) == Some(Ordering::Greater) {
                s.best = Float::with_val(bits, &s.best + &s.step);
            } else if is_negative(&half) {
                s.best = Float::with_val(bits, &s.best - &tol);
            } else {
                s.best = Float::with_val(bits, &s.best + &tol);
            }
            let value = self.eval(s.loss, &s.best)?;
            s.loss = value.cancellation_loss;
            s.f_best = value.value.clone();
            s.last_eval = Some(value);
            s.evaluations += 1;
            if s.evaluations > 2_000 {
                return Err(SolverError::PrecisionExhausted {
                    reason: "root refinement did not converge".into(),
                    precision_ceiling: self.bp.series.precision_ceiling,
                    order_ceiling: self.bp.series.order_ceiling,
                });
            }
        }
    }
}

/// Values of `psi` on `x_i = L i / (points + 1)`, `i = 1..=points`.
fn half_grid(
    bp: &BoundaryProblem,
    parity: Parity,
    energy: &Float,
    points: usize,
    loss: f64,
) -> Result<Vec<(Float, Float)>> {
    let bits = bp.target.bits().max(bp.half_width.prec());
    (1..=points)
        .into_par_iter()
        .map(|i| {
            let x = Float::with_val(bits, &bp.half_width * i as u32) / (points + 1) as u32;
            let v = bp.psi(parity, energy, &x, loss.min(f64::from(bp.target.get())))?;
            Ok((x, v.value))
        })
        .collect()
}

fn peak_of(values: &[(Float, Float)]) -> Float {
    let mut peak = Float::with_val(64, 1);
    for (_, v) in values {
        if v.cmp_abs(&peak) == Some(Ordering::Greater) {
            peak = Float::with_val(v.prec(), v.abs_ref());
        }
    }
    peak
}

fn has_sign_change(a: &Float, b: &Float) -> bool {
    a.is_zero() || b.is_zero() || is_negative(a) != is_negative(b)
}

/// Evaluates the bracket ends at full precision. A scan performed at lower
/// precision can misjudge the sign of an endpoint that sits on a root to
/// within rounding, so the bracket is widened by a sixteenth on each side
/// before giving up.
fn initial_bracket(
    refiner: &Refiner<'_>,
    bracket: &Bracket,
) -> Result<(Float, Float, PsiValue, PsiValue)> {
    let lo_val = refiner.eval(0.0, &bracket.lo)?;
    let hi_val = refiner.eval(lo_val.cancellation_loss, &bracket.hi)?;
    if has_sign_change(&lo_val.value, &hi_val.value) {
        return Ok((bracket.lo.clone(), bracket.hi.clone(), lo_val, hi_val));
    }
    let bits = bracket.lo.prec().max(bracket.hi.prec()) + 8;
    let pad = Float::with_val(bits, &bracket.hi - &bracket.lo) / 16u32;
    let outer_lo = Float::with_val(bits, &bracket.lo - &pad);
    let outer_hi = Float::with_val(bits, &bracket.hi + &pad);
    let olo = refiner.eval(lo_val.cancellation_loss, &outer_lo)?;
    let ohi = refiner.eval(hi_val.cancellation_loss, &outer_hi)?;
    if has_sign_change(&olo.value, &ohi.value) {
        if has_sign_change(&lo_val.value, &ohi.value) {
            return Ok((bracket.lo.clone(), outer_hi, lo_val, ohi));
        }
        return Ok((outer_lo, bracket.hi.clone(), olo, hi_val));
    }
    Err(SolverError::NoSignChange {
        lo: bracket.lo.to_string(),
        hi: bracket.hi.to_string(),
    })
}

/// Refines a sign-change bracket to `bp.target` digits and then keeps going
/// until `|psi(L)|` is below `10^-(target+2)` of the eigenfunction's peak, so
/// that the whole eigenfunction (not just the energy) is accurate.
pub fn refine_root(bp: &BoundaryProblem, parity: Parity, bracket: &Bracket) -> Result<Eigenpair> {
    let refiner = Refiner { bp, parity };
    let (lo, hi, lo_val, hi_val) = initial_bracket(&refiner, bracket)?;
    let bracket = &Bracket { lo, hi };
    if lo_val.value.is_zero() {
        return finish(bp, parity, bracket.lo.clone(), bracket.lo.clone(), lo_val);
    }
    let width = Float::with_val(bracket.lo.prec().max(53), &bracket.hi - &bracket.lo);
    let mut state = RootState {
        prev: bracket.lo.clone(),
        f_prev: lo_val.value.clone(),
        best: bracket.hi.clone(),
        f_best: hi_val.value.clone(),
        contra: bracket.hi.clone(),
        f_contra: hi_val.value.clone(),
        step: width.clone(),
        last_step: width,
        loss: hi_val.cancellation_loss,
        last_eval: Some(hi_val),
        evaluations: 2,
    };

    let target = bp.target.get();
    let mut digits = target + 2;
    let tail_limit = -(f64::from(target) + 2.0);
    for _ in 0..16 {
        refiner.converge(&mut state, digits)?;
        if state.f_best.is_zero() {
            break;
        }
        let grid = half_grid(bp, parity, &state.best, PEAK_SAMPLES, state.loss)?;
        let peak = peak_of(&grid);
        let relative_tail = log10_abs(&state.f_best) - log10_abs(&peak);
        if relative_tail <= tail_limit {
            break;
        }
        digits += (relative_tail - tail_limit).ceil() as u32 + 2;
    }

    // bookkeeping (order, precision, loss) must describe psi at the final energy
    let last = refiner.eval(state.loss, &state.best)?;
    finish(bp, parity, state.best, state.contra, last)
}

fn finish(
    bp: &BoundaryProblem,
    parity: Parity,
    best: Float,
    contra: Float,
    last: PsiValue,
) -> Result<Eigenpair> {
    let bits = best.prec().max(contra.prec());
    let span = Float::with_val(bits, &contra - &best);
    let unit = best.to_f64().abs().max(1.0);
    let converged_digits = if span.is_zero() || last.value.is_zero() {
        f64::from(Digits::from_bits(best.prec()).get())
    } else {
        unit.log10() - log10_abs(&span)
    };
    let mut eig = Eigenpair {
        level: 0,
        parity,
        energy: best,
        converged_digits,
        nodes: 0,
        doublet: false,
        working_precision: last.working_precision,
        series_order: last.n_max,
        cancellation_loss: last.cancellation_loss,
    };
    eig.nodes = count_nodes(bp, &eig, node_grid_points(0))?;
    eig.level = eig.nodes;
    Ok(eig)
}

fn node_grid_points(level: usize) -> usize {
    64 + 16 * level
}

/// Counts interior zeros of the eigenfunction on a uniform grid of
/// `grid_points` points in `(-L, L)`. Sign changes inside the outer region
/// where `|psi|` never rises above the noise level are attributed to the wall
/// and ignored.
pub fn count_nodes(bp: &BoundaryProblem, eig: &Eigenpair, grid_points: usize) -> Result<usize> {
    if grid_points < 64 {
        return Err(SolverError::InvalidInput(format!(
            "node counting needs at least 64 grid points, got {grid_points}"
        )));
    }
    let half = grid_points / 2;
    let values = half_grid(bp, eig.parity, &eig.energy, half, eig.cancellation_loss)?;
    let peak = peak_of(&values);
    let noise = log10_abs(&peak) - f64::from(bp.target.get());
    let loud: Vec<bool> = values.iter().map(|(_, v)| log10_abs(v) > noise).collect();
    let Some(last_loud) = loud.iter().rposition(|&l| l) else {
        return Ok(eig.parity.offset());
    };

    // both parities start positive just right of the origin
    let mut sign_negative = false;
    let mut changes = 0usize;
    let mut quiet_flips = false;
    let mut quiet_start: Option<usize> = None;
    for i in 0..=last_loud {
        let v = &values[i].1;
        if !loud[i] {
            quiet_start.get_or_insert(i);
            if i > 0 && is_negative(v) != is_negative(&values[i - 1].1) {
                quiet_flips = true;
            }
            continue;
        }
        let negative = is_negative(v);
        if let Some(start) = quiet_start.take() {
            if quiet_flips && negative == sign_negative {
                return Err(SolverError::AmbiguousNode {
                    x: values[start].0.to_f64().to_string(),
                });
            }
            quiet_flips = false;
        }
        if negative != sign_negative {
            changes += 1;
            sign_negative = negative;
        }
    }
    Ok(2 * changes + eig.parity.offset())
}

/// Lowest `count` eigenvalues across both parities, sorted ascending, each
/// checked to have `level` interior nodes.
pub fn spectrum(bp: &BoundaryProblem, count: usize) -> Result<Vec<Eigenpair>> {
    if count == 0 {
        return Err(SolverError::InvalidInput(
            "level count must be at least 1".into(),
        ));
    }
    let need_even = count.div_ceil(2);
    let need_odd = count / 2;
    let l = bp.half_width_f64();
    let floor = bp.potential.sampled_min(l).min(0.0).floor() - 1.0;
    let scan_bp = bp.with_target(SCAN_DIGITS.min(bp.target));

    let mut steps = DEFAULT_SCAN_STEPS;
    let mut last_err = None;
    for _ in 0..=MAX_RESCANS {
        let mut jobs: Vec<(Parity, Bracket)> = Vec::new();
        for (parity, need) in [(Parity::Even, need_even), (Parity::Odd, need_odd)] {
            if need == 0 {
                continue;
            }
            let found = find_brackets(&scan_bp, parity, need, floor, steps)?;
            jobs.extend(found.into_iter().map(|b| (parity, b)));
        }
        let mut levels: Vec<Eigenpair> = jobs
            .par_iter()
            .map(|(parity, bracket)| refine_root(bp, *parity, bracket))
            .collect::<Result<_>>()?;
        levels.sort_by(|a, b| {
            a.energy
                .partial_cmp(&b.energy)
                .unwrap_or(Ordering::Equal)
                .then(a.parity.cmp(&b.parity))
        });
        let mut ok = true;
        for (i, eig) in levels.iter_mut().enumerate() {
            eig.level = i;
            if eig.nodes != i && i > 0 {
                // recount on a finer grid before declaring a gap
                eig.nodes = count_nodes(bp, eig, node_grid_points(i) * 2)?;
            }
            if eig.nodes != i {
                last_err = Some(SolverError::MissedLevel {
                    level: i,
                    nodes: eig.nodes,
                });
                ok = false;
                break;
            }
        }
        if ok {
            flag_doublets(&mut levels, bp.target);
            levels.truncate(count);
            return Ok(levels);
        }
        steps *= 2;
    }
    Err(last_err.unwrap_or(SolverError::MissedLevel { level: 0, nodes: 0 }))
}

fn flag_doublets(levels: &mut [Eigenpair], target: Digits) {
    for i in 1..levels.len() {
        let (lo, hi) = levels.split_at_mut(i);
        let a = &mut lo[i - 1];
        let b = &mut hi[0];
        let unit = a.energy.to_f64().abs().max(1.0).log10();
        let gap = Float::with_val(a.energy.prec().max(b.energy.prec()), &b.energy - &a.energy);
        if log10_abs(&gap) - unit < -f64::from(target.get()) {
            a.doublet = true;
            b.doublet = true;
        }
    }
}

/// Scans upward from `floor` in windows of doubling width until `need`
/// sign changes are found; returns the lowest `need` brackets.
fn find_brackets(
    bp: &BoundaryProblem,
    parity: Parity,
    need: usize,
    floor: f64,
    steps: usize,
) -> Result<Vec<Bracket>> {
    let bits = bp.target.bits();
    let mut lo = Float::with_val(bits, floor);
    let mut width = FIRST_WINDOW;
    let mut chunk_steps = steps;
    let mut found: Vec<Bracket> = Vec::new();
    for _ in 0..24 {
        let hi = Float::with_val(bits, floor + width);
        found.extend(scan_brackets(bp, parity, &lo, &hi, chunk_steps)?);
        if found.len() >= need {
            found.truncate(need);
            return Ok(found);
        }
        lo = hi;
        // the next chunk has the same width as everything scanned so far
        chunk_steps = steps * (width / FIRST_WINDOW) as usize;
        width *= 2.0;
    }
    Err(SolverError::InvalidInput(format!(
        "found only {} {} levels below E = {}",
        found.len(),
        parity.as_str(),
        floor + width
    )))
}

/// Digits of agreement of `psi(L)` at the eigenvalue under doubling of the
/// series order and of the working precision, respectively.
pub fn stability_digits(bp: &BoundaryProblem, eig: &Eigenpair) -> (f64, f64) {
    let floor = zero_floor_log10(bp.target);
    let base = series_coefficients(
        &bp.potential,
        &eig.energy,
        eig.parity,
        eig.series_order,
        eig.working_precision,
    )
    .evaluate(&bp.half_width)
    .0;
    let longer = series_coefficients(
        &bp.potential,
        &eig.energy,
        eig.parity,
        eig.series_order * 2,
        eig.working_precision,
    )
    .evaluate(&bp.half_width)
    .0;
    let finer = series_coefficients(
        &bp.potential,
        &eig.energy,
        eig.parity,
        eig.series_order,
        Digits(eig.working_precision.get() * 2),
    )
    .evaluate(&bp.half_width)
    .0;
    (
        agreement_digits(&base, &longer, floor),
        agreement_digits(&base, &finer, floor),
    )
}
