//! Second-order finite-difference check on the eigenvalues.
//!
//! `-psi'' + V psi = E psi` on `M` interior points of `[-L, L]` with
//! `h = 2L / (M + 1)` becomes a symmetric tridiagonal matrix with diagonal
//! `V(x_i) + 2/h^2` and off-diagonal `-1/h^2`. Eigenvalues come from
//! bisection on the Sturm count, in plain `f64`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SolverError};
use crate::potential::Potential;

#[derive(Clone, Debug)]
pub struct FdGrid {
    pub half_width: f64,
    pub interior: usize,
    pub h: f64,
    pub diagonal: Vec<f64>,
    pub off_diagonal: f64,
}

impl FdGrid {
    pub fn new(potential: &Potential, half_width: f64, interior: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(SolverError::InvalidInput(format!(
                "L must be positive, got {half_width}"
            )));
        }
        if interior < 2 {
            return Err(SolverError::InvalidInput(format!(
                "finite-difference grid needs at least 2 interior points, got {interior}"
            )));
        }
        let h = 2.0 * half_width / (interior + 1) as f64;
        let kinetic = 2.0 / (h * h);
        let diagonal = (1..=interior)
            .map(|i| potential.eval_f64(-half_width + i as f64 * h) + kinetic)
            .collect();
        Ok(Self {
            half_width,
            interior,
            h,
            diagonal,
            off_diagonal: -1.0 / (h * h),
        })
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let e2 = self.off_diagonal * self.off_diagonal;
        let tiny = f64::MIN_POSITIVE.sqrt() * (1.0 + x.abs());
        let mut count = 0;
        let mut q = 1.0;
        for (i, &d) in self.diagonal.iter().enumerate() {
            q = if i == 0 { d - x } else { d - x - e2 / q };
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let r = 2.0 * self.off_diagonal.abs();
        let lo = self.diagonal.iter().copied().fold(f64::INFINITY, f64::min) - r;
        let hi = self
            .diagonal
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
            + r;
        (lo, hi)
    }

    /// `k`-th eigenvalue (0-based) by bisection to machine resolution.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return mid;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    pub fn lowest(&self, count: usize) -> Vec<f64> {
        (0..count.min(self.interior))
            .into_par_iter()
            .map(|k| self.eigenvalue(k))
            .collect()
    }
}

/// Lowest `count` eigenvalues of the `M`-point matrix.
pub fn fd_spectrum(
    potential: &Potential,
    half_width: f64,
    interior: usize,
    count: usize,
) -> Result<Vec<f64>> {
    if count > interior {
        return Err(SolverError::InvalidInput(format!(
            "asked for {count} levels from a {interior}-point grid"
        )));
    }
    Ok(FdGrid::new(potential, half_width, interior)?.lowest(count))
}

/// Grid sizes `M`, `2M + 1`, `4M + 3`, which halve `h` exactly each step.
pub fn refined(interior: usize) -> usize {
    2 * interior + 1
}

/// `(4 E_{h/2} - E_h) / 3` from the `M` and `2M + 1` grids.
pub fn richardson(
    potential: &Potential,
    half_width: f64,
    interior: usize,
    count: usize,
) -> Result<Vec<f64>> {
    let coarse = fd_spectrum(potential, half_width, interior, count)?;
    let fine = fd_spectrum(potential, half_width, refined(interior), count)?;
    Ok(extrapolate(&coarse, &fine))
}

fn extrapolate(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse
        .iter()
        .zip(fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub interior: usize,
    pub coarse: Vec<f64>,
    pub medium: Vec<f64>,
    pub fine: Vec<f64>,
    /// Richardson values from the coarse and medium grids.
    pub extrapolated: Vec<f64>,
    /// `log2` of successive difference ratios; 2 for a second-order scheme.
    pub order: Vec<f64>,
    /// `|coarse - medium|`, an error scale for the unextrapolated value.
    pub self_convergence: Vec<f64>,
}

pub fn convergence_study(
    potential: &Potential,
    half_width: f64,
    interior: usize,
    count: usize,
) -> Result<ConvergenceStudy> {
    let medium_m = refined(interior);
    let fine_m = refined(medium_m);
    let coarse = fd_spectrum(potential, half_width, interior, count)?;
    let medium = fd_spectrum(potential, half_width, medium_m, count)?;
    let fine = fd_spectrum(potential, half_width, fine_m, count)?;
    let order = (0..coarse.len())
        .map(|k| ((coarse[k] - medium[k]) / (medium[k] - fine[k])).log2())
        .collect();
    let self_convergence = coarse
        .iter()
        .zip(&medium)
        .map(|(c, m)| (c - m).abs())
        .collect();
    Ok(ConvergenceStudy {
        interior,
        extrapolated: extrapolate(&coarse, &medium),
        coarse,
        medium,
        fine,
        order,
        self_convergence,
    })
}
