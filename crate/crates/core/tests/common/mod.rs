#![allow(dead_code)]

use oscilspec::observables::{wavefunction_grid, Normalization};
use oscilspec::presets::preset;
use oscilspec::{spectrum, Digits};
use rug::{Float, Rational};

pub type Poly = Vec<Rational>;

pub fn poly(terms: &[(usize, (i64, i64))]) -> Poly {
    let deg = terms.iter().map(|t| t.0).max().unwrap_or(0);
    let mut p = vec![Rational::new(); deg + 1];
    for &(k, (n, d)) in terms {
        p[k] = Rational::from((n, d));
    }
    p
}

pub fn derivative(p: &Poly) -> Poly {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| Rational::from(c * k as u32))
        .collect()
}

pub fn mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![Rational::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += Rational::from(x * y);
        }
    }
    out
}

pub fn add(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![Rational::new(); a.len().max(b.len())];
    for (i, c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] += c;
    }
    out
}

pub fn trimmed(mut p: Poly) -> Poly {
    while p.len() > 1 && p.last().is_some_and(|c| *c == 0) {
        p.pop();
    }
    p
}

/// `W'' + W'^2 + 2 s W'/x` for `psi = x^s exp(W)`.
pub fn log_second_derivative(w: &Poly, s: u32) -> Poly {
    let w1 = derivative(w);
    let mut out = add(&derivative(&w1), &mul(&w1, &w1));
    if s == 1 {
        // W is even, so W' has no constant term
        assert!(w1[0] == 0);
        let over_x: Poly = w1[1..].iter().map(|c| Rational::from(c * 2u32)).collect();
        out = add(&out, &over_x);
    }
    trimmed(out)
}

/// `V - E` as a dense polynomial in `x`.
pub fn shifted_potential(name: &str, energy: (i64, i64)) -> Poly {
    let p = preset(name).unwrap().potential;
    let mut out = vec![Rational::new(); 2 * p.max_k() as usize + 1];
    for (k, b) in p.terms() {
        out[2 * *k as usize] = b.clone();
    }
    out[0] -= Rational::from(energy);
    trimmed(out)
}

pub fn w_a() -> Poly {
    poly(&[(2, (1, 1)), (4, (-1, 4))])
}

pub fn w_b() -> Poly {
    poly(&[(2, (3, 2)), (4, (-1, 4))])
}

pub fn w_cd() -> Poly {
    poly(&[(2, (-3, 16)), (4, (1, 8)), (6, (-1, 6))])
}

/// Peak-normalized closed form on the same grid as the solver output.
pub fn closed_form_grid(w: &Poly, s: u32, xs: &[Float], bits: u32) -> Vec<Float> {
    let vals: Vec<Float> = xs
        .iter()
        .map(|x| {
            let mut exponent = Float::new(bits);
            let mut power = Float::with_val(bits, 1);
            for c in w {
                exponent += Float::with_val(bits, c) * &power;
                power *= x;
            }
            let mut v = exponent.exp();
            if s == 1 {
                v *= x;
            }
            v
        })
        .collect();
    let peak = vals
        .iter()
        .map(|v| Float::with_val(bits, v.abs_ref()))
        .fold(Float::new(bits), |a, b| if b > a { b } else { a });
    vals.into_iter().map(|v| v / &peak).collect()
}

/// Largest pointwise gap between the solver's peak-normalized grid for
/// `(name, level)` and the closed form `x^s exp(W)`.
pub fn grid_error(name: &str, level: usize, w: &Poly, s: u32, points: usize) -> f64 {
    let bp = preset(name).unwrap().problem(Digits(20)).unwrap();
    let levels = spectrum(&bp, level + 1).unwrap();
    let grid = wavefunction_grid(&bp, &levels[level], points, Normalization::PeakOne).unwrap();
    let xs: Vec<Float> = grid.iter().map(|(x, _)| x.clone()).collect();
    let exact = closed_form_grid(w, s, &xs, 256);
    grid.iter()
        .zip(&exact)
        .map(|((_, psi), e)| Float::with_val(256, psi - e).abs().to_f64())
        .fold(0.0, f64::max)
}
