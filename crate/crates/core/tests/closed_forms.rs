//! Closed-form states of the tuned potentials A-D.
//!
//! For `psi = x^s exp(W)` with even polynomial `W`,
//! `psi'' / psi = W'' + W'^2 + 2 s W' / x`, so `psi` solves
//! `psi'' = (V - E) psi` iff that polynomial equals `V - E` exactly.

mod common;

use common::*;
use oscilspec::observables::{wavefunction_grid, Normalization};
use oscilspec::presets::preset;
use oscilspec::{refine_root, Bracket, Digits, Parity};
use rug::Float;

#[test]
fn a_ground_state_substitutes_exactly() {
    assert_eq!(
        log_second_derivative(&w_a(), 0),
        shifted_potential("A", (-2, 1))
    );
}

#[test]
fn b_first_excited_substitutes_exactly() {
    assert_eq!(
        log_second_derivative(&w_b(), 1),
        shifted_potential("B", (-9, 1))
    );
}

#[test]
fn c_ground_state_needs_quartic_term() {
    assert_eq!(
        log_second_derivative(&w_cd(), 0),
        shifted_potential("C", (3, 8))
    );
    // x^2/8 in place of x^4/8 collapses the exponent to -x^2/16 - x^6/6
    let misprint = poly(&[(2, (-1, 16)), (6, (-1, 6))]);
    assert_ne!(
        log_second_derivative(&misprint, 0),
        shifted_potential("C", (3, 8))
    );
}

#[test]
fn d_first_excited_substitutes_exactly() {
    assert_eq!(
        log_second_derivative(&w_cd(), 1),
        shifted_potential("D", (9, 8))
    );
}

fn check_grid(name: &str, level: usize, w: &Poly, s: u32) {
    let err = grid_error(name, level, w, s, 401);
    assert!(err < 1e-10, "{name} level {level}: max deviation {err:e}");
}

#[test]
fn a_ground_grid_matches_closed_form() {
    check_grid("A", 0, &w_a(), 0);
}

#[test]
fn b_first_excited_grid_matches_closed_form() {
    check_grid("B", 1, &w_b(), 1);
}

#[test]
fn c_and_d_grids_match_corrected_closed_form() {
    check_grid("C", 0, &w_cd(), 0);
    check_grid("D", 1, &w_cd(), 1);
}

#[test]
fn odd_state_vanishes_at_origin() {
    let bp = preset("B").unwrap().problem(Digits(20)).unwrap();
    let b = Bracket {
        lo: Float::with_val(64, -9.0005),
        hi: Float::with_val(64, -8.9995),
    };
    let eig = refine_root(&bp, Parity::Odd, &b).unwrap();
    let grid = wavefunction_grid(&bp, &eig, 401, Normalization::None).unwrap();
    assert!(grid[200].0.is_zero());
    assert!(grid[200].1.is_zero());
    assert_eq!(eig.nodes, 1);
}
