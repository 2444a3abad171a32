use oscilspec::bigreal::agreement_digits;
use oscilspec::observables::{moment, moments};
use oscilspec::presets::preset;
use oscilspec::{
    psi_at, spectrum, BoundaryProblem, Digits, Eigenpair, Potential, SeriesConfig, SolverError,
};
use rug::float::Constant;
use rug::Float;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `[int_0^L x^{2m} psi^2 dx for m in 0..=5]` by composite quadrature of
/// pointwise series values.
fn quadrature_moments(bp: &BoundaryProblem, eig: &Eigenpair, panels: usize) -> Vec<f64> {
    let rule = gauss_legendre(20);
    let l = bp.half_width_f64();
    let width = l / panels as f64;
    let cfg = SeriesConfig::default();
    let mut sums = vec![0.0; 6];
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        for &(t, w) in &rule {
            let x = mid + 0.5 * width * t;
            let psi = psi_at(
                &bp.potential,
                &eig.energy,
                eig.parity,
                &Float::with_val(128, x),
                bp.target,
                &cfg,
            )
            .unwrap()
            .value
            .to_f64();
            let base = 0.5 * width * w * psi * psi;
            for (m, s) in sums.iter_mut().enumerate() {
                *s += base * x.powi(2 * m as i32);
            }
        }
    }
    sums
}

fn check_against_quadrature(name: &str, level: usize) {
    let bp = preset(name).unwrap().problem(Digits(20)).unwrap();
    let eig = spectrum(&bp, level + 1).unwrap().remove(level);
    let quad = quadrature_moments(&bp, &eig, 40);
    let reports = moments(&bp, &eig, &[1, 2, 3, 4, 5]).unwrap();
    for r in reports {
        let q = quad[r.m as usize] / quad[0];
        let rel = (r.value.to_f64() - q).abs() / q;
        assert!(
            rel < 1e-10,
            "{name} level {level} m = {}: {} vs {q}",
            r.m,
            r.value.to_f64()
        );
    }
}

#[test]
fn series_moments_match_quadrature_for_f() {
    check_against_quadrature("F", 0);
}

#[test]
fn series_moments_match_quadrature_for_b() {
    check_against_quadrature("B", 1);
}

fn box_ground(l: u32) -> (BoundaryProblem, Eigenpair) {
    let bp = BoundaryProblem::new(Potential::zero(), Float::with_val(64, l), Digits(20)).unwrap();
    let eig = spectrum(&bp, 1).unwrap().remove(0);
    (bp, eig)
}

#[test]
fn box_second_moment_for_wider_box() {
    let (bp, eig) = box_ground(2);
    let m = moment(&bp, &eig, 1).unwrap();
    let bits = 256;
    let pi2 = Float::with_val(bits, Float::with_val(bits, Constant::Pi).square_ref());
    let exact = (Float::with_val(bits, 1) / 3u32 - Float::with_val(bits, 2u32 / &pi2)) * 4u32;
    assert!(agreement_digits(&m.value, &exact, -40.0) >= 12.0);
}

#[test]
fn moment_inequalities_hold() {
    let bp = preset("A").unwrap().problem(Digits(20)).unwrap();
    let levels = spectrum(&bp, 3).unwrap();
    let l2 = bp.half_width_f64().powi(2);
    for eig in &levels {
        let ms: Vec<f64> = moments(&bp, eig, &[0, 1, 2, 3, 4, 5])
            .unwrap()
            .iter()
            .map(|r| r.value.to_f64())
            .collect();
        assert_eq!(ms[0], 1.0);
        for m in 1..5 {
            assert!(ms[m] * ms[m] <= ms[m - 1] * ms[m + 1]);
        }
        for m in 0..5 {
            assert!(ms[m + 1] <= l2 * ms[m]);
            assert!(ms[m + 1] > 0.0);
        }
    }
}

#[test]
fn moment_order_ceiling_is_reported() {
    let (bp, eig) = box_ground(1);
    let tight = bp.with_series_config(SeriesConfig {
        order_ceiling: eig.series_order + 2,
        ..SeriesConfig::default()
    });
    match moment(&tight, &eig, 1) {
        Err(SolverError::PrecisionExhausted { .. }) => {}
        other => panic!("expected exhaustion, got {other:?}"),
    }
}
