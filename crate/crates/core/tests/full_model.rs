//! The full emitter-cavity model against the effective photon-number theory.

use multiphoton::lindblad::{cross_check, CrossCheck, MEAN_AGREEMENT_BAND};
use multiphoton::model::single_photon_mean;
use multiphoton::*;

fn reference(eta: f64, omega: f64) -> ModelParams {
    ModelParams::new(1e-3, 0.1, eta, 0.0).with_frequencies(omega, 10.0)
}

fn check(eta: f64, omega: f64) -> CrossCheck {
    cross_check(&reference(eta, omega), 2, TruncationOptions::new(1e-6)).unwrap()
}

#[test]
fn reference_point_is_inside_the_dispersive_regime() {
    assert!(validate(&reference(0.05, 50.0)).unwrap().is_clean());
}

#[test]
fn full_mean_photon_number_within_band_of_closed_form() {
    let p = reference(0.05, 50.0);
    assert!((single_photon_mean(&p) - 0.725).abs() < 1e-12);
    let full = full_model_observables(&p, 28).unwrap();
    let gap = (full.mean_n - 0.725).abs() / 0.725;
    assert!(
        gap <= MEAN_AGREEMENT_BAND,
        "full <n> = {:.6} is {:.1}% away from 0.725",
        full.mean_n,
        100.0 * gap
    );
}

#[test]
fn full_g2_within_band_of_effective_model() {
    let c = check(0.05, 50.0);
    assert!(c.g2_within_band(), "{c:?}");
}

#[test]
fn gap_shrinks_with_coupling() {
    let wide = check(0.05, 50.0);
    let narrow = check(0.02, 50.0);
    assert!(
        narrow.mean_gap < wide.mean_gap,
        "{} vs {}",
        narrow.mean_gap,
        wide.mean_gap
    );
}

#[test]
fn full_mean_is_robust_to_cavity_frequency() {
    let means: Vec<f64> = [40.0, 50.0, 65.0]
        .iter()
        .map(|&w| check(0.05, w).full.mean_n)
        .collect();
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = means.iter().copied().fold(0.0, f64::max);
    let spread = (hi - lo) / lo;
    assert!(
        spread < MEAN_AGREEMENT_BAND,
        "full <n> over omega = 40, 50, 65: {means:?}"
    );
}

#[test]
fn full_model_is_stable_under_truncation() {
    let p = reference(0.05, 50.0);
    let a = full_model_observables(&p, 24).unwrap();
    let b = full_model_observables(&p, 31).unwrap();
    assert!((a.mean_n - b.mean_n).abs() < 1e-8 * b.mean_n);
}

#[test]
fn resonance_is_flagged() {
    // 2 Omega_0 = 20 = 2 omega.
    let p = reference(0.05, 10.0);
    assert!(validate(&p).unwrap().resonance().is_some());
}
