//! Hand-transcribed generators used to check the series engine.

use nalgebra::DMatrix;

use super::{build_rate_matrix, max_relative_gap, RateMatrix};
use crate::error::GeneratorError;
use crate::fock::ladder_matrices;
use crate::linalg::BandMatrix;
use crate::model::ModelParams;

/// Relative tolerance for agreement between the two η⁴ paths.
const AGREEMENT: f64 = 1e-12;

/// The single-photon (`order = 1`) and single-plus-two-photon (`order = 2`)
/// flux equations written out term by term.
pub fn analytic_rate_matrix(
    params: &ModelParams,
    order: usize,
    n_max: usize,
) -> Result<RateMatrix, GeneratorError> {
    params.check()?;
    if order == 0 {
        return Err(GeneratorError::InvalidOrder(0));
    }
    if order > 2 {
        return Err(GeneratorError::NoClosedForm(order));
    }
    let ModelParams {
        gamma,
        kappa,
        nbar,
        eta,
        xi,
        ..
    } = *params;
    let u = 1.0 + xi * xi;
    let dressing = gamma * eta * eta / (4.0 * u * u);
    let down = kappa * (1.0 + nbar) + dressing;
    let up = kappa * nbar + dressing;
    let (single_fix, pair) = if order == 2 {
        let eta4 = eta.powi(4);
        (
            3.0 * gamma * (1.0 - 2.0 * xi * xi) * eta4 / (4.0 * u.powi(4)),
            gamma * (1.0 + 4.0 * xi * xi) * eta4 / (16.0 * u.powi(4)),
        )
    } else {
        (0.0, 0.0)
    };

    let mut band = BandMatrix::zeros(n_max + 1, order, order);
    for m in 0..=n_max {
        let x = m as f64;
        let mut flux = |to: i64, rate: f64| {
            if rate != 0.0 && to >= 0 && to as usize <= n_max {
                band.add(to as usize, m, rate);
                band.add(m, m, -rate);
            }
        };
        let to = m as i64;
        flux(to - 1, down * x - single_fix * x * x);
        flux(to + 1, up * (x + 1.0) - single_fix * (x + 1.0) * (x + 1.0));
        flux(to - 2, pair * x * (x - 1.0));
        flux(to + 2, pair * (x + 1.0) * (x + 2.0));
    }
    Ok(RateMatrix::from_open_band(band, order))
}

/// The η⁴ damping superoperator, written as commutators `c [A, B ρ] + H.c.`
/// and projected onto the Fock diagonal with dense ladder matrices.
pub fn eta4_rate_matrix(params: &ModelParams, n_max: usize) -> Result<RateMatrix, GeneratorError> {
    params.check()?;
    let ModelParams {
        gamma,
        kappa,
        nbar,
        eta,
        xi,
        ..
    } = *params;
    let u = 1.0 + xi * xi;
    let eta2 = eta * eta;
    let eta4 = eta2 * eta2;

    // Room for every intermediate level reached by degree-four products.
    let ladder = ladder_matrices(n_max + 6);
    let b = ladder.annihilation.real();
    let bd = ladder.creation.real();
    let id = DMatrix::<f64>::identity(b.nrows(), b.ncols());
    let num = &bd * &b;
    let sym = &b * &bd + &num;
    let b2 = &b * &b;
    let bd2 = &bd * &bd;

    let c1 = -gamma * eta2 / (8.0 * u * u);
    let c2 = -gamma * eta4 * (1.0 + 4.0 * xi * xi) / (32.0 * u.powi(4));
    let c3 = 3.0 * gamma * eta4 * (1.0 - 2.0 * xi * xi) / (8.0 * u.powi(4));
    let terms: Vec<(f64, DMatrix<f64>, DMatrix<f64>)> = vec![
        (c1, b.clone(), bd.clone()),
        (c1, bd.clone(), b.clone()),
        (c2, sym.clone(), sym.clone()),
        (c2, b2.clone(), bd2.clone()),
        (c2, bd2, b2),
        (c3, &bd * (&id + &num), b.clone()),
        (c3, (&id + &num) * &b, bd.clone()),
        (-0.5 * kappa * (1.0 + nbar), bd.clone(), b.clone()),
        (-0.5 * kappa * nbar, b, bd),
    ];

    // For real A, B and ρ = |m><m|, the diagonal of c([A, Bρ] + H.c.) is
    // 2c (AB)[m,m] δ(n,m) - 2c B[n,m] A[m,n].
    let mut band = BandMatrix::zeros(n_max + 1, 2, 2);
    for (c, a, bm) in &terms {
        let ab = a * bm;
        for m in 0..=n_max {
            band.add(m, m, 2.0 * c * ab[(m, m)]);
            for n in m.saturating_sub(2)..=(m + 2).min(n_max) {
                let v = -2.0 * c * bm[(n, m)] * a[(m, n)];
                if v != 0.0 {
                    band.add(n, m, v);
                }
            }
        }
    }
    Ok(RateMatrix::from_open_band(band, 2))
}

/// Largest relative entry gap between the two-photon series generator and
/// the commutator transcription.
pub fn eta4_generator_gap(params: &ModelParams, n_max: usize) -> Result<f64, GeneratorError> {
    let generated = build_rate_matrix(params, 2, n_max, false)?;
    let transcribed = eta4_rate_matrix(params, n_max)?;
    Ok(max_relative_gap(&generated, &transcribed))
}

/// Whether the two-photon series generator matches the commutator
/// transcription entrywise to `1e-12` relative.
pub fn eta4_generator_check(params: &ModelParams, n_max: usize) -> Result<bool, GeneratorError> {
    Ok(eta4_generator_gap(params, n_max)? <= AGREEMENT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_photon_coefficients() {
        let p = ModelParams::new(1e-3, 0.1, 0.02, 0.0);
        let w = analytic_rate_matrix(&p, 1, 20).unwrap();
        assert_relative_eq!(w.entry(0, 1), 1.2e-3, max_relative = 1e-13);
        assert_relative_eq!(w.entry(1, 0), 2e-4, max_relative = 1e-13);
        assert_relative_eq!(w.entry(4, 5), 5.0 * 1.2e-3, max_relative = 1e-13);
    }

    #[test]
    fn two_photon_rate_on_axis() {
        let eta = 0.07_f64;
        let p = ModelParams::new(1e-3, 0.1, eta, 0.0);
        let w = analytic_rate_matrix(&p, 2, 20).unwrap();
        // 2 -> 0 carries m(m-1) = 2.
        assert_relative_eq!(
            w.entry(0, 2),
            2.0 * eta.powi(4) / 16.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn single_photon_correction_vanishes_at_magic_detuning() {
        let p = ModelParams::new(1e-3, 0.1, 0.07, 0.5_f64.sqrt());
        let w1 = analytic_rate_matrix(&p, 1, 20).unwrap();
        let w2 = analytic_rate_matrix(&p, 2, 20).unwrap();
        for m in 1..15 {
            assert_relative_eq!(w1.entry(m - 1, m), w2.entry(m - 1, m), max_relative = 1e-12);
            assert_relative_eq!(w1.entry(m + 1, m), w2.entry(m + 1, m), max_relative = 1e-12);
        }
    }

    #[test]
    fn higher_orders_have_no_closed_form() {
        let p = ModelParams::new(1e-3, 0.1, 0.07, 0.0);
        assert_eq!(
            analytic_rate_matrix(&p, 3, 20),
            Err(GeneratorError::NoClosedForm(3))
        );
    }

    #[test]
    fn series_matches_closed_forms() {
        for &(eta, xi, nbar, kappa) in &[
            (0.02, 0.0, 0.1, 1e-3),
            (0.09, 0.3, 1.0, 1e-2),
            (0.1, 0.5, 0.0, 1e-3),
            (0.05, 0.72, 0.2, 5e-3),
        ] {
            let p = ModelParams::new(kappa, nbar, eta, xi);
            for order in [1, 2] {
                let a = analytic_rate_matrix(&p, order, 40).unwrap();
                let g = build_rate_matrix(&p, order, 40, false).unwrap();
                let gap = max_relative_gap(&a, &g);
                assert!(gap < 1e-12, "order {order} at {p:?}: {gap:e}");
            }
        }
    }

    #[test]
    fn commutator_transcription_agrees() {
        for &(eta, xi) in &[(0.07, 0.0), (0.0, 0.0), (0.05, 0.5), (0.1, 0.2)] {
            let p = ModelParams::new(1e-3, 0.1, eta, xi);
            let gap = eta4_generator_gap(&p, 30).unwrap();
            assert!(gap < 1e-12, "{p:?}: {gap:e}");
            assert!(eta4_generator_check(&p, 30).unwrap());
        }
    }

    #[test]
    fn commutator_transcription_matches_closed_form() {
        let p = ModelParams::new(2e-3, 0.3, 0.08, 0.4);
        let a = analytic_rate_matrix(&p, 2, 30).unwrap();
        let b = eta4_rate_matrix(&p, 30).unwrap();
        assert!(max_relative_gap(&a, &b) < 1e-12);
    }
}
