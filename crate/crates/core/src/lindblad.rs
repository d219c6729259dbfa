//! The full emitter-cavity master equation, used as an end-to-end check of
//! the effective photon-number theory.
//!
//! The joint basis is `|n, s>` with cavity level `n` and emitter state
//! `s = 0` (ground) or `s = 1` (excited), stored at index `2n + s`. In this
//! ordering every operator of the model couples indices at most two apart,
//! so the row-major vectorized Liouvillian (`rho[i][j]` at `i * D + j`) has
//! half-bandwidth `2D + 2` and can be factorized in band storage.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{
    adaptive_truncation, steady_state, PhotonDistribution, SteadyState, TruncationOptions,
};
use crate::error::{DynamicsError, LindbladError, ParamError};
use crate::linalg::BandMatrix;
use crate::model::ModelParams;
use crate::observables::ObservableSet;
use crate::secular::build_rate_matrix;

/// Default bound on the superoperator side length `D²`.
pub const DEFAULT_SIDE_LIMIT: usize = 4096;
/// Tolerance for hermiticity and positivity of a steady state.
pub const PHYSICALITY_TOLERANCE: f64 = 1e-8;
/// Pivot ratio below which the kernel counts as more than one-dimensional.
const RANK_TOLERANCE: f64 = 1e-13;
/// Condition estimate above which the bordered system counts as singular.
const CONDITION_LIMIT: f64 = 1e12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Frequencies and rates of the full model, all in the same units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FullModelRates {
    pub omega: f64,
    pub detuning: f64,
    pub rabi: f64,
    pub coupling: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub nbar: f64,
}

impl FullModelRates {
    /// `Delta = 2 Omega xi`, `g = 2 Omega eta`.
    pub fn from_params(params: &ModelParams) -> Result<Self, ParamError> {
        params.check()?;
        let (Some(omega), Some(rabi)) = (params.omega, params.rabi) else {
            return Err(ParamError::MissingFullModelFrequencies);
        };
        Ok(Self {
            omega,
            detuning: 2.0 * rabi * params.xi,
            rabi,
            coupling: 2.0 * rabi * params.eta,
            gamma: params.gamma,
            kappa: params.kappa,
            nbar: params.nbar,
        })
    }
}

/// A jump operator with its rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Dissipator {
    pub label: &'static str,
    pub operator: DMatrix<Complex64>,
    pub rate: f64,
}

/// Hamiltonian and dissipators on the truncated joint space.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladModel {
    pub n_max: usize,
    pub hamiltonian: DMatrix<Complex64>,
    pub dissipators: Vec<Dissipator>,
}

/// `|n, s>` index.
pub fn joint_index(n: usize, s: usize) -> usize {
    2 * n + s
}

struct JointOperators {
    b: DMatrix<Complex64>,
    sz: DMatrix<Complex64>,
    sp: DMatrix<Complex64>,
}

fn joint_operators(n_max: usize) -> JointOperators {
    let d = 2 * (n_max + 1);
    let mut b = DMatrix::zeros(d, d);
    let mut sz = DMatrix::zeros(d, d);
    let mut sp = DMatrix::zeros(d, d);
    for n in 0..=n_max {
        for s in 0..2 {
            if n < n_max {
                b[(joint_index(n, s), joint_index(n + 1, s))] =
                    Complex64::new(((n + 1) as f64).sqrt(), 0.0);
            }
            sz[(joint_index(n, s), joint_index(n, s))] = Complex64::new(s as f64 - 0.5, 0.0);
        }
        sp[(joint_index(n, 1), joint_index(n, 0))] = ONE;
    }
    JointOperators { b, sz, sp }
}

impl LindbladModel {
    /// `H = omega b†b + Delta S_z - Omega (S+ + S-) + g S_z (b† + b)` with
    /// emitter decay `gamma`, cavity loss `kappa (1 + nbar)` and gain `kappa nbar`.
    pub fn new(rates: &FullModelRates, n_max: usize) -> Result<Self, LindbladError> {
        if n_max < 1 {
            return Err(LindbladError::TruncationTooSmall);
        }
        let ops = joint_operators(n_max);
        let bd = ops.b.adjoint();
        let sm = ops.sp.adjoint();
        let c = |x: f64| Complex64::new(x, 0.0);
        let hamiltonian = (&bd * &ops.b) * c(rates.omega) + &ops.sz * c(rates.detuning)
            - (&ops.sp + &sm) * c(rates.rabi)
            + &ops.sz * (&bd + &ops.b) * c(rates.coupling);
        let dissipators = vec![
            Dissipator {
                label: "emitter_decay",
                operator: sm,
                rate: rates.gamma,
            },
            Dissipator {
                label: "cavity_loss",
                operator: ops.b.clone(),
                rate: rates.kappa * (1.0 + rates.nbar),
            },
            Dissipator {
                label: "cavity_gain",
                operator: bd,
                rate: rates.kappa * rates.nbar,
            },
        ];
        Ok(Self {
            n_max,
            hamiltonian,
            dissipators,
        })
    }

    pub fn from_params(params: &ModelParams, n_max: usize) -> Result<Self, LindbladError> {
        Self::new(&FullModelRates::from_params(params)?, n_max)
    }

    /// Joint Hilbert-space dimension `2 (n_max + 1)`.
    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// Largest `|H - H†|` entry.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.hamiltonian - self.hamiltonian.adjoint()).camax()
    }

    pub fn emitter_sz(&self) -> DMatrix<Complex64> {
        joint_operators(self.n_max).sz
    }
}

/// The vectorized Liouvillian in band storage.
#[derive(Clone, Debug)]
pub struct Superoperator {
    dim: usize,
    band: BandMatrix<Complex64>,
}

/// `rho -> -i[H, rho] + Σ_j r_j (L_j rho L_j† - ½{L_j† L_j, rho})`.
pub fn build_liouvillian(model: &LindbladModel) -> Result<Superoperator, LindbladError> {
    build_liouvillian_with_limit(model, DEFAULT_SIDE_LIMIT)
}

pub fn build_liouvillian_with_limit(
    model: &LindbladModel,
    limit: usize,
) -> Result<Superoperator, LindbladError> {
    let d = model.dim();
    let side = d * d;
    if side > limit {
        return Err(LindbladError::DimensionOverflow { side, limit });
    }
    // L(rho) = A rho + rho A† + Σ r L rho L†, with A = -iH - ½ Σ r L†L.
    let mut a = model.hamiltonian.map(|h| Complex64::new(0.0, -1.0) * h);
    for diss in &model.dissipators {
        if diss.rate != 0.0 {
            a -= diss.operator.adjoint() * &diss.operator * Complex64::new(0.5 * diss.rate, 0.0);
        }
    }
    let width = 2 * d + 2;
    let mut band = BandMatrix::zeros(side, width, width);
    let nonzero = |m: &DMatrix<Complex64>| -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != ZERO {
                    out.push((i, j, m[(i, j)]));
                }
            }
        }
        out
    };
    for (i, k, v) in nonzero(&a) {
        for j in 0..d {
            band.add(i * d + j, k * d + j, v);
            // (rho A†)[j][i] = Σ_k rho[j][k] conj(A[i][k])
            band.add(j * d + i, j * d + k, v.conj());
        }
    }
    for diss in model.dissipators.iter().filter(|x| x.rate != 0.0) {
        let entries = nonzero(&diss.operator);
        let r = Complex64::new(diss.rate, 0.0);
        for &(i, k, u) in &entries {
            for &(j, l, v) in &entries {
                band.add(i * d + j, k * d + l, r * u * v.conj());
            }
        }
    }
    Ok(Superoperator { dim: d, band })
}

impl Superoperator {
    /// Hilbert-space dimension `D`.
    pub fn hilbert_dim(&self) -> usize {
        self.dim
    }

    /// Side length `D²`.
    pub fn side(&self) -> usize {
        self.dim * self.dim
    }

    pub fn band(&self) -> &BandMatrix<Complex64> {
        &self.band
    }

    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let d = self.dim;
        assert_eq!(rho.shape(), (d, d), "density matrix has the wrong shape");
        let x: Vec<Complex64> = (0..d * d).map(|idx| rho[(idx / d, idx % d)]).collect();
        let mut y = vec![ZERO; d * d];
        self.band.mul_vec(&x, &mut y);
        DMatrix::from_fn(d, d, |i, j| y[i * d + j])
    }
}

/// A physical steady state and its diagnostics.
#[derive(Clone, Debug)]
pub struct FullSteadyState {
    pub rho: DMatrix<Complex64>,
    pub pivot_ratio: f64,
    pub condition: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
}

/// Bordered system whose solution is the (unnormalized) kernel vector with
/// the population of `|0, ground>` fixed to one.
fn pinned_system(l: &Superoperator) -> BandMatrix<Complex64> {
    let mut a = l.band.clone();
    a.set_unit_row(0);
    a
}

/// Infinity-norm condition estimate `|A| |y| / |r|` from one solve with a
/// fixed pseudo-random right-hand side `r`. A singular system shows up as a
/// roundoff-sized pivot, which blows `y` up by the inverse machine epsilon.
fn condition_estimate(a: &BandMatrix<Complex64>, lu: &crate::linalg::BandLu<Complex64>) -> f64 {
    let n = a.dim();
    let mut state = 0x9e37_79b9_7f4a_7c15_u64;
    let r: Vec<Complex64> = (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            Complex64::new(((state >> 11) as f64 / (1u64 << 53) as f64) + 0.5, 0.0)
        })
        .collect();
    let y = lu.solve(&r);
    let norm = |v: &[Complex64]| v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let a_norm = (0..n)
        .map(|i| {
            let (lo, hi) = a.row_span(i);
            (lo..=hi).map(|j| a.get(i, j).norm()).sum::<f64>()
        })
        .fold(0.0_f64, f64::max);
    a_norm * norm(&y) / norm(&r)
}

/// Unique trace-one kernel element of `L`.
///
/// The balance equation of the population of `|0, ground>` is replaced by
/// fixing that population, the band system is solved and the result is
/// rescaled to unit trace. Uniqueness is judged by the pivot ratio and by a
/// condition estimate of the bordered system.
pub fn full_steady_state(l: &Superoperator) -> Result<FullSteadyState, LindbladError> {
    let d = l.dim;
    let a = pinned_system(l);
    let lu = a
        .lu()
        .map_err(|_| LindbladError::NonUniqueKernel { pivot_ratio: 0.0 })?;
    let pivot_ratio = lu.pivot_ratio();
    let condition = condition_estimate(&a, &lu);
    log::debug!("full steady state: pivot ratio {pivot_ratio:e}, condition {condition:e}");
    if pivot_ratio < RANK_TOLERANCE || condition.is_nan() || condition >= CONDITION_LIMIT {
        return Err(LindbladError::NonUniqueKernel { pivot_ratio });
    }
    let mut rhs = vec![ZERO; d * d];
    rhs[0] = ONE;
    let x = lu.solve(&rhs);
    let trace: Complex64 = (0..d).map(|i| x[i * d + i]).sum();
    if !(trace.norm() > 0.0 && trace.norm().is_finite()) {
        return Err(LindbladError::NotTraceOne(trace.norm()));
    }
    let rho = DMatrix::from_fn(d, d, |i, j| x[i * d + j] / trace);
    let hermiticity_defect = (&rho - rho.adjoint()).camax();
    let hermitian = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let min_eigenvalue = SymmetricEigen::new(hermitian)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if hermiticity_defect > PHYSICALITY_TOLERANCE || min_eigenvalue < -PHYSICALITY_TOLERANCE {
        return Err(LindbladError::NotPhysical {
            hermiticity_defect,
            min_eigenvalue,
        });
    }
    Ok(FullSteadyState {
        rho,
        pivot_ratio,
        condition,
        hermiticity_defect,
        min_eigenvalue,
    })
}

/// Cavity photon-number distribution after tracing out the emitter.
pub fn reduced_cavity_distribution(
    rho: &DMatrix<Complex64>,
) -> Result<PhotonDistribution, LindbladError> {
    let d = rho.nrows();
    assert!(
        d.is_multiple_of(2) && rho.ncols() == d,
        "not a joint emitter-cavity state"
    );
    let trace: Complex64 = rho.diagonal().iter().sum();
    if (trace - ONE).norm() > 1e-10 {
        return Err(LindbladError::NotTraceOne(trace.re));
    }
    let p = (0..d / 2)
        .map(|n| {
            (rho[(joint_index(n, 0), joint_index(n, 0))]
                + rho[(joint_index(n, 1), joint_index(n, 1))])
                .re
        })
        .collect();
    Ok(PhotonDistribution::from_raw(p))
}

/// `<b†b>`, `<b†²b²> / <b†b>²` and `P_2` of the reduced cavity state.
pub fn reduced_cavity_observables(
    rho: &DMatrix<Complex64>,
) -> Result<ObservableSet, LindbladError> {
    let p = reduced_cavity_distribution(rho)?;
    Ok(ObservableSet {
        valid: p.min_entry() >= -PHYSICALITY_TOLERANCE,
        ..ObservableSet::from_distribution(&p)
    })
}

/// Builds, solves and reduces the full model in one go.
pub fn full_model_observables(
    params: &ModelParams,
    n_max: usize,
) -> Result<ObservableSet, LindbladError> {
    let model = LindbladModel::from_params(params, n_max)?;
    let l = build_liouvillian(&model)?;
    let ss = full_steady_state(&l)?;
    reduced_cavity_observables(&ss.rho)
}

/// Largest relative gap in `<n>` between the full and effective models
/// accepted by [`cross_check`].
pub const MEAN_AGREEMENT_BAND: f64 = 0.20;
/// Largest relative gap in `g2(0)` accepted by [`cross_check`].
pub const G2_AGREEMENT_BAND: f64 = 0.25;

/// Largest cavity truncation whose Liouvillian fits under `limit`.
pub fn max_full_truncation(limit: usize) -> usize {
    let d = (limit as f64).sqrt().floor() as usize;
    (d / 2).saturating_sub(1)
}

/// Side-by-side observables of the full and effective models.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub full: ObservableSet,
    pub effective: ObservableSet,
    pub full_n_max: usize,
    pub effective_n_max: usize,
    /// `|full - effective| / effective` for `<n>`.
    pub mean_gap: f64,
    /// Same for `g2(0)`; `None` if either is undefined.
    pub g2_gap: Option<f64>,
}

impl CrossCheck {
    pub fn mean_within_band(&self) -> bool {
        self.mean_gap <= MEAN_AGREEMENT_BAND
    }

    pub fn g2_within_band(&self) -> bool {
        self.g2_gap.is_some_and(|g| g <= G2_AGREEMENT_BAND)
    }

    pub fn within_bands(&self) -> bool {
        self.mean_within_band() && self.g2_within_band()
    }
}

/// Solves the effective `order`-photon model with an adaptive truncation and
/// the full model on that truncation plus a guard of `2 order` levels
/// (capped by the default superoperator size limit).
pub fn cross_check(
    params: &ModelParams,
    order: usize,
    options: TruncationOptions,
) -> Result<CrossCheck, LindbladError> {
    let rates = FullModelRates::from_params(params)?;
    let eff = adaptive_truncation(params, order, options)?;
    compare(&rates, order, eff.n_max, &eff.steady)
}

/// [`cross_check`] with the effective model on a fixed truncation.
pub fn cross_check_fixed(
    params: &ModelParams,
    order: usize,
    n_max: usize,
    include_kappa_eta: bool,
) -> Result<CrossCheck, LindbladError> {
    let rates = FullModelRates::from_params(params)?;
    let w =
        build_rate_matrix(params, order, n_max, include_kappa_eta).map_err(DynamicsError::from)?;
    compare(&rates, order, n_max, &steady_state(&w)?)
}

fn compare(
    rates: &FullModelRates,
    order: usize,
    effective_n_max: usize,
    steady: &SteadyState,
) -> Result<CrossCheck, LindbladError> {
    let effective = ObservableSet::from_steady_state(steady);
    let full_n_max = (effective_n_max + 2 * order).min(max_full_truncation(DEFAULT_SIDE_LIMIT));
    let model = LindbladModel::new(rates, full_n_max)?;
    let ss = full_steady_state(&build_liouvillian(&model)?)?;
    let full = reduced_cavity_observables(&ss.rho)?;
    let gap = |a: f64, b: f64| (a - b).abs() / b.abs();
    Ok(CrossCheck {
        full,
        effective,
        full_n_max,
        effective_n_max,
        mean_gap: gap(full.mean_n, effective.mean_n),
        g2_gap: full.g2.zip(effective.g2).map(|(a, b)| gap(a, b)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rates() -> FullModelRates {
        FullModelRates {
            omega: 5.0,
            detuning: 0.7,
            rabi: 1.3,
            coupling: 0.4,
            gamma: 1.0,
            kappa: 0.2,
            nbar: 0.3,
        }
    }

    fn random_density(d: usize, seed: u64) -> DMatrix<Complex64> {
        let mut state = seed;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = DMatrix::from_fn(d, d, |_, _| Complex64::new(next(), next()));
        let rho = &m * m.adjoint();
        let tr: Complex64 = rho.diagonal().iter().sum();
        rho / tr
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let m = LindbladModel::new(&rates(), 6).unwrap();
        assert!(m.hermiticity_defect() < 1e-12);
        assert_eq!(m.dim(), 14);
    }

    #[test]
    fn missing_frequencies_are_rejected() {
        let p = ModelParams::new(1e-3, 0.1, 0.05, 0.0);
        assert_eq!(
            LindbladModel::from_params(&p, 5).unwrap_err(),
            LindbladError::Param(ParamError::MissingFullModelFrequencies)
        );
    }

    #[test]
    fn largest_full_truncation() {
        assert_eq!(max_full_truncation(4096), 31);
        assert_eq!(max_full_truncation(4095), 30);
    }

    #[test]
    fn size_guard() {
        let m = LindbladModel::new(&rates(), 32).unwrap();
        assert!(matches!(
            build_liouvillian(&m),
            Err(LindbladError::DimensionOverflow {
                side: 4356,
                limit: 4096
            })
        ));
    }

    #[test]
    fn trace_and_hermiticity_are_preserved() {
        let m = LindbladModel::new(&rates(), 5).unwrap();
        let l = build_liouvillian(&m).unwrap();
        for seed in 1..6 {
            let rho = random_density(m.dim(), seed);
            let out = l.apply(&rho);
            let tr: Complex64 = out.diagonal().iter().sum();
            assert!(tr.norm() < 1e-12);
            let herm = l.apply(&rho.adjoint());
            assert!((out.adjoint() - herm).camax() < 1e-12);
        }
    }

    #[test]
    fn closed_system_spectrum_is_energy_differences() {
        let r = FullModelRates {
            gamma: 0.0,
            kappa: 0.0,
            ..rates()
        };
        let m = LindbladModel::new(&r, 3).unwrap();
        let l = build_liouvillian(&m).unwrap();
        let eig = SymmetricEigen::new(m.hamiltonian.clone());
        let d = m.dim();
        for a in 0..d {
            for b in 0..d {
                let va = eig.eigenvectors.column(a);
                let vb = eig.eigenvectors.column(b);
                let op = va * vb.adjoint();
                let lambda = Complex64::new(0.0, -(eig.eigenvalues[a] - eig.eigenvalues[b]));
                let residual = (l.apply(&op) - &op * lambda).camax();
                assert!(residual < 1e-10, "({a}, {b}): {residual:e}");
            }
        }
    }

    #[test]
    fn undriven_vacuum_is_stationary() {
        let r = FullModelRates {
            rabi: 0.0,
            coupling: 0.0,
            nbar: 0.0,
            ..rates()
        };
        let m = LindbladModel::new(&r, 4).unwrap();
        let l = build_liouvillian(&m).unwrap();
        let d = m.dim();
        let mut rho = DMatrix::zeros(d, d);
        rho[(0, 0)] = ONE;
        assert!(l.apply(&rho).camax() < 1e-14);
        let ss = full_steady_state(&l).unwrap();
        assert!((ss.rho - &rho).camax() < 1e-12);
        let obs = reduced_cavity_observables(&rho).unwrap();
        assert_eq!(obs.mean_n, 0.0);
        assert_eq!(obs.g2, None);
    }

    #[test]
    fn emitter_inversion_is_conserved_without_drive() {
        let r = FullModelRates {
            rabi: 0.0,
            gamma: 0.0,
            kappa: 0.0,
            ..rates()
        };
        let m = LindbladModel::new(&r, 4).unwrap();
        let l = build_liouvillian(&m).unwrap();
        let sz = m.emitter_sz();
        let rho = random_density(m.dim(), 7);
        let drift: Complex64 = (&sz * l.apply(&rho)).diagonal().iter().sum();
        assert!(drift.norm() < 1e-12);
    }

    #[test]
    fn decoupled_emitter_has_no_unique_steady_state() {
        let r = FullModelRates {
            rabi: 0.0,
            coupling: 0.0,
            gamma: 0.0,
            nbar: 0.1,
            ..rates()
        };
        let m = LindbladModel::new(&r, 6).unwrap();
        let l = build_liouvillian(&m).unwrap();
        assert!(matches!(
            full_steady_state(&l),
            Err(LindbladError::NonUniqueKernel { .. })
        ));
    }

    #[test]
    fn thermal_cavity_with_ground_emitter() {
        let nbar = 0.1_f64;
        let n_max = 30;
        let d = 2 * (n_max + 1);
        let mut rho = DMatrix::zeros(d, d);
        for n in 0..=n_max {
            rho[(joint_index(n, 0), joint_index(n, 0))] =
                Complex64::new(nbar.powi(n as i32) / (1.0 + nbar).powi(n as i32 + 1), 0.0);
        }
        let tr: Complex64 = rho.diagonal().iter().sum();
        rho /= tr;
        let obs = reduced_cavity_observables(&rho).unwrap();
        assert_relative_eq!(obs.mean_n, nbar, max_relative = 1e-12);
        assert_relative_eq!(obs.g2.unwrap(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn driven_steady_state_is_physical() {
        let m = LindbladModel::new(&rates(), 8).unwrap();
        let l = build_liouvillian(&m).unwrap();
        let ss = full_steady_state(&l).unwrap();
        let residual = l.apply(&ss.rho).camax();
        assert!(residual < 1e-10, "{residual:e}");
        let tr: Complex64 = ss.rho.diagonal().iter().sum();
        assert!((tr - ONE).norm() < 1e-12);
        assert!(ss.min_eigenvalue > -1e-8);
    }
}
