//! Photon-number distributions: steady states, time evolution and
//! truncation control.

use serde::Serialize;

use crate::error::DynamicsError;
use crate::linalg::BandMatrix;
use crate::model::{DetailedBalanceN1, ModelParams};
use crate::observables::{g2_zero, mean_photon};
use crate::secular::{build_rate_matrix, RateMatrix};

/// Normalization tolerance of a distribution.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;
/// Negative entries above this are solver noise and get clipped.
pub const CLIP_THRESHOLD: f64 = -1e-12;
/// Negative entries below this mean the generator left its validity range.
pub const VALIDITY_THRESHOLD: f64 = -1e-8;
/// Pivot ratio below which the augmented steady-state system counts as singular.
const RANK_TOLERANCE: f64 = 1e-14;

/// Occupation probabilities `P_n` for `n = 0..=n_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhotonDistribution {
    p: Vec<f64>,
}

impl PhotonDistribution {
    /// Checks normalization and sign. Entries in `[-1e-12, 0)` are clipped to zero.
    pub fn new(mut p: Vec<f64>) -> Result<Self, DynamicsError> {
        if p.is_empty() {
            return Err(DynamicsError::NotNormalized { sum: 0.0 });
        }
        for (index, v) in p.iter_mut().enumerate() {
            if !v.is_finite() || *v < CLIP_THRESHOLD {
                return Err(DynamicsError::NegativeProbability { index, value: *v });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(DynamicsError::NotNormalized { sum });
        }
        Ok(Self { p })
    }

    /// Wraps a vector without any checks. Used for steady states outside
    /// the model's validity range, which are reported rather than rejected.
    pub fn from_raw(p: Vec<f64>) -> Self {
        Self { p }
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::fock(0, n_max)
    }

    /// All weight on `|n>`.
    pub fn fock(n: usize, n_max: usize) -> Self {
        assert!(n <= n_max, "Fock level {n} above the truncation {n_max}");
        let mut p = vec![0.0; n_max + 1];
        p[n] = 1.0;
        Self { p }
    }

    /// `P_n ∝ r^n` on the truncated ladder, `0 <= r < 1`.
    pub fn geometric(ratio: f64, n_max: usize) -> Self {
        assert!((0.0..1.0).contains(&ratio), "ratio must lie in [0, 1)");
        let mut p: Vec<f64> = std::iter::successors(Some(1.0), |x| Some(x * ratio))
            .take(n_max + 1)
            .collect();
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= z);
        Self { p }
    }

    /// Bose-Einstein law `nbar^n / (1 + nbar)^(n+1)`, renormalized on the ladder.
    pub fn thermal(nbar: f64, n_max: usize) -> Self {
        assert!(
            nbar >= 0.0 && nbar.is_finite(),
            "occupancy must be non-negative"
        );
        Self::geometric(nbar / (1.0 + nbar), n_max)
    }

    pub fn n_max(&self) -> usize {
        self.p.len() - 1
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    /// `P_n`, zero beyond the truncation.
    pub fn get(&self, n: usize) -> f64 {
        self.p.get(n).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Smallest entry.
    pub fn min_entry(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `½ Σ |P_n - Q_n|`, with the shorter ladder padded by zeros.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let len = self.len().max(other.len());
        0.5 * (0..len)
            .map(|n| (self.get(n) - other.get(n)).abs())
            .sum::<f64>()
    }
}

/// Outcome of a steady-state solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SteadyState {
    pub distribution: PhotonDistribution,
    /// False when some `P_n < -1e-8`.
    pub valid: bool,
    /// Smallest entry before clipping.
    pub min_entry: f64,
    /// Number of entries in `[-1e-8, 0)` that were clipped to zero.
    pub clipped: usize,
    /// Pivot ratio of the augmented system, a conditioning indicator.
    pub pivot_ratio: f64,
}

fn check_conservation(w: &RateMatrix) -> Result<(), DynamicsError> {
    let defect = w.column_sum_defect();
    if defect.is_nan() || defect > 1e-10 * w.max_abs_entry().max(1.0) {
        return Err(DynamicsError::NotConservative { defect });
    }
    Ok(())
}

/// Normalized kernel vector of `W`.
///
/// The first balance equation is replaced by `Σ_n P_n = 1` and the
/// resulting bordered band system is solved directly.
pub fn steady_state(w: &RateMatrix) -> Result<SteadyState, DynamicsError> {
    check_conservation(w)?;
    let dim = w.dim();
    let bw = w.bandwidth();
    let mut a = BandMatrix::zeros(dim, bw, (dim - 1).max(bw));
    for from in 0..dim {
        for to in from.saturating_sub(bw)..=(from + bw).min(dim - 1) {
            a.set(to, from, w.entry(to, from));
        }
    }
    for j in 0..dim {
        a.set(0, j, 1.0);
    }
    let lu = a
        .lu()
        .map_err(|_| DynamicsError::DegenerateKernel { pivot_ratio: 0.0 })?;
    let pivot_ratio = lu.pivot_ratio();
    if pivot_ratio < RANK_TOLERANCE {
        return Err(DynamicsError::DegenerateKernel { pivot_ratio });
    }
    let mut rhs = vec![0.0; dim];
    rhs[0] = 1.0;
    let mut p = lu.solve(&rhs);
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= sum);

    let min_entry = p.iter().copied().fold(f64::INFINITY, f64::min);
    let valid = min_entry >= VALIDITY_THRESHOLD;
    let mut clipped = 0;
    if valid {
        for x in p.iter_mut().filter(|x| **x < 0.0) {
            *x = 0.0;
            clipped += 1;
        }
        if clipped > 0 {
            log::debug!("clipped {clipped} negative steady-state entries (min {min_entry:e})");
            let sum: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= sum);
        }
    } else {
        log::warn!("steady state has P_n = {min_entry:e} < -1e-8; the parameter point is outside the model's validity range");
    }
    Ok(SteadyState {
        distribution: PhotonDistribution::from_raw(p),
        valid,
        min_entry,
        clipped,
        pivot_ratio,
    })
}

/// Step-size control of the adaptive integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; `None` picks one from the generator's largest rate.
    pub initial_step: Option<f64>,
    /// Steps below `min_step_fraction * t_final` count as stiffness.
    pub min_step_fraction: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            initial_step: None,
            min_step_fraction: 1e-14,
            max_steps: 5_000_000,
        }
    }
}

// Dormand-Prince 5(4) tableau; the nodes are not needed for an autonomous system.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `dP/dt = W P` from `p0` over `[0, t_final]` with an adaptive
/// Dormand-Prince 5(4) scheme.
///
/// Every stage is a linear combination of `W` applied to vectors, and the
/// columns of `W` sum to zero, so the total probability is preserved up to
/// roundoff at every accepted step.
pub fn evolve(
    w: &RateMatrix,
    p0: &PhotonDistribution,
    t_final: f64,
    control: StepControl,
) -> Result<PhotonDistribution, DynamicsError> {
    evolve_with(w, p0, t_final, control, |_, _| {})
}

/// Like [`evolve`], calling `observer(t, P)` after every accepted step.
pub fn evolve_with(
    w: &RateMatrix,
    p0: &PhotonDistribution,
    t_final: f64,
    control: StepControl,
    mut observer: impl FnMut(f64, &[f64]),
) -> Result<PhotonDistribution, DynamicsError> {
    if p0.len() != w.dim() {
        return Err(DynamicsError::DimensionMismatch {
            expected: w.dim(),
            got: p0.len(),
        });
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(DynamicsError::InvalidTime(t_final));
    }
    for tol in [control.rtol, control.atol] {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(DynamicsError::InvalidTolerance(tol));
        }
    }
    let sum = p0.total();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(DynamicsError::NotNormalized { sum });
    }
    if t_final == 0.0 {
        return Ok(p0.clone());
    }

    let n = w.dim();
    let mut y = p0.probabilities().to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let h_min = control.min_step_fraction * t_final;
    let mut h = control
        .initial_step
        .unwrap_or_else(|| 0.5 / w.max_abs_entry().max(f64::MIN_POSITIVE))
        .min(t_final);
    let mut t = 0.0;
    let mut steps = 0;
    w.apply(&y, &mut k[0]);

    while t < t_final {
        if steps >= control.max_steps || h < h_min {
            return Err(DynamicsError::Stiffness { t, h });
        }
        steps += 1;
        let last = t + h >= t_final;
        if last {
            h = t_final - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                stage[i] = y[i] + h * acc;
            }
            if s == 6 {
                y_new.copy_from_slice(&stage);
            }
            w.apply(&stage, &mut k[s]);
        }
        let mut err = 0.0_f64;
        for i in 0..n {
            let e: f64 = h * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>();
            let scale = control.atol + control.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
        }
        if err <= 1.0 {
            t = if last { t_final } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            // First-same-as-last: the seventh stage is W at the new point.
            k.swap(0, 6);
            observer(t, &y);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= if err <= 1.0 { factor } else { factor.min(1.0) };
    }
    Ok(PhotonDistribution::from_raw(y))
}

/// Closed-form single-photon steady state on `0..=n_max`.
pub fn detailed_balance_n1(
    params: &ModelParams,
    n_max: usize,
) -> Result<(DetailedBalanceN1, PhotonDistribution), DynamicsError> {
    let db = DetailedBalanceN1::new(params, n_max)?;
    let p = (0..=n_max).map(|n| db.probability(n)).collect();
    Ok((db, PhotonDistribution::from_raw(p)))
}

/// Controls the search for a truncation that no longer moves the observables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationOptions {
    pub tolerance: f64,
    pub start: usize,
    pub growth: f64,
    pub limit: usize,
    pub include_kappa_eta: bool,
}

impl TruncationOptions {
    pub fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            start: 16,
            growth: 1.5,
            limit: 512,
            include_kappa_eta: false,
        }
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    pub fn with_kappa_eta(mut self, on: bool) -> Self {
        self.include_kappa_eta = on;
        self
    }
}

/// A converged truncation and the steady state found there.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationOutcome {
    pub n_max: usize,
    pub steady: SteadyState,
    /// Truncations tried, in order.
    pub tried: Vec<usize>,
}

fn next_size(n: usize, growth: f64) -> usize {
    ((n as f64 * growth).ceil() as usize).max(n + 1)
}

fn relative_change(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Smallest truncation on the geometric ladder `start, start·1.5, ...` at
/// which one more step changes `<n>` and `g2(0)` by less than `tolerance`
/// (relative).
pub fn adaptive_truncation(
    params: &ModelParams,
    order: usize,
    options: TruncationOptions,
) -> Result<TruncationOutcome, DynamicsError> {
    if !(options.tolerance > 0.0 && options.tolerance.is_finite()) {
        return Err(DynamicsError::InvalidTolerance(options.tolerance));
    }
    let solve = |n_max: usize| -> Result<SteadyState, DynamicsError> {
        let w = build_rate_matrix(params, order, n_max, options.include_kappa_eta)?;
        steady_state(&w)
    };
    let mut n = options.start.max(4 * order);
    if n > options.limit {
        return Err(DynamicsError::TruncationNotConverged {
            limit: options.limit,
        });
    }
    let mut tried = vec![n];
    let mut current = solve(n)?;
    loop {
        let next = next_size(n, options.growth);
        if next > options.limit {
            return Err(DynamicsError::TruncationNotConverged {
                limit: options.limit,
            });
        }
        tried.push(next);
        let candidate = solve(next)?;
        let (a, b) = (&current.distribution, &candidate.distribution);
        let mean_change = relative_change(mean_photon(a), mean_photon(b));
        let g2_change = match (g2_zero(a), g2_zero(b)) {
            (Some(x), Some(y)) => relative_change(x, y),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        };
        if mean_change < options.tolerance && g2_change < options.tolerance {
            return Ok(TruncationOutcome {
                n_max: n,
                steady: current,
                tried,
            });
        }
        n = next;
        current = candidate;
    }
}
