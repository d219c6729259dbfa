//! Physical parameters, derived quantities and regime checks.
//!
//! All rates are measured in units of the emitter decay rate `gamma`. The
//! effective photon-number theory only needs the dimensionless coupling
//! `eta = g / (2 Omega)` and detuning `xi = Delta / (2 Omega)`; the cavity
//! frequency and Rabi frequency are required only by the full joint
//! emitter-cavity model.

use serde::{Deserialize, Serialize};

use crate::error::{DynamicsError, ParamError};

/// Parameters of the driven emitter, the cavity and their environments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Emitter spontaneous decay rate.
    pub gamma: f64,
    /// Cavity leak rate.
    pub kappa: f64,
    /// Thermal photon occupancy of the cavity reservoir.
    pub nbar: f64,
    /// Dimensionless coupling `g / (2 Omega)`.
    pub eta: f64,
    /// Dimensionless detuning `Delta / (2 Omega)`.
    pub xi: f64,
    /// Cavity frequency (full model only).
    pub omega: Option<f64>,
    /// Rabi frequency of the coherent drive (full model only).
    pub rabi: Option<f64>,
}

impl ModelParams {
    /// Effective-model parameters with `gamma = 1`.
    pub fn new(kappa: f64, nbar: f64, eta: f64, xi: f64) -> Self {
        Self {
            gamma: 1.0,
            kappa,
            nbar,
            eta,
            xi,
            omega: None,
            rabi: None,
        }
    }

    /// Adds the cavity and Rabi frequencies needed by the full model.
    pub fn with_frequencies(mut self, omega: f64, rabi: f64) -> Self {
        self.omega = Some(omega);
        self.rabi = Some(rabi);
        self
    }

    /// Rescales every rate and frequency so that `gamma = 1`.
    pub fn normalized(&self) -> Self {
        let g = self.gamma;
        Self {
            gamma: 1.0,
            kappa: self.kappa / g,
            nbar: self.nbar,
            eta: self.eta,
            xi: self.xi,
            omega: self.omega.map(|w| w / g),
            rabi: self.rabi.map(|r| r / g),
        }
    }

    pub fn kappa_over_gamma(&self) -> f64 {
        self.kappa / self.gamma
    }

    /// `1 + xi²`, the recurring denominator of the dispersive rates.
    pub fn detuning_factor(&self) -> f64 {
        1.0 + self.xi * self.xi
    }

    /// Generalized Rabi frequency `Omega_0 = Omega sqrt(1 + xi²)`.
    pub fn generalized_rabi(&self) -> Option<f64> {
        self.rabi.map(|r| r * self.detuning_factor().sqrt())
    }

    /// Emitter-cavity coupling `g = 2 Omega eta`.
    pub fn coupling(&self) -> Option<f64> {
        self.rabi.map(|r| 2.0 * r * self.eta)
    }

    /// Laser detuning `Delta = 2 Omega xi`.
    pub fn detuning(&self) -> Option<f64> {
        self.rabi.map(|r| 2.0 * r * self.xi)
    }

    /// Single-photon rate induced by the emitter, `gamma eta² / [4 (1 + xi²)²]`.
    pub fn dispersive_rate(&self) -> f64 {
        let d = self.detuning_factor();
        self.gamma * self.eta * self.eta / (4.0 * d * d)
    }

    /// Checks the hard invariants only.
    pub fn check(&self) -> Result<(), ParamError> {
        positive("gamma", self.gamma)?;
        positive("kappa", self.kappa)?;
        if !(self.nbar.is_finite() && self.nbar >= 0.0) {
            return Err(ParamError::NegativeOccupancy(self.nbar));
        }
        if !(self.eta.is_finite() && (0.0..1.0).contains(&self.eta)) {
            return Err(ParamError::CouplingOutOfRange(self.eta));
        }
        if !self.xi.is_finite() {
            return Err(ParamError::NonFiniteDetuning(self.xi));
        }
        if let Some(w) = self.omega {
            positive("omega", w)?;
        }
        if let Some(r) = self.rabi {
            positive("rabi", r)?;
        }
        Ok(())
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), ParamError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ParamError::NonPositiveRate { name, value })
    }
}

/// Knobs of the regime checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationConfig {
    /// Largest multiple `s` tested in `2 Omega_0 = s omega`.
    pub s_max: u32,
    /// Relative distance below which `2 Omega_0` counts as resonant with `s omega`.
    pub resonance_rtol: f64,
    /// Factor standing in for "much greater than" in `2 Omega_0 >> max(g, gamma, kappa)`.
    pub dominance_factor: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            s_max: 10,
            resonance_rtol: 1e-3,
            dominance_factor: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegimeWarning {
    /// `omega <= 2 Omega`.
    SlowCavity { omega: f64, two_rabi: f64 },
    /// `2 Omega_0` is not much larger than the largest of `g`, `gamma`, `kappa`.
    WeakDressing { two_rabi0: f64, largest_rate: f64 },
    /// `2 Omega_0 = s omega` within the relative tolerance.
    Resonance { s: u32, two_rabi0: f64, omega: f64 },
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::SlowCavity { omega, two_rabi } => {
                write!(f, "omega = {omega} <= 2 Omega = {two_rabi}")
            }
            Self::WeakDressing {
                two_rabi0,
                largest_rate,
            } => write!(
                f,
                "2 Omega_0 = {two_rabi0} is not much larger than max(g, gamma, kappa) = {largest_rate}"
            ),
            Self::Resonance {
                s,
                two_rabi0,
                omega,
            } => write!(f, "2 Omega_0 = {two_rabi0} is resonant with {s} x omega = {}", *s as f64 * omega),
        }
    }
}

/// Regime conditions that failed. Empty when the parameters sit inside the
/// dispersive regime.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub warnings: Vec<RegimeWarning>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn resonance(&self) -> Option<&RegimeWarning> {
        self.warnings
            .iter()
            .find(|w| matches!(w, RegimeWarning::Resonance { .. }))
    }
}

/// Validates `params` with the default [`ValidationConfig`].
pub fn validate(params: &ModelParams) -> Result<ValidationReport, ParamError> {
    validate_with(params, &ValidationConfig::default())
}

pub fn validate_with(
    params: &ModelParams,
    config: &ValidationConfig,
) -> Result<ValidationReport, ParamError> {
    params.check()?;
    let mut report = ValidationReport::default();
    let (Some(omega), Some(rabi)) = (params.omega, params.rabi) else {
        return Ok(report);
    };
    if omega <= 2.0 * rabi {
        report.warnings.push(RegimeWarning::SlowCavity {
            omega,
            two_rabi: 2.0 * rabi,
        });
    }
    let two_rabi0 = 2.0 * rabi * params.detuning_factor().sqrt();
    let g = 2.0 * rabi * params.eta;
    let largest_rate = g.max(params.gamma).max(params.kappa);
    if two_rabi0 < config.dominance_factor * largest_rate {
        report.warnings.push(RegimeWarning::WeakDressing {
            two_rabi0,
            largest_rate,
        });
    }
    for s in 1..=config.s_max {
        let harmonic = s as f64 * omega;
        if (two_rabi0 - harmonic).abs() <= config.resonance_rtol * two_rabi0 {
            report.warnings.push(RegimeWarning::Resonance {
                s,
                two_rabi0,
                omega,
            });
        }
    }
    Ok(report)
}

/// Bose-Einstein occupation `1 / (exp(omega / T) - 1)`, with `T` in units
/// of `hbar * rate / k_B`. Returns 0 at zero temperature.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (omega / temperature).exp_m1()
}

/// Detailed-balance data of the single-photon birth-death chain.
///
/// The steady state is `P_n = exp(-alpha n) / Z` with `alpha = ln(beta)`,
/// `beta = kappa1 / kappa2`. `z` is the sum over the truncated ladder
/// `n = 0..=n_max`, so the resulting distribution is exactly normalized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetailedBalanceN1 {
    pub kappa1: f64,
    pub kappa2: f64,
    pub beta: f64,
    pub alpha: f64,
    pub z: f64,
}

impl DetailedBalanceN1 {
    pub fn new(params: &ModelParams, n_max: usize) -> Result<Self, DynamicsError> {
        params.check()?;
        let induced = params.dispersive_rate();
        let kappa1 = params.kappa * (1.0 + params.nbar) + induced;
        let kappa2 = params.kappa * params.nbar + induced;
        if kappa1 <= kappa2 {
            return Err(DynamicsError::NoDetailedBalance { kappa1, kappa2 });
        }
        let beta = kappa1 / kappa2;
        let alpha = beta.ln();
        let z = if kappa2 == 0.0 {
            1.0
        } else {
            (0..=n_max).map(|n| (-alpha * n as f64).exp()).sum()
        };
        Ok(Self {
            kappa1,
            kappa2,
            beta,
            alpha,
            z,
        })
    }

    /// Probability of `n` photons on the truncated ladder.
    pub fn probability(&self, n: usize) -> f64 {
        if self.kappa2 == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        (-self.alpha * n as f64).exp() / self.z
    }

    /// Mean photon number on the infinite ladder, `1 / (beta - 1)`.
    pub fn mean_photon_number(&self) -> f64 {
        self.kappa2 / (self.kappa1 - self.kappa2)
    }
}

/// Closed-form single-photon mean, `nbar + gamma eta² / [4 kappa (1 + xi²)²]`.
pub fn single_photon_mean(params: &ModelParams) -> f64 {
    params.nbar + params.dispersive_rate() / params.kappa
}
