//! Photon-number rate equations generated from the effective cavity master
//! equation.
//!
//! The dissipative part of the effective equation is a sum of sandwich
//! terms `w · L ρ R`, where `L` and `R` are polynomials in the cavity
//! operators:
//!
//! * the emitter term `(gamma/4) {cos2chi ρ cos2chi + sin2chi ρ sin2chi - ρ}`,
//!   whose operator coefficients are Taylor series in `eta (b + b†)`;
//! * the thermal cavity dissipators with rates `kappa (1 + nbar)` and
//!   `kappa nbar`;
//! * optionally the `kappa eta² (1 + 2 nbar) / 8` double sum over
//!   `f_k1 f_k2 [(b+b†)^k1, (b+b†)^k2 ρ]`, plus its Hermitian conjugate.
//!
//! Keeping `N` photon processes means keeping every term up to total order
//! `eta^(2N)`. After normal ordering, a monomial pair
//! `b†^p1 b^q1 ρ b†^p2 b^q2` rotates at `(p1 - q1 + p2 - q2) omega` in the
//! interaction picture of the cavity; only pairs with zero rotation index
//! survive the secular approximation, and those map the Fock diagonal onto
//! itself with a photon jump `p1 - q1`. The coherent part does not touch
//! the diagonal and is left out.

mod oracle;
mod rate_matrix;
pub mod series;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::GeneratorError;
use crate::fock::{falling_factorial, quadrature_power, to_f64, NormalOrderedPoly};
use crate::linalg::BandMatrix;
use crate::model::ModelParams;

pub use oracle::{
    analytic_rate_matrix, eta4_generator_check, eta4_generator_gap, eta4_rate_matrix,
};
pub use rate_matrix::{max_relative_gap, RateMatrix};
pub use series::{expand_coefficients, SeriesCoefficients};

/// Largest supported photon order. Exact integer coefficients of
/// `(b + b†)^(2N)` and of the `xi` derivatives stay within `i128` up to here.
pub const MAX_ORDER: usize = 12;

/// Which term of the effective master equation a contribution comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum TermSource {
    /// `(b+b†)^left_power ρ (b+b†)^right_power` from the emitter term.
    EmitterSandwich { left_power: u32, right_power: u32 },
    /// `kappa (1 + nbar) D[b]`.
    CavityLoss,
    /// `kappa nbar D[b†]`.
    CavityGain,
    /// `f_k1 f_k2 [(b+b†)^k1, (b+b†)^k2 ρ] + H.c.` from the cavity-decay double sum.
    KappaEta { k1: u32, k2: u32 },
}

impl TermSource {
    pub fn label(&self) -> String {
        match self {
            Self::EmitterSandwich {
                left_power,
                right_power,
            } => format!("emitter_sandwich(j={left_power},k={right_power})"),
            Self::CavityLoss => "cavity_loss".into(),
            Self::CavityGain => "cavity_gain".into(),
            Self::KappaEta { k1, k2 } => format!("kappa_eta(k1={k1},k2={k2})"),
        }
    }
}

/// `weight · left ρ right`.
#[derive(Clone, Debug)]
pub struct SandwichTerm {
    pub left: NormalOrderedPoly,
    pub right: NormalOrderedPoly,
    pub weight: f64,
    /// Total power of `eta` carried by the term.
    pub eta_order: u32,
    pub source: TermSource,
}

/// Generator options beyond the physical parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorOptions {
    pub order: usize,
    pub include_kappa_eta: bool,
}

impl GeneratorOptions {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            include_kappa_eta: false,
        }
    }

    pub fn with_kappa_eta(mut self, on: bool) -> Self {
        self.include_kappa_eta = on;
        self
    }

    fn check(&self) -> Result<(), GeneratorError> {
        if self.order == 0 {
            return Err(GeneratorError::InvalidOrder(0));
        }
        if self.order > MAX_ORDER {
            return Err(GeneratorError::OrderTooLarge {
                order: self.order,
                max: MAX_ORDER,
            });
        }
        Ok(())
    }
}

/// All sandwich terms up to total order `eta^(2N)`.
pub fn sandwich_terms(
    params: &ModelParams,
    options: GeneratorOptions,
) -> Result<Vec<SandwichTerm>, GeneratorError> {
    params.check()?;
    options.check()?;
    let max_k = 2 * options.order;
    let powers: Vec<NormalOrderedPoly> = (0..=max_k as u32).map(quadrature_power).collect();
    let mut terms = Vec::new();

    let numerators = series::SandwichNumerators::new(max_k);
    for j in 0..=max_k {
        for k in 0..=max_k - j {
            let w = 0.25
                * params.gamma
                * params.eta.powi((j + k) as i32)
                * numerators.weight(j, k, params.xi);
            if w == 0.0 {
                continue;
            }
            terms.push(SandwichTerm {
                left: powers[j].clone(),
                right: powers[k].clone(),
                weight: w,
                eta_order: (j + k) as u32,
                source: TermSource::EmitterSandwich {
                    left_power: j as u32,
                    right_power: k as u32,
                },
            });
        }
    }

    let b = NormalOrderedPoly::annihilation();
    let bd = NormalOrderedPoly::creation();
    let one = NormalOrderedPoly::identity();
    let number = NormalOrderedPoly::number();
    let anti_number = number.plus(&one); // b b†
    let mut dissipator = |jump: &NormalOrderedPoly,
                          jump_dag: &NormalOrderedPoly,
                          norm: &NormalOrderedPoly,
                          rate: f64,
                          source| {
        if rate == 0.0 {
            return;
        }
        for (left, right, w) in [
            (jump.clone(), jump_dag.clone(), rate),
            (norm.clone(), one.clone(), -0.5 * rate),
            (one.clone(), norm.clone(), -0.5 * rate),
        ] {
            terms.push(SandwichTerm {
                left,
                right,
                weight: w,
                eta_order: 0,
                source,
            });
        }
    };
    dissipator(
        &b,
        &bd,
        &number,
        params.kappa * (1.0 + params.nbar),
        TermSource::CavityLoss,
    );
    dissipator(
        &bd,
        &b,
        &anti_number,
        params.kappa * params.nbar,
        TermSource::CavityGain,
    );

    if options.include_kappa_eta && max_k >= 2 {
        let coeffs = expand_coefficients(params, options.order);
        let prefactor = -params.kappa * params.eta * params.eta * (1.0 + 2.0 * params.nbar) / 8.0;
        // k1 = 0 commutes with everything.
        for k1 in 1..=max_k - 2 {
            for k2 in 0..=max_k - 2 - k1 {
                let c = prefactor * coeffs.f[k1] * coeffs.f[k2];
                if c == 0.0 {
                    continue;
                }
                let source = TermSource::KappaEta {
                    k1: k1 as u32,
                    k2: k2 as u32,
                };
                let eta_order = (2 + k1 + k2) as u32;
                // [A, Bρ] + H.c. = ABρ - BρA + ρAB - AρB, with A = X^k1, B = X^k2
                for (left, right, w) in [
                    (powers[k1 + k2].clone(), one.clone(), c),
                    (one.clone(), powers[k1 + k2].clone(), c),
                    (powers[k2].clone(), powers[k1].clone(), -c),
                    (powers[k1].clone(), powers[k2].clone(), -c),
                ] {
                    terms.push(SandwichTerm {
                        left,
                        right,
                        weight: w,
                        eta_order,
                        source,
                    });
                }
            }
        }
    }
    Ok(terms)
}

/// Signed rotation index `(p1 - q1) + (p2 - q2)` of a monomial pair.
pub fn rotation_index(left: (u32, u32), right: (u32, u32)) -> i64 {
    (left.0 as i64 - left.1 as i64) + (right.0 as i64 - right.1 as i64)
}

/// Rate of the jump `s -> s + jump` contributed by one source:
/// `Σ c · (s)_q1 · (s + jump)_q2`, with `(x)_k` the falling factorial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Channel {
    pub jump: i32,
    pub source: TermSource,
    pub eta_order: u32,
    /// `(q1, q2) -> c`.
    pub pairs: BTreeMap<(u32, u32), f64>,
}

impl Channel {
    /// Rate from Fock level `s`; zero when the target level would be negative.
    pub fn rate(&self, s: usize) -> f64 {
        let t = s as i64 + self.jump as i64;
        if t < 0 {
            return 0.0;
        }
        let t = t as usize;
        self.pairs
            .iter()
            .map(|(&(q1, q2), &c)| {
                c * falling_factorial(s, q1 as usize) * falling_factorial(t, q2 as usize)
            })
            .sum()
    }

    /// Power-series coefficients (in the source level `s`) of
    /// `rate(s) / natural(s)`, where the natural factor is `(s)_|jump|`
    /// for losses, `(s + jump)_jump` for gains and 1 on the diagonal.
    pub fn flux_polynomial(&self) -> Vec<f64> {
        let d = self.jump;
        let a = d.unsigned_abs() as i64;
        let mut acc: Vec<f64> = Vec::new();
        for (&(q1, q2), &c) in &self.pairs {
            let (q1, q2) = (q1 as i64, q2 as i64);
            let poly = if d < 0 {
                falling_poly(-a, q1 - a).mul(&falling_poly(-a, q2))
            } else if d > 0 {
                falling_poly(0, q1).mul(&falling_poly(0, q2 - a))
            } else {
                falling_poly(0, q1).mul(&falling_poly(0, q2))
            };
            if acc.len() < poly.0.len() {
                acc.resize(poly.0.len(), 0.0);
            }
            for (i, v) in poly.0.iter().enumerate() {
                acc[i] += c * *v as f64;
            }
        }
        acc
    }
}

/// `(s + offset)(s + offset - 1) ... (s + offset - k + 1)` as an integer
/// polynomial in `s`.
fn falling_poly(offset: i64, k: i64) -> series::IntPoly {
    assert!(k >= 0, "negative falling-factorial length");
    (0..k).fold(series::IntPoly::constant(1), |acc, i| {
        acc.mul(&series::IntPoly(vec![(offset - i) as i128, 1]))
    })
}

/// Projects sandwich terms onto the Fock diagonal after discarding every
/// monomial pair with nonzero rotation index.
#[derive(Clone, Debug)]
pub struct SecularGenerator {
    pub params: ModelParams,
    pub options: GeneratorOptions,
    pub channels: Vec<Channel>,
    /// Monomial pairs removed by the secular filter.
    pub discarded_pairs: usize,
}

impl SecularGenerator {
    pub fn new(params: &ModelParams, options: GeneratorOptions) -> Result<Self, GeneratorError> {
        let terms = sandwich_terms(params, options)?;
        let max_order = 2 * options.order as u32;
        let mut grouped: BTreeMap<(TermSource, i32), Channel> = BTreeMap::new();
        let mut discarded = 0;
        for term in terms.iter().filter(|t| t.eta_order <= max_order) {
            for ((p1, q1), c1) in term.left.iter() {
                for ((p2, q2), c2) in term.right.iter() {
                    if rotation_index((p1, q1), (p2, q2)) != 0 {
                        discarded += 1;
                        continue;
                    }
                    let jump = p1 as i32 - q1 as i32;
                    let c = term.weight * to_f64(c1 * c2);
                    let channel = grouped
                        .entry((term.source, jump))
                        .or_insert_with(|| Channel {
                            jump,
                            source: term.source,
                            eta_order: term.eta_order,
                            pairs: BTreeMap::new(),
                        });
                    *channel.pairs.entry((q1, q2)).or_insert(0.0) += c;
                }
            }
        }
        let channels = grouped
            .into_values()
            .filter_map(|mut ch| {
                ch.pairs.retain(|_, c| *c != 0.0);
                (!ch.pairs.is_empty()).then_some(ch)
            })
            .collect();
        Ok(Self {
            params: *params,
            options,
            channels,
            discarded_pairs: discarded,
        })
    }

    /// Total rate `s -> s + jump` summed over sources.
    pub fn rate(&self, s: usize, jump: i32) -> f64 {
        self.channels
            .iter()
            .filter(|c| c.jump == jump)
            .map(|c| c.rate(s))
            .sum()
    }

    /// Combined flux polynomial per nonzero jump, summed over sources.
    pub fn flux_polynomials(&self) -> BTreeMap<i32, Vec<f64>> {
        let mut out: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
        for ch in self.channels.iter().filter(|c| c.jump != 0) {
            let poly = ch.flux_polynomial();
            let acc = out.entry(ch.jump).or_default();
            if acc.len() < poly.len() {
                acc.resize(poly.len(), 0.0);
            }
            for (a, v) in acc.iter_mut().zip(&poly) {
                *a += v;
            }
        }
        out
    }

    /// Assembles the generator on `0..=n_max`.
    pub fn rate_matrix(&self, n_max: usize) -> Result<RateMatrix, GeneratorError> {
        let order = self.options.order;
        let required = 4 * order;
        if n_max < required {
            return Err(GeneratorError::TruncationTooSmall {
                n_max,
                order,
                required,
            });
        }
        let mut band = BandMatrix::zeros(n_max + 1, order, order);
        for ch in &self.channels {
            for s in 0..=n_max {
                let t = s as i64 + ch.jump as i64;
                if t < 0 || t > n_max as i64 {
                    continue;
                }
                let r = ch.rate(s);
                if r != 0.0 {
                    band.add(t as usize, s, r);
                }
            }
        }
        let w = RateMatrix::from_open_band(band, order);
        let negative = w.negative_rates();
        if let Some((to, from, value)) = negative.first() {
            log::warn!(
                "{} negative pseudo-rates in the order-{order} generator (first: W[{to},{from}] = {value:e}); steady-state positivity is not guaranteed",
                negative.len()
            );
        }
        Ok(w)
    }
}

/// The `N`-photon secular generator on `0..=n_max`.
pub fn build_rate_matrix(
    params: &ModelParams,
    order: usize,
    n_max: usize,
    include_kappa_eta: bool,
) -> Result<RateMatrix, GeneratorError> {
    SecularGenerator::new(
        params,
        GeneratorOptions::new(order).with_kappa_eta(include_kappa_eta),
    )?
    .rate_matrix(n_max)
}
