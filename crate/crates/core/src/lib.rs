//! Dispersive multiphoton rate equations for a leaky cavity coupled to a
//! coherently driven two-level emitter with permanent dipoles.
//!
//! The emitter is driven near resonance while the cavity sits far below the
//! emitter frequency. Photons still enter the cavity through damping-assisted
//! processes whose strength scales as `eta^(2N)` for `N`-photon jumps, where
//! `eta = g / (2 Omega)`. This crate
//!
//! * expands the effective cavity master equation to order `eta^(2N)` with
//!   exact normal ordering ([`fock`], [`secular`]);
//! * keeps only the non-rotating terms and projects them onto the Fock
//!   diagonal, giving a band generator for `P_n` ([`secular::RateMatrix`]);
//! * solves for steady states and time evolution ([`dynamics`]) and reports
//!   `<n>`, `g2(0)` and `P_2` ([`observables`]);
//! * solves the full emitter-cavity Lindblad equation for comparison
//!   ([`lindblad`]).
//!
//! ```
//! use multiphoton::{build_rate_matrix, steady_state, ModelParams, ObservableSet};
//!
//! let params = ModelParams::new(1e-3, 0.1, 0.02, 0.0);
//! let w = build_rate_matrix(&params, 1, 40, false).unwrap();
//! let obs = ObservableSet::from_steady_state(&steady_state(&w).unwrap());
//! assert!((obs.mean_n - 0.2).abs() < 1e-10);
//! assert!((obs.g2.unwrap() - 2.0).abs() < 1e-8);
//! ```

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod lindblad;
pub mod model;
pub mod observables;
pub mod secular;

pub use dynamics::{
    adaptive_truncation, detailed_balance_n1, evolve, steady_state, PhotonDistribution,
    SteadyState, StepControl, TruncationOptions, TruncationOutcome,
};
pub use error::{DynamicsError, GeneratorError, LinalgError, LindbladError, ParamError};
pub use fock::{
    ladder_matrices, monomial_element, quadrature_power, NormalOrderedPoly, OperatorMatrix,
};
pub use lindblad::{
    build_liouvillian, full_model_observables, full_steady_state, reduced_cavity_observables,
    LindbladModel, Superoperator,
};
pub use model::{thermal_occupation, validate, DetailedBalanceN1, ModelParams, ValidationReport};
pub use observables::{g2_zero, mean_photon, ObservableSet};
pub use secular::{
    analytic_rate_matrix, build_rate_matrix, eta4_generator_check, expand_coefficients, RateMatrix,
    SeriesCoefficients,
};
