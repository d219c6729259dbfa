//! Equal-time photon statistics of a distribution.

use serde::Serialize;

use crate::dynamics::{PhotonDistribution, SteadyState};

/// `<n> = Σ n P_n`.
pub fn mean_photon(p: &PhotonDistribution) -> f64 {
    p.probabilities()
        .iter()
        .enumerate()
        .map(|(n, x)| n as f64 * x)
        .sum()
}

/// `<n(n-1)> = Σ n(n-1) P_n`, the normally ordered second moment.
pub fn second_factorial_moment(p: &PhotonDistribution) -> f64 {
    p.probabilities()
        .iter()
        .enumerate()
        .map(|(n, x)| (n * n.saturating_sub(1)) as f64 * x)
        .sum()
}

/// `g2(0) = <n(n-1)> / <n>²`; `None` for an empty cavity.
pub fn g2_zero(p: &PhotonDistribution) -> Option<f64> {
    let mean = mean_photon(p);
    (mean > 0.0).then(|| second_factorial_moment(p) / (mean * mean))
}

/// The reported statistics of one steady state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ObservableSet {
    pub mean_n: f64,
    /// `None` when the cavity is empty.
    pub g2: Option<f64>,
    /// Population of the two-photon Fock state.
    pub p2: f64,
    /// False when the distribution came from a steady state with
    /// significantly negative entries.
    pub valid: bool,
}

impl ObservableSet {
    pub fn from_distribution(p: &PhotonDistribution) -> Self {
        Self {
            mean_n: mean_photon(p),
            g2: g2_zero(p),
            p2: p.get(2),
            valid: true,
        }
    }

    pub fn from_steady_state(s: &SteadyState) -> Self {
        Self {
            valid: s.valid,
            ..Self::from_distribution(&s.distribution)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum() {
        let p = PhotonDistribution::vacuum(10);
        assert_eq!(mean_photon(&p), 0.0);
        assert_eq!(g2_zero(&p), None);
    }

    #[test]
    fn geometric_laws() {
        // beta = 6, so the ratio is 1/6 and the mean 1/(beta - 1).
        let p = PhotonDistribution::geometric(1.0 / 6.0, 200);
        assert_relative_eq!(mean_photon(&p), 0.2, max_relative = 1e-12);
        assert_relative_eq!(g2_zero(&p).unwrap(), 2.0, max_relative = 1e-12);
        let t = PhotonDistribution::thermal(0.1, 200);
        assert_relative_eq!(mean_photon(&t), 0.1, max_relative = 1e-12);
        assert_relative_eq!(g2_zero(&t).unwrap(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn fock_states() {
        assert_eq!(g2_zero(&PhotonDistribution::fock(1, 5)), Some(0.0));
        assert_eq!(g2_zero(&PhotonDistribution::fock(2, 5)), Some(0.5));
    }

    #[test]
    fn observable_set() {
        let p = PhotonDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        let o = ObservableSet::from_distribution(&p);
        assert_eq!(o.mean_n, 0.75);
        assert_eq!(o.p2, 0.25);
        assert_relative_eq!(o.g2.unwrap(), 0.5 / 0.5625);
        assert!(o.valid);
    }
}
