//! The four subcommands as library calls.

use multiphoton::lindblad::{
    cross_check, cross_check_fixed, CrossCheck, G2_AGREEMENT_BAND, MEAN_AGREEMENT_BAND,
};
use multiphoton::secular::{GeneratorOptions, SecularGenerator, TermSource};
use multiphoton::{
    adaptive_truncation, build_rate_matrix, steady_state, validate, DynamicsError, ModelParams,
    ObservableSet, SteadyState, TruncationOptions,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Axis, Output, Settings, Truncation};
use crate::table::{Cell, Metadata, Table};
use crate::CliError;

/// A one-dimensional parameter scan at one or more photon orders.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub orders: Vec<usize>,
    pub fixed: ModelParams,
    pub outputs: Vec<Output>,
    pub truncation: Truncation,
    pub include_kappa_eta: bool,
}

impl SweepSpec {
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let axis = s.axis.ok_or_else(|| {
            CliError::Usage("sweep needs an axis (eta, xi, nbar or kappa_over_gamma)".into())
        })?;
        let spec = Self {
            axis,
            values: s.values.clone(),
            orders: s.orders.clone(),
            fixed: s.params,
            outputs: s.outputs.clone(),
            truncation: s.truncation,
            include_kappa_eta: s.include_kappa_eta,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Err(CliError::Usage(format!(
                "the {} axis has no values",
                self.axis.name()
            )));
        }
        if self.orders.is_empty() || self.orders.contains(&0) {
            return Err(CliError::Usage(
                "orders must be a non-empty list of integers >= 1".into(),
            ));
        }
        for &v in &self.values {
            self.axis
                .apply(&self.fixed, v)
                .check()
                .map_err(|e| CliError::Usage(format!("{} = {v}: {e}", self.axis.name())))?;
        }
        Ok(())
    }
}

/// One sweep point. A failed point keeps its parameters and the error text.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub order: usize,
    pub params: ModelParams,
    pub n_max: Option<usize>,
    pub observables: Option<ObservableSet>,
    pub error: Option<String>,
}

/// Steady state of the `order`-photon model under `truncation`.
pub fn solve(
    params: &ModelParams,
    order: usize,
    truncation: Truncation,
    include_kappa_eta: bool,
) -> Result<(usize, SteadyState), DynamicsError> {
    let p = params.normalized();
    match truncation {
        Truncation::Fixed(n_max) => {
            let w = build_rate_matrix(&p, order, n_max, include_kappa_eta)?;
            Ok((n_max, steady_state(&w)?))
        }
        Truncation::Adaptive { tolerance } => {
            let options = TruncationOptions::new(tolerance).with_kappa_eta(include_kappa_eta);
            let out = adaptive_truncation(&p, order, options)?;
            Ok((out.n_max, out.steady))
        }
    }
}

/// Evaluates every `(value, order)` point on a pool of `jobs` threads.
/// Rows come back in axis order, then order order.
pub fn run_sweep(spec: &SweepSpec, jobs: Option<usize>) -> Result<Vec<SweepRow>, CliError> {
    spec.check()?;
    let points: Vec<(f64, usize)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.orders.iter().map(move |&n| (v, n)))
        .collect();
    let threads =
        jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Numerical(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        points
            .par_iter()
            .map(|&(value, order)| {
                let params = spec.axis.apply(&spec.fixed, value);
                let (n_max, observables, error) =
                    match solve(&params, order, spec.truncation, spec.include_kappa_eta) {
                        Ok((n, ss)) => (Some(n), Some(ObservableSet::from_steady_state(&ss)), None),
                        Err(e) => (None, None, Some(e.to_string())),
                    };
                SweepRow {
                    axis_value: value,
                    order,
                    params,
                    n_max,
                    observables,
                    error,
                }
            })
            .collect()
    }))
}

/// Steady-state photon distribution.
pub fn run_distribution(
    params: &ModelParams,
    order: usize,
    truncation: Truncation,
    include_kappa_eta: bool,
) -> Result<(usize, SteadyState), CliError> {
    solve(params, order, truncation, include_kappa_eta)
        .map_err(|e| CliError::Numerical(e.to_string()))
}

/// Full-model cross-check. Resonant parameters are refused because the
/// dispersive expansion does not apply there.
pub fn run_validate(
    params: &ModelParams,
    order: usize,
    truncation: Truncation,
    include_kappa_eta: bool,
) -> Result<CrossCheck, CliError> {
    if params.omega.is_none() || params.rabi.is_none() {
        return Err(CliError::Usage("validate needs --omega and --rabi".into()));
    }
    let report = validate(params).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(r) = report.resonance() {
        return Err(CliError::Numerical(format!(
            "{r}: the steady-state kernel is ill-conditioned and the effective model does not apply"
        )));
    }
    for w in &report.warnings {
        log::warn!("outside the dispersive regime: {w}");
    }
    let p = params.normalized();
    let result = match truncation {
        Truncation::Fixed(n_max) => cross_check_fixed(&p, order, n_max, include_kappa_eta),
        Truncation::Adaptive { tolerance } => cross_check(
            &p,
            order,
            TruncationOptions::new(tolerance).with_kappa_eta(include_kappa_eta),
        ),
    };
    result.map_err(|e| CliError::Numerical(e.to_string()))
}

/// One pair `(q1, q2) -> c` of a channel: the rate from level `s` is
/// `Σ c (s)_q1 (s + jump)_q2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCoefficient {
    pub q1: u32,
    pub q2: u32,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelDump {
    pub jump: i32,
    pub eta_order: u32,
    pub label: String,
    pub source: TermSource,
    pub pairs: Vec<PairCoefficient>,
    pub flux_polynomial: Vec<f64>,
}

/// Combined flux of one jump: `rate(s) = natural(s) Σ_k coefficients[k] s^k`,
/// with `natural(s) = (s)_|jump|` for losses and `(s + jump)_jump` for gains.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluxDump {
    pub jump: i32,
    pub coefficients: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientDump {
    pub metadata: Metadata,
    pub params: ModelParams,
    pub order: usize,
    pub include_kappa_eta: bool,
    pub fluxes: Vec<FluxDump>,
    pub channels: Vec<ChannelDump>,
    pub discarded_pairs: usize,
}

/// Generated band coefficients with the term that produced each of them.
pub fn dump_coeffs(
    params: &ModelParams,
    order: usize,
    include_kappa_eta: bool,
    metadata: Metadata,
) -> Result<CoefficientDump, CliError> {
    let options = GeneratorOptions::new(order).with_kappa_eta(include_kappa_eta);
    let g = SecularGenerator::new(&params.normalized(), options)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let fluxes = g
        .flux_polynomials()
        .into_iter()
        .map(|(jump, coefficients)| FluxDump { jump, coefficients })
        .collect();
    let channels = g
        .channels
        .iter()
        .map(|ch| ChannelDump {
            jump: ch.jump,
            eta_order: ch.eta_order,
            label: ch.source.label(),
            source: ch.source,
            pairs: ch
                .pairs
                .iter()
                .map(|(&(q1, q2), &coefficient)| PairCoefficient {
                    q1,
                    q2,
                    coefficient,
                })
                .collect(),
            flux_polynomial: ch.flux_polynomial(),
        })
        .collect();
    Ok(CoefficientDump {
        metadata,
        params: *params,
        order,
        include_kappa_eta,
        fluxes,
        channels,
        discarded_pairs: g.discarded_pairs,
    })
}

const PARAM_COLUMNS: [&str; 11] = [
    "gamma",
    "kappa",
    "nbar",
    "eta",
    "xi",
    "omega",
    "rabi",
    "order",
    "include_kappa_eta",
    "nmax_mode",
    "tol",
];

fn columns(extra: &[&str]) -> Vec<String> {
    PARAM_COLUMNS
        .iter()
        .chain(extra)
        .map(|c| c.to_string())
        .collect()
}

fn param_cells(p: &ModelParams, order: usize, s: &Settings) -> Vec<Cell> {
    vec![
        p.gamma.into(),
        p.kappa.into(),
        p.nbar.into(),
        p.eta.into(),
        p.xi.into(),
        p.omega.into(),
        p.rabi.into(),
        order.into(),
        s.include_kappa_eta.into(),
        s.truncation_mode().into(),
        s.truncation.tolerance().into(),
    ]
}

pub fn sweep_table(rows: &[SweepRow], s: &Settings, metadata: Metadata) -> Table {
    let mut extra = vec!["axis", "n_max", "valid"];
    extra.extend(s.outputs.iter().map(Output::name));
    extra.push("error");
    let mut t = Table::new(metadata, columns(&extra));
    let axis = s.axis.map_or("", |a| a.name());
    for r in rows {
        let mut cells = param_cells(&r.params, r.order, s);
        cells.push(axis.into());
        cells.push(r.n_max.into());
        cells.push(r.observables.is_some_and(|o| o.valid).into());
        for o in &s.outputs {
            cells.push(match (o, r.observables) {
                (_, None) => Cell::Empty,
                (Output::MeanN, Some(obs)) => obs.mean_n.into(),
                (Output::G2, Some(obs)) => obs.g2.into(),
                (Output::P2, Some(obs)) => obs.p2.into(),
            });
        }
        cells.push(r.error.as_deref().map_or(Cell::Empty, Cell::from));
        t.push(cells);
    }
    t
}

pub fn distribution_table(
    params: &ModelParams,
    order: usize,
    n_max: usize,
    steady: &SteadyState,
    s: &Settings,
    metadata: Metadata,
) -> Table {
    let mut t = Table::new(metadata, columns(&["n_max", "valid", "n", "p_n"]));
    for (n, &p) in steady.distribution.probabilities().iter().enumerate() {
        let mut cells = param_cells(params, order, s);
        cells.extend([n_max.into(), steady.valid.into(), n.into(), p.into()]);
        t.push(cells);
    }
    t
}

pub fn validate_table(
    params: &ModelParams,
    order: usize,
    c: &CrossCheck,
    s: &Settings,
    metadata: Metadata,
) -> Table {
    let mut t = Table::new(
        metadata,
        columns(&[
            "effective_n_max",
            "full_n_max",
            "effective_mean_n",
            "full_mean_n",
            "mean_gap",
            "mean_band",
            "effective_g2",
            "full_g2",
            "g2_gap",
            "g2_band",
            "effective_p2",
            "full_p2",
            "within_bands",
        ]),
    );
    let mut cells = param_cells(params, order, s);
    cells.extend([
        c.effective_n_max.into(),
        c.full_n_max.into(),
        c.effective.mean_n.into(),
        c.full.mean_n.into(),
        c.mean_gap.into(),
        MEAN_AGREEMENT_BAND.into(),
        c.effective.g2.into(),
        c.full.g2.into(),
        c.g2_gap.into(),
        G2_AGREEMENT_BAND.into(),
        c.effective.p2.into(),
        c.full.p2.into(),
        c.within_bands().into(),
    ]);
    t.push(cells);
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawConfig;

    fn spec(values: Vec<f64>, orders: Vec<usize>) -> SweepSpec {
        SweepSpec {
            axis: Axis::Eta,
            values,
            orders,
            fixed: ModelParams::new(1e-3, 0.1, 0.0, 0.0),
            outputs: Output::ALL.to_vec(),
            truncation: Truncation::Adaptive { tolerance: 1e-8 },
            include_kappa_eta: false,
        }
    }

    #[test]
    fn single_photon_sweep_is_thermal() {
        let rows = run_sweep(&spec(vec![0.01, 0.04, 0.08], vec![1]), Some(2)).unwrap();
        for r in rows {
            let g2 = r.observables.unwrap().g2.unwrap();
            assert!((g2 - 2.0).abs() < 1e-8, "eta {}: g2 = {g2}", r.axis_value);
        }
    }

    #[test]
    fn rows_follow_axis_then_order() {
        let rows = run_sweep(&spec(vec![0.05, 0.01, 0.03], vec![2, 1]), Some(3)).unwrap();
        let keys: Vec<(f64, usize)> = rows.iter().map(|r| (r.axis_value, r.order)).collect();
        assert_eq!(
            keys,
            vec![
                (0.05, 2),
                (0.05, 1),
                (0.01, 2),
                (0.01, 1),
                (0.03, 2),
                (0.03, 1)
            ]
        );
    }

    #[test]
    fn empty_axis_is_a_usage_error() {
        assert!(matches!(
            run_sweep(&spec(vec![], vec![1]), None),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn failed_points_are_recorded() {
        let mut s = spec(vec![0.05], vec![1]);
        s.truncation = Truncation::Fixed(2);
        let rows = run_sweep(&s, Some(1)).unwrap();
        assert!(rows[0].error.as_deref().unwrap().contains("too small"));
        assert!(rows[0].observables.is_none());
    }

    #[test]
    fn gamma_is_normalized_away() {
        let mut p = ModelParams::new(2e-3, 0.1, 0.05, 0.0);
        p.gamma = 2.0;
        let (_, a) = run_distribution(&p, 2, Truncation::Fixed(40), false).unwrap();
        let (_, b) = run_distribution(
            &ModelParams::new(1e-3, 0.1, 0.05, 0.0),
            2,
            Truncation::Fixed(40),
            false,
        )
        .unwrap();
        assert_eq!(a.distribution, b.distribution);
    }

    #[test]
    fn validate_needs_frequencies() {
        let p = ModelParams::new(1e-3, 0.1, 0.05, 0.0);
        assert!(matches!(
            run_validate(&p, 2, Truncation::Fixed(20), false),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn validate_refuses_resonance() {
        let p = ModelParams::new(1e-3, 0.1, 0.05, 0.0).with_frequencies(20.0, 10.0);
        assert!(matches!(
            run_validate(&p, 2, Truncation::Fixed(20), false),
            Err(CliError::Numerical(_))
        ));
    }

    #[test]
    fn single_photon_dump_has_two_constant_fluxes() {
        let s = Settings::resolve(&RawConfig::default(), "1").unwrap();
        let d = dump_coeffs(
            &s.params,
            1,
            false,
            Metadata::new("dump-coeffs", String::new()),
        )
        .unwrap();
        let p = s.params;
        let dispersive = p.eta * p.eta / 4.0;
        assert_eq!(d.fluxes.len(), 2);
        assert_eq!(d.fluxes[0].jump, -1);
        assert_eq!(d.fluxes[0].coefficients.len(), 1);
        assert!(
            (d.fluxes[0].coefficients[0] - (p.kappa * (1.0 + p.nbar) + dispersive)).abs() < 1e-15
        );
        assert!((d.fluxes[1].coefficients[0] - (p.kappa * p.nbar + dispersive)).abs() < 1e-15);
    }

    #[test]
    fn dump_rejects_order_zero() {
        let p = ModelParams::new(1e-3, 0.1, 0.05, 0.0);
        assert!(matches!(
            dump_coeffs(&p, 0, false, Metadata::new("dump-coeffs", String::new())),
            Err(CliError::Usage(_))
        ));
    }
}
