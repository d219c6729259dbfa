//! Flat `key = value` configuration, merged with command-line overrides.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use multiphoton::ModelParams;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Keys accepted in a config file. Command-line flags use the same names
/// with dashes.
pub const KEYS: &[&str] = &[
    "gamma",
    "kappa",
    "nbar",
    "eta",
    "xi",
    "omega",
    "rabi",
    "order",
    "nmax",
    "tol",
    "include_kappa_eta",
    "axis",
    "values",
    "range",
    "outputs",
    "jobs",
    "format",
];

/// Unparsed settings, later sources overriding earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig(BTreeMap<String, String>);

impl RawConfig {
    /// Parses `key = value` lines. `#` and `;` start comments.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config line {}: expected key = value",
                    i + 1
                )));
            };
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key `{key}`",
                    i + 1
                )));
            }
            map.insert(key, value.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        debug_assert!(KEYS.contains(&key), "unknown key {key}");
        self.0.insert(key.to_string(), value.into());
    }

    pub fn remove(&mut self, key: &str) {
        self.0.remove(key);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Usage(format!("invalid value `{v}` for {key}")))
            })
            .transpose()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    Fixed(usize),
    Adaptive { tolerance: f64 },
}

impl Truncation {
    fn mode(&self) -> &'static str {
        match self {
            Self::Fixed(_) => "fixed",
            Self::Adaptive { .. } => "adaptive",
        }
    }

    pub fn tolerance(&self) -> Option<f64> {
        match self {
            Self::Fixed(_) => None,
            Self::Adaptive { tolerance } => Some(*tolerance),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Swept parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Eta,
    Xi,
    Nbar,
    KappaOverGamma,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Eta => "eta",
            Self::Xi => "xi",
            Self::Nbar => "nbar",
            Self::KappaOverGamma => "kappa_over_gamma",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(&self, base: &ModelParams, value: f64) -> ModelParams {
        let mut p = *base;
        match self {
            Self::Eta => p.eta = value,
            Self::Xi => p.xi = value,
            Self::Nbar => p.nbar = value,
            Self::KappaOverGamma => p.kappa = value * p.gamma,
        }
        p
    }
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "eta" => Ok(Self::Eta),
            "xi" => Ok(Self::Xi),
            "nbar" => Ok(Self::Nbar),
            "kappa_over_gamma" | "kappa-over-gamma" => Ok(Self::KappaOverGamma),
            other => Err(CliError::Usage(format!(
                "unknown axis `{other}` (expected eta, xi, nbar or kappa_over_gamma)"
            ))),
        }
    }
}

/// Observable columns a sweep can emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Output {
    MeanN,
    G2,
    P2,
}

impl Output {
    pub const ALL: [Output; 3] = [Output::MeanN, Output::G2, Output::P2];

    pub fn name(&self) -> &'static str {
        match self {
            Self::MeanN => "mean_n",
            Self::G2 => "g2",
            Self::P2 => "p2",
        }
    }
}

impl FromStr for Output {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Output::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| {
                CliError::Usage(format!("unknown output `{s}` (expected mean_n, g2 or p2)"))
            })
    }
}

/// Fully resolved settings with defaults applied.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    /// Parameters as given, before normalization to `gamma = 1`.
    pub params: ModelParams,
    pub orders: Vec<usize>,
    pub truncation: Truncation,
    pub include_kappa_eta: bool,
    pub axis: Option<Axis>,
    pub values: Vec<f64>,
    pub outputs: Vec<Output>,
    pub jobs: Option<usize>,
    pub format: Format,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

impl Settings {
    /// Applies defaults to `raw`. `default_orders` is used when no order is given.
    pub fn resolve(raw: &RawConfig, default_orders: &str) -> Result<Self, CliError> {
        let mut params = ModelParams::new(
            raw.parsed("kappa")?.unwrap_or(1e-3),
            raw.parsed("nbar")?.unwrap_or(0.1),
            raw.parsed("eta")?.unwrap_or(0.05),
            raw.parsed("xi")?.unwrap_or(0.0),
        );
        params.gamma = raw.parsed("gamma")?.unwrap_or(1.0);
        params.omega = raw.parsed("omega")?;
        params.rabi = raw.parsed("rabi")?;
        params.check().map_err(|e| CliError::Usage(e.to_string()))?;

        let orders = parse_list::<usize>(raw.get("order").unwrap_or(default_orders), "order")?;
        if orders.is_empty() || orders.contains(&0) {
            return Err(CliError::Usage(
                "order must be a non-empty list of integers >= 1".into(),
            ));
        }

        let tolerance = raw.parsed("tol")?.unwrap_or(DEFAULT_TOLERANCE);
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(CliError::Usage(format!(
                "tol must be positive, got {tolerance}"
            )));
        }
        let truncation = match raw.get("nmax").unwrap_or("adaptive") {
            "adaptive" => Truncation::Adaptive { tolerance },
            n => Truncation::Fixed(n.parse().map_err(|_| {
                CliError::Usage(format!("nmax must be an integer or `adaptive`, got `{n}`"))
            })?),
        };

        let include_kappa_eta = raw.parsed("include_kappa_eta")?.unwrap_or(false);
        let axis = raw.parsed::<Axis>("axis")?;
        let values = match (raw.get("values"), raw.get("range")) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "give either values or range, not both".into(),
                ))
            }
            (Some(v), None) => parse_list(v, "values")?,
            (None, Some(r)) => parse_range(r)?,
            (None, None) => Vec::new(),
        };
        let outputs = match raw.get("outputs") {
            Some(o) => parse_list(o, "outputs")?,
            None => Output::ALL.to_vec(),
        };
        let jobs = raw.parsed::<usize>("jobs")?;
        if jobs == Some(0) {
            return Err(CliError::Usage("jobs must be at least 1".into()));
        }
        let format = match raw.get("format").unwrap_or("csv") {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => {
                return Err(CliError::Usage(format!(
                    "format must be csv or json, got `{other}`"
                )))
            }
        };
        Ok(Self {
            params,
            orders,
            truncation,
            include_kappa_eta,
            axis,
            values,
            outputs,
            jobs,
            format,
        })
    }

    /// Canonical text of everything that affects the computed numbers.
    pub fn canonical(&self, command: &str) -> String {
        let p = &self.params;
        let opt = |x: Option<f64>| x.map_or_else(|| "none".to_string(), |v| format!("{v:?}"));
        let mut s = String::new();
        let _ = writeln!(s, "command={command}");
        let _ = writeln!(s, "gamma={:?}", p.gamma);
        let _ = writeln!(s, "kappa={:?}", p.kappa);
        let _ = writeln!(s, "nbar={:?}", p.nbar);
        let _ = writeln!(s, "eta={:?}", p.eta);
        let _ = writeln!(s, "xi={:?}", p.xi);
        let _ = writeln!(s, "omega={}", opt(p.omega));
        let _ = writeln!(s, "rabi={}", opt(p.rabi));
        let _ = writeln!(s, "order={:?}", self.orders);
        match self.truncation {
            Truncation::Fixed(n) => {
                let _ = writeln!(s, "nmax={n}");
            }
            Truncation::Adaptive { tolerance } => {
                let _ = writeln!(s, "nmax=adaptive\ntol={tolerance:?}");
            }
        }
        let _ = writeln!(s, "include_kappa_eta={}", self.include_kappa_eta);
        if let Some(axis) = self.axis {
            let _ = writeln!(s, "axis={}\nvalues={:?}", axis.name(), self.values);
            let names: Vec<_> = self.outputs.iter().map(Output::name).collect();
            let _ = writeln!(s, "outputs={names:?}");
        }
        s
    }

    /// SHA-256 of [`Settings::canonical`], hex encoded.
    pub fn hash(&self, command: &str) -> String {
        Sha256::digest(self.canonical(command).as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut acc, b| {
                let _ = write!(acc, "{b:02x}");
                acc
            })
    }

    pub fn truncation_mode(&self) -> &'static str {
        self.truncation.mode()
    }
}

fn parse_list<T: FromStr>(text: &str, key: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::Usage(format!("invalid entry `{s}` in {key}")))
        })
        .collect()
}

/// `start:stop:count`, inclusive of both ends.
fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("range must be start:stop:count, got `{text}`"));
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    let n: usize = n.parse().map_err(|_| bad())?;
    Ok(match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    })
}
