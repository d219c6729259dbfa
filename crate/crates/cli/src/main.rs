use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multiphoton_cli::{execute, CliError, Command, RawConfig};

/// Dispersive multiphoton rate equations: sweeps, distributions, validation
/// against the full emitter-cavity model, and coefficient dumps.
#[derive(Parser, Debug)]
#[command(name = "multiphoton", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Scan one parameter at one or more photon orders.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Swept parameter: eta, xi, nbar or kappa_over_gamma.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated axis values.
        #[arg(long, conflicts_with = "range")]
        values: Option<String>,
        /// Linear grid start:stop:count, both ends included.
        #[arg(long)]
        range: Option<String>,
        /// Comma-separated observables among mean_n, g2, p2.
        #[arg(long)]
        outputs: Option<String>,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Steady-state photon distribution P_n.
    Dist {
        #[command(flatten)]
        common: Common,
    },
    /// Compare with the full emitter-cavity master equation.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Generated rate coefficients with their source terms, as JSON.
    DumpCoeffs {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Flat key = value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    nbar: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Cavity frequency (validate only).
    #[arg(long)]
    omega: Option<f64>,
    /// Rabi frequency of the drive (validate only).
    #[arg(long)]
    rabi: Option<f64>,
    /// Photon order N; a comma-separated list for sweeps.
    #[arg(long)]
    order: Option<String>,
    /// Fock truncation: an integer or `adaptive`.
    #[arg(long)]
    nmax: Option<String>,
    /// Relative tolerance of the adaptive truncation.
    #[arg(long)]
    tol: Option<f64>,
    /// Keep the kappa eta^2 double-sum terms.
    #[arg(long)]
    include_kappa_eta: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

impl Common {
    fn merge(&self, raw: &mut RawConfig) {
        let floats = [
            ("eta", self.eta),
            ("xi", self.xi),
            ("nbar", self.nbar),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("omega", self.omega),
            ("rabi", self.rabi),
            ("tol", self.tol),
        ];
        for (key, value) in floats {
            if let Some(v) = value {
                raw.set(key, format!("{v:?}"));
            }
        }
        for (key, value) in [
            ("order", &self.order),
            ("nmax", &self.nmax),
            ("format", &self.format),
        ] {
            if let Some(v) = value {
                raw.set(key, v.clone());
            }
        }
        if self.include_kappa_eta {
            raw.set("include_kappa_eta", "true");
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let (command, common) = match &cli.command {
        Sub::Sweep { common, .. } => (Command::Sweep, common),
        Sub::Dist { common } => (Command::Dist, common),
        Sub::Validate { common } => (Command::Validate, common),
        Sub::DumpCoeffs { common } => (Command::DumpCoeffs, common),
    };
    let mut raw = match &common.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    common.merge(&mut raw);
    if let Sub::Sweep {
        axis,
        values,
        range,
        outputs,
        jobs,
        ..
    } = &cli.command
    {
        for (key, value) in [
            ("axis", axis),
            ("values", values),
            ("range", range),
            ("outputs", outputs),
        ] {
            if let Some(v) = value {
                raw.set(key, v.clone());
            }
        }
        // A grid given on the command line replaces the file's grid of either kind.
        if values.is_some() {
            raw.remove("range");
        }
        if range.is_some() {
            raw.remove("values");
        }
        if let Some(j) = jobs {
            raw.set("jobs", j.to_string());
        }
    }
    execute(command, &raw, common.out.as_ref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
