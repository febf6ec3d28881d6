//! Command-line parsing and experiment specifications.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relaysec::{RateMode, SystemConfig};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "relaysec",
    version,
    about = "Secrecy outage and secrecy-rate experiments for untrusted relay networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo secrecy-outage curves with the closed-form bound and fitted slopes.
    Outage(CommonArgs),
    /// Ergodic secrecy-rate curves.
    SecrecyRate(CommonArgs),
    /// Algebraic and statistical self-checks; exits 2 on any failure.
    Validate(ValidateArgs),
    /// Distributional probes of the quantities behind the outage bound.
    DistCheck(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// N=4, K=10, gamma=1, L in {2,3,4}; outage slopes.
    Fig2,
    /// N=L=3, K in {4,6,8,10,12}; secrecy rate versus SNR.
    Fig3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Asymptotic,
}

impl From<ModeArg> for RateMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => RateMode::Exact,
            ModeArg::Asymptotic => RateMode::Asymptotic,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Transmit antennas.
    #[arg(long)]
    pub n: Option<usize>,
    /// Relay counts; a comma-separated list sweeps them.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// Selected-relay counts; a comma-separated list sweeps them.
    #[arg(long, value_delimiter = ',')]
    pub l: Option<Vec<usize>>,
    /// Symbol pairs per selected relay.
    #[arg(long)]
    pub m: Option<usize>,
    /// Secrecy-rate threshold (bits per channel use).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Exponent of the outage bound and the distribution probes, in (0, 1).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// SNR grid in dB as lo:hi:step.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    pub snr_db: Option<String>,
    /// Trials per SNR point.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Exact finite-SNR rates or their high-SNR limits.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Base seed; identical seeds give identical output for any worker count.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Negative control: perturb the dissolution factor by one.
    #[arg(long, hide = true)]
    pub corrupt_beta: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Outage,
    SecrecyRate,
    Validate,
    DistCheck,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Outage => "outage",
            Kind::SecrecyRate => "secrecy-rate",
            Kind::Validate => "validate",
            Kind::DistCheck => "dist-check",
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: Kind,
    /// Base configuration; `k` and `l` take the first entries of the sweeps.
    pub cfg: SystemConfig,
    pub ks: Vec<usize>,
    pub ls: Vec<usize>,
    pub snr_grid_db: Vec<f64>,
    /// The grid as given, for provenance comments.
    pub snr_grid_text: String,
    pub trials: u64,
    pub mode: RateMode,
    pub out: Option<PathBuf>,
    pub corrupt_beta: bool,
}

impl ExperimentSpec {
    /// Every `(k, l)` configuration of the sweep, `k` outermost.
    pub fn configs(&self) -> Vec<SystemConfig> {
        self.ks
            .iter()
            .flat_map(|&k| {
                self.ls.iter().map(move |&l| SystemConfig {
                    k,
                    l,
                    ..self.cfg.clone()
                })
            })
            .collect()
    }

    /// Provenance lines for output headers.
    pub fn describe(&self) -> String {
        let list = |v: &[usize]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        format!(
            "relaysec {} {}\nn={} k={} l={} m={} sigma2={} gamma={} epsilon={} mode={} seed={} trials={} snr_db={}",
            self.kind.name(),
            env!("CARGO_PKG_VERSION"),
            self.cfg.n,
            list(&self.ks),
            list(&self.ls),
            self.cfg.m,
            self.cfg.sigma2,
            self.cfg.gamma,
            self.cfg.epsilon,
            self.mode,
            self.cfg.seed,
            self.trials,
            self.snr_grid_text,
        )
    }
}

/// Parses `lo:hi:step` into an inclusive, strictly increasing grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Usage(format!("--snr-db '{text}': {why} (expected lo:hi:step)"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("need three fields"));
    }
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| bad("fields must be numbers"))?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
        return Err(bad("fields must be finite"));
    }
    if step <= 0.0 {
        return Err(bad("step must be positive"));
    }
    if hi < lo {
        return Err(bad("hi must not be below lo"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(bad("grid has too many points"));
    }
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

struct Defaults {
    n: usize,
    ks: Vec<usize>,
    ls: Vec<usize>,
    gamma: f64,
    grid: &'static str,
    trials: u64,
}

fn defaults(kind: Kind, preset: Option<Preset>) -> Defaults {
    let trials = match kind {
        Kind::Outage => 1_000_000,
        Kind::SecrecyRate => 100_000,
        Kind::Validate => 10_000,
        Kind::DistCheck => 100_000,
    };
    match preset {
        Some(Preset::Fig2) => Defaults {
            n: 4,
            ks: vec![10],
            ls: vec![2, 3, 4],
            gamma: 1.0,
            grid: "0:45:2.5",
            trials: 1_000_000,
        },
        Some(Preset::Fig3) => Defaults {
            n: 3,
            ks: vec![4, 6, 8, 10, 12],
            ls: vec![3],
            gamma: 1.0,
            grid: "0:40:5",
            trials: 100_000,
        },
        None => Defaults {
            n: 4,
            ks: vec![10],
            ls: vec![3],
            gamma: 1.0,
            grid: match kind {
                Kind::DistCheck => "10:60:10",
                _ => "0:40:5",
            },
            trials,
        },
    }
}

/// Resolves parsed arguments into a validated specification.
pub fn build_spec(kind: Kind, args: &CommonArgs, corrupt_beta: bool) -> Result<ExperimentSpec, CliError> {
    let d = defaults(kind, args.preset);
    let base = SystemConfig::default();
    let ks = args.k.clone().unwrap_or(d.ks);
    let ls = args.l.clone().unwrap_or(d.ls);
    let snr_grid_text = args.snr_db.clone().unwrap_or_else(|| d.grid.to_string());
    let cfg = SystemConfig {
        n: args.n.unwrap_or(d.n),
        k: ks.first().copied().unwrap_or(0),
        l: ls.first().copied().unwrap_or(0),
        m: args.m.unwrap_or(base.m),
        gamma: args.gamma.unwrap_or(d.gamma),
        epsilon: args.epsilon.unwrap_or(base.epsilon),
        seed: args.seed.unwrap_or(base.seed),
        ..base
    };
    let spec = ExperimentSpec {
        kind,
        snr_grid_db: parse_grid(&snr_grid_text)?,
        snr_grid_text,
        cfg,
        ks,
        ls,
        trials: args.trials.unwrap_or(d.trials),
        mode: args.mode.map_or(RateMode::Exact, Into::into),
        out: args.out.clone(),
        corrupt_beta,
    };
    validate_spec(&spec)?;
    Ok(spec)
}

fn validate_spec(spec: &ExperimentSpec) -> Result<(), CliError> {
    let usage = |msg: String| Err(CliError::Usage(msg));
    let cfg = &spec.cfg;
    if spec.trials == 0 {
        return usage("--trials must be at least 1".into());
    }
    if spec.ks.is_empty() || spec.ls.is_empty() {
        return usage("--k and --l need at least one value".into());
    }
    if cfg.n < 2 {
        return usage(format!("--n {} must be at least 2", cfg.n));
    }
    if cfg.m < 1 {
        return usage("--m must be at least 1".into());
    }
    if !cfg.gamma.is_finite() || cfg.gamma < 0.0 {
        return usage(format!("--gamma {} must be a non-negative number", cfg.gamma));
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) {
        return usage(format!("--epsilon {} must lie in (0, 1)", cfg.epsilon));
    }
    for &k in &spec.ks {
        for &l in &spec.ls {
            if l < 2 {
                return usage(format!("--l {l} must be at least 2"));
            }
            if l > cfg.n.min(k) {
                return usage(format!("--l {l} exceeds min(--n {}, --k {k})", cfg.n));
            }
        }
    }
    for c in spec.configs() {
        c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if matches!(spec.kind, Kind::DistCheck) && spec.ks.iter().any(|&k| k <= spec.ls.iter().copied().max().unwrap_or(0))
    {
        return usage("dist-check needs --k larger than every --l".into());
    }
    Ok(())
}
