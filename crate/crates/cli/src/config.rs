use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use covert_core::ScenarioParams;
use serde::Deserialize;

use crate::grid::{parse_count, parse_grid, parse_m_grid};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("config file {path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Parser, Debug)]
#[command(name = "covert", version, about = "Performance limits of covert quantum target detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandKind,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    /// Smallest and largest covert per-mode probe energy against M.
    EnergyLimits,
    /// Universal covert error-probability lower bound at one point.
    CovertBound,
    /// Bound against covert TMSV and GCS error probabilities along M.
    CovertCurves,
    /// TMSV and GCS exponents at N_S = N_B along N_B.
    PerfectCovert,
    /// Numerically minimised fidelity over the analytic bound.
    Heatmap,
    /// Gaussian Q_s against the truncated Fock oracle.
    OracleCheck,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::EnergyLimits => "energy-limits",
            CommandKind::CovertBound => "covert-bound",
            CommandKind::CovertCurves => "covert-curves",
            CommandKind::PerfectCovert => "perfect-covert",
            CommandKind::Heatmap => "heatmap",
            CommandKind::OracleCheck => "oracle-check",
        }
    }
}

#[derive(ValueEnum, Deserialize, Debug, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// Target reflectivity.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Background brightness per mode.
    #[arg(long, global = true)]
    pub nb: Option<f64>,
    /// Covertness parameter.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Number of modes.
    #[arg(long, global = true, value_parser = parse_count)]
    pub m: Option<u64>,
    /// Mode counts, `lo:hi:log|lin:count` or a comma list.
    #[arg(long, global = true, value_name = "GRID")]
    pub m_grid: Option<String>,
    /// Background brightness grid.
    #[arg(long, global = true, value_name = "GRID")]
    pub nb_grid: Option<String>,
    /// Covertness grid.
    #[arg(long, global = true, value_name = "GRID")]
    pub eps_grid: Option<String>,
    /// Willie's prior on the no-probe hypothesis.
    #[arg(long, global = true)]
    pub prior0: Option<f64>,
    /// Per-mode signal energy.
    #[arg(long, global = true)]
    pub ns: Option<f64>,
    /// Worker threads (default: COVERT_THREADS, then all cores).
    #[arg(long, global = true, env = "COVERT_THREADS")]
    pub threads: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format, csv by default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Also write a whitespace-separated .dat file next to --out.
    #[arg(long, global = true, num_args = 0, default_missing_value = "true")]
    pub gnuplot: Option<bool>,
    /// TOML file with the same keys as the flags.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Flags {
    /// Field-wise merge, self taking precedence.
    pub fn or(self, file: Flags) -> Flags {
        Flags {
            eta: self.eta.or(file.eta),
            nb: self.nb.or(file.nb),
            eps: self.eps.or(file.eps),
            m: self.m.or(file.m),
            m_grid: self.m_grid.or(file.m_grid),
            nb_grid: self.nb_grid.or(file.nb_grid),
            eps_grid: self.eps_grid.or(file.eps_grid),
            prior0: self.prior0.or(file.prior0),
            ns: self.ns.or(file.ns),
            threads: self.threads.or(file.threads),
            out: self.out.or(file.out),
            format: self.format.or(file.format),
            gnuplot: self.gnuplot.or(file.gnuplot),
            config: self.config,
        }
    }
}

pub fn load_file(path: &Path) -> Result<Flags, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    toml::from_str(&text).map_err(|e| ConfigError::File { path: path.to_owned(), message: e.to_string() })
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub scenario: ScenarioParams,
    pub n_s: f64,
    pub m_grid: Vec<u64>,
    pub nb_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    pub gnuplot: bool,
}

impl RunConfig {
    pub fn resolve(command: CommandKind, f: Flags) -> Result<Self, ConfigError> {
        use CommandKind::*;
        let eta = f.eta.unwrap_or(0.01);
        let nb = f.nb.unwrap_or(0.2);
        let eps = f.eps.unwrap_or(1e-3);
        let m = f.m.unwrap_or(1000);
        let mut scenario = ScenarioParams::new(eta, nb, m, eps).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(p0) = f.prior0 {
            scenario = scenario.with_prior0(p0).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        let m_default = match (command, f.m) {
            (EnergyLimits | CovertCurves, Some(m)) => m.to_string(),
            (EnergyLimits | CovertCurves, None) => "1e2:1e6:log:9".into(),
            (Heatmap, _) => "10,100,1000".into(),
            _ => m.to_string(),
        };
        let nb_default = match command {
            PerfectCovert => "0.01:20:log:60".to_string(),
            Heatmap => "0.002,0.2,20".to_string(),
            _ => nb.to_string(),
        };
        let m_grid = parse_m_grid(f.m_grid.as_deref().unwrap_or(&m_default))?;
        let nb_grid = parse_grid("nb-grid", f.nb_grid.as_deref().unwrap_or(&nb_default))?;
        let eps_grid = parse_grid("eps-grid", f.eps_grid.as_deref().unwrap_or("1e-4:1e-1:log:7"))?;
        if matches!(f.threads, Some(0)) {
            return Err(ConfigError::Invalid("--threads must be at least 1".into()));
        }
        let gnuplot = f.gnuplot.unwrap_or(false);
        if gnuplot && f.out.is_none() {
            return Err(ConfigError::Invalid("--gnuplot needs --out".into()));
        }
        let n_s = f.ns.unwrap_or(nb);
        if !(n_s >= 0.0 && n_s.is_finite()) {
            return Err(ConfigError::Invalid(format!("--ns {n_s}: must be finite and non-negative")));
        }
        Ok(RunConfig {
            command,
            scenario,
            n_s,
            m_grid,
            nb_grid,
            eps_grid,
            output_path: f.out,
            format: f.format.unwrap_or_default(),
            threads: f.threads,
            gnuplot,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: Flags = toml::from_str("eta = 0.05\nnb = 0.3\nm_grid = \"10,20\"\nformat = \"json\"\n").unwrap();
        let cli = Flags { nb: Some(0.4), ..Flags::default() };
        let merged = cli.or(file);
        assert_eq!((merged.eta, merged.nb, merged.format), (Some(0.05), Some(0.4), Some(Format::Json)));
        let rc = RunConfig::resolve(CommandKind::EnergyLimits, merged).unwrap();
        assert_eq!(rc.m_grid, vec![10, 20]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Flags>("etaa = 0.1").is_err());
    }

    #[test]
    fn invalid_scenario() {
        let f = Flags { eta: Some(1.5), ..Flags::default() };
        assert!(RunConfig::resolve(CommandKind::CovertBound, f).is_err());
        let f = Flags { gnuplot: Some(true), ..Flags::default() };
        assert!(RunConfig::resolve(CommandKind::CovertBound, f).is_err());
    }
}
