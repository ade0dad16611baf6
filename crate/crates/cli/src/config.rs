//! Command-line flags, the optional TOML file and their resolution into a
//! validated run configuration (flags win over the file, the file over
//! built-in defaults).

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use levyscale::io::header_value;
use levyscale::moments::default_q_grid;
use levyscale::StableParams;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Scaling,
    Ratio,
    Limits,
    Extremes,
    Tails,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Stability index in (0, 2].
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Scale parameter (> 0).
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Skewness in [-1, 1]; drift when alpha = 1.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Largest window size T; series lengths are multiples of lcm(1..=T).
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    /// Multiplier k in N = k lcm(1..=T).
    #[arg(long, global = true)]
    pub multiplier: Option<u64>,
    /// Comma-separated moment orders.
    #[arg(long, global = true, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    /// Comma-separated window sizes.
    #[arg(long, global = true, value_delimiter = ',')]
    pub taus: Option<Vec<usize>>,
    /// Comma-separated multipliers of the N ladder.
    #[arg(long, global = true, value_delimiter = ',')]
    pub ladder: Option<Vec<u64>>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub replicas: Option<usize>,
    /// Tolerance of the command's assertion.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Share of top order statistics for tail estimates.
    #[arg(long, global = true)]
    pub fraction: Option<f64>,
    /// Series file to analyse instead of simulating.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Where `scaling` writes the full moment grid.
    #[arg(long, global = true)]
    pub grid: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Treat input values as path levels and difference them.
    #[arg(long, global = true)]
    pub levels: bool,
    /// TOML file with any of the settings above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub horizon: Option<usize>,
    pub multiplier: Option<u64>,
    pub q: Option<Vec<f64>>,
    pub taus: Option<Vec<usize>>,
    pub ladder: Option<Vec<u64>>,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub tolerance: Option<f64>,
    pub fraction: Option<f64>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub grid: Option<PathBuf>,
    pub threads: Option<usize>,
    pub format: Option<Format>,
    pub levels: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub params: StableParams,
    pub horizon: usize,
    pub multiplier: u64,
    pub qs: Vec<f64>,
    pub taus: Vec<usize>,
    pub ladder: Vec<u64>,
    pub seed: u64,
    pub replicas: usize,
    pub tolerance: Option<f64>,
    pub fraction: f64,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub grid: Option<PathBuf>,
    pub threads: Option<usize>,
    pub format: Format,
    pub levels: bool,
}

struct Defaults {
    multiplier: u64,
    qs: Option<Vec<f64>>,
    taus: Vec<usize>,
    replicas: usize,
    tolerance: Option<f64>,
}

fn defaults(command: Command) -> Defaults {
    let base = Defaults {
        multiplier: 1,
        qs: None,
        taus: vec![2],
        replicas: 20,
        tolerance: None,
    };
    match command {
        Command::Simulate => base,
        Command::Scaling => Defaults {
            multiplier: 100,
            ..base
        },
        Command::Ratio => Defaults {
            qs: Some(vec![3.0]),
            tolerance: Some(0.15),
            ..base
        },
        Command::Limits => Defaults {
            multiplier: 10,
            qs: Some(vec![3.0]),
            taus: vec![1, 3],
            replicas: 2000,
            ..base
        },
        Command::Extremes => Defaults {
            qs: Some(vec![0.5, 1.0, 1.5, 3.0]),
            taus: vec![2, 3, 5],
            replicas: 10_000,
            ..base
        },
        Command::Tails => Defaults {
            multiplier: 400,
            ..base
        },
    }
}

fn parse_header<T: std::str::FromStr>(header: &[(String, String)], key: &str) -> Option<T> {
    header_value(header, key).and_then(|v| v.parse().ok())
}

impl RunConfig {
    /// Layers flags over the file over the input header over defaults and
    /// validates the result.
    pub fn resolve(
        command: Command,
        flags: &Flags,
        file: &FileConfig,
        header: &[(String, String)],
    ) -> Result<Self, CliError> {
        let d = defaults(command);
        let alpha = flags
            .alpha
            .or(file.alpha)
            .or_else(|| parse_header(header, "alpha"))
            .unwrap_or(1.5);
        let sigma = flags
            .sigma
            .or(file.sigma)
            .or_else(|| parse_header(header, "sigma"))
            .unwrap_or(1.0);
        let gamma = flags
            .gamma
            .or(file.gamma)
            .or_else(|| parse_header(header, "gamma"))
            .unwrap_or(0.0);
        let params = StableParams::new(alpha, sigma, gamma)?;
        let qs = flags
            .q
            .clone()
            .or_else(|| file.q.clone())
            .or(d.qs)
            .unwrap_or_else(|| default_q_grid(alpha));
        let cfg = RunConfig {
            command,
            params,
            horizon: flags.horizon.or(file.horizon).unwrap_or(10),
            multiplier: flags.multiplier.or(file.multiplier).unwrap_or(d.multiplier),
            qs,
            taus: flags.taus.clone().or_else(|| file.taus.clone()).unwrap_or(d.taus),
            ladder: flags
                .ladder
                .clone()
                .or_else(|| file.ladder.clone())
                .unwrap_or_else(|| vec![4, 40, 400]),
            seed: flags
                .seed
                .or(file.seed)
                .or_else(|| parse_header(header, "seed"))
                .unwrap_or(0),
            replicas: flags.replicas.or(file.replicas).unwrap_or(d.replicas),
            tolerance: flags.tolerance.or(file.tolerance).or(d.tolerance),
            fraction: flags
                .fraction
                .or(file.fraction)
                .unwrap_or(levyscale::extremes::DEFAULT_HILL_FRACTION),
            input: flags.input.clone().or_else(|| file.input.clone()),
            output: flags.output.clone().or_else(|| file.output.clone()),
            grid: flags.grid.clone().or_else(|| file.grid.clone()),
            threads: flags.threads.or(file.threads),
            format: flags.format.or(file.format).unwrap_or(Format::Csv),
            levels: flags.levels || file.levels.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Invalid(m));
        if self.horizon == 0 {
            return bad("horizon must be >= 1".into());
        }
        if self.multiplier == 0 {
            return bad("multiplier must be >= 1".into());
        }
        if self.replicas == 0 {
            return bad("replicas must be >= 1".into());
        }
        if self.qs.is_empty() || self.qs.iter().any(|q| !(q.is_finite() && *q >= 0.0)) {
            return bad(format!("q values must be finite and >= 0, got {:?}", self.qs));
        }
        if self.taus.is_empty() || self.taus.contains(&0) {
            return bad(format!("taus must be >= 1, got {:?}", self.taus));
        }
        if self.ladder.is_empty() || self.ladder.windows(2).any(|w| w[0] >= w[1]) || self.ladder[0] == 0 {
            return bad(format!("ladder must be positive and increasing, got {:?}", self.ladder));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0) {
                return bad(format!("tolerance must be > 0, got {t}"));
            }
        }
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return bad(format!("fraction must lie in (0, 1), got {}", self.fraction));
        }
        if self.threads == Some(0) {
            return bad("threads must be >= 1".into());
        }
        Ok(())
    }

    /// Settings echoed into output headers.
    pub fn echo(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let ints = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = vec![
            ("alpha".into(), self.params.alpha().to_string()),
            ("sigma".into(), self.params.sigma().to_string()),
            ("gamma".into(), self.params.gamma().to_string()),
            ("seed".into(), self.seed.to_string()),
            ("horizon".into(), self.horizon.to_string()),
        ];
        match self.command {
            Command::Simulate | Command::Tails => {
                out.push(("multiplier".into(), self.multiplier.to_string()));
            }
            Command::Scaling => {
                out.push(("multiplier".into(), self.multiplier.to_string()));
                out.push(("q".into(), list(&self.qs)));
            }
            Command::Ratio => {
                out.push(("q".into(), list(&self.qs)));
                out.push(("taus".into(), ints(&self.taus)));
                let ladder: Vec<usize> = self.ladder.iter().map(|&k| k as usize).collect();
                out.push(("ladder".into(), ints(&ladder)));
                out.push(("replicas".into(), self.replicas.to_string()));
            }
            Command::Limits => {
                out.push(("multiplier".into(), self.multiplier.to_string()));
                out.push(("q".into(), list(&self.qs)));
                out.push(("taus".into(), ints(&self.taus)));
                out.push(("replicas".into(), self.replicas.to_string()));
            }
            Command::Extremes => {
                out.push(("q".into(), list(&self.qs)));
                out.push(("taus".into(), ints(&self.taus)));
                out.push(("replicas".into(), self.replicas.to_string()));
            }
        }
        if let Some(t) = self.tolerance {
            out.push(("tolerance".into(), t.to_string()));
        }
        if let Some(p) = &self.input {
            out.push(("input".into(), p.display().to_string()));
            out.push(("levels".into(), self.levels.to_string()));
        }
        out
    }
}
