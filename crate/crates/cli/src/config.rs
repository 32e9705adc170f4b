//! Run configuration: defaults, an optional `key=value` file, then flags.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use discert::optics::DEFAULT_C_SCALE;
use discert::protocol::StrategyKind;

/// Bad flags or configuration values; the binary exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Quantum,
    Classical,
}

impl From<StrategyArg> for StrategyKind {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Quantum => StrategyKind::QuantumBell,
            StrategyArg::Classical => StrategyKind::ClassicalZz,
        }
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the
/// `--config` file and then to the defaults of [`RunConfig`].
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// Plain-text file of `key=value` lines using the flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of Monte Carlo trials (at least 1).
    #[arg(long)]
    pub trials: Option<u64>,
    /// White-noise parameter p in [0, 1]; 1 is the noiseless resource state.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Photon delay in coherence times, Δτ/τ_coh.
    #[arg(long)]
    pub dtau: Option<f64>,
    /// ΔωΔτ = c_scale · Δτ/τ_coh.
    #[arg(long)]
    pub c_scale: Option<f64>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long)]
    pub z_threshold: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Builtin state name (resource, maximally-mixed, bell-phi-plus) or a JSON file.
    #[arg(long)]
    pub state: Option<String>,
    /// Number of sweep grid points.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Upper end of the sweep grid.
    #[arg(long)]
    pub max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: u64,
    pub noise_p: f64,
    pub dtau_ratio: f64,
    pub c_scale: f64,
    pub strategy: StrategyArg,
    pub z_threshold: f64,
    pub out: Option<PathBuf>,
    pub state: String,
    pub steps: usize,
    pub max: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 100_000,
            noise_p: 1.0,
            dtau_ratio: 0.0,
            c_scale: DEFAULT_C_SCALE,
            strategy: StrategyArg::Quantum,
            z_threshold: discert::estimate::DEFAULT_Z_THRESHOLD,
            out: None,
            state: "resource".into(),
            steps: 21,
            max: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, UsageError> {
    value
        .parse()
        .map_err(|_| UsageError(format!("config: cannot parse {key} = {value:?}")))
}

impl RunConfig {
    /// Defaults, overridden by the config file, overridden by flags.
    pub fn resolve(flags: &Flags) -> Result<Self, UsageError> {
        let mut cfg = Self::default();
        if let Some(path) = &flags.config {
            cfg.apply_file(path)?;
        }
        macro_rules! take {
            ($flag:ident => $field:ident) => {
                if let Some(v) = flags.$flag.clone() {
                    cfg.$field = v;
                }
            };
        }
        take!(seed => seed);
        take!(trials => trials);
        take!(noise => noise_p);
        take!(dtau => dtau_ratio);
        take!(c_scale => c_scale);
        take!(strategy => strategy);
        take!(z_threshold => z_threshold);
        take!(state => state);
        take!(steps => steps);
        if flags.out.is_some() {
            cfg.out = flags.out.clone();
        }
        if flags.max.is_some() {
            cfg.max = flags.max;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, path: &Path) -> Result<(), UsageError> {
        let text = fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return usage(format!("config line {}: expected key=value", n + 1));
            };
            let (key, value) = (key.trim().replace('_', "-"), value.trim());
            match key.as_str() {
                "seed" => self.seed = parse(&key, value)?,
                "trials" => self.trials = parse(&key, value)?,
                "noise" => self.noise_p = parse(&key, value)?,
                "dtau" => self.dtau_ratio = parse(&key, value)?,
                "c-scale" => self.c_scale = parse(&key, value)?,
                "strategy" => {
                    self.strategy = StrategyArg::from_str(value, true)
                        .map_err(|_| UsageError(format!("config: unknown strategy {value:?}")))?
                }
                "z-threshold" => self.z_threshold = parse(&key, value)?,
                "out" => self.out = Some(PathBuf::from(value)),
                "state" => self.state = value.to_string(),
                "steps" => self.steps = parse(&key, value)?,
                "max" => self.max = Some(parse(&key, value)?),
                _ => return usage(format!("config line {}: unknown key {key:?}", n + 1)),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        if self.trials == 0 {
            return usage("--trials must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.noise_p) {
            return usage(format!("--noise must be in [0, 1], got {}", self.noise_p));
        }
        if !(self.dtau_ratio.is_finite() && self.dtau_ratio >= 0.0) {
            return usage(format!("--dtau must be >= 0, got {}", self.dtau_ratio));
        }
        if !(self.c_scale.is_finite() && self.c_scale > 0.0) {
            return usage(format!("--c-scale must be > 0, got {}", self.c_scale));
        }
        if !self.z_threshold.is_finite() {
            return usage("--z-threshold must be finite");
        }
        if self.steps == 0 {
            return usage("--steps must be at least 1");
        }
        if let Some(max) = self.max {
            if !(max.is_finite() && max >= 0.0) {
                return usage(format!("--max must be >= 0, got {max}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn flags_override_file() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            file,
            "# sweep settings\nseed = 9\ntrials=500\nc_scale = 3.5\nstrategy = classical"
        )
        .unwrap();
        let flags = Flags {
            config: Some(file.path().to_path_buf()),
            trials: Some(700),
            ..Flags::default()
        };
        let cfg = RunConfig::resolve(&flags).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.trials, 700);
        assert_eq!(cfg.c_scale, 3.5);
        assert_eq!(cfg.strategy, StrategyArg::Classical);
    }

    #[test]
    fn rejects_bad_values() {
        for flags in [
            Flags {
                trials: Some(0),
                ..Flags::default()
            },
            Flags {
                noise: Some(1.5),
                ..Flags::default()
            },
            Flags {
                dtau: Some(-0.1),
                ..Flags::default()
            },
            Flags {
                c_scale: Some(0.0),
                ..Flags::default()
            },
        ] {
            assert!(RunConfig::resolve(&flags).is_err(), "{flags:?}");
        }
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "colour = blue").unwrap();
        let flags = Flags {
            config: Some(file.path().to_path_buf()),
            ..Flags::default()
        };
        assert!(RunConfig::resolve(&flags).is_err());
    }
}
