//! Run configuration: defaults, then a key-value file, then command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::Serialize;
use zmt_core::z2::{Method, ModelParams};
use zmt_core::zmt::normalize_kappa;

pub const OUT_DIR_ENV: &str = "ZMT_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Toy,
    Evolve,
    Compare,
    GaugeProbe,
    GradCheck,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Toy => "toy",
            Command::Evolve => "evolve",
            Command::Compare => "compare",
            Command::GaugeProbe => "gauge-probe",
            Command::GradCheck => "grad-check",
        })
    }
}

/// A bad flag, config key or value. The message names the offending key.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Every tunable, as given on the command line or in a config file.
#[derive(Args, Clone, Debug, Default)]
pub struct Knobs {
    /// Bond dimension cap (evolve, compare) or base bond dimension (toy, gauge-probe, grad-check).
    #[arg(long = "D", global = true)]
    pub bond_dim: Option<usize>,
    /// Loop index length of the toy fixture.
    #[arg(long = "d", global = true)]
    pub loop_dim: Option<usize>,
    /// Number of lowest metric modes to optimize over; even values are rounded up.
    #[arg(long, global = true)]
    pub kappa: Option<usize>,
    #[arg(long, global = true)]
    pub dbeta: Option<f64>,
    #[arg(long = "beta-max", global = true)]
    pub beta_max: Option<f64>,
    /// Magnetic coupling.
    #[arg(long, global = true)]
    pub g: Option<f64>,
    /// Uniform noise amplitude on the initial tensors.
    #[arg(long, global = true)]
    pub noise: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Truncation method for evolve: zmt or svd.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// CSV output path; the JSON sidecar goes next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write a unit-cell snapshot every N steps (0 disables).
    #[arg(long = "snapshot-every", global = true)]
    pub snapshot_every: Option<usize>,
    /// Key-value config file using the flag names as keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, UsageError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| UsageError(format!("invalid value '{value}' for --{key}: {e}")))
}

impl Knobs {
    fn set(&mut self, key: &str, value: &str) -> Result<(), UsageError> {
        match key {
            "D" => self.bond_dim = Some(parse_value(key, value)?),
            "d" => self.loop_dim = Some(parse_value(key, value)?),
            "kappa" => self.kappa = Some(parse_value(key, value)?),
            "dbeta" => self.dbeta = Some(parse_value(key, value)?),
            "beta-max" => self.beta_max = Some(parse_value(key, value)?),
            "g" => self.g = Some(parse_value(key, value)?),
            "noise" => self.noise = Some(parse_value(key, value)?),
            "seed" => self.seed = Some(parse_value(key, value)?),
            "method" => self.method = Some(value.to_string()),
            "out" => self.out = Some(PathBuf::from(value)),
            "snapshot-every" => self.snapshot_every = Some(parse_value(key, value)?),
            other => return Err(UsageError(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn from_file_text(text: &str) -> Result<Self, UsageError> {
        let mut knobs = Knobs::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                UsageError(format!("config line {}: expected key = value", n + 1))
            })?;
            knobs.set(key.trim().trim_start_matches("--"), value.trim())?;
        }
        Ok(knobs)
    }

    pub fn from_file(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read --config {}: {e}", path.display())))?;
        Self::from_file_text(&text)
    }

    /// Values set here win over `base`.
    pub fn over(self, base: Knobs) -> Knobs {
        Knobs {
            bond_dim: self.bond_dim.or(base.bond_dim),
            loop_dim: self.loop_dim.or(base.loop_dim),
            kappa: self.kappa.or(base.kappa),
            dbeta: self.dbeta.or(base.dbeta),
            beta_max: self.beta_max.or(base.beta_max),
            g: self.g.or(base.g),
            noise: self.noise.or(base.noise),
            seed: self.seed.or(base.seed),
            method: self.method.or(base.method),
            out: self.out.or(base.out),
            snapshot_every: self.snapshot_every.or(base.snapshot_every),
            config: self.config.or(base.config),
        }
    }
}

/// Fully resolved configuration of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(rename = "D")]
    pub bond_dim: usize,
    #[serde(rename = "d")]
    pub loop_dim: usize,
    pub kappa: usize,
    pub dbeta: f64,
    pub beta_max: f64,
    pub g: f64,
    pub noise: f64,
    pub seed: u64,
    pub method: Method,
    pub out_path: PathBuf,
    pub snapshot_every: usize,
}

impl RunConfig {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            g: self.g,
            dbeta: self.dbeta,
            beta_max: self.beta_max,
        }
    }

    pub fn sidecar_path(&self) -> PathBuf {
        self.out_path.with_extension("json")
    }

    /// `<out stem><suffix>` in the output directory.
    pub fn sibling(&self, suffix: &str) -> PathBuf {
        let stem = self
            .out_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.command.to_string());
        self.out_path.with_file_name(format!("{stem}{suffix}"))
    }
}

/// Merges flags over the config file over defaults and validates the result.
/// Returns the configuration and any warnings to print.
pub fn resolve(
    command: Command,
    flags: Knobs,
    out_dir: Option<PathBuf>,
) -> Result<(RunConfig, Vec<String>), UsageError> {
    let file = match &flags.config {
        Some(path) => Knobs::from_file(path)?,
        None => Knobs::default(),
    };
    let k = flags.over(file);
    let mut warnings = Vec::new();

    let bond_dim = k.bond_dim.unwrap_or(4);
    if bond_dim == 0 {
        return Err(UsageError("--D must be at least 1".into()));
    }
    let loop_dim = k.loop_dim.unwrap_or(2);
    if loop_dim == 0 {
        return Err(UsageError("--d must be at least 1".into()));
    }
    let requested = k.kappa.unwrap_or(zmt_core::zmt::DEFAULT_KAPPA);
    if requested == 0 {
        return Err(UsageError("--kappa must be at least 1".into()));
    }
    let kappa = normalize_kappa(requested);
    if kappa != requested {
        warnings.push(format!(
            "warning: --kappa {requested} is even; using {kappa}"
        ));
    }
    let dbeta = k.dbeta.unwrap_or(0.01);
    if !(dbeta > 0.0 && dbeta.is_finite()) {
        return Err(UsageError(format!("--dbeta must be positive, got {dbeta}")));
    }
    let beta_max = k.beta_max.unwrap_or(0.5);
    if !(beta_max >= 0.0 && beta_max.is_finite()) {
        return Err(UsageError(format!(
            "--beta-max must be non-negative, got {beta_max}"
        )));
    }
    let g = k.g.unwrap_or(3.04438);
    if !g.is_finite() {
        return Err(UsageError(format!("--g must be finite, got {g}")));
    }
    let params = ModelParams { g, dbeta, beta_max };
    if let Err(e) = params.steps() {
        return Err(UsageError(format!("--beta-max: {e}")));
    }
    let noise = k.noise.unwrap_or(0.0);
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(UsageError(format!(
            "--noise must be non-negative, got {noise}"
        )));
    }
    let method = match k.method.as_deref() {
        None => Method::Zmt,
        Some(m) => m
            .parse()
            .map_err(|_| UsageError(format!("--method must be zmt or svd, got '{m}'")))?,
    };
    let out_path = k.out.unwrap_or_else(|| {
        out_dir
            .unwrap_or_else(|| PathBuf::from("."))
            .join(format!("{command}.csv"))
    });
    Ok((
        RunConfig {
            command,
            bond_dim,
            loop_dim,
            kappa,
            dbeta,
            beta_max,
            g,
            noise,
            seed: k.seed.unwrap_or(1),
            method,
            out_path,
            snapshot_every: k.snapshot_every.unwrap_or(0),
        },
        warnings,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_benchmark_settings() {
        let (c, w) = resolve(Command::Evolve, Knobs::default(), None).unwrap();
        assert!(w.is_empty());
        assert_eq!(
            (c.bond_dim, c.kappa, c.dbeta, c.beta_max, c.g),
            (4, 5, 0.01, 0.5, 3.04438)
        );
        assert_eq!(c.method, Method::Zmt);
        assert_eq!(c.out_path, PathBuf::from("./evolve.csv"));
        assert_eq!(c.sidecar_path(), PathBuf::from("./evolve.json"));
        assert_eq!(
            c.sibling(".compare.csv"),
            PathBuf::from("./evolve.compare.csv")
        );
    }

    #[test]
    fn even_kappa_is_rounded_up_with_warning() {
        let flags = Knobs {
            kappa: Some(4),
            ..Knobs::default()
        };
        let (c, w) = resolve(Command::Evolve, flags, None).unwrap();
        assert_eq!(c.kappa, 5);
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("--kappa 4"));
    }

    #[test]
    fn flags_override_file() {
        let file =
            Knobs::from_file_text("# benchmark\nD = 3\ng=1.5\nbeta-max = 0.2  # short\n").unwrap();
        assert_eq!(file.bond_dim, Some(3));
        let flags = Knobs {
            bond_dim: Some(2),
            ..Knobs::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.bond_dim, Some(2));
        assert_eq!(merged.g, Some(1.5));
        assert_eq!(merged.beta_max, Some(0.2));
    }

    #[test]
    fn bad_input_names_the_key() {
        let err = Knobs::from_file_text("chi = 40").unwrap_err();
        assert!(err.0.contains("chi"));
        let err = Knobs::from_file_text("dbeta = fast").unwrap_err();
        assert!(err.0.contains("--dbeta"));
        let err = Knobs::from_file_text("D 4").unwrap_err();
        assert!(err.0.contains("line 1"));
        let err = resolve(
            Command::Evolve,
            Knobs {
                dbeta: Some(0.0),
                ..Knobs::default()
            },
            None,
        )
        .unwrap_err();
        assert!(err.0.contains("--dbeta"));
        let err = resolve(
            Command::Evolve,
            Knobs {
                beta_max: Some(0.015),
                ..Knobs::default()
            },
            None,
        )
        .unwrap_err();
        assert!(err.0.contains("--beta-max"));
        let err = resolve(
            Command::Evolve,
            Knobs {
                method: Some("tebd".into()),
                ..Knobs::default()
            },
            None,
        )
        .unwrap_err();
        assert!(err.0.contains("--method"));
    }

    #[test]
    fn out_dir_sets_default_location() {
        let (c, _) = resolve(
            Command::Compare,
            Knobs::default(),
            Some(PathBuf::from("/tmp/x")),
        )
        .unwrap();
        assert_eq!(c.out_path, PathBuf::from("/tmp/x/compare.csv"));
        let flags = Knobs {
            out: Some(PathBuf::from("a/b.csv")),
            ..Knobs::default()
        };
        let (c, _) = resolve(Command::Compare, flags, Some(PathBuf::from("/tmp/x"))).unwrap();
        assert_eq!(c.out_path, PathBuf::from("a/b.csv"));
    }
}
