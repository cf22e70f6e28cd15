//! Run configuration: a flat `key = value` file overlaid by flags.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use cvqkd_core::keyrate::SweepAxis;
use cvqkd_core::StateFamily;

use crate::error::CliError;
use crate::table::Format;

/// Keys accepted in config files; each has a `--key` flag.
pub const KEYS: [&str; 14] = [
    "family",
    "alpha",
    "alpha-im",
    "beta-c",
    "t2",
    "loss-db-km",
    "distance",
    "delta-target",
    "nodes",
    "half-width",
    "pulses",
    "seed",
    "out",
    "format",
];

#[derive(Debug, Parser)]
#[command(name = "cvqkd", version, about = "PASCS continuous-variable QKD toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Wigner function on a square grid.
    Wigner(Overrides),
    /// Key rate over an (alpha, beta_c) grid under the beam-splitter attack.
    KeyrateSweep(Overrides),
    /// Optimized key rate against fibre length, both families.
    Distance(Overrides),
    /// Eve's success under intercept-resend at fixed intrinsic error.
    Intercept(Overrides),
    /// Monte Carlo protocol run.
    Simulate(Overrides),
}

impl Command {
    pub fn split(self) -> (CommandKind, Overrides) {
        match self {
            Command::Wigner(o) => (CommandKind::Wigner, o),
            Command::KeyrateSweep(o) => (CommandKind::KeyrateSweep, o),
            Command::Distance(o) => (CommandKind::Distance, o),
            Command::Intercept(o) => (CommandKind::Intercept, o),
            Command::Simulate(o) => (CommandKind::Simulate, o),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Wigner,
    KeyrateSweep,
    Distance,
    Intercept,
    Simulate,
}

/// Ranges are `start:stop:step` or a single value.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "pascs|coherent")]
    pub family: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Imaginary part of alpha (wigner only).
    #[arg(long = "alpha-im", allow_hyphen_values = true)]
    pub alpha_im: Option<String>,
    #[arg(long = "beta-c")]
    pub beta_c: Option<String>,
    /// Channel transmission T².
    #[arg(long)]
    pub t2: Option<String>,
    #[arg(long = "loss-db-km")]
    pub loss_db_km: Option<String>,
    /// Fibre lengths in km.
    #[arg(long)]
    pub distance: Option<String>,
    #[arg(long = "delta-target")]
    pub delta_target: Option<String>,
    /// Grid points per axis (wigner) or quadrature nodes per panel.
    #[arg(long)]
    pub nodes: Option<String>,
    /// Grid half-width (wigner) or integration margin beyond alpha.
    #[arg(long = "half-width")]
    pub half_width: Option<String>,
    #[arg(long)]
    pub pulses: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, value_name = "csv|json")]
    pub format: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("family", &self.family),
            ("alpha", &self.alpha),
            ("alpha-im", &self.alpha_im),
            ("beta-c", &self.beta_c),
            ("t2", &self.t2),
            ("loss-db-km", &self.loss_db_km),
            ("distance", &self.distance),
            ("delta-target", &self.delta_target),
            ("nodes", &self.nodes),
            ("half-width", &self.half_width),
            ("pulses", &self.pulses),
            ("seed", &self.seed),
            ("out", &self.out),
            ("format", &self.format),
        ]
    }
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(CliError::Config(format!("line {}: unknown key `{k}`", n + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key `{k}`", n + 1)));
        }
    }
    Ok(map)
}

/// Config file values with flags laid over them.
pub fn merge(overrides: &Overrides) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = match &overrides.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    for (k, v) in overrides.pairs() {
        if let Some(v) = v {
            map.insert(k.to_string(), v.clone());
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub family: StateFamily,
    pub alpha: SweepAxis,
    pub alpha_im: f64,
    pub beta_c: SweepAxis,
    pub t2: f64,
    pub loss_db_km: f64,
    pub distance: SweepAxis,
    pub delta_target: f64,
    pub nodes: Option<usize>,
    pub half_width: Option<f64>,
    pub pulses: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn number<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| CliError::field(key, format!("`{v}`: {e}")))
}

fn finite(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = number(key, v)?;
    if !x.is_finite() {
        return Err(CliError::field(key, "must be finite"));
    }
    Ok(x)
}

pub fn parse_axis(key: &str, v: &str) -> Result<SweepAxis, CliError> {
    let parts: Vec<&str> = v.split(':').collect();
    match parts.as_slice() {
        [x] => Ok(SweepAxis::point(finite(key, x)?)),
        [a, b, s] => SweepAxis::new(finite(key, a)?, finite(key, b)?, finite(key, s)?)
            .map_err(|e| CliError::field(key, e)),
        _ => Err(CliError::field(key, format!("`{v}` is neither a number nor start:stop:step"))),
    }
}

fn scalar(key: &str, v: &str) -> Result<f64, CliError> {
    let axis = parse_axis(key, v)?;
    if axis.start != axis.stop {
        return Err(CliError::field(key, "this command takes a single value"));
    }
    Ok(axis.start)
}

impl RunConfig {
    pub fn from_map(command: CommandKind, map: &BTreeMap<String, String>) -> Result<Self, CliError> {
        use CommandKind::*;
        let get = |k: &str| map.get(k).map(String::as_str);
        let family = match get("family") {
            Some(v) => v.parse().map_err(|_| CliError::field("family", format!("`{v}` is not pascs or coherent")))?,
            None => StateFamily::Pascs,
        };
        let scalar_alpha = matches!(command, Wigner | Simulate);
        let alpha = match get("alpha") {
            Some(v) if scalar_alpha => SweepAxis::point(scalar("alpha", v)?),
            Some(v) => parse_axis("alpha", v)?,
            None if scalar_alpha => SweepAxis::point(1.0),
            None => SweepAxis::ALPHA,
        };
        let beta_c = match (get("beta-c"), command) {
            (Some(v), Simulate) => SweepAxis::point(scalar("beta-c", v)?),
            (Some(v), _) => parse_axis("beta-c", v)?,
            (None, Simulate) => SweepAxis::point(0.0),
            (None, Intercept) => SweepAxis::new(0.0, 1.5, 0.1).expect("static range"),
            (None, _) => SweepAxis::BETA_C,
        };
        let t2 = match get("t2") {
            Some(v) => finite("t2", v)?,
            None if command == Simulate => 1.0,
            None => 0.75,
        };
        if !(0.0..=1.0).contains(&t2) {
            return Err(CliError::field("t2", "must lie in [0, 1]"));
        }
        let loss_db_km = get("loss-db-km").map(|v| finite("loss-db-km", v)).transpose()?.unwrap_or(0.2);
        if loss_db_km < 0.0 {
            return Err(CliError::field("loss-db-km", "must be non-negative"));
        }
        let distance = match get("distance") {
            Some(v) => parse_axis("distance", v)?,
            None => SweepAxis::new(0.0, 40.0, 2.0).expect("static range"),
        };
        if distance.start < 0.0 {
            return Err(CliError::field("distance", "must be non-negative"));
        }
        let delta_target = get("delta-target")
            .map(|v| finite("delta-target", v))
            .transpose()?
            .unwrap_or(cvqkd_core::intercept::DEFAULT_DELTA_TARGET);
        if !(delta_target > 0.0 && delta_target < 0.5) {
            return Err(CliError::field("delta-target", "must lie in (0, 1/2)"));
        }
        let nodes = get("nodes").map(|v| number::<usize>("nodes", v)).transpose()?;
        if nodes == Some(0) || (command == Wigner && nodes.is_some_and(|n| n < 2)) {
            return Err(CliError::field("nodes", "too few"));
        }
        let half_width = get("half-width").map(|v| finite("half-width", v)).transpose()?;
        if half_width.is_some_and(|h| h <= 0.0) {
            return Err(CliError::field("half-width", "must be positive"));
        }
        let pulses = get("pulses").map(|v| number::<u64>("pulses", v)).transpose()?.unwrap_or(200_000);
        if pulses == 0 {
            return Err(CliError::field("pulses", "must be at least 1"));
        }
        let format = match get("format") {
            Some(v) => v.parse().map_err(|e| CliError::field("format", e))?,
            None => Format::Csv,
        };
        Ok(Self {
            command,
            family,
            alpha,
            alpha_im: get("alpha-im").map(|v| finite("alpha-im", v)).transpose()?.unwrap_or(0.0),
            beta_c,
            t2,
            loss_db_km,
            distance,
            delta_target,
            nodes,
            half_width,
            pulses,
            seed: get("seed").map(|v| number::<u64>("seed", v)).transpose()?.unwrap_or(1),
            out: get("out").map(PathBuf::from),
            format,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn config_text() {
        let m = parse_config_text("# sweep\nfamily = coherent\n\nalpha=0.1:2.5:0.05\n").unwrap();
        assert_eq!(m["family"], "coherent");
        assert_eq!(m["alpha"], "0.1:2.5:0.05");
        assert!(parse_config_text("alpha 1").is_err());
        assert!(parse_config_text("colour = red").is_err());
        assert!(parse_config_text("alpha = 1\nalpha = 2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "alpha = 0.5\nseed = 3\n").unwrap();
        let o = Overrides {
            config: Some(path),
            alpha: Some("0.9".into()),
            ..Default::default()
        };
        let m = merge(&o).unwrap();
        assert_eq!(m["alpha"], "0.9");
        assert_eq!(m["seed"], "3");
    }

    #[test]
    fn defaults_per_command() {
        let s = RunConfig::from_map(CommandKind::KeyrateSweep, &BTreeMap::new()).unwrap();
        assert_eq!(s.alpha, SweepAxis::ALPHA);
        assert_eq!(s.t2, 0.75);
        let p = RunConfig::from_map(CommandKind::Simulate, &BTreeMap::new()).unwrap();
        assert_eq!(p.t2, 1.0);
        assert_eq!(p.alpha, SweepAxis::point(1.0));
        let i = RunConfig::from_map(CommandKind::Intercept, &BTreeMap::new()).unwrap();
        assert_eq!(i.beta_c.values().len(), 16);
    }

    #[test]
    fn errors_name_the_field() {
        let cases: &[(CommandKind, &str, &str)] = &[
            (CommandKind::Wigner, "family", "squeezed"),
            (CommandKind::Wigner, "alpha", "0:1:0.1"),
            (CommandKind::KeyrateSweep, "alpha", "2:1:0.1"),
            (CommandKind::KeyrateSweep, "beta-c", "0:1:0"),
            (CommandKind::KeyrateSweep, "t2", "1.2"),
            (CommandKind::Intercept, "delta-target", "0.6"),
            (CommandKind::Simulate, "pulses", "0"),
            (CommandKind::Simulate, "seed", "-4"),
            (CommandKind::Simulate, "format", "xml"),
            (CommandKind::Wigner, "nodes", "1"),
            (CommandKind::Wigner, "half-width", "nan"),
        ];
        for &(cmd, k, v) in cases {
            let e = RunConfig::from_map(cmd, &map(&[(k, v)])).unwrap_err();
            assert_eq!(e.exit_code(), crate::error::EXIT_CONFIG);
            assert!(e.to_string().contains(&format!("`{k}`")), "{e}");
        }
    }
}
