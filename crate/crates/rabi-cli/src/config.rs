//! Argument handling. Every knob resolves through the same ladder: a command
//! line flag wins, then (for the seed) the `RABI_SEED` environment variable,
//! then a `key=value` defaults file, then the built-in default. The resolved
//! values are echoed verbatim into every output so a result file always
//! records the run that produced it.

use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::output::fmt_float;
use crate::CliError;

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV_VAR: &str = "RABI_SEED";

/// Keys a defaults file may set; anything else is rejected to catch typos.
const KNOWN_KEYS: &[&str] = &[
    "delta",
    "omega",
    "g",
    "g_min",
    "g_max",
    "g_step",
    "nu_min",
    "count",
    "k_levels",
    "n_max",
    "max_level",
    "tol",
    "deg_tol",
    "gap_floor",
    "t",
    "dt_ratio",
    "n_samples",
    "seed",
    "workers",
    "min_hits",
    "add_zero_point_energy",
    "format",
];

#[derive(Debug, Parser)]
#[command(
    name = "rabi",
    version,
    about = "Spectra, level crossings and path-sampling estimates for a two-level atom coupled to a cavity mode"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rotating-wave ladder energies over a coupling grid, ground envelope marked
    JcSpectrum(JcSpectrumArgs),
    /// Couplings where adjacent rotating-wave ladder levels meet, by two routes
    JcCrossings(JcCrossingsArgs),
    /// Lowest levels of the full model over a coupling grid
    RabiSweep(RabiSweepArgs),
    /// Scan the gap between the two lowest levels for a collapse below a floor
    CheckC1(CheckC1Args),
    /// Locate exact degeneracies between adjacent level pairs along a sweep
    CountCrossings(CountCrossingsArgs),
    /// Ground energy estimated from sampled paths, with the diagonalized reference
    FkEnergy(FkEnergyArgs),
    /// Sign probe of the sampled semigroup kernel on a coarse state partition
    FkPositivity(FkPositivityArgs),
    /// Run the oracle and sampler gating suite
    Validate(ValidateArgs),
}

/// Flags shared by every command: defaults file and output plumbing.
#[derive(Debug, Args, Default)]
pub struct IoArgs {
    /// Plain key=value defaults file; command-line flags win on conflict
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write here instead of stdout
    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    /// Atom gap (half the two-level splitting)
    #[arg(long)]
    pub delta: Option<f64>,
    /// Cavity mode frequency
    #[arg(long)]
    pub omega: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct GridArgs {
    /// Left edge of the coupling grid
    #[arg(long)]
    pub g_min: Option<f64>,
    /// Right edge of the coupling grid
    #[arg(long)]
    pub g_max: Option<f64>,
    /// Coupling grid spacing
    #[arg(long)]
    pub g_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct JcSpectrumArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Most negative ladder index emitted (indices run from 0 down to this)
    #[arg(long, allow_negative_numbers = true)]
    pub nu_min: Option<i32>,
}

#[derive(Debug, Args)]
pub struct JcCrossingsArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// How many successive crossings to report, starting from the first
    #[arg(long)]
    pub count: Option<u32>,
}

#[derive(Debug, Args)]
pub struct RabiSweepArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Number of levels reported per grid point
    #[arg(long)]
    pub k_levels: Option<usize>,
    /// Fixed boson-number cutoff; omit to grow it until the levels settle
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Level convergence tolerance, in units of omega
    #[arg(long)]
    pub tol: Option<f64>,
    /// Shift every reported level by +omega/2
    #[arg(long)]
    pub add_zero_point_energy: bool,
}

#[derive(Debug, Args)]
pub struct CheckC1Args {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Smallest acceptable gap, in units of omega
    #[arg(long)]
    pub gap_floor: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CountCrossingsArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Highest level index tracked; pairs (0,1), (2,3), ... up to it
    #[arg(long)]
    pub max_level: Option<usize>,
    /// Number of levels carried in the sweep (needs headroom above max_level)
    #[arg(long)]
    pub k_levels: Option<usize>,
    /// Degeneracy tolerance for a located crossing, in units of omega
    #[arg(long)]
    pub deg_tol: Option<f64>,
    /// Level convergence tolerance, in units of omega
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FkEnergyArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Coupling strength
    #[arg(long)]
    pub g: Option<f64>,
    /// Path horizon; defaults to 6/omega
    #[arg(long)]
    pub t: Option<f64>,
    /// Finite-difference window, in units of 1/omega
    #[arg(long)]
    pub dt_ratio: Option<f64>,
    /// Number of sampled paths
    #[arg(long)]
    pub n_samples: Option<u64>,
    /// Master seed; RABI_SEED and the defaults file are consulted when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker stream count; part of the reproducibility contract
    #[arg(long)]
    pub workers: Option<u32>,
    /// Convergence tolerance for the reference energy, in units of omega
    #[arg(long)]
    pub tol: Option<f64>,
    /// Shift the estimate and its reference by +omega/2
    #[arg(long)]
    pub add_zero_point_energy: bool,
}

#[derive(Debug, Args)]
pub struct FkPositivityArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Coupling strength
    #[arg(long)]
    pub g: Option<f64>,
    /// Path horizon; defaults to 2/omega
    #[arg(long)]
    pub t: Option<f64>,
    /// Number of sampled paths
    #[arg(long)]
    pub n_samples: Option<u64>,
    /// Master seed; RABI_SEED and the defaults file are consulted when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker stream count; part of the reproducibility contract
    #[arg(long)]
    pub workers: Option<u32>,
    /// Report cells that were landed on fewer times than this
    #[arg(long)]
    pub min_hits: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Master seed; RABI_SEED and the defaults file are consulted when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Draw count for the statistical checks
    #[arg(long)]
    pub n_samples: Option<u64>,
    /// Worker stream count for the sampling checks
    #[arg(long)]
    pub workers: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Layered lookups over the optional defaults file.
pub struct Resolver {
    file: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => load_key_value_file(p)?,
            None => BTreeMap::new(),
        };
        Ok(Resolver { file })
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::Config(format!("config key {key}: cannot parse {raw:?}"))
            }),
        }
    }

    pub fn f64(&self, key: &str, flag: Option<f64>, default: f64) -> Result<f64, CliError> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.parsed(key)?.unwrap_or(default)),
        }
    }

    pub fn u64(&self, key: &str, flag: Option<u64>, default: u64) -> Result<u64, CliError> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.parsed(key)?.unwrap_or(default)),
        }
    }

    pub fn u32(&self, key: &str, flag: Option<u32>, default: u32) -> Result<u32, CliError> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.parsed(key)?.unwrap_or(default)),
        }
    }

    pub fn usize(&self, key: &str, flag: Option<usize>, default: usize) -> Result<usize, CliError> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.parsed(key)?.unwrap_or(default)),
        }
    }

    pub fn i32(&self, key: &str, flag: Option<i32>, default: i32) -> Result<i32, CliError> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.parsed(key)?.unwrap_or(default)),
        }
    }

    /// Optional knob with no default (absent everywhere stays absent).
    pub fn opt_usize(&self, key: &str, flag: Option<usize>) -> Result<Option<usize>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.parsed(key),
        }
    }

    pub fn flag(&self, key: &str, flag: bool) -> Result<bool, CliError> {
        if flag {
            return Ok(true);
        }
        match self.file.get(key).map(String::as_str) {
            None => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(other) => Err(CliError::Config(format!(
                "config key {key}: expected a boolean, got {other:?}"
            ))),
        }
    }

    pub fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        let env_val = env::var(SEED_ENV_VAR).ok();
        resolve_seed(flag, env_val.as_deref(), self.file.get("seed").map(String::as_str))
    }

    pub fn format(&self, flag: Option<OutputFormat>) -> Result<OutputFormat, CliError> {
        if let Some(f) = flag {
            return Ok(f);
        }
        match self.file.get("format").map(String::as_str) {
            None => Ok(OutputFormat::Csv),
            Some("csv") => Ok(OutputFormat::Csv),
            Some("json") => Ok(OutputFormat::Json),
            Some(other) => Err(CliError::Config(format!(
                "config key format: expected csv or json, got {other:?}"
            ))),
        }
    }
}

/// The seed ladder, separated from process state so it can be tested.
fn resolve_seed(
    flag: Option<u64>,
    env_val: Option<&str>,
    file_val: Option<&str>,
) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(raw) = env_val {
        return raw.parse().map_err(|_| {
            CliError::Config(format!("{SEED_ENV_VAR}: cannot parse {raw:?} as an integer seed"))
        });
    }
    if let Some(raw) = file_val {
        return raw.parse().map_err(|_| {
            CliError::Config(format!("config key seed: cannot parse {raw:?}"))
        });
    }
    Ok(DEFAULT_SEED)
}

fn load_key_value_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "config file {} line {}: expected key=value",
                path.display(),
                idx + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Config(format!(
                "config file {} line {}: unknown key {key:?}",
                path.display(),
                idx + 1
            )));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(CliError::Config(format!(
                "config file {} line {}: duplicate key {key:?}",
                path.display(),
                idx + 1
            )));
        }
    }
    Ok(map)
}

/// The resolved run parameters, echoed into every output. Absent fields do
/// not apply to the command that produced the file (an absent `n_max` on a
/// sweep means the cutoff was grown automatically).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub g_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub g_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub g_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nu_min: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub count: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k_levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub deg_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gap_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dt_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub workers: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub min_hits: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub add_zero_point_energy: Option<bool>,
}

impl ConfigEcho {
    pub fn new(command: &str) -> Self {
        ConfigEcho {
            tool: "rabi".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            delta: None,
            omega: None,
            g: None,
            g_min: None,
            g_max: None,
            g_step: None,
            nu_min: None,
            count: None,
            k_levels: None,
            n_max: None,
            max_level: None,
            tol: None,
            deg_tol: None,
            gap_floor: None,
            t: None,
            dt_ratio: None,
            n_samples: None,
            seed: None,
            workers: None,
            min_hits: None,
            add_zero_point_energy: None,
        }
    }

    /// CSV comment block, one `key: value` pair per line, in a fixed order.
    pub fn comment_lines(&self) -> Vec<(&'static str, String)> {
        let mut lines = vec![
            ("tool", self.tool.clone()),
            ("version", self.version.clone()),
            ("command", self.command.clone()),
        ];
        let mut float = |key: &'static str, v: Option<f64>| {
            if let Some(v) = v {
                lines.push((key, fmt_float(v)));
            }
        };
        float("delta", self.delta);
        float("omega", self.omega);
        float("g", self.g);
        float("g_min", self.g_min);
        float("g_max", self.g_max);
        float("g_step", self.g_step);
        if let Some(v) = self.nu_min {
            lines.push(("nu_min", v.to_string()));
        }
        if let Some(v) = self.count {
            lines.push(("count", v.to_string()));
        }
        if let Some(v) = self.k_levels {
            lines.push(("k_levels", v.to_string()));
        }
        if let Some(v) = self.n_max {
            lines.push(("n_max", v.to_string()));
        }
        if let Some(v) = self.max_level {
            lines.push(("max_level", v.to_string()));
        }
        let mut float = |key: &'static str, v: Option<f64>| {
            if let Some(v) = v {
                lines.push((key, fmt_float(v)));
            }
        };
        float("tol", self.tol);
        float("deg_tol", self.deg_tol);
        float("gap_floor", self.gap_floor);
        float("t", self.t);
        float("dt_ratio", self.dt_ratio);
        if let Some(v) = self.n_samples {
            lines.push(("n_samples", v.to_string()));
        }
        if let Some(v) = self.seed {
            lines.push(("seed", v.to_string()));
        }
        if let Some(v) = self.workers {
            lines.push(("workers", v.to_string()));
        }
        if let Some(v) = self.min_hits {
            lines.push(("min_hits", v.to_string()));
        }
        if let Some(v) = self.add_zero_point_energy {
            lines.push(("add_zero_point_energy", v.to_string()));
        }
        lines
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn temp_config(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn file_parsing_accepts_comments_and_blank_lines() {
        let f = temp_config("# header\n\n delta = 0.7 \nomega=2\nseed=9\n");
        let r = Resolver::new(Some(f.path())).unwrap();
        assert_eq!(r.f64("delta", None, 0.5).unwrap(), 0.7);
        assert_eq!(r.f64("omega", None, 1.0).unwrap(), 2.0);
        // flag wins over the file
        assert_eq!(r.f64("delta", Some(0.1), 0.5).unwrap(), 0.1);
        // untouched key falls back to the default
        assert_eq!(r.f64("g_max", None, 3.0).unwrap(), 3.0);
    }

    #[test]
    fn file_parsing_rejects_bad_lines() {
        for bad in ["no_equals_here\n", "mystery=1\n", "delta=0.5\ndelta=0.6\n"] {
            let f = temp_config(bad);
            assert!(Resolver::new(Some(f.path())).is_err(), "accepted {bad:?}");
        }
        let f = temp_config("delta=not-a-number\n");
        let r = Resolver::new(Some(f.path())).unwrap();
        assert!(r.f64("delta", None, 0.5).is_err());
    }

    #[test]
    fn seed_ladder_order() {
        // flag > env > file > default
        assert_eq!(resolve_seed(Some(3), Some("5"), Some("7")).unwrap(), 3);
        assert_eq!(resolve_seed(None, Some("5"), Some("7")).unwrap(), 5);
        assert_eq!(resolve_seed(None, None, Some("7")).unwrap(), 7);
        assert_eq!(resolve_seed(None, None, None).unwrap(), DEFAULT_SEED);
        assert!(resolve_seed(None, Some("junk"), None).is_err());
        assert!(resolve_seed(None, None, Some("junk")).is_err());
    }

    #[test]
    fn bool_and_format_keys() {
        let f = temp_config("add_zero_point_energy=true\nformat=json\n");
        let r = Resolver::new(Some(f.path())).unwrap();
        assert!(r.flag("add_zero_point_energy", false).unwrap());
        assert_eq!(r.format(None).unwrap(), OutputFormat::Json);
        assert_eq!(
            r.format(Some(OutputFormat::Csv)).unwrap(),
            OutputFormat::Csv
        );
        let f = temp_config("format=xml\n");
        let r = Resolver::new(Some(f.path())).unwrap();
        assert!(r.format(None).is_err());
    }

    #[test]
    fn echo_lines_follow_field_order_and_skip_absent() {
        let mut echo = ConfigEcho::new("demo");
        echo.omega = Some(1.0);
        echo.seed = Some(42);
        let lines = echo.comment_lines();
        let keys: Vec<&str> = lines.iter().map(|(k, _)| *k).collect();
        assert_eq!(keys, vec!["tool", "version", "command", "omega", "seed"]);
    }

    #[test]
    fn cli_parses_every_subcommand() {
        for cmd in [
            "jc-spectrum",
            "jc-crossings",
            "rabi-sweep",
            "check-c1",
            "count-crossings",
            "fk-energy",
            "fk-positivity",
            "validate",
        ] {
            let parsed = Cli::try_parse_from(["rabi", cmd]);
            assert!(parsed.is_ok(), "{cmd}: {parsed:?}");
        }
        assert!(Cli::try_parse_from(["rabi", "no-such-command"]).is_err());
        assert!(Cli::try_parse_from(["rabi", "rabi-sweep", "--k-levels", "x"]).is_err());
    }
}
