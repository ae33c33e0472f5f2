//! Flat `key = value` configuration files.
//!
//! ```text
//! # synthetic data
//! n_dof = 2700
//! mode = 1.0, 0.0, 1.5707963267948966, sinusoid:0
//! jitter_amplitude = 0.05
//! ```
//!
//! `#` starts a comment. Keys marked repeatable may appear several times; any
//! other key at most once. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rom_core::synth::{ProfileKind, SyntheticSpec};
use rom_core::{FilterConfig, PipelineConfig, SplitSpec, TrainingConfig, Truncation};

const REPEATABLE: &[&str] = &["mode", "x.mode", "y.mode", "z.mode"];

const KEYS: &[&str] = &[
    // data source
    "input",
    "field",
    // synthetic data
    "n_dof",
    "n_time",
    "dt",
    "t0",
    "seed",
    "mode",
    "jitter_amplitude",
    "jitter_frequency",
    "x.mode",
    "x.seed",
    "x.jitter_amplitude",
    "x.jitter_frequency",
    "y.mode",
    "y.seed",
    "y.jitter_amplitude",
    "y.jitter_frequency",
    "z.mode",
    "z.seed",
    "z.jitter_amplitude",
    "z.jitter_frequency",
    // pipeline
    "psd_threshold",
    "keep_dc",
    "delta",
    "n_modes",
    "x.delta",
    "x.n_modes",
    "y.delta",
    "y.n_modes",
    "z.delta",
    "z.n_modes",
    "n_train",
    "n_validation",
    // training
    "hidden_size",
    "sequence_length",
    "learning_rate",
    "epochs",
    "adam_beta1",
    "adam_beta2",
    "adam_epsilon",
    "training_seed",
    "append_time",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config line {l}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    key: String,
    value: String,
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: Vec<Entry>,
    /// Directory of the file, for resolving relative paths.
    base: Option<PathBuf>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<Entry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(Some(line), format!("expected `key = value`, found {content:?}")))?;
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(err(Some(line), format!("unknown key {key:?}")));
            }
            if value.is_empty() {
                return Err(err(Some(line), format!("key {key:?} has no value")));
            }
            if !REPEATABLE.contains(&key) {
                if let Some(prev) = entries.iter().find(|e| e.key == key) {
                    return Err(err(Some(line), format!("key {key:?} already set on line {}", prev.line)));
                }
            }
            entries.push(Entry { line, key: key.to_owned(), value: value.to_owned() });
        }
        Ok(Self { entries, base: None })
    }

    /// Parse the contents of the file at `path`; relative paths in the
    /// config resolve against its directory.
    pub fn parse_file(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg = Self::parse(text)?;
        cfg.base = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => parse_value(e).map(Some),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?.ok_or_else(|| err(None, format!("missing required key {key:?}")))
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.entry(key) {
            None => Ok(default),
            Some(e) => match e.value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                v => Err(err(Some(e.line), format!("{:?}: expected true or false, found {v:?}", e.key))),
            },
        }
    }

    /// `input`, resolved against the config file's directory.
    pub fn input_path(&self) -> Option<PathBuf> {
        self.entry("input").map(|e| match &self.base {
            Some(b) if Path::new(&e.value).is_relative() => b.join(&e.value),
            _ => PathBuf::from(&e.value),
        })
    }

    fn modes(&self, key: &str) -> impl Iterator<Item = &Entry> {
        let key = key.to_owned();
        self.entries.iter().filter(move |e| e.key == key)
    }
}

fn parse_value<T: FromStr>(e: &Entry) -> Result<T, ConfigError> {
    e.value.parse().map_err(|_| err(Some(e.line), format!("{:?}: cannot parse value {:?}", e.key, e.value)))
}

/// Kind of synthetic field requested by `field`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldChoice {
    Eulerian,
    Lagrangian,
}

impl Config {
    pub fn field(&self) -> Result<FieldChoice, ConfigError> {
        match self.entry("field") {
            None => Ok(FieldChoice::Eulerian),
            Some(e) => match e.value.as_str() {
                "eulerian" => Ok(FieldChoice::Eulerian),
                "lagrangian" => Ok(FieldChoice::Lagrangian),
                v => Err(err(Some(e.line), format!("field must be eulerian or lagrangian, found {v:?}"))),
            },
        }
    }
}

/// Time grid shared by the synthetic generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n_time: usize,
    pub dt: f64,
    pub t0: f64,
}

pub fn grid(cfg: &Config) -> Result<Grid, ConfigError> {
    Ok(Grid { n_time: cfg.require("n_time")?, dt: cfg.require("dt")?, t0: cfg.get_or("t0", 0.0)? })
}

/// Spec for one component. `prefix` is "" for Eulerian data and "x." etc. for
/// particle components.
pub fn synthetic_spec(cfg: &Config, prefix: &str, default_seed: u64) -> Result<SyntheticSpec, ConfigError> {
    let n_dof: usize = cfg.require("n_dof")?;
    let seed = cfg.get_or(&format!("{prefix}seed"), default_seed)?;
    let mut spec = SyntheticSpec::empty(n_dof, seed);
    let mode_key = format!("{prefix}mode");
    for e in cfg.modes(&mode_key) {
        let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(err(
                Some(e.line),
                format!("{mode_key}: expected `amplitude, frequency, phase, profile`, found {:?}", e.value),
            ));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|_| err(Some(e.line), format!("{mode_key}: cannot parse {what} {s:?}")))
        };
        let profile: ProfileKind = parts[3]
            .parse()
            .map_err(|x: rom_core::RomError| err(Some(e.line), format!("{mode_key}: {x}")))?;
        spec.push_mode(
            num(parts[0], "amplitude")?,
            num(parts[1], "frequency")?,
            num(parts[2], "phase")?,
            profile,
        )
        .map_err(|x| err(Some(e.line), format!("{mode_key}: {x}")))?;
    }
    spec.jitter_amplitude = cfg.get_or(&format!("{prefix}jitter_amplitude"), 0.0)?;
    spec.jitter_frequency = cfg.get_or(&format!("{prefix}jitter_frequency"), 0.0)?;
    Ok(spec)
}

/// Training settings: defaults overridden by config keys.
pub fn training_config(cfg: &Config) -> Result<TrainingConfig, ConfigError> {
    let d = TrainingConfig::default();
    Ok(TrainingConfig {
        hidden_size: cfg.get_or("hidden_size", d.hidden_size)?,
        sequence_length: cfg.get_or("sequence_length", d.sequence_length)?,
        learning_rate: cfg.get_or("learning_rate", d.learning_rate)?,
        epochs: cfg.get_or("epochs", d.epochs)?,
        adam_beta1: cfg.get_or("adam_beta1", d.adam_beta1)?,
        adam_beta2: cfg.get_or("adam_beta2", d.adam_beta2)?,
        adam_epsilon: cfg.get_or("adam_epsilon", d.adam_epsilon)?,
        seed: cfg.get_or("training_seed", d.seed)?,
        append_time: cfg.get_bool("append_time", d.append_time)?,
    })
}

/// Truncation from `{prefix}delta` / `{prefix}n_modes`, falling back to the
/// unprefixed keys and then to 99% energy.
fn truncation(cfg: &Config, prefix: &str) -> Result<Truncation, ConfigError> {
    let delta_key = format!("{prefix}delta");
    let modes_key = format!("{prefix}n_modes");
    match (cfg.get::<f64>(&delta_key)?, cfg.get::<usize>(&modes_key)?) {
        (Some(_), Some(_)) => {
            let line = cfg.entry(&modes_key).map(|e| e.line);
            Err(err(line, format!("set either {delta_key} or {modes_key}, not both")))
        }
        (Some(d), None) => Ok(Truncation::Energy(d)),
        (None, Some(n)) => Ok(Truncation::Modes(n)),
        (None, None) if !prefix.is_empty() => truncation(cfg, ""),
        (None, None) => Ok(Truncation::Energy(0.99)),
    }
}

/// Full pipeline settings. `n_time` is the number of available snapshots and
/// supplies the default split (90% training). `prefix` selects per-component
/// truncation keys for particle data ("" for Eulerian data).
pub fn pipeline_config(cfg: &Config, n_time: usize, prefix: &str) -> Result<PipelineConfig, ConfigError> {
    let truncation = truncation(cfg, prefix)?;
    let n_train = cfg.get_or("n_train", n_time * 9 / 10)?;
    let n_validation = cfg.get_or("n_validation", n_time.saturating_sub(n_train))?;
    Ok(PipelineConfig {
        filter: FilterConfig {
            psd_threshold: cfg.get_or("psd_threshold", 0.0)?,
            keep_dc: cfg.get_bool("keep_dc", true)?,
        },
        truncation,
        split: SplitSpec { n_train, n_validation },
        training: training_config(cfg)?,
    })
}
