//! Run configuration: a TOML file flattened to dotted keys, overridden by
//! command-line flags, then converted into typed settings. Unknown keys are
//! errors.
//!
//! ```toml
//! [trainer]
//! episodes = 30
//! candidates = 16
//! samples = 500
//! mode = "variance-search"      # or "evolutionary", "scalarized"
//! weights = [1, 1, 1, 1, 1, 5]  # scalarized only: K energies then accuracy
//!
//! [energy]
//! kind = "bhattacharyya"        # or "qnorm", "loglik"
//!
//! [generator.bounds]
//! rotation = [0, 30]
//!
//! [data]
//! templates = "templates.txt"
//! regularization = "regularization.txt"
//! ```
//!
//! Relative paths in a config file resolve against the file's directory;
//! paths given on the command line resolve against the working directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gol_core::classifier::TrainConfig;
use gol_core::energy::Aggregation;
use gol_core::generator::{default_bounds, Bounds, TRANSFORM_COUNT};
use gol_core::pareto::ScalarizationWeights;
use gol_core::{EnergyKind, EnergyMode, GeneratorParams, GolConfig, OptimizerMode, TransformKind, VarianceSchedule};

use crate::UsageError;

type Result<T> = std::result::Result<T, UsageError>;

const DEFAULT_LAYERS: &str = "conv5x5x8,pool2,conv5x5x16,pool2,fc64";

/// Settings for every command. `gol` holds the trainer settings; its
/// architecture is completed once the working resolution is known.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub gol: GolConfig,
    /// Hidden layers, e.g. `conv5x5x8,pool2,fc64`; the input size comes from
    /// the working resolution and the output layer from the class count.
    pub layers: String,
    pub templates: Option<PathBuf>,
    pub regularization: Option<PathBuf>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub channels: Option<usize>,
    pub out_dir: PathBuf,
    /// Samples per class in each montage row.
    pub montage_samples: usize,
}

/// Flag values that map onto config keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub episodes: Option<usize>,
    pub candidates: Option<usize>,
    pub samples: Option<usize>,
    pub energy: Option<String>,
    pub mode: Option<String>,
    pub out: Option<PathBuf>,
    /// Raw `key=value` pairs; the value is parsed as a TOML value.
    pub set: Vec<String>,
}

#[derive(Debug, Clone)]
struct Entry {
    value: toml::Value,
    /// Directory relative paths resolve against.
    base: PathBuf,
}

/// Flattened key/value store; keys are removed as they are consumed.
#[derive(Debug, Default)]
struct Keys(BTreeMap<String, Entry>);

fn flatten(prefix: &str, table: &toml::Table, base: &Path, out: &mut BTreeMap<String, Entry>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, base, out),
            other => {
                out.insert(
                    key,
                    Entry {
                        value: other.clone(),
                        base: base.to_path_buf(),
                    },
                );
            }
        }
    }
}

fn type_error(key: &str, expected: &str, value: &toml::Value) -> UsageError {
    UsageError(format!("config key '{key}' must be {expected}, got {value}"))
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(type_error(key, "a number", other)),
    }
}

fn as_f64_array(key: &str, v: &toml::Value) -> Result<Vec<f64>> {
    match v {
        toml::Value::Array(items) => items.iter().map(|x| as_f64(key, x)).collect(),
        other => Err(type_error(key, "an array of numbers", other)),
    }
}

impl Keys {
    fn insert_value(&mut self, key: &str, value: toml::Value, base: &Path) {
        // a scalar override replaces any table entries below the same key
        let nested = format!("{key}.");
        self.0.retain(|k, _| !k.starts_with(&nested));
        let mut table = toml::Table::new();
        table.insert("v".into(), value);
        let mut flat = BTreeMap::new();
        flatten("", &table, base, &mut flat);
        for (k, entry) in flat {
            let full = if k == "v" { key.to_string() } else { format!("{key}{}", &k[1..]) };
            self.0.insert(full, entry);
        }
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        self.0.remove(key)
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.take(key)
            .map(|e| match e.value {
                toml::Value::Integer(i) if i >= 0 => Ok(i as usize),
                other => Err(type_error(key, "a non-negative integer", &other)),
            })
            .transpose()
    }

    fn u64(&mut self, key: &str) -> Result<Option<u64>> {
        self.take(key)
            .map(|e| match e.value {
                toml::Value::Integer(i) if i >= 0 => Ok(i as u64),
                // seeds above i64::MAX can be given as strings
                toml::Value::String(ref s) => s.parse().map_err(|_| type_error(key, "an unsigned integer", &e.value)),
                other => Err(type_error(key, "a non-negative integer", &other)),
            })
            .transpose()
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key).map(|e| as_f64(key, &e.value)).transpose()
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        self.take(key)
            .map(|e| match e.value {
                toml::Value::String(s) => Ok(s),
                other => Err(type_error(key, "a string", &other)),
            })
            .transpose()
    }

    fn path(&mut self, key: &str) -> Result<Option<PathBuf>> {
        self.take(key)
            .map(|e| match e.value {
                toml::Value::String(s) => Ok(e.base.join(s)),
                other => Err(type_error(key, "a path string", &other)),
            })
            .transpose()
    }

    /// A per-transform vector given either as a full array in registry order
    /// or as `key.<transform name> = value` entries on top of `defaults`.
    fn per_transform<T>(
        &mut self,
        key: &str,
        defaults: Vec<T>,
        item: impl Fn(&str, &toml::Value) -> Result<T>,
    ) -> Result<Vec<T>> {
        let mut values = defaults;
        if let Some(entry) = self.take(key) {
            let toml::Value::Array(items) = &entry.value else {
                return Err(type_error(key, "an array or a table keyed by transform name", &entry.value));
            };
            if items.len() != TRANSFORM_COUNT {
                return Err(UsageError(format!(
                    "config key '{key}' needs {TRANSFORM_COUNT} entries (one per transform), got {}",
                    items.len()
                )));
            }
            values = items.iter().map(|v| item(key, v)).collect::<Result<_>>()?;
        }
        let prefix = format!("{key}.");
        let named: Vec<String> = self.0.keys().filter(|k| k.starts_with(&prefix)).cloned().collect();
        for full in named {
            let name = &full[prefix.len()..];
            let kind = TransformKind::from_name(name).ok_or_else(|| {
                let known: Vec<&str> = TransformKind::ALL.iter().map(|k| k.name()).collect();
                UsageError(format!("unknown transform '{name}' in '{full}' (known: {})", known.join(", ")))
            })?;
            let entry = self.take(&full).expect("key listed above");
            values[kind as usize] = item(&full, &entry.value)?;
        }
        Ok(values)
    }

    fn finish(self) -> Result<()> {
        match self.0.keys().next() {
            Some(key) => Err(UsageError(format!("unknown config key '{key}'"))),
            None => Ok(()),
        }
    }
}

fn parse_mode(text: &str, weights: Option<&[f64]>) -> Result<OptimizerMode> {
    match text {
        "variance-search" | "variance_search" => Ok(OptimizerMode::VarianceSearch),
        "evolutionary" => Ok(OptimizerMode::Evolutionary),
        "scalarized" => {
            let w = weights.ok_or_else(|| UsageError("scalarized mode needs trainer.weights".into()))?;
            ScalarizationWeights::new(w.to_vec())
                .map(OptimizerMode::Scalarized)
                .map_err(|e| UsageError(e.to_string()))
        }
        other => Err(UsageError(format!(
            "unknown mode '{other}' (expected variance-search, evolutionary or scalarized)"
        ))),
    }
}

fn parse_energy(kind: &str, q: f64) -> Result<EnergyKind> {
    match kind {
        "bhattacharyya" => Ok(EnergyKind::Bhattacharyya),
        "qnorm" => Ok(EnergyKind::QNorm(q)),
        "loglik" => Ok(EnergyKind::LogLikelihood),
        other => Err(UsageError(format!(
            "unknown energy '{other}' (expected bhattacharyya, qnorm or loglik)"
        ))),
    }
}

fn train_section(keys: &mut Keys, section: &str, defaults: &TrainConfig) -> Result<TrainConfig> {
    let key = |name: &str| format!("{section}.{name}");
    Ok(TrainConfig {
        epochs: keys.usize(&key("epochs"))?.unwrap_or(defaults.epochs),
        learning_rate: keys.f64(&key("learning_rate"))?.unwrap_or(defaults.learning_rate),
        momentum: keys.f64(&key("momentum"))?.unwrap_or(defaults.momentum),
        batch_size: keys.usize(&key("batch_size"))?.unwrap_or(defaults.batch_size),
        holdout_fraction: keys.f64(&key("holdout_fraction"))?.unwrap_or(defaults.holdout_fraction),
        seed: 0,
    })
}

impl CliConfig {
    /// Reads `path` (if any), applies `overrides`, and validates the result.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut keys = Keys::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
            let table: toml::Table =
                toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
            let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
            flatten("", &table, &base, &mut keys.0);
        }
        let cwd = PathBuf::new();
        for pair in &overrides.set {
            let (key, raw) = pair
                .split_once('=')
                .ok_or_else(|| UsageError(format!("--set expects key=value, got '{pair}'")))?;
            let value = parse_set_value(raw);
            keys.insert_value(key.trim(), value, &cwd);
        }
        let flags: [(&str, Option<toml::Value>); 8] = [
            ("trainer.seed", overrides.seed.map(|s| toml::Value::String(s.to_string()))),
            ("trainer.threads", overrides.threads.map(|v| toml::Value::Integer(v as i64))),
            ("trainer.episodes", overrides.episodes.map(|v| toml::Value::Integer(v as i64))),
            ("trainer.candidates", overrides.candidates.map(|v| toml::Value::Integer(v as i64))),
            ("trainer.samples", overrides.samples.map(|v| toml::Value::Integer(v as i64))),
            ("energy.kind", overrides.energy.clone().map(toml::Value::String)),
            ("trainer.mode", overrides.mode.clone().map(toml::Value::String)),
            (
                "output.dir",
                overrides.out.as_ref().map(|p| toml::Value::String(p.to_string_lossy().into_owned())),
            ),
        ];
        for (key, value) in flags {
            if let Some(value) = value {
                keys.insert_value(key, value, &cwd);
            }
        }
        Self::from_keys(keys)
    }

    fn from_keys(mut keys: Keys) -> Result<Self> {
        let d = GolConfig::default();

        let bounds = keys.per_transform("generator.bounds", default_bounds(), |key, v| {
            match as_f64_array(key, v)?[..] {
                [lo, hi] => Bounds::new(lo, hi).map_err(|e| UsageError(format!("{key}: {e}"))),
                _ => Err(type_error(key, "a [lower, upper] pair", v)),
            }
        })?;
        let mean_default = bounds.iter().map(|b| b.clamp(0.0)).collect();
        let mean = keys.per_transform("generator.mean", mean_default, as_f64)?;
        let mean = GeneratorParams::new(mean, bounds.clone()).map_err(|e| UsageError(e.to_string()))?;
        let sigma0_fraction = keys.f64("generator.sigma0_fraction")?.unwrap_or(0.05);
        let delta_fraction = keys.f64("generator.delta_fraction")?.unwrap_or(0.02);
        let proportional = VarianceSchedule::proportional(&bounds, sigma0_fraction, delta_fraction)
            .map_err(|e| UsageError(e.to_string()))?;
        let sigma0 = keys.per_transform("generator.sigma0", proportional.sigma0().to_vec(), as_f64)?;
        let delta = keys.per_transform("generator.delta", proportional.delta().to_vec(), as_f64)?;
        let schedule = VarianceSchedule::new(sigma0, delta).map_err(|e| UsageError(e.to_string()))?;

        let q = keys.f64("energy.q")?.unwrap_or(2.0);
        let kind = parse_energy(&keys.string("energy.kind")?.unwrap_or_else(|| "bhattacharyya".into()), q)?;
        let aggregation = match keys.string("energy.aggregation")?.as_deref() {
            None | Some("mean") => Aggregation::Mean,
            Some("sum") => Aggregation::Sum,
            Some(other) => return Err(UsageError(format!("unknown aggregation '{other}' (mean or sum)"))),
        };
        let energy = EnergyMode {
            kind,
            aggregation,
            bins: keys.usize("energy.bins")?.unwrap_or(d.energy.bins),
        };

        let train = train_section(&mut keys, "classifier", &d.train)?;
        let final_train = train_section(&mut keys, "final_classifier", &train)?;
        let layers = keys.string("classifier.layers")?.unwrap_or_else(|| DEFAULT_LAYERS.into());

        let weights = keys
            .take("trainer.weights")
            .map(|e| as_f64_array("trainer.weights", &e.value))
            .transpose()?;
        let mode_text = keys.string("trainer.mode")?.unwrap_or_else(|| "variance-search".into());
        let mode = parse_mode(&mode_text, weights.as_deref())?;

        let gol = GolConfig {
            episodes: keys.usize("trainer.episodes")?.unwrap_or(d.episodes),
            candidates: keys.usize("trainer.candidates")?.unwrap_or(d.candidates),
            samples: keys.usize("trainer.samples")?.unwrap_or(d.samples),
            energy,
            mean,
            schedule,
            train,
            final_train,
            arch: d.arch.clone(),
            mode,
            seed: keys.u64("trainer.seed")?.unwrap_or(d.seed),
            threads: keys.usize("trainer.threads")?.unwrap_or(d.threads),
            front_cap: keys.usize("trainer.front_cap")?,
        };
        let config = Self {
            gol,
            layers,
            templates: keys.path("data.templates")?,
            regularization: keys.path("data.regularization")?,
            width: keys.usize("data.width")?,
            height: keys.usize("data.height")?,
            channels: keys.usize("data.channels")?,
            out_dir: keys.path("output.dir")?.unwrap_or_else(|| PathBuf::from("gol-out")),
            montage_samples: keys.usize("output.montage_samples")?.unwrap_or(15),
        };
        keys.finish()?;
        if let Some(c) = config.channels {
            if c != 1 && c != 3 {
                return Err(UsageError(format!("data.channels must be 1 or 3, got {c}")));
            }
        }
        config.gol.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(config)
    }

    /// Architecture text for a working resolution.
    pub fn arch_for(&self, width: usize, height: usize, channels: usize) -> String {
        format!("{width}x{height}x{channels}:{}", self.layers)
    }
}

/// `--set` values are TOML values; bare words are taken as strings.
fn parse_set_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
