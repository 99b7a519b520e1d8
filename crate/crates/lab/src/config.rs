//! Flat key-value experiment configuration.
//!
//! A config file is TOML restricted to top-level scalar and array values:
//!
//! ```toml
//! experiment = "runlength"
//! n_max = 10_000_000
//! ensemble = 100
//! seed = 7
//! alpha = 2.0
//! tol_xi1_lo = 0.35
//! ```
//!
//! Every key other than `experiment` and `out` must appear in the
//! experiment's default table (see `ergolab list --defaults NAME`), and its
//! value must have the same type; integers are accepted where a float is
//! expected. Keys prefixed `tol_` are acceptance tolerances.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Value;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("unknown experiment `{0}` (see `ergolab list`)")]
    UnknownExperiment(String),
    #[error("missing key `experiment`")]
    MissingExperiment,
    #[error("key `{key}` is not a parameter of `{experiment}`")]
    UnknownKey { experiment: String, key: String },
    #[error("key `{key}`: expected {expected}, found {found}")]
    Type { key: String, expected: &'static str, found: String },
    #[error("key `{key}`: nested tables are not allowed in the flat format")]
    Nested { key: String },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

/// A fully resolved configuration: the experiment's defaults overlaid with
/// user values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub values: BTreeMap<String, Value>,
}

/// Values read from a file or the command line, not yet checked against an
/// experiment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    pub experiment: Option<String>,
    pub out: Option<PathBuf>,
    pub values: BTreeMap<String, Value>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        let mut raw = RawConfig::default();
        for (key, value) in table {
            check_flat(&key, &value)?;
            match key.as_str() {
                "experiment" => match value {
                    Value::String(s) => raw.experiment = Some(s),
                    other => return Err(type_error("experiment", "a string", &other)),
                },
                "out" => match value {
                    Value::String(s) => raw.out = Some(PathBuf::from(s)),
                    other => return Err(type_error("out", "a string", &other)),
                },
                _ => {
                    raw.values.insert(key, value);
                }
            }
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.values.insert(key.to_owned(), value);
    }
}

fn check_flat(key: &str, value: &Value) -> Result<(), ConfigError> {
    match value {
        Value::Table(_) => Err(ConfigError::Nested { key: key.to_owned() }),
        Value::Array(items) => {
            if items.iter().any(|v| matches!(v, Value::Table(_) | Value::Array(_))) {
                Err(ConfigError::Nested { key: key.to_owned() })
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "a string",
        Value::Integer(_) => "an integer",
        Value::Float(_) => "a float",
        Value::Boolean(_) => "a boolean",
        Value::Datetime(_) => "a datetime",
        Value::Array(_) => "a list",
        Value::Table(_) => "a table",
    }
}

fn type_error(key: &str, expected: &'static str, found: &Value) -> ConfigError {
    ConfigError::Type { key: key.to_owned(), expected, found: kind(found).to_owned() }
}

/// Coerces `value` to the type of `default`.
fn coerce(key: &str, default: &Value, value: Value) -> Result<Value, ConfigError> {
    match (default, value) {
        (Value::Float(_), Value::Integer(i)) => Ok(Value::Float(i as f64)),
        (Value::Array(d), Value::Array(items)) => {
            let elem = d.first().cloned().unwrap_or(Value::Float(0.0));
            let items = items.into_iter().map(|v| coerce(key, &elem, v)).collect::<Result<Vec<_>, _>>()?;
            Ok(Value::Array(items))
        }
        (d, v) if std::mem::discriminant(d) == std::mem::discriminant(&v) => Ok(v),
        (d, v) => Err(type_error(key, kind(d), &v)),
    }
}

impl ExperimentConfig {
    /// Overlays `raw` on `defaults`, rejecting unknown keys and type
    /// mismatches.
    pub fn resolve(experiment: &str, defaults: &str, raw: &RawConfig) -> Result<Self, ConfigError> {
        let base = RawConfig::parse(defaults)?;
        let mut values = base.values;
        for (key, value) in &raw.values {
            let Some(default) = values.get(key) else {
                return Err(ConfigError::UnknownKey { experiment: experiment.to_owned(), key: key.clone() });
            };
            let v = coerce(key, default, value.clone())?;
            values.insert(key.clone(), v);
        }
        Ok(ExperimentConfig { experiment: experiment.to_owned(), values })
    }

    /// The flat TOML form; parsing it back gives the same config.
    pub fn to_toml(&self) -> String {
        let mut table = toml::Table::new();
        table.insert("experiment".into(), Value::String(self.experiment.clone()));
        for (k, v) in &self.values {
            table.insert(k.clone(), v.clone());
        }
        toml::to_string(&table).expect("flat tables always serialise")
    }

    fn get(&self, key: &str) -> Result<&Value, ConfigError> {
        self.values
            .get(key)
            .ok_or_else(|| ConfigError::UnknownKey { experiment: self.experiment.clone(), key: key.to_owned() })
    }

    pub fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        match self.get(key)? {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            other => Err(type_error(key, "a number", other)),
        }
    }

    pub fn u64(&self, key: &str) -> Result<u64, ConfigError> {
        match self.get(key)? {
            Value::Integer(i) if *i >= 0 => Ok(*i as u64),
            Value::Integer(i) => Err(ConfigError::Invalid { key: key.to_owned(), reason: format!("{i} is negative") }),
            other => Err(type_error(key, "an integer", other)),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize, ConfigError> {
        self.u64(key).map(|v| v as usize)
    }

    pub fn str(&self, key: &str) -> Result<&str, ConfigError> {
        match self.get(key)? {
            Value::String(s) => Ok(s),
            other => Err(type_error(key, "a string", other)),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        match self.get(key)? {
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    other => Err(type_error(key, "a list of numbers", other)),
                })
                .collect(),
            other => Err(type_error(key, "a list", other)),
        }
    }

    pub fn u64_list(&self, key: &str) -> Result<Vec<u64>, ConfigError> {
        match self.get(key)? {
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                    other => Err(type_error(key, "a list of non-negative integers", other)),
                })
                .collect(),
            other => Err(type_error(key, "a list", other)),
        }
    }

    pub fn str_list(&self, key: &str) -> Result<Vec<String>, ConfigError> {
        match self.get(key)? {
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    other => Err(type_error(key, "a list of strings", other)),
                })
                .collect(),
            other => Err(type_error(key, "a list", other)),
        }
    }

    /// `(name, value)` for every `tol_*` key.
    pub fn tolerances(&self) -> Vec<(String, f64)> {
        self.values
            .iter()
            .filter(|(k, _)| k.starts_with("tol_"))
            .filter_map(|(k, v)| match v {
                Value::Float(x) => Some((k.clone(), *x)),
                Value::Integer(i) => Some((k.clone(), *i as f64)),
                _ => None,
            })
            .collect()
    }
}
