//! Scenario configuration: a TOML file with nested parameter tables plus
//! `key=value` overrides. Parameters are stored flattened under dotted keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Value;

use crate::error::{Error, Result};

use super::catalogue::{defaults_for, ScenarioId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: String,
    /// Dotted keys to values; only overrides, defaults are filled in by [`ScenarioConfig::resolve`].
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self { scenario: scenario.into(), params: BTreeMap::new(), out: None, seed: 0 }
    }

    /// Parses a config document:
    ///
    /// ```toml
    /// scenario = "fig6a"
    /// seed = 3
    /// [params]
    /// betas = [0.0, 0.5]
    /// [params.grid]
    /// t_end = 100.0
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut cfg = match doc.get("scenario") {
            Some(Value::String(s)) => Self::new(s.clone()),
            Some(_) => return Err(Error::Config("`scenario` must be a string".into())),
            None => return Err(Error::Config("missing `scenario`".into())),
        };
        for (key, value) in &doc {
            match key.as_str() {
                "scenario" => {}
                "seed" => {
                    cfg.seed = value
                        .as_integer()
                        .and_then(|v| u64::try_from(v).ok())
                        .ok_or_else(|| Error::Config("`seed` must be a non-negative integer".into()))?
                }
                "out" => {
                    cfg.out = Some(PathBuf::from(
                        value.as_str().ok_or_else(|| Error::Config("`out` must be a string".into()))?,
                    ))
                }
                "params" => {
                    let table = value.as_table().ok_or_else(|| Error::Config("`params` must be a table".into()))?;
                    flatten("", table, &mut cfg.params);
                }
                other => return Err(Error::Config(format!("unknown top-level key `{other}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Applies one `key=value` override. Values are parsed as TOML; anything
    /// that does not parse is taken as a bare string.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key=value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("override `{assignment}` has an empty key")));
        }
        self.params.insert(key.to_string(), parse_value(raw.trim()));
        Ok(())
    }

    pub fn id(&self) -> Result<ScenarioId> {
        self.scenario.parse()
    }

    /// Defaults for the scenario with the overrides applied and type-checked.
    pub fn resolve(&self) -> Result<ResolvedParams> {
        let id = self.id()?;
        let mut values = defaults_for(id);
        for (key, value) in &self.params {
            let default = values
                .get(key)
                .ok_or_else(|| Error::Config(format!("scenario `{id}` has no parameter `{key}`")))?;
            let coerced = coerce(key, default, value)?;
            values.insert(key.clone(), coerced);
        }
        Ok(ResolvedParams { id, seed: self.seed, values })
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(inner) => flatten(&key, inner, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn parse_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

fn coerce(key: &str, default: &Value, value: &Value) -> Result<Value> {
    let mismatch = || {
        Error::Config(format!("parameter `{key}` expects {}, got {} `{value}`", type_name(default), type_name(value)))
    };
    match (default, value) {
        (Value::Float(_), Value::Float(_)) => Ok(value.clone()),
        (Value::Float(_), Value::Integer(i)) => Ok(Value::Float(*i as f64)),
        (Value::Integer(_), Value::Integer(_)) => Ok(value.clone()),
        (Value::String(_), Value::String(_)) => Ok(value.clone()),
        (Value::Boolean(_), Value::Boolean(_)) => Ok(value.clone()),
        (Value::Array(d), Value::Array(items)) => {
            let float_list = d.iter().any(|x| x.is_float());
            items
                .iter()
                .map(|item| match item {
                    Value::Float(_) if float_list => Ok(item.clone()),
                    Value::Integer(i) if float_list => Ok(Value::Float(*i as f64)),
                    Value::Integer(i) if *i >= 0 => Ok(item.clone()),
                    _ => Err(mismatch()),
                })
                .collect::<Result<Vec<_>>>()
                .map(Value::Array)
        }
        // A single number where a list is expected becomes a one-element list.
        (Value::Array(_), Value::Float(_) | Value::Integer(_)) => coerce(key, default, &Value::Array(vec![value.clone()])),
        _ => Err(mismatch()),
    }
}

/// Fully resolved parameters with typed accessors.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedParams {
    pub id: ScenarioId,
    pub seed: u64,
    pub values: BTreeMap<String, Value>,
}

impl ResolvedParams {
    fn get(&self, key: &str) -> Result<&Value> {
        self.values.get(key).ok_or_else(|| Error::Config(format!("missing parameter `{key}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            other => Err(Error::Config(format!("parameter `{key}` is not a number: {other}"))),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        match self.get(key)? {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            other => Err(Error::Config(format!("parameter `{key}` is not a non-negative integer: {other}"))),
        }
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        match self.get(key)? {
            Value::String(s) => Ok(s),
            other => Err(Error::Config(format!("parameter `{key}` is not a string: {other}"))),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        match self.get(key)? {
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::Float(f) => Ok(*f),
                    Value::Integer(i) => Ok(*i as f64),
                    _ => Err(Error::Config(format!("parameter `{key}` must be a list of numbers"))),
                })
                .collect(),
            other => Err(Error::Config(format!("parameter `{key}` is not a list: {other}"))),
        }
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        match self.get(key)? {
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                    _ => Err(Error::Config(format!("parameter `{key}` must be a list of non-negative integers"))),
                })
                .collect(),
            other => Err(Error::Config(format!("parameter `{key}` is not a list: {other}"))),
        }
    }

    /// Parameters as JSON, for metadata.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.values).unwrap_or(serde_json::Value::Null)
    }
}
