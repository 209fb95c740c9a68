//! TOML run configuration: seed, replica count, horizon, the model (a preset
//! reference or an inline measure list), free-form subcommand parameters and
//! tolerances.
//!
//! ```toml
//! seed = 7
//! replicas = 10000
//! t = 1.0
//!
//! [model]
//! preset = "yule"
//! params = { r = 1.0, w = 0.5 }
//!
//! [params]
//! z0 = [1]
//! ```
//!
//! An inline model replaces `preset`/`params` with a graph and measure lists:
//!
//! ```toml
//! [model]
//! graph = { kind = "complete", n = 2 }
//! death = [{ vertex = 0, atoms = [[0.0, 1.0]] }]
//! migration = [{ from = 0, to = 1, atoms = [[1.0, 0.5]] }]
//! ```
//!
//! Atoms are `[y, mass]` pairs or `{ y = .., mass = .. }` tables.

use std::collections::BTreeMap;
use std::path::Path;

use cobra_core::measure::{Atom, AtomicMeasure};
use cobra_core::model::{preset, ParamValue, Params};
use cobra_core::{GraphSpec, ModelSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Value;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("seed required (set `seed` in the config or pass --seed)")]
    SeedRequired,
    #[error("{key}: {reason}")]
    Key { key: String, reason: String },
}

pub(crate) fn key_err(key: impl Into<String>, reason: impl std::fmt::Display) -> ConfigError {
    ConfigError::Key {
        key: key.into(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Numeric tolerances used by the checking subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Two-sided z-score threshold for Monte Carlo comparisons.
    pub z_threshold: f64,
    /// Largest acceptable truncation leak of the exact oracle.
    pub leak: f64,
    /// Time step of the dual integrator.
    pub dual_dt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            z_threshold: 4.0,
            leak: 1e-6,
            dual_dt: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<usize>,
    pub atoms: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "toml::Table::is_empty")]
    pub params: toml::Table,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<toml::Table>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coalescence: Vec<MeasureEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub death: Vec<MeasureEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reproduction: Vec<MeasureEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub migration: Vec<MeasureEntry>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    // results do not depend on the thread count, so it stays out of the echo
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub params: toml::Table,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&text)
}

/// Parses config text and validates everything that does not depend on the
/// subcommand. The seed is checked separately because `--seed` may supply it.
pub fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text)?;
    if let Some(t) = cfg.t {
        if !t.is_finite() || t < 0.0 {
            return Err(key_err(
                "t",
                format!("must be finite and nonnegative, got {t}"),
            ));
        }
    }
    if cfg.tolerances.z_threshold <= 0.0 {
        return Err(key_err("tolerances.z_threshold", "must be positive"));
    }
    if cfg.tolerances.dual_dt <= 0.0 {
        return Err(key_err("tolerances.dual_dt", "must be positive"));
    }
    if let Some(model) = &cfg.model {
        build_model(model)?;
    }
    Ok(cfg)
}

impl RunConfig {
    pub fn seed(&self) -> Result<u64, ConfigError> {
        self.seed.ok_or(ConfigError::SeedRequired)
    }

    pub fn model(&self) -> Result<ModelSpec, ConfigError> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| key_err("model", "this subcommand needs a [model] table"))?;
        build_model(model)
    }

    pub fn t(&self) -> Result<f64, ConfigError> {
        self.t
            .ok_or_else(|| key_err("t", "time horizon required (set `t` or pass --t)"))
    }

    pub fn replicas(&self, default: u64) -> u64 {
        self.replicas.unwrap_or(default)
    }

    /// Accessor for `[params]`, with keys reported as `params.<name>`.
    pub fn params(&self) -> ParamReader<'_> {
        ParamReader {
            table: &self.params,
            prefix: "params",
        }
    }

    /// One-line JSON echo of the resolved config.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Typed access to a TOML table with key-naming errors.
#[derive(Clone, Copy)]
pub struct ParamReader<'a> {
    table: &'a toml::Table,
    prefix: &'a str,
}

impl<'a> ParamReader<'a> {
    pub fn new(table: &'a toml::Table, prefix: &'a str) -> Self {
        ParamReader { table, prefix }
    }

    fn key(&self, name: &str) -> String {
        format!("{}.{name}", self.prefix)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.table.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<&'a Value> {
        self.table.get(name)
    }

    pub fn f64_opt(&self, name: &str) -> Result<Option<f64>, ConfigError> {
        match self.table.get(name) {
            None => Ok(None),
            Some(v) => number(v)
                .map(Some)
                .ok_or_else(|| key_err(self.key(name), "expected a number")),
        }
    }

    pub fn f64_or(&self, name: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64_opt(name)?.unwrap_or(default))
    }

    pub fn nonneg_or(&self, name: &str, default: f64) -> Result<f64, ConfigError> {
        let x = self.f64_or(name, default)?;
        if !x.is_finite() || x < 0.0 {
            return Err(key_err(
                self.key(name),
                format!("must be finite and nonnegative, got {x}"),
            ));
        }
        Ok(x)
    }

    pub fn u64_or(&self, name: &str, default: u64) -> Result<u64, ConfigError> {
        match self.table.get(name) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
            Some(_) => Err(key_err(self.key(name), "expected a nonnegative integer")),
        }
    }

    pub fn usize_or(&self, name: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.u64_or(name, default as u64)? as usize)
    }

    pub fn f64_list(&self, name: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.table.get(name) {
            None => Ok(None),
            Some(Value::Array(xs)) => xs
                .iter()
                .map(|v| {
                    number(v).ok_or_else(|| key_err(self.key(name), "expected a list of numbers"))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(v) => number(v)
                .map(|x| Some(vec![x]))
                .ok_or_else(|| key_err(self.key(name), "expected a list of numbers")),
        }
    }

    pub fn u64_list(&self, name: &str) -> Result<Option<Vec<u64>>, ConfigError> {
        let err = || key_err(self.key(name), "expected a list of nonnegative integers");
        match self.table.get(name) {
            None => Ok(None),
            Some(Value::Array(xs)) => xs
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                    _ => Err(err()),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(vec![*i as u64])),
            Some(_) => Err(err()),
        }
    }

    pub fn str_or(&self, name: &str, default: &'a str) -> Result<&'a str, ConfigError> {
        match self.table.get(name) {
            None => Ok(default),
            Some(Value::String(s)) => Ok(s),
            Some(_) => Err(key_err(self.key(name), "expected a string")),
        }
    }

    pub fn table(&self, name: &str) -> Result<Option<&'a toml::Table>, ConfigError> {
        match self.table.get(name) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(_) => Err(key_err(self.key(name), "expected a table")),
        }
    }
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn parse_atom(v: &Value, key: &str) -> Result<Atom, ConfigError> {
    let (y, mass) = match v {
        Value::Array(pair) if pair.len() == 2 => (number(&pair[0]), number(&pair[1])),
        Value::Table(t) => (t.get("y").and_then(number), t.get("mass").and_then(number)),
        _ => (None, None),
    };
    let (Some(y), Some(mass)) = (y, mass) else {
        return Err(key_err(
            key,
            "an atom is [y, mass] or { y = .., mass = .. }",
        ));
    };
    if !(0.0..=1.0).contains(&y) {
        return Err(key_err(
            key,
            format!("atom location must lie in [0, 1], got {y}"),
        ));
    }
    if !mass.is_finite() || mass < 0.0 {
        return Err(key_err(
            key,
            format!("mass must be nonnegative, got {mass}"),
        ));
    }
    Ok(Atom { y, mass })
}

fn parse_measure(atoms: &[Value], key: &str) -> Result<AtomicMeasure, ConfigError> {
    let atoms = atoms
        .iter()
        .enumerate()
        .map(|(i, a)| parse_atom(a, &format!("{key}[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    AtomicMeasure::new(atoms.iter().map(|a| (a.y, a.mass))).map_err(|e| key_err(key, e))
}

fn param_value(v: &Value, key: &str) -> Result<ParamValue, ConfigError> {
    match v {
        Value::String(s) => Ok(ParamValue::Text(s.clone())),
        Value::Array(xs) if xs.iter().all(|x| number(x).is_some()) => {
            let list: Vec<f64> = xs.iter().filter_map(number).collect();
            if let Some(x) = list.iter().find(|x| **x < 0.0) {
                return Err(key_err(
                    key,
                    format!("entries must be nonnegative, got {x}"),
                ));
            }
            Ok(ParamValue::List(list))
        }
        Value::Array(xs) => Ok(ParamValue::Measure(parse_measure(xs, key)?)),
        other => {
            let x = number(other)
                .ok_or_else(|| key_err(key, "expected a number, list, measure or string"))?;
            // every preset parameter is a rate, mass, probability or size
            if !x.is_finite() || x < 0.0 {
                return Err(key_err(
                    key,
                    format!("must be finite and nonnegative, got {x}"),
                ));
            }
            Ok(ParamValue::Number(x))
        }
    }
}

/// Graph from an inline table (`kind` plus its size keys); `prefix` names the
/// table in diagnostics.
pub fn build_graph(t: &toml::Table, prefix: &str) -> Result<GraphSpec, ConfigError> {
    let r = ParamReader::new(t, prefix);
    let kind = r.str_or("kind", "complete")?;
    let g = match kind {
        "complete" => GraphSpec::complete(r.usize_or("n", 1)?),
        "line" => GraphSpec::line(r.usize_or("K", 2)?),
        "grid" => GraphSpec::grid(r.usize_or("K", 2)?, r.usize_or("d", 1)?),
        "torus" => GraphSpec::torus(r.usize_or("K", 3)?, r.usize_or("d", 1)?),
        "tree" => GraphSpec::rooted_tree(r.usize_or("d", 2)?, r.u64_or("depth", 2)? as u32),
        other => {
            return Err(key_err(
                format!("{prefix}.kind"),
                format!("unknown graph kind '{other}'"),
            ))
        }
    };
    g.map_err(|e| key_err(prefix, e))
}

/// Builds the model of a `[model]` table.
pub fn build_model(m: &ModelConfig) -> Result<ModelSpec, ConfigError> {
    let inline = m.graph.is_some()
        || !(m.coalescence.is_empty()
            && m.death.is_empty()
            && m.reproduction.is_empty()
            && m.migration.is_empty());
    match (&m.preset, inline) {
        (Some(_), true) => Err(key_err(
            "model",
            "give either `preset` or an inline graph with measures, not both",
        )),
        (None, false) => Err(key_err("model", "needs `preset` or an inline `graph`")),
        (Some(name), false) => {
            let mut params = Params::new();
            let sorted: BTreeMap<_, _> = m.params.iter().collect();
            for (k, v) in sorted {
                params.insert(k, param_value(v, &format!("model.params.{k}"))?);
            }
            preset(name, &params).map_err(|e| key_err("model.params", e))
        }
        (None, true) => {
            let graph = build_graph(
                m.graph
                    .as_ref()
                    .ok_or_else(|| key_err("model.graph", "required"))?,
                "model.graph",
            )?;
            let mut b = ModelSpec::builder(graph);
            let vertex = |e: &MeasureEntry, key: &str| {
                e.vertex.ok_or_else(|| key_err(key, "needs `vertex`"))
            };
            let pair = |e: &MeasureEntry, key: &str| match (e.from, e.to) {
                (Some(f), Some(t)) => Ok((f, t)),
                _ => Err(key_err(key, "needs `from` and `to`")),
            };
            for (i, e) in m.coalescence.iter().enumerate() {
                let key = format!("model.coalescence[{i}]");
                b = b.coalescence(
                    vertex(e, &key)?,
                    parse_measure(&e.atoms, &format!("{key}.atoms"))?,
                );
            }
            for (i, e) in m.death.iter().enumerate() {
                let key = format!("model.death[{i}]");
                b = b.death(
                    vertex(e, &key)?,
                    parse_measure(&e.atoms, &format!("{key}.atoms"))?,
                );
            }
            for (i, e) in m.reproduction.iter().enumerate() {
                let key = format!("model.reproduction[{i}]");
                let (f, t) = pair(e, &key)?;
                b = b.reproduction(f, t, parse_measure(&e.atoms, &format!("{key}.atoms"))?);
            }
            for (i, e) in m.migration.iter().enumerate() {
                let key = format!("model.migration[{i}]");
                let (f, t) = pair(e, &key)?;
                b = b.migration(f, t, parse_measure(&e.atoms, &format!("{key}.atoms"))?);
            }
            b.build().map_err(|e| key_err("model", e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_yule_config() {
        let cfg =
            parse_str("seed = 1\nt = 1.0\n[model]\npreset = \"yule\"\nparams = { r = 1.0 }\n")
                .unwrap();
        assert_eq!(cfg.seed().unwrap(), 1);
        let spec = cfg.model().unwrap();
        assert_eq!(spec.n_vertices(), 1);
        assert_eq!(spec.reproduction(0, 0).total_mass(), 1.0);
    }

    #[test]
    fn missing_seed() {
        let cfg = parse_str("t = 1.0\n").unwrap();
        let err = cfg.seed().unwrap_err();
        assert!(err.to_string().contains("seed required"));
    }

    #[test]
    fn negative_mass_names_the_key() {
        let text = "seed = 1\n[model]\ngraph = { kind = \"complete\", n = 1 }\ndeath = [{ vertex = 0, atoms = [[0.0, -1.0]] }]\n";
        let err = parse_str(text).unwrap_err().to_string();
        assert!(err.contains("model.death[0].atoms[0]"), "{err}");
        let err = parse_str("seed = 1\n[model]\npreset = \"yule\"\nparams = { r = -2.0 }\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("model.params.r"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_str("seed = 1\nsede = 2\n").unwrap_err().to_string();
        assert!(err.contains("sede"), "{err}");
    }

    #[test]
    fn inline_model_and_measure_params() {
        let text = r#"
seed = 3
[model]
graph = { kind = "complete", n = 2 }
death = [{ vertex = 0, atoms = [{ y = 0.0, mass = 1.0 }] }]
migration = [{ from = 0, to = 1, atoms = [[1.0, 0.5], [0.0, 0.25]] }]
"#;
        let spec = parse_str(text).unwrap().model().unwrap();
        assert_eq!(spec.migration(0, 1).total_mass(), 0.75);
        let text = "seed = 3\n[model]\npreset = \"nested_coalescent\"\nparams = { lambda = [[0.0, 2.0]], n_islands = 3 }\n";
        let spec = parse_str(text).unwrap().model().unwrap();
        assert_eq!(spec.n_vertices(), 3);
        assert_eq!(spec.coalescence(2).mass_at_zero(), 2.0);
    }

    #[test]
    fn echo_is_stable() {
        let text = "seed = 5\nt = 2.0\n[params]\nz0 = [1, 2]\nb = 1\n";
        let a = parse_str(text).unwrap().echo();
        let b = parse_str(text).unwrap().echo();
        assert_eq!(a, b);
        assert!(a.contains("\"seed\":5"));
    }
}
