//! JSON configuration loading with dotted overrides and validation.
//!
//! A file holding a top-level `"N"` key is an FPC experiment; anything else
//! is a tangle scenario. Unknown keys are errors. Overrides are applied to the
//! parsed JSON before typed deserialization, so they are validated exactly
//! like keys from the file.

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::fpc::FpcConfig;
use crate::sim::scenario::ScenarioConfig;

/// A violated config constraint, naming the key and the rule.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{key}: constraint {constraint} violated")]
pub struct InvariantViolation {
    pub key: String,
    pub constraint: String,
}

impl InvariantViolation {
    pub fn new(key: &str, constraint: &str) -> Self {
        Self {
            key: key.to_owned(),
            constraint: constraint.to_owned(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("unknown key {key}")]
    UnknownKey { key: String },
    #[error(transparent)]
    Invariant(#[from] InvariantViolation),
    #[error("bad override {0:?}: expected key=value")]
    BadOverride(String),
}

/// Quorum size in a grid: a number or `"N-1"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuorumSpec {
    Fixed(usize),
    AllOthers,
}

impl QuorumSpec {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            QuorumSpec::Fixed(k) => k,
            QuorumSpec::AllOthers => n.saturating_sub(1),
        }
    }
}

impl fmt::Display for QuorumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuorumSpec::Fixed(k) => write!(f, "{k}"),
            QuorumSpec::AllOthers => f.write_str("N-1"),
        }
    }
}

impl Serialize for QuorumSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            QuorumSpec::Fixed(k) => s.serialize_u64(*k as u64),
            QuorumSpec::AllOthers => s.serialize_str("N-1"),
        }
    }
}

impl<'de> Deserialize<'de> for QuorumSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(k) => Ok(QuorumSpec::Fixed(k)),
            Raw::Text(t) if t == "N-1" => Ok(QuorumSpec::AllOthers),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"N-1\", got {t:?}"))),
        }
    }
}

/// One block of a sweep: the cartesian product of its three axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub k: Vec<QuorumSpec>,
    pub q: Vec<f64>,
}

impl GridBlock {
    pub fn points(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.n.iter().flat_map(move |&n| {
            self.k
                .iter()
                .flat_map(move |k| self.q.iter().map(move |&q| (n, k.resolve(n), q)))
        })
    }
}

/// The N-, k- and q-sweeps run by default.
pub fn default_grid() -> Vec<GridBlock> {
    vec![
        GridBlock {
            n: vec![100, 200, 500, 1000],
            k: vec![QuorumSpec::Fixed(20)],
            q: vec![0.1],
        },
        GridBlock {
            n: vec![100],
            k: [5, 10, 20, 50].into_iter().map(QuorumSpec::Fixed).chain([QuorumSpec::AllOthers]).collect(),
            q: vec![0.3],
        },
        GridBlock {
            n: vec![100],
            k: vec![QuorumSpec::AllOthers],
            q: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
        },
    ]
}

/// An FPC config plus the optional sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpcExperimentConfig {
    #[serde(flatten)]
    pub base: FpcConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<GridBlock>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedConfig {
    Fpc(FpcExperimentConfig),
    Scenario(ScenarioConfig),
}

impl LoadedConfig {
    pub fn to_json(&self) -> String {
        let v = match self {
            LoadedConfig::Fpc(c) => serde_json::to_string_pretty(c),
            LoadedConfig::Scenario(c) => serde_json::to_string_pretty(c),
        };
        v.expect("config serializes")
    }
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_config_str(&text, overrides)
}

pub fn load_config_str(text: &str, overrides: &[String]) -> Result<LoadedConfig, ConfigError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        path: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let Value::Object(mut map) = value else {
        return Err(ConfigError::Parse {
            path: ".".into(),
            message: "top level must be an object".into(),
        });
    };
    if map.contains_key("N") {
        let grid = match map.remove("grid") {
            Some(g) => Some(typed::<Vec<GridBlock>>(g, "grid.")?),
            None => None,
        };
        let base: FpcConfig = typed(Value::Object(map), "")?;
        base.validate()?;
        if let Some(blocks) = &grid {
            validate_grid(blocks)?;
        }
        Ok(LoadedConfig::Fpc(FpcExperimentConfig { base, grid }))
    } else {
        let scenario: ScenarioConfig = typed(Value::Object(map), "")?;
        scenario.validate()?;
        Ok(LoadedConfig::Scenario(scenario))
    }
}

fn validate_grid(blocks: &[GridBlock]) -> Result<(), InvariantViolation> {
    for b in blocks {
        if b.n.is_empty() || b.k.is_empty() || b.q.is_empty() {
            return Err(InvariantViolation::new("grid", "every axis non-empty"));
        }
        if b.q.iter().any(|q| !(0.0..=0.5).contains(q)) {
            return Err(InvariantViolation::new("grid.q", "q ∈ [0, 0.5]"));
        }
    }
    Ok(())
}

fn typed<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = format!("{prefix}{}", e.path());
        let message = e.inner().to_string();
        if message.starts_with("unknown field `") {
            ConfigError::UnknownKey { key: path }
        } else {
            ConfigError::Parse { path, message }
        }
    })
}

/// Applies `a.b.c=value` to a JSON tree. The value is parsed as JSON when
/// possible and taken as a string otherwise.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| ConfigError::BadOverride(spec.to_owned()))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let mut cursor = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !cursor.is_object() {
            *cursor = Value::Object(Map::new());
        }
        let map = cursor.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            map.insert((*part).to_owned(), value);
            return Ok(());
        }
        cursor = map.entry((*part).to_owned()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fpc(text: &str, overrides: &[&str]) -> Result<FpcExperimentConfig, ConfigError> {
        let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        match load_config_str(text, &o)? {
            LoadedConfig::Fpc(c) => Ok(c),
            LoadedConfig::Scenario(_) => panic!("expected fpc config"),
        }
    }

    #[test]
    fn minimal_fpc_gets_defaults() {
        let c = fpc(r#"{"N":100,"k":20,"q":0,"seed":1}"#, &[]).unwrap().base;
        assert_eq!((c.tau, c.beta, c.l, c.m), (0.5, 0.3, 8, 100));
        assert_eq!(c.seed, 1);
    }

    #[test]
    fn k_must_leave_self_out() {
        let err = fpc(r#"{"N":100,"k":100,"q":0,"seed":1}"#, &[]).unwrap_err();
        match err {
            ConfigError::Invariant(v) => assert_eq!((v.key.as_str(), v.constraint.as_str()), ("k", "k ≤ N−1")),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn override_is_validated() {
        let err = fpc(r#"{"N":100,"k":20,"q":0,"seed":1}"#, &["q=0.6"]).unwrap_err();
        assert!(matches!(err, ConfigError::Invariant(v) if v.constraint == "q ∈ [0, 0.5]"));
        let ok = fpc(r#"{"N":100,"k":20,"q":0,"seed":1}"#, &["q=0.2", "adversaryStrategy=FixedLike"]).unwrap();
        assert_eq!(ok.base.q, 0.2);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = fpc(r#"{"N":100,"k":20,"q":0,"seed":1,"bogus":3}"#, &[]).unwrap_err();
        assert!(matches!(&err, ConfigError::UnknownKey { key } if key == "bogus"), "{err:?}");
        let err = load_config_str(r#"{"duration":10,"pow":{"gama":1}}"#, &[]).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { key } if key == "pow.gama"), );
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(load_config_str("{", &[]), Err(ConfigError::Parse { .. })));
        assert!(matches!(load_config_str("{}", &["novalue".to_string()]), Err(ConfigError::BadOverride(_))));
    }

    #[test]
    fn grid_accepts_all_others() {
        let c = fpc(r#"{"N":100,"k":20,"q":0,"grid":[{"N":[10],"k":[3,"N-1"],"q":[0.1]}]}"#, &[]).unwrap();
        let pts: Vec<_> = c.grid.unwrap()[0].points().collect();
        assert_eq!(pts, vec![(10, 3, 0.1), (10, 9, 0.1)]);
    }

    #[test]
    fn default_grid_shape() {
        let pts: Vec<_> = default_grid().iter().flat_map(|b| b.points().collect::<Vec<_>>()).collect();
        assert_eq!(pts.len(), 4 + 5 + 6);
        assert_eq!(pts[8], (100, 99, 0.3));
    }

    #[test]
    fn dotted_override_creates_path() {
        let mut v = serde_json::json!({"a": 1});
        apply_override(&mut v, "pow.gamma=0.5").unwrap();
        apply_override(&mut v, "name=hello").unwrap();
        assert_eq!(v, serde_json::json!({"a": 1, "pow": {"gamma": 0.5}, "name": "hello"}));
    }
}
