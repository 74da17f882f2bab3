//! JSON configuration with command-line overrides.
//!
//! A command reads an optional JSON object, applies flag overrides on top of
//! it and deserialises the result into its configuration type, whose missing
//! keys take their defaults. Two other shapes are accepted:
//!
//! - a run manifest written by an earlier run (its `resolved_config` is used);
//! - a sweep file
//!   `{"sweep_var": "...", "from": a, "to": b, "points": n, "params": {...}}`.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Keys of the protocol parameters, collected under `security` when they
/// appear at the top level of a sweep file.
const SECURITY_KEYS: [&str; 8] = ["N", "q_x", "eps_all", "eps_d", "eps_e", "t_e", "e_q", "v"];

pub fn load(path: Option<&Path>) -> Result<Map<String, Value>, CliError> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    match serde_json::from_str::<Value>(&text)? {
        Value::Object(mut map) => {
            if let Some(Value::Object(resolved)) = map.remove("resolved_config") {
                return Ok(resolved);
            }
            Ok(map)
        }
        _ => Err(CliError::Config(format!(
            "{}: expected a JSON object",
            path.display()
        ))),
    }
}

/// Rewrites a sweep file into the command's own keys.
/// `axes` maps a sweep variable to its `(from, to)` keys.
pub fn expand_sweep(
    mut map: Map<String, Value>,
    axes: &[(&str, &str, &str)],
    nest_security: bool,
) -> Result<Map<String, Value>, CliError> {
    let Some(var) = map.remove("sweep_var") else {
        return Ok(map);
    };
    let var = var
        .as_str()
        .ok_or_else(|| CliError::Config("sweep_var must be a string".into()))?
        .to_string();
    let (_, from_key, to_key) = axes
        .iter()
        .find(|(name, _, _)| *name == var)
        .ok_or_else(|| CliError::Config(format!("unsupported sweep variable {var:?}")))?;
    let mut out = Map::new();
    if let Some(Value::Object(params)) = map.remove("params") {
        let mut security = Map::new();
        for (k, v) in params {
            if nest_security && SECURITY_KEYS.contains(&k.as_str()) {
                security.insert(k, v);
            } else {
                out.insert(k, v);
            }
        }
        if !security.is_empty() {
            out.insert("security".into(), Value::Object(security));
        }
    }
    if let Some(v) = map.remove("from") {
        out.insert((*from_key).into(), v);
    }
    if let Some(v) = map.remove("to") {
        out.insert((*to_key).into(), v);
    }
    if let Some(v) = map.remove("points") {
        out.insert("points".into(), v);
    }
    if let Some(k) = map.keys().next() {
        return Err(CliError::Config(format!("unknown sweep key {k:?}")));
    }
    Ok(out)
}

pub fn set(map: &mut Map<String, Value>, key: &str, value: impl Into<Value>) {
    map.insert(key.to_string(), value.into());
}

pub fn resolve<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T, CliError> {
    Ok(serde_json::from_value(Value::Object(map))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sweep_spec_is_expanded() {
        let spec = json!({
            "sweep_var": "voa_loss_db", "from": 0, "to": 50, "points": 200,
            "params": {"N": 1e9, "nu": 25}
        });
        let Value::Object(map) = spec else {
            unreachable!()
        };
        let out =
            expand_sweep(map, &[("voa_loss_db", "loss_from_db", "loss_to_db")], true).unwrap();
        assert_eq!(out["loss_to_db"], 50);
        assert_eq!(out["security"]["N"], 1e9);
        assert_eq!(out["nu"], 25);
    }

    #[test]
    fn unknown_sweep_variable() {
        let Value::Object(map) = json!({"sweep_var": "nope"}) else {
            unreachable!()
        };
        assert!(expand_sweep(map, &[], false).is_err());
    }
}
