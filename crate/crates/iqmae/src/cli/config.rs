//! Config resolution: JSON file, `--set` dotted overrides, and the
//! `resolved_config.json` provenance artifact.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::{Error, Result};

pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.json";

/// Deep-merges `overlay` onto `base`: objects merge key by key,
/// everything else replaces.
pub fn merge(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// Parses one `--set key=value` pair into a nested single-key object.
/// The value is read as JSON when it parses (numbers, booleans,
/// arrays) and as a bare string otherwise.
pub fn parse_set(pair: &str) -> Result<Value> {
    let (key, raw) = pair
        .split_once('=')
        .ok_or_else(|| Error::config(format!("--set needs key=value, got {pair:?}")))?;
    if key.is_empty() {
        return Err(Error::config(format!("--set has an empty key: {pair:?}")));
    }
    let leaf: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut v = leaf;
    for part in key.rsplit('.') {
        if part.is_empty() {
            return Err(Error::config(format!("--set key has an empty segment: {key:?}")));
        }
        v = serde_json::json!({ part: v });
    }
    Ok(v)
}

/// Folds defaults, an optional config file, and `--set` pairs into one
/// typed config. Unknown keys inside typed sections are rejected by
/// their deserializers.
pub fn resolve<T, D>(defaults: &D, config: Option<&Path>, sets: &[String]) -> Result<T>
where
    T: DeserializeOwned,
    D: Serialize,
{
    let mut v = serde_json::to_value(defaults)?;
    if let Some(path) = config {
        let file: Value = serde_json::from_reader(fs::File::open(path)?)?;
        merge(&mut v, &file);
    }
    for pair in sets {
        merge(&mut v, &parse_set(pair)?);
    }
    Ok(serde_json::from_value(v)?)
}

/// Records the fully resolved configuration of a run in its output
/// directory, so the run can be reproduced from the artifact alone.
pub fn write_resolved(dir: &Path, resolved: &impl Serialize) -> Result<()> {
    fs::create_dir_all(dir)?;
    serde_json::to_writer_pretty(fs::File::create(dir.join(RESOLVED_CONFIG_FILE))?, resolved)?;
    Ok(())
}
