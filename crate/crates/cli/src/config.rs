//! JSON config files. Command-line flags override config values key by key.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::Failure;

/// Keys of the global flags.
pub const GLOBAL_KEYS: [&str; 4] = ["output", "json", "quiet", "threads"];

pub fn load(path: &Path) -> Result<Map<String, Value>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Failure::Invalid(format!(
            "{}: config must be a JSON object",
            path.display()
        ))),
        Err(e) => Err(Failure::Invalid(format!("{}: {e}", path.display()))),
    }
}

/// Overlays the non-null fields of `flags` on `config` and reads the result as `T`.
pub fn merge<F: Serialize, T: DeserializeOwned>(flags: &F, mut config: Map<String, Value>) -> Result<T, Failure> {
    if let Ok(Value::Object(f)) = serde_json::to_value(flags) {
        for (k, v) in f {
            if !v.is_null() {
                config.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(config)).map_err(|e| Failure::Invalid(format!("config: {e}")))
}

pub fn require<T>(value: Option<T>, name: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Invalid(format!("missing required value --{name}")))
}

/// `a:b:n`.
pub fn parse_range(text: &str) -> Result<(f64, f64, usize), Failure> {
    let bad = || Failure::Invalid(format!("expected a:b:n, got {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts[..] else { return Err(bad()) };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    Ok((a, b, n))
}
