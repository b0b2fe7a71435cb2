//! Run configuration: one JSON document per run, with command-line flags
//! overriding individual fields.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
pub struct Globals {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Primary output path; secondary files are named after its stem.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

const GLOBAL_KEYS: [&str; 3] = ["seed", "out", "format"];

impl Globals {
    /// Output path and format, falling back to the extension of `out` and
    /// then to the command's defaults.
    pub fn output(&self, default_name: &str, default_format: Format) -> (PathBuf, Format) {
        let path = self.out.clone().unwrap_or_else(|| PathBuf::from(default_name));
        let format = self.format.unwrap_or_else(|| {
            match path.extension().and_then(|e| e.to_str()) {
                Some("json") => Format::Json,
                Some("csv") => Format::Csv,
                _ => default_format,
            }
        });
        (path, format)
    }
}

pub struct RunConfig {
    pub globals: Globals,
    fields: Map<String, Value>,
}

fn strip_nulls(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Map::new(),
    }
}

impl RunConfig {
    pub fn load(flags: Globals) -> CliResult<Self> {
        let mut fields = match &flags.config {
            Some(path) => read_object(path)?,
            None => Map::new(),
        };
        let mut global_fields: Map<String, Value> = GLOBAL_KEYS
            .iter()
            .filter_map(|k| fields.remove(*k).map(|v| (k.to_string(), v)))
            .collect();
        global_fields.extend(strip_nulls(serde_json::to_value(&flags).expect("flags serialize")));
        let mut globals: Globals = serde_json::from_value(Value::Object(global_fields))
            .map_err(|e| CliError::Validation(format!("config: {e}")))?;
        globals.config = flags.config;
        Ok(Self { globals, fields })
    }

    /// Command parameters: config fields overlaid with non-empty flags.
    pub fn params<P: Serialize + DeserializeOwned>(&self, flags: &P) -> CliResult<P> {
        let mut merged = self.fields.clone();
        merged.extend(strip_nulls(serde_json::to_value(flags).expect("flags serialize")));
        serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Validation(format!("config: {e}")))
    }
}

fn read_object(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::artifact(path, e))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::Validation(format!(
            "config {}: top level must be a JSON object",
            path.display()
        ))),
        Err(e) => Err(CliError::Validation(format!("config {}: {e}", path.display()))),
    }
}
