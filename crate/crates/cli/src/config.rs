//! Run configuration file and `--set` overrides.

use std::path::{Path, PathBuf};

use rirfit::fit::FitConfig;
use rirfit::render::RenderConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Sections searched, in order, for an undotted override key that is not a
/// top-level field.
const SECTIONS: [&str; 4] = ["fit", "render", "grid", "transfer"];

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset root holding `index.json`.
    pub dataset: Option<PathBuf>,
    /// Room geometry; defaults to the dataset's room.
    pub room: Option<PathBuf>,
    /// Checkpoint directory to render or evaluate from.
    pub checkpoint: Option<PathBuf>,
    /// Source position. For `fit` it skips localization; for renders it
    /// moves the fitted source.
    pub source: Option<[f64; 3]>,
    pub listeners: Vec<[f64; 3]>,
    pub render: RenderConfig,
    pub fit: FitConfig,
    pub grid: GridSection,
    /// Directory holding an HRIR `index.json`.
    pub hrir_dir: Option<PathBuf>,
    /// Columns are the head's front, left and up axes.
    pub head_orientation: Option<[[f64; 3]; 3]>,
    /// Dry mono WAV for `render-music`.
    pub dry_audio: Option<PathBuf>,
    pub transfer: TransferSection,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct GridSection {
    pub z: f64,
    pub resolution: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { z: 1.2, resolution: 0.25 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct TransferSection {
    /// Checkpoint providing the surface response.
    pub from: Option<PathBuf>,
    pub from_surface: Option<u32>,
    pub to_surface: Option<u32>,
}

impl RunConfig {
    /// Read `path`, apply `overrides` and resolve relative paths against the
    /// file's directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        let mut value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let mut cfg: RunConfig = serde_json::from_value(value)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.dataset,
            &mut cfg.room,
            &mut cfg.checkpoint,
            &mut cfg.hrir_dir,
            &mut cfg.dry_audio,
            &mut cfg.transfer.from,
            &mut cfg.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Apply one `key=value` override. Keys are dotted paths; an undotted key
/// that is not a top-level field is looked up in the known sections. Values
/// are parsed as JSON and fall back to plain strings.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{spec}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let defaults = serde_json::to_value(RunConfig::default()).expect("default config serializes");
    let mut path: Vec<&str> = key.split('.').collect();
    if path.len() == 1 && defaults.get(key).is_none() {
        let section = SECTIONS
            .iter()
            .find(|s| defaults[**s].get(key).is_some())
            .ok_or_else(|| CliError::Usage(format!("unknown configuration key `{key}`")))?;
        path.insert(0, section);
    }
    let mut node = root;
    for (i, part) in path.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Usage(format!("cannot set `{key}`: `{part}` has no parent object")))?;
        if i + 1 == path.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one part")
}
