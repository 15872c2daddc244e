//! Pipeline configuration: defaults, JSON file, command-line overrides.

use std::path::{Path, PathBuf};

use porescope::streamline::AngleMode;
use porescope::FluidProps;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeFormatName {
    /// `.raw` file with a `.json` sidecar
    #[default]
    Raw,
    /// directory of `slice_%04d.pgm`
    Pgm,
}

/// Everything a run depends on. Paths are stored as given; relative paths
/// read from a config file are resolved against that file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub volume: Option<PathBuf>,
    pub volume_format: VolumeFormatName,
    /// Cleaned mask; `analyze` and `flow` fall back to `<out>/mask.raw`.
    pub mask: Option<PathBuf>,
    pub nodal_csv: Option<PathBuf>,
    pub streamlines_csv: Option<PathBuf>,
    pub curves_csv: Option<PathBuf>,
    /// Grayscale values at or below this are pore.
    pub threshold: u32,
    pub voxel_size_um: f64,
    /// Section length along z; `None` treats the sample as one section.
    pub section_length_um: Option<f64>,
    pub fluid: FluidProps,
    pub min_component_voxels: usize,
    /// Pressure drop imposed across the network, Pa.
    pub delta_p_pa: f64,
    pub n_particles: usize,
    pub seed: u64,
    pub deviation_tol: f64,
    pub reference_points: usize,
    pub angle_mode: AngleMode,
    pub polar_bins: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            volume: None,
            volume_format: VolumeFormatName::Raw,
            mask: None,
            nodal_csv: None,
            streamlines_csv: None,
            curves_csv: None,
            threshold: 34,
            voxel_size_um: 6.25,
            section_length_um: None,
            fluid: FluidProps::default(),
            min_component_voxels: 64,
            delta_p_pa: 1000.0,
            n_particles: 2000,
            seed: 1,
            deviation_tol: 0.05,
            reference_points: 3,
            angle_mode: AngleMode::Axial,
            polar_bins: 36,
        }
    }
}

const PATH_KEYS: [&str; 6] = ["volume", "mask", "nodal_csv", "streamlines_csv", "curves_csv", "out"];

/// Merges `overlay` into `base`, recursing into objects.
fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Parses `key=value`; dotted keys address nested fields and the value is
/// read as JSON when it parses, otherwise as a string.
pub fn parse_assignment(s: &str) -> Result<Value, CliError> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| CliError::Input(format!("override `{s}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Input(format!("override `{s}` has an empty key")));
    }
    let mut value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    for part in key.rsplit('.') {
        let mut m = Map::new();
        m.insert(part.to_string(), value);
        value = Value::Object(m);
    }
    Ok(value)
}

impl PipelineConfig {
    /// Defaults, then the config file, then `overrides` in order.
    pub fn resolve(file: Option<&Path>, overrides: Vec<Value>) -> Result<Self, CliError> {
        let mut doc = serde_json::to_value(PipelineConfig::default()).expect("defaults serialise");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
            let mut v: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("config {} is not valid JSON: {e}", path.display())))?;
            if !v.is_object() {
                return Err(CliError::Input(format!("config {} must be a JSON object", path.display())));
            }
            let base = path.parent().unwrap_or(Path::new("."));
            for key in PATH_KEYS {
                if let Some(Value::String(p)) = v.get_mut(key) {
                    let pb = PathBuf::from(&*p);
                    if pb.is_relative() {
                        *p = base.join(pb).to_string_lossy().into_owned();
                    }
                }
            }
            merge(&mut doc, v);
        }
        for o in overrides {
            merge(&mut doc, o);
        }
        let cfg: PipelineConfig =
            serde_json::from_value(doc).map_err(|e| CliError::Input(format!("invalid configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, why: String| Err(CliError::Input(format!("config field `{field}`: {why}")));
        if self.threshold > 255 {
            return bad("threshold", format!("must be in [0, 255], got {}", self.threshold));
        }
        for (name, v) in [
            ("voxel_size_um", self.voxel_size_um),
            ("delta_p_pa", self.delta_p_pa),
            ("section_length_um", self.section_length_um.unwrap_or(1.0)),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name, format!("must be positive, got {v}"));
            }
        }
        if !(self.deviation_tol >= 0.0) {
            return bad("deviation_tol", format!("must be non-negative, got {}", self.deviation_tol));
        }
        if self.reference_points < 2 {
            return bad("reference_points", "must be at least 2".into());
        }
        if self.polar_bins == 0 {
            return bad("polar_bins", "must be at least 1".into());
        }
        self.fluid.validate().map_err(|e| CliError::Input(format!("config field `fluid`: {e}")))
    }

    /// Compact JSON with fields in declaration order.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    /// Lower-case hex SHA-256 of [`canonical_json`](Self::canonical_json).
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn threshold_u8(&self) -> u8 {
        self.threshold as u8
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
