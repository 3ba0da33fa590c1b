//! Run configuration: one TOML file plus `PLATERANGE_*` environment overrides.
//!
//! ```toml
//! out_dir = "out"
//! scenario = "scenarios/static_10m.toml"
//! seed = 7                     # replaces the scenario seed
//! state_table = "states.tsv"   # optional; built-in tables otherwise
//! markers = "markers.tsv"
//! designs = "designs.tsv"
//! state_override = "DEFAULT"   # optional
//! optical_fallback = false
//!
//! [camera]
//! lens = "040H"                # or f_px/width_px/height_px, or file = "camera.toml"
//! width_px = 2880
//!
//! [toggles]
//! pose = true
//! deep = true
//! kalman = true
//!
//! [kalman]                     # q, r, p0_d, p0_v, r_inflation
//! [scale]                      # s0, alpha, window
//! [inflation]                  # threshold, factor
//! [render]                     # background, ink, strip_text
//! ```
//!
//! An environment variable `PLATERANGE_A__B=value` sets key `b` of table `a`
//! (names are lower-cased). Values parse as TOML scalars when possible and
//! as strings otherwise. Relative paths resolve against the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::camera::{CameraModel, LensPreset, FULL_HEIGHT_PX};
use crate::error::{read_text, Error, Result};
use crate::range::InflationParams;
use crate::sim::{PipelineConfig, RenderParams, ScaleParams, Scenario, Toggles};
use crate::state_id::{DesignCatalog, MarkerCatalog};
use crate::track::KalmanParams;
use crate::typography::{StateTable, TypographyFractions};

pub const ENV_PREFIX: &str = "PLATERANGE_";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSettings {
    pub lens: Option<String>,
    pub f_px: Option<f64>,
    pub width_px: Option<u32>,
    pub height_px: Option<u32>,
    pub file: Option<PathBuf>,
}

impl CameraSettings {
    /// Resolution order: camera file, explicit focal length, lens preset,
    /// then the 040H preset at full resolution.
    pub fn resolve(&self) -> Result<CameraModel> {
        if let Some(p) = &self.file {
            return CameraModel::load(p);
        }
        if let Some(f) = self.f_px {
            let w = self.width_px.unwrap_or(crate::camera::FULL_WIDTH_PX);
            return CameraModel::new(f, w, self.height_px.unwrap_or(FULL_HEIGHT_PX));
        }
        let name = self.lens.as_deref().unwrap_or("040H");
        let preset = LensPreset::by_name(name).ok_or_else(|| Error::Config(format!("unknown lens {name:?}")))?;
        let mut cam = match self.width_px {
            Some(w) => preset.at_width(w)?,
            None => preset.full_resolution(),
        };
        if let Some(h) = self.height_px {
            cam.height_px = h;
        }
        cam.validate()?;
        Ok(cam)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub camera: CameraSettings,
    pub state_table: Option<PathBuf>,
    pub markers: Option<PathBuf>,
    pub designs: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub toggles: Toggles,
    pub kalman: KalmanParams,
    pub scale: ScaleParams,
    pub inflation: InflationParams,
    pub render: RenderParams,
    pub optical_fallback: bool,
    pub state_override: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            camera: CameraSettings::default(),
            state_table: None,
            markers: None,
            designs: None,
            scenario: None,
            out_dir: PathBuf::from("out"),
            seed: None,
            toggles: Toggles::default(),
            kalman: KalmanParams::default(),
            scale: ScaleParams::default(),
            inflation: InflationParams::default(),
            render: RenderParams::default(),
            optical_fallback: false,
            state_override: None,
        }
    }
}

impl RunConfig {
    /// Parses `text` after applying `env` overrides.
    pub fn parse_with_env<I, K, V>(text: &str, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        for (k, v) in env {
            if let Some(key) = k.as_ref().strip_prefix(ENV_PREFIX) {
                apply_override(&mut doc, key, v.as_ref())?;
            }
        }
        toml::Value::Table(doc)
            .try_into()
            .map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_env(text, std::iter::empty::<(String, String)>())
    }

    /// Reads the file, applies the process environment and resolves
    /// relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::parse_with_env(&read_text(path)?, std::env::vars())?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    /// Defaults plus the process environment, for runs without a file.
    pub fn from_env() -> Result<Self> {
        Self::parse_with_env("", std::env::vars())
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.camera.file);
        fix(&mut self.state_table);
        fix(&mut self.markers);
        fix(&mut self.designs);
        fix(&mut self.scenario);
        if self.out_dir.is_relative() {
            self.out_dir = base.join(&self.out_dir);
        }
    }

    /// Every referenced input file must exist.
    pub fn validate(&self) -> Result<()> {
        let files = [
            &self.camera.file,
            &self.state_table,
            &self.markers,
            &self.designs,
            &self.scenario,
        ];
        for p in files.into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::Config(format!("file not found: {}", p.display())));
            }
        }
        if self.scale.window == 0 || !(0.0..1.0).contains(&self.scale.alpha) || !(self.scale.s0 > 0.0) {
            return Err(Error::Config("scale needs s0 > 0, alpha in [0, 1), window >= 1".into()));
        }
        let k = self.kalman;
        if !(k.q >= 0.0 && k.r > 0.0 && k.p0_d > 0.0 && k.p0_v > 0.0 && k.r_inflation >= 1.0) {
            return Err(Error::Config("kalman needs q >= 0, r > 0, p0 > 0, r_inflation >= 1".into()));
        }
        Ok(())
    }

    pub fn pipeline(&self) -> Result<PipelineConfig> {
        self.validate()?;
        let mut p = PipelineConfig::new(self.camera.resolve()?);
        if let Some(path) = &self.state_table {
            p.states = StateTable::load(path, TypographyFractions::default())?;
        }
        if let Some(path) = &self.markers {
            p.markers = MarkerCatalog::load(path)?;
        }
        if let Some(path) = &self.designs {
            p.designs = DesignCatalog::load(path)?;
        }
        p.toggles = self.toggles;
        p.kalman = self.kalman;
        p.scale = self.scale;
        p.inflation = self.inflation;
        p.render = self.render;
        p.optical_fallback = self.optical_fallback;
        p.state_override = self.state_override.clone();
        Ok(p)
    }

    /// The configured scenario with the seed override applied.
    pub fn load_scenario(&self) -> Result<Option<Scenario>> {
        let Some(path) = &self.scenario else {
            return Ok(None);
        };
        let mut sc = Scenario::load(path)?;
        if let Some(seed) = self.seed {
            sc.seed = seed;
        }
        Ok(Some(sc))
    }
}

fn apply_override(doc: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let parts: Vec<String> = key.split("__").map(|s| s.to_ascii_lowercase()).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override {ENV_PREFIX}{key}")));
    }
    let (last, path) = parts.split_last().expect("split yields one part");
    let mut table = doc;
    for p in path {
        let entry = table
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {ENV_PREFIX}{key}: {p} is not a table")))?;
    }
    table.insert(last.clone(), scalar(value));
    Ok(())
}

fn scalar(s: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {s}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .filter(|v| !v.is_table())
        .unwrap_or_else(|| toml::Value::String(s.to_string()))
}
