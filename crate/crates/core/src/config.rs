//! TOML configuration: one section per component, every key optional.
//!
//! ```toml
//! [population]
//! mean_lifespan = 7.481
//!
//! [filter]
//! max_globals = 25
//! ```
//!
//! Command-line overrides use `section.key=value`, with the value parsed as
//! a TOML literal (falling back to a bare string).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::TgospaParams;
use crate::model::{
    BirthDesign, ClutterParams, DetectionParams, IntrinsicsParams, ModelParams, MotionParams, PopulationParams,
};
use crate::mot::GtFilter;
use crate::pmbm::FilterConfig;
use crate::sort::SortConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    pub frames: usize,
    pub seed: u64,
    pub image_width: f64,
    pub image_height: f64,
    pub frame_rate: f64,
    /// Expected population at frame 1; `L·η` when absent.
    pub initial_mean: Option<f64>,
    pub name: String,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            frames: 1000,
            seed: 1,
            image_width: 1920.0,
            image_height: 1080.0,
            frame_rate: 30.0,
            initial_mean: None,
            name: "SIM-01".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentifyParams {
    /// Detector suffix selecting sequences (`MOT17-02-FRCNN`); ignored when
    /// no sequence name carries it.
    pub detector: String,
    pub pedestrians_only: bool,
    pub considered_only: bool,
    pub visibility_bins: usize,
    /// Pairs must overlap by more than this to count as a detection.
    pub min_iou: f64,
}

impl Default for IdentifyParams {
    fn default() -> Self {
        Self {
            detector: "FRCNN".into(),
            pedestrians_only: true,
            considered_only: true,
            visibility_bins: 10,
            min_iou: 0.0,
        }
    }
}

impl IdentifyParams {
    pub fn gt_filter(&self) -> GtFilter {
        GtFilter {
            pedestrians_only: self.pedestrians_only,
            considered_only: self.considered_only,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub camera: IntrinsicsParams,
    pub motion: MotionParams,
    pub population: PopulationParams,
    pub detection: DetectionParams,
    pub clutter: ClutterParams,
    pub birth: BirthDesign,
    pub filter: FilterConfig,
    pub sort: SortConfig,
    pub simulate: SimulateParams,
    pub metrics: TgospaParams,
    pub identify: IdentifyParams,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&crate::mot::read(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model(&self) -> ModelParams {
        ModelParams {
            camera: self.camera.clone(),
            motion: self.motion.clone(),
            population: self.population.clone(),
            detection: self.detection.clone(),
            clutter: self.clutter.clone(),
            birth: self.birth.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model().validate()?;
        self.filter.validate()?;
        self.sort.validate()?;
        self.metrics.validate()?;
        if self.identify.visibility_bins == 0 {
            return Err(Error::Config("identify.visibility_bins must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.identify.min_iou) {
            return Err(Error::Config("identify.min_iou must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Applies one `section.key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected section.key=value, got `{assignment}`")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("expected section.key, got `{path}`")))?;
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));

        let mut root = toml::Value::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let table = root
            .get_mut(section)
            .and_then(toml::Value::as_table_mut)
            .ok_or_else(|| Error::Config(format!("unknown section `{section}`")))?;
        table.insert(key.to_string(), value);
        *self = root
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("{path}: {e}")))?;
        Ok(())
    }
}
