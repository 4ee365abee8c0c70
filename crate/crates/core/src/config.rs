//! Render configuration: a TOML file whose length-like keys carry their
//! unit in the name (`*_voxels` in coarse or fine voxels, `*_deg` in
//! degrees) and are converted to world units against the fitted grid.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use glam::DVec3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::camera::Camera;
use crate::grid::GridSpec;
use crate::jumpflood::JfaParams;
use crate::reference::ReferenceParams;
use crate::refine::RefineParams;
use crate::shadower::ShadowParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
    #[error("cannot load mesh for object `{object}`: {source}")]
    Mesh {
        object: String,
        source: crate::geometry::ObjError,
    },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

/// One scene object: an OBJ mesh placed by a translation, optionally
/// moving by a fixed offset every frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    pub mesh: PathBuf,
    #[serde(default)]
    pub translate: [f64; 3],
    #[serde(default)]
    pub translate_per_frame: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraConfig {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            position: [0.0, 4.0, 6.0],
            look_at: [0.0, 0.0, 0.0],
            fov_deg: 45.0,
            width: 128,
            height: 128,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    /// Static OBJ scene, loaded in addition to `object`.
    pub scene: Option<PathBuf>,
    pub object: BTreeMap<String, ObjectConfig>,
    pub frames: u64,
    pub rng_seed: u64,
    pub out_dir: PathBuf,

    /// Coarse voxels along the longest axis of the grid bounds.
    pub coarse_resolution: usize,
    pub fine_factor: usize,
    pub supersample: usize,
    /// Grid bounds; defaults to the scene bounds over all frames.
    pub bounds_min: Option<[f64; 3]>,
    pub bounds_max: Option<[f64; 3]>,

    pub beta_voxels: f64,
    pub d_voxels: f64,
    pub alpha: f64,
    pub rays_per_texel: u32,

    pub epsilon_voxels: f64,
    pub max_steps: u32,
    pub max_step_voxels: f64,
    pub light_dir: [f64; 3],
    pub light_angular_radius_deg: f64,
    pub jitter_voxels: f64,
    pub history_blend: f64,
    /// World units; defaults to the grid diagonal.
    pub t_max: Option<f64>,

    pub reference_samples: u32,
    /// Frames on which a reference image and metrics are produced.
    pub reference_frames: Vec<u64>,
    pub penumbra_tau: f64,
    pub bench_resolutions: Vec<usize>,
    pub camera: CameraConfig,

    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            scene: None,
            object: BTreeMap::new(),
            frames: 1,
            rng_seed: 1,
            out_dir: PathBuf::from("out"),
            coarse_resolution: 64,
            fine_factor: 2,
            supersample: 1,
            bounds_min: None,
            bounds_max: None,
            beta_voxels: 0.5,
            d_voxels: 4.0,
            alpha: 0.9,
            rays_per_texel: 8,
            epsilon_voxels: 1.0,
            max_steps: 128,
            max_step_voxels: 4.0,
            light_dir: [0.3, 1.0, 0.2],
            light_angular_radius_deg: 3.0,
            jitter_voxels: 1.0,
            history_blend: 0.9,
            t_max: None,
            reference_samples: 256,
            reference_frames: Vec::new(),
            penumbra_tau: 0.05,
            bench_resolutions: vec![32, 64],
            camera: CameraConfig::default(),
            base_dir: PathBuf::new(),
        }
    }
}

impl RenderConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { source, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    /// Parses and validates; relative paths stay relative to the working
    /// directory.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: PathBuf::new(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.scene.is_none() && self.object.is_empty() {
            return Err(invalid("scene", "no scene file and no objects"));
        }
        if self.frames == 0 {
            return Err(invalid("frames", "must be at least 1"));
        }
        if self.coarse_resolution < 8 {
            return Err(invalid("coarse_resolution", "must be at least 8"));
        }
        if self.fine_factor < 1 {
            return Err(invalid("fine_factor", "must be at least 1"));
        }
        if self.supersample < 1 {
            return Err(invalid("supersample", "must be at least 1"));
        }
        match (self.bounds_min, self.bounds_max) {
            (None, None) => {}
            (Some(lo), Some(hi)) => {
                if !(0..3).all(|a| lo[a].is_finite() && hi[a].is_finite() && lo[a] < hi[a]) {
                    return Err(invalid(
                        "bounds_min",
                        "must be finite and below bounds_max on every axis",
                    ));
                }
            }
            _ => return Err(invalid("bounds_min", "bounds_min and bounds_max go together")),
        }
        if !(self.beta_voxels >= 0.0 && self.beta_voxels < 3f64.sqrt()) {
            return Err(invalid("beta_voxels", "must be in [0, sqrt 3)"));
        }
        if !(self.d_voxels >= 1.0 && self.d_voxels.is_finite()) {
            return Err(invalid("d_voxels", "must be at least one fine voxel"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("alpha", "must be in [0, 1]"));
        }
        if self.rays_per_texel == 0 {
            return Err(invalid("rays_per_texel", "must be at least 1"));
        }
        if !(self.epsilon_voxels >= 1.0 && self.epsilon_voxels.is_finite()) {
            return Err(invalid("epsilon_voxels", "must be at least one fine voxel"));
        }
        if self.max_steps == 0 {
            return Err(invalid("max_steps", "must be at least 1"));
        }
        if !(self.max_step_voxels >= self.epsilon_voxels && self.max_step_voxels.is_finite()) {
            return Err(invalid("max_step_voxels", "must be at least epsilon_voxels"));
        }
        let light = DVec3::from_array(self.light_dir);
        if !(light.is_finite() && light.length() > 0.0) {
            return Err(invalid("light_dir", "must be a finite non-zero vector"));
        }
        if !(self.light_angular_radius_deg > 0.0 && self.light_angular_radius_deg < 90.0) {
            return Err(invalid("light_angular_radius_deg", "must be in (0, 90)"));
        }
        if !(self.jitter_voxels >= 0.0 && self.jitter_voxels.is_finite()) {
            return Err(invalid("jitter_voxels", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.history_blend) {
            return Err(invalid("history_blend", "must be in [0, 1)"));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("t_max", "must be positive"));
            }
        }
        if self.reference_samples == 0 {
            return Err(invalid("reference_samples", "must be at least 1"));
        }
        if let Some(f) = self.reference_frames.iter().find(|&&f| f >= self.frames) {
            return Err(invalid("reference_frames", format!("frame {f} is past the last frame")));
        }
        if !(self.penumbra_tau > 0.0 && self.penumbra_tau < 0.5) {
            return Err(invalid("penumbra_tau", "must be in (0, 0.5)"));
        }
        if self.bench_resolutions.iter().any(|&r| r < 8) {
            return Err(invalid("bench_resolutions", "every entry must be at least 8"));
        }
        if !self.camera().is_valid() {
            return Err(invalid(
                "camera",
                "needs distinct position and look_at, fov in (0, 180) and a non-empty image",
            ));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, excluding `out_dir`.
    pub fn config_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("out_dir");
        }
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    pub fn camera(&self) -> Camera {
        let c = &self.camera;
        Camera {
            position: DVec3::from_array(c.position),
            look_at: DVec3::from_array(c.look_at),
            vfov: c.fov_deg.to_radians(),
            width: c.width,
            height: c.height,
        }
    }

    pub fn light_dir(&self) -> DVec3 {
        DVec3::from_array(self.light_dir).normalize()
    }

    pub fn jfa_params(&self, coarse: &GridSpec) -> JfaParams {
        JfaParams {
            beta: self.beta_voxels * coarse.voxel_size,
        }
    }

    pub fn refine_params(&self, fine: &GridSpec) -> RefineParams {
        RefineParams {
            d: self.d_voxels * fine.voxel_size,
            alpha: self.alpha,
            rays_per_texel: self.rays_per_texel,
            fine_spec: *fine,
            rng_seed: self.rng_seed,
        }
    }

    pub fn shadow_params(&self, fine: &GridSpec) -> ShadowParams {
        ShadowParams {
            epsilon: self.epsilon_voxels * fine.voxel_size,
            max_steps: self.max_steps,
            max_step_size: self.max_step_voxels * fine.voxel_size,
            light_dir: self.light_dir(),
            light_angular_radius: self.light_angular_radius_deg.to_radians(),
            jitter_amplitude: self.jitter_voxels * fine.voxel_size,
            history_blend: self.history_blend,
            t_max: self.t_max.unwrap_or_else(|| fine.diagonal()),
        }
    }

    pub fn reference_params(&self, fine: &GridSpec) -> ReferenceParams {
        ReferenceParams {
            samples: self.reference_samples,
            light_dir: self.light_dir(),
            light_angular_radius: self.light_angular_radius_deg.to_radians(),
            rng_seed: self.rng_seed,
            t_max: self.t_max.unwrap_or_else(|| fine.diagonal()),
        }
    }
}
