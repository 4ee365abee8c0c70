//! Ground-truth soft shadows by distributed ray tracing over the light's
//! cone, plus the image metrics used to compare against them.

use glam::DVec3;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::geometry::{Bvh, Ray};
use crate::image::{ImageError, VisibilityImage};
use crate::rng::{cone_direction, keyed_stream, Purpose};

/// Offset along the surface normal before shadow rays are cast.
pub const SURFACE_OFFSET: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceParams {
    /// Shadow rays per pixel.
    pub samples: u32,
    /// Unit vector toward the light.
    pub light_dir: DVec3,
    pub light_angular_radius: f64,
    pub rng_seed: u64,
    pub t_max: f64,
}

/// Fraction of `params.samples` shadow rays, uniform over the light's solid
/// angle, that escape within `t_max`.
pub fn reference_visibility(bvh: &Bvh, p: DVec3, normal: DVec3, params: &ReferenceParams, rng: &mut impl Rng) -> f64 {
    let origin = p + SURFACE_OFFSET * normal;
    let axis = params.light_dir.normalize();
    let cos_max = params.light_angular_radius.cos();
    let mut unoccluded = 0u32;
    for _ in 0..params.samples {
        let dir = cone_direction(axis, cos_max, rng.random(), rng.random());
        let ray = Ray::new(origin, dir).with_range(0.0, params.t_max);
        if !bvh.occluded(&ray) {
            unoccluded += 1;
        }
    }
    unoccluded as f64 / params.samples as f64
}

/// Reference visibility for every pixel; background pixels are 1.
pub fn render_reference(bvh: &Bvh, camera: &Camera, params: &ReferenceParams) -> VisibilityImage {
    let (w, h) = (camera.width, camera.height);
    let values = (0..w * h)
        .into_par_iter()
        .map(|i| match camera.trace(bvh, i % w, i / w) {
            Some(s) => {
                let mut rng = keyed_stream(params.rng_seed, Purpose::ReferenceCone, i as u64);
                reference_visibility(bvh, s.position, s.normal, params, &mut rng)
            }
            None => 1.0,
        })
        .collect();
    VisibilityImage::from_values(w, h, values).expect("sized from camera")
}

pub fn rmse(a: &VisibilityImage, b: &VisibilityImage) -> Result<f64, ImageError> {
    if a.size() != b.size() {
        return Err(ImageError::SizeMismatch(a.size(), b.size()));
    }
    let n = a.values().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / n as f64).sqrt())
}

/// Pixels strictly inside `(tau, 1 - tau)`.
pub fn penumbra_area(img: &VisibilityImage, tau: f64) -> usize {
    debug_assert!(tau > 0.0 && tau < 0.5);
    img.values().iter().filter(|&&v| v > tau && v < 1.0 - tau).count()
}

/// One comparison between an SDF render and the reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub penumbra_sdf: usize,
    pub penumbra_ref: usize,
    pub frames: u64,
    pub config_hash: String,
}

impl Metrics {
    pub fn compare(
        sdf: &VisibilityImage,
        reference: &VisibilityImage,
        tau: f64,
        frames: u64,
        config_hash: String,
    ) -> Result<Self, ImageError> {
        Ok(Self {
            rmse: rmse(sdf, reference)?,
            penumbra_sdf: penumbra_area(sdf, tau),
            penumbra_ref: penumbra_area(reference, tau),
            frames,
            config_hash,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metrics serialize")
    }
}
