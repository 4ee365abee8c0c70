//! Soft shadows by sphere tracing the signed fine SDF toward a directional
//! light, with a closest-approach penumbra estimate between consecutive
//! samples, jittered march origins and an exponential temporal resolve.

use glam::DVec3;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::camera::Camera;
use crate::geometry::Bvh;
use crate::grid::ScalarGrid;
use crate::image::{ColorImage, VisibilityImage};
use crate::rng::{frame_key, keyed_stream, Purpose};

pub const ALBEDO: f64 = 0.8;
pub const AMBIENT: f64 = 0.15;
pub const BACKGROUND: [f64; 3] = [0.55, 0.65, 0.8];

#[derive(Debug, Error, PartialEq)]
pub enum ShadowError {
    #[error("epsilon {epsilon} is below one fine voxel ({voxel})")]
    Epsilon { epsilon: f64, voxel: f64 },
    #[error("max_steps must be at least 1")]
    MaxSteps,
    #[error("max_step_size {max_step} is below epsilon {epsilon}")]
    StepClamp { max_step: f64, epsilon: f64 },
    #[error("light angular radius must be in (0, pi/2), got {0}")]
    LightRadius(f64),
    #[error("history blend must be in [0, 1), got {0}")]
    HistoryBlend(f64),
    #[error("light direction must be non-zero")]
    LightDir,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadowParams {
    /// Termination distance, world units.
    pub epsilon: f64,
    pub max_steps: u32,
    pub max_step_size: f64,
    /// Unit vector pointing toward the light.
    pub light_dir: DVec3,
    /// Angular radius of the light, radians.
    pub light_angular_radius: f64,
    pub jitter_amplitude: f64,
    /// Weight of the previous frame in the temporal resolve.
    pub history_blend: f64,
    pub t_max: f64,
}

impl ShadowParams {
    /// `tan(light_angular_radius)`.
    pub fn penumbra_w(&self) -> f64 {
        self.light_angular_radius.tan()
    }

    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self, fine_voxel: f64) -> Result<(), ShadowError> {
        if !(self.epsilon >= fine_voxel) {
            return Err(ShadowError::Epsilon {
                epsilon: self.epsilon,
                voxel: fine_voxel,
            });
        }
        if self.max_steps == 0 {
            return Err(ShadowError::MaxSteps);
        }
        if !(self.max_step_size >= self.epsilon) {
            return Err(ShadowError::StepClamp {
                max_step: self.max_step_size,
                epsilon: self.epsilon,
            });
        }
        if !(self.light_angular_radius > 0.0 && self.light_angular_radius < std::f64::consts::FRAC_PI_2) {
            return Err(ShadowError::LightRadius(self.light_angular_radius));
        }
        if !(0.0..1.0).contains(&self.history_blend) {
            return Err(ShadowError::HistoryBlend(self.history_blend));
        }
        if !(self.light_dir.length() > 0.0) {
            return Err(ShadowError::LightDir);
        }
        Ok(())
    }
}

/// Trilinear SDF lookup, clamped to the border texels outside the grid.
#[inline]
pub fn sample_sdf(grid: &ScalarGrid, p: DVec3) -> f64 {
    grid.sample_trilinear(p)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadowMarch {
    pub visibility: f64,
    /// SDF samples taken.
    pub steps: u32,
}

/// Visibility of the light from `origin`. The march starts at
/// `epsilon + jitter * jitter_amplitude` along the light direction, with
/// `jitter` in `[0, 1)`.
pub fn soft_shadow_visibility(sdf: &ScalarGrid, origin: DVec3, params: &ShadowParams, jitter: f64) -> ShadowMarch {
    march(sdf, origin, params, jitter, |_, _| {})
}

fn march(
    sdf: &ScalarGrid,
    origin: DVec3,
    params: &ShadowParams,
    jitter: f64,
    mut on_sample: impl FnMut(f64, f64),
) -> ShadowMarch {
    let w = params.penumbra_w();
    let dir = params.light_dir;
    let mut t = params.epsilon + jitter * params.jitter_amplitude;
    let mut res: f64 = 1.0;
    let mut h_prev = f64::INFINITY;
    let mut steps = 0;
    while steps < params.max_steps {
        let h = sample_sdf(sdf, origin + t * dir);
        steps += 1;
        on_sample(t, h);
        if h < params.epsilon {
            return ShadowMarch { visibility: 0.0, steps };
        }
        // closest approach to the sphere of radius h, given the previous one
        let y = if h_prev.is_finite() {
            h * h / (2.0 * h_prev)
        } else {
            0.0
        };
        let d_close = (h * h - y * y).max(0.0).sqrt();
        let along = (t - y).max(0.0);
        if along > 0.0 {
            res = res.min(d_close / (w * along));
        }
        h_prev = h;
        t += h.clamp(params.epsilon, params.max_step_size);
        if t > params.t_max {
            break;
        }
    }
    ShadowMarch {
        visibility: res.clamp(0.0, 1.0),
        steps,
    }
}

#[derive(Clone, Debug)]
pub struct RenderedFrame {
    pub color: ColorImage,
    /// Temporally resolved visibility.
    pub visibility: VisibilityImage,
    /// This frame's visibility before blending with history.
    pub current: VisibilityImage,
    /// Largest number of SDF samples any shadow march took.
    pub max_steps_taken: u32,
}

/// Lambert shading with SDF soft-shadow visibility for one frame.
///
/// Primary visibility is exact (BVH camera rays). Each hit point is lifted
/// by `epsilon` along its normal before marching. The visibility buffer is
/// blended as `h * history + (1 - h) * current` when `history` is given.
pub fn render_frame(
    bvh: &Bvh,
    sdf: &ScalarGrid,
    camera: &Camera,
    params: &ShadowParams,
    frame: u64,
    rng_seed: u64,
    history: Option<&VisibilityImage>,
) -> RenderedFrame {
    let (w, h) = (camera.width, camera.height);
    let light = params.light_dir.normalize();
    let params = ShadowParams {
        light_dir: light,
        ..*params
    };
    let per_pixel: Vec<(f64, f64, u32)> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let Some(surface) = camera.trace(bvh, i % w, i / w) else {
                return (1.0, -1.0, 0);
            };
            let jitter = keyed_stream(rng_seed, Purpose::ShadowJitter, frame_key(i, frame)).random::<f64>();
            let origin = surface.position + params.epsilon * surface.normal;
            let m = soft_shadow_visibility(sdf, origin, &params, jitter);
            (m.visibility, surface.normal.dot(light).max(0.0), m.steps)
        })
        .collect();

    let current_values: Vec<f64> = per_pixel.iter().map(|p| p.0).collect();
    let current = VisibilityImage::from_values(w, h, current_values).expect("sized from camera");
    let visibility = match history {
        Some(prev) if prev.size() == current.size() => {
            let hb = params.history_blend;
            let blended = prev
                .values()
                .iter()
                .zip(current.values())
                .map(|(&p, &c)| hb * p + (1.0 - hb) * c)
                .collect();
            VisibilityImage::from_values(w, h, blended).expect("same size")
        }
        _ => current.clone(),
    };

    let pixels = per_pixel
        .iter()
        .zip(visibility.values())
        .map(|(&(_, n_dot_l, _), &v)| {
            if n_dot_l < 0.0 {
                BACKGROUND
            } else {
                [ALBEDO * (AMBIENT + (1.0 - AMBIENT) * n_dot_l * v); 3]
            }
        })
        .collect();
    RenderedFrame {
        color: ColorImage::new(w, h, pixels).expect("sized from camera"),
        visibility,
        current,
        max_steps_taken: per_pixel.iter().map(|p| p.2).max().unwrap_or(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{shapes, TriangleMesh};
    use crate::grid::GridSpec;

    fn params() -> ShadowParams {
        ShadowParams {
            epsilon: 0.1,
            max_steps: 64,
            max_step_size: 0.3,
            light_dir: DVec3::Y,
            light_angular_radius: 3f64.to_radians(),
            jitter_amplitude: 0.1,
            history_blend: 0.8,
            t_max: 10.0,
        }
    }

    /// Analytic SDF of the ground plane y = 0 and, optionally, a slab
    /// occluder `y in [2, 2.5]` over `x < 0`.
    fn field(with_occluder: bool) -> ScalarGrid {
        let spec = GridSpec::new([40, 40, 8], DVec3::new(-2.0, -0.5, -0.4), 0.1).unwrap();
        ScalarGrid::from_fn(spec, |i| {
            let p = spec.center_of(i);
            let ground = p.y;
            if !with_occluder {
                return ground;
            }
            let q = DVec3::new(p.x.max(0.0), (p.y - 2.25).abs() - 0.25, 0.0);
            let slab = if p.x < 0.0 && q.y < 0.0 {
                q.y.max(p.x)
            } else {
                q.max(DVec3::ZERO).length()
            };
            ground.min(slab)
        })
    }

    #[test]
    fn validation() {
        let p = params();
        assert!(p.validate(0.1).is_ok());
        assert!(matches!(p.validate(0.2), Err(ShadowError::Epsilon { .. })));
        assert_eq!(
            ShadowParams { max_steps: 0, ..p }.validate(0.1),
            Err(ShadowError::MaxSteps)
        );
        assert!(matches!(
            ShadowParams {
                max_step_size: 0.05,
                ..p
            }
            .validate(0.1),
            Err(ShadowError::StepClamp { .. })
        ));
        assert!(matches!(
            ShadowParams {
                history_blend: 1.0,
                ..p
            }
            .validate(0.1),
            Err(ShadowError::HistoryBlend(_))
        ));
        assert!(matches!(
            ShadowParams {
                light_angular_radius: 0.0,
                ..p
            }
            .validate(0.1),
            Err(ShadowError::LightRadius(_))
        ));
    }

    #[test]
    fn open_sky_is_lit() {
        let sdf = field(false);
        let m = soft_shadow_visibility(&sdf, DVec3::new(0.0, 0.1, 0.0), &params(), 0.5);
        assert_eq!(m.visibility, 1.0);
    }

    #[test]
    fn under_occluder_is_dark() {
        let sdf = field(true);
        let m = soft_shadow_visibility(&sdf, DVec3::new(-1.0, 0.1, 0.0), &params(), 0.0);
        assert_eq!(m.visibility, 0.0);
        assert!(m.steps <= params().max_steps);
    }

    #[test]
    fn visibility_rises_across_the_edge() {
        let sdf = field(true);
        let p = ShadowParams {
            light_angular_radius: 10f64.to_radians(),
            t_max: 3.0,
            ..params()
        };
        let mut last = 0.0;
        for k in 0..30 {
            let x = -0.5 + 0.05 * k as f64;
            let v = soft_shadow_visibility(&sdf, DVec3::new(x, 0.1, 0.0), &p, 0.0).visibility;
            assert!(v >= last - 0.02, "dropped at x = {x}: {v} < {last}");
            last = v;
        }
        assert_eq!(last, 1.0);
    }

    #[test]
    fn steps_respect_budget_and_clamp() {
        let sdf = field(true);
        let p = ShadowParams {
            max_steps: 7,
            ..params()
        };
        for x in [-1.0, 0.05, 0.3, 1.0] {
            let mut ts = Vec::new();
            let m = march(&sdf, DVec3::new(x, 0.1, 0.0), &p, 0.3, |t, _| ts.push(t));
            assert!(m.steps <= 7);
            assert_eq!(ts.len(), m.steps as usize);
            for pair in ts.windows(2) {
                let dt = pair[1] - pair[0];
                assert!(dt <= p.max_step_size + 1e-12 && dt >= p.epsilon - 1e-12);
            }
        }
    }

    #[test]
    fn empty_scene_renders_background() {
        let bvh = Bvh::build(&TriangleMesh::empty());
        let spec = GridSpec::new([4, 4, 4], DVec3::ZERO, 1.0).unwrap();
        let sdf = ScalarGrid::filled(spec, f64::INFINITY);
        let cam = Camera {
            position: DVec3::new(0.0, 0.0, 5.0),
            look_at: DVec3::ZERO,
            vfov: 1.0,
            width: 8,
            height: 6,
        };
        let out = render_frame(
            &bvh,
            &sdf,
            &cam,
            &ShadowParams {
                epsilon: 1.0,
                max_step_size: 1.0,
                ..params()
            },
            0,
            1,
            None,
        );
        assert!(out.visibility.values().iter().all(|&v| v == 1.0));
        assert!(out.color.pixels().iter().all(|&p| p == BACKGROUND));
    }

    #[test]
    fn zero_history_blend_is_identity() {
        let mesh = TriangleMesh::merge([
            &shapes::quad(DVec3::ZERO, DVec3::new(2.0, 0.0, 0.0), DVec3::new(0.0, 0.0, -2.0)),
            &shapes::cuboid(DVec3::new(-0.5, 1.0, -0.5), DVec3::new(0.5, 1.4, 0.5)),
        ]);
        let bvh = Bvh::build(&mesh);
        let spec = GridSpec::fit(&mesh.bounds(), 24).unwrap();
        let sdf = ScalarGrid::from_fn(spec, |i| {
            crate::geometry::exact_distance(&mesh, spec.center_of(i)).unwrap()
        });
        let cam = Camera {
            position: DVec3::new(0.0, 4.0, 3.0),
            look_at: DVec3::ZERO,
            vfov: 0.8,
            width: 16,
            height: 12,
        };
        let p = ShadowParams {
            epsilon: spec.voxel_size,
            max_step_size: 2.0 * spec.voxel_size,
            history_blend: 0.0,
            ..params()
        };
        let first = render_frame(&bvh, &sdf, &cam, &p, 0, 1, None);
        let second = render_frame(&bvh, &sdf, &cam, &p, 1, 1, Some(&first.visibility));
        assert_eq!(second.visibility, second.current);
        assert!(second.visibility.values().iter().any(|&v| v < 0.5));
        assert!(first.max_steps_taken <= p.max_steps);
    }
}
