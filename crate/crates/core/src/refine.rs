//! Fine SDF refinement: near-surface texels (coarse value within `d`) are
//! ray-traced in random directions every frame, the per-frame minimum hit
//! distance `r_t` is folded into the history with decay `alpha`
//!
//! ```text
//! f_t = min(alpha * f_{t-1} + (1 - alpha) * c_t, r_t)   if c_t <= d
//! f_t = c_t                                             otherwise
//! ```
//!
//! and the sign comes from decayed front/back hit counts. The blend works on
//! unsigned magnitudes; the sign is applied afterwards.

use glam::DVec3;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Bvh, Facing, Ray};
use crate::grid::{GridError, GridSpec, ScalarGrid};
use crate::rng::{frame_key, keyed_stream, sphere_direction, Purpose};

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("rays_per_texel must be at least 1")]
    RayCount,
    #[error("refinement radius d = {d} is below the fine voxel size {voxel}")]
    Radius { d: f64, voxel: f64 },
    #[error("fine resolution {fine:?} is not an integer multiple of coarse resolution {coarse:?}")]
    Resolution { fine: [usize; 3], coarse: [usize; 3] },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineParams {
    /// Refinement radius, world units.
    pub d: f64,
    /// Decay applied to the previous frame's magnitude and sign counts.
    pub alpha: f64,
    pub rays_per_texel: u32,
    pub fine_spec: GridSpec,
    pub rng_seed: u64,
}

impl RefineParams {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self, coarse: &GridSpec) -> Result<(), RefineError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(RefineError::Alpha(self.alpha));
        }
        if self.rays_per_texel == 0 {
            return Err(RefineError::RayCount);
        }
        if !(self.d >= self.fine_spec.voxel_size) {
            return Err(RefineError::Radius {
                d: self.d,
                voxel: self.fine_spec.voxel_size,
            });
        }
        let (fine, coarse_res) = (self.fine_spec.resolution, coarse.resolution);
        if (0..3).any(|i| fine[i] % coarse_res[i] != 0) {
            return Err(RefineError::Resolution {
                fine,
                coarse: coarse_res,
            });
        }
        Ok(())
    }
}

/// Texels selected for ray tracing, indexed like the fine grid.
pub type RefineMask = Vec<bool>;

/// Selects fine texels whose trilinearly sampled coarse value is `<= d`.
pub fn select_refine_mask(coarse: &ScalarGrid, params: &RefineParams) -> RefineMask {
    mask_from_resampled(&coarse.resample(params.fine_spec), params.d)
}

fn mask_from_resampled(coarse_fine: &ScalarGrid, d: f64) -> RefineMask {
    coarse_fine.values().iter().map(|&c| c <= d).collect()
}

/// Result of tracing one texel for one frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceSample {
    /// Minimum closest-hit distance over the rays, `+inf` if all missed.
    pub r: f64,
    pub front: u32,
    pub back: u32,
}

impl DistanceSample {
    pub const MISS: DistanceSample = DistanceSample {
        r: f64::INFINITY,
        front: 0,
        back: 0,
    };
}

/// Traces one ray per direction from `p`.
pub fn trace_directions(bvh: &Bvh, p: DVec3, dirs: impl IntoIterator<Item = DVec3>) -> DistanceSample {
    let mut out = DistanceSample::MISS;
    for dir in dirs {
        if let Some(hit) = bvh.closest_hit(&Ray::new(p, dir)) {
            out.r = out.r.min(hit.t);
            match hit.facing {
                Facing::Front => out.front += 1,
                Facing::Back => out.back += 1,
            }
        }
    }
    out
}

/// Traces `n` uniformly distributed directions drawn from `rng`.
pub fn trace_distance_sample(bvh: &Bvh, p: DVec3, n: u32, rng: &mut impl Rng) -> DistanceSample {
    let dirs = (0..n).map(|_| {
        let u1 = rng.random::<f64>();
        let u2 = rng.random::<f64>();
        sphere_direction(u1, u2)
    });
    trace_directions(bvh, p, dirs)
}

/// One texel of the temporal update, on unsigned magnitudes. `f_prev` may
/// be `+inf` (no estimate yet).
#[inline]
pub fn blend_texel(f_prev: f64, c: f64, r: f64, alpha: f64, d: f64) -> f64 {
    if c > d {
        return c;
    }
    let c = c.abs();
    let blended = if alpha == 1.0 {
        f_prev
    } else if alpha == 0.0 {
        c
    } else if f_prev.is_infinite() {
        f64::INFINITY
    } else {
        alpha * f_prev + (1.0 - alpha) * c
    };
    blended.min(r)
}

/// Applies [`blend_texel`] to every texel. `coarse_fine` is the coarse SDF
/// resampled at the fine texel centers; `samples` holds `r_t` per texel
/// (`+inf` where nothing was traced).
pub fn accumulate_fine(
    f_prev: &ScalarGrid,
    coarse_fine: &ScalarGrid,
    samples: &[f64],
    params: &RefineParams,
) -> Result<ScalarGrid, RefineError> {
    f_prev.check_same_shape(coarse_fine)?;
    if samples.len() != f_prev.values().len() {
        return Err(GridError::Length {
            expected: f_prev.values().len(),
            got: samples.len(),
        }
        .into());
    }
    let values = f_prev
        .values()
        .par_iter()
        .zip(coarse_fine.values().par_iter())
        .zip(samples.par_iter())
        .map(|((&f, &c), &r)| blend_texel(f, c, r, params.alpha, params.d))
        .collect();
    Ok(ScalarGrid::from_values(*f_prev.spec(), values)?)
}

/// Running fine-SDF state carried between frames.
#[derive(Clone, Debug)]
pub struct FineSdfState {
    /// Unsigned `f_t`; `+inf` where no estimate exists yet.
    pub magnitude: ScalarGrid,
    pub sign_front: ScalarGrid,
    pub sign_back: ScalarGrid,
    /// Signed output sampled by the shadow pass.
    pub signed: ScalarGrid,
    pub mask: RefineMask,
    /// Number of frames accumulated so far; the next update is frame `frame`.
    pub frame: u64,
}

impl FineSdfState {
    pub fn new(fine_spec: GridSpec) -> Self {
        Self {
            magnitude: ScalarGrid::filled(fine_spec, f64::INFINITY),
            sign_front: ScalarGrid::filled(fine_spec, 0.0),
            sign_back: ScalarGrid::filled(fine_spec, 0.0),
            signed: ScalarGrid::filled(fine_spec, f64::INFINITY),
            mask: vec![false; fine_spec.len()],
            frame: 0,
        }
    }

    /// True where more back than front hits have accumulated.
    pub fn is_negative(&self, index: usize) -> bool {
        self.sign_back.values()[index] > self.sign_front.values()[index]
    }
}

/// Decays and adds this frame's hit counts, then rebuilds the signed
/// output: inside the mask `f_t` with the voted sign (ties positive),
/// outside it the signed coarse value.
pub fn update_sign(state: &mut FineSdfState, front: &[u32], back: &[u32], coarse_fine: &ScalarGrid, alpha: f64) {
    let decay = |acc: &mut [f64], add: &[u32]| {
        acc.par_iter_mut()
            .zip(add.par_iter())
            .for_each(|(a, &n)| *a = alpha * *a + n as f64);
    };
    decay(state.sign_front.values_mut(), front);
    decay(state.sign_back.values_mut(), back);

    let mask = &state.mask;
    let mag = state.magnitude.values();
    let sf = state.sign_front.values();
    let sb = state.sign_back.values();
    let c = coarse_fine.values();
    state
        .signed
        .values_mut()
        .par_iter_mut()
        .enumerate()
        .for_each(|(i, out)| {
            *out = if mask[i] {
                let m = if mag[i].is_finite() { mag[i] } else { c[i].abs() };
                if sb[i] > sf[i] {
                    -m
                } else {
                    m
                }
            } else {
                c[i]
            };
        });
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RefineStats {
    pub refined_texels: usize,
    pub rays: u64,
}

/// One frame of refinement: mask, trace, accumulate, sign. Advances
/// `state.frame`.
pub fn build_fine_sdf(
    bvh: &Bvh,
    coarse: &ScalarGrid,
    state: &mut FineSdfState,
    params: &RefineParams,
) -> Result<RefineStats, RefineError> {
    params.validate(coarse.spec())?;
    let fine = params.fine_spec;
    let coarse_fine = coarse.resample(fine);
    state.mask = mask_from_resampled(&coarse_fine, params.d);

    let targets: Vec<usize> = if bvh.is_empty() {
        Vec::new()
    } else {
        (0..fine.len()).filter(|&i| state.mask[i]).collect()
    };
    let frame = state.frame;
    let traced: Vec<DistanceSample> = targets
        .par_iter()
        .map(|&i| {
            let mut rng = keyed_stream(params.rng_seed, Purpose::RefineDirections, frame_key(i, frame));
            trace_distance_sample(bvh, fine.center_of(i), params.rays_per_texel, &mut rng)
        })
        .collect();

    let mut r = vec![f64::INFINITY; fine.len()];
    let mut front = vec![0u32; fine.len()];
    let mut back = vec![0u32; fine.len()];
    for (&i, s) in targets.iter().zip(&traced) {
        r[i] = s.r;
        front[i] = s.front;
        back[i] = s.back;
    }

    state.magnitude = accumulate_fine(&state.magnitude, &coarse_fine, &r, params)?;
    update_sign(state, &front, &back, &coarse_fine, params.alpha);
    state.frame += 1;
    Ok(RefineStats {
        refined_texels: targets.len(),
        rays: targets.len() as u64 * params.rays_per_texel as u64,
    })
}
