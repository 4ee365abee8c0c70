//! Keyed random streams. Every draw is a pure function of
//! `(seed, purpose, key, position in stream)`, so results never depend on
//! how work is split across threads.

use glam::DVec3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    RefineDirections,
    ShadowJitter,
    ReferenceCone,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::RefineDirections => 0x52ef_1e00_d1e5_0001,
            Purpose::ShadowJitter => 0x5ad0_0717_7e40_0002,
            Purpose::ReferenceCone => 0x4ef0_c0e5_a3b1_0003,
        }
    }
}

pub fn keyed_stream(seed: u64, purpose: Purpose, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.tag());
    rng.set_stream(key);
    rng
}

/// Packs a texel or pixel index with a frame number into a stream key.
#[inline]
pub fn frame_key(index: usize, frame: u64) -> u64 {
    debug_assert!((index as u64) < 1 << 40 && frame < 1 << 24);
    (frame << 40) | index as u64
}

/// Uniform direction on the unit sphere from two uniforms in `[0, 1)`:
/// `z = 2 u1 - 1`, `phi = 2 pi u2`.
#[inline]
pub fn sphere_direction(u1: f64, u2: f64) -> DVec3 {
    let z = 2.0 * u1 - 1.0;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    DVec3::new(r * c, r * s, z)
}

/// Uniform direction over the solid angle of the cone of half-angle
/// `acos(cos_max)` around unit `axis`.
#[inline]
pub fn cone_direction(axis: DVec3, cos_max: f64, u1: f64, u2: f64) -> DVec3 {
    let cos_t = 1.0 - u1 * (1.0 - cos_max);
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    let (t, b) = axis.any_orthonormal_pair();
    (t * (sin_t * c) + b * (sin_t * s) + axis * cos_t).normalize()
}
