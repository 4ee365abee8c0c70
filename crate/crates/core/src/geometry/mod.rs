//! Scene geometry: triangle meshes, rigid instances, a BVH for closest-hit
//! ray queries and the exact point-to-mesh distance used as a test oracle.

mod bvh;
mod distance;
mod mesh;
mod obj;
pub mod shapes;

pub use bvh::{linear_closest_hit, Bvh, Facing, Hit, Ray};
pub use distance::{closest_point_on_triangle, exact_distance};
pub use mesh::{RigidTransform, SceneInstance, TriangleMesh};
pub use obj::{load_obj, parse_obj, write_obj, ObjError, ParsedObj};

pub use glam::{DQuat, DVec3};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("triangle {triangle} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange { triangle: usize, index: u32, count: usize },
    #[error("vertex {0} is not finite")]
    NonFiniteVertex(usize),
    #[error("mesh has no usable triangles")]
    EmptyMesh,
}

/// Axis-aligned bounding box. An empty box has `min > max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: DVec3,
    pub max: DVec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: DVec3::splat(f64::INFINITY),
        max: DVec3::splat(f64::NEG_INFINITY),
    };

    pub fn new(min: DVec3, max: DVec3) -> Self {
        Self { min, max }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a DVec3>) -> Self {
        points.into_iter().fold(Self::EMPTY, |b, p| b.grow(*p))
    }

    pub fn is_empty(&self) -> bool {
        self.min.cmpgt(self.max).any()
    }

    #[must_use]
    pub fn grow(self, p: DVec3) -> Self {
        Self {
            min: self.min.min(p),
            max: self.max.max(p),
        }
    }

    #[must_use]
    pub fn union(self, other: Aabb) -> Self {
        Self {
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    pub fn extent(&self) -> DVec3 {
        self.max - self.min
    }

    pub fn center(&self) -> DVec3 {
        0.5 * (self.min + self.max)
    }

    pub fn longest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    /// True when `other` lies inside `self` (boundaries inclusive).
    pub fn contains(&self, other: &Aabb) -> bool {
        other.is_empty() || (self.min.cmple(other.min).all() && self.max.cmpge(other.max).all())
    }

    /// Slab test. Returns the entry parameter if the ray overlaps the box
    /// within `[t_min, t_max]`. `inv_dir` must be free of infinities (see
    /// `bvh::safe_recip`) so no NaN can arise.
    #[inline]
    pub(crate) fn ray_entry(&self, origin: DVec3, inv_dir: DVec3, t_min: f64, t_max: f64) -> Option<f64> {
        #[inline(always)]
        fn lo(a: f64, b: f64) -> f64 {
            if a < b {
                a
            } else {
                b
            }
        }
        #[inline(always)]
        fn hi(a: f64, b: f64) -> f64 {
            if a > b {
                a
            } else {
                b
            }
        }
        let t0 = (self.min - origin) * inv_dir;
        let t1 = (self.max - origin) * inv_dir;
        let enter = hi(hi(lo(t0.x, t1.x), lo(t0.y, t1.y)), hi(lo(t0.z, t1.z), t_min));
        let exit = lo(lo(hi(t0.x, t1.x), hi(t0.y, t1.y)), lo(hi(t0.z, t1.z), t_max));
        (enter <= exit).then_some(enter)
    }
}
