use std::sync::Arc;

use glam::{DQuat, DVec3};

use super::{Aabb, GeometryError};

/// Indexed triangle mesh with per-triangle geometric normals.
///
/// Normals follow right-hand winding: `(v1 - v0) x (v2 - v0)`, normalized.
/// Zero-area triangles are kept (so triangle ids stay stable) but flagged;
/// their stored normal is zero and they are skipped by every query.
#[derive(Clone, Debug, Default)]
pub struct TriangleMesh {
    vertices: Vec<DVec3>,
    triangles: Vec<[u32; 3]>,
    normals: Vec<DVec3>,
    degenerate: Vec<bool>,
}

// Relative area threshold below which a triangle counts as degenerate.
const DEGENERATE_REL_AREA: f64 = 1e-12;

impl TriangleMesh {
    pub fn new(vertices: Vec<DVec3>, triangles: Vec<[u32; 3]>) -> Result<Self, GeometryError> {
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFiniteVertex(i));
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &index in tri {
                if index as usize >= vertices.len() {
                    return Err(GeometryError::IndexOutOfRange {
                        triangle: t,
                        index,
                        count: vertices.len(),
                    });
                }
            }
        }
        let mut normals = Vec::with_capacity(triangles.len());
        let mut degenerate = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let [a, b, c] = tri.map(|i| vertices[i as usize]);
            let cross = (b - a).cross(c - a);
            let longest = (b - a)
                .length_squared()
                .max((c - b).length_squared())
                .max((a - c).length_squared());
            if longest == 0.0 || cross.length() <= DEGENERATE_REL_AREA * longest {
                normals.push(DVec3::ZERO);
                degenerate.push(true);
            } else {
                normals.push(cross.normalize());
                degenerate.push(false);
            }
        }
        Ok(Self {
            vertices,
            triangles,
            normals,
            degenerate,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Concatenates meshes; triangle ids follow input order.
    pub fn merge<'a>(meshes: impl IntoIterator<Item = &'a TriangleMesh>) -> Self {
        let mut out = Self::default();
        for m in meshes {
            let base = out.vertices.len() as u32;
            out.vertices.extend_from_slice(&m.vertices);
            out.triangles.extend(m.triangles.iter().map(|t| t.map(|i| i + base)));
            out.normals.extend_from_slice(&m.normals);
            out.degenerate.extend_from_slice(&m.degenerate);
        }
        out
    }

    pub fn vertices(&self) -> &[DVec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    #[inline]
    pub fn triangle(&self, id: usize) -> [DVec3; 3] {
        self.triangles[id].map(|i| self.vertices[i as usize])
    }

    #[inline]
    pub fn normal(&self, id: usize) -> DVec3 {
        self.normals[id]
    }

    #[inline]
    pub fn is_degenerate(&self, id: usize) -> bool {
        self.degenerate[id]
    }

    /// Ids of the triangles that take part in queries.
    pub fn live_triangles(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.degenerate[i])
    }

    /// Bounds of every vertex referenced by a non-degenerate triangle.
    pub fn bounds(&self) -> Aabb {
        self.live_triangles()
            .flat_map(|i| self.triangle(i))
            .fold(Aabb::EMPTY, Aabb::grow)
    }

    #[must_use]
    pub fn transformed(&self, xf: &RigidTransform) -> Self {
        let vertices = self.vertices.iter().map(|&v| xf.apply(v)).collect();
        // Rigid motion preserves areas, so only normals need recomputing; go
        // through `new` anyway to keep the degenerate flags consistent.
        Self::new(vertices, self.triangles.clone()).expect("indices already validated")
    }
}

/// Rotation followed by translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: DQuat,
    pub translation: DVec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl RigidTransform {
    pub const IDENTITY: Self = Self {
        rotation: DQuat::IDENTITY,
        translation: DVec3::ZERO,
    };

    pub fn new(rotation: DQuat, translation: DVec3) -> Self {
        Self {
            rotation: rotation.normalize(),
            translation,
        }
    }

    pub fn translation(translation: DVec3) -> Self {
        Self {
            rotation: DQuat::IDENTITY,
            translation,
        }
    }

    #[inline]
    pub fn apply(&self, p: DVec3) -> DVec3 {
        self.rotation * p + self.translation
    }
}

/// A mesh placed in the world, optionally translating at a constant rate
/// per frame.
#[derive(Clone, Debug)]
pub struct SceneInstance {
    pub mesh: Arc<TriangleMesh>,
    pub base: RigidTransform,
    pub translate_per_frame: DVec3,
}

impl SceneInstance {
    pub fn fixed(mesh: Arc<TriangleMesh>, base: RigidTransform) -> Self {
        Self {
            mesh,
            base,
            translate_per_frame: DVec3::ZERO,
        }
    }

    pub fn transform_at(&self, frame: u64) -> RigidTransform {
        RigidTransform {
            rotation: self.base.rotation,
            translation: self.base.translation + self.translate_per_frame * frame as f64,
        }
    }

    pub fn world_mesh(&self, frame: u64) -> TriangleMesh {
        self.mesh.transformed(&self.transform_at(frame))
    }
}
