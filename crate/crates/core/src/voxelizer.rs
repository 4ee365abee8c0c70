//! Seed voxelization by orthographic triangle rasterization along +x, +y
//! and +z, with no depth test: every covered sample marks the voxel at its
//! interpolated depth.

use glam::{DVec2, DVec3};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Aabb, TriangleMesh};
use crate::grid::GridSpec;

#[derive(Debug, Error, PartialEq)]
pub enum VoxelizeError {
    #[error("grid bounds {grid:?} do not contain scene bounds {scene:?}")]
    SceneOutsideGrid { grid: Aabb, scene: Aabb },
    #[error("supersample factor must be at least 1")]
    Supersample,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// (depth axis, image u axis, image v axis) as component indices.
    fn frame(self) -> (usize, usize, usize) {
        match self {
            Axis::X => (0, 1, 2),
            Axis::Y => (1, 2, 0),
            Axis::Z => (2, 0, 1),
        }
    }
}

/// Boolean occupancy over a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedGrid {
    spec: GridSpec,
    occupied: Vec<bool>,
}

impl SeedGrid {
    pub fn empty(spec: GridSpec) -> Self {
        Self {
            occupied: vec![false; spec.len()],
            spec,
        }
    }

    pub fn from_occupancy(spec: GridSpec, occupied: Vec<bool>) -> Self {
        assert_eq!(occupied.len(), spec.len());
        Self { spec, occupied }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupied
    }

    #[inline]
    pub fn is_set(&self, c: [usize; 3]) -> bool {
        self.occupied[self.spec.index(c)]
    }

    pub fn set(&mut self, c: [usize; 3]) {
        let i = self.spec.index(c);
        self.occupied[i] = true;
    }

    pub fn count(&self) -> usize {
        self.occupied.iter().filter(|&&b| b).count()
    }

    /// Coordinates of every occupied voxel, in linear index order.
    pub fn seeds(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.occupied
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.spec.coords(i))
    }
}

#[inline]
fn edge(a: DVec2, b: DVec2, p: DVec2) -> f64 {
    (b - a).perp_dot(p - a)
}

/// Voxels produced by rasterizing one triangle along `axis`, one sample per
/// pixel per `supersample²` sub-pixel. A sample is covered when all three
/// edge functions share a sign, samples on edges included, so either
/// winding is accepted. Output may contain duplicates when supersampling.
pub fn rasterize_triangle(tri: &[DVec3; 3], axis: Axis, spec: &GridSpec, supersample: usize) -> Vec<[usize; 3]> {
    let (a_depth, a_u, a_v) = axis.frame();
    let project = |p: DVec3| DVec2::new(p[a_u], p[a_v]);
    let [p0, p1, p2] = tri.map(project);
    let area = edge(p0, p1, p2);
    if area == 0.0 || !area.is_finite() {
        return Vec::new();
    }

    let vs = spec.voxel_size;
    let origin = DVec2::new(spec.origin[a_u], spec.origin[a_v]);
    let (nu, nv, nd) = (spec.resolution[a_u], spec.resolution[a_v], spec.resolution[a_depth]);
    let s = supersample.max(1);
    let step = 1.0 / s as f64;

    // sample (pixel i, sub a) sits at origin + (i + (a + 0.5) / s) * vs
    let lo = p0.min(p1).min(p2);
    let hi = p0.max(p1).max(p2);
    let to_sample = |x: f64, o: f64| (x - o) / vs * s as f64 - 0.5;
    let range = |lo: f64, hi: f64, o: f64, n: usize| {
        let first = to_sample(lo, o).ceil().max(0.0);
        let last = to_sample(hi, o).floor().min((n * s) as f64 - 1.0);
        (first as i64, last as i64)
    };
    let (u0, u1) = range(lo.x, hi.x, origin.x, nu);
    let (v0, v1) = range(lo.y, hi.y, origin.y, nv);

    let depths = tri.map(|p| p[a_depth]);
    let mut out = Vec::new();
    for sv in v0..=v1 {
        let pv = origin.y + (sv as f64 + 0.5) * step * vs;
        for su in u0..=u1 {
            let pu = origin.x + (su as f64 + 0.5) * step * vs;
            let p = DVec2::new(pu, pv);
            let w0 = edge(p1, p2, p);
            let w1 = edge(p2, p0, p);
            let w2 = edge(p0, p1, p);
            let inside = (w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0) || (w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0);
            if !inside {
                continue;
            }
            let depth = (w0 * depths[0] + w1 * depths[1] + w2 * depths[2]) / area;
            let k = ((depth - spec.origin[a_depth]) / vs).floor();
            if !(k >= 0.0 && k < nd as f64) {
                continue;
            }
            let mut c = [0usize; 3];
            c[a_depth] = k as usize;
            c[a_u] = su as usize / s;
            c[a_v] = sv as usize / s;
            out.push(c);
        }
    }
    out
}

/// Union of the +x, +y and +z rasterizations of every non-degenerate
/// triangle in `scene`.
pub fn voxelize(scene: &[TriangleMesh], spec: &GridSpec, supersample: usize) -> Result<SeedGrid, VoxelizeError> {
    if supersample == 0 {
        return Err(VoxelizeError::Supersample);
    }
    let scene_bounds = scene.iter().map(TriangleMesh::bounds).fold(Aabb::EMPTY, Aabb::union);
    let grid = spec.bounds();
    if !grid.contains(&scene_bounds) {
        return Err(VoxelizeError::SceneOutsideGrid {
            grid,
            scene: scene_bounds,
        });
    }

    let triangles: Vec<[DVec3; 3]> = scene
        .iter()
        .flat_map(|m| m.live_triangles().map(move |i| m.triangle(i)))
        .collect();
    let fragments: Vec<Vec<[usize; 3]>> = triangles
        .par_iter()
        .map(|tri| {
            Axis::ALL
                .iter()
                .flat_map(|&axis| rasterize_triangle(tri, axis, spec, supersample))
                .collect()
        })
        .collect();

    let mut seeds = SeedGrid::empty(*spec);
    for c in fragments.into_iter().flatten() {
        seeds.set(c);
    }
    Ok(seeds)
}
