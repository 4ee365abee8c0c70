//! Regular voxel grids: layout, scalar fields, trilinear sampling and the
//! `SDF1` binary dump format.
//!
//! Linear index order is x fastest, then y, then z. Voxel `(i, j, k)` has
//! its center at `origin + (i + 0.5, j + 0.5, k + 0.5) * voxel_size`.

use std::io::{self, Read, Write};
use std::path::Path;

use glam::DVec3;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::Aabb;

/// Empty border, in voxels, that [`GridSpec::fit`] keeps around the bounds.
pub const FIT_BORDER_VOXELS: usize = 2;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid resolution {0:?} has an axis below 2")]
    Resolution([usize; 3]),
    #[error("voxel size must be positive and finite, got {0}")]
    VoxelSize(f64),
    #[error("cannot fit a grid to empty bounds")]
    EmptyBounds,
    #[error("grid shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch([usize; 3], [usize; 3]),
    #[error("value buffer has {got} entries, grid needs {expected}")]
    Length { expected: usize, got: usize },
    #[error("not an SDF1 file")]
    BadMagic,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub resolution: [usize; 3],
    /// Minimum corner, world units.
    pub origin: DVec3,
    pub voxel_size: f64,
}

impl GridSpec {
    pub fn new(resolution: [usize; 3], origin: DVec3, voxel_size: f64) -> Result<Self, GridError> {
        if resolution.iter().any(|&n| n < 2) {
            return Err(GridError::Resolution(resolution));
        }
        if !(voxel_size > 0.0 && voxel_size.is_finite()) {
            return Err(GridError::VoxelSize(voxel_size));
        }
        Ok(Self {
            resolution,
            origin,
            voxel_size,
        })
    }

    /// Cubic-voxel grid with `longest_axis_cells` voxels along the longest
    /// axis of `bounds` and a [`FIT_BORDER_VOXELS`] border on every side.
    pub fn fit(bounds: &Aabb, longest_axis_cells: usize) -> Result<Self, GridError> {
        if bounds.is_empty() {
            return Err(GridError::EmptyBounds);
        }
        let border = 2 * FIT_BORDER_VOXELS;
        if longest_axis_cells <= border {
            return Err(GridError::Resolution([longest_axis_cells; 3]));
        }
        let extent = bounds.extent();
        let longest = extent.max_element().max(1e-9);
        let voxel_size = longest / (longest_axis_cells - border) as f64;
        let long_axis = bounds.longest_axis();
        let mut resolution = [0usize; 3];
        for (axis, n) in resolution.iter_mut().enumerate() {
            *n = if axis == long_axis {
                longest_axis_cells
            } else {
                ((extent[axis] / voxel_size - 1e-9).ceil().max(0.0) as usize + border).max(2)
            };
        }
        let size = DVec3::new(resolution[0] as f64, resolution[1] as f64, resolution[2] as f64) * voxel_size;
        Self::new(resolution, bounds.center() - 0.5 * size, voxel_size)
    }

    /// Same domain, `factor` times as many voxels per axis.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            resolution: self.resolution.map(|n| n * factor),
            origin: self.origin,
            voxel_size: self.voxel_size / factor as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, [x, y, z]: [usize; 3]) -> usize {
        let [nx, ny, _] = self.resolution;
        x + nx * (y + ny * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.resolution;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    #[inline]
    pub fn center(&self, [x, y, z]: [usize; 3]) -> DVec3 {
        self.origin + (DVec3::new(x as f64, y as f64, z as f64) + 0.5) * self.voxel_size
    }

    #[inline]
    pub fn center_of(&self, index: usize) -> DVec3 {
        self.center(self.coords(index))
    }

    pub fn bounds(&self) -> Aabb {
        let [nx, ny, nz] = self.resolution;
        Aabb::new(
            self.origin,
            self.origin + DVec3::new(nx as f64, ny as f64, nz as f64) * self.voxel_size,
        )
    }

    /// Voxel containing `p`, if inside the grid.
    pub fn voxel_of(&self, p: DVec3) -> Option<[usize; 3]> {
        let g = (p - self.origin) / self.voxel_size;
        let mut out = [0usize; 3];
        for axis in 0..3 {
            let c = g[axis].floor();
            if !(c >= 0.0 && c < self.resolution[axis] as f64) {
                return None;
            }
            out[axis] = c as usize;
        }
        Some(out)
    }

    pub fn diagonal(&self) -> f64 {
        self.bounds().extent().length()
    }
}

/// One `f64` per voxel, in world units.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarGrid {
    pub fn filled(spec: GridSpec, value: f64) -> Self {
        Self {
            values: vec![value; spec.len()],
            spec,
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != spec.len() {
            return Err(GridError::Length {
                expected: spec.len(),
                got: values.len(),
            });
        }
        Ok(Self { spec, values })
    }

    /// Evaluates `f(index)` for every voxel in parallel.
    pub fn from_fn(spec: GridSpec, f: impl Fn(usize) -> f64 + Sync + Send) -> Self {
        let values = (0..spec.len()).into_par_iter().map(f).collect();
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, c: [usize; 3]) -> f64 {
        self.values[self.spec.index(c)]
    }

    pub fn check_same_shape(&self, other: &ScalarGrid) -> Result<(), GridError> {
        if self.spec.resolution != other.spec.resolution {
            return Err(GridError::ShapeMismatch(self.spec.resolution, other.spec.resolution));
        }
        Ok(())
    }

    /// Trilinear interpolation between voxel centers, clamped to the edge
    /// voxels outside the grid. Zero-weight corners are skipped so an
    /// all-infinite grid samples to infinity rather than NaN.
    pub fn sample_trilinear(&self, p: DVec3) -> f64 {
        let spec = &self.spec;
        let g = (p - spec.origin) / spec.voxel_size - 0.5;
        let mut lo = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for axis in 0..3 {
            let max = (spec.resolution[axis] - 1) as f64;
            let c = g[axis].clamp(0.0, max);
            let base = c.floor().min(max - 1.0);
            lo[axis] = base as usize;
            frac[axis] = c - base;
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut c = lo;
            for axis in 0..3 {
                if corner >> axis & 1 == 1 {
                    w *= frac[axis];
                    c[axis] += 1;
                } else {
                    w *= 1.0 - frac[axis];
                }
            }
            if w != 0.0 {
                acc += w * self.get(c);
            }
        }
        acc
    }

    /// Resamples onto `target` by trilinear lookup at each target voxel
    /// center.
    pub fn resample(&self, target: GridSpec) -> ScalarGrid {
        ScalarGrid::from_fn(target, |i| self.sample_trilinear(target.center_of(i)))
    }

    /// Writes the `SDF1` dump: magic, little-endian `u32` nx ny nz, `f32`
    /// voxel size, `f32` origin xyz, then one `f32` per voxel.
    pub fn write_sdf1(&self, mut out: impl Write) -> io::Result<()> {
        let s = &self.spec;
        let mut buf = Vec::with_capacity(32 + 4 * self.values.len());
        buf.extend_from_slice(b"SDF1");
        for n in s.resolution {
            buf.extend_from_slice(&(n as u32).to_le_bytes());
        }
        buf.extend_from_slice(&(s.voxel_size as f32).to_le_bytes());
        for c in s.origin.to_array() {
            buf.extend_from_slice(&(c as f32).to_le_bytes());
        }
        for &v in &self.values {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out.write_all(&buf)
    }

    pub fn read_sdf1(mut input: impl Read) -> Result<Self, GridError> {
        let mut header = [0u8; 32];
        input.read_exact(&mut header)?;
        if &header[..4] != b"SDF1" {
            return Err(GridError::BadMagic);
        }
        let word = |i: usize| <[u8; 4]>::try_from(&header[4 + 4 * i..8 + 4 * i]).unwrap();
        let resolution = [0, 1, 2].map(|i| u32::from_le_bytes(word(i)) as usize);
        let voxel_size = f32::from_le_bytes(word(3)) as f64;
        let origin = DVec3::new(
            f32::from_le_bytes(word(4)) as f64,
            f32::from_le_bytes(word(5)) as f64,
            f32::from_le_bytes(word(6)) as f64,
        );
        let spec = GridSpec::new(resolution, origin, voxel_size)?;
        let mut raw = vec![0u8; 4 * spec.len()];
        input.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        Ok(Self { spec, values })
    }

    pub fn save_sdf1(&self, path: impl AsRef<Path>) -> io::Result<()> {
        self.write_sdf1(io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load_sdf1(path: impl AsRef<Path>) -> Result<Self, GridError> {
        Self::read_sdf1(io::BufReader::new(std::fs::File::open(path)?))
    }
}
