//! 3D jump flooding over a seed grid, the exhaustive nearest-seed oracle,
//! and the biased coarse SDF built from the nearest-seed map.

use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{GridSpec, ScalarGrid};
use crate::voxelizer::SeedGrid;

const NONE: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum JfaError {
    #[error("beta {beta} must be in [0, voxel_size * sqrt(3)) = [0, {limit})")]
    Beta { beta: f64, limit: f64 },
}

/// Per-voxel nearest seed, or none when the seed set is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct NearestSeedGrid {
    spec: GridSpec,
    seeds: Vec<u32>,
}

impl NearestSeedGrid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn seed(&self, index: usize) -> Option<[usize; 3]> {
        match self.seeds[index] {
            NONE => None,
            s => Some(self.spec.coords(s as usize)),
        }
    }

    /// Squared distance to the stored seed in voxel units.
    pub fn distance2_voxels(&self, index: usize) -> Option<u64> {
        self.seed(index).map(|s| dist2(self.spec.coords(index), s))
    }

    /// Distance to the stored seed center in world units.
    pub fn distance(&self, index: usize) -> Option<f64> {
        self.distance2_voxels(index)
            .map(|d2| (d2 as f64).sqrt() * self.spec.voxel_size)
    }
}

#[inline]
fn dist2(a: [usize; 3], b: [usize; 3]) -> u64 {
    (0..3)
        .map(|i| {
            let d = a[i] as i64 - b[i] as i64;
            (d * d) as u64
        })
        .sum()
}

/// Candidate ordering: squared distance, then lexicographic seed coordinate.
#[inline]
fn better(candidate: (u64, [usize; 3]), current: Option<(u64, [usize; 3])>) -> bool {
    current.is_none_or(|cur| candidate < cur)
}

/// Plain jump flooding. Steps run `k = 2^ceil(log2(max dim)) / 2, ..., 2, 1`;
/// each voxel considers itself and its 26 neighbours at offset `k` in the
/// previous buffer and keeps the closest seed.
pub fn jfa_flood(seeds: &SeedGrid) -> NearestSeedGrid {
    let spec = *seeds.spec();
    let mut current: Vec<u32> = seeds
        .occupancy()
        .iter()
        .enumerate()
        .map(|(i, &set)| if set { i as u32 } else { NONE })
        .collect();

    let max_dim = *spec.resolution.iter().max().unwrap();
    let mut step = max_dim.next_power_of_two() / 2;
    let [nx, ny, nz] = spec.resolution.map(|n| n as i64);
    let mut next = vec![NONE; current.len()];
    while step >= 1 {
        let k = step as i64;
        let prev = &current;
        next.par_iter_mut().enumerate().for_each(|(i, out)| {
            let here = spec.coords(i);
            let [x, y, z] = here.map(|c| c as i64);
            let mut best: Option<(u64, [usize; 3])> = None;
            let mut best_seed = NONE;
            for dz in [-k, 0, k] {
                let qz = z + dz;
                if qz < 0 || qz >= nz {
                    continue;
                }
                for dy in [-k, 0, k] {
                    let qy = y + dy;
                    if qy < 0 || qy >= ny {
                        continue;
                    }
                    for dx in [-k, 0, k] {
                        let qx = x + dx;
                        if qx < 0 || qx >= nx {
                            continue;
                        }
                        let q = (qx + nx * (qy + ny * qz)) as usize;
                        let s = prev[q];
                        if s == NONE || s == best_seed {
                            continue;
                        }
                        let sc = spec.coords(s as usize);
                        let cand = (dist2(here, sc), sc);
                        if better(cand, best) {
                            best = Some(cand);
                            best_seed = s;
                        }
                    }
                }
            }
            *out = best_seed;
        });
        std::mem::swap(&mut current, &mut next);
        step /= 2;
    }
    NearestSeedGrid { spec, seeds: current }
}

/// Exact nearest seed for every voxel, same tie rule as [`jfa_flood`].
///
/// Seeds are scanned in rings of growing Chebyshev radius `r` around each
/// voxel; any seed on ring `r` is at least `r` voxels away, so the scan
/// stops once `r^2` exceeds the best squared distance found.
pub fn exact_nearest(seeds: &SeedGrid) -> NearestSeedGrid {
    let spec = *seeds.spec();
    if seeds.occupancy().iter().all(|&b| !b) {
        return NearestSeedGrid {
            spec,
            seeds: vec![NONE; spec.len()],
        };
    }
    let [nx, ny, nz] = spec.resolution.map(|n| n as i64);
    let max_r = nx.max(ny).max(nz);
    let occ = seeds.occupancy();
    let out = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let here = spec.coords(i);
            let [x, y, z] = here.map(|c| c as i64);
            let mut best: Option<(u64, [usize; 3])> = None;
            let mut best_seed = NONE;
            let mut visit = |qx: i64, qy: i64, qz: i64, best: &mut Option<(u64, [usize; 3])>| {
                if qx < 0 || qy < 0 || qz < 0 || qx >= nx || qy >= ny || qz >= nz {
                    return;
                }
                let q = (qx + nx * (qy + ny * qz)) as usize;
                if occ[q] {
                    let sc = [qx as usize, qy as usize, qz as usize];
                    let cand = (dist2(here, sc), sc);
                    if better(cand, *best) {
                        *best = Some(cand);
                        best_seed = q as u32;
                    }
                }
            };
            for r in 0..=max_r {
                for dz in -r..=r {
                    for dy in -r..=r {
                        if dz.abs() == r || dy.abs() == r {
                            for dx in -r..=r {
                                visit(x + dx, y + dy, z + dz, &mut best);
                            }
                        } else if r > 0 {
                            visit(x - r, y + dy, z + dz, &mut best);
                            visit(x + r, y + dy, z + dz, &mut best);
                        }
                    }
                }
                if let Some((d2, _)) = best {
                    if ((r + 1) * (r + 1)) as u64 > d2 {
                        break;
                    }
                }
            }
            best_seed
        })
        .collect();
    NearestSeedGrid { spec, seeds: out }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JfaParams {
    /// Sign bias, world units.
    pub beta: f64,
}

impl JfaParams {
    pub fn new(beta: f64, voxel_size: f64) -> Result<Self, JfaError> {
        let limit = voxel_size * 3f64.sqrt();
        if !(beta >= 0.0 && beta < limit) {
            return Err(JfaError::Beta { beta, limit });
        }
        Ok(Self { beta })
    }

    /// Half a voxel: exactly the seed voxels come out negative.
    pub fn half_voxel(voxel_size: f64) -> Self {
        Self { beta: 0.5 * voxel_size }
    }
}

/// `c(v) = |center(v) - center(seed(v))| - beta`, or `+inf` where no seed
/// exists.
pub fn coarse_sdf(nearest: &NearestSeedGrid, params: JfaParams) -> ScalarGrid {
    ScalarGrid::from_fn(*nearest.spec(), |i| {
        nearest.distance(i).map_or(f64::INFINITY, |d| d - params.beta)
    })
}
