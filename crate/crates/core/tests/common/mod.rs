//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use std::path::PathBuf;

use hybrid_sdf::geometry::{DVec3, TriangleMesh};
use rand::Rng;

pub fn scenes_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes")
}

pub fn random_occupancy(res: [usize; 3], density: f64, rng: &mut impl Rng) -> Vec<bool> {
    let n = res[0] * res[1] * res[2];
    let mut occ: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < density).collect();
    if !occ.iter().any(|&o| o) {
        occ[rng.random_range(0..n)] = true;
    }
    occ
}

/// Exact squared Euclidean distance (in voxels) from every voxel to the
/// nearest occupied voxel, by separable lower envelopes of parabolas.
/// `None` when nothing is occupied.
pub fn exact_edt_squared(occ: &[bool], res: [usize; 3]) -> Option<Vec<u64>> {
    if !occ.iter().any(|&o| o) {
        return None;
    }
    const FAR: f64 = 1e18;
    let mut g: Vec<f64> = occ.iter().map(|&o| if o { 0.0 } else { FAR }).collect();
    let stride = [1, res[0], res[0] * res[1]];
    for axis in 0..3 {
        let n = res[axis];
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let mut line = vec![0.0; n];
        let mut out = vec![0.0; n];
        for u in 0..res[a] {
            for w in 0..res[b] {
                let base = u * stride[a] + w * stride[b];
                for (i, l) in line.iter_mut().enumerate() {
                    *l = g[base + i * stride[axis]];
                }
                envelope(&line, &mut out);
                for (i, o) in out.iter().enumerate() {
                    g[base + i * stride[axis]] = *o;
                }
            }
        }
    }
    Some(g.into_iter().map(|v| v.round() as u64).collect())
}

fn envelope(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let meet = |q: usize, p: usize| ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
    for q in 1..n {
        let mut s = meet(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = meet(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let dq = q as f64 - v[k] as f64;
        *out = dq * dq + f[v[k]];
    }
}

/// Whether `p` is inside a closed mesh: majority over three rays of the
/// crossing-count parity.
pub fn inside_by_parity(mesh: &TriangleMesh, p: DVec3) -> bool {
    let dirs = [
        DVec3::new(0.5773, 0.5871, 0.5676).normalize(),
        DVec3::new(-0.6123, 0.3542, 0.7093).normalize(),
        DVec3::new(0.1382, -0.9134, 0.3828).normalize(),
    ];
    let odd = dirs.iter().filter(|&&d| crossings(mesh, p, d) % 2 == 1).count();
    odd >= 2
}

fn crossings(mesh: &TriangleMesh, o: DVec3, d: DVec3) -> usize {
    (0..mesh.len())
        .filter(|&i| {
            let [a, b, c] = mesh.triangle(i);
            let e1 = b - a;
            let e2 = c - a;
            let h = d.cross(e2);
            let det = e1.dot(h);
            if det.abs() < 1e-14 {
                return false;
            }
            let s = o - a;
            let u = s.dot(h) / det;
            let q = s.cross(e1);
            let v = d.dot(q) / det;
            let t = e2.dot(q) / det;
            u >= 0.0 && v >= 0.0 && u + v <= 1.0 && t > 0.0
        })
        .count()
}
