use glam::DVec3;

use super::{GeometryError, TriangleMesh};

/// Closest point on triangle `abc` to `p`, walking the vertex, edge and face
/// Voronoi regions in turn.
pub fn closest_point_on_triangle(p: DVec3, a: DVec3, b: DVec3, c: DVec3) -> DVec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }

    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }

    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }

    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Unsigned distance from `p` to the nearest non-degenerate triangle, by
/// exhaustive scan.
pub fn exact_distance(mesh: &TriangleMesh, p: DVec3) -> Result<f64, GeometryError> {
    mesh.live_triangles()
        .map(|i| {
            let [a, b, c] = mesh.triangle(i);
            closest_point_on_triangle(p, a, b, c).distance_squared(p)
        })
        .min_by(f64::total_cmp)
        .map(f64::sqrt)
        .ok_or(GeometryError::EmptyMesh)
}
