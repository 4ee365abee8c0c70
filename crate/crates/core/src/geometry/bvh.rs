use glam::DVec3;

use super::{Aabb, TriangleMesh};

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: DVec3,
    /// Unit length.
    pub dir: DVec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    /// Ray over `[0, inf)`. `dir` is normalized here.
    pub fn new(origin: DVec3, dir: DVec3) -> Self {
        Self {
            origin,
            dir: dir.normalize(),
            t_min: 0.0,
            t_max: f64::INFINITY,
        }
    }

    #[must_use]
    pub fn with_range(mut self, t_min: f64, t_max: f64) -> Self {
        debug_assert!(0.0 <= t_min && t_min < t_max);
        self.t_min = t_min;
        self.t_max = t_max;
        self
    }

    pub fn at(&self, t: f64) -> DVec3 {
        self.origin + t * self.dir
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Facing {
    Front,
    Back,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub triangle: u32,
    pub facing: Facing,
}

impl Hit {
    /// Closest-hit ordering: smaller `t`, then lower triangle id.
    #[inline]
    fn beats(&self, other: &Hit) -> bool {
        self.t < other.t || (self.t == other.t && self.triangle < other.triangle)
    }
}

/// Reciprocal direction with zero components mapped to a huge finite
/// value, so slab products never form `0 * inf`.
#[inline]
pub(crate) fn safe_recip(d: DVec3) -> DVec3 {
    let r = |c: f64| if c == 0.0 { 1e300f64.copysign(c) } else { 1.0 / c };
    DVec3::new(r(d.x), r(d.y), r(d.z))
}

/// Moller-Trumbore with inclusive barycentric bounds, so a ray through a
/// shared edge hits both neighbours and the id tie-break picks one.
#[inline]
fn intersect_triangle(ray: &Ray, tri: &[DVec3; 3], normal: DVec3, id: u32) -> Option<Hit> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = ray.dir.cross(e2);
    let det = e1.dot(p);
    if det == 0.0 {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - tri[0];
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = ray.dir.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    if t < ray.t_min || t > ray.t_max {
        return None;
    }
    let facing = if ray.dir.dot(normal) < 0.0 {
        Facing::Front
    } else {
        Facing::Back
    };
    Some(Hit {
        t,
        triangle: id,
        facing,
    })
}

/// Closest hit by testing every non-degenerate triangle. Reference for
/// [`Bvh::closest_hit`].
pub fn linear_closest_hit(mesh: &TriangleMesh, ray: &Ray) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for id in mesh.live_triangles() {
        if let Some(h) = intersect_triangle(ray, &mesh.triangle(id), mesh.normal(id), id as u32) {
            if best.is_none_or(|b| h.beats(&b)) {
                best = Some(h);
            }
        }
    }
    best
}

#[derive(Clone, Copy, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: first index into `order`. Interior: index of the right child
    /// (the left child always follows its parent).
    offset: u32,
    /// Zero for interior nodes.
    count: u32,
}

/// Binary BVH over the non-degenerate triangles of a mesh, built by median
/// split along the longest axis of each node's bounds.
#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
    tris: Vec<[DVec3; 3]>,
    normals: Vec<DVec3>,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let tris: Vec<_> = (0..mesh.len()).map(|i| mesh.triangle(i)).collect();
        let normals: Vec<_> = (0..mesh.len()).map(|i| mesh.normal(i)).collect();
        let mut order: Vec<u32> = mesh.live_triangles().map(|i| i as u32).collect();
        let centroids: Vec<DVec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut nodes = Vec::with_capacity(2 * order.len() / LEAF_SIZE + 1);
        if !order.is_empty() {
            let n = order.len();
            build_node(&mut nodes, &mut order, 0, n, &tris, &centroids);
        }
        Self {
            nodes,
            order,
            tris,
            normals,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map_or(Aabb::EMPTY, |n| n.bounds)
    }

    pub fn normal(&self, triangle: u32) -> DVec3 {
        self.normals[triangle as usize]
    }

    pub fn closest_hit(&self, ray: &Ray) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv_dir = safe_recip(ray.dir);
        let entry = |n: u32, limit: f64| {
            self.nodes[n as usize]
                .bounds
                .ray_entry(ray.origin, inv_dir, ray.t_min, limit)
        };
        let mut best: Option<Hit> = None;
        // Nodes are pushed with their entry distance, tested on push.
        let mut stack = [(0u32, 0.0f64); 64];
        let mut top = match entry(0, ray.t_max) {
            Some(t) => {
                stack[0] = (0, t);
                1
            }
            None => 0,
        };
        while top > 0 {
            top -= 1;
            let (index, t_entry) = stack[top];
            let limit = best.map_or(ray.t_max, |b| b.t);
            // Non-strict: equal-t hits in other nodes still compete on id.
            if t_entry > limit {
                continue;
            }
            let node = &self.nodes[index as usize];
            if node.count > 0 {
                let start = node.offset as usize;
                for &id in &self.order[start..start + node.count as usize] {
                    let i = id as usize;
                    if let Some(h) = intersect_triangle(ray, &self.tris[i], self.normals[i], id) {
                        if best.is_none_or(|b| h.beats(&b)) {
                            best = Some(h);
                        }
                    }
                }
            } else {
                // near child on top of the stack
                let (left, right) = (index + 1, node.offset);
                match (entry(left, limit), entry(right, limit)) {
                    (Some(tl), Some(tr)) => {
                        let (near, far) = if tr < tl {
                            ((right, tr), (left, tl))
                        } else {
                            ((left, tl), (right, tr))
                        };
                        stack[top] = far;
                        stack[top + 1] = near;
                        top += 2;
                    }
                    (Some(tl), None) => {
                        stack[top] = (left, tl);
                        top += 1;
                    }
                    (None, Some(tr)) => {
                        stack[top] = (right, tr);
                        top += 1;
                    }
                    (None, None) => {}
                }
            }
        }
        best
    }

    /// True if anything is hit within the ray's range.
    pub fn occluded(&self, ray: &Ray) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let inv_dir = safe_recip(ray.dir);
        let mut stack = [0u32; 64];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if node
                .bounds
                .ray_entry(ray.origin, inv_dir, ray.t_min, ray.t_max)
                .is_none()
            {
                continue;
            }
            if node.count > 0 {
                let start = node.offset as usize;
                for &id in &self.order[start..start + node.count as usize] {
                    let i = id as usize;
                    if intersect_triangle(ray, &self.tris[i], self.normals[i], id).is_some() {
                        return true;
                    }
                }
            } else {
                let left = stack[top] + 1;
                stack[top] = node.offset;
                stack[top + 1] = left;
                top += 2;
            }
        }
        false
    }

    #[cfg(test)]
    fn check_structure(&self) {
        let mut seen = vec![0u32; self.tris.len()];
        for &id in &self.order {
            seen[id as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c <= 1));
        for (i, node) in self.nodes.iter().enumerate() {
            if node.count == 0 {
                for child in [i + 1, node.offset as usize] {
                    assert!(node.bounds.contains(&self.nodes[child].bounds));
                }
            } else {
                assert!(node.count as usize <= LEAF_SIZE);
                let start = node.offset as usize;
                for &id in &self.order[start..start + node.count as usize] {
                    let tb = Aabb::from_points(&self.tris[id as usize]);
                    assert!(node.bounds.contains(&tb));
                }
            }
        }
    }
}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [u32],
    start: usize,
    end: usize,
    tris: &[[DVec3; 3]],
    centroids: &[DVec3],
) -> usize {
    let bounds = order[start..end]
        .iter()
        .flat_map(|&id| tris[id as usize])
        .fold(Aabb::EMPTY, Aabb::grow);
    let index = nodes.len();
    let count = end - start;
    if count <= LEAF_SIZE {
        nodes.push(Node {
            bounds,
            offset: start as u32,
            count: count as u32,
        });
        return index;
    }
    nodes.push(Node {
        bounds,
        offset: 0,
        count: 0,
    });
    let axis = bounds.longest_axis();
    order[start..end].sort_unstable_by(|&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    let mid = start + count / 2;
    build_node(nodes, order, start, mid, tris, centroids);
    let right = build_node(nodes, order, mid, end, tris, centroids);
    nodes[index].offset = right as u32;
    index
}
