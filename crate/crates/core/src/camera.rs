use glam::DVec3;

use crate::geometry::{Bvh, Ray};

/// Pinhole camera with `+y` as the preferred up direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub position: DVec3,
    pub look_at: DVec3,
    /// Vertical field of view, radians.
    pub vfov: f64,
    pub width: usize,
    pub height: usize,
}

/// First surface seen through a pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub position: DVec3,
    /// Geometric normal flipped to face the camera.
    pub normal: DVec3,
}

impl Camera {
    pub fn is_valid(&self) -> bool {
        self.vfov > 0.0
            && self.vfov < std::f64::consts::PI
            && self.width > 0
            && self.height > 0
            && (self.look_at - self.position).length() > 0.0
    }

    /// Ray through the center of pixel `(x, y)`, `y = 0` at the top.
    pub fn primary_ray(&self, x: usize, y: usize) -> Ray {
        let forward = (self.look_at - self.position).normalize();
        let up_hint = if forward.cross(DVec3::Y).length_squared() < 1e-12 {
            DVec3::Z
        } else {
            DVec3::Y
        };
        let right = forward.cross(up_hint).normalize();
        let up = right.cross(forward);
        let half_h = (0.5 * self.vfov).tan();
        let half_w = half_h * self.width as f64 / self.height as f64;
        let sx = ((x as f64 + 0.5) / self.width as f64 * 2.0 - 1.0) * half_w;
        let sy = (1.0 - (y as f64 + 0.5) / self.height as f64 * 2.0) * half_h;
        Ray::new(self.position, forward + sx * right + sy * up)
    }

    pub fn trace(&self, bvh: &Bvh, x: usize, y: usize) -> Option<SurfacePoint> {
        let ray = self.primary_ray(x, y);
        let hit = bvh.closest_hit(&ray)?;
        let n = bvh.normal(hit.triangle);
        Some(SurfacePoint {
            position: ray.at(hit.t),
            normal: if n.dot(ray.dir) > 0.0 { -n } else { n },
        })
    }
}
