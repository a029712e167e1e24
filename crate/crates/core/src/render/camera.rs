use super::vec3::{Ray, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Vertical field of view in degrees.
    Perspective { vfov_deg: f64 },
    /// World-space height of the view; rays are parallel.
    Orthographic { height: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub eye: Vec3,
    pub target: Vec3,
    pub up: Vec3,
    pub projection: Projection,
    pub width: u32,
    pub height: u32,
}

/// Orthonormal view basis.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Basis {
    pub forward: Vec3,
    pub right: Vec3,
    pub up: Vec3,
}

impl Camera {
    pub fn perspective(eye: Vec3, target: Vec3, vfov_deg: f64, width: u32, height: u32) -> Self {
        Self {
            eye,
            target,
            up: Vec3::new(0.0, 1.0, 0.0),
            projection: Projection::Perspective { vfov_deg },
            width,
            height,
        }
    }

    pub fn orthographic(eye: Vec3, target: Vec3, view_height: f64, width: u32, height: u32) -> Self {
        Self {
            eye,
            target,
            up: Vec3::new(0.0, 1.0, 0.0),
            projection: Projection::Orthographic { height: view_height },
            width,
            height,
        }
    }

    pub fn with_up(mut self, up: Vec3) -> Self {
        self.up = up;
        self
    }

    pub(crate) fn basis(&self) -> Basis {
        let forward = (self.target - self.eye).normalized();
        let mut right = forward.cross(self.up);
        if right.length() < 1e-12 {
            // `up` parallel to the view direction: pick any perpendicular.
            let alt = if forward.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 0.0, 1.0) };
            right = forward.cross(alt);
        }
        let right = right.normalized();
        let up = right.cross(forward);
        Basis { forward, right, up }
    }

    fn half_extent(&self) -> (f64, f64) {
        let aspect = self.width as f64 / self.height as f64;
        let half_h = match self.projection {
            Projection::Perspective { vfov_deg } => (vfov_deg.to_radians() * 0.5).tan(),
            Projection::Orthographic { height } => height * 0.5,
        };
        (half_h * aspect, half_h)
    }

    /// Ray through the centre of pixel `(px, py)`, row 0 at the top.
    pub fn ray(&self, px: u32, py: u32) -> Ray {
        self.ray_with_basis(&self.basis(), px, py)
    }

    pub(crate) fn ray_with_basis(&self, b: &Basis, px: u32, py: u32) -> Ray {
        let (hw, hh) = self.half_extent();
        let sx = ((px as f64 + 0.5) / self.width as f64 * 2.0 - 1.0) * hw;
        let sy = (1.0 - (py as f64 + 0.5) / self.height as f64 * 2.0) * hh;
        match self.projection {
            Projection::Perspective { .. } => Ray {
                origin: self.eye,
                dir: (b.forward + b.right * sx + b.up * sy).normalized(),
            },
            Projection::Orthographic { .. } => Ray {
                origin: self.eye + b.right * sx + b.up * sy,
                dir: b.forward,
            },
        }
    }

    /// World-space size of one pixel at distance `depth` along the view.
    pub fn pixel_footprint(&self, depth: f64) -> f64 {
        let (_, hh) = self.half_extent();
        match self.projection {
            Projection::Perspective { .. } => 2.0 * hh * depth / self.height as f64,
            Projection::Orthographic { .. } => 2.0 * hh / self.height as f64,
        }
    }
}
