use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x_min, x_max] × [z_min, z_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, z_min: f64, z_max: f64) -> Result<Self> {
        let ok = [x_min, x_max, z_min, z_max].iter().all(|v| v.is_finite()) && x_max > x_min && z_max > z_min;
        if !ok {
            return Err(Error::InvalidExtent(format!("[{x_min}, {x_max}] x [{z_min}, {z_max}]")));
        }
        Ok(Self { x_min, x_max, z_min, z_max })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.z_max - self.z_min
    }

    /// Closed containment.
    pub fn contains(&self, x: f64, z: f64) -> bool {
        x >= self.x_min && x <= self.x_max && z >= self.z_min && z <= self.z_max
    }

    /// Open containment.
    pub fn contains_strictly(&self, x: f64, z: f64) -> bool {
        x > self.x_min && x < self.x_max && z > self.z_min && z < self.z_max
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.contains(other.x_min, other.z_min) && self.contains(other.x_max, other.z_max)
    }
}
