//! Axis-aligned boxes and the overlap / aspect-ratio primitives built on them.

pub mod mask;

pub use mask::{mask_to_bbox, BinaryMask};

use crate::error::{Error, Result};

/// Axis-aligned box in pixel units: top-left corner plus width and height.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    /// Builds a box and checks that it denotes a visible target.
    pub fn checked(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        let b = BBox { x, y, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()) {
            return Err(Error::domain(format!("non-finite box {self:?}")));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::domain(format!("box has non-positive size {self:?}")));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    /// Component-wise `self + weight * (other - self)`.
    pub fn lerp(&self, other: &BBox, weight: f64) -> BBox {
        BBox {
            x: self.x + weight * (other.x - self.x),
            y: self.y + weight * (other.y - self.y),
            w: self.w + weight * (other.w - self.w),
            h: self.h + weight * (other.h - self.h),
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.w, self.h]
    }
}

/// Intersection over union in continuous box geometry.
pub fn iou(a: &BBox, b: &BBox) -> Result<f64> {
    for bx in [a, b] {
        if !(bx.w > 0.0 && bx.h > 0.0) {
            return Err(Error::domain(format!("iou needs positive area, got {bx:?}")));
        }
    }
    let iw = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    let inter = iw * ih;
    if inter == 0.0 {
        return Ok(0.0);
    }
    let union = a.area() + b.area() - inter;
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Width over height.
pub fn aspect_ratio(b: &BBox) -> Result<f64> {
    if !(b.h > 0.0) {
        return Err(Error::domain(format!("aspect ratio needs positive height, got {b:?}")));
    }
    Ok(b.w / b.h)
}
