//! Axis-aligned boxes and the two pairwise overlap measures used by the QUBO.
//!
//! Coordinates are continuous corners `(x1, y1, x2, y2)` with exclusive
//! extents: a box `(0, 0, 10, 10)` has area 100, no `+1` pixel correction.

use alloc::format;

use crate::{Error, Result};

/// A scored detection (or ground-truth object, in which case `score` is unused).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub score: f64,
    pub class_id: u32,
    /// Position of the box in its image's original detection list.
    pub source_index: usize,
}

impl BoundingBox {
    /// Builds a box, rejecting non-finite values, zero or negative extents and
    /// scores outside `[0, 1]`.
    pub fn new(
        corners: [f64; 4],
        score: f64,
        class_id: u32,
        source_index: usize,
    ) -> Result<Self> {
        let b = Self {
            x1: corners[0],
            y1: corners[1],
            x2: corners[2],
            y2: corners[3],
            score,
            class_id,
            source_index,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let coords = [self.x1, self.y1, self.x2, self.y2];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "box {} has non-finite coordinates {:?}",
                self.source_index, coords
            )));
        }
        if !(self.x2 > self.x1 && self.y2 > self.y1) {
            return Err(Error::InvalidInput(format!(
                "box {} has non-positive extent {:?}",
                self.source_index, coords
            )));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::InvalidInput(format!(
                "box {} has score {} outside [0, 1]",
                self.source_index, self.score
            )));
        }
        Ok(())
    }

    pub fn corners(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn diagonal(&self) -> f64 {
        libm::hypot(self.width(), self.height())
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = score;
        self
    }

    /// Area of the intersection rectangle, `0` when the boxes do not overlap.
    pub fn intersection_area(&self, other: &Self) -> f64 {
        let w = self.x2.min(other.x2) - self.x1.max(other.x1);
        let h = self.y2.min(other.y2) - self.y1.max(other.y1);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }
}

pub fn area(b: &BoundingBox) -> f64 {
    b.area()
}

/// Intersection over union. Symmetric, in `[0, 1]`, exactly `0` for disjoint
/// boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).min(1.0)
}

/// Positional similarity of two boxes:
///
/// `exp(-|c_a - c_b|^2 / (2 (d/2)^2)) * min(area_a, area_b) / max(area_a, area_b)`
///
/// where `c` is the box centre and `d` the mean of the two diagonals. The
/// value is `1` for identical boxes, equals the area ratio when the centres
/// coincide and falls off with centre distance relative to box size, so it is
/// invariant to translating or uniformly scaling both boxes.
pub fn spatial_overlap(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    let dist_sq = (ax - bx) * (ax - bx) + (ay - by) * (ay - by);
    let half_diag = (a.diagonal() + b.diagonal()) / 4.0;
    let bandwidth = 2.0 * half_diag * half_diag;
    let (area_a, area_b) = (a.area(), b.area());
    let scale = area_a.min(area_b) / area_a.max(area_b);
    libm::exp(-dist_sq / bandwidth) * scale
}
