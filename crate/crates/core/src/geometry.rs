//! Bounding-box overlap.

use crate::types::BoundingBox;

/// Intersection over union, always in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct IoUValue(f64);

impl IoUValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<IoUValue> for f64 {
    fn from(v: IoUValue) -> f64 {
        v.0
    }
}

/// Area of the overlap of two boxes. Touching edges give zero.
pub fn intersection_area(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = a.right().min(b.right()) - a.x.max(b.x);
    let ih = a.bottom().min(b.bottom()) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        0.0
    } else {
        iw * ih
    }
}

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> IoUValue {
    if a == b {
        return IoUValue(1.0);
    }
    let inter = intersection_area(a, b);
    if inter <= 0.0 {
        return IoUValue(0.0);
    }
    let union = a.area() + b.area() - inter;
    IoUValue((inter / union).clamp(0.0, 1.0))
}

/// `1 - iou(a, b)`: zero for perfect overlap, one for disjoint boxes.
pub fn motion_cost(a: &BoundingBox, b: &BoundingBox) -> f64 {
    1.0 - iou(a, b).value()
}
