//! Plain value types shared by every module.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

/// Axis-aligned box in top-left + size form (MOTChallenge convention).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    /// `w > 0`, `h > 0` and every coordinate finite.
    pub fn is_valid(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.w.is_finite()
            && self.h.is_finite()
            && self.w > 0.0
            && self.h > 0.0
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

    pub fn center(&self) -> (f64, f64) {
        (self.x + 0.5 * self.w, self.y + 0.5 * self.h)
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx - 0.5 * w, cy - 0.5 * h, w, h)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.w, self.h]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.x, self.y, self.w, self.h)
    }
}

/// Appearance embedding of a single detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Unit L2 norm copy. Zero vectors are returned unchanged.
    pub fn normalized(&self) -> FeatureVector {
        let mut out = self.clone();
        out.normalize();
        out
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            self.0.iter_mut().for_each(|v| *v /= n);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f32]> for FeatureVector {
    fn from(v: &[f32]) -> Self {
        Self(v.iter().map(|&x| x as f64).collect())
    }
}

/// One observed (or annotated) bounding box.
///
/// Raw detections carry `id == None`; ground truth and tracker output rows
/// carry the identity / track id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// 1-based frame index.
    pub frame: u32,
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub embedding: Option<FeatureVector>,
    /// Row order within this frame's block of the detection file.
    pub source_index: u32,
    /// Ground-truth only.
    pub visibility: Option<f64>,
    pub id: Option<u64>,
}

impl Detection {
    pub fn new(frame: u32, bbox: BoundingBox, confidence: f64) -> Self {
        Self {
            frame,
            bbox,
            confidence,
            embedding: None,
            source_index: 0,
            visibility: None,
            id: None,
        }
    }

    pub fn with_embedding(mut self, embedding: FeatureVector) -> Self {
        self.embedding = Some(embedding);
        self
    }

    pub fn with_source_index(mut self, source_index: u32) -> Self {
        self.source_index = source_index;
        self
    }

    pub fn with_id(mut self, id: u64) -> Self {
        self.id = Some(id);
        self
    }

    pub fn with_visibility(mut self, visibility: f64) -> Self {
        self.visibility = Some(visibility);
        self
    }
}

/// Positive integer, unique per sequence, never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrackId(pub u64);

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackStatus {
    Active,
    /// Number of consecutive frames without a match, always >= 1.
    Inactive(u32),
}

impl TrackStatus {
    pub fn is_active(&self) -> bool {
        matches!(self, TrackStatus::Active)
    }

    pub fn frames_inactive(&self) -> u32 {
        match self {
            TrackStatus::Active => 0,
            TrackStatus::Inactive(n) => *n,
        }
    }
}

/// Gaussian state of the constant-velocity Kalman model,
/// `[cx, cy, w, h, vcx, vcy, vw, vh]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: nalgebra::SVector<f64, 8>,
    pub covariance: nalgebra::SMatrix<f64, 8, 8>,
}

/// A trajectory: time-ordered detections plus association state.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: TrackId,
    pub detections: Vec<Detection>,
    pub status: TrackStatus,
    /// Motion prediction for the frame currently being associated.
    pub predicted_box: BoundingBox,
    /// Prediction carried forward while the track is inactive.
    pub last_predicted_box: BoundingBox,
    /// Frame `last_predicted_box` refers to.
    pub predicted_frame: u32,
    /// Pixels per frame for (x, y, w, h).
    pub velocity: [f64; 4],
    pub kalman: Option<KalmanState>,
}

impl Track {
    /// Starts an active track from its first detection.
    pub fn new(id: TrackId, detection: Detection) -> Self {
        let bbox = detection.bbox;
        let frame = detection.frame;
        Self {
            id,
            detections: vec![detection],
            status: TrackStatus::Active,
            predicted_box: bbox,
            last_predicted_box: bbox,
            predicted_frame: frame,
            velocity: [0.0; 4],
            kalman: None,
        }
    }

    pub fn last_detection(&self) -> &Detection {
        // Tracks are never constructed empty.
        self.detections.last().expect("track without detections")
    }

    pub fn last_frame(&self) -> u32 {
        self.last_detection().frame
    }

    pub fn last_box(&self) -> BoundingBox {
        self.last_detection().bbox
    }

    /// Most recent embedding, if the track has any.
    pub fn last_embedding(&self) -> Option<&FeatureVector> {
        self.detections.iter().rev().find_map(|d| d.embedding.as_ref())
    }

    /// Every stored embedding in time order.
    pub fn embeddings(&self) -> Vec<&FeatureVector> {
        self.detections.iter().filter_map(|d| d.embedding.as_ref()).collect()
    }

    pub fn is_active(&self) -> bool {
        self.status.is_active()
    }

    /// Frames strictly increasing across the detection list.
    pub fn is_frame_ordered(&self) -> bool {
        self.detections.windows(2).all(|w| w[0].frame < w[1].frame)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_validity() {
        assert!(BoundingBox::new(0.0, 0.0, 1.0, 1.0).is_valid());
        assert!(!BoundingBox::new(0.0, 0.0, 0.0, 1.0).is_valid());
        assert!(!BoundingBox::new(0.0, 0.0, 1.0, -2.0).is_valid());
        assert!(!BoundingBox::new(f64::NAN, 0.0, 1.0, 1.0).is_valid());
    }

    #[test]
    fn center_roundtrip() {
        let b = BoundingBox::new(10.0, 20.0, 30.0, 40.0);
        let (cx, cy) = b.center();
        assert_eq!(BoundingBox::from_center(cx, cy, b.w, b.h), b);
    }

    #[test]
    fn last_embedding_skips_missing() {
        let f = FeatureVector::new(vec![1.0, 0.0]);
        let d1 = Detection::new(1, BoundingBox::new(0.0, 0.0, 1.0, 1.0), 1.0).with_embedding(f.clone());
        let d2 = Detection::new(2, BoundingBox::new(0.0, 0.0, 1.0, 1.0), 1.0);
        let mut t = Track::new(TrackId(1), d1);
        t.detections.push(d2);
        assert_eq!(t.last_embedding(), Some(&f));
        assert!(t.is_frame_ordered());
    }
}
