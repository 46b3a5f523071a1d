//! Tracking-by-detection data association with distinct handling of active
//! and inactive tracks, plus the diagnostics used to tune it: distance
//! histograms, intersection-point thresholds, RCA, MOTA and IDF1.
//!
//! The usual entry points are [`Tracker`] for frame-by-frame use and
//! [`track_sequence`] for a whole loaded sequence.

pub mod analysis;
pub mod appearance;
pub mod assoc;
pub mod config;
pub mod error;
pub mod geometry;
pub mod io;
pub mod motion;
pub mod synth;
pub mod types;

pub use assoc::{hungarian, track_sequence, Assignment, FrameResult, Tracker, TrackingOutput};
pub use config::{MotionModelKind, ProxyMethod, TrackerConfig, VelocityWindow};
pub use error::{
    AnalysisError, AppearanceError, AssocError, ConfigError, Error, IoError, MotionError, SynthError,
};
pub use io::SequenceMeta;
pub use types::{BoundingBox, Detection, FeatureVector, Track, TrackId, TrackStatus};
