use log::debug;

use super::{build_cost_matrix, filter_matches, hungarian};
use crate::appearance::{prepare_frame_embeddings, RenormParams};
use crate::config::{validate_config, MotionModelKind, TrackerConfig};
use crate::error::AssocError;
use crate::motion::{self, kalman_box, kalman_init, kalman_predict, kalman_update, kalman_velocity};
use crate::types::{BoundingBox, Detection, Track, TrackId, TrackStatus};

/// What happened to tracks and detections in one frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameResult {
    /// `(track, index into the frame's detection list, combined cost)`.
    pub matches: Vec<(TrackId, usize, f64)>,
    pub new_tracks: Vec<TrackId>,
    /// Tracks that were active and went unmatched this frame.
    pub deactivated: Vec<TrackId>,
    /// Tracks dropped from the memory bank this frame.
    pub evicted: Vec<TrackId>,
}

/// Online tracker state for one sequence.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    /// Memory bank, ordered by id.
    tracks: Vec<Track>,
    evicted: Vec<Track>,
    next_id: u64,
    last_frame: Option<u32>,
    solver_calls: u64,
    renorm: Option<RenormParams>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self, AssocError> {
        validate_config(&cfg)?;
        Ok(Self {
            cfg,
            tracks: Vec::new(),
            evicted: Vec::new(),
            next_id: 1,
            last_frame: None,
            solver_calls: 0,
            renorm: None,
        })
    }

    /// Uses explicit renormalization parameters instead of the config's `bn_*` values.
    pub fn with_renorm_params(mut self, params: RenormParams) -> Self {
        self.renorm = Some(params);
        self
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Tracks currently held in memory (active and inactive).
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn evicted_tracks(&self) -> &[Track] {
        &self.evicted
    }

    /// Number of assignment problems solved so far.
    pub fn solver_invocations(&self) -> u64 {
        self.solver_calls
    }

    pub fn tracks_born(&self) -> u64 {
        self.next_id - 1
    }

    /// Every track ever created, sorted by id.
    pub fn into_tracks(self) -> Vec<Track> {
        let mut all = self.evicted;
        all.extend(self.tracks);
        all.sort_by_key(|t| t.id);
        all
    }

    /// Associates one frame of detections.
    pub fn step(&mut self, frame: u32, detections: &[Detection]) -> Result<FrameResult, AssocError> {
        if let Some(previous) = self.last_frame {
            if frame <= previous {
                return Err(AssocError::OutOfOrderFrame { previous, got: frame });
            }
        }
        if let Some(d) = detections.iter().find(|d| d.frame != frame) {
            return Err(AssocError::WrongFrame {
                frame: d.frame,
                source_index: d.source_index,
            });
        }
        let elapsed = self.last_frame.map_or(1, |p| frame - p);

        // (1) confidence filter; keep indices into the caller's list
        let (kept_idx, mut kept): (Vec<usize>, Vec<Detection>) = detections
            .iter()
            .enumerate()
            .filter(|(_, d)| d.confidence >= self.cfg.det_confidence_min)
            .map(|(i, d)| (i, d.clone()))
            .unzip();
        if kept.len() < detections.len() {
            debug!(
                "frame {frame}: dropped {} detections below confidence {}",
                detections.len() - kept.len(),
                self.cfg.det_confidence_min
            );
        }

        // (2) embedding normalization
        self.prepare_embeddings(&mut kept)?;

        // (3) motion prediction
        for track in &mut self.tracks {
            predict_track(track, frame, &self.cfg);
        }

        // (4) one joint assignment over active + inactive rows
        let mut order: Vec<usize> = (0..self.tracks.len()).collect();
        order.sort_by_key(|&i| (!self.tracks[i].is_active(), self.tracks[i].id));
        let rows: Vec<&Track> = order.iter().map(|&i| &self.tracks[i]).collect();
        let costs = build_cost_matrix(&rows, &kept, &self.cfg)?;
        let assignment = hungarian(&costs.costs);
        self.solver_calls += 1;
        let approved = filter_matches(&assignment, &costs, &self.cfg);

        let mut result = FrameResult::default();
        let mut track_matched = vec![false; self.tracks.len()];
        let mut det_matched = vec![false; kept.len()];

        // (5) matched tracks absorb their detection
        for &(r, c) in &approved {
            let ti = order[r];
            track_matched[ti] = true;
            det_matched[c] = true;
            let track = &mut self.tracks[ti];
            result.matches.push((track.id, kept_idx[c], costs.get(r, c)));
            absorb(track, kept[c].clone(), &self.cfg)?;
        }

        // (6) unmatched tracks go or stay inactive, (7) eviction
        let patience = self.cfg.inactive_patience;
        let mut survivors = Vec::with_capacity(self.tracks.len());
        for (track, matched) in std::mem::take(&mut self.tracks).into_iter().zip(track_matched) {
            if matched {
                survivors.push(track);
                continue;
            }
            let mut track = track;
            let was_active = track.is_active();
            let inactive_for = track.status.frames_inactive() + elapsed;
            track.status = TrackStatus::Inactive(inactive_for);
            track.last_predicted_box = track.predicted_box;
            track.predicted_frame = frame;
            if inactive_for > patience {
                result.evicted.push(track.id);
                self.evicted.push(track);
            } else {
                if was_active {
                    result.deactivated.push(track.id);
                }
                survivors.push(track);
            }
        }
        self.tracks = survivors;

        // (8) births
        for (c, det) in kept.into_iter().enumerate() {
            if det_matched[c] {
                continue;
            }
            if det.confidence < self.cfg.new_track_confidence_min {
                debug!(
                    "frame {frame}: unmatched detection {} (confidence {}) does not start a track",
                    det.source_index, det.confidence
                );
                continue;
            }
            let id = TrackId(self.next_id);
            self.next_id += 1;
            let mut track = Track::new(id, det);
            if self.cfg.motion_model == MotionModelKind::KalmanCV {
                track.kalman = Some(kalman_init(&track.last_box(), &self.cfg.kalman));
            }
            result.new_tracks.push(id);
            self.tracks.push(track);
        }

        self.last_frame = Some(frame);
        Ok(result)
    }

    fn prepare_embeddings(&mut self, dets: &mut [Detection]) -> Result<(), AssocError> {
        if self.cfg.appearance_enabled {
            if let Some(d) = dets.iter().find(|d| d.embedding.is_none()) {
                return Err(AssocError::MissingEmbedding {
                    frame: d.frame,
                    source_index: d.source_index,
                });
            }
        }
        let dim = dets.iter().find_map(|d| d.embedding.as_ref().map(|e| e.dim()));
        let params = match (&self.renorm, dim) {
            (Some(p), _) => p.clone(),
            (None, Some(dim)) if self.cfg.renormalize_per_frame => {
                let p = RenormParams::from_config(&self.cfg, dim)?;
                self.renorm = Some(p.clone());
                p
            }
            _ => RenormParams::identity(0, self.cfg.bn_eps),
        };
        prepare_frame_embeddings(dets, self.cfg.renormalize_per_frame, &params)?;
        Ok(())
    }
}

fn predict_track(track: &mut Track, frame: u32, cfg: &TrackerConfig) {
    track.predicted_box = match cfg.motion_model {
        MotionModelKind::Linear => motion::predict(track, frame),
        MotionModelKind::KalmanCV => {
            let steps = frame.saturating_sub(track.predicted_frame);
            match track.kalman.as_mut() {
                Some(state) => {
                    for _ in 0..steps {
                        *state = kalman_predict(state, &cfg.kalman);
                    }
                    kalman_box(state)
                }
                None => motion::predict(track, frame),
            }
        }
        MotionModelKind::None => {
            if track.is_active() {
                track.last_box()
            } else {
                track.last_predicted_box
            }
        }
    };
}

fn absorb(track: &mut Track, det: Detection, cfg: &TrackerConfig) -> Result<(), AssocError> {
    let frame = det.frame;
    let observed: BoundingBox = det.bbox;
    track.detections.push(det);
    track.status = TrackStatus::Active;
    match (cfg.motion_model, track.kalman.as_ref()) {
        (MotionModelKind::KalmanCV, Some(state)) => {
            let updated = kalman_update(state, &observed, &cfg.kalman)?;
            track.velocity = kalman_velocity(&updated);
            track.kalman = Some(updated);
        }
        _ => track.velocity = motion::track_velocity(track, cfg.velocity_window_k),
    }
    track.last_predicted_box = observed;
    track.predicted_frame = frame;
    Ok(())
}

/// Result of running the tracker over a whole sequence.
#[derive(Debug, Clone)]
pub struct TrackingOutput {
    pub tracks: Vec<Track>,
    pub frames: Vec<FrameResult>,
    pub solver_invocations: u64,
    pub num_frames: u32,
}

impl TrackingOutput {
    pub fn tracks_born(&self) -> usize {
        self.tracks.len()
    }

    pub fn tracks_evicted(&self) -> usize {
        self.frames.iter().map(|f| f.evicted.len()).sum()
    }

    /// Every associated detection tagged with its track id, sorted by
    /// (frame, track id) like a results file.
    pub fn result_rows(&self) -> Vec<Detection> {
        let mut rows: Vec<Detection> = self
            .tracks
            .iter()
            .flat_map(|t| t.detections.iter().map(move |d| Detection { id: Some(t.id.0), ..d.clone() }))
            .collect();
        rows.sort_by_key(|d| (d.frame, d.id));
        rows
    }
}

/// Steps a tracker through frames `1..=num_frames` (or up to the last
/// detection's frame), including frames without detections.
pub fn track_sequence(
    detections: &[Detection],
    cfg: &TrackerConfig,
    num_frames: Option<u32>,
    renorm: Option<RenormParams>,
) -> Result<TrackingOutput, AssocError> {
    let mut tracker = Tracker::new(cfg.clone())?;
    if let Some(p) = renorm {
        tracker = tracker.with_renorm_params(p);
    }
    let last = detections.iter().map(|d| d.frame).max().unwrap_or(0);
    let num_frames = num_frames.unwrap_or(0).max(last);
    let mut by_frame: Vec<Vec<Detection>> = vec![Vec::new(); num_frames as usize + 1];
    for d in detections {
        by_frame[d.frame as usize].push(d.clone());
    }
    let mut frames = Vec::with_capacity(num_frames as usize);
    for (frame, dets) in by_frame.iter_mut().enumerate().skip(1) {
        dets.sort_by_key(|d| d.source_index);
        frames.push(tracker.step(frame as u32, dets)?);
    }
    let solver_invocations = tracker.solver_invocations();
    Ok(TrackingOutput {
        tracks: tracker.into_tracks(),
        frames,
        solver_invocations,
        num_frames,
    })
}
