//! Per-frame association: fused cost matrix, one joint assignment over
//! active and inactive tracks, then thresholds that depend on the row's
//! track status.

mod hungarian;
mod tracker;

pub use hungarian::{hungarian, Assignment};
pub use tracker::{track_sequence, FrameResult, Tracker, TrackingOutput};

use crate::appearance::appearance_cost;
use crate::config::TrackerConfig;
use crate::error::AssocError;
use crate::geometry::motion_cost;
use crate::types::{Detection, Track};

/// Tracks x detections combined costs. Rows `[0, n_active)` belong to
/// active tracks, the remaining rows to inactive ones.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub costs: Vec<Vec<f64>>,
    pub n_active: usize,
}

impl CostMatrix {
    pub fn rows(&self) -> usize {
        self.costs.len()
    }

    pub fn cols(&self) -> usize {
        self.costs.first().map_or(0, Vec::len)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.costs[row][col]
    }

    pub fn is_active_row(&self, row: usize) -> bool {
        row < self.n_active
    }
}

/// `w * (1 - IoU(predicted, box)) + (1 - w) * appearance` for every pair.
///
/// `tracks` must list active tracks before inactive ones, and each track's
/// `predicted_box` must already refer to the detections' frame.
pub fn build_cost_matrix(
    tracks: &[&Track],
    detections: &[Detection],
    cfg: &TrackerConfig,
) -> Result<CostMatrix, AssocError> {
    let n_active = tracks.iter().take_while(|t| t.is_active()).count();
    debug_assert!(
        tracks[n_active..].iter().all(|t| !t.is_active()),
        "active tracks must precede inactive ones"
    );
    let w = cfg.effective_motion_weight();
    if cfg.appearance_enabled {
        if let Some(d) = detections.iter().find(|d| d.embedding.is_none()) {
            return Err(AssocError::MissingEmbedding {
                frame: d.frame,
                source_index: d.source_index,
            });
        }
    }
    let mut costs = Vec::with_capacity(tracks.len());
    for track in tracks {
        let mut row = Vec::with_capacity(detections.len());
        for det in detections {
            let motion = if w > 0.0 {
                motion_cost(&track.predicted_box, &det.bbox)
            } else {
                0.0
            };
            let appearance = if w < 1.0 {
                appearance_cost(track, det, cfg)?
            } else {
                0.0
            };
            row.push(w * motion + (1.0 - w) * appearance);
        }
        costs.push(row);
    }
    Ok(CostMatrix { costs, n_active })
}

/// Keeps assigned pairs whose cost is strictly below the threshold of the
/// row's status: `tau_act` for active rows, `tau_inact` for inactive rows.
pub fn filter_matches(
    assignment: &Assignment,
    costs: &CostMatrix,
    cfg: &TrackerConfig,
) -> Vec<(usize, usize)> {
    assignment
        .pairs
        .iter()
        .copied()
        .filter(|&(r, c)| {
            let d = costs.get(r, c);
            if costs.is_active_row(r) {
                d < cfg.tau_act
            } else {
                d < cfg.tau_inact
            }
        })
        .collect()
}
