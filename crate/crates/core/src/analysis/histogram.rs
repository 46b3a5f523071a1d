//! Distance histograms between detections and earlier detections of the same
//! or other GT identities, and the intersection point separating them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::matching::{by_frame, match_to_gt, DEFAULT_IOU_MIN};
use crate::appearance::{appearance_cost, cosine_distance, prepare_frame_embeddings, RenormParams};
use crate::config::TrackerConfig;
use crate::error::AnalysisError;
use crate::geometry::motion_cost;
use crate::motion::{extrapolate, track_velocity};
use crate::types::{Detection, Track, TrackId, TrackStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Population {
    ActiveSame,
    ActiveDiff,
    InactiveSame,
    InactiveDiff,
}

impl Population {
    pub const ALL: [Population; 4] = [
        Population::ActiveSame,
        Population::ActiveDiff,
        Population::InactiveSame,
        Population::InactiveDiff,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Population::ActiveSame => "active_same",
            Population::ActiveDiff => "active_diff",
            Population::InactiveSame => "inactive_same",
            Population::InactiveDiff => "inactive_diff",
        }
    }

    fn of(active: bool, same: bool) -> Self {
        match (active, same) {
            (true, true) => Population::ActiveSame,
            (true, false) => Population::ActiveDiff,
            (false, true) => Population::InactiveSame,
            (false, false) => Population::InactiveDiff,
        }
    }
}

/// Which distance the histograms record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DistanceMode {
    /// Cosine distance to the other identity's latest embedding.
    Last,
    /// The tracker's appearance cost: last embedding for active, proxy for inactive.
    Proxy,
    /// `1 - IoU` against the linear prediction.
    Motion,
}

impl FromStr for DistanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "last" => Ok(DistanceMode::Last),
            "proxy" => Ok(DistanceMode::Proxy),
            "motion" => Ok(DistanceMode::Motion),
            other => Err(format!("unknown distance mode `{other}` (last|proxy|motion)")),
        }
    }
}

/// `0, 0.05, ..., 2.0`.
pub fn default_edges() -> Vec<f64> {
    (0..=40).map(|i| f64::from(i) / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub population: Population,
}

impl Histogram {
    /// # Panics
    /// If `edges` has fewer than two entries or is not strictly increasing.
    pub fn new(edges: Vec<f64>, population: Population) -> Self {
        assert!(edges.len() >= 2, "a histogram needs at least one bin");
        assert!(edges.windows(2).all(|w| w[0] < w[1]), "edges must increase");
        let counts = vec![0; edges.len() - 1];
        Self {
            edges,
            counts,
            population,
        }
    }

    /// Values outside the edges go to the first or last bin.
    pub fn add(&mut self, value: f64) {
        let n = self.counts.len();
        let i = self.edges.partition_point(|&e| e <= value);
        self.counts[i.saturating_sub(1).min(n - 1)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn scaled(&self, factor: u64) -> Self {
        Self {
            counts: self.counts.iter().map(|c| c * factor).collect(),
            ..self.clone()
        }
    }
}

/// The four populations, in [`Population::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceHistograms {
    pub mode: DistanceMode,
    pub histograms: Vec<Histogram>,
}

impl DistanceHistograms {
    pub fn get(&self, population: Population) -> &Histogram {
        &self.histograms[population as usize]
    }

    pub fn total(&self) -> u64 {
        self.histograms.iter().map(Histogram::total).sum()
    }
}

impl fmt::Display for DistanceHistograms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lo\thi")?;
        for h in &self.histograms {
            write!(f, "\t{}", h.population.name())?;
        }
        writeln!(f)?;
        let edges = &self.histograms[0].edges;
        for (i, w) in edges.windows(2).enumerate() {
            write!(f, "{:.3}\t{:.3}", w[0], w[1])?;
            for h in &self.histograms {
                write!(f, "\t{}", h.counts[i])?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Replays the sequence over GT-matched detections.
///
/// For each matched detection and each GT identity seen before, one distance
/// is recorded: to the identity's state as an active track when it was last
/// seen in the previous frame, as an inactive one when it was last seen
/// within `inactive_patience` frames before that. Identities seen longer ago
/// are skipped. Same/diff is decided by GT identity.
///
/// Embeddings go through the same per-frame preparation as in the tracker.
pub fn build_distance_histograms(
    gt: &[Detection],
    dets: &[Detection],
    cfg: &TrackerConfig,
    mode: DistanceMode,
    edges: &[f64],
    renorm: Option<&RenormParams>,
) -> Result<DistanceHistograms, AnalysisError> {
    if mode != DistanceMode::Motion {
        if let Some(d) = dets.iter().find(|d| d.embedding.is_none()) {
            return Err(AnalysisError::MissingEmbedding {
                frame: d.frame,
                source_index: d.source_index,
            });
        }
    }
    let mut histograms: Vec<Histogram> = Population::ALL
        .iter()
        .map(|&p| Histogram::new(edges.to_vec(), p))
        .collect();

    let table = match_to_gt(dets, gt, DEFAULT_IOU_MIN);
    let gt_of_row: BTreeMap<usize, u64> = table.matches.iter().map(|m| (m.row, m.gt_id)).collect();
    let mut identities: BTreeMap<u64, Track> = BTreeMap::new();

    for (frame, idx) in by_frame(dets) {
        let mut frame_dets: Vec<Detection> = idx.iter().map(|&i| dets[i].clone()).collect();
        if mode != DistanceMode::Motion {
            let dim = frame_dets.iter().find_map(|d| d.embedding.as_ref().map(|e| e.dim())).unwrap_or(0);
            let params = match renorm {
                Some(p) => p.clone(),
                None if cfg.renormalize_per_frame => RenormParams::from_config(cfg, dim)?,
                None => RenormParams::identity(dim, cfg.bn_eps),
            };
            prepare_frame_embeddings(&mut frame_dets, cfg.renormalize_per_frame, &params)?;
        }

        let matched: Vec<(u64, Detection)> = idx
            .iter()
            .zip(frame_dets)
            .filter_map(|(i, d)| gt_of_row.get(i).map(|&g| (g, d)))
            .collect();

        for (g, det) in &matched {
            for (&h, track) in &identities {
                let gap = frame - track.last_frame() - 1;
                let active = gap == 0;
                if !active && gap > cfg.inactive_patience {
                    continue;
                }
                let dist = match mode {
                    DistanceMode::Last => {
                        let last = track.last_embedding().ok_or(AnalysisError::MissingEmbedding {
                            frame: track.last_frame(),
                            source_index: track.last_detection().source_index,
                        })?;
                        cosine_distance(det.embedding.as_ref().expect("checked above"), last)?
                    }
                    DistanceMode::Proxy => {
                        let mut view = track.clone();
                        view.status = if active {
                            TrackStatus::Active
                        } else {
                            TrackStatus::Inactive(gap)
                        };
                        appearance_cost(&view, det, cfg)?
                    }
                    DistanceMode::Motion => {
                        let velocity = track_velocity(track, cfg.velocity_window_k);
                        let predicted = extrapolate(&track.last_box(), &velocity, f64::from(frame - track.last_frame()));
                        motion_cost(&predicted, &det.bbox)
                    }
                };
                histograms[Population::of(active, *g == h) as usize].add(dist);
            }
        }

        for (g, det) in matched {
            match identities.get_mut(&g) {
                Some(track) => track.detections.push(det),
                None => {
                    identities.insert(g, Track::new(TrackId(g), det));
                }
            }
        }
    }
    Ok(DistanceHistograms { mode, histograms })
}

/// Threshold minimizing false-positive plus false-negative percentage cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntersectionPoint {
    pub x: f64,
    /// Percentage of `diff` left of `x` plus percentage of `same` right of it.
    pub cost: f64,
}

/// Evaluates every bin edge as a candidate; ties resolve to the midpoint of
/// the first run of minimizing edges.
pub fn find_intersection_point(same: &Histogram, diff: &Histogram) -> Result<IntersectionPoint, AnalysisError> {
    if same.edges != diff.edges {
        return Err(AnalysisError::BinMismatch);
    }
    let (ts, td) = (same.total(), diff.total());
    if ts == 0 || td == 0 {
        return Err(AnalysisError::EmptyHistogram);
    }
    let mut cs = 0u64;
    let mut cd = 0u64;
    let mut costs = Vec::with_capacity(same.edges.len());
    for j in 0..same.edges.len() {
        if j > 0 {
            cs += same.counts[j - 1];
            cd += diff.counts[j - 1];
        }
        let fp = 100.0 * cd as f64 / td as f64;
        let fn_ = 100.0 - 100.0 * cs as f64 / ts as f64;
        costs.push(fp + fn_);
    }
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-9;
    let start = costs.iter().position(|&c| c <= best + tol).expect("nonempty");
    let end = start + costs[start..].iter().take_while(|&&c| c <= best + tol).count() - 1;
    Ok(IntersectionPoint {
        x: 0.5 * (same.edges[start] + same.edges[end]),
        cost: best.max(0.0),
    })
}
