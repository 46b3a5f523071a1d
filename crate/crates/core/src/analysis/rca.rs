//! Rate of correct associations: for every GT-matched result row, whether it
//! carries the same track id as the previous row of its GT identity.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::matching::GtMatchTable;
use crate::error::AnalysisError;
use crate::io::SequenceMeta;
use crate::types::Detection;

pub const DEFAULT_VISIBILITY_EDGES: [f64; 4] = [0.0, 0.33, 0.66, 1.0];
pub const DEFAULT_OCCLUSION_EDGES: [f64; 7] = [0.0, 0.1, 0.3, 0.5, 1.0, 2.0, f64::INFINITY];

/// How associations are grouped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RcaBinning {
    /// GT visibility of the current row; the last bin is closed.
    Visibility(Vec<f64>),
    /// Seconds since the previous row of the same GT identity.
    Occlusion(Vec<f64>),
    /// One bin, labelled by whether the camera moves.
    Camera,
}

impl RcaBinning {
    pub fn visibility() -> Self {
        RcaBinning::Visibility(DEFAULT_VISIBILITY_EDGES.to_vec())
    }

    pub fn occlusion() -> Self {
        RcaBinning::Occlusion(DEFAULT_OCCLUSION_EDGES.to_vec())
    }

    pub fn name(&self) -> &'static str {
        match self {
            RcaBinning::Visibility(_) => "visibility",
            RcaBinning::Occlusion(_) => "occlusion",
            RcaBinning::Camera => "camera",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RcaBin {
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    pub tp_ass: u64,
    pub fp_ass: u64,
}

impl RcaBin {
    /// `None` when the bin holds no associations.
    pub fn rca(&self) -> Option<f64> {
        ratio(self.tp_ass, self.fp_ass)
    }
}

fn ratio(tp: u64, fp: u64) -> Option<f64> {
    (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RcaReport {
    pub binning: &'static str,
    pub bins: Vec<RcaBin>,
}

impl RcaReport {
    pub fn tp_ass(&self) -> u64 {
        self.bins.iter().map(|b| b.tp_ass).sum()
    }

    pub fn fp_ass(&self) -> u64 {
        self.bins.iter().map(|b| b.fp_ass).sum()
    }

    /// RCA over all bins.
    pub fn overall(&self) -> Option<f64> {
        ratio(self.tp_ass(), self.fp_ass())
    }

    /// The bin whose range contains `value`.
    pub fn bin_containing(&self, value: f64) -> Option<&RcaBin> {
        let last = self.bins.len().checked_sub(1)?;
        self.bins
            .iter()
            .enumerate()
            .find(|(i, b)| value >= b.lo && (value < b.hi || (*i == last && value <= b.hi)))
            .map(|(_, b)| b)
    }
}

impl fmt::Display for RcaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}\ttp_ass\tfp_ass\trca", self.binning)?;
        for b in &self.bins {
            let rca = b.rca().map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
            writeln!(f, "{}\t{}\t{}\t{}", b.label, b.tp_ass, b.fp_ass, rca)?;
        }
        Ok(())
    }
}

fn range_label(lo: f64, hi: f64, unit: &str) -> String {
    if hi.is_infinite() {
        format!(">={lo:.2}{unit}")
    } else {
        format!("{lo:.2}-{hi:.2}{unit}")
    }
}

fn range_bins(edges: &[f64], unit: &str) -> Vec<RcaBin> {
    edges
        .windows(2)
        .map(|w| RcaBin {
            label: range_label(w[0], w[1], unit),
            lo: w[0],
            hi: w[1],
            tp_ass: 0,
            fp_ass: 0,
        })
        .collect()
}

/// Bin for `value`: `[lo, hi)`, with the last bin closed. Values outside the
/// edges are dropped.
fn bin_index(edges: &[f64], value: f64) -> Option<usize> {
    let n = edges.len().checked_sub(1)?;
    if n == 0 || !(value >= edges[0] && value <= edges[n]) {
        return None;
    }
    let i = edges.partition_point(|&e| e <= value);
    Some(i.saturating_sub(1).min(n - 1))
}

fn check_edges(edges: &[f64]) -> Result<(), AnalysisError> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(AnalysisError::BinMismatch);
    }
    Ok(())
}

/// Counts TP/FP associations per bin. Every matched row whose GT identity was
/// matched before (at any earlier frame) is one association.
pub fn compute_rca(
    table: &GtMatchTable,
    gt: &[Detection],
    meta: &SequenceMeta,
    binning: &RcaBinning,
) -> Result<RcaReport, AnalysisError> {
    if table.matches.iter().any(|m| m.row_id.is_none()) {
        return Err(AnalysisError::MissingTrackIds);
    }
    let mut bins = match binning {
        RcaBinning::Visibility(edges) => {
            check_edges(edges)?;
            range_bins(edges, "")
        }
        RcaBinning::Occlusion(edges) => {
            check_edges(edges)?;
            range_bins(edges, "s")
        }
        RcaBinning::Camera => {
            let moving = f64::from(u8::from(meta.camera_moving));
            vec![RcaBin {
                label: if meta.camera_moving { "moving" } else { "static" }.into(),
                lo: moving,
                hi: moving,
                tp_ass: 0,
                fp_ass: 0,
            }]
        }
    };

    let mut order: Vec<usize> = (0..table.matches.len()).collect();
    order.sort_by_key(|&i| (table.matches[i].frame, table.matches[i].row));
    // gt identity -> (frame, track id) of its latest matched row
    let mut last: HashMap<u64, (u32, u64)> = HashMap::new();
    for i in order {
        let m = &table.matches[i];
        let track = m.row_id.unwrap_or_default();
        if let Some(&(prev_frame, prev_track)) = last.get(&m.gt_id) {
            let idx = match binning {
                RcaBinning::Visibility(edges) => {
                    let vis = gt.get(m.gt_index).and_then(|g| g.visibility).unwrap_or(1.0);
                    bin_index(edges, vis)
                }
                RcaBinning::Occlusion(edges) => bin_index(edges, meta.frames_to_seconds(m.frame - prev_frame)),
                RcaBinning::Camera => Some(0),
            };
            if let Some(b) = idx {
                if track == prev_track {
                    bins[b].tp_ass += 1;
                } else {
                    bins[b].fp_ass += 1;
                }
            }
        }
        last.insert(m.gt_id, (m.frame, track));
    }
    Ok(RcaReport {
        binning: binning.name(),
        bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::matching::{match_to_gt, DEFAULT_IOU_MIN};
    use crate::types::BoundingBox;

    fn meta() -> SequenceMeta {
        SequenceMeta {
            name: "t".into(),
            frame_rate: 10.0,
            seq_length: 100,
            camera_moving: false,
            img_width: 0,
            img_height: 0,
        }
    }

    fn row(frame: u32, x: f64, id: u64) -> Detection {
        Detection::new(frame, BoundingBox::new(x, 0.0, 10.0, 10.0), 1.0).with_id(id)
    }

    #[test]
    fn bin_index_edges() {
        let e = DEFAULT_VISIBILITY_EDGES;
        assert_eq!(bin_index(&e, 0.0), Some(0));
        assert_eq!(bin_index(&e, 0.33), Some(1));
        assert_eq!(bin_index(&e, 1.0), Some(2));
        assert_eq!(bin_index(&e, 1.5), None);
        assert_eq!(bin_index(&DEFAULT_OCCLUSION_EDGES, 1e9), Some(5));
    }

    #[test]
    fn perfect_output() {
        let gt: Vec<Detection> = (1..=10).map(|f| row(f, f64::from(f), 1)).collect();
        let t = match_to_gt(&gt, &gt, DEFAULT_IOU_MIN);
        let r = compute_rca(&t, &gt, &meta(), &RcaBinning::visibility()).unwrap();
        assert_eq!((r.tp_ass(), r.fp_ass()), (9, 0));
        assert_eq!(r.overall(), Some(1.0));
        assert_eq!(r.bins[0].rca(), None);
    }

    #[test]
    fn fresh_id_after_gap() {
        let gt: Vec<Detection> = (1..=10).filter(|f| !(4..=6).contains(f)).map(|f| row(f, 0.0, 1)).collect();
        let res: Vec<Detection> = gt.iter().map(|g| row(g.frame, 0.0, if g.frame < 4 { 1 } else { 2 })).collect();
        let t = match_to_gt(&res, &gt, DEFAULT_IOU_MIN);
        let r = compute_rca(&t, &gt, &meta(), &RcaBinning::occlusion()).unwrap();
        // consecutive frames: 0.1 s gap
        let short = r.bin_containing(0.1).unwrap();
        assert_eq!((short.tp_ass, short.fp_ass), (5, 0));
        let long = r.bin_containing(0.4).unwrap();
        assert_eq!((long.tp_ass, long.fp_ass), (0, 1));
        assert_eq!(long.rca(), Some(0.0));
    }

    #[test]
    fn one_switch_among_three() {
        let mut gt = Vec::new();
        let mut res = Vec::new();
        for f in 1..=8 {
            for k in 0..3u64 {
                gt.push(row(f, 40.0 * k as f64, k + 1));
                let id = if k == 1 && f >= 5 { 99 } else { k + 10 };
                res.push(row(f, 40.0 * k as f64, id));
            }
        }
        let t = match_to_gt(&res, &gt, DEFAULT_IOU_MIN);
        let r = compute_rca(&t, &gt, &meta(), &RcaBinning::Camera).unwrap();
        assert_eq!(r.bins[0].label, "static");
        assert_eq!((r.tp_ass(), r.fp_ass()), (3 * 7 - 1, 1));
    }

    #[test]
    fn missing_ids() {
        let gt = vec![row(1, 0.0, 1)];
        let res = vec![Detection::new(1, BoundingBox::new(0.0, 0.0, 10.0, 10.0), 1.0)];
        let t = match_to_gt(&res, &gt, DEFAULT_IOU_MIN);
        assert_eq!(
            compute_rca(&t, &gt, &meta(), &RcaBinning::Camera),
            Err(AnalysisError::MissingTrackIds)
        );
    }
}
