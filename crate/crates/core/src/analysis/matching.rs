//! Per-frame matching of detections or result rows to ground-truth boxes.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::assoc::hungarian;
use crate::geometry::iou;
use crate::types::Detection;

/// Default IoU needed for a row to count as covering a GT box.
pub const DEFAULT_IOU_MIN: f64 = 0.5;

/// One row matched to one ground-truth box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GtMatch {
    pub frame: u32,
    /// Index into the row slice passed to [`match_to_gt`].
    pub row: usize,
    /// Track id carried by the row, if any.
    pub row_id: Option<u64>,
    /// Index into the GT slice.
    pub gt_index: usize,
    pub gt_id: u64,
    pub iou: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GtMatchTable {
    /// Sorted by frame, then row.
    pub matches: Vec<GtMatch>,
    pub num_rows: usize,
}

impl GtMatchTable {
    /// Match of `row`, if it covers a GT box.
    pub fn for_row(&self, row: usize) -> Option<&GtMatch> {
        self.matches.iter().find(|m| m.row == row)
    }

    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }
}

/// Identity of a GT row; rows without an id are their own identity.
pub(crate) fn gt_identity(gt: &Detection, index: usize) -> u64 {
    gt.id.unwrap_or(u64::MAX - index as u64)
}

/// Indices of `rows` grouped by frame, in slice order.
pub(crate) fn by_frame(rows: &[Detection]) -> BTreeMap<u32, Vec<usize>> {
    let mut out: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        out.entry(r.frame).or_default().push(i);
    }
    out
}

/// Maximum-cardinality, then minimum `1 - IoU`, matching between `rows` and
/// `gts` of one frame. Pairs below `iou_min` are never matched.
///
/// Returns `(row position, gt position, iou)` with positions into the given slices.
pub(crate) fn assign_frame(rows: &[&Detection], gts: &[&Detection], iou_min: f64) -> Vec<(usize, usize, f64)> {
    if rows.is_empty() || gts.is_empty() {
        return Vec::new();
    }
    let ious: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| gts.iter().map(|g| iou(&r.bbox, &g.bbox).value()).collect())
        .collect();
    // an invalid pair must cost more than any full set of valid ones
    let big = rows.len().min(gts.len()) as f64 + 1.0;
    let costs: Vec<Vec<f64>> = ious
        .iter()
        .map(|row| row.iter().map(|&v| if v >= iou_min { 1.0 - v } else { big }).collect())
        .collect();
    hungarian(&costs)
        .pairs
        .into_iter()
        .filter(|&(r, g)| ious[r][g] >= iou_min)
        .map(|(r, g)| (r, g, ious[r][g]))
        .collect()
}

/// Matches every row to at most one GT box of its frame, and every GT box to
/// at most one row.
pub fn match_to_gt(rows: &[Detection], gt: &[Detection], iou_min: f64) -> GtMatchTable {
    let gt_frames = by_frame(gt);
    let mut matches = Vec::new();
    for (frame, row_idx) in by_frame(rows) {
        let Some(gt_idx) = gt_frames.get(&frame) else {
            continue;
        };
        let r: Vec<&Detection> = row_idx.iter().map(|&i| &rows[i]).collect();
        let g: Vec<&Detection> = gt_idx.iter().map(|&i| &gt[i]).collect();
        let mut frame_matches: Vec<GtMatch> = assign_frame(&r, &g, iou_min)
            .into_iter()
            .map(|(ri, gi, v)| GtMatch {
                frame,
                row: row_idx[ri],
                row_id: rows[row_idx[ri]].id,
                gt_index: gt_idx[gi],
                gt_id: gt_identity(&gt[gt_idx[gi]], gt_idx[gi]),
                iou: v,
            })
            .collect();
        frame_matches.sort_by_key(|m| m.row);
        matches.extend(frame_matches);
    }
    GtMatchTable {
        matches,
        num_rows: rows.len(),
    }
}
