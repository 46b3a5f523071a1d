//! CLEAR-MOT accuracy and identity F1.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::matching::{assign_frame, by_frame, gt_identity};
use crate::assoc::hungarian;
use crate::error::AnalysisError;
use crate::geometry::iou;
use crate::types::Detection;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MotaReport {
    /// NaN when the ground truth is empty.
    pub mota: f64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub idsw: u64,
    pub matches: u64,
    pub gt_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdF1Report {
    /// NaN when both ground truth and results are empty.
    pub idf1: f64,
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
}

fn track_ids(results: &[Detection]) -> Result<Vec<u64>, AnalysisError> {
    results
        .iter()
        .map(|r| r.id.ok_or(AnalysisError::MissingTrackIds))
        .collect()
}

/// CLEAR-MOT with correspondence persistence: a GT identity keeps last
/// frame's track if that track is still present and overlaps by at least
/// `iou_min`; the rest is matched by minimum `1 - IoU`. An identity switch is
/// counted whenever a GT identity is matched to a track other than the one it
/// was last matched to.
pub fn compute_mota(gt: &[Detection], results: &[Detection], iou_min: f64) -> Result<MotaReport, AnalysisError> {
    let ids = track_ids(results)?;
    let gt_frames = by_frame(gt);
    let res_frames = by_frame(results);
    let frames: std::collections::BTreeSet<u32> = gt_frames.keys().chain(res_frames.keys()).copied().collect();

    let mut current: HashMap<u64, u64> = HashMap::new(); // gt identity -> track (last frame)
    let mut last_ever: HashMap<u64, u64> = HashMap::new();
    let (mut fp, mut fn_, mut idsw, mut matches) = (0u64, 0u64, 0u64, 0u64);
    let empty = Vec::new();

    for frame in frames {
        let g_idx = gt_frames.get(&frame).unwrap_or(&empty);
        let r_idx = res_frames.get(&frame).unwrap_or(&empty);
        let mut g_taken = vec![false; g_idx.len()];
        let mut r_taken = vec![false; r_idx.len()];
        let mut pairs: Vec<(u64, u64)> = Vec::new();

        // keep still-valid correspondences
        for (gi, &g) in g_idx.iter().enumerate() {
            let gid = gt_identity(&gt[g], g);
            let Some(&tid) = current.get(&gid) else { continue };
            let found = r_idx
                .iter()
                .enumerate()
                .find(|&(ri, &r)| !r_taken[ri] && ids[r] == tid && iou(&results[r].bbox, &gt[g].bbox).value() >= iou_min);
            if let Some((ri, _)) = found {
                g_taken[gi] = true;
                r_taken[ri] = true;
                pairs.push((gid, tid));
            }
        }

        let free_g: Vec<usize> = (0..g_idx.len()).filter(|&i| !g_taken[i]).collect();
        let free_r: Vec<usize> = (0..r_idx.len()).filter(|&i| !r_taken[i]).collect();
        let gs: Vec<&Detection> = free_g.iter().map(|&i| &gt[g_idx[i]]).collect();
        let rs: Vec<&Detection> = free_r.iter().map(|&i| &results[r_idx[i]]).collect();
        for (ri, gi, _) in assign_frame(&rs, &gs, iou_min) {
            let g = g_idx[free_g[gi]];
            let r = r_idx[free_r[ri]];
            let gid = gt_identity(&gt[g], g);
            if last_ever.get(&gid).is_some_and(|&prev| prev != ids[r]) {
                idsw += 1;
            }
            pairs.push((gid, ids[r]));
        }

        let n = pairs.len() as u64;
        matches += n;
        fp += r_idx.len() as u64 - n;
        fn_ += g_idx.len() as u64 - n;
        current.clear();
        for (gid, tid) in pairs {
            current.insert(gid, tid);
            last_ever.insert(gid, tid);
        }
    }

    let gt_count = gt.len() as u64;
    let mota = if gt_count == 0 {
        f64::NAN
    } else {
        1.0 - (fp + fn_ + idsw) as f64 / gt_count as f64
    };
    Ok(MotaReport {
        mota,
        fp,
        fn_,
        idsw,
        matches,
        gt_count,
    })
}

/// Identity F1: one global one-to-one assignment between GT identities and
/// track ids maximizing the number of frames in which the pair overlaps by
/// at least `iou_min`.
pub fn compute_idf1(gt: &[Detection], results: &[Detection], iou_min: f64) -> Result<IdF1Report, AnalysisError> {
    let ids = track_ids(results)?;
    let gt_ids: Vec<u64> = gt.iter().enumerate().map(|(i, g)| gt_identity(g, i)).collect();
    let gt_keys: BTreeMap<u64, usize> = gt_ids
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    let tr_keys: BTreeMap<u64, usize> = ids
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();

    let mut overlap = vec![vec![0u64; tr_keys.len()]; gt_keys.len()];
    let res_frames = by_frame(results);
    for (frame, g_idx) in by_frame(gt) {
        let Some(r_idx) = res_frames.get(&frame) else { continue };
        for &g in &g_idx {
            for &r in r_idx {
                if iou(&gt[g].bbox, &results[r].bbox).value() >= iou_min {
                    overlap[gt_keys[&gt_ids[g]]][tr_keys[&ids[r]]] += 1;
                }
            }
        }
    }

    let idtp: u64 = if gt_keys.is_empty() || tr_keys.is_empty() {
        0
    } else {
        let costs: Vec<Vec<f64>> = overlap
            .iter()
            .map(|row| row.iter().map(|&c| -(c as f64)).collect())
            .collect();
        hungarian(&costs).pairs.iter().map(|&(g, t)| overlap[g][t]).sum()
    };
    let n_gt = gt.len() as u64;
    let n_res = results.len() as u64;
    let idf1 = if n_gt + n_res == 0 {
        f64::NAN
    } else {
        2.0 * idtp as f64 / (n_gt + n_res) as f64
    };
    Ok(IdF1Report {
        idf1,
        idtp,
        idfp: n_res - idtp,
        idfn: n_gt - idtp,
    })
}
