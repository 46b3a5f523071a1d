//! MOTChallenge comma-separated files: detections, ground truth and results.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::IoError;
use crate::types::{BoundingBox, Detection, Track};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotKind {
    /// `frame,-1,x,y,w,h,conf[,...]`
    Detections,
    /// `frame,id,x,y,w,h,mark,class,visibility`
    GroundTruth,
    /// `frame,id,x,y,w,h,conf,...` as written by [`write_mot_results`].
    Results,
}

/// Ground-truth filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct GtFilter {
    /// Classes kept; rows without a class column (or `-1`) are always kept.
    pub classes: Vec<i64>,
    /// Drop rows whose mark (7th column) is 0.
    pub drop_unmarked: bool,
}

impl Default for GtFilter {
    fn default() -> Self {
        Self {
            classes: vec![1],
            drop_unmarked: true,
        }
    }
}

fn field<T: std::str::FromStr>(cols: &[&str], i: usize, name: &str, line: usize) -> Result<T, IoError> {
    let raw = cols.get(i).ok_or_else(|| IoError::Parse {
        line,
        reason: format!("missing column `{name}`"),
    })?;
    raw.trim().parse::<T>().map_err(|_| IoError::Parse {
        line,
        reason: format!("bad `{name}` value `{}`", raw.trim()),
    })
}

fn optional_f64(cols: &[&str], i: usize, name: &str, line: usize) -> Result<Option<f64>, IoError> {
    if cols.len() <= i || cols[i].trim().is_empty() {
        return Ok(None);
    }
    field::<f64>(cols, i, name, line).map(Some)
}

/// Parses MOT text. Empty input gives an empty list.
pub fn parse_mot(text: &str, kind: MotKind, filter: &GtFilter) -> Result<Vec<Detection>, IoError> {
    let mut out = Vec::new();
    let mut frame_counts: std::collections::HashMap<u32, u32> = std::collections::HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let cols: Vec<&str> = trimmed.split(',').collect();
        if cols.len() < 6 {
            return Err(IoError::Parse {
                line,
                reason: format!("expected at least 6 columns, found {}", cols.len()),
            });
        }
        let frame_f: f64 = field(&cols, 0, "frame", line)?;
        if !(frame_f >= 1.0 && frame_f.fract() == 0.0 && frame_f <= u32::MAX as f64) {
            return Err(IoError::Parse {
                line,
                reason: format!("frame must be a positive integer, got {frame_f}"),
            });
        }
        let frame = frame_f as u32;
        let id_f: f64 = field(&cols, 1, "id", line)?;
        let bbox = BoundingBox::new(
            field(&cols, 2, "x", line)?,
            field(&cols, 3, "y", line)?,
            field(&cols, 4, "w", line)?,
            field(&cols, 5, "h", line)?,
        );
        if !bbox.is_valid() {
            return Err(IoError::Parse {
                line,
                reason: format!("invalid box {bbox}: width and height must be > 0"),
            });
        }
        let conf = optional_f64(&cols, 6, "conf", line)?.unwrap_or(1.0);
        if !conf.is_finite() {
            return Err(IoError::Parse {
                line,
                reason: "confidence must be finite".into(),
            });
        }
        let class = optional_f64(&cols, 7, "class", line)?;
        let visibility = optional_f64(&cols, 8, "visibility", line)?;

        let mut det = Detection::new(frame, bbox, conf);
        match kind {
            MotKind::Detections => {}
            MotKind::GroundTruth | MotKind::Results => {
                if id_f < 1.0 || id_f.fract() != 0.0 {
                    return Err(IoError::Parse {
                        line,
                        reason: format!("id must be a positive integer, got {id_f}"),
                    });
                }
                det.id = Some(id_f as u64);
            }
        }
        if kind == MotKind::GroundTruth {
            if filter.drop_unmarked && conf == 0.0 {
                continue;
            }
            if let Some(c) = class {
                if c >= 0.0 && !filter.classes.contains(&(c as i64)) {
                    continue;
                }
            }
            // negative visibility means "not annotated"
            if let Some(v) = visibility.filter(|v| *v >= 0.0) {
                if v > 1.0 {
                    return Err(IoError::Parse {
                        line,
                        reason: format!("visibility {v} outside [0, 1]"),
                    });
                }
                det.visibility = Some(v);
            }
        }
        let counter = frame_counts.entry(frame).or_insert(0);
        det.source_index = *counter;
        *counter += 1;
        out.push(det);
    }
    Ok(out)
}

pub fn read_mot(path: &Path, kind: MotKind) -> Result<Vec<Detection>, IoError> {
    read_mot_filtered(path, kind, &GtFilter::default())
}

pub fn read_mot_filtered(path: &Path, kind: MotKind, filter: &GtFilter) -> Result<Vec<Detection>, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| IoError::Parse {
        line: 0,
        reason: format!("not UTF-8: {e}"),
    })?;
    parse_mot(&text, kind, filter)
}

/// `frame,track_id,x,y,w,h,conf,-1,-1,-1` rows sorted by (frame, track id).
pub fn format_mot_results(tracks: &[Track]) -> String {
    let mut rows: Vec<(u32, u64, &Detection)> = tracks
        .iter()
        .flat_map(|t| t.detections.iter().map(move |d| (d.frame, t.id.0, d)))
        .collect();
    rows.sort_by_key(|&(f, id, _)| (f, id));
    let mut s = String::new();
    for (frame, id, d) in rows {
        let b = d.bbox;
        let _ = writeln!(
            s,
            "{frame},{id},{:.2},{:.2},{:.2},{:.2},{:.2},-1,-1,-1",
            b.x, b.y, b.w, b.h, d.confidence
        );
    }
    s
}

pub fn write_mot_results(path: &Path, tracks: &[Track]) -> Result<(), IoError> {
    std::fs::write(path, format_mot_results(tracks)).map_err(|e| IoError::io(path, e))
}

/// Ground-truth style rows `frame,id,x,y,w,h,1,1,visibility`, sorted by (frame, id).
pub fn format_mot_gt(rows: &[Detection]) -> String {
    let mut sorted: Vec<&Detection> = rows.iter().collect();
    sorted.sort_by_key(|d| (d.frame, d.id));
    let mut s = String::new();
    for d in sorted {
        let b = d.bbox;
        let _ = writeln!(
            s,
            "{},{},{:.2},{:.2},{:.2},{:.2},1,1,{:.4}",
            d.frame,
            d.id.unwrap_or(0),
            b.x,
            b.y,
            b.w,
            b.h,
            d.visibility.unwrap_or(1.0)
        );
    }
    s
}

/// Detection rows `frame,-1,x,y,w,h,conf,-1,-1` in the given order.
pub fn format_mot_detections(rows: &[Detection]) -> String {
    let mut s = String::new();
    for d in rows {
        let b = d.bbox;
        let _ = writeln!(
            s,
            "{},-1,{:.2},{:.2},{:.2},{:.2},{:.4},-1,-1",
            d.frame, b.x, b.y, b.w, b.h, d.confidence
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TrackId;
    use proptest::prelude::*;

    #[test]
    fn parses_detection_line() {
        let d = parse_mot("1,-1,10,20,30,40,0.9,-1,-1\n", MotKind::Detections, &GtFilter::default()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].frame, 1);
        assert_eq!(d[0].bbox, BoundingBox::new(10.0, 20.0, 30.0, 40.0));
        assert_eq!(d[0].confidence, 0.9);
        assert_eq!(d[0].id, None);
    }

    #[test]
    fn rejects_nonpositive_width() {
        let err = parse_mot("1,-1,10,20,0,40,0.9\n", MotKind::Detections, &GtFilter::default()).unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 1, .. }));
    }

    #[test]
    fn gt_visibility_attached() {
        let d = parse_mot("5,7,0,0,10,10,1,1,0.25\n", MotKind::GroundTruth, &GtFilter::default()).unwrap();
        assert_eq!(d[0].visibility, Some(0.25));
        assert_eq!(d[0].id, Some(7));
    }

    #[test]
    fn gt_class_filter() {
        let text = "1,1,0,0,10,10,1,1,1\n1,2,0,0,10,10,1,7,1\n1,3,0,0,10,10,0,1,1\n";
        let d = parse_mot(text, MotKind::GroundTruth, &GtFilter::default()).unwrap();
        assert_eq!(d.iter().map(|d| d.id.unwrap()).collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn empty_file_is_valid() {
        assert!(parse_mot("", MotKind::Detections, &GtFilter::default()).unwrap().is_empty());
    }

    #[test]
    fn source_index_counts_within_frame() {
        let text = "1,-1,0,0,1,1,1\n1,-1,0,0,1,1,1\n2,-1,0,0,1,1,1\n";
        let d = parse_mot(text, MotKind::Detections, &GtFilter::default()).unwrap();
        assert_eq!(d.iter().map(|d| d.source_index).collect::<Vec<_>>(), vec![0, 1, 0]);
    }

    #[test]
    fn bad_number_reports_line() {
        let err = parse_mot("1,-1,0,0,1,1,1\n2,-1,abc,0,1,1,1\n", MotKind::Detections, &GtFilter::default()).unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 2, .. }));
    }

    #[test]
    fn results_rows_sorted() {
        let b = BoundingBox::new(1.0, 2.0, 3.0, 4.0);
        let mut t2 = Track::new(TrackId(2), Detection::new(1, b, 0.9));
        t2.detections.push(Detection::new(2, b, 0.9));
        let mut t1 = Track::new(TrackId(1), Detection::new(2, b, 0.5));
        t1.detections.push(Detection::new(3, b, 0.5));
        t1.detections.push(Detection::new(4, b, 0.5));
        let s = format_mot_results(&[t2, t1]);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "1,2,1.00,2.00,3.00,4.00,0.90,-1,-1,-1");
        assert!(lines[1].starts_with("2,1,"));
        assert!(lines[2].starts_with("2,2,"));
        assert!(format_mot_results(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn never_panics_on_arbitrary_text(s in "\\PC{0,200}") {
            let _ = parse_mot(&s, MotKind::GroundTruth, &GtFilter::default());
            let _ = parse_mot(&s, MotKind::Detections, &GtFilter::default());
        }

        #[test]
        fn results_roundtrip(rows in prop::collection::vec((1u32..50, 1u64..6, -5000i64..5000, -5000i64..5000, 1i64..5000, 1i64..5000), 0..40)) {
            // One track per id; keep the first row per (id, frame).
            let mut by_id: std::collections::BTreeMap<u64, std::collections::BTreeMap<u32, BoundingBox>> = Default::default();
            for (f, id, x, y, w, h) in rows {
                let b = BoundingBox::new(x as f64 / 100.0, y as f64 / 100.0, w as f64 / 100.0, h as f64 / 100.0);
                by_id.entry(id).or_default().entry(f).or_insert(b);
            }
            let tracks: Vec<Track> = by_id.iter().map(|(&id, frames)| {
                let mut it = frames.iter();
                let (&f0, &b0) = it.next().unwrap();
                let mut t = Track::new(TrackId(id), Detection::new(f0, b0, 1.0));
                for (&f, &b) in it {
                    t.detections.push(Detection::new(f, b, 1.0));
                }
                t
            }).collect();
            let text = format_mot_results(&tracks);
            let back = parse_mot(&text, MotKind::Results, &GtFilter::default()).unwrap();
            let mut expected: Vec<(u32, u64, [i64; 4])> = tracks.iter()
                .flat_map(|t| t.detections.iter().map(move |d| (d.frame, t.id.0, d.bbox.to_array().map(|v| (v * 100.0).round() as i64))))
                .collect();
            let mut got: Vec<(u32, u64, [i64; 4])> = back.iter()
                .map(|d| (d.frame, d.id.unwrap(), d.bbox.to_array().map(|v| (v * 100.0).round() as i64)))
                .collect();
            expected.sort();
            got.sort();
            prop_assert_eq!(expected, got);
        }
    }
}
