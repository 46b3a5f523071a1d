//! `seqinfo.ini` and the flat `key=value` tracker config.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{validate_config, AffineParam, TrackerConfig};
use crate::error::{ConfigError, IoError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub name: String,
    pub frame_rate: f64,
    pub seq_length: u32,
    pub camera_moving: bool,
    pub img_width: u32,
    pub img_height: u32,
}

impl SequenceMeta {
    /// Frame gap expressed in seconds.
    pub fn frames_to_seconds(&self, frames: u32) -> f64 {
        f64::from(frames) / self.frame_rate
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// Parses the `[Sequence]` section; keys are case-sensitive as in MOTChallenge.
pub fn parse_seqinfo(text: &str) -> Result<SequenceMeta, IoError> {
    let mut in_section = false;
    let mut name = None;
    let mut frame_rate = None;
    let mut seq_length = None;
    let mut camera_moving = false;
    let mut img_width = 0;
    let mut img_height = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with(';') || t.starts_with('#') {
            continue;
        }
        if t.starts_with('[') {
            in_section = t.eq_ignore_ascii_case("[sequence]");
            continue;
        }
        if !in_section {
            continue;
        }
        let Some((k, v)) = t.split_once('=') else {
            return Err(IoError::Parse {
                line,
                reason: "expected key=value".into(),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        let bad = |what: &str| IoError::Parse {
            line,
            reason: format!("bad {what} `{v}`"),
        };
        match k {
            "name" => name = Some(v.to_string()),
            "frameRate" => {
                let fr: f64 = v.parse().map_err(|_| bad("frameRate"))?;
                if !(fr.is_finite() && fr > 0.0) {
                    return Err(bad("frameRate"));
                }
                frame_rate = Some(fr);
            }
            "seqLength" => {
                let n: u32 = v.parse().map_err(|_| bad("seqLength"))?;
                if n == 0 {
                    return Err(bad("seqLength"));
                }
                seq_length = Some(n);
            }
            "imWidth" => img_width = v.parse().map_err(|_| bad("imWidth"))?,
            "imHeight" => img_height = v.parse().map_err(|_| bad("imHeight"))?,
            "cameraMoving" => camera_moving = parse_bool(v).ok_or_else(|| bad("cameraMoving"))?,
            _ => {}
        }
    }
    Ok(SequenceMeta {
        name: name.unwrap_or_default(),
        frame_rate: frame_rate.ok_or_else(|| IoError::MissingKey("frameRate".into()))?,
        seq_length: seq_length.ok_or_else(|| IoError::MissingKey("seqLength".into()))?,
        camera_moving,
        img_width,
        img_height,
    })
}

pub fn read_seqinfo(path: &Path) -> Result<SequenceMeta, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_seqinfo(&text)
}

pub fn format_seqinfo(meta: &SequenceMeta) -> String {
    let mut s = String::from("[Sequence]\n");
    let _ = writeln!(s, "name={}", meta.name);
    let _ = writeln!(s, "imDir=img1");
    let _ = writeln!(s, "frameRate={}", meta.frame_rate);
    let _ = writeln!(s, "seqLength={}", meta.seq_length);
    let _ = writeln!(s, "imWidth={}", meta.img_width);
    let _ = writeln!(s, "imHeight={}", meta.img_height);
    let _ = writeln!(s, "imExt=.jpg");
    let _ = writeln!(s, "cameraMoving={}", meta.camera_moving);
    s
}

pub fn write_seqinfo(path: &Path, meta: &SequenceMeta) -> Result<(), IoError> {
    std::fs::write(path, format_seqinfo(meta)).map_err(|e| IoError::io(path, e))
}

fn typed<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| ConfigError::TypeError {
        line,
        key: key.to_string(),
        reason: e.to_string(),
    })
}

fn affine(line: usize, key: &str, v: &str) -> Result<AffineParam, ConfigError> {
    if v.contains(',') {
        v.split(',')
            .map(|p| typed::<f64>(line, key, p.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map(AffineParam::PerDim)
    } else {
        typed::<f64>(line, key, v).map(AffineParam::Scalar)
    }
}

/// Parses a flat `key=value` config on top of the defaults. Blank lines and
/// `#` comments are ignored; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<TrackerConfig, ConfigError> {
    let mut cfg = TrackerConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t = raw.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        let (k, v) = t.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (k, v) = (k.trim(), v.trim());
        match k {
            "tau_act" => cfg.tau_act = typed(line, k, v)?,
            "tau_inact" => cfg.tau_inact = typed(line, k, v)?,
            "motion_weight" => cfg.motion_weight = typed(line, k, v)?,
            "velocity_window_k" => cfg.velocity_window_k = typed(line, k, v)?,
            "inactive_patience" => cfg.inactive_patience = typed(line, k, v)?,
            "det_confidence_min" => cfg.det_confidence_min = typed(line, k, v)?,
            "new_track_confidence_min" => cfg.new_track_confidence_min = typed(line, k, v)?,
            "proxy_method" => cfg.proxy_method = typed(line, k, v)?,
            "ema_alpha" => cfg.ema_alpha = typed(line, k, v)?,
            "motion_model" => cfg.motion_model = typed(line, k, v)?,
            "appearance_enabled" => cfg.appearance_enabled = typed(line, k, v)?,
            "renormalize_per_frame" => cfg.renormalize_per_frame = typed(line, k, v)?,
            "bn_gamma" => cfg.bn_gamma = affine(line, k, v)?,
            "bn_beta" => cfg.bn_beta = affine(line, k, v)?,
            "bn_eps" => cfg.bn_eps = typed(line, k, v)?,
            "kalman_std_position" => cfg.kalman.std_weight_position = typed(line, k, v)?,
            "kalman_std_velocity" => cfg.kalman.std_weight_velocity = typed(line, k, v)?,
            "kalman_std_observation" => cfg.kalman.std_weight_observation = typed(line, k, v)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: k.to_string(),
                })
            }
        }
    }
    validate_config(&cfg)?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<TrackerConfig, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    Ok(parse_config(&text)?)
}
