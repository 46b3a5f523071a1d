//! Tracker tunables and their validation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// How many trailing detections feed the velocity estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VelocityWindow {
    All,
    Last(usize),
}

impl fmt::Display for VelocityWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VelocityWindow::All => f.write_str("all"),
            VelocityWindow::Last(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for VelocityWindow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(VelocityWindow::All);
        }
        s.parse::<usize>()
            .map(VelocityWindow::Last)
            .map_err(|_| format!("expected a frame count or `all`, got `{s}`"))
    }
}

/// Appearance proxy used for inactive tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProxyMethod {
    /// Mean of cosine distances to every stored embedding.
    MeanOfDistances,
    MeanFeature,
    ModeFeature,
    MedianFeature,
    EmaFeature,
}

impl ProxyMethod {
    pub const ALL: [ProxyMethod; 5] = [
        ProxyMethod::MeanOfDistances,
        ProxyMethod::MeanFeature,
        ProxyMethod::ModeFeature,
        ProxyMethod::MedianFeature,
        ProxyMethod::EmaFeature,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ProxyMethod::MeanOfDistances => "mean_of_distances",
            ProxyMethod::MeanFeature => "mean_feature",
            ProxyMethod::ModeFeature => "mode_feature",
            ProxyMethod::MedianFeature => "median_feature",
            ProxyMethod::EmaFeature => "ema_feature",
        }
    }
}

impl fmt::Display for ProxyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProxyMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProxyMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown proxy method `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotionModelKind {
    Linear,
    KalmanCV,
    None,
}

impl MotionModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            MotionModelKind::Linear => "linear",
            MotionModelKind::KalmanCV => "kalman",
            MotionModelKind::None => "none",
        }
    }
}

impl fmt::Display for MotionModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotionModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(MotionModelKind::Linear),
            "kalman" | "kalman_cv" => Ok(MotionModelKind::KalmanCV),
            "none" => Ok(MotionModelKind::None),
            _ => Err(format!("unknown motion model `{s}`")),
        }
    }
}

/// Scale or shift of the per-frame renormalization: one value for every
/// dimension, or one per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AffineParam {
    Scalar(f64),
    PerDim(Vec<f64>),
}

impl AffineParam {
    /// Expands to a `dim`-length vector. `None` when a per-dim vector has the wrong length.
    pub fn expand(&self, dim: usize) -> Option<Vec<f64>> {
        match self {
            AffineParam::Scalar(v) => Some(vec![*v; dim]),
            AffineParam::PerDim(v) if v.len() == dim => Some(v.clone()),
            AffineParam::PerDim(_) => None,
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            AffineParam::Scalar(v) => v.is_finite(),
            AffineParam::PerDim(v) => v.iter().all(|x| x.is_finite()),
        }
    }
}

impl fmt::Display for AffineParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AffineParam::Scalar(v) => write!(f, "{v}"),
            AffineParam::PerDim(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

/// Noise scaling of the constant-velocity Kalman model, as fractions of the box height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanParams {
    pub std_weight_position: f64,
    pub std_weight_velocity: f64,
    pub std_weight_observation: f64,
}

impl Default for KalmanParams {
    fn default() -> Self {
        Self {
            std_weight_position: 1.0 / 20.0,
            std_weight_velocity: 1.0 / 160.0,
            std_weight_observation: 1.0 / 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Matching threshold on the combined cost for active tracks.
    pub tau_act: f64,
    /// Matching threshold on the combined cost for inactive tracks.
    pub tau_inact: f64,
    /// Weight of the motion cost; appearance gets `1 - motion_weight`.
    pub motion_weight: f64,
    pub velocity_window_k: VelocityWindow,
    /// Frames an unmatched track is kept in the memory bank.
    pub inactive_patience: u32,
    pub det_confidence_min: f64,
    pub new_track_confidence_min: f64,
    pub proxy_method: ProxyMethod,
    pub ema_alpha: f64,
    pub motion_model: MotionModelKind,
    pub appearance_enabled: bool,
    pub renormalize_per_frame: bool,
    pub bn_gamma: AffineParam,
    pub bn_beta: AffineParam,
    pub bn_eps: f64,
    pub kalman: KalmanParams,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            tau_act: 0.7,
            tau_inact: 0.8,
            motion_weight: 0.5,
            velocity_window_k: VelocityWindow::All,
            inactive_patience: 50,
            det_confidence_min: 0.5,
            new_track_confidence_min: 0.6,
            proxy_method: ProxyMethod::MeanOfDistances,
            ema_alpha: 0.9,
            motion_model: MotionModelKind::Linear,
            appearance_enabled: true,
            renormalize_per_frame: true,
            bn_gamma: AffineParam::Scalar(1.0),
            bn_beta: AffineParam::Scalar(0.0),
            bn_eps: 1e-5,
            kalman: KalmanParams::default(),
        }
    }
}

/// Named parameter bundles for the four scene regimes.
pub const CONFIG_PRESETS: [&str; 4] = ["mot17", "crowded", "erratic", "moving-camera"];

impl TrackerConfig {
    /// Motion weight and velocity window tuned per scene regime:
    /// partially moving camera (`mot17`), static crowded scenes (`crowded`),
    /// extreme motion (`erratic`) and moving camera (`moving-camera`).
    pub fn preset(name: &str) -> Option<TrackerConfig> {
        let (w, k) = match name {
            "mot17" => (0.6, 90),
            "crowded" => (0.8, 30),
            "erratic" => (0.4, 5),
            "moving-camera" => (0.4, 10),
            _ => return None,
        };
        Some(TrackerConfig {
            motion_weight: w,
            velocity_window_k: VelocityWindow::Last(k),
            ..TrackerConfig::default()
        })
    }

    /// Effective motion weight once disabled cues are accounted for.
    pub fn effective_motion_weight(&self) -> f64 {
        match (self.appearance_enabled, self.motion_model) {
            (false, _) => 1.0,
            (true, MotionModelKind::None) => 0.0,
            (true, _) => self.motion_weight,
        }
    }

    /// Flat `key=value` rendering accepted by the config reader.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.kv_pairs() {
            s.push_str(&k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        }
        s
    }

    pub fn kv_pairs(&self) -> Vec<(String, String)> {
        vec![
            ("tau_act".into(), self.tau_act.to_string()),
            ("tau_inact".into(), self.tau_inact.to_string()),
            ("motion_weight".into(), self.motion_weight.to_string()),
            ("velocity_window_k".into(), self.velocity_window_k.to_string()),
            ("inactive_patience".into(), self.inactive_patience.to_string()),
            ("det_confidence_min".into(), self.det_confidence_min.to_string()),
            ("new_track_confidence_min".into(), self.new_track_confidence_min.to_string()),
            ("proxy_method".into(), self.proxy_method.to_string()),
            ("ema_alpha".into(), self.ema_alpha.to_string()),
            ("motion_model".into(), self.motion_model.to_string()),
            ("appearance_enabled".into(), self.appearance_enabled.to_string()),
            ("renormalize_per_frame".into(), self.renormalize_per_frame.to_string()),
            ("bn_gamma".into(), self.bn_gamma.to_string()),
            ("bn_beta".into(), self.bn_beta.to_string()),
            ("bn_eps".into(), self.bn_eps.to_string()),
            ("kalman_std_position".into(), self.kalman.std_weight_position.to_string()),
            ("kalman_std_velocity".into(), self.kalman.std_weight_velocity.to_string()),
            ("kalman_std_observation".into(), self.kalman.std_weight_observation.to_string()),
        ]
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidConfig {
        field,
        reason: reason.into(),
    }
}

/// Checks every `TrackerConfig` invariant, reporting the first violated field.
pub fn validate_config(cfg: &TrackerConfig) -> Result<(), ConfigError> {
    if !(cfg.tau_act.is_finite() && cfg.tau_act > 0.0) {
        return Err(invalid("tau_act", "must be a finite value > 0"));
    }
    if !(cfg.tau_inact.is_finite() && cfg.tau_inact > 0.0) {
        return Err(invalid("tau_inact", "must be a finite value > 0"));
    }
    if !(0.0..=1.0).contains(&cfg.motion_weight) {
        return Err(invalid("motion_weight", "must lie in [0, 1]"));
    }
    if cfg.velocity_window_k == VelocityWindow::Last(0) {
        return Err(invalid("velocity_window_k", "must be >= 1 or `all`"));
    }
    if !cfg.det_confidence_min.is_finite() {
        return Err(invalid("det_confidence_min", "must be finite"));
    }
    if !cfg.new_track_confidence_min.is_finite() {
        return Err(invalid("new_track_confidence_min", "must be finite"));
    }
    if !(0.0..=1.0).contains(&cfg.ema_alpha) {
        return Err(invalid("ema_alpha", "must lie in [0, 1]"));
    }
    if !cfg.appearance_enabled && cfg.motion_model == MotionModelKind::None {
        return Err(invalid(
            "motion_model",
            "appearance is disabled, so a motion model is required",
        ));
    }
    if !cfg.bn_gamma.is_finite() {
        return Err(invalid("bn_gamma", "must be finite"));
    }
    if !cfg.bn_beta.is_finite() {
        return Err(invalid("bn_beta", "must be finite"));
    }
    if !(cfg.bn_eps.is_finite() && cfg.bn_eps > 0.0) {
        return Err(invalid("bn_eps", "must be a finite value > 0"));
    }
    let k = &cfg.kalman;
    for (field, v) in [
        ("kalman_std_position", k.std_weight_position),
        ("kalman_std_velocity", k.std_weight_velocity),
        ("kalman_std_observation", k.std_weight_observation),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(invalid(field, "must be a finite value >= 0"));
        }
    }
    Ok(())
}
