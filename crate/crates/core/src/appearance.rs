//! Appearance costs between detections and tracks.
//!
//! Active tracks are compared against the embedding of their most recent
//! detection. Inactive tracks use a proxy over every stored embedding, by
//! default the mean of the individual cosine distances. Embeddings of one
//! frame can additionally be re-standardized with that frame's own batch
//! statistics before any cost is computed.

use std::collections::BTreeMap;

use crate::config::{ProxyMethod, TrackerConfig};
use crate::error::AppearanceError;
use crate::types::{Detection, FeatureVector, Track};

const ZERO_NORM: f64 = 1e-12;
const MODE_BIN: f64 = 1e-4;

fn check_dims(a: &[f64], b: &[f64]) -> Result<(), AppearanceError> {
    if a.len() != b.len() {
        return Err(AppearanceError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// `1 - cos(a, b)`, in `[0, 2]`.
pub fn cosine_distance(a: &FeatureVector, b: &FeatureVector) -> Result<f64, AppearanceError> {
    check_dims(a, b)?;
    let na = a.norm();
    let nb = b.norm();
    if na < ZERO_NORM || nb < ZERO_NORM {
        return Err(AppearanceError::ZeroVector);
    }
    let cos = a.dot(b) / (na * nb);
    Ok((1.0 - cos).clamp(0.0, 2.0))
}

/// Mean cosine distance from `query` to every gallery entry.
pub fn proxy_distance_mean(
    query: &FeatureVector,
    gallery: &[&FeatureVector],
) -> Result<f64, AppearanceError> {
    if gallery.is_empty() {
        return Err(AppearanceError::EmptyGallery);
    }
    let mut sum = 0.0;
    for g in gallery {
        sum += cosine_distance(query, g)?;
    }
    Ok(sum / gallery.len() as f64)
}

/// Feature-vector proxies: the gallery is collapsed into one vector first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureProxy {
    Mean,
    Mode,
    Median,
    Ema,
}

impl FeatureProxy {
    /// `None` for the distance-level proxy.
    pub fn from_method(method: ProxyMethod) -> Option<FeatureProxy> {
        match method {
            ProxyMethod::MeanOfDistances => None,
            ProxyMethod::MeanFeature => Some(FeatureProxy::Mean),
            ProxyMethod::ModeFeature => Some(FeatureProxy::Mode),
            ProxyMethod::MedianFeature => Some(FeatureProxy::Median),
            ProxyMethod::EmaFeature => Some(FeatureProxy::Ema),
        }
    }
}

/// One EMA step: `alpha * prev + (1 - alpha) * new`.
pub fn ema_update(
    prev: &FeatureVector,
    new: &FeatureVector,
    alpha: f64,
) -> Result<FeatureVector, AppearanceError> {
    check_dims(prev, new)?;
    Ok(prev
        .iter()
        .zip(new.iter())
        .map(|(p, n)| alpha * p + (1.0 - alpha) * n)
        .collect::<Vec<_>>()
        .into())
}

/// Collapses a gallery into one unit-norm proxy vector.
///
/// For [`FeatureProxy::Ema`] the gallery entries are folded into `ema_state`
/// in order; without a state the first entry seeds it.
pub fn proxy_feature(
    gallery: &[&FeatureVector],
    method: FeatureProxy,
    ema_state: Option<&FeatureVector>,
    alpha: f64,
) -> Result<FeatureVector, AppearanceError> {
    let raw = match method {
        FeatureProxy::Ema => {
            let (mut state, rest) = match (ema_state, gallery.split_first()) {
                (Some(s), _) => (s.clone(), gallery),
                (None, Some((first, rest))) => ((*first).clone(), rest),
                (None, None) => return Err(AppearanceError::MissingEmaState),
            };
            for f in rest {
                state = ema_update(&state, f, alpha)?;
            }
            state
        }
        _ => {
            let first = gallery.first().ok_or(AppearanceError::EmptyGallery)?;
            let dim = first.dim();
            for g in gallery {
                check_dims(first, g)?;
            }
            let column = |d: usize| gallery.iter().map(move |g| g[d]);
            let values: Vec<f64> = match method {
                FeatureProxy::Mean => (0..dim)
                    .map(|d| column(d).sum::<f64>() / gallery.len() as f64)
                    .collect(),
                FeatureProxy::Median => (0..dim).map(|d| median(column(d).collect())).collect(),
                FeatureProxy::Mode => (0..dim).map(|d| quantized_mode(column(d))).collect(),
                FeatureProxy::Ema => unreachable!(),
            };
            FeatureVector::new(values)
        }
    };
    Ok(raw.normalized())
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Most frequent value after quantizing to `MODE_BIN`; ties go to the smaller value.
fn quantized_mode(values: impl Iterator<Item = f64>) -> f64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for v in values {
        *counts.entry((v / MODE_BIN).round() as i64).or_default() += 1;
    }
    let mut best: Option<(i64, usize)> = None;
    for (&bin, &count) in &counts {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((bin, count));
        }
    }
    best.map(|(bin, _)| bin as f64 * MODE_BIN).unwrap_or(0.0)
}

/// Scale, shift and epsilon of the per-frame renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RenormParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub eps: f64,
}

impl RenormParams {
    pub fn identity(dim: usize, eps: f64) -> Self {
        Self {
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            eps,
        }
    }

    pub fn from_config(cfg: &TrackerConfig, dim: usize) -> Result<Self, AppearanceError> {
        let mismatch = |p: &crate::config::AffineParam| AppearanceError::DimensionMismatch {
            expected: dim,
            found: match p {
                crate::config::AffineParam::PerDim(v) => v.len(),
                crate::config::AffineParam::Scalar(_) => 1,
            },
        };
        Ok(Self {
            gamma: cfg.bn_gamma.expand(dim).ok_or_else(|| mismatch(&cfg.bn_gamma))?,
            beta: cfg.bn_beta.expand(dim).ok_or_else(|| mismatch(&cfg.bn_beta))?,
            eps: cfg.bn_eps,
        })
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }
}

/// Standardizes every dimension with the mean and population variance of
/// the current frame's detections, then applies `gamma`/`beta`.
///
/// Frames with fewer than two detections are returned unchanged. The output
/// is not L2-normalized.
pub fn renormalize_frame(
    features: &[FeatureVector],
    params: &RenormParams,
) -> Result<Vec<FeatureVector>, AppearanceError> {
    let dim = params.dim();
    if params.beta.len() != dim {
        return Err(AppearanceError::DimensionMismatch {
            expected: dim,
            found: params.beta.len(),
        });
    }
    for f in features {
        if f.dim() != dim {
            return Err(AppearanceError::DimensionMismatch {
                expected: dim,
                found: f.dim(),
            });
        }
    }
    let m = features.len();
    if m < 2 {
        return Ok(features.to_vec());
    }
    let mut out: Vec<Vec<f64>> = vec![vec![0.0; dim]; m];
    for d in 0..dim {
        let mean = features.iter().map(|f| f[d]).sum::<f64>() / m as f64;
        let var = features.iter().map(|f| (f[d] - mean).powi(2)).sum::<f64>() / m as f64;
        let scale = params.gamma[d] / (var + params.eps).sqrt();
        for (o, f) in out.iter_mut().zip(features) {
            o[d] = scale * (f[d] - mean) + params.beta[d];
        }
    }
    Ok(out.into_iter().map(FeatureVector::new).collect())
}

/// Per-frame embedding pass applied before any cost is computed: optional
/// batch renormalization (only when every detection has an embedding and
/// there are at least two), then L2 normalization of each embedding.
pub fn prepare_frame_embeddings(
    detections: &mut [Detection],
    renormalize: bool,
    params: &RenormParams,
) -> Result<(), AppearanceError> {
    if renormalize && detections.len() >= 2 && detections.iter().all(|d| d.embedding.is_some()) {
        let feats: Vec<FeatureVector> = detections.iter().filter_map(|d| d.embedding.clone()).collect();
        let out = renormalize_frame(&feats, params)?;
        for (d, f) in detections.iter_mut().zip(out) {
            d.embedding = Some(f);
        }
    }
    for d in detections.iter_mut() {
        if let Some(e) = d.embedding.as_mut() {
            e.normalize();
        }
    }
    Ok(())
}

/// Appearance cost between a track and a detection.
///
/// Active tracks use the cosine distance to the last stored embedding;
/// inactive tracks use the configured proxy over all stored embeddings.
pub fn appearance_cost(
    track: &Track,
    detection: &Detection,
    cfg: &TrackerConfig,
) -> Result<f64, AppearanceError> {
    let query = detection
        .embedding
        .as_ref()
        .ok_or(AppearanceError::MissingEmbedding)?;
    if track.is_active() {
        let last = track
            .last_embedding()
            .ok_or(AppearanceError::MissingEmbedding)?;
        return cosine_distance(query, last);
    }
    let gallery = track.embeddings();
    if gallery.is_empty() {
        return Err(AppearanceError::MissingEmbedding);
    }
    match FeatureProxy::from_method(cfg.proxy_method) {
        None => proxy_distance_mean(query, &gallery),
        Some(method) => {
            let proxy = proxy_feature(&gallery, method, None, cfg.ema_alpha)?;
            cosine_distance(query, &proxy)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BoundingBox, TrackId, TrackStatus};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec())
    }

    fn basis(dim: usize, i: usize) -> FeatureVector {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        FeatureVector::new(v)
    }

    fn track_with(embeddings: &[FeatureVector], status: TrackStatus) -> Track {
        let bbox = BoundingBox::new(0.0, 0.0, 10.0, 10.0);
        let mut it = embeddings.iter().enumerate();
        let (_, first) = it.next().unwrap();
        let mut t = Track::new(TrackId(1), Detection::new(1, bbox, 1.0).with_embedding(first.clone()));
        for (i, e) in it {
            t.detections
                .push(Detection::new(1 + i as u32, bbox, 1.0).with_embedding(e.clone()));
        }
        t.status = status;
        t
    }

    #[test]
    fn cosine_basic_cases() {
        let f = fv(&[0.3, -0.2, 0.9]);
        let neg = fv(&[-0.3, 0.2, -0.9]);
        assert_abs_diff_eq!(cosine_distance(&f, &f).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cosine_distance(&basis(3, 0), &basis(3, 1)).unwrap(), 1.0);
        assert_abs_diff_eq!(cosine_distance(&f, &neg).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn cosine_zero_vector() {
        let z = fv(&[0.0, 0.0]);
        assert_eq!(
            cosine_distance(&z, &fv(&[1.0, 0.0])),
            Err(AppearanceError::ZeroVector)
        );
    }

    #[test]
    fn cosine_dimension_mismatch() {
        assert!(matches!(
            cosine_distance(&fv(&[1.0]), &fv(&[1.0, 0.0])),
            Err(AppearanceError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn proxy_mean_examples() {
        let f = fv(&[0.6, 0.8]);
        let neg = fv(&[-0.6, -0.8]);
        assert_abs_diff_eq!(proxy_distance_mean(&f, &[&f]).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(proxy_distance_mean(&f, &[&f, &neg]).unwrap(), 1.0, epsilon = 1e-15);
        let (e1, e2) = (basis(2, 0), basis(2, 1));
        assert_abs_diff_eq!(proxy_distance_mean(&e1, &[&e1, &e2]).unwrap(), 0.5);
        assert_eq!(proxy_distance_mean(&f, &[]), Err(AppearanceError::EmptyGallery));
    }

    #[test]
    fn proxy_feature_examples() {
        let f = fv(&[0.6, 0.8]);
        let mean = proxy_feature(&[&f, &f], FeatureProxy::Mean, None, 0.9).unwrap();
        assert_abs_diff_eq!(mean[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(mean[1], 0.8, epsilon = 1e-15);

        let ema = proxy_feature(&[&f], FeatureProxy::Ema, Some(&f), 0.9).unwrap();
        assert_abs_diff_eq!(ema[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(ema[1], 0.8, epsilon = 1e-15);

        // Per-dimension median of {1, 3, 2} is 2; normalized (0, 2) is (0, 1).
        let (a, b, c) = (fv(&[0.0, 1.0]), fv(&[0.0, 3.0]), fv(&[0.0, 2.0]));
        let med = proxy_feature(&[&a, &b, &c], FeatureProxy::Median, None, 0.9).unwrap();
        assert_eq!(med.values(), &[0.0, 1.0]);
    }

    #[test]
    fn median_is_per_dimension_before_normalization() {
        assert_eq!(median(vec![1.0, 3.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn mode_quantizes_and_breaks_ties_low() {
        // 0.10001 and 0.1 share a bin; 0.5 appears twice too, the smaller bin wins.
        let v = [0.10001, 0.1, 0.5, 0.5, 0.9];
        assert_abs_diff_eq!(quantized_mode(v.into_iter()), 0.1, epsilon = 1e-12);
        let w = [0.7, 0.7, 0.2, 0.2, 0.2];
        assert_abs_diff_eq!(quantized_mode(w.into_iter()), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn ema_errors() {
        assert_eq!(
            proxy_feature(&[], FeatureProxy::Ema, None, 0.9),
            Err(AppearanceError::MissingEmaState)
        );
        assert_eq!(
            proxy_feature(&[], FeatureProxy::Mean, None, 0.9),
            Err(AppearanceError::EmptyGallery)
        );
    }

    #[test]
    fn ema_weights_history() {
        let (e1, e2) = (basis(2, 0), basis(2, 1));
        // 0.9 * e1 + 0.1 * e2
        let v = proxy_feature(&[&e1, &e2], FeatureProxy::Ema, None, 0.9).unwrap();
        let n = (0.81f64 + 0.01).sqrt();
        assert_abs_diff_eq!(v[0], 0.9 / n, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.1 / n, epsilon = 1e-15);
    }

    #[test]
    fn renormalize_single_detection_passthrough() {
        let f = vec![fv(&[0.3, 0.4, 5.0])];
        let out = renormalize_frame(&f, &RenormParams::identity(3, 1e-5)).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn renormalize_constant_dimension_maps_to_zero() {
        let f = vec![fv(&[0.5, 1.0]), fv(&[0.5, 3.0]), fv(&[0.5, -2.0])];
        let out = renormalize_frame(&f, &RenormParams::identity(2, 1e-5)).unwrap();
        for o in &out {
            assert_eq!(o[0], 0.0);
        }
    }

    #[test]
    fn renormalize_applies_affine() {
        let f = vec![fv(&[1.0]), fv(&[3.0])];
        let params = RenormParams {
            gamma: vec![2.0],
            beta: vec![0.5],
            eps: 1e-12,
        };
        let out = renormalize_frame(&f, &params).unwrap();
        assert_abs_diff_eq!(out[0][0], -1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(out[1][0], 2.5, epsilon = 1e-9);
    }

    #[test]
    fn renormalize_dimension_mismatch() {
        let f = vec![fv(&[1.0, 2.0]), fv(&[1.0])];
        assert!(matches!(
            renormalize_frame(&f, &RenormParams::identity(2, 1e-5)),
            Err(AppearanceError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn appearance_cost_active_and_inactive() {
        let cfg = TrackerConfig::default();
        let (e1, e2) = (basis(2, 0), basis(2, 1));
        let det = Detection::new(5, BoundingBox::new(0.0, 0.0, 1.0, 1.0), 1.0).with_embedding(e1.clone());

        let active = track_with(&[e2.clone(), e1.clone()], TrackStatus::Active);
        assert_abs_diff_eq!(appearance_cost(&active, &det, &cfg).unwrap(), 0.0);

        let inactive = track_with(&[e1.clone(), e2.clone()], TrackStatus::Inactive(2));
        assert_abs_diff_eq!(appearance_cost(&inactive, &det, &cfg).unwrap(), 0.5);

        let mean_cfg = TrackerConfig {
            proxy_method: ProxyMethod::MeanFeature,
            ..TrackerConfig::default()
        };
        assert_abs_diff_eq!(
            appearance_cost(&inactive, &det, &mean_cfg).unwrap(),
            1.0 - 1.0 / 2f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn appearance_cost_requires_embedding() {
        let cfg = TrackerConfig::default();
        let t = track_with(&[basis(2, 0)], TrackStatus::Active);
        let det = Detection::new(2, BoundingBox::new(0.0, 0.0, 1.0, 1.0), 1.0);
        assert_eq!(
            appearance_cost(&t, &det, &cfg),
            Err(AppearanceError::MissingEmbedding)
        );
    }

    fn unit_vec(dim: usize) -> impl Strategy<Value = FeatureVector> {
        prop::collection::vec(-1.0..1.0f64, dim)
            .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
            .prop_map(|v| FeatureVector::new(v).normalized())
    }

    proptest! {
        #[test]
        fn cosine_scale_invariant(a in unit_vec(8), b in unit_vec(8), s in 0.01..100.0f64, t in 0.01..100.0f64) {
            let scaled_a = FeatureVector::new(a.iter().map(|x| x * s).collect());
            let scaled_b = FeatureVector::new(b.iter().map(|x| x * t).collect());
            let d0 = cosine_distance(&a, &b).unwrap();
            let d1 = cosine_distance(&scaled_a, &scaled_b).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-9);
        }

        #[test]
        fn renormalize_permutation_equivariant(
            frame in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 6), 2..12),
            seed in any::<u64>(),
        ) {
            let feats: Vec<FeatureVector> = frame.into_iter().map(FeatureVector::new).collect();
            let mut order: Vec<usize> = (0..feats.len()).collect();
            // deterministic shuffle from the seed
            let mut s = seed;
            for i in (1..order.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                order.swap(i, (s >> 33) as usize % (i + 1));
            }
            let permuted: Vec<FeatureVector> = order.iter().map(|&i| feats[i].clone()).collect();
            let params = RenormParams::identity(6, 1e-5);
            let out = renormalize_frame(&feats, &params).unwrap();
            let out_perm = renormalize_frame(&permuted, &params).unwrap();
            for (j, &i) in order.iter().enumerate() {
                for d in 0..6 {
                    prop_assert!((out_perm[j][d] - out[i][d]).abs() < 1e-12);
                }
            }
        }
    }
}
