//! Seeded synthetic sequences: ground-truth trajectories with occlusion
//! episodes, jittered detections with misses and false positives, and
//! identity-clustered embeddings.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{IoError, SynthError};
use crate::io::{
    format_mot_detections, format_mot_gt, write_embeddings, write_seqinfo, EmbeddingFile, SequenceMeta,
};
use crate::types::{BoundingBox, Detection, FeatureVector};

/// Frames on either side of an occlusion episode with reduced visibility.
pub const OCCLUSION_RAMP: u32 = 3;

const IMAGE_WIDTH: u32 = 1920;
const IMAGE_HEIGHT: u32 = 1080;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotionLaw {
    Linear,
    /// Linear drift plus a sinusoidal wobble on both axes.
    Sinusoidal,
}

/// Identity `identity` (0-based) is fully occluded for frames
/// `start_frame .. start_frame + length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionEpisode {
    pub identity: usize,
    pub start_frame: u32,
    pub length: u32,
    /// Lowest visibility reached in the frames flanking the episode.
    pub visibility_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_identities: usize,
    pub n_frames: u32,
    pub frame_rate: f64,
    pub motion: MotionLaw,
    /// Per-axis velocity drawn uniformly from this interval, px/frame.
    pub velocity_range: (f64, f64),
    pub sinusoid_amplitude: f64,
    pub sinusoid_period: f64,
    /// Box width interval in px; height is 2.5x the width.
    pub box_width_range: (f64, f64),
    pub box_noise_std: f64,
    pub embedding_dim: usize,
    pub embedding_noise_std: f64,
    /// Distinct basis vectors as prototypes instead of random directions.
    pub orthogonal_prototypes: bool,
    pub occlusion_episodes: Vec<OcclusionEpisode>,
    pub miss_rate: f64,
    /// Expected false positives per frame.
    pub false_positive_rate: f64,
    /// Global per-frame offset (x, y) applied to every box.
    pub camera_drift: (f64, f64),
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_identities: 5,
            n_frames: 200,
            frame_rate: 30.0,
            motion: MotionLaw::Linear,
            velocity_range: (-2.0, 2.0),
            sinusoid_amplitude: 20.0,
            sinusoid_period: 40.0,
            box_width_range: (40.0, 80.0),
            box_noise_std: 0.0,
            embedding_dim: 32,
            embedding_noise_std: 0.0,
            orthogonal_prototypes: false,
            occlusion_episodes: Vec::new(),
            miss_rate: 0.0,
            false_positive_rate: 0.0,
            camera_drift: (0.0, 0.0),
            seed: 0,
        }
    }
}

pub const SYNTH_PRESETS: [&str; 4] = ["clean", "occlusion", "moving-camera", "crowded"];

impl SynthParams {
    /// `clean`: noise-free linear motion. `occlusion`: 10-frame full
    /// occlusions of four identities. `moving-camera`: camera drift and
    /// sinusoidal motion. `crowded`: many identities, misses and false positives.
    pub fn preset(name: &str, seed: u64) -> Option<SynthParams> {
        let base = SynthParams {
            seed,
            ..SynthParams::default()
        };
        let p = match name {
            "clean" => base,
            "occlusion" => SynthParams {
                n_identities: 6,
                velocity_range: (-1.5, 1.5),
                box_noise_std: 0.5,
                embedding_noise_std: 0.02,
                occlusion_episodes: (0..4)
                    .map(|i| OcclusionEpisode {
                        identity: i,
                        start_frame: 40 + 30 * i as u32,
                        length: 10,
                        visibility_floor: 0.2,
                    })
                    .collect(),
                ..base
            },
            "moving-camera" => SynthParams {
                n_identities: 8,
                motion: MotionLaw::Sinusoidal,
                box_noise_std: 1.0,
                embedding_noise_std: 0.05,
                miss_rate: 0.02,
                false_positive_rate: 0.5,
                camera_drift: (3.0, 0.0),
                ..base
            },
            "crowded" => SynthParams {
                n_identities: 30,
                velocity_range: (-1.0, 1.0),
                box_noise_std: 1.0,
                embedding_noise_std: 0.05,
                occlusion_episodes: (0..10)
                    .map(|i| OcclusionEpisode {
                        identity: 3 * i,
                        start_frame: 20 + 15 * i as u32,
                        length: 5 + 3 * i as u32,
                        visibility_floor: 0.1,
                    })
                    .collect(),
                miss_rate: 0.05,
                false_positive_rate: 1.0,
                ..base
            },
            _ => return None,
        };
        Some(p)
    }

    pub fn camera_moving(&self) -> bool {
        self.camera_drift != (0.0, 0.0)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidParams(m));
        if self.n_identities == 0 {
            return bad("n_identities must be >= 1".into());
        }
        if self.n_frames == 0 {
            return bad("n_frames must be >= 1".into());
        }
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return bad("frame_rate must be > 0".into());
        }
        let (lo, hi) = self.velocity_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad("velocity_range must be a finite interval".into());
        }
        let (wlo, whi) = self.box_width_range;
        if !(wlo.is_finite() && whi.is_finite() && wlo >= 1.0 && wlo <= whi) {
            return bad("box_width_range must be a finite interval with width >= 1".into());
        }
        for (name, v) in [
            ("box_noise_std", self.box_noise_std),
            ("embedding_noise_std", self.embedding_noise_std),
            ("false_positive_rate", self.false_positive_rate),
            ("sinusoid_amplitude", self.sinusoid_amplitude),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0"));
            }
        }
        if !(self.sinusoid_period.is_finite() && self.sinusoid_period > 0.0) {
            return bad("sinusoid_period must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.miss_rate) {
            return bad("miss_rate must lie in [0, 1]".into());
        }
        if self.embedding_dim == 0 {
            return bad("embedding_dim must be >= 1".into());
        }
        if self.orthogonal_prototypes && self.n_identities > self.embedding_dim {
            return bad("orthogonal prototypes need n_identities <= embedding_dim".into());
        }
        if !(self.camera_drift.0.is_finite() && self.camera_drift.1.is_finite()) {
            return bad("camera_drift must be finite".into());
        }
        for ep in &self.occlusion_episodes {
            if ep.identity >= self.n_identities {
                return bad(format!("occlusion episode for unknown identity {}", ep.identity));
            }
            if ep.start_frame == 0 || ep.length == 0 {
                return bad("occlusion episodes need start_frame >= 1 and length >= 1".into());
            }
            if !(0.0..=1.0).contains(&ep.visibility_floor) {
                return bad("visibility_floor must lie in [0, 1]".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSequence {
    /// Annotated boxes with identity (1-based) and visibility.
    pub gt: Vec<Detection>,
    /// Detections in file order, embeddings attached.
    pub dets: Vec<Detection>,
    pub embeddings: EmbeddingFile,
    pub meta: SequenceMeta,
    /// Unit prototype per identity.
    pub prototypes: Vec<FeatureVector>,
}

struct Identity {
    origin: (f64, f64),
    velocity: (f64, f64),
    size: (f64, f64),
    phase: (f64, f64),
}

fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

fn unit_random(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Visibility of `identity` at `frame`: 0 inside an episode, ramping back
/// to 1 over [`OCCLUSION_RAMP`] frames on either side.
fn visibility_at(episodes: &[OcclusionEpisode], identity: usize, frame: u32) -> f64 {
    let mut vis: f64 = 1.0;
    for ep in episodes.iter().filter(|e| e.identity == identity) {
        let end = ep.start_frame + ep.length; // exclusive
        if (ep.start_frame..end).contains(&frame) {
            return 0.0;
        }
        let dist = if frame < ep.start_frame {
            ep.start_frame - frame
        } else {
            frame - end + 1
        };
        if dist <= OCCLUSION_RAMP {
            let v = ep.visibility_floor
                + (1.0 - ep.visibility_floor) * f64::from(dist - 1) / f64::from(OCCLUSION_RAMP);
            vis = vis.min(v);
        }
    }
    vis
}

/// Generates a sequence; identical params (including the seed) give identical output.
pub fn generate(params: &SynthParams) -> Result<SynthSequence, SynthError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let dim = params.embedding_dim;

    let prototypes: Vec<Vec<f64>> = if params.orthogonal_prototypes {
        let mut axes: Vec<usize> = (0..dim).collect();
        axes.shuffle(&mut rng);
        axes[..params.n_identities]
            .iter()
            .map(|&a| {
                let mut v = vec![0.0; dim];
                v[a] = 1.0;
                v
            })
            .collect()
    } else {
        (0..params.n_identities).map(|_| unit_random(&mut rng, dim)).collect()
    };

    let (vlo, vhi) = params.velocity_range;
    let (wlo, whi) = params.box_width_range;
    let identities: Vec<Identity> = (0..params.n_identities)
        .map(|_| {
            let w = rng.random_range(wlo..=whi);
            let h = 2.5 * w;
            let x = rng.random_range(100.0..=(f64::from(IMAGE_WIDTH) - 100.0 - w).max(100.0));
            let y = rng.random_range(50.0..=(f64::from(IMAGE_HEIGHT) - 50.0 - h).max(50.0));
            let vx = rng.random_range(vlo..=vhi);
            let vy = rng.random_range(vlo..=vhi);
            let px = rng.random_range(0.0..std::f64::consts::TAU);
            let py = rng.random_range(0.0..std::f64::consts::TAU);
            Identity {
                origin: (x, y),
                velocity: (vx, vy),
                size: (w, h),
                phase: (px, py),
            }
        })
        .collect();

    let box_noise = Normal::new(0.0, params.box_noise_std).expect("validated std");
    let fp_count = (params.false_positive_rate > 0.0)
        .then(|| Poisson::new(params.false_positive_rate).expect("validated rate"));

    let mut gt = Vec::new();
    let mut dets = Vec::new();
    let mut embeddings = EmbeddingFile::new(dim as u32);

    let noisy_embedding = |rng: &mut ChaCha8Rng, proto: &[f64], std: f64| -> Vec<f32> {
        let mut v: Vec<f64> = proto
            .iter()
            .map(|p| p + std * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            v.iter_mut().for_each(|x| *x /= n);
        }
        v.into_iter().map(|x| x as f32).collect()
    };

    for frame in 1..=params.n_frames {
        let t = f64::from(frame - 1);
        let drift = (params.camera_drift.0 * t, params.camera_drift.1 * t);
        let mut frame_dets: Vec<(Detection, Vec<f32>)> = Vec::new();

        for (k, ident) in identities.iter().enumerate() {
            let mut x = ident.origin.0 + ident.velocity.0 * t + drift.0;
            let mut y = ident.origin.1 + ident.velocity.1 * t + drift.1;
            if params.motion == MotionLaw::Sinusoidal {
                let w = std::f64::consts::TAU * t / params.sinusoid_period;
                x += params.sinusoid_amplitude * (w + ident.phase.0).sin();
                y += params.sinusoid_amplitude * (w + ident.phase.1).cos();
            }
            let truth = BoundingBox::new(
                round_to(x, 0.01),
                round_to(y, 0.01),
                round_to(ident.size.0, 0.01),
                round_to(ident.size.1, 0.01),
            );
            let vis = visibility_at(&params.occlusion_episodes, k, frame);
            if vis <= 0.0 {
                continue;
            }
            gt.push(
                Detection::new(frame, truth, 1.0)
                    .with_id(k as u64 + 1)
                    .with_visibility(round_to(vis, 1e-4)),
            );

            let missed = params.miss_rate > 0.0 && rng.random_bool(params.miss_rate);
            let jitter: [f64; 4] = if params.box_noise_std > 0.0 {
                std::array::from_fn(|_| box_noise.sample(&mut rng))
            } else {
                [0.0; 4]
            };
            let emb_std = params.embedding_noise_std * (1.0 + (1.0 - vis));
            let emb = noisy_embedding(&mut rng, &prototypes[k], emb_std);
            if missed {
                continue;
            }
            let observed = BoundingBox::new(
                round_to(truth.x + jitter[0], 0.01),
                round_to(truth.y + jitter[1], 0.01),
                round_to((truth.w + jitter[2]).max(2.0), 0.01),
                round_to((truth.h + jitter[3]).max(2.0), 0.01),
            );
            let conf = round_to(0.7 + 0.25 * vis, 1e-4);
            frame_dets.push((Detection::new(frame, observed, conf), emb));
        }

        if let Some(poisson) = &fp_count {
            let n = poisson.sample(&mut rng) as usize;
            for _ in 0..n {
                let w = rng.random_range(wlo..=whi);
                let h = 2.5 * w;
                let x = rng.random_range(0.0..=(f64::from(IMAGE_WIDTH) - w));
                let y = rng.random_range(0.0..=(f64::from(IMAGE_HEIGHT) - h).max(0.0));
                let b = BoundingBox::new(round_to(x, 0.01), round_to(y, 0.01), round_to(w, 0.01), round_to(h, 0.01));
                let conf = round_to(rng.random_range(0.3..0.7), 1e-4);
                let emb: Vec<f32> = unit_random(&mut rng, dim).into_iter().map(|v| v as f32).collect();
                frame_dets.push((Detection::new(frame, b, conf), emb));
            }
        }

        frame_dets.shuffle(&mut rng);
        for (i, (mut d, emb)) in frame_dets.into_iter().enumerate() {
            d.source_index = i as u32;
            d.embedding = Some(FeatureVector::from(emb.as_slice()));
            embeddings
                .insert(frame, i as u32, emb)
                .expect("fresh (frame, index) keys");
            dets.push(d);
        }
    }

    let meta = SequenceMeta {
        name: format!("synth-{}", params.seed),
        frame_rate: params.frame_rate,
        seq_length: params.n_frames,
        camera_moving: params.camera_moving(),
        img_width: IMAGE_WIDTH,
        img_height: IMAGE_HEIGHT,
    };
    Ok(SynthSequence {
        gt,
        dets,
        embeddings,
        meta,
        prototypes: prototypes.into_iter().map(FeatureVector::new).collect(),
    })
}

impl SynthSequence {
    /// Writes `gt.txt`, `det.txt`, `embeddings.gemb` and `seqinfo.ini` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), IoError> {
        std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
        let gt_path = dir.join("gt.txt");
        std::fs::write(&gt_path, format_mot_gt(&self.gt)).map_err(|e| IoError::io(&gt_path, e))?;
        let det_path = dir.join("det.txt");
        std::fs::write(&det_path, format_mot_detections(&self.dets)).map_err(|e| IoError::io(&det_path, e))?;
        write_embeddings(&dir.join("embeddings.gemb"), &self.embeddings)?;
        write_seqinfo(&dir.join("seqinfo.ini"), &self.meta)
    }
}
