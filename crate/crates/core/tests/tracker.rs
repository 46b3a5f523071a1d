use std::collections::BTreeSet;

use ghost_core::analysis::{compute_idf1, compute_mota, DEFAULT_IOU_MIN};
use ghost_core::assoc::{filter_matches, hungarian, CostMatrix};
use ghost_core::io::format_mot_results;
use ghost_core::synth::{generate, SynthParams};
use ghost_core::{
    track_sequence, AssocError, BoundingBox, Detection, FeatureVector, MotionModelKind, ProxyMethod, TrackId,
    TrackStatus, Tracker, TrackerConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn det(frame: u32, x: f64, emb: &[f64]) -> Detection {
    Detection::new(frame, BoundingBox::new(x, 0.0, 20.0, 50.0), 0.9).with_embedding(FeatureVector::new(emb.to_vec()))
}

#[test]
fn detection_at_prediction_matches_at_zero_cost() {
    let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
    let born = tr.step(1, &[det(1, 10.0, &[1.0, 0.0])]).unwrap();
    assert_eq!(born.new_tracks, vec![TrackId(1)]);
    let r = tr.step(2, &[det(2, 10.0, &[1.0, 0.0])]).unwrap();
    assert_eq!(r.matches, vec![(TrackId(1), 0, 0.0)]);
    assert!(r.new_tracks.is_empty());
    assert_eq!(tr.tracks()[0].status, TrackStatus::Active);
}

#[test]
fn empty_frame_deactivates_everything() {
    let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
    tr.step(1, &[det(1, 10.0, &[1.0, 0.0]), det(1, 300.0, &[0.0, 1.0])]).unwrap();
    let r = tr.step(2, &[]).unwrap();
    assert!(r.matches.is_empty());
    assert_eq!(r.deactivated, vec![TrackId(1), TrackId(2)]);
    assert!(tr.tracks().iter().all(|t| t.status == TrackStatus::Inactive(1)));
    let r = tr.step(3, &[]).unwrap();
    assert!(r.deactivated.is_empty());
    assert!(tr.tracks().iter().all(|t| t.status == TrackStatus::Inactive(2)));
}

#[test]
fn eviction_after_patience_plus_one_frames() {
    let cfg = TrackerConfig {
        inactive_patience: 50,
        ..TrackerConfig::default()
    };
    let mut tr = Tracker::new(cfg).unwrap();
    tr.step(1, &[det(1, 10.0, &[1.0, 0.0])]).unwrap();
    for frame in 2..=51 {
        let r = tr.step(frame, &[]).unwrap();
        assert!(r.evicted.is_empty(), "evicted early at frame {frame}");
    }
    assert_eq!(tr.tracks()[0].status, TrackStatus::Inactive(50));
    let r = tr.step(52, &[]).unwrap();
    assert_eq!(r.evicted, vec![TrackId(1)]);
    assert!(tr.tracks().is_empty());
    assert_eq!(tr.evicted_tracks().len(), 1);
}

#[test]
fn frame_gap_counts_towards_patience() {
    let cfg = TrackerConfig {
        inactive_patience: 5,
        ..TrackerConfig::default()
    };
    let mut tr = Tracker::new(cfg).unwrap();
    tr.step(1, &[det(1, 10.0, &[1.0, 0.0])]).unwrap();
    let r = tr.step(7, &[]).unwrap();
    assert_eq!(r.evicted, vec![TrackId(1)]);
}

#[test]
fn reappearance_within_patience_keeps_id() {
    let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
    for f in 1..=5 {
        tr.step(f, &[det(f, 10.0 + f64::from(f), &[1.0, 0.0])]).unwrap();
    }
    for f in 6..=15 {
        tr.step(f, &[]).unwrap();
    }
    let r = tr.step(16, &[det(16, 26.0, &[1.0, 0.0])]).unwrap();
    assert_eq!(r.matches.len(), 1);
    assert_eq!(r.matches[0].0, TrackId(1));
    assert_eq!(tr.tracks_born(), 1);
}

#[test]
fn out_of_order_and_wrong_frame() {
    let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
    tr.step(3, &[]).unwrap();
    assert!(matches!(
        tr.step(3, &[]),
        Err(AssocError::OutOfOrderFrame { previous: 3, got: 3 })
    ));
    assert!(matches!(
        tr.step(4, &[det(5, 0.0, &[1.0])]),
        Err(AssocError::WrongFrame { frame: 5, .. })
    ));
}

#[test]
fn missing_embedding_only_matters_with_appearance() {
    let bare = Detection::new(1, BoundingBox::new(0.0, 0.0, 10.0, 10.0), 0.9);
    let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
    assert!(matches!(
        tr.step(1, std::slice::from_ref(&bare)),
        Err(AssocError::MissingEmbedding { frame: 1, .. })
    ));
    let cfg = TrackerConfig {
        appearance_enabled: false,
        ..TrackerConfig::default()
    };
    let mut tr = Tracker::new(cfg).unwrap();
    tr.step(1, std::slice::from_ref(&bare)).unwrap();
    let r = tr.step(2, &[Detection { frame: 2, ..bare }]).unwrap();
    assert_eq!(r.matches.len(), 1);
}

#[test]
fn confidence_gates() {
    let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
    let weak = |f: u32, c: f64| Detection {
        confidence: c,
        ..det(f, 10.0, &[1.0, 0.0])
    };
    // below det_confidence_min: ignored entirely
    let r = tr.step(1, &[weak(1, 0.4)]).unwrap();
    assert!(r.new_tracks.is_empty());
    // between the two minima: no birth
    let r = tr.step(2, &[weak(2, 0.55)]).unwrap();
    assert!(r.new_tracks.is_empty());
    tr.step(3, &[weak(3, 0.9)]).unwrap();
    // ...but it can extend an existing track
    let r = tr.step(4, &[weak(4, 0.55)]).unwrap();
    assert_eq!(r.matches.len(), 1);
}

#[test]
fn matches_report_caller_indices() {
    let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
    tr.step(1, &[det(1, 10.0, &[1.0, 0.0])]).unwrap();
    let dropped = Detection {
        confidence: 0.1,
        ..det(2, 500.0, &[0.0, 1.0])
    };
    let r = tr.step(2, &[dropped, det(2, 10.0, &[1.0, 0.0])]).unwrap();
    assert_eq!(r.matches[0].1, 1);
}

#[test]
fn threshold_blocks_distant_inactive_match() {
    let cfg = TrackerConfig {
        tau_inact: 0.3,
        ..TrackerConfig::default()
    };
    let mut tr = Tracker::new(cfg).unwrap();
    tr.step(1, &[det(1, 10.0, &[1.0, 0.0])]).unwrap();
    tr.step(2, &[]).unwrap();
    // same appearance, far away: motion cost 1, combined 0.5 >= 0.3
    let r = tr.step(3, &[det(3, 900.0, &[1.0, 0.0])]).unwrap();
    assert!(r.matches.is_empty());
    assert_eq!(r.new_tracks, vec![TrackId(2)]);
}

#[test]
fn occlusion_preset_is_tracked_perfectly_with_every_proxy_and_motion_model() {
    let seq = generate(&SynthParams::preset("occlusion", 3).unwrap()).unwrap();
    for proxy in [
        ProxyMethod::MeanOfDistances,
        ProxyMethod::MeanFeature,
        ProxyMethod::ModeFeature,
        ProxyMethod::MedianFeature,
        ProxyMethod::EmaFeature,
    ] {
        for motion in [MotionModelKind::Linear, MotionModelKind::KalmanCV, MotionModelKind::None] {
            let cfg = TrackerConfig {
                proxy_method: proxy,
                motion_model: motion,
                ..TrackerConfig::default()
            };
            let out = track_sequence(&seq.dets, &cfg, Some(seq.meta.seq_length), None).unwrap();
            let rows = out.result_rows();
            let idf1 = compute_idf1(&seq.gt, &rows, DEFAULT_IOU_MIN).unwrap().idf1;
            let mota = compute_mota(&seq.gt, &rows, DEFAULT_IOU_MIN).unwrap();
            assert_eq!(idf1, 1.0, "{proxy} / {motion}");
            assert_eq!(mota.idsw, 0, "{proxy} / {motion}");
        }
    }
}

#[test]
fn deterministic_results() {
    let seq = generate(&SynthParams::preset("crowded", 11).unwrap()).unwrap();
    let cfg = TrackerConfig::default();
    let a = track_sequence(&seq.dets, &cfg, None, None).unwrap();
    let b = track_sequence(&seq.dets, &cfg, None, None).unwrap();
    assert_eq!(format_mot_results(&a.tracks), format_mot_results(&b.tracks));
}

#[test]
fn dual_threshold_with_equal_taus_is_single_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let rows = rng.random_range(0..6);
        let cols = rng.random_range(0..6);
        let costs: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let m = CostMatrix {
            costs,
            n_active: rng.random_range(0..=rows),
        };
        let tau = rng.random_range(0.1..0.9);
        let cfg = TrackerConfig {
            tau_act: tau,
            tau_inact: tau,
            ..TrackerConfig::default()
        };
        let a = hungarian(&m.costs);
        let single: Vec<(usize, usize)> = a.pairs.iter().copied().filter(|&(r, c)| m.costs[r][c] < tau).collect();
        assert_eq!(filter_matches(&a, &m, &cfg), single);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn per_step_invariants(seed in 0u64..10_000, preset in prop::sample::select(vec!["crowded", "moving-camera", "occlusion"])) {
        let mut params = SynthParams::preset(preset, seed).unwrap();
        params.n_frames = 60;
        let seq = generate(&params).unwrap();
        let cfg = TrackerConfig { inactive_patience: 8, ..TrackerConfig::default() };
        let mut tr = Tracker::new(cfg).unwrap();
        let mut seen_ids = BTreeSet::new();
        for frame in 1..=params.n_frames {
            let dets: Vec<Detection> = seq.dets.iter().filter(|d| d.frame == frame).cloned().collect();
            let before = tr.tracks().len();
            let r = tr.step(frame, &dets).unwrap();
            // one joint assignment per frame
            prop_assert_eq!(tr.solver_invocations(), u64::from(frame));
            // conservation
            prop_assert_eq!(tr.tracks().len(), before + r.new_tracks.len() - r.evicted.len());
            // a matched detection never also seeds a track
            let matched_dets: BTreeSet<usize> = r.matches.iter().map(|m| m.1).collect();
            prop_assert_eq!(matched_dets.len(), r.matches.len());
            let matched_tracks: BTreeSet<TrackId> = r.matches.iter().map(|m| m.0).collect();
            prop_assert_eq!(matched_tracks.len(), r.matches.len());
            prop_assert!(r.new_tracks.iter().all(|id| !matched_tracks.contains(id)));
            prop_assert_eq!(r.matches.len() + r.new_tracks.len() <= dets.len(), true);
            for id in &r.new_tracks {
                prop_assert!(seen_ids.insert(*id), "id {} reused", id);
            }
            for t in tr.tracks() {
                prop_assert!(t.is_frame_ordered());
                prop_assert!(t.status.frames_inactive() <= 8);
            }
        }
    }
}
