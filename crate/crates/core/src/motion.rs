//! Position prediction: mean finite-difference velocity with constant-velocity
//! extrapolation, and a constant-velocity Kalman filter as an alternative.

use nalgebra::{SMatrix, SVector};

use crate::config::{KalmanParams, VelocityWindow};
use crate::error::MotionError;
use crate::types::{BoundingBox, KalmanState, Track};

/// Smallest width/height a prediction may shrink to, in pixels.
pub const MIN_BOX_SIDE: f64 = 1.0;

/// Mean of per-step finite differences `(box_b - box_a) / (frame_b - frame_a)`
/// over the last `min(k, len - 1)` consecutive pairs. Zero with fewer than two entries.
pub fn estimate_velocity(history: &[(u32, BoundingBox)], window: VelocityWindow) -> [f64; 4] {
    if history.len() < 2 {
        return [0.0; 4];
    }
    let pairs = history.len() - 1;
    let used = match window {
        VelocityWindow::All => pairs,
        VelocityWindow::Last(k) => k.clamp(1, pairs),
    };
    let mut v = [0.0; 4];
    for w in history[history.len() - used - 1..].windows(2) {
        let (f0, b0) = (w[0].0, w[0].1.to_array());
        let (f1, b1) = (w[1].0, w[1].1.to_array());
        let dt = f64::from(f1.saturating_sub(f0).max(1));
        for i in 0..4 {
            v[i] += (b1[i] - b0[i]) / dt;
        }
    }
    v.map(|x| x / used as f64)
}

/// Velocity of a track from its own detections.
pub fn track_velocity(track: &Track, window: VelocityWindow) -> [f64; 4] {
    let start = match window {
        VelocityWindow::All => 0,
        VelocityWindow::Last(k) => track.detections.len().saturating_sub(k + 1),
    };
    let history: Vec<(u32, BoundingBox)> = track.detections[start..]
        .iter()
        .map(|d| (d.frame, d.bbox))
        .collect();
    estimate_velocity(&history, window)
}

/// `base + velocity * dt`, with width and height clamped to [`MIN_BOX_SIDE`].
pub fn extrapolate(base: &BoundingBox, velocity: &[f64; 4], dt: f64) -> BoundingBox {
    BoundingBox::new(
        base.x + velocity[0] * dt,
        base.y + velocity[1] * dt,
        (base.w + velocity[2] * dt).max(MIN_BOX_SIDE),
        (base.h + velocity[3] * dt).max(MIN_BOX_SIDE),
    )
}

/// Linear prediction of where `track` is at `target_frame`.
///
/// Active tracks extrapolate from their last observed box; inactive tracks
/// keep chaining from their last predicted box.
pub fn predict(track: &Track, target_frame: u32) -> BoundingBox {
    let (base, base_frame) = if track.is_active() {
        (track.last_box(), track.last_frame())
    } else {
        (track.last_predicted_box, track.predicted_frame)
    };
    let dt = f64::from(target_frame) - f64::from(base_frame);
    extrapolate(&base, &track.velocity, dt)
}

type Vec8 = SVector<f64, 8>;
type Mat8 = SMatrix<f64, 8, 8>;
type Mat4 = SMatrix<f64, 4, 4>;
type Mat48 = SMatrix<f64, 4, 8>;

fn transition() -> Mat8 {
    let mut f = Mat8::identity();
    for i in 0..4 {
        f[(i, i + 4)] = 1.0;
    }
    f
}

fn observation() -> Mat48 {
    let mut h = Mat48::zeros();
    for i in 0..4 {
        h[(i, i)] = 1.0;
    }
    h
}

fn measurement(b: &BoundingBox) -> SVector<f64, 4> {
    let (cx, cy) = b.center();
    SVector::<f64, 4>::new(cx, cy, b.w, b.h)
}

fn symmetrize(p: &Mat8) -> Mat8 {
    (p + p.transpose()) * 0.5
}

/// Zero velocity, diagonal covariance scaled by the box height.
pub fn kalman_init(observed: &BoundingBox, params: &KalmanParams) -> KalmanState {
    let z = measurement(observed);
    let mut mean = Vec8::zeros();
    mean.fixed_rows_mut::<4>(0).copy_from(&z);
    let h = observed.h;
    let sp = 2.0 * params.std_weight_position * h;
    let sv = 10.0 * params.std_weight_velocity * h;
    let mut diag = Vec8::zeros();
    for i in 0..4 {
        diag[i] = sp * sp;
        diag[i + 4] = sv * sv;
    }
    KalmanState {
        mean,
        covariance: Mat8::from_diagonal(&diag),
    }
}

/// One frame of constant-velocity transition plus process noise.
pub fn kalman_predict(state: &KalmanState, params: &KalmanParams) -> KalmanState {
    let f = transition();
    let h = state.mean[3].abs();
    let sp = params.std_weight_position * h;
    let sv = params.std_weight_velocity * h;
    let mut q = Vec8::zeros();
    for i in 0..4 {
        q[i] = sp * sp;
        q[i + 4] = sv * sv;
    }
    let mean = f * state.mean;
    let covariance = symmetrize(&(f * state.covariance * f.transpose() + Mat8::from_diagonal(&q)));
    KalmanState { mean, covariance }
}

/// Standard Kalman correction with an `[cx, cy, w, h]` observation.
pub fn kalman_update(
    state: &KalmanState,
    observed: &BoundingBox,
    params: &KalmanParams,
) -> Result<KalmanState, MotionError> {
    let hm = observation();
    let so = params.std_weight_observation * state.mean[3].abs();
    let r = Mat4::from_diagonal_element(so * so);
    let p = &state.covariance;
    let s = hm * p * hm.transpose() + r;
    let s_inv = s
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(MotionError::SingularInnovation)?;
    let gain = p * hm.transpose() * s_inv;
    let innovation = measurement(observed) - hm * state.mean;
    let mean = state.mean + gain * innovation;
    // Joseph form keeps the covariance symmetric positive semidefinite.
    let i_kh = Mat8::identity() - gain * hm;
    let covariance = symmetrize(&(i_kh * p * i_kh.transpose() + gain * r * gain.transpose()));
    Ok(KalmanState { mean, covariance })
}

/// Top-left box of the filter mean, sides clamped to [`MIN_BOX_SIDE`].
pub fn kalman_box(state: &KalmanState) -> BoundingBox {
    let m = &state.mean;
    BoundingBox::from_center(m[0], m[1], m[2].max(MIN_BOX_SIDE), m[3].max(MIN_BOX_SIDE))
}

/// Velocity of the filter expressed in top-left form.
pub fn kalman_velocity(state: &KalmanState) -> [f64; 4] {
    let m = &state.mean;
    [m[4] - 0.5 * m[6], m[5] - 0.5 * m[7], m[6], m[7]]
}
