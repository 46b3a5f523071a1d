//! Shared fixtures for the benchmarks.

use ghost_core::synth::{generate, SynthParams, SynthSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Square cost matrix with uniform entries in [0, 1).
pub fn random_costs(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect()
}

/// Synthetic sequence with `identities` people over `frames` frames.
pub fn sequence(identities: usize, frames: u32, seed: u64) -> SynthSequence {
    let params = SynthParams {
        n_identities: identities,
        n_frames: frames,
        box_noise_std: 1.0,
        embedding_noise_std: 0.05,
        seed,
        ..SynthParams::default()
    };
    generate(&params).expect("valid synth params")
}
