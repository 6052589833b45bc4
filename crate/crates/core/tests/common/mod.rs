#![allow(dead_code)]

use std::sync::Arc;

use ecoabr::media::{generate_manifest, Genre, NetworkTrace, TracePreset, VideoManifest};
use ecoabr::sim::{Action, LiveSession, SessionConfig, SimParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn manifest(genre: Genre, seed: u64) -> Arc<VideoManifest> {
    Arc::new(generate_manifest(genre, 300, seed).unwrap())
}

pub fn session(trace: NetworkTrace, manifest: Arc<VideoManifest>) -> LiveSession {
    LiveSession::new(
        SessionConfig::default(),
        SimParams::default(),
        Arc::new(trace),
        manifest,
    )
    .unwrap()
}

/// A trace drawn from one of the non-5G families, so stalls do happen.
pub fn mixed_trace(seed: u64) -> NetworkTrace {
    let presets = [
        TracePreset::Hsdpa3g,
        TracePreset::NyuLte,
        TracePreset::Lte4g,
        TracePreset::Synthetic,
    ];
    presets[(seed % presets.len() as u64) as usize]
        .generate(600.0, seed)
        .unwrap()
}

/// Runs a session with uniformly random actions and returns it finished.
pub fn random_episode(genre: Genre, seed: u64) -> LiveSession {
    let mut s = session(mixed_trace(seed), manifest(genre, seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    s.reset().unwrap();
    while !s.is_done() {
        s.step(Action::new(rng.random(), rng.random())).unwrap();
    }
    s
}
