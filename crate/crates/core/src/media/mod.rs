//! Network traces and per-title video manifests.

mod manifest;
mod presets;
mod trace;

pub use manifest::{
    generate_manifest, load_manifest, Genre, Representation, SegmentRung, VideoManifest,
};
pub use presets::{TraceMix, TracePreset};
pub use trace::{
    generate_synthetic_trace, load_network_trace, NetworkTrace, TraceGenSpec, TraceSample,
};
