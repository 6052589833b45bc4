//! One live session with the throughput rule: per-step trace and an SVG plot.

use std::sync::Arc;

use ecoabr::abr::ThroughputRule;
use ecoabr::evaluation::{simulate, EvalSetup};
use ecoabr::media::{generate_manifest, Genre, TracePreset};
use ecoabr::report::session_svg;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trace = Arc::new(TracePreset::NyuLte.generate(600.0, 11)?);
    let manifest = Arc::new(generate_manifest(Genre::Sports, 300, 11)?);
    let (steps, summary) = simulate(&EvalSetup::default(), trace.clone(), manifest, &mut ThroughputRule::default())?;

    println!("{:>4} {:>6} {:>6} {:>7} {:>7} {:>6} {:>7}", "seg", "kbps", "vmaf", "buffer", "latency", "speed", "stall");
    for o in steps.iter().step_by(25) {
        println!(
            "{:>4} {:>6} {:>6.1} {:>7.2} {:>7.2} {:>6.2} {:>7.2}",
            o.segment_index, o.bitrate_kbps, o.vmaf, o.buffer, o.latency, o.speed, o.stall_duration
        );
    }
    println!("\n{}", serde_json::to_string_pretty(&summary)?);

    let path = std::env::temp_dir().join("ecoabr-session.svg");
    std::fs::write(&path, session_svg(&steps, Some(&trace), "rule on nyu-lte-11 (sports)"))?;
    println!("plot: {}", path.display());
    Ok(())
}
