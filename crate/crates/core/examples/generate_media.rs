//! Generate one trace per network family and a manifest per genre.
//!
//! cargo run --release --example generate_media [out_dir]

use std::path::PathBuf;

use ecoabr::media::{generate_manifest, Genre, TracePreset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ecoabr-media"));
    std::fs::create_dir_all(&out)?;

    println!("{:<10} {:>10} {:>10} {:>10} {:>10}", "family", "target", "mean", "min", "max");
    for preset in TracePreset::ALL {
        let trace = preset.generate(600.0, 1)?;
        let bw: Vec<f64> = trace.samples().iter().map(|s| s.bandwidth).collect();
        let min = bw.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = bw.iter().cloned().fold(0.0, f64::max);
        println!(
            "{:<10} {:>10.2} {:>10.2} {:>10.2} {:>10.2}",
            preset.name(),
            preset.mean_bw(),
            trace.mean_bandwidth(),
            min,
            max
        );
        trace.save(out.join(format!("{}.csv", preset.name())))?;
    }

    println!();
    for genre in Genre::ALL {
        let m = generate_manifest(genre, 300, 1)?;
        let top = m.ladder.len() - 1;
        let mean_vmaf = |r: usize| m.segments.iter().map(|s| s[r].vmaf).sum::<f64>() / m.n_segments() as f64;
        println!(
            "{:<10} {} rungs, {}..{} kbps, mean vmaf {:.1} (rung 0) .. {:.1} (rung {top})",
            genre.name(),
            m.ladder.len(),
            m.min_bitrate_kbps(),
            m.max_bitrate_kbps(),
            mean_vmaf(0),
            mean_vmaf(top)
        );
        m.save(out.join(format!("{}.json", genre.name())))?;
    }
    println!("\nwrote {}", out.display());
    Ok(())
}
