//! Data and playback energy per rung for full sessions on constant links.

use std::sync::Arc;

use ecoabr::abr::{run_session, FixedRung};
use ecoabr::media::{generate_manifest, Genre, NetworkTrace};
use ecoabr::sim::{LiveSession, SessionConfig, SimParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let manifest = Arc::new(generate_manifest(Genre::Movie, 300, 1)?);
    for bw in [5.0, 50.0] {
        let trace = Arc::new(NetworkTrace::constant(bw, 900.0)?);
        println!("link {bw} Mbps");
        println!("{:>5} {:>8} {:>9} {:>9} {:>9} {:>8}", "rung", "kbps", "data J", "play J", "total kJ", "stall s");
        for rung in 0..manifest.ladder.len() {
            let mut s = LiveSession::new(SessionConfig::default(), SimParams::default(), trace.clone(), manifest.clone())?;
            let log = run_session(&mut s, &mut FixedRung(rung))?;
            let data: f64 = log.iter().map(|o| o.data_energy).sum();
            let play: f64 = log.iter().map(|o| o.playback_energy).sum();
            let stall: f64 = log.iter().map(|o| o.stall_duration).sum();
            println!(
                "{rung:>5} {:>8} {data:>9.1} {play:>9.1} {:>9.3} {stall:>8.1}",
                manifest.ladder[rung].bitrate_kbps,
                (data + play) / 1000.0
            );
        }
        println!();
    }
    Ok(())
}
