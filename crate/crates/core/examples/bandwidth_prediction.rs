//! Sliding-window throughput versus the RLS one-step prediction on a
//! fluctuating LTE trace.

use ecoabr::bandwidth::{BandwidthPredictor, ChunkDownload};
use ecoabr::media::TracePreset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trace = TracePreset::NyuLte.generate(600.0, 3)?;
    let mut predictor = BandwidthPredictor::default();
    let chunk_mb = 0.4;
    let (mut t, mut n) = (0.0, 0usize);
    let (mut err_window, mut err_rls) = (0.0, 0.0);
    println!("{:>6} {:>9} {:>9} {:>9}", "t (s)", "actual", "window", "rls");
    while t < 590.0 {
        let bw = trace.bandwidth_at(t, false)?;
        let dt = chunk_mb / bw;
        if n > 0 {
            let (w, r) = (predictor.measure()?, predictor.predict()?);
            err_window += (w - bw).abs() / bw;
            err_rls += (r - bw).abs() / bw;
            if n % 100 == 0 {
                println!("{t:>6.1} {bw:>9.3} {w:>9.3} {r:>9.3}");
            }
        }
        predictor.observe(ChunkDownload { size: chunk_mb, download_time: dt, idle_wait: 0.0 })?;
        t += dt.max(0.2);
        n += 1;
    }
    let m = (n - 1) as f64;
    println!("\n{n} chunks, mean abs pct error: window {:.1}%, rls {:.1}%", 100.0 * err_window / m, 100.0 * err_rls / m);
    println!("rls weights {:?}", predictor.filter.weights().iter().map(|w| (w * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    Ok(())
}
