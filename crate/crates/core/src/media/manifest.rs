use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::trace::round6;
use crate::error::{Error, Result};

/// One encoded rendition of a title.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    pub bitrate_kbps: u32,
    pub width: u32,
    pub height: u32,
    pub fps: f64,
}

impl Representation {
    pub fn bitrate_mbps(&self) -> f64 {
        self.bitrate_kbps as f64 / 1000.0
    }

    pub fn megapixels(&self) -> f64 {
        (self.width as f64 * self.height as f64) / 1e6
    }
}

/// Stored data for one (segment, rung) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRung {
    pub chunk_sizes_mb: Vec<f64>,
    pub vmaf: f64,
}

impl SegmentRung {
    pub fn size_mb(&self) -> f64 {
        self.chunk_sizes_mb.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoManifest {
    pub title: String,
    pub segment_duration_s: f64,
    pub chunks_per_segment: usize,
    pub ladder: Vec<Representation>,
    /// `segments[s][r]` is segment `s` encoded at rung `r`.
    pub segments: Vec<Vec<SegmentRung>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Genre {
    Animation,
    Movie,
    Sports,
}

const RESOLUTIONS: [(u32, u32); 11] = [
    (256, 144),
    (640, 360),
    (640, 360),
    (854, 480),
    (854, 480),
    (1280, 720),
    (1280, 720),
    (1920, 1080),
    (1920, 1080),
    (2560, 1440),
    (2560, 1440),
];

const ANIMATION_KBPS: [u32; 11] = [300, 450, 600, 800, 1400, 1900, 2400, 3500, 4700, 5000, 8000];
const MOVIE_KBPS: [u32; 11] = [375, 560, 750, 1050, 1750, 2350, 3000, 4300, 5800, 8000, 10000];
const SPORTS_KBPS: [u32; 11] = [450, 670, 900, 1250, 2100, 2800, 3600, 5200, 7000, 9000, 12000];

const CHUNK_SIZE_SIGMA: f64 = 0.15;
const VMAF_JITTER: f64 = 2.0;

impl Genre {
    pub const ALL: [Genre; 3] = [Genre::Animation, Genre::Movie, Genre::Sports];

    pub fn name(self) -> &'static str {
        match self {
            Genre::Animation => "animation",
            Genre::Movie => "movie",
            Genre::Sports => "sports",
        }
    }

    fn kbps(self) -> &'static [u32; 11] {
        match self {
            Genre::Animation => &ANIMATION_KBPS,
            Genre::Movie => &MOVIE_KBPS,
            Genre::Sports => &SPORTS_KBPS,
        }
    }

    /// Encoding ladder, ascending in bitrate. All renditions are 30 fps.
    pub fn ladder(self) -> Vec<Representation> {
        self.kbps()
            .iter()
            .zip(RESOLUTIONS)
            .map(|(&bitrate_kbps, (width, height))| Representation {
                bitrate_kbps,
                width,
                height,
                fps: 30.0,
            })
            .collect()
    }

    /// Saturation bitrate (Mbps) of the synthetic quality curve.
    pub fn quality_knee_mbps(self) -> f64 {
        match self {
            Genre::Animation => 1.2,
            Genre::Movie => 1.8,
            Genre::Sports => 2.4,
        }
    }

    /// Synthetic VMAF before jitter: `100 (1 - exp(-b / knee))`.
    pub fn vmaf_curve(self, bitrate_mbps: f64) -> f64 {
        100.0 * (1.0 - (-bitrate_mbps / self.quality_knee_mbps()).exp())
    }
}

impl FromStr for Genre {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Genre::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown genre {s:?}")))
    }
}

pub fn generate_manifest(genre: Genre, n_segments: usize, seed: u64) -> Result<VideoManifest> {
    if n_segments == 0 {
        return Err(Error::validation("manifest needs at least one segment"));
    }
    let segment_duration_s = 1.0;
    let chunks_per_segment = 5;
    let chunk_duration = segment_duration_s / chunks_per_segment as f64;
    let ladder = genre.ladder();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lognormal = Normal::new(-0.5 * CHUNK_SIZE_SIGMA * CHUNK_SIZE_SIGMA, CHUNK_SIZE_SIGMA)
        .expect("valid sigma");

    let mut segments = Vec::with_capacity(n_segments);
    for _ in 0..n_segments {
        let mut rungs = Vec::with_capacity(ladder.len());
        let mut floor = 0.0f64;
        for rep in &ladder {
            let nominal = rep.bitrate_mbps() * chunk_duration;
            let chunk_sizes_mb = (0..chunks_per_segment)
                .map(|_| round6(nominal * lognormal.sample(&mut rng).exp()).max(1e-6))
                .collect();
            let jitter = rng.random_range(-VMAF_JITTER..=VMAF_JITTER);
            let raw = (genre.vmaf_curve(rep.bitrate_mbps()) + jitter).clamp(0.0, 100.0);
            let vmaf = round6(raw).max(floor);
            floor = vmaf;
            rungs.push(SegmentRung {
                chunk_sizes_mb,
                vmaf,
            });
        }
        segments.push(rungs);
    }
    let manifest = VideoManifest {
        title: genre.name().to_string(),
        segment_duration_s,
        chunks_per_segment,
        ladder,
        segments,
    };
    manifest.validate()?;
    Ok(manifest)
}

impl VideoManifest {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::validation(m));
        if !(self.segment_duration_s > 0.0) {
            return bad(format!("segment duration {} must be positive", self.segment_duration_s));
        }
        if self.chunks_per_segment == 0 {
            return bad("chunks_per_segment must be >= 1".into());
        }
        if self.ladder.is_empty() {
            return bad("empty ladder".into());
        }
        for (i, rep) in self.ladder.iter().enumerate() {
            if rep.bitrate_kbps == 0 || rep.width == 0 || rep.height == 0 || !(rep.fps > 0.0) {
                return bad(format!("ladder rung {i} has non-positive fields"));
            }
            if i > 0 && rep.bitrate_kbps <= self.ladder[i - 1].bitrate_kbps {
                return bad(format!("ladder not strictly ascending at rung {i}"));
            }
        }
        if self.segments.is_empty() {
            return bad("manifest has no segments".into());
        }
        for (s, rungs) in self.segments.iter().enumerate() {
            if rungs.len() != self.ladder.len() {
                return bad(format!(
                    "segment {s} has {} rungs, ladder has {}",
                    rungs.len(),
                    self.ladder.len()
                ));
            }
            let mut prev = f64::NEG_INFINITY;
            for (r, rung) in rungs.iter().enumerate() {
                if rung.chunk_sizes_mb.len() != self.chunks_per_segment {
                    return bad(format!("segment {s} rung {r}: wrong chunk count"));
                }
                if rung.chunk_sizes_mb.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
                    return bad(format!("segment {s} rung {r}: chunk sizes must be positive"));
                }
                if !(0.0..=100.0).contains(&rung.vmaf) {
                    return bad(format!("segment {s} rung {r}: vmaf {} outside [0,100]", rung.vmaf));
                }
                if rung.vmaf < prev {
                    return bad(format!("segment {s}: vmaf decreases at rung {r}"));
                }
                prev = rung.vmaf;
            }
        }
        Ok(())
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn chunk_duration(&self) -> f64 {
        self.segment_duration_s / self.chunks_per_segment as f64
    }

    pub fn rung(&self, segment: usize, rung: usize) -> Result<&SegmentRung> {
        let rungs = self.segments.get(segment).ok_or(Error::OutOfRange {
            what: "segment",
            index: segment,
            len: self.segments.len(),
        })?;
        rungs.get(rung).ok_or(Error::OutOfRange {
            what: "rung",
            index: rung,
            len: rungs.len(),
        })
    }

    pub fn vmaf_of(&self, segment: usize, rung: usize) -> Result<f64> {
        Ok(self.rung(segment, rung)?.vmaf)
    }

    pub fn min_bitrate_kbps(&self) -> u32 {
        self.ladder[0].bitrate_kbps
    }

    pub fn max_bitrate_kbps(&self) -> u32 {
        self.ladder[self.ladder.len() - 1].bitrate_kbps
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: VideoManifest = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<VideoManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    VideoManifest::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_endpoints() {
        assert_eq!(Genre::Animation.ladder()[0].bitrate_kbps, 300);
        assert_eq!(Genre::Animation.ladder()[10].bitrate_kbps, 8000);
        assert_eq!(Genre::Sports.ladder()[10].bitrate_kbps, 12000);
        assert_eq!(Genre::Movie.ladder()[0].bitrate_kbps, 375);
    }

    #[test]
    fn quality_curve_saturates() {
        let v = Genre::Animation.vmaf_curve(8.0);
        assert!((v - 100.0 * (1.0 - (-8.0f64 / 1.2).exp())).abs() < 1e-12);
        assert!((v - 99.873).abs() < 1e-3);
    }

    #[test]
    fn unknown_genre_rejected() {
        assert!("documentary".parse::<Genre>().is_err());
        assert_eq!("sports".parse::<Genre>().unwrap(), Genre::Sports);
    }

    #[test]
    fn vmaf_lookup_and_range() {
        let m = generate_manifest(Genre::Animation, 3, 9).unwrap();
        assert_eq!(m.vmaf_of(2, 4).unwrap(), m.segments[2][4].vmaf);
        assert!(matches!(
            m.vmaf_of(0, m.ladder.len()),
            Err(Error::OutOfRange { what: "rung", .. })
        ));
        assert!(m.vmaf_of(3, 0).is_err());
    }

    #[test]
    fn zero_segments_rejected() {
        assert!(generate_manifest(Genre::Movie, 0, 1).is_err());
    }

    #[test]
    fn chunk_sizes_average_to_bitrate() {
        let m = generate_manifest(Genre::Movie, 400, 5).unwrap();
        for (r, rep) in m.ladder.iter().enumerate() {
            let mean: f64 =
                m.segments.iter().map(|s| s[r].size_mb()).sum::<f64>() / m.n_segments() as f64;
            let rel = (mean - rep.bitrate_mbps()).abs() / rep.bitrate_mbps();
            assert!(rel < 0.02, "rung {r}: mean {mean} vs {}", rep.bitrate_mbps());
        }
    }

    #[test]
    fn validation_catches_decreasing_vmaf() {
        let mut m = generate_manifest(Genre::Sports, 2, 1).unwrap();
        m.segments[1][3].vmaf = m.segments[1][2].vmaf - 1.0;
        assert!(m.validate().is_err());
        let text = m.to_json().unwrap();
        assert!(VideoManifest::from_json(&text).is_err());
    }
}
