use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// One bandwidth observation: the link delivers `bandwidth` Mbps from `time`
/// until the next sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub time: f64,
    pub bandwidth: f64,
}

/// Step-wise bandwidth series replayed by the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTrace {
    samples: Vec<TraceSample>,
    duration: f64,
    label: String,
}

pub(crate) fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

impl NetworkTrace {
    pub fn new(samples: Vec<TraceSample>, duration: f64, label: impl Into<String>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or(Error::Empty("trace has no samples"))?;
        if first.time != 0.0 {
            return Err(Error::validation(format!(
                "trace must start at t=0, first sample at {}",
                first.time
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.bandwidth > 0.0) || !s.bandwidth.is_finite() {
                return Err(Error::validation(format!(
                    "sample {i}: bandwidth must be positive, got {}",
                    s.bandwidth
                )));
            }
            if i > 0 && !(s.time > samples[i - 1].time) {
                return Err(Error::validation(format!(
                    "sample {i}: times must be strictly increasing ({} after {})",
                    s.time,
                    samples[i - 1].time
                )));
            }
        }
        let last = samples[samples.len() - 1].time;
        if !(duration > 0.0) || duration < last {
            return Err(Error::validation(format!(
                "duration {duration} must be positive and >= last sample time {last}"
            )));
        }
        Ok(Self {
            samples,
            duration,
            label: label.into(),
        })
    }

    /// Constant-bandwidth trace, handy for tests and unconstrained runs.
    pub fn constant(bandwidth: f64, duration: f64) -> Result<Self> {
        Self::new(
            vec![TraceSample {
                time: 0.0,
                bandwidth,
            }],
            duration,
            format!("constant-{bandwidth}"),
        )
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Time-weighted mean bandwidth over `[0, duration)`.
    pub fn mean_bandwidth(&self) -> f64 {
        let mut acc = 0.0;
        for (i, s) in self.samples.iter().enumerate() {
            let end = self
                .samples
                .get(i + 1)
                .map_or(self.duration, |n| n.time);
            acc += s.bandwidth * (end - s.time);
        }
        acc / self.duration
    }

    fn local_time(&self, t: f64, wrap: bool) -> Result<(f64, f64)> {
        if !(t >= 0.0) {
            return Err(Error::validation(format!("negative time {t}")));
        }
        if t < self.duration {
            return Ok((t, 0.0));
        }
        if !wrap {
            return Err(Error::TraceExhausted {
                t,
                duration: self.duration,
            });
        }
        let cycles = (t / self.duration).floor();
        let mut local = t - cycles * self.duration;
        let mut base = cycles * self.duration;
        // guard against rounding landing exactly on the duration
        if local >= self.duration {
            local -= self.duration;
            base += self.duration;
        }
        Ok((local.max(0.0), base))
    }

    fn index_at(&self, local: f64) -> usize {
        self.samples.partition_point(|s| s.time <= local) - 1
    }

    /// Bandwidth in effect at wall time `t` (step interpolation).
    pub fn bandwidth_at(&self, t: f64, wrap: bool) -> Result<f64> {
        let (local, _) = self.local_time(t, wrap)?;
        Ok(self.samples[self.index_at(local)].bandwidth)
    }

    /// Bandwidth at `t` together with the wall time at which it next changes.
    pub fn piece_at(&self, t: f64, wrap: bool) -> Result<(f64, f64)> {
        let (local, base) = self.local_time(t, wrap)?;
        let i = self.index_at(local);
        let end = self.samples.get(i + 1).map_or(self.duration, |n| n.time);
        Ok((self.samples[i].bandwidth, base + end))
    }

    /// Parse the header-free `time_s,bandwidth_mbps` CSV format.
    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let mut samples = Vec::new();
        let mut explicit_duration = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                msg,
            };
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("duration=") {
                    let d: f64 = v
                        .trim()
                        .parse()
                        .map_err(|e| perr(format!("bad duration {v:?}: {e}")))?;
                    explicit_duration = Some(d);
                }
                continue;
            }
            let mut fields = line.split(',');
            let (Some(ts), Some(bs), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(perr(format!("expected 2 fields, got {line:?}")));
            };
            let time: f64 = ts
                .trim()
                .parse()
                .map_err(|e| perr(format!("bad time {ts:?}: {e}")))?;
            let bandwidth: f64 = bs
                .trim()
                .parse()
                .map_err(|e| perr(format!("bad bandwidth {bs:?}: {e}")))?;
            samples.push(TraceSample { time, bandwidth });
        }
        if samples.is_empty() {
            return Err(Error::Empty("trace file has no samples"));
        }
        let duration = match explicit_duration {
            Some(d) => d,
            None => {
                let n = samples.len();
                let gap = if n >= 2 {
                    samples[n - 1].time - samples[n - 2].time
                } else {
                    1.0
                };
                samples[n - 1].time + gap
            }
        };
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::new(samples, duration, label)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "#duration={:.6}", self.duration);
        for s in &self.samples {
            let _ = writeln!(out, "{:.6},{:.6}", s.time, s.bandwidth);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

pub fn load_network_trace(path: impl AsRef<Path>) -> Result<NetworkTrace> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    NetworkTrace::parse_csv(&text, path)
}

/// Parameters of the bounded multiplicative random-walk generator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceGenSpec {
    pub mean_bw: f64,
    pub fluctuation: f64,
    pub step_period: f64,
    pub min_bw: f64,
    pub duration: f64,
    pub seed: u64,
}

impl TraceGenSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_bw > 0.0 && self.mean_bw > self.min_bw) {
            return Err(Error::validation(format!(
                "need mean_bw > min_bw > 0 (mean {}, min {})",
                self.mean_bw, self.min_bw
            )));
        }
        if !(0.0..=1.0).contains(&self.fluctuation) {
            return Err(Error::validation(format!(
                "fluctuation {} outside [0, 1]",
                self.fluctuation
            )));
        }
        if !(self.step_period > 0.0 && self.duration >= self.step_period) {
            return Err(Error::validation(
                "step_period must be positive and no longer than duration",
            ));
        }
        Ok(())
    }
}

pub fn generate_synthetic_trace(spec: &TraceGenSpec) -> Result<NetworkTrace> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let max_bw = 4.0 * spec.mean_bw;
    let noise = Normal::new(0.0, spec.fluctuation)
        .map_err(|e| Error::validation(e.to_string()))?;
    let steps = (spec.duration / spec.step_period).ceil() as usize;
    let mut samples = Vec::with_capacity(steps);
    let mut bw = spec.mean_bw;
    for k in 0..steps {
        if k > 0 {
            bw = (bw * noise.sample(&mut rng).exp()).clamp(spec.min_bw, max_bw);
        }
        let stored = round6(bw).clamp(spec.min_bw, max_bw);
        samples.push(TraceSample {
            time: round6(k as f64 * spec.step_period),
            bandwidth: stored,
        });
    }
    NetworkTrace::new(samples, spec.duration, format!("synthetic-{}", spec.seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<NetworkTrace> {
        NetworkTrace::parse_csv(text, Path::new("mem.csv"))
    }

    #[test]
    fn constant_file_extends_duration_by_last_gap() {
        let t = parse("0,5.0\n1,5.0").unwrap();
        assert_eq!(t.duration(), 2.0);
        assert_eq!(t.bandwidth_at(0.5, false).unwrap(), 5.0);
        assert_eq!(t.mean_bandwidth(), 5.0);
    }

    #[test]
    fn explicit_duration_comment_wins() {
        let t = parse("#duration=30\n0,2\n10,8\n").unwrap();
        assert_eq!(t.duration(), 30.0);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(parse("0,1\n2,-1"), Err(Error::Validation(_))));
        assert!(matches!(parse("0,1\n2,1\n1,1"), Err(Error::Validation(_))));
        assert!(matches!(parse("0,1\nabc,1"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("0,1,3"), Err(Error::Parse { .. })));
        assert!(matches!(parse("1,1"), Err(Error::Validation(_))));
    }

    #[test]
    fn step_interpolation_and_wrap() {
        let t = parse("#duration=30\n0,2\n10,8\n").unwrap();
        assert_eq!(t.bandwidth_at(9.99, false).unwrap(), 2.0);
        assert_eq!(t.bandwidth_at(10.0, false).unwrap(), 8.0);
        assert_eq!(
            t.bandwidth_at(35.0, true).unwrap(),
            t.bandwidth_at(5.0, true).unwrap()
        );
        assert!(matches!(
            t.bandwidth_at(30.0, false),
            Err(Error::TraceExhausted { .. })
        ));
        assert_eq!(t.piece_at(12.0, false).unwrap(), (8.0, 30.0));
        assert_eq!(t.piece_at(65.0, true).unwrap(), (2.0, 70.0));
    }

    #[test]
    fn zero_fluctuation_is_constant() {
        let spec = TraceGenSpec {
            mean_bw: 3.07,
            fluctuation: 0.0,
            step_period: 1.0,
            min_bw: 0.25,
            duration: 60.0,
            seed: 1,
        };
        let t = generate_synthetic_trace(&spec).unwrap();
        assert!(t.samples().iter().all(|s| s.bandwidth == 3.07));
    }

    #[test]
    fn generator_validates() {
        let mut spec = TraceGenSpec {
            mean_bw: 1.0,
            fluctuation: 0.2,
            step_period: 1.0,
            min_bw: 2.0,
            duration: 10.0,
            seed: 0,
        };
        assert!(generate_synthetic_trace(&spec).is_err());
        spec.min_bw = 0.1;
        spec.fluctuation = 1.5;
        assert!(generate_synthetic_trace(&spec).is_err());
    }
}
