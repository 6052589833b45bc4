use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::action::{map_bitrate, map_speed, Action};
use super::config::{SessionConfig, SimParams};
use super::observation::{normalize, Observation, RawFeatures};
use crate::abr::ControllerContext;
use crate::bandwidth::{BandwidthPredictor, ChunkDownload};
use crate::energy::{data_energy, playback_energy};
use crate::error::{Error, Result};
use crate::media::{NetworkTrace, VideoManifest};
use crate::qoe::step_reward;

const EPS: f64 = 1e-9;
const CONTEXT_WINDOW: usize = 10;

/// Player and energy metrics for one downloaded segment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepOutcome {
    pub segment_index: usize,
    pub rung: usize,
    pub bitrate_kbps: u32,
    pub vmaf: f64,
    pub vmaf_prev: f64,
    /// Stall time accrued since the previous segment completed.
    pub stall_duration: f64,
    /// A new stall began since the previous segment completed.
    pub stall_event: bool,
    /// Latency when the segment finished downloading.
    pub latency: f64,
    pub speed: f64,
    pub predicted_bw: f64,
    pub measured_bw: f64,
    pub data_energy: f64,
    pub playback_energy: f64,
    pub downloaded_mb: f64,
    pub wall_clock: f64,
    pub buffer: f64,
}

impl StepOutcome {
    pub fn energy(&self) -> f64 {
        self.data_energy + self.playback_energy
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub outcome: StepOutcome,
    pub reward: f64,
    pub done: bool,
}

/// Accounting once the final segment has been played out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionEnd {
    /// Wall time when the last buffered media finished playing.
    pub wall_clock: f64,
    pub latency: f64,
    /// Wall time when playback first started.
    pub startup_time: f64,
    pub total_stall: f64,
    pub stall_events: usize,
    pub downloaded_mb: f64,
    pub energy_j: f64,
}

#[derive(Debug, Clone, Copy)]
struct BufferedChunk {
    media: f64,
    speed: f64,
}

/// Mutable player state.
#[derive(Debug, Clone, Default)]
pub struct PlayerState {
    pub wall_clock: f64,
    pub playhead: f64,
    pub started: bool,
    pub stalled: bool,
    pub startup_time: Option<f64>,
    pub total_stall: f64,
    pub stall_events: usize,
    pub downloaded_mb: f64,
    pub energy_j: f64,
    queue: VecDeque<BufferedChunk>,
    step_stall: f64,
    step_stall_event: bool,
}

impl PlayerState {
    pub fn buffer(&self) -> f64 {
        self.queue.iter().map(|c| c.media).sum()
    }

    /// Media speed currently being played (1.0 when idle).
    pub fn speed(&self) -> f64 {
        self.queue.front().map_or(1.0, |c| c.speed)
    }

    pub fn latency(&self) -> f64 {
        self.wall_clock - self.playhead
    }

    /// Let wall time run to `until` with no new arrivals.
    fn advance(&mut self, until: f64) {
        while self.wall_clock < until {
            if !self.started {
                self.wall_clock = until;
                break;
            }
            if self.stalled {
                let dt = until - self.wall_clock;
                self.step_stall += dt;
                self.total_stall += dt;
                self.wall_clock = until;
                break;
            }
            let Some(front) = self.queue.front_mut() else {
                self.stalled = true;
                self.step_stall_event = true;
                self.stall_events += 1;
                continue;
            };
            let finish = front.media / front.speed;
            if self.wall_clock + finish <= until {
                self.wall_clock += finish;
                self.playhead += front.media;
                self.queue.pop_front();
            } else {
                let consumed = (until - self.wall_clock) * front.speed;
                front.media -= consumed;
                self.playhead += consumed;
                self.wall_clock = until;
            }
        }
    }

    fn arrive(&mut self, media: f64, speed: f64, startup: f64, resume: f64) {
        self.queue.push_back(BufferedChunk { media, speed });
        let level = self.buffer();
        if !self.started && level >= startup - EPS {
            self.started = true;
            self.startup_time = Some(self.wall_clock);
        }
        if self.stalled && level >= resume - EPS {
            self.stalled = false;
        }
    }

    /// End of stream: play out whatever is buffered.
    fn drain(&mut self) {
        if !self.started {
            self.started = true;
            self.startup_time = Some(self.wall_clock);
        }
        self.stalled = false;
        while let Some(c) = self.queue.pop_front() {
            self.wall_clock += c.media / c.speed;
            self.playhead += c.media;
        }
    }
}

/// Discrete-event simulation of one live streaming session.
#[derive(Debug, Clone)]
pub struct LiveSession {
    config: SessionConfig,
    params: SimParams,
    trace: Arc<NetworkTrace>,
    manifest: Arc<VideoManifest>,
    player: PlayerState,
    predictor: BandwidthPredictor,
    next_segment: usize,
    last: Option<StepOutcome>,
    latency_window: VecDeque<f64>,
    log: Vec<StepOutcome>,
    end: Option<SessionEnd>,
    ready: bool,
}

impl LiveSession {
    pub fn new(
        config: SessionConfig,
        params: SimParams,
        trace: Arc<NetworkTrace>,
        manifest: Arc<VideoManifest>,
    ) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        if config.chunks_per_segment != manifest.chunks_per_segment
            || (config.segment_duration - manifest.segment_duration_s).abs() > 1e-12
        {
            return Err(Error::validation(format!(
                "session geometry ({} s x {} chunks) does not match manifest ({} s x {} chunks)",
                config.segment_duration,
                config.chunks_per_segment,
                manifest.segment_duration_s,
                manifest.chunks_per_segment
            )));
        }
        Ok(Self {
            config,
            params,
            trace,
            manifest,
            player: PlayerState::default(),
            predictor: BandwidthPredictor::default(),
            next_segment: 0,
            last: None,
            latency_window: VecDeque::with_capacity(CONTEXT_WINDOW),
            log: Vec::new(),
            end: None,
            ready: false,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn manifest(&self) -> &VideoManifest {
        &self.manifest
    }

    pub fn trace(&self) -> &NetworkTrace {
        &self.trace
    }

    pub fn player(&self) -> &PlayerState {
        &self.player
    }

    pub fn log(&self) -> &[StepOutcome] {
        &self.log
    }

    pub fn end(&self) -> Option<&SessionEnd> {
        self.end.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.end.is_some()
    }

    /// Replace the trace used by the next `reset`.
    pub fn set_trace(&mut self, trace: Arc<NetworkTrace>) {
        self.trace = trace;
    }

    /// Start a fresh session; segment 0 is fetched at the lowest rung and
    /// played at 1.0x before the first observation is returned.
    pub fn reset(&mut self) -> Result<Observation> {
        if !self.config.wrap && self.trace.duration() < self.config.session_length() {
            return Err(Error::validation(format!(
                "trace {:?} lasts {} s, session needs {} s and wrap is disabled",
                self.trace.label(),
                self.trace.duration(),
                self.config.session_length()
            )));
        }
        self.player = PlayerState::default();
        self.predictor = BandwidthPredictor::default();
        self.next_segment = 0;
        self.last = None;
        self.latency_window.clear();
        self.log.clear();
        self.end = None;
        self.ready = true;
        self.download_segment(0, 1.0)?;
        if self.next_segment >= self.config.session_segments {
            self.finish();
        }
        Ok(self.observation())
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        if !self.ready {
            return Err(Error::validation("step called before reset"));
        }
        if self.is_done() {
            return Err(Error::EpisodeDone);
        }
        let action = Action::new(action.bitrate_frac, action.speed_frac);
        let rung = map_bitrate(action.bitrate_frac, self.manifest.ladder.len());
        let speed = map_speed(action.speed_frac);
        let outcome = self.download_segment(rung, speed)?;
        let reward = step_reward(&outcome, &self.params.reward);
        let done = self.next_segment >= self.config.session_segments;
        if done {
            self.finish();
        }
        Ok(StepResult {
            observation: self.observation(),
            outcome,
            reward,
            done,
        })
    }

    fn finish(&mut self) {
        self.player.drain();
        let p = &self.player;
        self.end = Some(SessionEnd {
            wall_clock: p.wall_clock,
            latency: p.latency(),
            startup_time: p.startup_time.unwrap_or(0.0),
            total_stall: p.total_stall,
            stall_events: p.stall_events,
            downloaded_mb: p.downloaded_mb,
            energy_j: p.energy_j,
        });
    }

    fn download_segment(&mut self, rung: usize, speed: f64) -> Result<StepOutcome> {
        let seg = self.next_segment;
        let cfg = self.config;
        let manifest = Arc::clone(&self.manifest);
        let stored = manifest.rung(seg % manifest.n_segments(), rung)?;
        let rep = manifest.ladder[rung];
        let chunk_media = cfg.chunk_duration();
        let seg_start = seg as f64 * cfg.segment_duration;

        self.player.step_stall = 0.0;
        self.player.step_stall_event = false;
        let mut energy_inputs = Vec::with_capacity(stored.chunk_sizes_mb.len());
        for (j, &size) in stored.chunk_sizes_mb.iter().enumerate() {
            // requests are scheduled at the chunk's availability time, so
            // waiting for the encoder is never part of the download itself
            let available = seg_start + chunk_media * (j + 1) as f64;
            if available > self.player.wall_clock {
                self.player.advance(available);
            }
            let requested = self.player.wall_clock;
            self.transfer(size)?;
            let chunk = ChunkDownload {
                size,
                download_time: self.player.wall_clock - requested,
                idle_wait: 0.0,
            };
            let predicted = match self.predictor.predict() {
                Ok(p) => p,
                Err(_) => chunk.throughput().max(crate::bandwidth::PREDICTION_FLOOR_MBPS),
            };
            energy_inputs.push((predicted, size));
            self.predictor.observe(chunk)?;
            self.player
                .arrive(chunk_media, speed, cfg.startup_buffer, cfg.resume_buffer);
        }

        let data = data_energy(&energy_inputs, &self.params.energy)?;
        let playback = playback_energy(&rep, cfg.segment_duration, &self.params.playback);
        let downloaded = stored.size_mb();
        self.player.downloaded_mb += downloaded;
        self.player.energy_j += data + playback;
        self.next_segment += 1;

        let latency = self.player.latency();
        if self.latency_window.len() == CONTEXT_WINDOW {
            self.latency_window.pop_front();
        }
        self.latency_window.push_back(latency);

        let outcome = StepOutcome {
            segment_index: seg,
            rung,
            bitrate_kbps: rep.bitrate_kbps,
            vmaf: stored.vmaf,
            vmaf_prev: self.last.map_or(stored.vmaf, |o| o.vmaf),
            stall_duration: self.player.step_stall,
            stall_event: self.player.step_stall_event,
            latency,
            speed,
            predicted_bw: self.predicted_bw(),
            measured_bw: self.predictor.measure().unwrap_or(0.0),
            data_energy: data,
            playback_energy: playback,
            downloaded_mb: downloaded,
            wall_clock: self.player.wall_clock,
            buffer: self.player.buffer(),
        };
        self.last = Some(outcome);
        self.log.push(outcome);
        Ok(outcome)
    }

    /// Move `size` megabits over the trace, letting playback run meanwhile.
    fn transfer(&mut self, size: f64) -> Result<()> {
        let mut remaining = size;
        loop {
            let now = self.player.wall_clock;
            let (bw, mut change) = self.trace.piece_at(now, self.config.wrap)?;
            if change <= now {
                change = now + EPS;
            }
            let capacity = bw * (change - now);
            if capacity >= remaining {
                self.player.advance(now + remaining / bw);
                return Ok(());
            }
            remaining -= capacity;
            self.player.advance(change);
        }
    }

    fn predicted_bw(&self) -> f64 {
        self.predictor
            .predict()
            .unwrap_or(crate::bandwidth::PREDICTION_FLOOR_MBPS)
    }

    pub fn raw_features(&self) -> RawFeatures {
        let last = self.last.unwrap_or_default();
        RawFeatures {
            buffer: self.player.buffer(),
            latency: self.player.latency(),
            last_stall: last.stall_duration,
            speed: if self.last.is_some() { last.speed } else { 1.0 },
            bitrate_kbps: last.bitrate_kbps as f64,
            vmaf: last.vmaf,
            vmaf_smoothness: (last.vmaf - last.vmaf_prev).abs(),
            predicted_bw: self.predicted_bw(),
            data_energy: last.data_energy,
            playback_energy: last.playback_energy,
        }
    }

    pub fn observation(&self) -> Observation {
        normalize(
            &self.raw_features(),
            self.manifest.min_bitrate_kbps() as f64,
            self.manifest.max_bitrate_kbps() as f64,
        )
    }

    pub fn context(&self) -> ControllerContext {
        ControllerContext {
            observation: self.observation(),
            raw: self.raw_features(),
            predicted_bw: self.predicted_bw(),
            ladder: self.manifest.ladder.clone(),
            latency_target: self.config.latency_reference,
            bandwidth_window: self.predictor.estimator.samples().collect(),
            latency_window: self.latency_window.iter().copied().collect(),
        }
    }
}
