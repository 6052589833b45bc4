mod common;

use common::{manifest, random_episode, session};
use ecoabr::media::{Genre, NetworkTrace};
use ecoabr::sim::{speed_to_frac, Action};
use proptest::prelude::*;

/// `(startup + sum d/s + stalls, latency_start + stalls - sum d (s - 1) / s)`
/// recomputed from the step log alone.
fn expected_clock_and_latency(s: &ecoabr::sim::LiveSession) -> (f64, f64) {
    let end = s.end().unwrap();
    let d = s.config().segment_duration;
    let play: f64 = s.log().iter().map(|o| d / o.speed).sum();
    let drift: f64 = s.log().iter().map(|o| d * (o.speed - 1.0) / o.speed).sum();
    let stalls: f64 = s.log().iter().map(|o| o.stall_duration).sum();
    let latency_start = end.startup_time;
    (
        end.startup_time + play + stalls,
        latency_start + stalls - drift,
    )
}

#[test]
fn time_and_latency_conservation_over_100_episodes() {
    let mut stalled = 0;
    for seed in 0..100u64 {
        let genre = Genre::ALL[(seed % 3) as usize];
        let s = random_episode(genre, seed);
        let end = s.end().unwrap();
        let (clock, latency) = expected_clock_and_latency(&s);
        assert!((end.wall_clock - clock).abs() < 1e-6, "seed {seed}: {} vs {clock}", end.wall_clock);
        assert!((end.latency - latency).abs() < 1e-6, "seed {seed}: {} vs {latency}", end.latency);
        let logged: f64 = s.log().iter().map(|o| o.stall_duration).sum();
        assert!((logged - end.total_stall).abs() < 1e-9);
        if end.total_stall > 0.0 {
            stalled += 1;
        }
    }
    assert!(stalled > 0, "some episodes must exercise the stall path");
}

#[test]
fn unconstrained_network_never_stalls() {
    let mut s = session(NetworkTrace::constant(1000.0, 600.0).unwrap(), manifest(Genre::Animation, 1));
    s.reset().unwrap();
    while !s.is_done() {
        s.step(Action::new(1.0, 0.5)).unwrap();
    }
    let end = s.end().unwrap();
    assert_eq!(end.total_stall, 0.0);
    assert!((end.wall_clock - (300.0 + end.startup_time)).abs() < 1e-6);
    assert_eq!(s.log().len(), 300);
}

#[test]
fn reset_on_fast_network_starts_after_startup_buffer() {
    let mut s = session(NetworkTrace::constant(1e6, 600.0).unwrap(), manifest(Genre::Animation, 1));
    s.reset().unwrap();
    let end_of_startup = s.player().startup_time.unwrap();
    // three 200 ms chunks reach the 0.6 s startup buffer, each available on production
    assert!((end_of_startup - 0.6).abs() < 1e-4);
    assert!((s.player().latency() - 0.6).abs() < 1e-4);
}

#[test]
fn starvation_stalls_early() {
    let mut s = session(NetworkTrace::constant(0.1, 600.0).unwrap(), manifest(Genre::Animation, 1));
    s.reset().unwrap();
    let mut stalled = false;
    for _ in 0..10 {
        stalled |= s.step(Action::new(0.0, 0.5)).unwrap().outcome.stall_duration > 0.0;
    }
    assert!(stalled);
}

fn scripted_end_latency(speeds: &[f64]) -> (f64, f64) {
    let mut s = session(NetworkTrace::constant(1000.0, 600.0).unwrap(), manifest(Genre::Animation, 1));
    s.reset().unwrap();
    for v in speeds {
        s.step(Action::new(0.0, speed_to_frac(*v))).unwrap();
    }
    let end = s.end().unwrap();
    (end.latency, end.total_stall)
}

#[test]
fn ten_fast_segments_cut_latency_by_identity() {
    // 40 slow segments build up a buffer, then ten 1.1x segments replace 1.0x
    let mut base = vec![0.9; 40];
    base.extend(std::iter::repeat(1.0).take(259));
    let mut fast = base.clone();
    fast[40..50].fill(1.1);
    let (l_base, stall_base) = scripted_end_latency(&base);
    let (l_fast, stall_fast) = scripted_end_latency(&fast);
    assert_eq!((stall_base, stall_fast), (0.0, 0.0));
    let expected = 10.0 * 1.0 * (1.1 - 1.0) / 1.1;
    assert!((l_base - l_fast - expected).abs() < 1e-6, "{}", l_base - l_fast);
    assert!((expected - 0.909).abs() < 1e-3);
}

#[test]
fn downloaded_megabits_equal_rung_chunk_sizes() {
    let s = random_episode(Genre::Sports, 7);
    let m = s.manifest();
    for o in s.log() {
        let stored: f64 = m.segments[o.segment_index][o.rung].chunk_sizes_mb.iter().sum();
        assert_eq!(o.downloaded_mb, stored);
    }
}

#[test]
fn buffer_never_negative_and_observations_in_unit_box() {
    for seed in 0..10 {
        let mut s = session(common::mixed_trace(seed), manifest(Genre::Movie, seed));
        let obs = s.reset().unwrap();
        assert!(obs.0.iter().all(|v| (0.0..=1.0).contains(v)));
        let mut k = 0usize;
        while !s.is_done() {
            k += 1;
            let r = s.step(Action::new((k % 11) as f64 / 10.0, (k % 3) as f64 / 2.0)).unwrap();
            assert!(r.outcome.buffer >= 0.0);
            assert!(r.observation.0.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(s.player().playhead <= s.player().wall_clock + 1e-9);
        }
    }
}

#[test]
fn stepping_after_done_is_an_error() {
    let mut s = random_episode(Genre::Animation, 2);
    assert!(s.step(Action::new(0.5, 0.5)).is_err());
}

#[test]
fn identical_inputs_give_bit_identical_logs() {
    let a = random_episode(Genre::Animation, 11);
    let b = random_episode(Genre::Animation, 11);
    assert_eq!(a.log(), b.log());
    assert_eq!(a.end(), b.end());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conservation_for_arbitrary_action_sequences(
        seed in 0u64..1000,
        actions in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 299),
    ) {
        let mut s = session(common::mixed_trace(seed), manifest(Genre::Sports, seed));
        s.reset().unwrap();
        for (b, v) in actions {
            s.step(Action::new(b, v)).unwrap();
        }
        prop_assert!(s.is_done());
        let end = s.end().unwrap();
        let (clock, latency) = expected_clock_and_latency(&s);
        prop_assert!((end.wall_clock - clock).abs() < 1e-6);
        prop_assert!((end.latency - latency).abs() < 1e-6);
    }
}
