use ecoabr::media::Genre;
use ecoabr::sim::{map_bitrate, map_speed, speed_to_frac, Action};

/// Nearest rung to `k / 1000 * (len - 1)` with halves going up, in exact
/// integer arithmetic.
fn nearest_rung(k: u64, len: u64) -> usize {
    ((2 * k * (len - 1) + 1000) / 2000) as usize
}

#[test]
fn bitrate_mapping_matches_nearest_index_on_the_grid() {
    for genre in Genre::ALL {
        let ladder = genre.ladder();
        let len = ladder.len();
        for k in 0..=1000u64 {
            let frac = k as f64 / 1000.0;
            let got = map_bitrate(frac, len);
            assert_eq!(got, nearest_rung(k, len as u64), "{genre:?} frac {frac}");
        }
    }
    for len in 1..=20u64 {
        for k in 0..=1000u64 {
            assert_eq!(map_bitrate(k as f64 / 1000.0, len as usize), nearest_rung(k, len));
        }
    }
}

#[test]
fn mapping_examples() {
    let ladder = Genre::Animation.ladder();
    assert_eq!(ladder[map_bitrate(0.52, ladder.len())].bitrate_kbps, 1900);
    assert_eq!(ladder[map_bitrate(0.0, ladder.len())].bitrate_kbps, 300);
    assert_eq!(ladder[map_bitrate(1.0, ladder.len())].bitrate_kbps, 8000);
    assert_eq!(map_bitrate(-0.3, 11), 0);
    assert_eq!(map_bitrate(1.7, 11), 10);
    assert_eq!(map_bitrate(f64::NAN, 11), 0);
}

#[test]
fn speed_mapping_is_affine_and_invertible() {
    for k in 0..=100 {
        let f = k as f64 / 100.0;
        let s = map_speed(f);
        assert!((s - (0.9 + 0.2 * f)).abs() < 1e-12);
        assert!((speed_to_frac(s) - f).abs() < 1e-12);
    }
    assert_eq!(map_speed(-1.0), 0.9);
    assert!((map_speed(2.0) - 1.1).abs() < 1e-12);
}

#[test]
fn every_rung_is_reachable_from_its_own_action() {
    for genre in Genre::ALL {
        let len = genre.ladder().len();
        for r in 0..len {
            let a = Action::for_rung(r, len, 1.0);
            assert_eq!(map_bitrate(a.bitrate_frac, len), r);
            assert!((map_speed(a.speed_frac) - 1.0).abs() < 1e-12);
        }
    }
}
