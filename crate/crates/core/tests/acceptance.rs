//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fail.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use ecoabr::abr::FixedRung;
use ecoabr::bandwidth::RlsFilter;
use ecoabr::config::{RewardPreset, RunConfig};
use ecoabr::energy::{data_energy, EnergyCoefficients};
use ecoabr::evaluation::{actor_factory, evaluate, spec_factory, ControllerFactory, EvalSetup};
use ecoabr::media::{generate_manifest, Genre, NetworkTrace, TraceMix, TracePreset};
use ecoabr::nn::Mlp;
use ecoabr::qoe::{session_qoe, QoECoefficients};
use ecoabr::report::aggregate;
use ecoabr::sac::{
    build_trace_pools, train, write_training_log, BanditEnv, Environment, PerBuffer, SacConfig,
    StreamingEnv, SumTree, Transition,
};
use ecoabr::sim::{map_bitrate, Action, Observation, SessionConfig, SimParams, StepOutcome, OBS_DIM};
use ecoabr::Result;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn conservation() -> Check {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut stalled = 0;
    for seed in 0..100u64 {
        let s = common::random_episode(Genre::ALL[(seed % 3) as usize], seed);
        let end = s.end().ok_or("session did not finish")?;
        let d = s.config().segment_duration;
        let play: f64 = s.log().iter().map(|o| d / o.speed).sum();
        let drift: f64 = s.log().iter().map(|o| d * (o.speed - 1.0) / o.speed).sum();
        let stalls: f64 = s.log().iter().map(|o| o.stall_duration).sum();
        let clock_err = (end.wall_clock - (end.startup_time + play + stalls)).abs();
        let latency_err = (end.latency - (end.startup_time + stalls - drift)).abs();
        worst = worst.max(clock_err).max(latency_err);
        if stalls > 0.0 {
            stalled += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst < 1e-6, format!("max identity error {worst:e} s"))?;
    ensure(secs < 60.0, format!("took {secs:.1} s"))?;
    Ok(format!("100 episodes, {stalled} with stalls, max error {worst:.1e} s, {secs:.1} s"))
}

fn random_outcomes(rng: &mut ChaCha8Rng) -> Vec<StepOutcome> {
    let n = rng.random_range(1..=300);
    let mut out: Vec<StepOutcome> = Vec::with_capacity(n);
    for i in 0..n {
        let stall = if rng.random_bool(0.2) { rng.random_range(0.0..3.0) } else { 0.0 };
        let prev = out.last().map_or(50.0, |o| o.vmaf);
        out.push(StepOutcome {
            segment_index: i,
            vmaf: rng.random_range(0.0..100.0),
            vmaf_prev: prev,
            stall_duration: stall,
            stall_event: stall > 0.0,
            latency: rng.random_range(0.0..20.0),
            speed: rng.random_range(0.9..=1.1),
            ..StepOutcome::default()
        });
    }
    out
}

fn qoe_oracle() -> Check {
    let (a, b, g, s, m, w) = (0.077, 1.249, 2.897, 1.249, 0.771, 1.436);
    let c = QoECoefficients::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let os = random_outcomes(&mut rng);
        let t = os.len() as f64;
        let mut want = 0.0;
        let mut latency = 0.0;
        for (i, o) in os.iter().enumerate() {
            want += a * o.vmaf / 20.0 - b * o.stall_duration - m * (1.0 - o.speed).abs();
            if o.stall_event {
                want -= g;
            }
            if i > 0 {
                want -= w * (o.vmaf - os[i - 1].vmaf).abs() / 20.0;
            }
            latency += o.latency;
        }
        want -= s * latency / t;
        let got = session_qoe(&os, &c).map_err(|e| e.to_string())?;
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
        // each extra stall event costs gamma
        let mut more = os.clone();
        let k = more.iter().filter(|o| !o.stall_event).count();
        for o in more.iter_mut() {
            o.stall_event = true;
        }
        let diff = got - session_qoe(&more, &c).map_err(|e| e.to_string())?;
        ensure((diff - 2.897 * k as f64).abs() < 1e-9, format!("gamma linearity off by {}", diff - 2.897 * k as f64))?;
    }
    ensure(worst < 1e-9, format!("max error {worst:e}"))?;
    Ok(format!("1000 sessions, max scaled error {worst:.1e}, gamma = {}", c.gamma))
}

fn energy() -> Check {
    let c = EnergyCoefficients::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let list = |rng: &mut ChaCha8Rng| -> Vec<(f64, f64)> {
            (0..rng.random_range(1..30)).map(|_| (rng.random_range(0.01..500.0), rng.random_range(0.0..5.0))).collect()
        };
        let (x, y) = (list(&mut rng), list(&mut rng));
        let mut xy = x.clone();
        xy.extend_from_slice(&y);
        let (ex, ey, exy) = (data_energy(&x, &c).unwrap(), data_energy(&y, &c).unwrap(), data_energy(&xy, &c).unwrap());
        ensure((exy - ex - ey).abs() <= 1e-9 * exy.max(1.0), "additivity")?;
        let mut faster = x.clone();
        let i = rng.random_range(0..faster.len());
        faster[i].0 *= 1.5;
        ensure(data_energy(&faster, &c).unwrap() < ex, "monotone in throughput")?;
        let mut bigger = x.clone();
        bigger[i].1 += 0.5;
        ensure(data_energy(&bigger, &c).unwrap() > ex, "monotone in size")?;
    }
    let presets = [TracePreset::NyuLte, TracePreset::Lte4g, TracePreset::Lumos5g, TracePreset::Synthetic];
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for genre in Genre::ALL {
        for (i, p) in presets.iter().enumerate() {
            let trace = p.generate(600.0, 100 + i as u64).unwrap();
            let mut s = common::session(trace, common::manifest(genre, 3));
            let log = ecoabr::abr::run_session(&mut s, &mut FixedRung(5)).map_err(|e| e.to_string())?;
            let kj = log.iter().map(|o| o.energy()).sum::<f64>() / 1000.0;
            lo = lo.min(kj);
            hi = hi.max(kj);
        }
    }
    ensure(lo >= 0.5 && hi <= 1.5, format!("mid-ladder sessions span [{lo:.3}, {hi:.3}] kJ"))?;
    Ok(format!("property suite ok; mid-ladder 300-segment sessions span [{lo:.3}, {hi:.3}] kJ"))
}

fn gradients() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Mlp::new(&[10, 128, 128, 2], &mut rng);
        let x: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..1.0)).collect();
        let cw: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |n: &Mlp| n.forward(&x, 4).unwrap().iter().zip(&cw).map(|(y, c)| y * c).sum::<f64>();
        let (_, cache) = net.forward_cached(&x, 4).unwrap();
        let (g, _) = net.backward(&cache, &cw).unwrap();
        for _ in 0..100 {
            let i = rng.random_range(0..g.len());
            let orig = net.params()[i];
            net.params_mut()[i] = orig + 1e-5;
            let up = f(&net);
            net.params_mut()[i] = orig - 1e-5;
            let down = f(&net);
            net.params_mut()[i] = orig;
            let fd = (up - down) / 2e-5;
            worst = worst.max((g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-8));
        }
    }
    ensure(worst < 1e-4, format!("max relative error {worst:e}"))?;
    Ok(format!("3 nets x 100 coordinates, max relative error {worst:.1e}"))
}

fn per() -> Check {
    let priorities = [0.1, 0.5, 1.0, 2.0, 3.0, 0.05, 4.0, 1.5];
    let mut buf = PerBuffer::new(8, 0.6, 1e-6);
    for (i, p) in priorities.iter().enumerate() {
        buf.insert(Transition {
            state: Observation([0.0; OBS_DIM]),
            action: Action::new(0.0, 0.0),
            reward: i as f64,
            next_state: Observation([0.0; OBS_DIM]),
            done: true,
        });
        buf.set_priority(i, *p);
    }
    let total: f64 = priorities.iter().map(|p: &f64| p.powf(0.6)).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut counts = [0usize; 8];
    for _ in 0..1_000_000 {
        counts[buf.sample(1, 0.4, &mut rng).map_err(|e| e.to_string())?.indices[0]] += 1;
    }
    let freq_err = (0..8)
        .map(|i| (counts[i] as f64 / 1e6 - priorities[i].powf(0.6) / total).abs())
        .fold(0.0, f64::max);
    ensure(freq_err < 0.01, format!("max frequency error {freq_err}"))?;

    let mut tree = SumTree::new(1024);
    let mut naive = vec![0.0f64; 1024];
    let mut tree_err = 0.0f64;
    for op in 0..100_000 {
        let i = rng.random_range(0..1024);
        let v = rng.random_range(0.0..10.0);
        tree.set(i, v);
        naive[i] = v;
        if op % 100 == 0 {
            let s: f64 = naive.iter().sum();
            tree_err = tree_err.max((tree.total() - s).abs() / s);
        }
    }
    ensure(tree_err < 1e-6, format!("sum-tree relative error {tree_err:e}"))?;
    Ok(format!("max frequency error {freq_err:.4} (1e6 draws), sum-tree error {tree_err:.1e}"))
}

fn bandit() -> Check {
    let start = Instant::now();
    let factory = |_w: usize| -> Result<Box<dyn Environment>> { Ok(Box::new(BanditEnv::default())) };
    let cfg = SacConfig {
        hidden: vec![64, 64],
        batch_size: 64,
        warmup_steps: 256,
        update_every: 1,
        updates_per_round: 1,
        sync_interval: 1,
        episodes: 5000,
        ..SacConfig::default()
    };
    let out = train(&cfg, &factory, None).map_err(|e| e.to_string())?;
    let a = out.learner.actor.act_deterministic(&BanditEnv::default().observation);
    let secs = start.elapsed().as_secs_f64();
    let updates = out.learner.updates();
    ensure(updates <= 5000, format!("{updates} updates"))?;
    ensure((a.bitrate_frac - 0.7).abs() <= 0.05, format!("policy output {:.4}", a.bitrate_frac))?;
    ensure(secs < 300.0, format!("took {secs:.0} s"))?;
    Ok(format!("output {:.4} after {updates} updates (alpha {}), {secs:.1} s", a.bitrate_frac, cfg.alpha))
}

fn rls() -> Check {
    let mut f = RlsFilter::default();
    f.push(5.0);
    for _ in 0..50 {
        f.update(5.0).map_err(|e| e.to_string())?;
    }
    let constant = (f.predict().unwrap() - 5.0).abs() / 5.0;
    ensure(constant < 0.01, format!("constant input error {constant}"))?;
    let mut reached = None;
    for i in 1..=30 {
        f.update(2.0).unwrap();
        if reached.is_none() && (f.predict().unwrap() - 2.0).abs() <= 0.2 {
            reached = Some(i);
        }
    }
    let reached = reached.ok_or("step change not tracked within 30 updates")?;

    let (order, lambda, delta) = (5, 0.999, 0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d: Vec<f64> = (0..50).map(|_| rng.random_range(0.5..10.0)).collect();
        let mut filt = RlsFilter::new(order, lambda, delta);
        filt.push(d[0]);
        for v in &d[1..] {
            filt.update(*v).unwrap();
        }
        let n = d.len() - 1;
        let reg = lambda.powi(n as i32) * delta;
        let mut w0 = DVector::zeros(order);
        w0[0] = 1.0;
        let mut a = DMatrix::identity(order, order) * reg;
        let mut b = &w0 * reg;
        for k in 1..=n {
            let x = DVector::from_fn(order, |i, _| d[(k as isize - 1 - i as isize).max(0) as usize]);
            let wk = lambda.powi((n - k) as i32);
            a += &x * x.transpose() * wk;
            b += &x * (d[k] * wk);
        }
        let oracle = a.lu().solve(&b).ok_or("singular oracle system")?;
        let got = DVector::from_column_slice(filt.weights());
        worst = worst.max((&got - &oracle).norm() / oracle.norm());
    }
    ensure(worst < 1e-6, format!("weighted-LS mismatch {worst:e}"))?;
    Ok(format!(
        "constant error {:.2}%, step tracked after {reached} updates, LS mismatch {worst:.1e}",
        constant * 100.0
    ))
}

fn ladder() -> Check {
    let mut checked = 0;
    for genre in Genre::ALL {
        let len = genre.ladder().len() as u64;
        for k in 0..=1000u64 {
            let want = ((2 * k * (len - 1) + 1000) / 2000) as usize;
            let got = map_bitrate(k as f64 / 1000.0, len as usize);
            ensure(got == want, format!("{genre:?} frac {}: {got} vs {want}", k as f64 / 1000.0))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (ladder, frac) pairs"))
}

fn e2e() -> Check {
    let start = Instant::now();
    let mut cfg = RunConfig {
        reward_preset: RewardPreset::QoeAligned,
        ..RunConfig::default()
    };
    cfg.sac.seed = 1;
    let params = cfg.sim_params();
    let session = SessionConfig::default();
    let train_manifest = Arc::new(generate_manifest(Genre::Animation, 300, 1).unwrap());
    let pools = build_trace_pools(&TraceMix::training(), cfg.sac.workers, 60, 600.0, 100).map_err(|e| e.to_string())?;
    let factory = |w: usize| -> Result<Box<dyn Environment>> {
        Ok(Box::new(StreamingEnv::new(session, params, train_manifest.clone(), pools[w].clone(), 5 + w as u64)?))
    };
    let out = train(&cfg.sac, &factory, None).map_err(|e| e.to_string())?;
    let trained = start.elapsed().as_secs_f64();

    let mut rng = ChaCha8Rng::seed_from_u64(999);
    let held_out: Vec<Arc<NetworkTrace>> = TraceMix::testing()
        .generate(&mut rng, 20, 600.0, 50_000)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(Arc::new)
        .collect();
    let setup = EvalSetup { session, params, ..EvalSetup::default() };
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for genre in Genre::ALL {
        let manifest = Arc::new(generate_manifest(genre, 300, 7).unwrap());
        let controllers: Vec<(String, ControllerFactory)> = vec![
            ("sac".into(), actor_factory(out.learner.actor.clone(), "sac".into())),
            ("rule".into(), spec_factory(&"rule".parse().unwrap(), 11).unwrap()),
            ("fixed:max".into(), spec_factory(&"fixed:max".parse().unwrap(), 11).unwrap()),
        ];
        let aggs = aggregate(&evaluate(&setup, &controllers, &held_out, &manifest));
        let get = |name: &str, col: &str| {
            aggs.iter().find(|a| a.controller == name).and_then(|a| a.column(col)).map_or(f64::NAN, |c| c.0)
        };
        let (q_sac, q_rule) = (get("sac", "qoe"), get("rule", "qoe"));
        let (e_sac, e_max) = (get("sac", "energy_kj"), get("fixed:max", "energy_kj"));
        lines.push(format!(
            "{}: QoE sac {q_sac:.1} vs rule {q_rule:.1}, energy sac {e_sac:.3} vs fixed:max {e_max:.3} kJ",
            genre.name()
        ));
        if !(q_sac >= q_rule) {
            failures.push(format!("{} QoE", genre.name()));
        }
        if !(e_sac <= e_max) {
            failures.push(format!("{} energy", genre.name()));
        }
    }
    let detail = format!(
        "300 episodes in {trained:.0} s ({} updates); {}",
        out.learner.updates(),
        lines.join("; ")
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{} failed: {detail}", failures.join(", ")))
    }
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = common::random_episode(Genre::Sports, 4);
    let b = common::random_episode(Genre::Sports, 4);
    let same_log = serde_json::to_string(a.log()).unwrap() == serde_json::to_string(b.log()).unwrap();
    ensure(same_log, "episode logs differ")?;

    let training_log = || -> Vec<u8> {
        let manifest = common::manifest(Genre::Movie, 2);
        let pools = build_trace_pools(&TraceMix::training(), 1, 4, 200.0, 5).unwrap();
        let session = SessionConfig { session_segments: 60, ..SessionConfig::default() };
        let factory = |w: usize| -> Result<Box<dyn Environment>> {
            Ok(Box::new(StreamingEnv::new(session, SimParams::default(), manifest.clone(), pools[w].clone(), 3)?))
        };
        let cfg = SacConfig {
            hidden: vec![32, 32],
            batch_size: 32,
            warmup_steps: 100,
            update_every: 10,
            updates_per_round: 2,
            episodes: 10,
            ..SacConfig::default()
        };
        let out = train(&cfg, &factory, None).unwrap();
        let mut buf = Vec::new();
        write_training_log(&out.log, &mut buf).unwrap();
        buf
    };
    ensure(training_log() == training_log(), "W=1 training logs differ")?;

    let mut files = 0;
    for preset in TracePreset::ALL {
        let (p, q) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        preset.generate(600.0, 8).unwrap().save(&p).unwrap();
        preset.generate(600.0, 8).unwrap().save(&q).unwrap();
        ensure(std::fs::read(&p).unwrap() == std::fs::read(&q).unwrap(), format!("{} trace files differ", preset.name()))?;
        files += 1;
    }
    for genre in Genre::ALL {
        let (p, q) = (dir.path().join("a.json"), dir.path().join("b.json"));
        generate_manifest(genre, 300, 8).unwrap().save(&p).unwrap();
        generate_manifest(genre, 300, 8).unwrap().save(&q).unwrap();
        ensure(std::fs::read(&p).unwrap() == std::fs::read(&q).unwrap(), format!("{} manifests differ", genre.name()))?;
        files += 1;
    }
    Ok(format!("episode log, W=1 training log and {files} generated files are bit-identical"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("simulator conservation", conservation),
        ("qoe oracle equivalence", qoe_oracle),
        ("energy model", energy),
        ("gradient correctness", gradients),
        ("per statistics", per),
        ("sac bandit sanity", bandit),
        ("rls predictor", rls),
        ("ladder mapping brute force", ladder),
        ("end-to-end directional run", e2e),
        ("determinism", determinism),
    ];
    let only = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, f) in criteria {
        if only.as_deref().is_some_and(|o| !name.contains(o)) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name} ({secs:.1} s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1} s): {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
