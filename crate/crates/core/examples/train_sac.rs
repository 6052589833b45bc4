//! Short SAC training run with the QoE-aligned reward, then a comparison
//! against the throughput rule on held-out traces.
//!
//! cargo run --release --example train_sac [episodes]

use std::sync::Arc;

use ecoabr::config::{RewardPreset, RunConfig};
use ecoabr::evaluation::{actor_factory, evaluate, spec_factory, EvalSetup};
use ecoabr::media::{generate_manifest, Genre, NetworkTrace, TraceMix};
use ecoabr::report::{aggregate, markdown_table};
use ecoabr::sac::{build_trace_pools, train, Environment, StreamingEnv};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let episodes = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(60);
    let mut cfg = RunConfig { reward_preset: RewardPreset::QoeAligned, ..RunConfig::default() };
    cfg.sac.episodes = episodes;
    cfg.sac.seed = 1;
    let params = cfg.sim_params();
    println!("reward weights {:?}", params.reward.k.map(|k| (k * 100.0).round() / 100.0));

    let manifest = Arc::new(generate_manifest(Genre::Animation, 300, 1)?);
    let pools = build_trace_pools(&TraceMix::training(), cfg.sac.workers, 60, 600.0, 100)?;
    let factory = |w: usize| -> ecoabr::Result<Box<dyn Environment>> {
        let env = StreamingEnv::new(cfg.session, params, manifest.clone(), pools[w].clone(), 5 + w as u64)?;
        Ok(Box::new(env))
    };
    let out = train(&cfg.sac, &factory, None)?;
    for r in out.log.iter().step_by((episodes / 10).max(1)) {
        println!(
            "episode {:>4}  mean reward {:>8.3}  critic {:>7.4}  entropy {:>6.3}  updates {}",
            r.episode, r.mean_reward, r.critic_loss, r.entropy, r.updates
        );
    }
    println!("{:.1} s, {} updates", out.report.wall_time_s, out.report.updates);
    let path = std::env::temp_dir().join("ecoabr-sac.json");
    out.checkpoint().save(&path)?;
    println!("checkpoint: {}\n", path.display());

    let mut rng = ChaCha8Rng::seed_from_u64(999);
    let held_out: Vec<Arc<NetworkTrace>> =
        TraceMix::testing().generate(&mut rng, 20, 600.0, 50_000)?.into_iter().map(Arc::new).collect();
    let setup = EvalSetup { params, ..EvalSetup::default() };
    let eval_manifest = Arc::new(generate_manifest(Genre::Animation, 300, 7)?);
    let controllers = vec![
        ("sac".to_string(), actor_factory(out.learner.actor.clone(), "sac".into())),
        ("rule".to_string(), spec_factory(&"rule".parse()?, 11)?),
        ("fixed:max".to_string(), spec_factory(&"fixed:max".parse()?, 11)?),
    ];
    print!("{}", markdown_table(&aggregate(&evaluate(&setup, &controllers, &held_out, &eval_manifest))));
    Ok(())
}
