//! Reference controllers over 20 traces from the testing mix.

use std::sync::Arc;

use ecoabr::evaluation::{evaluate, spec_factory, ControllerFactory, EvalSetup};
use ecoabr::media::{generate_manifest, Genre, NetworkTrace, TraceMix};
use ecoabr::report::{aggregate, markdown_table};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(999);
    let traces: Vec<Arc<NetworkTrace>> = TraceMix::testing()
        .generate(&mut rng, 20, 600.0, 50_000)?
        .into_iter()
        .map(Arc::new)
        .collect();
    let manifest = Arc::new(generate_manifest(Genre::Animation, 300, 7)?);
    let controllers = ["fixed:0", "fixed:5", "fixed:max", "rule", "meanstd"]
        .iter()
        .map(|s| Ok((s.to_string(), spec_factory(&s.parse()?, manifest.ladder.len())?)))
        .collect::<ecoabr::Result<Vec<(String, ControllerFactory)>>>()?;
    let rows = evaluate(&EvalSetup::default(), &controllers, &traces, &manifest);
    print!("{}", markdown_table(&aggregate(&rows)));
    Ok(())
}
