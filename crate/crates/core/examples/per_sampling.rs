//! Prioritized replay: empirical sampling frequency against `p^alpha / sum`.

use ecoabr::sac::{PerBuffer, Transition};
use ecoabr::sim::{Action, Observation, OBS_DIM};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let priorities = [0.1, 0.5, 1.0, 2.0, 4.0];
    for alpha in [0.0, 0.6, 1.0] {
        let mut per = PerBuffer::new(priorities.len(), alpha, 1e-6);
        for (i, p) in priorities.iter().enumerate() {
            per.insert(Transition {
                state: Observation([0.0; OBS_DIM]),
                action: Action::new(0.5, 0.5),
                reward: i as f64,
                next_state: Observation([0.0; OBS_DIM]),
                done: true,
            });
            per.set_priority(i, *p);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut counts = vec![0usize; priorities.len()];
        let draws = 200_000;
        let mut weight_sum = vec![0.0; priorities.len()];
        for _ in 0..draws / 32 {
            let s = per.sample(32, 1.0, &mut rng)?;
            for (i, w) in s.indices.iter().zip(&s.weights) {
                counts[*i] += 1;
                weight_sum[*i] += w;
            }
        }
        let n: usize = counts.iter().sum();
        println!("alpha = {alpha}");
        println!("{:>8} {:>8} {:>8} {:>10}", "p", "P(i)", "freq", "mean w");
        for i in 0..priorities.len() {
            println!(
                "{:>8.2} {:>8.4} {:>8.4} {:>10.4}",
                priorities[i],
                per.probability(i),
                counts[i] as f64 / n as f64,
                weight_sum[i] / counts[i].max(1) as f64
            );
        }
        println!();
    }
    Ok(())
}
