//! Backprop against central differences on a 10-128-128-2 network.

use ecoabr::nn::Mlp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut net = Mlp::new(&[10, 128, 128, 2], &mut rng);
    let batch = 8;
    let x: Vec<f64> = (0..batch * 10).map(|_| rng.random_range(0.0..1.0)).collect();
    let c: Vec<f64> = (0..batch * 2).map(|_| rng.random_range(-1.0..1.0)).collect();
    let loss = |n: &Mlp| -> ecoabr::Result<f64> {
        Ok(n.forward(&x, batch)?.iter().zip(&c).map(|(y, c)| y * c).sum())
    };
    let (_, cache) = net.forward_cached(&x, batch)?;
    let (grad, _) = net.backward(&cache, &c)?;
    println!("{} parameters", grad.len());
    let h = 1e-5;
    let mut worst = 0.0f64;
    for k in 0..100 {
        let i = rng.random_range(0..grad.len());
        let orig = net.params()[i];
        net.params_mut()[i] = orig + h;
        let up = loss(&net)?;
        net.params_mut()[i] = orig - h;
        let down = loss(&net)?;
        net.params_mut()[i] = orig;
        let fd = (up - down) / (2.0 * h);
        let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-8);
        worst = worst.max(rel);
        if k < 8 {
            println!("param {i:>6}: analytic {:>12.8} numeric {fd:>12.8} rel {rel:.1e}", grad[i]);
        }
    }
    println!("max relative error over 100 coordinates: {worst:.2e}");
    Ok(())
}
