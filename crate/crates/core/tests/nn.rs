use ecoabr::nn::{load_mlp, save_mlp, Adam, Mlp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scalar objective `sum_ij c_ij y_ij` over a batch.
fn objective(net: &Mlp, x: &[f64], batch: usize, c: &[f64]) -> f64 {
    net.forward(x, batch).unwrap().iter().zip(c).map(|(y, c)| y * c).sum()
}

fn max_relative_fd_error(sizes: &[usize], seed: u64, coords: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Mlp::new(sizes, &mut rng);
    let batch = 4;
    let x: Vec<f64> = (0..batch * sizes[0]).map(|_| rng.random_range(0.0..1.0)).collect();
    let out = sizes[sizes.len() - 1];
    let c: Vec<f64> = (0..batch * out).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (_, cache) = net.forward_cached(&x, batch).unwrap();
    let (grad, _) = net.backward(&cache, &c).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..coords {
        let i = rng.random_range(0..grad.len());
        let orig = net.params()[i];
        net.params_mut()[i] = orig + h;
        let up = objective(&net, &x, batch, &c);
        net.params_mut()[i] = orig - h;
        let down = objective(&net, &x, batch, &c);
        net.params_mut()[i] = orig;
        let fd = (up - down) / (2.0 * h);
        let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

#[test]
fn gradient_matches_finite_differences_on_policy_sized_nets() {
    for seed in 0..3 {
        let err = max_relative_fd_error(&[10, 128, 128, 2], seed, 100);
        assert!(err < 1e-4, "seed {seed}: max relative error {err:e}");
    }
}

#[test]
fn input_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let net = Mlp::new(&[12, 32, 32, 1], &mut rng);
    let mut x: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.0)).collect();
    let (_, cache) = net.forward_cached(&x, 1).unwrap();
    let dx = net.input_gradient(&cache, &[1.0]).unwrap();
    let h = 1e-6;
    for i in 0..12 {
        let orig = x[i];
        x[i] = orig + h;
        let up = net.forward(&x, 1).unwrap()[0];
        x[i] = orig - h;
        let down = net.forward(&x, 1).unwrap()[0];
        x[i] = orig;
        let fd = (up - down) / (2.0 * h);
        assert!((dx[i] - fd).abs() <= 1e-6 * fd.abs().max(1.0), "{i}: {} vs {fd}", dx[i]);
    }
}

#[test]
fn linear_unit_examples() {
    let net = Mlp::from_params(vec![1, 1], vec![2.0, 1.0]).unwrap();
    assert_eq!(net.forward(&[3.0], 1).unwrap(), vec![7.0]);
    let (_, cache) = net.forward_cached(&[3.0], 1).unwrap();
    let (g, dx) = net.backward(&cache, &[1.0]).unwrap();
    assert_eq!(g, vec![3.0, 1.0]);
    assert_eq!(dx, vec![2.0]);
    let (g, _) = net.backward(&cache, &[0.0]).unwrap();
    assert!(g.iter().all(|v| *v == 0.0));
    let zero = Mlp::from_params(vec![3, 4, 2], vec![0.0; Mlp::param_count(&[3, 4, 2])]).unwrap();
    assert_eq!(zero.forward(&[0.3, 0.1, 0.9], 1).unwrap(), vec![0.0, 0.0]);
}

#[test]
fn shape_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let net = Mlp::new(&[3, 4, 2], &mut rng);
    assert!(net.forward(&[1.0, 2.0], 1).is_err());
    assert!(Mlp::from_params(vec![3, 2], vec![0.0; 3]).is_err());
    assert!(Mlp::from_params(vec![1, 1], vec![f64::NAN, 0.0]).is_err());
}

#[test]
fn adam_examples() {
    let mut p = vec![5.0];
    let mut opt = Adam::new(1, 0.1);
    for _ in 0..200 {
        let g = vec![2.0 * p[0]];
        opt.step(&mut p, &g).unwrap();
    }
    assert!(p[0].abs() < 0.5, "{}", p[0]);

    let mut q = vec![1.0, -1.0];
    let mut opt = Adam::new(2, 3e-4);
    opt.step(&mut q, &[0.0, 0.0]).unwrap();
    assert_eq!(q, vec![1.0, -1.0]);
    let mut fresh = Adam::new(2, 3e-4);
    fresh.step(&mut q, &[0.7, -0.7]).unwrap();
    assert!(((1.0 - q[0]) - 3e-4).abs() < 1e-6);
    assert!(((q[1] + 1.0) - 3e-4).abs() < 1e-6);

    assert!(Adam::new(1, 0.1).step(&mut [1.0], &[f64::INFINITY]).is_err());
}

#[test]
fn network_file_round_trips_bit_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let net = Mlp::new(&[10, 128, 128, 4], &mut rng);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.json");
    save_mlp(&net, &path).unwrap();
    let back = load_mlp(&path).unwrap();
    assert_eq!(back, net);
    assert!(back.params().iter().zip(net.params()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn forward_is_shareable_across_threads() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let net = std::sync::Arc::new(Mlp::new(&[10, 16, 2], &mut rng));
    let x = vec![0.25; 10];
    let want = net.forward(&x, 1).unwrap();
    std::thread::scope(|s| {
        for _ in 0..4 {
            let net = net.clone();
            let x = x.clone();
            let want = want.clone();
            s.spawn(move || assert_eq!(net.forward(&x, 1).unwrap(), want));
        }
    });
}
