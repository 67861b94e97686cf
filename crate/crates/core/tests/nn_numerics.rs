use interior_rl::nn::{
    adam_update, checkpoint_bytes, load_checkpoint, logprob_and_entropy, params_from_checkpoint, sample_action,
    save_checkpoint, ArchConfig, NnError, OutputGrad, PolicyParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_arch() -> ArchConfig {
    ArchConfig {
        encoder_widths: vec![4, 3],
        grid: 9,
        conv1_channels: 2,
        conv1_kernel: 3,
        conv1_stride: 2,
        conv2_channels: 2,
        conv2_kernel: 2,
        conv2_stride: 1,
        cnn_width: 5,
        ..ArchConfig::default()
    }
}

fn random_grad(rng: &mut ChaCha8Rng) -> OutputGrad {
    OutputGrad {
        mu: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
        log_std: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
        value: rng.gen_range(-1.0..1.0),
    }
}

#[test]
fn small_network_gradient_matches_finite_differences_everywhere() {
    let arch = small_arch();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut params = PolicyParams::init(&arch, &mut rng).unwrap();
    for (_, t) in params.named_mut() {
        for x in t.data_mut() {
            *x += rng.gen_range(-0.3..0.3);
        }
    }
    let cur: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let next: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let grid: Vec<f64> = (0..81).map(|_| f64::from(rng.gen_bool(0.4) as u8)).collect();
    let coef = random_grad(&mut rng);
    let objective = |p: &PolicyParams| {
        let (o, _) = p.forward_parts(&cur, &next, &grid).unwrap();
        (0..3).map(|i| coef.mu[i] * o.mu[i] + coef.log_std[i] * o.log_std[i]).sum::<f64>() + coef.value * o.value
    };
    let (_, cache) = params.forward_parts(&cur, &next, &grid).unwrap();
    let grads = params.backward(&cache, &coef);
    let analytic: Vec<Vec<f64>> = grads.named().iter().map(|(_, t)| t.data().to_vec()).collect();
    let h = 1e-5;
    for (ti, g) in analytic.iter().enumerate() {
        for i in 0..g.len() {
            let mut plus = params.clone();
            plus.named_mut()[ti].1.data_mut()[i] += h;
            let mut minus = params.clone();
            minus.named_mut()[ti].1.data_mut()[i] -= h;
            let numeric = (objective(&plus) - objective(&minus)) / (2.0 * h);
            let err = (g[i] - numeric).abs() / g[i].abs().max(numeric.abs()).max(1e-6);
            assert!(err < 1e-5, "{}[{i}]: analytic {} numeric {numeric}", params.named()[ti].0, g[i]);
        }
    }
}

#[test]
fn without_spatial_encoding_the_grid_is_ignored() {
    let arch = ArchConfig {
        spatial_encoding: false,
        ..small_arch()
    };
    let params = PolicyParams::init(&arch, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let cur = [0.25; 12];
    let a = params.forward_parts(&cur, &cur, &[0.0; 81]).unwrap().0;
    let b = params.forward_parts(&cur, &cur, &[1.0; 81]).unwrap().0;
    assert_eq!(a, b);
}

#[test]
fn entropy_matches_monte_carlo() {
    let mu = [0.3, -1.0, 2.0];
    let ls = [0.3, -0.2, 0.8];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 1_000_000;
    let mut sum = 0.0;
    for _ in 0..n {
        let (_, lp) = sample_action(&mu, &ls, &mut rng);
        sum -= lp;
    }
    let (_, h) = logprob_and_entropy(&mu, &ls, &mu);
    let mc = sum / n as f64;
    assert!((mc - h).abs() / h.abs() < 0.01, "entropy {h}, monte carlo {mc}");
}

#[test]
fn sample_mean_within_three_standard_errors() {
    let mu = [0.5, -0.25, 1.5];
    let ls = [0.0, -1.0, 0.5];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 100_000;
    let mut sums = [0.0; 3];
    for _ in 0..n {
        let (raw, _) = sample_action(&mu, &ls, &mut rng);
        for i in 0..3 {
            sums[i] += raw[i];
        }
    }
    for i in 0..3 {
        let se = ls[i].exp() / (n as f64).sqrt();
        assert!((sums[i] / n as f64 - mu[i]).abs() < 3.0 * se, "dimension {i}");
    }
}

#[test]
fn log_std_is_clamped_when_used() {
    let mu = [0.0; 3];
    let (lp_a, h_a) = logprob_and_entropy(&mu, &[9.0, -40.0, 0.0], &[0.1; 3]);
    let (lp_b, h_b) = logprob_and_entropy(&mu, &[2.0, -5.0, 0.0], &[0.1; 3]);
    assert_eq!((lp_a, h_a), (lp_b, h_b));
}

#[test]
fn adam_minimizes_a_quadratic() {
    let mut theta = [1.0];
    let (mut m, mut v) = ([0.0], [0.0]);
    for t in 1..=100 {
        let g = [2.0 * theta[0]];
        adam_update(&mut theta, &g, &mut m, &mut v, t, 0.1, (0.9, 0.999, 1e-8));
    }
    assert!(theta[0].abs() < 0.1, "theta {}", theta[0]);
}

#[test]
fn adam_first_step_moves_by_learning_rate() {
    let mut theta = [3.0, -2.0];
    let (mut m, mut v) = ([0.0; 2], [0.0; 2]);
    adam_update(&mut theta, &[0.7, -1e-3], &mut m, &mut v, 1, 0.01, (0.9, 0.999, 1e-12));
    assert!((theta[0] - 2.99).abs() < 1e-9);
    assert!((theta[1] + 1.99).abs() < 1e-6);
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let params = PolicyParams::init(&ArchConfig::default(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.bin");
    save_checkpoint(&params, &path).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap(), params);
}

#[test]
fn truncated_checkpoint_names_the_tensor() {
    let params = PolicyParams::init(&small_arch(), &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
    let bytes = checkpoint_bytes(&params);
    let err = params_from_checkpoint(&bytes[..bytes.len() - 4]).unwrap_err();
    match err {
        NnError::BadTensor { name, .. } => assert_eq!(name, "value.b"),
        other => panic!("unexpected error {other}"),
    }
    assert!(matches!(params_from_checkpoint(b"garbage!"), Err(NnError::BadMagic)));
}
