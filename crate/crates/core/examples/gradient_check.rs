//! Compares backpropagated gradients of the policy network with central differences.

use interior_rl::env::Observation;
use interior_rl::nn::{ArchConfig, OutputGrad, PolicyParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let params = PolicyParams::init(&ArchConfig::default(), &mut rng).unwrap();
    println!("{} parameters", params.num_params());

    let mut obs = Observation::zeros();
    obs.current.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
    obs.occupancy.iter_mut().for_each(|c| *c = rng.gen_bool(0.2) as u8);
    let seed = OutputGrad { mu: [1.0, -0.5, 0.25], log_std: [0.3, 0.0, -0.2], value: 1.0 };
    let loss = |p: &PolicyParams| {
        let (o, _) = p.forward(&obs).unwrap();
        (0..3).map(|i| seed.mu[i] * o.mu[i] + seed.log_std[i] * o.log_std[i]).sum::<f64>() + seed.value * o.value
    };

    let (_, cache) = params.forward(&obs).unwrap();
    let grads = params.backward(&cache, &seed);
    let h = 1e-5;
    for (ti, (name, g)) in grads.named().into_iter().enumerate() {
        let i = (0..g.len()).max_by(|&a, &b| g.data()[a].abs().total_cmp(&g.data()[b].abs())).unwrap();
        let mut plus = params.clone();
        plus.named_mut()[ti].1.data_mut()[i] += h;
        let mut minus = params.clone();
        minus.named_mut()[ti].1.data_mut()[i] -= h;
        let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
        println!("{name:>16}[{i:>5}]  analytic {:+.6e}  numeric {numeric:+.6e}", g.data()[i]);
    }
}
