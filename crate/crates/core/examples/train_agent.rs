//! Trains on the square room with four items and evaluates the greedy policy.
//!
//! `cargo run --release --example train_agent -- 50`

use std::sync::Arc;

use interior_rl::env::EpisodeConfig;
use interior_rl::ppo::{evaluate, init_params, train_from, EvalOptions, TrainConfig};
use interior_rl::scene::{default_catalog, default_selection, RoomShape};

fn main() {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let room = RoomShape::Square.default_spec().build().unwrap();
    let config = EpisodeConfig::new(room, Arc::new(default_catalog()), default_selection(4));
    let cfg = TrainConfig { epochs, seed: 1, ..TrainConfig::default() };

    let out = train_from(&[config.clone()], &cfg, init_params(&cfg).unwrap(), |m, _| {
        if m.epoch % 10 == 0 {
            println!("epoch {:4}  reward {:+.3}  p_loss {:.4}  v_loss {:.4}", m.epoch, m.mean_reward, m.p_loss, m.v_loss);
        }
    })
    .unwrap();

    let report = evaluate(&out.params, &[config], 10, EvalOptions::default()).unwrap();
    println!("{}", serde_json::to_string_pretty(&report.stats).unwrap());
}
