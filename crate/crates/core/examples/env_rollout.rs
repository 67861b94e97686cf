//! One episode with random actions, printing each step's reward.

use std::sync::Arc;

use interior_rl::env::{EpisodeConfig, LayoutEnv, StepInfo};
use interior_rl::scene::{default_catalog, default_selection, RoomShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let room = RoomShape::LShape.default_spec().build().unwrap();
    let config = EpisodeConfig::new(room, Arc::new(default_catalog()), default_selection(6));
    let mut env = LayoutEnv::new(config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    for attempt in 0..20 {
        env.reset();
        let mut rewards = Vec::new();
        loop {
            let action = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let out = env.step(&action).unwrap();
            rewards.push(out.reward);
            if out.done {
                let how = if matches!(out.info, StepInfo::Invalid) { "invalid" } else { "complete" };
                println!("attempt {attempt}: {how} after {} steps, rewards {rewards:.3?}", rewards.len());
                break;
            }
        }
        if env.state().placed.len() == env.items().len() {
            break;
        }
    }
}
