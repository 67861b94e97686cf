//! Short training runs with functional or visual guidelines switched off,
//! rescored afterwards with every guideline on.
//!
//! `cargo run --release --example ablation -- 40`

use std::sync::Arc;

use interior_rl::env::EpisodeConfig;
use interior_rl::ppo::{evaluate, train, EvalOptions, TrainConfig};
use interior_rl::rewards::{composite_reward, Guideline, GuidelineMask};
use interior_rl::scene::{default_catalog, default_selection, RoomShape};

fn main() {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let room = RoomShape::Square.default_spec().build().unwrap();
    let base = EpisodeConfig::new(room, Arc::new(default_catalog()), default_selection(4));
    let variants = [
        ("full", GuidelineMask::all()),
        ("no functional", GuidelineMask::without(&Guideline::FUNCTIONAL).unwrap()),
        ("no visual", GuidelineMask::without(&Guideline::VISUAL).unwrap()),
    ];
    for (name, mask) in variants {
        let mut config = base.clone();
        config.mask = mask;
        let cfg = TrainConfig { epochs, seed: 0, ..TrainConfig::default() };
        let out = train(&[config], &cfg).unwrap();
        let report = evaluate(&out.params, &[base.clone()], 5, EvalOptions::default()).unwrap();
        let (mut f, mut v) = (0.0, 0.0);
        for r in &report.records {
            let b = composite_reward(&r.placed, &base.catalog, &base.room, &GuidelineMask::all(), base.grid_resolution);
            f += b.functional_mean() / report.records.len() as f64;
            v += b.visual_mean() / report.records.len() as f64;
        }
        println!("{name:>14}: functional {f:+.3}  visual {v:+.3}  invalid {:.0}%", 100.0 * report.stats.invalid_rate);
    }
}
