//! Writes an SVG of an annealed layout in the U-shaped room.
//!
//! `cargo run --example render_layout -- out.svg`

use std::sync::Arc;

use interior_rl::baselines::{mh_optimize, MhConfig, SearchBudget, SearchScene};
use interior_rl::env::EpisodeConfig;
use interior_rl::render::{render_svg, RenderOptions};
use interior_rl::scene::{default_catalog, default_selection, RoomShape};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "layout.svg".into());
    let room = RoomShape::UShape.default_spec().build().unwrap();
    let scene = SearchScene::new(EpisodeConfig::new(room, Arc::new(default_catalog()), default_selection(8))).unwrap();
    let best = mh_optimize(&scene, &SearchBudget { max_evaluations: 3_000, seed: 2 }, &MhConfig::default()).unwrap();
    let placed = scene.decode(&best.best).unwrap().placed;

    let opts = RenderOptions { show_access: true, ..RenderOptions::default() };
    let svg = render_svg(&placed, &scene.config.catalog, &scene.config.room, &opts);
    std::fs::write(&path, svg).unwrap();
    println!("wrote {path} ({} items, score {:.3})", placed.len(), best.best_score);
}
