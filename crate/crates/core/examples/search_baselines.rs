//! Random search, Metropolis-Hastings and particle swarm on the same scene.

use std::sync::Arc;

use interior_rl::baselines::{run_baseline, Algorithm, SearchBudget, SearchScene};
use interior_rl::env::EpisodeConfig;
use interior_rl::scene::{default_catalog, default_selection, RoomShape};

fn main() {
    let room = RoomShape::Square.default_spec().build().unwrap();
    let scene = SearchScene::new(EpisodeConfig::new(room, Arc::new(default_catalog()), default_selection(4))).unwrap();
    let budget = SearchBudget { max_evaluations: 5_000, seed: 0 };

    for algo in [Algorithm::Random, Algorithm::Mh, Algorithm::Pso] {
        let r = run_baseline(algo, &scene, &budget).unwrap();
        let d = scene.decode(&r.best).unwrap();
        println!(
            "{algo:?}: best {:.4} with {} of {} items placed in {:.2}s",
            r.best_score,
            d.placed.len(),
            scene.items.len(),
            r.seconds
        );
    }
}
