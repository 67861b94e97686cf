use std::sync::Arc;

use interior_rl::env::{
    decode_action, empty_obs_grid, is_valid_placement, EnvError, EpisodeConfig, LayoutEnv, Observation, PlacementOrder,
    StepInfo, OBS_GRID,
};
use interior_rl::rewards::PlacedItem;
use interior_rl::geometry::rasterize_onto;
use interior_rl::scene::{default_catalog, default_selection, RoomShape};
use proptest::prelude::*;

fn env(shape: RoomShape, n: usize, order: PlacementOrder) -> LayoutEnv {
    let room = shape.default_spec().build().unwrap();
    let mut c = EpisodeConfig::new(room, Arc::new(default_catalog()), default_selection(n));
    c.order = order;
    LayoutEnv::new(c).unwrap()
}

fn shape() -> impl Strategy<Value = RoomShape> {
    prop::sample::select(RoomShape::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn occupancy_tracks_placed_footprints(s in shape(), n in prop::sample::select(vec![4usize, 6, 8]), actions in prop::collection::vec(prop::array::uniform3(-3.0f64..3.0), 8)) {
        let mut e = env(s, n, PlacementOrder::Descending);
        e.reset();
        let room = e.config().room.clone();
        let bb = room.boundary.aabb();
        let res = room.n.max(room.m) / OBS_GRID as f64;
        let mut steps = 0;
        for a in &actions {
            let out = e.step(a).unwrap();
            steps += 1;
            let st = e.state();
            prop_assert!(st.cursor <= e.items().len());
            let polys: Vec<_> = st.placed.iter().map(|p| p.footprint.clone()).collect();
            let expected = rasterize_onto(&polys, &room.boundary, bb.min, res, OBS_GRID, OBS_GRID);
            prop_assert_eq!(&st.occupancy, &expected);
            match out.info {
                StepInfo::Invalid => prop_assert_eq!(out.reward, -10.0),
                StepInfo::Placed(b) => prop_assert_eq!(out.reward, b.r_composite),
            }
            prop_assert_eq!(out.observation.is_none(), out.done);
            if out.done {
                break;
            }
        }
        prop_assert!(steps <= n);
        if e.state().done {
            prop_assert!(matches!(e.step(&[0.0; 3]), Err(EnvError::EpisodeDone)));
        }
    }

    #[test]
    fn decoded_actions_stay_in_the_bounding_box(s in shape(), a in prop::array::uniform3(-1e6f64..1e6)) {
        let room = s.default_spec().build().unwrap();
        let (p, k) = decode_action(&a, &room);
        let bb = room.boundary.aabb();
        prop_assert!(p.x >= bb.min.x && p.x <= bb.max.x && p.y >= bb.min.y && p.y <= bb.max.y);
        prop_assert!(k.get() < 4);
    }
}

#[test]
fn placement_order_follows_area() {
    let desc = env(RoomShape::Square, 8, PlacementOrder::Descending);
    let areas: Vec<f64> = desc.items().iter().map(|f| f.area()).collect();
    assert!(areas.windows(2).all(|w| w[0] >= w[1]));
    let asc = env(RoomShape::Square, 8, PlacementOrder::Ascending);
    let areas: Vec<f64> = asc.items().iter().map(|f| f.area()).collect();
    assert!(areas.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn reset_clears_the_episode() {
    let mut e = env(RoomShape::LShape, 4, PlacementOrder::Descending);
    let (_, first) = e.reset();
    let first = first.clone();
    e.step(&[0.0, 0.0, 0.0]).unwrap();
    let (st, obs) = e.reset();
    assert!(st.placed.is_empty() && st.cursor == 0 && !st.done);
    assert_eq!(obs, first);
    assert_eq!(obs.occupancy, empty_obs_grid(&e.config().room).cells());
}

/// Steps with the first lattice action that lands the item somewhere valid.
fn step_somewhere_valid(e: &mut LayoutEnv) -> Option<Observation> {
    for i in -8..=8 {
        for j in -8..=8 {
            let a = [i as f64 * 0.25, j as f64 * 0.25, 0.0];
            let (p, k) = decode_action(&a, &e.config().room);
            let item = PlacedItem::new(&e.items()[e.state().cursor], p, k);
            if is_valid_placement(&item.footprint, &e.config().room, &e.state().placed) {
                return e.step(&a).unwrap().observation;
            }
        }
    }
    panic!("no valid placement found");
}

#[test]
fn last_item_sees_the_zero_sentinel() {
    let mut e = env(RoomShape::UShape, 4, PlacementOrder::Descending);
    let (_, obs) = e.reset();
    assert!(obs.next.iter().any(|&x| x != 0.0));
    for t in 1..4 {
        let obs = step_somewhere_valid(&mut e).unwrap();
        assert_eq!(obs.next.iter().all(|&x| x == 0.0), t == 3, "step {t}");
    }
    assert!(step_somewhere_valid(&mut e).is_none());
    assert!(e.state().done);
}
