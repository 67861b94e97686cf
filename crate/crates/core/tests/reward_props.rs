mod common;

use interior_rl::geometry::{RotationIndex, Vec2};
use interior_rl::rewards::{
    access_reward, alignment_term, balance_reward, combine, composite_reward, pair_reward, pathway_from_terms,
    visibility_reward, Guideline, GuidelineMask, LayoutFile, PlacedItem,
};
use interior_rl::scene::{default_catalog, default_selection, RoomShape};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mask() -> impl Strategy<Value = GuidelineMask> {
    prop::array::uniform6(any::<bool>()).prop_filter_map("empty mask", |m| GuidelineMask::new(m).ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn components_bounded_and_composite_is_enabled_mean(seed in any::<u64>(), shape in 0usize..4, n in 1usize..9, m in mask()) {
        let room = common::default_rooms().swap_remove(shape);
        let catalog = default_catalog();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let placed = common::random_valid_layout(&mut rng, &room, &catalog, &default_selection(n), 30);
        let b = composite_reward(&placed, &catalog, &room, &m, 0.1);
        for v in b.components() {
            prop_assert!((-1.0..=1.0).contains(&v));
        }
        let enabled: Vec<f64> = Guideline::ALL.iter().filter(|g| m.is_enabled(**g)).map(|g| b.component(*g)).collect();
        let mean = enabled.iter().sum::<f64>() / enabled.len() as f64;
        prop_assert!((b.r_composite - mean).abs() < 1e-12);
        prop_assert_eq!(combine(b.components(), &m), b);
    }

    #[test]
    fn alignment_term_bounded(theta in 0.0f64..10.0, omega in 0.0f64..3.0) {
        let a = alignment_term(theta, omega);
        prop_assert!((-1.0..=1.0).contains(&a));
    }

    #[test]
    fn pathway_terms_bounded(flags in prop::collection::vec(any::<bool>(), 1..10), d in 0.0f64..20.0) {
        let dists = vec![d; flags.len()];
        let r = pathway_from_terms(&flags, &dists, 7.0);
        prop_assert!((-1.0..=1.0).contains(&r));
        let all_blocked = pathway_from_terms(&vec![false; flags.len()], &dists, 7.0);
        prop_assert!(r >= all_blocked);
    }
}

#[test]
fn empty_mask_is_rejected() {
    assert!(GuidelineMask::new([false; 6]).is_err());
    assert!(GuidelineMask::without(&Guideline::ALL).is_err());
}

#[test]
fn empty_layout_scores_zero() {
    let room = RoomShape::Square.default_spec().build().unwrap();
    let b = composite_reward(&[], &default_catalog(), &room, &GuidelineMask::all(), 0.1);
    assert_eq!(b.r_composite, 0.0);
}

#[test]
fn facing_the_room_beats_facing_the_wall() {
    let room = RoomShape::Square.default_spec().build().unwrap();
    let cat = default_catalog();
    let spec = cat.get("bookshelf").unwrap();
    let toward = (0..4)
        .map(|k| PlacedItem::new(spec, Vec2::new(2.5, 4.8), RotationIndex::new(k).unwrap()))
        .map(|p| visibility_reward(&[p], &room))
        .fold(f64::MIN, f64::max);
    assert!((toward - 1.0).abs() < 1e-12);
    let worst = (0..4)
        .map(|k| PlacedItem::new(spec, Vec2::new(2.5, 4.8), RotationIndex::new(k).unwrap()))
        .map(|p| visibility_reward(&[p], &room))
        .fold(f64::MAX, f64::min);
    assert!((worst + 1.0).abs() < 1e-12);
}

#[test]
fn facing_desk_and_chair_score_higher_than_parallel() {
    let room = RoomShape::Square.default_spec().build().unwrap();
    let cat = default_catalog();
    let desk = PlacedItem::new(cat.get("desk").unwrap(), Vec2::new(2.5, 2.5), RotationIndex::new(0).unwrap());
    let chair = cat.get("chair").unwrap();
    let scores: Vec<f64> = (0..4)
        .map(|k| {
            let c = PlacedItem::new(chair, desk.position + desk.front_world * 0.6, RotationIndex::new(k).unwrap());
            pair_reward(&[desk.clone(), c], &cat.pairs, &room)
        })
        .collect();
    let best = scores.iter().cloned().fold(f64::MIN, f64::max);
    let worst = scores.iter().cloned().fold(f64::MAX, f64::min);
    assert!(best > 0.5 && worst < best);
}

#[test]
fn blocked_access_lowers_reward() {
    let room = RoomShape::Square.default_spec().build().unwrap();
    let cat = default_catalog();
    let tv = PlacedItem::new(cat.get("tv_stand").unwrap(), Vec2::new(2.5, 2.5), RotationIndex::new(0).unwrap());
    let clear = access_reward(&[tv.clone()], &cat, &room);
    let blocker = PlacedItem::new(cat.get("wardrobe").unwrap(), tv.position + tv.front_world * 0.9, RotationIndex::new(0).unwrap());
    let blocked = access_reward(&[tv, blocker], &cat, &room);
    assert_eq!(clear, 1.0);
    assert!(blocked < clear);
}

#[test]
fn centered_layout_is_balanced() {
    let room = RoomShape::Square.default_spec().build().unwrap();
    let cat = default_catalog();
    let spec = cat.get("plant").unwrap();
    let corners: Vec<PlacedItem> = [(0.5, 0.5), (4.5, 0.5), (0.5, 4.5), (4.5, 4.5)]
        .iter()
        .map(|&(x, y)| PlacedItem::new(spec, Vec2::new(x, y), RotationIndex::new(0).unwrap()))
        .collect();
    let lopsided: Vec<PlacedItem> = [(0.5, 0.5), (1.0, 0.5), (0.5, 1.0), (1.0, 1.0)]
        .iter()
        .map(|&(x, y)| PlacedItem::new(spec, Vec2::new(x, y), RotationIndex::new(0).unwrap()))
        .collect();
    assert!(balance_reward(&corners, &room) > balance_reward(&lopsided, &room));
}

#[test]
fn layout_file_round_trip() {
    let room = RoomShape::LShape.default_spec().build().unwrap();
    let cat = default_catalog();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let placed = common::random_valid_layout(&mut rng, &room, &cat, &default_selection(6), 50);
    let file = LayoutFile::from_placed(&room, &placed);
    let text = serde_json::to_string(&file).unwrap();
    let back: LayoutFile = serde_json::from_str(&text).unwrap();
    let (room2, placed2) = back.resolve(&cat).unwrap();
    assert_eq!(room2, room);
    assert_eq!(placed2, placed);
}
