//! Door-to-item reachability before and after a wardrobe blocks the doorway.

use interior_rl::geometry::{RotationIndex, Vec2};
use interior_rl::rewards::{pathway_reward, reach_results, PlacedItem};
use interior_rl::scene::{default_catalog, RoomShape};

fn main() {
    let room = RoomShape::Rectangle.default_spec().build().unwrap();
    let catalog = default_catalog();
    let item = |id: &str, x: f64, y: f64| {
        PlacedItem::new(catalog.get(id).unwrap(), Vec2::new(x, y), RotationIndex::new(0).unwrap())
    };
    let sofa = item("sofa", 3.0, 3.0);

    for (label, wardrobe) in [("clear", item("wardrobe", 5.0, 0.4)), ("blocked", item("wardrobe", 1.0, 0.3))] {
        let layout = vec![sofa.clone(), wardrobe];
        let reach = reach_results(&layout, &room, 0.1);
        println!(
            "{label:>8}: reach {:?}, r_path {:.3}",
            reach.iter().map(|r| r.distance()).collect::<Vec<_>>(),
            pathway_reward(&layout, &room, 0.1)
        );
    }
}
