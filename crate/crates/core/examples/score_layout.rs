//! Scores a hand-made bedroom with every guideline and then with the visual ones only.

use interior_rl::geometry::{RotationIndex, Vec2};
use interior_rl::rewards::{composite_reward, Guideline, GuidelineMask, PlacedItem, DEFAULT_GRID_RESOLUTION};
use interior_rl::scene::{default_catalog, RoomShape};

fn main() {
    let room = RoomShape::Square.default_spec().build().unwrap();
    let catalog = default_catalog();
    let place = |id: &str, x: f64, y: f64, k: i64| {
        PlacedItem::new(catalog.get(id).unwrap(), Vec2::new(x, y), RotationIndex::new(k).unwrap())
    };
    // Fronts point +y at k = 0; k = 2 faces the room from the north wall.
    let layout = vec![
        place("bed", 2.5, 4.0, 2),
        place("side_table", 1.45, 4.8, 2),
        place("desk", 4.7, 2.0, 1),
        place("chair", 4.1, 2.0, 3),
    ];

    let all = composite_reward(&layout, &catalog, &room, &GuidelineMask::all(), DEFAULT_GRID_RESOLUTION);
    println!("{}", serde_json::to_string_pretty(&all).unwrap());

    let visual = GuidelineMask::only(&Guideline::VISUAL).unwrap();
    let v = composite_reward(&layout, &catalog, &room, &visual, DEFAULT_GRID_RESOLUTION);
    println!("visual-only composite: {:.4}", v.r_composite);
}
