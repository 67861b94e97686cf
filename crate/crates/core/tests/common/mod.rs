#![allow(dead_code)]

use interior_rl::env::is_valid_placement;
use interior_rl::geometry::{RotationIndex, Vec2};
use interior_rl::rewards::PlacedItem;
use interior_rl::scene::{Catalog, Room, RoomShape};
use rand::Rng;

pub fn default_rooms() -> Vec<Room> {
    RoomShape::ALL
        .iter()
        .map(|s| s.default_spec().build().unwrap())
        .collect()
}

/// Places `ids` in order at random poses, retrying each up to `tries` times; items
/// that never fit are left out.
pub fn random_valid_layout<R: Rng>(
    rng: &mut R,
    room: &Room,
    catalog: &Catalog,
    ids: &[String],
    tries: usize,
) -> Vec<PlacedItem> {
    let bb = room.boundary.aabb();
    let mut placed: Vec<PlacedItem> = Vec::new();
    for id in ids {
        let spec = catalog.get(id).unwrap();
        for _ in 0..tries {
            let p = Vec2::new(rng.gen_range(bb.min.x..bb.max.x), rng.gen_range(bb.min.y..bb.max.y));
            let k = RotationIndex::new(rng.gen_range(0..4)).unwrap();
            let item = PlacedItem::new(spec, p, k);
            if is_valid_placement(&item.footprint, room, &placed) {
                placed.push(item);
                break;
            }
        }
    }
    placed
}
