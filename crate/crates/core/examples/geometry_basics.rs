//! Footprints, rotations, overlap and clearance strips.

use interior_rl::geometry::{contains, intersection_area, rotate, sweep_strip, transform, Polygon, RotationIndex, Vec2};

fn main() {
    let desk = Polygon::rect(1.2, 0.6);
    let quarter = RotationIndex::new(1).unwrap();
    let turned = rotate(&desk, quarter);
    println!("desk aabb after a quarter turn: {:?}", turned.aabb());

    let a = transform(Vec2::new(1.0, 1.0), RotationIndex::new(0).unwrap(), &desk);
    let b = transform(Vec2::new(1.5, 1.2), quarter, &desk);
    println!("overlap of two desks: {:.4} m^2", intersection_area(&a, &b));

    let room = Polygon::from_bounds(0.0, 0.0, 5.0, 5.0);
    println!("first desk inside the room: {}", contains(&room, &a));

    let strip = sweep_strip(&a, Vec2::new(0.0, 1.0), 0.8).unwrap();
    println!("front clearance strip {:?}, area {:.2}", strip.aabb(), strip.area());
}
