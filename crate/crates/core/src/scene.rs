//! Furniture catalog, parent-child relations, rooms with doors, and their JSON formats.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{point_segment_distance, Polygon, Vec2};

pub const DESCRIPTOR_LEN: usize = 12;
pub const DEFAULT_DOOR_WIDTH: f64 = 0.9;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("empty catalog")]
    EmptyCatalog,
    #[error("duplicate furniture id `{0}`")]
    DuplicateId(String),
    #[error("pair references unknown furniture id `{0}`")]
    DanglingPair(String),
    #[error("invalid pair {parent} -> {child}: {reason}")]
    InvalidPair {
        parent: String,
        child: String,
        reason: String,
    },
    #[error("invalid furniture `{id}`: {reason}")]
    InvalidItem { id: String, reason: String },
    #[error("unknown furniture id `{0}`")]
    UnknownId(String),
    #[error("invalid room: {0}")]
    InvalidRoom(String),
    #[error("door on edge `{edge}` at {center} (width {width}) does not lie on the boundary")]
    DoorOffBoundary { edge: String, center: f64, width: f64 },
}

/// Minimum clearance offsets per approach direction, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Clearances {
    pub front: f64,
    pub back: f64,
    pub left: f64,
    pub right: f64,
}

impl Clearances {
    pub fn new(front: f64, back: f64, left: f64, right: f64) -> Self {
        Self {
            front,
            back,
            left,
            right,
        }
    }

    /// `(direction, offset)` in the item's canonical frame, front first.
    pub fn directed(&self, front: Vec2) -> [(Vec2, f64); 4] {
        let left = front.perp();
        [
            (front, self.front),
            (-front, self.back),
            (left, self.left),
            (-left, self.right),
        ]
    }

    fn as_array(&self) -> [f64; 4] {
        [self.front, self.back, self.left, self.right]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FurnitureSpec {
    pub id: String,
    pub name: String,
    pub width: f64,
    pub depth: f64,
    #[serde(with = "vec2_pair")]
    pub front: Vec2,
    pub clearances: Clearances,
    #[serde(default)]
    pub alignment_exempt: bool,
    #[serde(default)]
    pub category: String,
}

impl FurnitureSpec {
    pub fn area(&self) -> f64 {
        self.width * self.depth
    }

    /// Canonical origin-centered footprint.
    pub fn footprint(&self) -> Polygon {
        Polygon::rect(self.width, self.depth)
    }

    /// Unit vector along the longer side in the canonical frame.
    pub fn long_axis(&self) -> Vec2 {
        if self.width >= self.depth {
            Vec2::new(1.0, 0.0)
        } else {
            Vec2::new(0.0, 1.0)
        }
    }

    pub fn long_axis_len(&self) -> f64 {
        self.width.max(self.depth)
    }

    fn validate(&self) -> Result<(), SceneError> {
        let bad = |reason: &str| SceneError::InvalidItem {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.id.is_empty() {
            return Err(bad("empty id"));
        }
        if !(self.width > 0.0 && self.depth > 0.0 && self.width.is_finite() && self.depth.is_finite()) {
            return Err(bad("width and depth must be positive"));
        }
        let axis = [
            Vec2::new(0.0, 1.0),
            Vec2::new(0.0, -1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(-1.0, 0.0),
        ];
        if !axis.contains(&self.front) {
            return Err(bad("front must be an axis direction"));
        }
        if self
            .clearances
            .as_array()
            .iter()
            .any(|c| !(c.is_finite() && *c >= 0.0))
        {
            return Err(bad("clearances must be non-negative"));
        }
        Ok(())
    }
}

mod vec2_pair {
    use super::Vec2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vec2, s: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec2, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        Ok(Vec2::new(x, y))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRelation {
    #[serde(rename = "parent")]
    pub parent_id: String,
    #[serde(rename = "child")]
    pub child_id: String,
    /// −1 asks for face-to-face, +1 for parallel fronts.
    pub alpha: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub items: Vec<FurnitureSpec>,
    #[serde(default)]
    pub pairs: Vec<PairRelation>,
}

impl Catalog {
    pub fn new(items: Vec<FurnitureSpec>, pairs: Vec<PairRelation>) -> Result<Self, SceneError> {
        let cat = Self { items, pairs };
        cat.validate()?;
        Ok(cat)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.items.is_empty() {
            return Err(SceneError::EmptyCatalog);
        }
        let mut seen = BTreeSet::new();
        for item in &self.items {
            item.validate()?;
            if !seen.insert(item.id.as_str()) {
                return Err(SceneError::DuplicateId(item.id.clone()));
            }
        }
        for p in &self.pairs {
            for id in [&p.parent_id, &p.child_id] {
                if !seen.contains(id.as_str()) {
                    return Err(SceneError::DanglingPair(id.clone()));
                }
            }
            let reason = if p.parent_id == p.child_id {
                Some("parent and child must differ")
            } else if p.alpha != 1 && p.alpha != -1 {
                Some("alpha must be -1 or +1")
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(SceneError::InvalidPair {
                    parent: p.parent_id.clone(),
                    child: p.child_id.clone(),
                    reason: reason.into(),
                });
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&FurnitureSpec> {
        self.items.iter().find(|f| f.id == id)
    }

    pub fn require(&self, id: &str) -> Result<&FurnitureSpec, SceneError> {
        self.get(id).ok_or_else(|| SceneError::UnknownId(id.to_string()))
    }

    /// True when `a` and `b` form a parent-child pair in either order.
    pub fn are_paired(&self, a: &str, b: &str) -> bool {
        self.pairs.iter().any(|p| {
            (p.parent_id == a && p.child_id == b) || (p.parent_id == b && p.child_id == a)
        })
    }

    pub fn has_parent(&self, id: &str) -> bool {
        self.pairs.iter().any(|p| p.child_id == id)
    }

    pub fn has_child(&self, id: &str) -> bool {
        self.pairs.iter().any(|p| p.parent_id == id)
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let cat: Catalog = serde_json::from_str(text)?;
        cat.validate()?;
        Ok(cat)
    }

    /// Pretty-printed JSON with lexicographically sorted keys.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }
}

/// Serializes through `serde_json::Value` so object keys come out sorted.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable value");
    let mut s = serde_json::to_string_pretty(&v).expect("valid JSON value");
    s.push('\n');
    s
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, SceneError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Catalog::from_json(&text)
}

pub fn save_catalog(catalog: &Catalog, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, catalog.to_canonical_json())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomShape {
    Square,
    Rectangle,
    LShape,
    UShape,
}

impl RoomShape {
    pub const ALL: [RoomShape; 4] = [
        RoomShape::Square,
        RoomShape::Rectangle,
        RoomShape::LShape,
        RoomShape::UShape,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RoomShape::Square => "square",
            RoomShape::Rectangle => "rectangle",
            RoomShape::LShape => "l_shape",
            RoomShape::UShape => "u_shape",
        }
    }

    /// Default dimensions and door used when no room file is given.
    pub fn default_spec(self) -> RoomSpec {
        let (n, m) = match self {
            RoomShape::Square => (5.0, 5.0),
            RoomShape::Rectangle => (6.0, 4.0),
            RoomShape::LShape => (6.0, 6.0),
            RoomShape::UShape => (7.5, 6.0),
        };
        RoomSpec {
            shape: self,
            n,
            m,
            doors: vec![DoorSpec {
                edge: WallSide::S,
                center: 1.0,
                width: DEFAULT_DOOR_WIDTH,
            }],
        }
    }
}

impl fmt::Display for RoomShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RoomShape {
    type Err = SceneError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "square" => Ok(RoomShape::Square),
            "rectangle" => Ok(RoomShape::Rectangle),
            "l_shape" => Ok(RoomShape::LShape),
            "u_shape" => Ok(RoomShape::UShape),
            other => Err(SceneError::InvalidRoom(format!("unknown shape `{other}`"))),
        }
    }
}

/// Compass side of a wall, named by its outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WallSide {
    N,
    S,
    E,
    W,
}

impl WallSide {
    pub fn outward_normal(self) -> Vec2 {
        match self {
            WallSide::N => Vec2::new(0.0, 1.0),
            WallSide::S => Vec2::new(0.0, -1.0),
            WallSide::E => Vec2::new(1.0, 0.0),
            WallSide::W => Vec2::new(-1.0, 0.0),
        }
    }

    fn label(self) -> &'static str {
        match self {
            WallSide::N => "n",
            WallSide::S => "s",
            WallSide::E => "e",
            WallSide::W => "w",
        }
    }
}

/// Door as written in `room.json`: a wall side plus center and width along it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoorSpec {
    pub edge: WallSide,
    pub center: f64,
    pub width: f64,
}

/// The `room.json` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub shape: RoomShape,
    pub n: f64,
    pub m: f64,
    pub doors: Vec<DoorSpec>,
}

impl RoomSpec {
    pub fn build(&self) -> Result<Room, SceneError> {
        make_room(self.shape, self.n, self.m, &self.doors)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Door {
    pub a: Vec2,
    pub b: Vec2,
}

impl Door {
    pub fn midpoint(&self) -> Vec2 {
        (self.a + self.b) * 0.5
    }
}

/// A boundary edge with its outward normal and unit tangent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub index: usize,
    pub a: Vec2,
    pub b: Vec2,
    pub normal: Vec2,
    pub tangent: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Room {
    pub boundary: Polygon,
    pub doors: Vec<Door>,
    pub shape: RoomShape,
    pub n: f64,
    pub m: f64,
    spec: RoomSpec,
    walls: Vec<Wall>,
}

impl Room {
    /// Bounding-box diagonal.
    pub fn diagonal(&self) -> f64 {
        self.n.hypot(self.m)
    }

    /// `(N² + M²) / 12`.
    pub fn reference_variance(&self) -> f64 {
        (self.n * self.n + self.m * self.m) / 12.0
    }

    /// Area centroid of the boundary polygon.
    pub fn center(&self) -> Vec2 {
        self.boundary.centroid()
    }

    pub fn spec(&self) -> &RoomSpec {
        &self.spec
    }

    pub fn walls(&self) -> &[Wall] {
        &self.walls
    }

    /// Boundary edge closest to `p`; ties go to the lowest edge index.
    pub fn nearest_wall(&self, p: Vec2) -> &Wall {
        let mut best = &self.walls[0];
        let mut best_d = f64::INFINITY;
        for w in &self.walls {
            let d = point_segment_distance(p, w.a, w.b);
            if d < best_d - 1e-12 {
                best = w;
                best_d = d;
            }
        }
        best
    }
}

fn rectilinear_outline(shape: RoomShape, n: f64, m: f64) -> Vec<Vec2> {
    let v = Vec2::new;
    match shape {
        RoomShape::Square | RoomShape::Rectangle => {
            vec![v(0.0, 0.0), v(n, 0.0), v(n, m), v(0.0, m)]
        }
        // Top-right quadrant removed.
        RoomShape::LShape => vec![
            v(0.0, 0.0),
            v(n, 0.0),
            v(n, m / 2.0),
            v(n / 2.0, m / 2.0),
            v(n / 2.0, m),
            v(0.0, m),
        ],
        // Centered notch from the top, N/3 wide and M/2 deep.
        RoomShape::UShape => vec![
            v(0.0, 0.0),
            v(n, 0.0),
            v(n, m),
            v(2.0 * n / 3.0, m),
            v(2.0 * n / 3.0, m / 2.0),
            v(n / 3.0, m / 2.0),
            v(n / 3.0, m),
            v(0.0, m),
        ],
    }
}

pub fn make_room(shape: RoomShape, n: f64, m: f64, doors: &[DoorSpec]) -> Result<Room, SceneError> {
    if !(n > 0.0 && m > 0.0 && n.is_finite() && m.is_finite()) {
        return Err(SceneError::InvalidRoom(format!("dimensions must be positive, got {n}x{m}")));
    }
    if shape == RoomShape::Square && (n - m).abs() > 1e-12 {
        return Err(SceneError::InvalidRoom(format!("square room needs n == m, got {n}x{m}")));
    }
    if doors.is_empty() {
        return Err(SceneError::InvalidRoom("a room needs at least one door".into()));
    }
    let boundary = Polygon::new(rectilinear_outline(shape, n, m))
        .map_err(|e| SceneError::InvalidRoom(e.to_string()))?;
    let walls: Vec<Wall> = boundary
        .edges()
        .enumerate()
        .map(|(index, (a, b))| {
            let tangent = (b - a).normalized();
            Wall {
                index,
                a,
                b,
                normal: Vec2::new(tangent.y, -tangent.x),
                tangent,
            }
        })
        .collect();

    let mut placed = Vec::with_capacity(doors.len());
    for d in doors {
        let off = || SceneError::DoorOffBoundary {
            edge: d.edge.label().to_string(),
            center: d.center,
            width: d.width,
        };
        if !(d.width > 0.0 && d.center.is_finite()) {
            return Err(off());
        }
        let normal = d.edge.outward_normal();
        let along_x = normal.x == 0.0;
        let (lo, hi) = (d.center - d.width / 2.0, d.center + d.width / 2.0);
        let wall = walls
            .iter()
            .filter(|w| (w.normal - normal).norm() < 1e-9)
            .find(|w| {
                let (a, b) = if along_x { (w.a.x, w.b.x) } else { (w.a.y, w.b.y) };
                lo >= a.min(b) - 1e-9 && hi <= a.max(b) + 1e-9
            })
            .ok_or_else(off)?;
        let door = if along_x {
            Door {
                a: Vec2::new(lo, wall.a.y),
                b: Vec2::new(hi, wall.a.y),
            }
        } else {
            Door {
                a: Vec2::new(wall.a.x, lo),
                b: Vec2::new(wall.a.x, hi),
            }
        };
        placed.push(door);
    }

    Ok(Room {
        boundary,
        doors: placed,
        shape,
        n,
        m,
        spec: RoomSpec {
            shape,
            n,
            m,
            doors: doors.to_vec(),
        },
        walls,
    })
}

/// Resolves `selection` and orders it by descending footprint area, ties by id.
pub fn sort_by_area(catalog: &Catalog, selection: &[String]) -> Result<Vec<FurnitureSpec>, SceneError> {
    let mut out = selection
        .iter()
        .map(|id| catalog.require(id).cloned())
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|a, b| b.area().total_cmp(&a.area()).then_with(|| a.id.cmp(&b.id)));
    Ok(out)
}

/// Room-normalized feature vector for one furniture item.
pub fn descriptor(spec: &FurnitureSpec, catalog: &Catalog, room: &Room) -> [f64; DESCRIPTOR_LEN] {
    let d = room.diagonal();
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let c = &spec.clearances;
    [
        spec.width / room.n,
        spec.depth / room.m,
        spec.area() / (room.n * room.m),
        spec.front.x,
        spec.front.y,
        c.front / d,
        c.back / d,
        c.left / d,
        c.right / d,
        flag(catalog.has_parent(&spec.id)),
        flag(catalog.has_child(&spec.id)),
        flag(spec.alignment_exempt),
    ]
}

/// Descriptor used when there is no next item.
pub const SENTINEL_DESCRIPTOR: [f64; DESCRIPTOR_LEN] = [0.0; DESCRIPTOR_LEN];

#[allow(clippy::too_many_arguments)]
fn item(
    id: &str,
    name: &str,
    width: f64,
    depth: f64,
    clear: [f64; 4],
    exempt: bool,
    category: &str,
) -> FurnitureSpec {
    FurnitureSpec {
        id: id.into(),
        name: name.into(),
        width,
        depth,
        front: Vec2::new(0.0, 1.0),
        clearances: Clearances::new(clear[0], clear[1], clear[2], clear[3]),
        alignment_exempt: exempt,
        category: category.into(),
    }
}

/// Fifteen residential items with desk-chair and bed-side table pairs.
pub fn default_catalog() -> Catalog {
    let items = vec![
        item("bed", "Double bed", 1.6, 2.0, [0.6, 0.0, 0.5, 0.5], false, "bedroom"),
        item("side_table", "Bedside table", 0.45, 0.4, [0.3, 0.0, 0.0, 0.0], false, "bedroom"),
        item("desk", "Writing desk", 1.2, 0.6, [0.8, 0.0, 0.0, 0.0], false, "office"),
        item("chair", "Desk chair", 0.5, 0.5, [0.3, 0.0, 0.0, 0.0], true, "office"),
        item("wardrobe", "Wardrobe", 1.2, 0.6, [0.8, 0.0, 0.0, 0.0], false, "storage"),
        item("bookshelf", "Bookshelf", 0.9, 0.35, [0.6, 0.0, 0.0, 0.0], false, "storage"),
        item("sofa", "Two-seat sofa", 1.6, 0.85, [0.7, 0.0, 0.0, 0.0], false, "living"),
        item("armchair", "Armchair", 0.8, 0.8, [0.5, 0.0, 0.0, 0.0], false, "living"),
        item("dresser", "Dresser", 1.0, 0.5, [0.7, 0.0, 0.0, 0.0], false, "storage"),
        item("tv_stand", "TV stand", 1.4, 0.4, [1.2, 0.0, 0.0, 0.0], false, "living"),
        item("coffee_table", "Coffee table", 1.0, 0.6, [0.4, 0.4, 0.0, 0.0], true, "living"),
        item("dining_table", "Dining table", 1.2, 0.8, [0.6, 0.6, 0.6, 0.6], true, "dining"),
        item("cabinet", "Cabinet", 0.8, 0.45, [0.6, 0.0, 0.0, 0.0], false, "storage"),
        item("shoe_rack", "Shoe rack", 0.8, 0.3, [0.5, 0.0, 0.0, 0.0], false, "entry"),
        item("plant", "Floor plant", 0.4, 0.4, [0.0, 0.0, 0.0, 0.0], true, "decor"),
    ];
    let pairs = vec![
        PairRelation {
            parent_id: "desk".into(),
            child_id: "chair".into(),
            alpha: -1,
        },
        PairRelation {
            parent_id: "bed".into(),
            child_id: "side_table".into(),
            alpha: 1,
        },
    ];
    Catalog::new(items, pairs).expect("default catalog is valid")
}

/// Standard furniture selection for a given count (4, 6 or 8 items).
pub fn default_selection(count: usize) -> Vec<String> {
    const ORDER: [&str; 15] = [
        "bed",
        "side_table",
        "desk",
        "chair",
        "wardrobe",
        "bookshelf",
        "dresser",
        "plant",
        "sofa",
        "armchair",
        "tv_stand",
        "coffee_table",
        "cabinet",
        "shoe_rack",
        "dining_table",
    ];
    ORDER.iter().take(count.min(ORDER.len())).map(|s| s.to_string()).collect()
}

/// Item ids mapped to their position in a placement order.
pub fn index_by_id(items: &[FurnitureSpec]) -> HashMap<&str, usize> {
    items.iter().enumerate().map(|(i, f)| (f.id.as_str(), i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn south_door(center: f64) -> Vec<DoorSpec> {
        vec![DoorSpec {
            edge: WallSide::S,
            center,
            width: DEFAULT_DOOR_WIDTH,
        }]
    }

    #[test]
    fn catalog_with_one_pair() {
        let cat = default_catalog();
        let desk = cat.get("desk").unwrap().clone();
        let chair = cat.get("chair").unwrap().clone();
        let json = serde_json::json!({
            "items": [desk, chair],
            "pairs": [{"parent": "desk", "child": "chair", "alpha": -1}]
        });
        let c = Catalog::from_json(&json.to_string()).unwrap();
        assert_eq!((c.items.len(), c.pairs.len()), (2, 1));
    }

    #[test]
    fn catalog_errors_are_distinct() {
        let err = Catalog::from_json(r#"{"items": [], "pairs": []}"#).unwrap_err();
        assert_eq!(err.to_string(), "empty catalog");
        let chair = default_catalog().get("chair").unwrap().clone();
        let json = serde_json::json!({
            "items": [chair],
            "pairs": [{"parent": "ghost", "child": "chair", "alpha": -1}]
        });
        let err = Catalog::from_json(&json.to_string()).unwrap_err();
        assert!(matches!(err, SceneError::DanglingPair(ref id) if id == "ghost"));
        assert!(err.to_string().contains("ghost"));
        let json = serde_json::json!({"items": [chair.clone(), chair], "pairs": []});
        assert!(matches!(
            Catalog::from_json(&json.to_string()),
            Err(SceneError::DuplicateId(_))
        ));
        assert!(matches!(Catalog::from_json("{"), Err(SceneError::Parse(_))));
    }

    #[test]
    fn square_room() {
        let r = make_room(RoomShape::Square, 10.0, 10.0, &south_door(5.0)).unwrap();
        assert_eq!(r.boundary.len(), 4);
        assert!((r.diagonal() - 200f64.sqrt()).abs() < 1e-12);
        assert!((r.diagonal() - 14.142).abs() < 1e-3);
        assert_eq!(r.doors[0].a, Vec2::new(4.55, 0.0));
    }

    #[test]
    fn l_and_u_rooms() {
        let l = make_room(RoomShape::LShape, 10.0, 10.0, &south_door(2.0)).unwrap();
        assert_eq!(l.boundary.len(), 6);
        assert!((l.boundary.area() - 75.0).abs() < 1e-12);
        let u = make_room(RoomShape::UShape, 12.0, 9.0, &south_door(2.0)).unwrap();
        assert_eq!(u.boundary.len(), 8);
        assert!((u.boundary.area() - 90.0).abs() < 1e-12);
    }

    #[test]
    fn door_must_be_on_boundary() {
        let doors = south_door(9.9);
        assert!(matches!(
            make_room(RoomShape::Square, 10.0, 10.0, &doors),
            Err(SceneError::DoorOffBoundary { .. })
        ));
        // The L-shape's north wall only spans the left half.
        let north = [DoorSpec {
            edge: WallSide::N,
            center: 8.0,
            width: 0.9,
        }];
        let l = make_room(RoomShape::LShape, 10.0, 10.0, &north).unwrap();
        assert!((l.doors[0].a.y - 5.0).abs() < 1e-12);
        assert!(make_room(RoomShape::Square, 10.0, 10.0, &[]).is_err());
    }

    #[test]
    fn sorting_by_area() {
        let cat = Catalog::new(
            vec![
                FurnitureSpec { width: 2.0, depth: 1.6, ..item("bed", "", 1.0, 1.0, [0.0; 4], false, "") },
                item("chair", "", 0.5, 0.5, [0.0; 4], false, ""),
                item("desk", "", 1.2, 0.6, [0.0; 4], false, ""),
                item("b_twin", "", 1.0, 0.5, [0.0; 4], false, ""),
                item("a_twin", "", 0.5, 1.0, [0.0; 4], false, ""),
            ],
            vec![],
        )
        .unwrap();
        let ids = |v: Vec<FurnitureSpec>| v.into_iter().map(|f| f.id).collect::<Vec<_>>();
        let sel: Vec<String> = ["chair", "desk", "bed"].iter().map(|s| s.to_string()).collect();
        assert_eq!(ids(sort_by_area(&cat, &sel).unwrap()), ["bed", "desk", "chair"]);
        let sel: Vec<String> = ["b_twin", "a_twin"].iter().map(|s| s.to_string()).collect();
        assert_eq!(ids(sort_by_area(&cat, &sel).unwrap()), ["a_twin", "b_twin"]);
        assert_eq!(ids(sort_by_area(&cat, &["desk".to_string()]).unwrap()), ["desk"]);
        assert!(matches!(
            sort_by_area(&cat, &["sofa".to_string()]),
            Err(SceneError::UnknownId(_))
        ));
    }

    #[test]
    fn descriptor_examples() {
        let cat = Catalog::new(vec![item("box", "", 1.0, 1.0, [0.0; 4], false, "")], vec![]).unwrap();
        let room = make_room(RoomShape::Square, 10.0, 10.0, &south_door(5.0)).unwrap();
        let e = descriptor(&cat.items[0], &cat, &room);
        let expected = [0.1, 0.1, 0.01, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let big = make_room(RoomShape::Square, 20.0, 20.0, &south_door(5.0)).unwrap();
        assert_ne!(descriptor(&cat.items[0], &cat, &big), e);
        assert!(SENTINEL_DESCRIPTOR.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn default_catalog_has_fifteen_items() {
        let cat = default_catalog();
        assert_eq!(cat.items.len(), 15);
        assert!(cat.are_paired("chair", "desk"));
        assert!(cat.are_paired("bed", "side_table"));
        assert!(cat.has_child("desk") && cat.has_parent("chair"));
        for n in [4, 6, 8] {
            assert_eq!(default_selection(n).len(), n);
        }
    }

    #[test]
    fn canonical_json_round_trip() {
        let cat = default_catalog();
        let text = cat.to_canonical_json();
        let back = Catalog::from_json(&text).unwrap();
        assert_eq!(back, cat);
        assert_eq!(back.to_canonical_json(), text);
    }
}
