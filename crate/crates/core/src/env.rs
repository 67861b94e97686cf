//! Episodic furniture-placement environment.
//!
//! One item is placed per step, in footprint-area order. An action that
//! leaves the room or overlaps an earlier footprint ends the episode with
//! the configured penalty.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{contains, intersection_area, mark_polygon, rasterize_onto, Polygon, RotationIndex, Vec2, AREA_EPS};
use crate::pathfind::OccupancyGrid;
use crate::rewards::{composite_reward, GuidelineMask, PlacedItem, RewardBreakdown, DEFAULT_GRID_RESOLUTION};
use crate::scene::{descriptor, sort_by_area, Catalog, FurnitureSpec, Room, SceneError, DESCRIPTOR_LEN, SENTINEL_DESCRIPTOR};

/// Side length of the occupancy map fed to the network.
pub const OBS_GRID: usize = 64;
pub const ACTION_DIM: usize = 3;
pub const DEFAULT_PENALTY: f64 = -10.0;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("episode already finished")]
    EpisodeDone,
    #[error("episode needs at least one furniture item")]
    NoFurniture,
    #[error("penalty must be finite, got {0}")]
    NonFinitePenalty(f64),
    #[error("action contains non-finite values")]
    NonFiniteAction,
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementOrder {
    #[default]
    #[serde(alias = "desc")]
    Descending,
    #[serde(alias = "asc")]
    Ascending,
}

#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub room: Room,
    pub catalog: Arc<Catalog>,
    pub order: PlacementOrder,
    pub furniture_ids: Vec<String>,
    pub mask: GuidelineMask,
    pub penalty: f64,
    pub grid_resolution: f64,
    pub seed: u64,
}

impl EpisodeConfig {
    pub fn new(room: Room, catalog: Arc<Catalog>, furniture_ids: Vec<String>) -> Self {
        Self {
            room,
            catalog,
            order: PlacementOrder::Descending,
            furniture_ids,
            mask: GuidelineMask::all(),
            penalty: DEFAULT_PENALTY,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            seed: 0,
        }
    }

    /// Furniture in placement order.
    pub fn ordered_items(&self) -> Result<Vec<FurnitureSpec>, EnvError> {
        if self.furniture_ids.is_empty() {
            return Err(EnvError::NoFurniture);
        }
        let mut items = sort_by_area(&self.catalog, &self.furniture_ids)?;
        if self.order == PlacementOrder::Ascending {
            items.reverse();
        }
        Ok(items)
    }
}

/// What the agent sees: current and next item descriptors plus the occupancy map.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub current: [f64; DESCRIPTOR_LEN],
    pub next: [f64; DESCRIPTOR_LEN],
    /// `OBS_GRID × OBS_GRID` cells, row-major, 1 = occupied or outside the room.
    pub occupancy: Vec<u8>,
}

impl Observation {
    pub fn zeros() -> Self {
        Self {
            current: [0.0; DESCRIPTOR_LEN],
            next: [0.0; DESCRIPTOR_LEN],
            occupancy: vec![0; OBS_GRID * OBS_GRID],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutState {
    pub placed: Vec<PlacedItem>,
    pub cursor: usize,
    pub occupancy: OccupancyGrid,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepInfo {
    Placed(RewardBreakdown),
    Invalid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
    /// Observation of the next state; `None` once the episode is over.
    pub observation: Option<Observation>,
}

/// Maps an unbounded network output onto a position in the room's bounding box and a rotation.
pub fn decode_action(raw: &[f64; ACTION_DIM], room: &Room) -> (Vec2, RotationIndex) {
    let squash = |a: f64| (a.tanh() + 1.0) / 2.0;
    let bb = room.boundary.aabb();
    let pos = Vec2::new(
        bb.min.x + squash(raw[0]) * room.n,
        bb.min.y + squash(raw[1]) * room.m,
    );
    let k = ((squash(raw[2]) * 4.0).floor() as i64).clamp(0, 3);
    (pos, RotationIndex::new(k).expect("clamped"))
}

/// Valid iff inside the room and not overlapping any earlier footprint.
pub fn is_valid_placement(footprint: &Polygon, room: &Room, placed: &[PlacedItem]) -> bool {
    contains(&room.boundary, footprint)
        && placed
            .iter()
            .all(|p| intersection_area(footprint, &p.footprint) <= AREA_EPS)
}

/// Empty observation grid in the room frame (exterior cells set).
pub fn empty_obs_grid(room: &Room) -> OccupancyGrid {
    let bb = room.boundary.aabb();
    let res = room.n.max(room.m) / OBS_GRID as f64;
    rasterize_onto(&[], &room.boundary, bb.min, res, OBS_GRID, OBS_GRID)
}

pub struct LayoutEnv {
    config: EpisodeConfig,
    items: Vec<FurnitureSpec>,
    descriptors: Vec<[f64; DESCRIPTOR_LEN]>,
    blank_grid: OccupancyGrid,
    state: LayoutState,
}

impl LayoutEnv {
    pub fn new(config: EpisodeConfig) -> Result<Self, EnvError> {
        if !config.penalty.is_finite() {
            return Err(EnvError::NonFinitePenalty(config.penalty));
        }
        let items = config.ordered_items()?;
        let descriptors = items
            .iter()
            .map(|f| descriptor(f, &config.catalog, &config.room))
            .collect();
        let blank_grid = empty_obs_grid(&config.room);
        let state = LayoutState {
            placed: Vec::new(),
            cursor: 0,
            occupancy: blank_grid.clone(),
            done: false,
        };
        Ok(Self {
            config,
            items,
            descriptors,
            blank_grid,
            state,
        })
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn items(&self) -> &[FurnitureSpec] {
        &self.items
    }

    pub fn state(&self) -> &LayoutState {
        &self.state
    }

    pub fn reset(&mut self) -> (&LayoutState, Observation) {
        self.state = LayoutState {
            placed: Vec::new(),
            cursor: 0,
            occupancy: self.blank_grid.clone(),
            done: false,
        };
        let obs = self.observe();
        (&self.state, obs)
    }

    /// Observation of the current state. At the last item the next descriptor is the zero sentinel.
    pub fn observe(&self) -> Observation {
        let t = self.state.cursor.min(self.items.len());
        let get = |i: usize| self.descriptors.get(i).copied().unwrap_or(SENTINEL_DESCRIPTOR);
        Observation {
            current: get(t),
            next: get(t + 1),
            occupancy: self.state.occupancy.cells().to_vec(),
        }
    }

    pub fn step(&mut self, raw: &[f64; ACTION_DIM]) -> Result<StepOutcome, EnvError> {
        if self.state.done {
            return Err(EnvError::EpisodeDone);
        }
        if raw.iter().any(|a| !a.is_finite()) {
            return Err(EnvError::NonFiniteAction);
        }
        let spec = &self.items[self.state.cursor];
        let (pos, k) = decode_action(raw, &self.config.room);
        let item = PlacedItem::new(spec, pos, k);
        if !is_valid_placement(&item.footprint, &self.config.room, &self.state.placed) {
            self.state.done = true;
            return Ok(StepOutcome {
                reward: self.config.penalty,
                done: true,
                info: StepInfo::Invalid,
                observation: None,
            });
        }
        mark_polygon(&mut self.state.occupancy, &item.footprint, true);
        self.state.placed.push(item);
        self.state.cursor += 1;
        let breakdown = composite_reward(
            &self.state.placed,
            &self.config.catalog,
            &self.config.room,
            &self.config.mask,
            self.config.grid_resolution,
        );
        let done = self.state.cursor == self.items.len();
        self.state.done = done;
        Ok(StepOutcome {
            reward: breakdown.r_composite,
            done,
            info: StepInfo::Placed(breakdown),
            observation: (!done).then(|| self.observe()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rasterize_onto;
    use crate::scene::{default_catalog, default_selection, make_room, DoorSpec, RoomShape, WallSide};

    fn config(n_items: usize) -> EpisodeConfig {
        let room = make_room(
            RoomShape::Square,
            10.0,
            10.0,
            &[DoorSpec {
                edge: WallSide::S,
                center: 5.0,
                width: 0.9,
            }],
        )
        .unwrap();
        EpisodeConfig::new(room, Arc::new(default_catalog()), default_selection(n_items))
    }

    /// Raw action that decodes to `(x, y)` in a 10×10 room with rotation bucket `k`.
    fn raw_for(x: f64, y: f64, k: usize) -> [f64; 3] {
        let inv = |u: f64| (2.0 * u - 1.0).atanh();
        [inv(x / 10.0), inv(y / 10.0), inv((k as f64 + 0.5) / 4.0)]
    }

    #[test]
    fn decode_examples() {
        let room = config(1).room;
        let (p, k) = decode_action(&[0.0, 0.0, 0.0], &room);
        assert_eq!((p, k.get()), (Vec2::new(5.0, 5.0), 2));
        let (p, k) = decode_action(&[-40.0, -40.0, -40.0], &room);
        assert!(p.norm() < 1e-12 && k.get() == 0);
        let (p, k) = decode_action(&[40.0, 40.0, 40.0], &room);
        assert!((p - Vec2::new(10.0, 10.0)).norm() < 1e-12 && k.get() == 3);
    }

    #[test]
    fn reset_observations() {
        let mut env = LayoutEnv::new(config(4)).unwrap();
        let (state, obs) = env.reset();
        assert_eq!(state.cursor, 0);
        assert_eq!(obs.current, env.descriptors[0]);
        assert_eq!(obs.next, env.descriptors[1]);
        assert!(obs.occupancy.iter().all(|&c| c == 0));

        let mut single = LayoutEnv::new(config(1)).unwrap();
        let (_, obs) = single.reset();
        assert_eq!(obs.next, SENTINEL_DESCRIPTOR);

        let first = env.observe();
        env.step(&[0.0; 3]).unwrap();
        assert_eq!(env.reset().1, first);
    }

    #[test]
    fn valid_then_overlap_is_penalized() {
        let mut env = LayoutEnv::new(config(4)).unwrap();
        env.reset();
        let out = env.step(&raw_for(3.0, 3.0, 0)).unwrap();
        assert!(!out.done);
        let StepInfo::Placed(b) = out.info else { panic!("expected placement") };
        assert_eq!(out.reward, b.r_composite);
        let expected = composite_reward(
            &env.state().placed,
            &env.config().catalog,
            &env.config().room,
            &GuidelineMask::all(),
            DEFAULT_GRID_RESOLUTION,
        );
        assert_eq!(b, expected);

        // After one placement the map shows exactly the rasterized footprint.
        let obs = out.observation.unwrap();
        let room = &env.config().room;
        let expect = rasterize_onto(
            &[env.state().placed[0].footprint.clone()],
            &room.boundary,
            Vec2::ZERO,
            10.0 / 64.0,
            64,
            64,
        );
        assert_eq!(obs.occupancy.iter().filter(|&&c| c != 0).count(), expect.count_set());

        let out = env.step(&raw_for(3.0, 3.0, 0)).unwrap();
        assert_eq!(out.reward, -10.0);
        assert!(out.done && out.info == StepInfo::Invalid && out.observation.is_none());
        assert!(matches!(env.step(&[0.0; 3]), Err(EnvError::EpisodeDone)));
    }

    #[test]
    fn outside_room_is_invalid() {
        let mut env = LayoutEnv::new(config(2)).unwrap();
        env.reset();
        let out = env.step(&[-40.0, -40.0, 0.0]).unwrap();
        assert_eq!((out.reward, out.done), (-10.0, true));
    }

    #[test]
    fn last_placement_finishes_episode() {
        let mut env = LayoutEnv::new(config(2)).unwrap();
        env.reset();
        let first = env.step(&raw_for(2.0, 2.0, 0)).unwrap();
        assert!(!first.done);
        let obs = first.observation.unwrap();
        assert_eq!(obs.next, SENTINEL_DESCRIPTOR);
        let second = env.step(&raw_for(8.0, 8.0, 0)).unwrap();
        assert!(second.done && second.observation.is_none());
        assert_eq!(env.state().placed.len(), 2);
    }

    #[test]
    fn ascending_order_reverses() {
        let mut cfg = config(4);
        let desc: Vec<String> = cfg.ordered_items().unwrap().into_iter().map(|f| f.id).collect();
        cfg.order = PlacementOrder::Ascending;
        let mut asc: Vec<String> = cfg.ordered_items().unwrap().into_iter().map(|f| f.id).collect();
        asc.reverse();
        assert_eq!(asc, desc);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = config(4);
        cfg.furniture_ids.clear();
        assert!(matches!(LayoutEnv::new(cfg), Err(EnvError::NoFurniture)));
        let mut cfg = config(4);
        cfg.penalty = f64::NAN;
        assert!(LayoutEnv::new(cfg).is_err());
    }
}
