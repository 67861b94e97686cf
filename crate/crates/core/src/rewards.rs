//! Guideline rewards over a (possibly partial) layout.
//!
//! Every component lies in `[-1, 1]`; components whose denominators vanish
//! (no items placed, no complete pair, every item alignment-exempt) are 0.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{blocked_area, sweep_strip, transform, Aabb, Polygon, RotationIndex, Vec2};
use crate::pathfind::{reachability_all, ReachResult};
use crate::scene::{Catalog, FurnitureSpec, PairRelation, Room, RoomSpec, SceneError, Wall};

pub const DEFAULT_GRID_RESOLUTION: f64 = 0.1;

/// A furniture item with its world-frame pose.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedItem {
    pub spec_id: String,
    pub position: Vec2,
    pub k: RotationIndex,
    pub footprint: Polygon,
    pub front_world: Vec2,
}

impl PlacedItem {
    pub fn new(spec: &FurnitureSpec, position: Vec2, k: RotationIndex) -> Self {
        Self {
            spec_id: spec.id.clone(),
            position,
            k,
            footprint: transform(position, k, &spec.footprint()),
            front_world: spec.front.rotated(k),
        }
    }

    pub fn area(&self) -> f64 {
        self.footprint.area()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Guideline {
    Pair,
    Access,
    Vis,
    Path,
    Balance,
    Align,
}

impl Guideline {
    pub const ALL: [Guideline; 6] = [
        Guideline::Pair,
        Guideline::Access,
        Guideline::Vis,
        Guideline::Path,
        Guideline::Balance,
        Guideline::Align,
    ];
    pub const FUNCTIONAL: [Guideline; 4] =
        [Guideline::Pair, Guideline::Access, Guideline::Vis, Guideline::Path];
    pub const VISUAL: [Guideline; 2] = [Guideline::Balance, Guideline::Align];

    fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Guideline::Pair => "pair",
            Guideline::Access => "access",
            Guideline::Vis => "vis",
            Guideline::Path => "path",
            Guideline::Balance => "balance",
            Guideline::Align => "align",
        }
    }
}

impl fmt::Display for Guideline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Guideline {
    type Err = RewardError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Guideline::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| RewardError::UnknownGuideline(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("unknown reward component `{0}`")]
    UnknownGuideline(String),
    #[error("at least one reward component must stay enabled")]
    EmptyMask,
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("invalid layout: {0}")]
    Layout(String),
}

/// Which components enter the composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[bool; 6]", into = "[bool; 6]")]
pub struct GuidelineMask([bool; 6]);

impl GuidelineMask {
    pub fn all() -> Self {
        Self([true; 6])
    }

    pub fn new(enabled: [bool; 6]) -> Result<Self, RewardError> {
        if enabled.iter().any(|&b| b) {
            Ok(Self(enabled))
        } else {
            Err(RewardError::EmptyMask)
        }
    }

    pub fn without(disabled: &[Guideline]) -> Result<Self, RewardError> {
        let mut m = [true; 6];
        for g in disabled {
            m[g.index()] = false;
        }
        Self::new(m)
    }

    pub fn only(enabled: &[Guideline]) -> Result<Self, RewardError> {
        let mut m = [false; 6];
        for g in enabled {
            m[g.index()] = true;
        }
        Self::new(m)
    }

    pub fn is_enabled(&self, g: Guideline) -> bool {
        self.0[g.index()]
    }

    pub fn disabled(&self) -> Vec<Guideline> {
        Guideline::ALL.into_iter().filter(|g| !self.is_enabled(*g)).collect()
    }
}

impl Default for GuidelineMask {
    fn default() -> Self {
        Self::all()
    }
}

impl TryFrom<[bool; 6]> for GuidelineMask {
    type Error = RewardError;
    fn try_from(v: [bool; 6]) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<GuidelineMask> for [bool; 6] {
    fn from(m: GuidelineMask) -> Self {
        m.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_pair: f64,
    pub r_access: f64,
    pub r_vis: f64,
    pub r_path: f64,
    pub r_balance: f64,
    pub r_align: f64,
    pub r_composite: f64,
}

impl RewardBreakdown {
    pub fn component(&self, g: Guideline) -> f64 {
        match g {
            Guideline::Pair => self.r_pair,
            Guideline::Access => self.r_access,
            Guideline::Vis => self.r_vis,
            Guideline::Path => self.r_path,
            Guideline::Balance => self.r_balance,
            Guideline::Align => self.r_align,
        }
    }

    pub fn components(&self) -> [f64; 6] {
        Guideline::ALL.map(|g| self.component(g))
    }

    /// Mean of the four functional components.
    pub fn functional_mean(&self) -> f64 {
        Guideline::FUNCTIONAL.iter().map(|&g| self.component(g)).sum::<f64>() / 4.0
    }

    /// Mean of the two visual components.
    pub fn visual_mean(&self) -> f64 {
        Guideline::VISUAL.iter().map(|&g| self.component(g)).sum::<f64>() / 2.0
    }

    fn from_components(c: [f64; 6], mask: &GuidelineMask) -> Self {
        let enabled: Vec<f64> = Guideline::ALL
            .iter()
            .filter(|g| mask.is_enabled(**g))
            .map(|g| c[g.index()])
            .collect();
        let composite = enabled.iter().sum::<f64>() / enabled.len() as f64;
        Self {
            r_pair: c[0],
            r_access: c[1],
            r_vis: c[2],
            r_path: c[3],
            r_balance: c[4],
            r_align: c[5],
            r_composite: composite,
        }
    }
}

fn spec_of<'a>(catalog: &'a Catalog, item: &PlacedItem) -> &'a FurnitureSpec {
    catalog
        .get(&item.spec_id)
        .unwrap_or_else(|| panic!("placed item `{}` missing from catalog", item.spec_id))
}

/// Mean over complete pairs of `K_dist · K_dir − 1`.
pub fn pair_reward(placed: &[PlacedItem], pairs: &[PairRelation], room: &Room) -> f64 {
    let find = |id: &str| placed.iter().find(|p| p.spec_id == id);
    let d_diag = room.diagonal();
    let scores: Vec<f64> = pairs
        .iter()
        .filter_map(|pr| Some((find(&pr.parent_id)?, find(&pr.child_id)?, pr.alpha)))
        .map(|(p, c, alpha)| {
            let d = p.position.distance(c.position);
            let k_dist = 1.0 + (PI * d / d_diag).cos();
            let k_dir = (1.0 + alpha as f64 * p.front_world.dot(c.front_world)) / 2.0;
            k_dist * k_dir - 1.0
        })
        .collect();
    mean_or_zero(&scores)
}

/// World-frame clearance strips of one item, skipping zero offsets.
pub fn access_strips(item: &PlacedItem, spec: &FurnitureSpec) -> Vec<Aabb> {
    spec.clearances
        .directed(spec.front)
        .into_iter()
        .filter(|&(_, omega)| omega > 0.0)
        .map(|(dir, omega)| {
            sweep_strip(&item.footprint, dir.rotated(item.k), omega)
                .expect("footprints are convex and offsets positive")
                .aabb()
        })
        .collect()
}

/// Fraction of each item's access area blocked by non-paired items or by walls.
pub fn obstruction_ratios(placed: &[PlacedItem], catalog: &Catalog, room: &Room) -> Vec<f64> {
    let boxes: Vec<Aabb> = placed.iter().map(|p| p.footprint.aabb()).collect();
    placed
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let spec = spec_of(catalog, item);
            let strips = access_strips(item, spec);
            let total: f64 = strips.iter().map(Aabb::area).sum();
            if total <= 0.0 {
                return 0.0;
            }
            let obstacles: Vec<Aabb> = placed
                .iter()
                .enumerate()
                .filter(|&(j, q)| j != i && !catalog.are_paired(&item.spec_id, &q.spec_id))
                .map(|(j, _)| boxes[j])
                .collect();
            let violated: f64 = strips
                .iter()
                .map(|s| blocked_area(s, &obstacles, &room.boundary))
                .sum();
            (violated / total).clamp(0.0, 1.0)
        })
        .collect()
}

pub fn access_reward(placed: &[PlacedItem], catalog: &Catalog, room: &Room) -> f64 {
    if placed.is_empty() {
        return 0.0;
    }
    let ratios = obstruction_ratios(placed, catalog, room);
    1.0 - 2.0 / placed.len() as f64 * ratios.iter().sum::<f64>()
}

/// Wall nearest to the footprint centroid.
pub fn nearest_wall<'a>(item: &PlacedItem, room: &'a Room) -> &'a Wall {
    room.nearest_wall(item.footprint.centroid())
}

pub fn visibility_reward(placed: &[PlacedItem], room: &Room) -> f64 {
    let dots: Vec<f64> = placed
        .iter()
        .map(|p| -p.front_world.dot(nearest_wall(p, room).normal))
        .collect();
    mean_or_zero(&dots)
}

/// Euclidean distance from the item center to the closest door midpoint.
pub fn door_distance(item: &PlacedItem, room: &Room) -> f64 {
    room.doors
        .iter()
        .map(|d| item.position.distance(d.midpoint()))
        .fold(f64::INFINITY, f64::min)
}

/// Pathway reward from per-item reachability flags and door distances.
pub fn pathway_from_terms(reachable: &[bool], door_distances: &[f64], diagonal: f64) -> f64 {
    if reachable.is_empty() {
        return 0.0;
    }
    let sum: f64 = reachable
        .iter()
        .zip(door_distances)
        .map(|(&r, &d)| {
            if r {
                let kappa = (d / diagonal).powi(2);
                (-kappa).exp()
            } else {
                1.0
            }
        })
        .sum();
    1.0 - 2.0 / reachable.len() as f64 * sum
}

pub fn reach_results(placed: &[PlacedItem], room: &Room, resolution: f64) -> Vec<ReachResult> {
    let fps: Vec<&Polygon> = placed.iter().map(|p| &p.footprint).collect();
    let centers: Vec<Vec2> = placed.iter().map(|p| p.position).collect();
    reachability_all(&fps, &centers, room, resolution)
}

pub fn pathway_reward(placed: &[PlacedItem], room: &Room, resolution: f64) -> f64 {
    let reach: Vec<bool> = reach_results(placed, room, resolution)
        .iter()
        .map(ReachResult::is_reachable)
        .collect();
    let dists: Vec<f64> = placed.iter().map(|p| door_distance(p, room)).collect();
    pathway_from_terms(&reach, &dists, room.diagonal())
}

/// Area-weighted centroid and 2×2 spatial variance `[[xx, xy], [xy, yy]]`.
pub fn spatial_moments(placed: &[PlacedItem]) -> (Vec2, [[f64; 2]; 2]) {
    let total: f64 = placed.iter().map(PlacedItem::area).sum();
    let mut mean = Vec2::ZERO;
    for p in placed {
        mean += p.position * (p.area() / total);
    }
    let mut cov = [[0.0; 2]; 2];
    for p in placed {
        let w = p.area() / total;
        let d = p.position - mean;
        cov[0][0] += w * d.x * d.x;
        cov[0][1] += w * d.x * d.y;
        cov[1][1] += w * d.y * d.y;
    }
    cov[1][0] = cov[0][1];
    (mean, cov)
}

pub fn balance_reward(placed: &[PlacedItem], room: &Room) -> f64 {
    if placed.is_empty() {
        return 0.0;
    }
    let (mean, cov) = spatial_moments(placed);
    let d_sq = room.diagonal().powi(2);
    let kappa_sq = room.reference_variance();
    let frob_sq = (cov[0][0] - kappa_sq).powi(2)
        + 2.0 * cov[0][1].powi(2)
        + (cov[1][1] - kappa_sq).powi(2);
    (-(mean - room.center()).norm_sq() / d_sq).exp() + (-frob_sq / kappa_sq.powi(2)).exp() - 1.0
}

/// `cos²(2ϑ) · (1 − tanh² ω)` for one item.
pub fn alignment_term(theta: f64, omega: f64) -> f64 {
    (2.0 * theta).cos().powi(2) * (1.0 - omega.tanh().powi(2))
}

/// Gap between the wall and the item's nearest back or side face.
///
/// Only faces parallel to the wall count; the distance is measured along the
/// wall normal.
pub fn wall_gap(item: &PlacedItem, wall: &Wall) -> f64 {
    let bb = item.footprint.aabb();
    let front = item.front_world;
    let faces = [
        (Vec2::new(1.0, 0.0), Vec2::new(bb.max.x, bb.center().y)),
        (Vec2::new(-1.0, 0.0), Vec2::new(bb.min.x, bb.center().y)),
        (Vec2::new(0.0, 1.0), Vec2::new(bb.center().x, bb.max.y)),
        (Vec2::new(0.0, -1.0), Vec2::new(bb.center().x, bb.min.y)),
    ];
    let gaps = faces
        .iter()
        .filter(|(normal, _)| normal.dot(front) < 0.5 && normal.dot(wall.normal).abs() > 0.5)
        .map(|(_, mid)| (*mid - wall.a).dot(wall.normal).abs());
    let gap = gaps.fold(f64::INFINITY, f64::min);
    if gap.is_finite() {
        gap
    } else {
        item.footprint
            .vertices()
            .iter()
            .map(|v| crate::geometry::point_segment_distance(*v, wall.a, wall.b))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn alignment_reward(placed: &[PlacedItem], catalog: &Catalog, room: &Room) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for item in placed {
        let spec = spec_of(catalog, item);
        if spec.alignment_exempt {
            continue;
        }
        let wall = nearest_wall(item, room);
        let u = spec.long_axis().rotated(item.k);
        let theta = u.dot(wall.tangent).abs().min(1.0).acos();
        let omega = wall_gap(item, wall) / spec.long_axis_len();
        let w = item.area();
        num += w * alignment_term(theta, omega);
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// All six components plus the mean of the enabled ones.
pub fn composite_reward(
    placed: &[PlacedItem],
    catalog: &Catalog,
    room: &Room,
    mask: &GuidelineMask,
    resolution: f64,
) -> RewardBreakdown {
    let c = [
        pair_reward(placed, &catalog.pairs, room),
        access_reward(placed, catalog, room),
        visibility_reward(placed, room),
        pathway_reward(placed, room, resolution),
        balance_reward(placed, room),
        alignment_reward(placed, catalog, room),
    ];
    RewardBreakdown::from_components(c, mask)
}

/// Composite from precomputed components.
pub fn combine(components: [f64; 6], mask: &GuidelineMask) -> RewardBreakdown {
    RewardBreakdown::from_components(components, mask)
}

fn mean_or_zero(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// One entry of `layout.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutItem {
    pub spec_id: String,
    pub x: f64,
    pub y: f64,
    pub k: RotationIndex,
}

/// The `layout.json` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutFile {
    pub room: RoomSpec,
    pub items: Vec<LayoutItem>,
}

impl LayoutFile {
    pub fn from_placed(room: &Room, placed: &[PlacedItem]) -> Self {
        Self {
            room: room.spec().clone(),
            items: placed
                .iter()
                .map(|p| LayoutItem {
                    spec_id: p.spec_id.clone(),
                    x: p.position.x,
                    y: p.position.y,
                    k: p.k,
                })
                .collect(),
        }
    }

    /// Builds the room and resolves every item against `catalog`.
    pub fn resolve(&self, catalog: &Catalog) -> Result<(Room, Vec<PlacedItem>), RewardError> {
        let room = self.room.build()?;
        let mut placed = Vec::with_capacity(self.items.len());
        for it in &self.items {
            if !(it.x.is_finite() && it.y.is_finite()) {
                return Err(RewardError::Layout(format!("non-finite position for `{}`", it.spec_id)));
            }
            if placed.iter().any(|p: &PlacedItem| p.spec_id == it.spec_id) {
                return Err(RewardError::Layout(format!("item `{}` listed twice", it.spec_id)));
            }
            let spec = catalog.require(&it.spec_id)?;
            placed.push(PlacedItem::new(spec, Vec2::new(it.x, it.y), it.k));
        }
        Ok((room, placed))
    }
}
