//! Doorway reachability on a binary occupancy grid.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::geometry::{mark_polygon, point_segment_distance, rasterize, Aabb, Polygon, Vec2};
use crate::scene::Room;

/// Row-major binary grid; row 0 is the lowest `y` band.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyGrid {
    rows: usize,
    cols: usize,
    resolution_bits: u64,
    origin_bits: (u64, u64),
    cells: Vec<u8>,
}

impl OccupancyGrid {
    pub fn new(rows: usize, cols: usize, resolution: f64, origin: Vec2) -> Self {
        assert!(resolution > 0.0, "grid resolution must be positive");
        Self {
            rows,
            cols,
            resolution_bits: resolution.to_bits(),
            origin_bits: (origin.x.to_bits(), origin.y.to_bits()),
            cells: vec![0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn resolution(&self) -> f64 {
        f64::from_bits(self.resolution_bits)
    }

    pub fn origin(&self) -> Vec2 {
        Vec2::new(f64::from_bits(self.origin_bits.0), f64::from_bits(self.origin_bits.1))
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn index(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.cells[self.index(r, c)] != 0
    }

    pub fn set(&mut self, r: usize, c: usize, occupied: bool) {
        let i = self.index(r, c);
        self.cells[i] = occupied as u8;
    }

    pub fn count_set(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    pub fn cell_center(&self, r: usize, c: usize) -> Vec2 {
        let res = self.resolution();
        let o = self.origin();
        Vec2::new(o.x + (c as f64 + 0.5) * res, o.y + (r as f64 + 0.5) * res)
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let res = self.resolution();
        let o = self.origin();
        let c = ((p.x - o.x) / res).floor();
        let r = ((p.y - o.y) / res).floor();
        if c < 0.0 || r < 0.0 || c >= self.cols as f64 || r >= self.rows as f64 {
            return None;
        }
        Some((r as usize, c as usize))
    }

    /// Inclusive `(r0, r1, c0, c1)` range of cells whose centers can fall inside `bb`.
    pub fn cell_span(&self, bb: &Aabb) -> Option<(usize, usize, usize, usize)> {
        if self.rows == 0 || self.cols == 0 {
            return None;
        }
        let res = self.resolution();
        let o = self.origin();
        let lo = |v: f64, o: f64| ((v - o) / res - 0.5).ceil().max(0.0);
        let hi = |v: f64, o: f64, n: usize| ((v - o) / res - 0.5).floor().min(n as f64 - 1.0);
        let (c0, c1) = (lo(bb.min.x, o.x), hi(bb.max.x, o.x, self.cols));
        let (r0, r1) = (lo(bb.min.y, o.y), hi(bb.max.y, o.y, self.rows));
        if c1 < c0 || r1 < r0 {
            return None;
        }
        Some((r0 as usize, r1 as usize, c0 as usize, c1 as usize))
    }

    fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = (idx / self.cols, idx % self.cols);
        let up = (r + 1 < self.rows).then(|| idx + self.cols);
        let down = (r > 0).then(|| idx - self.cols);
        let right = (c + 1 < self.cols).then(|| idx + 1);
        let left = (c > 0).then(|| idx - 1);
        [up, down, right, left].into_iter().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReachResult {
    Reachable(f64),
    Unreachable,
}

impl ReachResult {
    pub fn is_reachable(&self) -> bool {
        matches!(self, ReachResult::Reachable(_))
    }

    pub fn distance(&self) -> Option<f64> {
        match self {
            ReachResult::Reachable(d) => Some(*d),
            ReachResult::Unreachable => None,
        }
    }
}

/// Shortest 4-connected path length (in meters) from `start` to `goal`.
pub fn astar(grid: &OccupancyGrid, start: (usize, usize), goal: (usize, usize)) -> ReachResult {
    astar_multi(grid, &[start], goal)
}

/// A* from the nearest of several start cells; occupied starts are ignored.
///
/// Manhattan heuristic, unit step cost. Ties in the open set are broken by
/// f-score, then by row-major cell index.
pub fn astar_multi(grid: &OccupancyGrid, starts: &[(usize, usize)], goal: (usize, usize)) -> ReachResult {
    let in_bounds = |(r, c): (usize, usize)| r < grid.rows && c < grid.cols;
    if !in_bounds(goal) || grid.get(goal.0, goal.1) {
        return ReachResult::Unreachable;
    }
    let goal_idx = grid.index(goal.0, goal.1);
    let h = |idx: usize| {
        let (r, c) = (idx / grid.cols, idx % grid.cols);
        (r.abs_diff(goal.0) + c.abs_diff(goal.1)) as u32
    };
    let mut g = vec![u32::MAX; grid.cells.len()];
    let mut closed = vec![false; grid.cells.len()];
    let mut open = BinaryHeap::new();
    for &s in starts {
        if !in_bounds(s) || grid.get(s.0, s.1) {
            continue;
        }
        let idx = grid.index(s.0, s.1);
        if g[idx] != 0 {
            g[idx] = 0;
            open.push(Reverse((h(idx), idx)));
        }
    }
    while let Some(Reverse((_, idx))) = open.pop() {
        if closed[idx] {
            continue;
        }
        if idx == goal_idx {
            return ReachResult::Reachable(g[idx] as f64 * grid.resolution());
        }
        closed[idx] = true;
        let next_g = g[idx] + 1;
        for nb in grid.neighbors(idx) {
            if grid.cells[nb] != 0 || closed[nb] || next_g >= g[nb] {
                continue;
            }
            g[nb] = next_g;
            open.push(Reverse((next_g + h(nb), nb)));
        }
    }
    ReachResult::Unreachable
}

/// Free cells inside the room whose centers lie within half a cell of a door segment.
pub fn door_cells(grid: &OccupancyGrid, room: &Room) -> Vec<(usize, usize)> {
    let res = grid.resolution();
    let reach = 0.5 * res + 1e-9;
    let mut out = Vec::new();
    for door in &room.doors {
        let bb = Aabb::new(
            Vec2::new(door.a.x.min(door.b.x) - res, door.a.y.min(door.b.y) - res),
            Vec2::new(door.a.x.max(door.b.x) + res, door.a.y.max(door.b.y) + res),
        );
        let Some((r0, r1, c0, c1)) = grid.cell_span(&bb) else {
            continue;
        };
        for r in r0..=r1 {
            for c in c0..=c1 {
                let p = grid.cell_center(r, c);
                if point_segment_distance(p, door.a, door.b) <= reach
                    && room.boundary.contains_point(p)
                    && !out.contains(&(r, c))
                {
                    out.push((r, c));
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Grid with the room exterior and every footprint marked occupied.
pub fn obstacle_grid(footprints: &[&Polygon], room: &Room, resolution: f64) -> OccupancyGrid {
    let owned: Vec<Polygon> = footprints.iter().map(|p| (*p).clone()).collect();
    rasterize(&owned, &room.boundary, resolution).expect("positive resolution")
}

/// Door-to-center distance for the item at `query` among `footprints`.
///
/// The query footprint is left free so its center cell is a valid goal.
pub fn reachability(
    footprints: &[&Polygon],
    centers: &[Vec2],
    query: usize,
    room: &Room,
    resolution: f64,
) -> ReachResult {
    let others: Vec<&Polygon> = footprints
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != query)
        .map(|(_, p)| *p)
        .collect();
    let grid = obstacle_grid(&others, room, resolution);
    reach_on_grid(&grid, room, centers[query])
}

/// All-items variant: rasterizes the exterior once and frees/restores per query.
pub fn reachability_all(
    footprints: &[&Polygon],
    centers: &[Vec2],
    room: &Room,
    resolution: f64,
) -> Vec<ReachResult> {
    let base = obstacle_grid(&[], room, resolution);
    (0..footprints.len())
        .map(|q| {
            let mut grid = base.clone();
            for (i, p) in footprints.iter().enumerate() {
                if i != q {
                    mark_polygon(&mut grid, p, true);
                }
            }
            reach_on_grid(&grid, room, centers[q])
        })
        .collect()
}

fn reach_on_grid(grid: &OccupancyGrid, room: &Room, center: Vec2) -> ReachResult {
    let Some(goal) = grid.cell_of(center) else {
        return ReachResult::Unreachable;
    };
    let doors = door_cells(grid, room);
    astar_multi(grid, &doors, goal)
}
