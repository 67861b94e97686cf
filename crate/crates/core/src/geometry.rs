//! Planar primitives for furniture footprints.
//!
//! Footprints are simple counterclockwise polygons in meters. Rotations are
//! restricted to quarter turns, so every footprint built from the catalog
//! stays axis-aligned; the routines here nevertheless work on general
//! polygons where that is cheap to support.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pathfind::OccupancyGrid;

/// Areas below this are treated as zero when testing overlap and containment.
pub const AREA_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon must be counterclockwise with positive area (signed area {0})")]
    NonPositiveArea(f64),
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("rotation index must be in 0..=3, got {0}")]
    InvalidRotation(i64),
    #[error("sweep offset must be positive, got {0}")]
    NonPositiveOffset(f64),
    #[error("sweep direction must have unit norm, got norm {0}")]
    NonUnitDirection(f64),
    #[error("sweeping requires a convex polygon")]
    NonConvex,
    #[error("grid resolution must be positive, got {0}")]
    NonPositiveResolution(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Counterclockwise quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    pub fn rotated(self, k: RotationIndex) -> Vec2 {
        let mut v = self;
        for _ in 0..k.get() {
            v = v.perp();
        }
        v
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Number of counterclockwise quarter turns applied to a footprint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct RotationIndex(u8);

impl RotationIndex {
    pub const ALL: [RotationIndex; 4] = [
        RotationIndex(0),
        RotationIndex(1),
        RotationIndex(2),
        RotationIndex(3),
    ];

    pub fn new(k: i64) -> Result<Self, GeometryError> {
        if (0..4).contains(&k) {
            Ok(Self(k as u8))
        } else {
            Err(GeometryError::InvalidRotation(k))
        }
    }

    pub fn wrapping(k: i64) -> Self {
        Self(k.rem_euclid(4) as u8)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn compose(self, other: RotationIndex) -> RotationIndex {
        RotationIndex((self.0 + other.0) % 4)
    }
}

impl TryFrom<i64> for RotationIndex {
    type Error = GeometryError;
    fn try_from(k: i64) -> Result<Self, Self::Error> {
        RotationIndex::new(k)
    }
}

impl From<RotationIndex> for i64 {
    fn from(k: RotationIndex) -> i64 {
        k.0 as i64
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) * 0.5
    }

    pub fn intersect(&self, other: &Aabb) -> Option<Aabb> {
        let min = Vec2::new(self.min.x.max(other.min.x), self.min.y.max(other.min.y));
        let max = Vec2::new(self.max.x.min(other.max.x), self.max.y.min(other.max.y));
        (max.x > min.x && max.y > min.y).then_some(Aabb { min, max })
    }

    pub fn to_polygon(&self) -> Polygon {
        Polygon {
            vertices: vec![
                self.min,
                Vec2::new(self.max.x, self.min.y),
                self.max,
                Vec2::new(self.min.x, self.max.y),
            ],
        }
    }
}

/// Simple polygon with counterclockwise vertex order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<Vec2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let poly = Self { vertices };
        let signed = poly.signed_area();
        if signed <= 0.0 {
            return Err(GeometryError::NonPositiveArea(signed));
        }
        if let Some((i, j)) = poly.find_self_intersection() {
            return Err(GeometryError::SelfIntersecting(i, j));
        }
        Ok(poly)
    }

    /// Origin-centered axis-aligned rectangle, `width` along x and `depth` along y.
    pub fn rect(width: f64, depth: f64) -> Self {
        let (hw, hd) = (width / 2.0, depth / 2.0);
        Aabb::new(Vec2::new(-hw, -hd), Vec2::new(hw, hd)).to_polygon()
    }

    pub fn from_bounds(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Aabb::new(Vec2::new(x0, y0), Vec2::new(x1, y1)).to_polygon()
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Iterates over directed edges `(a, b)` in vertex order.
    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Area centroid.
    pub fn centroid(&self) -> Vec2 {
        let mut acc = Vec2::ZERO;
        let mut a2 = 0.0;
        for (p, q) in self.edges() {
            let c = p.cross(q);
            a2 += c;
            acc += (p + q) * c;
        }
        acc * (1.0 / (3.0 * a2))
    }

    pub fn aabb(&self) -> Aabb {
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        Aabb::new(min, max)
    }

    pub fn translated(&self, offset: Vec2) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|&v| v + offset).collect(),
        }
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            (b - a).cross(c - b) >= -1e-12
        })
    }

    /// True when every edge is horizontal or vertical.
    pub fn is_rectilinear(&self) -> bool {
        self.edges()
            .all(|(a, b)| (a.x - b.x).abs() < 1e-12 || (a.y - b.y).abs() < 1e-12)
    }

    /// Even-odd point test; points exactly on an edge may land either side.
    pub fn contains_point(&self, p: Vec2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    fn find_self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            for j in (i + 1)..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = (self.vertices[j], self.vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

fn shoelace(vs: &[Vec2]) -> f64 {
    let n = vs.len();
    let mut s = 0.0;
    for i in 0..n {
        s += vs[i].cross(vs[(i + 1) % n]);
    }
    s / 2.0
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) - 1e-12
        && p.x <= a.x.max(b.x) + 1e-12
        && p.y >= a.y.min(b.y) - 1e-12
        && p.y <= a.y.max(b.y) + 1e-12
}

fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Rotates every vertex counterclockwise by `k` quarter turns about the origin.
pub fn rotate(poly: &Polygon, k: RotationIndex) -> Polygon {
    Polygon {
        vertices: poly.vertices.iter().map(|v| v.rotated(k)).collect(),
    }
}

/// Rotate about the origin, then translate by `x`.
pub fn transform(x: Vec2, k: RotationIndex, poly: &Polygon) -> Polygon {
    Polygon {
        vertices: poly.vertices.iter().map(|v| v.rotated(k) + x).collect(),
    }
}

/// Clips `subject` against the convex polygon `clip` (Sutherland-Hodgman).
///
/// The subject may be non-convex; the output can then contain zero-width
/// bridges, which do not affect its area.
fn clip_convex(subject: &[Vec2], clip: &Polygon) -> Vec<Vec2> {
    let mut output = subject.to_vec();
    for (a, b) in clip.edges() {
        if output.is_empty() {
            break;
        }
        let input = std::mem::take(&mut output);
        let inside = |p: Vec2| orient(a, b, p) >= 0.0;
        let n = input.len();
        for i in 0..n {
            let cur = input[i];
            let prev = input[(i + n - 1) % n];
            let (cin, pin) = (inside(cur), inside(prev));
            if cin {
                if !pin {
                    output.push(line_intersection(prev, cur, a, b));
                }
                output.push(cur);
            } else if pin {
                output.push(line_intersection(prev, cur, a, b));
            }
        }
    }
    output
}

fn line_intersection(p: Vec2, q: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let r = q - p;
    let s = b - a;
    let denom = r.cross(s);
    if denom.abs() < 1e-300 {
        return p;
    }
    let t = (a - p).cross(s) / denom;
    p + r * t
}

/// Ear-clipping triangulation of a simple counterclockwise polygon.
fn triangulate(poly: &Polygon) -> Vec<Polygon> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let vs = &poly.vertices;
    let mut tris = Vec::with_capacity(poly.len().saturating_sub(2));
    let mut guard = 0;
    while idx.len() > 3 && guard < 10_000 {
        guard += 1;
        let n = idx.len();
        let mut clipped = false;
        for i in 0..n {
            let (ia, ib, ic) = (idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]);
            let (a, b, c) = (vs[ia], vs[ib], vs[ic]);
            if orient(a, b, c) <= 1e-15 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                j != ia
                    && j != ib
                    && j != ic
                    && orient(a, b, vs[j]) >= 0.0
                    && orient(b, c, vs[j]) >= 0.0
                    && orient(c, a, vs[j]) >= 0.0
            });
            if blocked {
                continue;
            }
            tris.push(Polygon {
                vertices: vec![a, b, c],
            });
            idx.remove(i);
            clipped = true;
            break;
        }
        if !clipped {
            // Only collinear remnants are left.
            break;
        }
    }
    if idx.len() == 3 {
        let t = vec![vs[idx[0]], vs[idx[1]], vs[idx[2]]];
        if shoelace(&t) > 0.0 {
            tris.push(Polygon { vertices: t });
        }
    }
    tris
}

/// Area of `p ∩ q`.
pub fn intersection_area(p: &Polygon, q: &Polygon) -> f64 {
    let (pb, qb) = (p.aabb(), q.aabb());
    if pb.intersect(&qb).is_none() {
        return 0.0;
    }
    let area = if q.is_convex() {
        shoelace(&clip_convex(&p.vertices, q))
    } else if p.is_convex() {
        shoelace(&clip_convex(&q.vertices, p))
    } else {
        triangulate(q)
            .iter()
            .map(|t| shoelace(&clip_convex(&p.vertices, t)))
            .sum()
    };
    area.max(0.0).min(p.area()).min(q.area())
}

/// Closed containment: `poly` lies inside `room_poly` or on its boundary.
pub fn contains(room_poly: &Polygon, poly: &Polygon) -> bool {
    poly.area() - intersection_area(poly, room_poly) <= AREA_EPS
}

/// Clearance strip swept from `poly` along `dir` by `offset`, excluding `poly` itself.
///
/// For an axis-aligned rectangle this is the rectangle of depth `offset`
/// abutting the face whose outward normal is `dir`.
pub fn sweep_strip(poly: &Polygon, dir: Vec2, offset: f64) -> Result<Polygon, GeometryError> {
    if offset.is_nan() || offset <= 0.0 {
        return Err(GeometryError::NonPositiveOffset(offset));
    }
    if (dir.norm() - 1.0).abs() > 1e-9 {
        return Err(GeometryError::NonUnitDirection(dir.norm()));
    }
    if !poly.is_convex() {
        return Err(GeometryError::NonConvex);
    }
    let vs = &poly.vertices;
    let n = vs.len();
    // An edge faces the sweep when its outward normal has positive projection on `dir`.
    let facing: Vec<bool> = (0..n)
        .map(|i| {
            let e = vs[(i + 1) % n] - vs[i];
            Vec2::new(e.y, -e.x).dot(dir) > 1e-12
        })
        .collect();
    let start = (0..n)
        .find(|&i| facing[i] && !facing[(i + n - 1) % n])
        .unwrap_or(0);
    let mut chain = vec![vs[start]];
    let mut i = start;
    while facing[i] {
        i = (i + 1) % n;
        chain.push(vs[i]);
        if i == start {
            break;
        }
    }
    let shift = dir * offset;
    let mut out: Vec<Vec2> = chain.iter().rev().copied().collect();
    out.extend(chain.iter().map(|&v| v + shift));
    let mut strip = Polygon { vertices: out };
    if strip.signed_area() < 0.0 {
        strip.vertices.reverse();
    }
    Ok(strip)
}

/// Exact area of `region ∩ (⋃ obstacles ∪ (ℝ² ∖ boundary))` for rectilinear inputs.
///
/// Uses coordinate compression: every breakpoint of the obstacle boxes and
/// the boundary vertices splits `region` into cells whose status is uniform.
pub fn blocked_area(region: &Aabb, obstacles: &[Aabb], boundary: &Polygon) -> f64 {
    let mut xs = vec![region.min.x, region.max.x];
    let mut ys = vec![region.min.y, region.max.y];
    let clipped: Vec<Aabb> = obstacles.iter().filter_map(|o| o.intersect(region)).collect();
    for o in &clipped {
        xs.extend([o.min.x, o.max.x]);
        ys.extend([o.min.y, o.max.y]);
    }
    for v in boundary.vertices() {
        if v.x > region.min.x && v.x < region.max.x {
            xs.push(v.x);
        }
        if v.y > region.min.y && v.y < region.max.y {
            ys.push(v.y);
        }
    }
    let sort_dedup = |v: &mut Vec<f64>| {
        v.sort_by(|a, b| a.total_cmp(b));
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    };
    sort_dedup(&mut xs);
    sort_dedup(&mut ys);
    let mut area = 0.0;
    for wx in xs.windows(2) {
        for wy in ys.windows(2) {
            let c = Vec2::new((wx[0] + wx[1]) / 2.0, (wy[0] + wy[1]) / 2.0);
            let covered = !boundary.contains_point(c)
                || clipped
                    .iter()
                    .any(|o| c.x > o.min.x && c.x < o.max.x && c.y > o.min.y && c.y < o.max.y);
            if covered {
                area += (wx[1] - wx[0]) * (wy[1] - wy[0]);
            }
        }
    }
    area
}

/// Marks grid cells whose center lies inside any polygon or outside `boundary`.
///
/// The grid covers the bounding box of `boundary` with `ceil(extent / resolution)` cells per axis.
pub fn rasterize(
    polys: &[Polygon],
    boundary: &Polygon,
    resolution: f64,
) -> Result<OccupancyGrid, GeometryError> {
    if resolution.is_nan() || resolution <= 0.0 {
        return Err(GeometryError::NonPositiveResolution(resolution));
    }
    let bb = boundary.aabb();
    let cols = ((bb.width() / resolution) - 1e-9).ceil().max(1.0) as usize;
    let rows = ((bb.height() / resolution) - 1e-9).ceil().max(1.0) as usize;
    Ok(rasterize_onto(polys, boundary, bb.min, resolution, rows, cols))
}

/// Rasterizes onto an explicit grid frame; cells outside `boundary` are set.
pub fn rasterize_onto(
    polys: &[Polygon],
    boundary: &Polygon,
    origin: Vec2,
    resolution: f64,
    rows: usize,
    cols: usize,
) -> OccupancyGrid {
    let mut grid = OccupancyGrid::new(rows, cols, resolution, origin);
    for r in 0..rows {
        for c in 0..cols {
            if !boundary.contains_point(grid.cell_center(r, c)) {
                grid.set(r, c, true);
            }
        }
    }
    for p in polys {
        mark_polygon(&mut grid, p, true);
    }
    grid
}

/// Sets (or clears) every cell of `grid` whose center is inside `poly`.
pub fn mark_polygon(grid: &mut OccupancyGrid, poly: &Polygon, value: bool) {
    let bb = poly.aabb();
    let Some((r0, r1, c0, c1)) = grid.cell_span(&bb) else {
        return;
    };
    for r in r0..=r1 {
        for c in c0..=c1 {
            if poly.contains_point(grid.cell_center(r, c)) {
                grid.set(r, c, value);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polygon {
        Polygon::from_bounds(0.0, 0.0, 1.0, 1.0)
    }

    fn same_vertex_set(a: &Polygon, b: &[Vec2]) -> bool {
        a.len() == b.len()
            && b.iter().all(|q| {
                a.vertices()
                    .iter()
                    .any(|p| (p.x - q.x).abs() < 1e-12 && (p.y - q.y).abs() < 1e-12)
            })
    }

    #[test]
    fn rotate_rect_quarter_turn() {
        let r = Polygon::rect(2.0, 1.0);
        let q = rotate(&r, RotationIndex::new(1).unwrap());
        assert!(same_vertex_set(
            &q,
            &[
                Vec2::new(0.5, -1.0),
                Vec2::new(0.5, 1.0),
                Vec2::new(-0.5, 1.0),
                Vec2::new(-0.5, -1.0)
            ]
        ));
        assert!(q.signed_area() > 0.0);
    }

    #[test]
    fn rotate_identity_and_half_turn() {
        let p = Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.3),
            Vec2::new(1.0, 1.5),
        ])
        .unwrap();
        assert_eq!(rotate(&p, RotationIndex::new(0).unwrap()), p);
        let h = rotate(&p, RotationIndex::new(2).unwrap());
        for (a, b) in p.vertices().iter().zip(h.vertices()) {
            assert_eq!(*b, -*a);
        }
    }

    #[test]
    fn transform_examples() {
        let sq = Polygon::rect(1.0, 1.0);
        let t = transform(Vec2::new(3.0, 4.0), RotationIndex::new(0).unwrap(), &sq);
        assert!((t.centroid() - Vec2::new(3.0, 4.0)).norm() < 1e-12);
        assert_eq!(transform(Vec2::ZERO, RotationIndex::new(0).unwrap(), &sq), sq);
        let t = transform(
            Vec2::new(1.0, 1.0),
            RotationIndex::new(1).unwrap(),
            &Polygon::rect(2.0, 1.0),
        );
        let bb = t.aabb();
        assert!((bb.width() - 1.0).abs() < 1e-12 && (bb.height() - 2.0).abs() < 1e-12);
        assert!((bb.center() - Vec2::new(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn intersection_examples() {
        let a = unit_square();
        let b = Polygon::from_bounds(0.5, 0.5, 1.5, 1.5);
        assert!((intersection_area(&a, &b) - 0.25).abs() < 1e-12);
        assert!((intersection_area(&b, &a) - 0.25).abs() < 1e-12);
        let far = Polygon::from_bounds(3.0, 3.0, 4.0, 4.0);
        assert_eq!(intersection_area(&a, &far), 0.0);
        assert!((intersection_area(&a, &a) - 1.0).abs() < 1e-12);
        // Shared edge only.
        let right = Polygon::from_bounds(1.0, 0.0, 2.0, 1.0);
        assert!(intersection_area(&a, &right) <= AREA_EPS);
    }

    #[test]
    fn intersection_with_concave_room() {
        // L-shape: 10x10 minus the top-right 5x5 quadrant.
        let l = Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 0.0),
            Vec2::new(10.0, 5.0),
            Vec2::new(5.0, 5.0),
            Vec2::new(5.0, 10.0),
            Vec2::new(0.0, 10.0),
        ])
        .unwrap();
        let probe = Polygon::from_bounds(4.0, 4.0, 6.0, 6.0);
        assert!((intersection_area(&probe, &l) - 3.0).abs() < 1e-12);
        assert!((intersection_area(&l, &probe) - 3.0).abs() < 1e-12);
        assert!(!contains(&l, &probe));
        assert!(contains(&l, &Polygon::from_bounds(1.0, 1.0, 2.0, 9.0)));
    }

    #[test]
    fn containment_examples() {
        let room = Polygon::from_bounds(0.0, 0.0, 10.0, 10.0);
        assert!(contains(&room, &Polygon::from_bounds(4.0, 4.0, 5.0, 5.0)));
        assert!(!contains(&room, &Polygon::from_bounds(9.5, 4.0, 10.5, 5.0)));
        assert!(contains(&room, &Polygon::from_bounds(9.0, 0.0, 10.0, 1.0)));
    }

    #[test]
    fn sweep_examples() {
        let sq = unit_square();
        let s = sweep_strip(&sq, Vec2::new(1.0, 0.0), 0.5).unwrap();
        assert!((s.area() - 0.5).abs() < 1e-12);
        let bb = s.aabb();
        assert_eq!((bb.min.x, bb.max.x, bb.min.y, bb.max.y), (1.0, 1.5, 0.0, 1.0));
        let s = sweep_strip(&sq, Vec2::new(0.0, -1.0), 1.0).unwrap();
        let bb = s.aabb();
        assert_eq!((bb.min.x, bb.max.x, bb.min.y, bb.max.y), (0.0, 1.0, -1.0, 0.0));
        let s = sweep_strip(&Polygon::rect(2.0, 1.0), Vec2::new(0.0, 1.0), 0.3).unwrap();
        assert!((s.area() - 0.6).abs() < 1e-12);
        assert_eq!(
            sweep_strip(&sq, Vec2::new(1.0, 0.0), 0.0),
            Err(GeometryError::NonPositiveOffset(0.0))
        );
        assert!(sweep_strip(&sq, Vec2::new(1.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn rasterize_examples() {
        let room = Polygon::from_bounds(0.0, 0.0, 10.0, 10.0);
        let g = rasterize(&[], &room, 1.0).unwrap();
        assert_eq!((g.rows(), g.cols()), (10, 10));
        assert_eq!(g.count_set(), 0);
        let g = rasterize(&[Polygon::from_bounds(0.0, 0.0, 2.0, 2.0)], &room, 1.0).unwrap();
        assert_eq!(g.count_set(), 4);
        assert!(rasterize(&[], &room, 0.0).is_err());
    }

    #[test]
    fn blocked_area_counts_exterior_and_obstacles() {
        let room = Polygon::from_bounds(0.0, 0.0, 10.0, 10.0);
        let region = Aabb::new(Vec2::new(9.0, 0.0), Vec2::new(11.0, 1.0));
        assert!((blocked_area(&region, &[], &room) - 1.0).abs() < 1e-12);
        let obs = Aabb::new(Vec2::new(8.5, 0.0), Vec2::new(9.5, 0.5));
        assert!((blocked_area(&region, &[obs], &room) - 1.25).abs() < 1e-12);
    }

    #[test]
    fn invalid_polygons_rejected() {
        assert!(matches!(
            Polygon::new(vec![Vec2::ZERO, Vec2::new(1.0, 0.0)]),
            Err(GeometryError::TooFewVertices(2))
        ));
        let cw = vec![Vec2::ZERO, Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0)];
        assert!(matches!(Polygon::new(cw), Err(GeometryError::NonPositiveArea(_))));
        let bow = vec![
            Vec2::ZERO,
            Vec2::new(4.0, 0.0),
            Vec2::new(4.0, 3.0),
            Vec2::new(1.0, -1.0),
            Vec2::new(0.0, 3.0),
        ];
        assert!(matches!(Polygon::new(bow), Err(GeometryError::SelfIntersecting(..))));
        assert!(RotationIndex::new(4).is_err());
    }
}
