//! SVG floor-plan rendering.

use std::fmt::Write;

use crate::geometry::Vec2;
use crate::rewards::{access_strips, spatial_moments, PlacedItem};
use crate::scene::{Catalog, Room};

const MARGIN: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Room centre in blue and area-weighted layout centroid in red.
    pub show_centers: bool,
    pub show_fronts: bool,
    pub show_access: bool,
    /// Pixels per metre.
    pub scale: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            show_centers: true,
            show_fronts: true,
            show_access: false,
            scale: 80.0,
        }
    }
}

struct Frame {
    min: Vec2,
    max_y: f64,
    scale: f64,
}

impl Frame {
    fn px(&self, p: Vec2) -> (f64, f64) {
        (
            MARGIN + (p.x - self.min.x) * self.scale,
            MARGIN + (self.max_y - p.y) * self.scale,
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders `layout` over `room`. Identical inputs give identical text.
pub fn render_svg(layout: &[PlacedItem], catalog: &Catalog, room: &Room, opts: &RenderOptions) -> String {
    let scale = if opts.scale > 0.0 { opts.scale } else { RenderOptions::default().scale };
    let bb = room.boundary.aabb();
    let f = Frame {
        min: bb.min,
        max_y: bb.max.y,
        scale,
    };
    let width = bb.width() * scale + 2.0 * MARGIN;
    let height = bb.height() * scale + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    if opts.show_fronts && !layout.is_empty() {
        let _ = writeln!(
            s,
            r##"<defs><marker id="arrowhead" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto"><path d="M0,0 L6,3 L0,6 z" fill="#222"/></marker></defs>"##
        );
    }
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let pts: Vec<String> = room
        .boundary
        .vertices()
        .iter()
        .map(|&v| {
            let (x, y) = f.px(v);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(
        s,
        r#"<polygon class="room" points="{}" fill="none" stroke="black" stroke-width="3"/>"#,
        pts.join(" ")
    );
    for d in &room.doors {
        let (x1, y1) = f.px(d.a);
        let (x2, y2) = f.px(d.b);
        let _ = writeln!(
            s,
            r#"<line class="door" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="green" stroke-width="6"/>"#
        );
    }

    if opts.show_access {
        for item in layout {
            let Some(spec) = catalog.get(&item.spec_id) else { continue };
            for strip in access_strips(item, spec) {
                let (x, y) = f.px(Vec2::new(strip.min.x, strip.max.y));
                let _ = writeln!(
                    s,
                    r#"<rect class="access" x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="orange" fill-opacity="0.25"/>"#,
                    strip.width() * scale,
                    strip.height() * scale
                );
            }
        }
    }

    for item in layout {
        let a = item.footprint.aabb();
        let (x, y) = f.px(Vec2::new(a.min.x, a.max.y));
        let _ = writeln!(
            s,
            r##"<rect class="item" x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="gray" fill-opacity="0.7" stroke="#333" stroke-width="1"><title>{}</title></rect>"##,
            a.width() * scale,
            a.height() * scale,
            escape(&item.spec_id)
        );
    }

    if opts.show_fronts {
        for item in layout {
            let a = item.footprint.aabb();
            let half = item.front_world.x.abs() * a.width() / 2.0 + item.front_world.y.abs() * a.height() / 2.0;
            let (x1, y1) = f.px(item.position);
            let (x2, y2) = f.px(item.position + item.front_world * (half + 0.15));
            let _ = writeln!(
                s,
                r##"<line class="front" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#222" stroke-width="2" marker-end="url(#arrowhead)"/>"##
            );
        }
    }

    if opts.show_centers {
        let (cx, cy) = f.px(room.center());
        let _ = writeln!(s, r#"<circle class="room-center" cx="{cx:.2}" cy="{cy:.2}" r="5" fill="blue"/>"#);
        if !layout.is_empty() {
            let (mean, _) = spatial_moments(layout);
            let (mx, my) = f.px(mean);
            let _ = writeln!(s, r#"<circle class="layout-centroid" cx="{mx:.2}" cy="{my:.2}" r="5" fill="red"/>"#);
        }
    }
    s.push_str("</svg>\n");
    s
}
