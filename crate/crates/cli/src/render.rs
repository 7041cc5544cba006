//! SVG rendering of a floorplan with its voltage levels and shifters.

use std::fmt::Write as _;

use voltfloor_core::floorplan::{Floorplan, Rect};

/// Module fill per voltage level, highest voltage first; wraps around.
pub const PALETTE: [&str; 8] = ["#d73027", "#fc8d59", "#fee090", "#91bfdb", "#4575b4", "#1a9850", "#762a83", "#8c510a"];

pub const SHIFTER_FILL: &str = "#202020";

pub fn level_color(level: u32) -> &'static str {
    PALETTE[(level.max(1) as usize - 1) % PALETTE.len()]
}

/// One stroked rectangle per room, one filled rectangle per module, then one
/// dark rectangle per shifter. The y axis is flipped so the chip origin sits
/// bottom-left.
pub fn emit_svg(fp: &Floorplan, levels: &[u32], shifters: &[Rect]) -> String {
    let flip = |r: &Rect| (r.x, fp.height - r.top(), r.w, r.h);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{w}" height="{h}">"#,
        w = fp.width,
        h = fp.height
    );
    for room in &fp.rooms {
        let (x, y, w, h) = flip(&room.rect);
        let _ = writeln!(
            out,
            r##"<rect class="room" x="{x}" y="{y}" width="{w}" height="{h}" fill="none" stroke="#555555" stroke-width="1" vector-effect="non-scaling-stroke"/>"##
        );
    }
    for (room, &level) in fp.rooms.iter().zip(levels) {
        let (x, y, w, h) = flip(&room.module_rect());
        let fill = level_color(level);
        let _ = writeln!(
            out,
            r#"<rect class="module" data-level="{level}" x="{x}" y="{y}" width="{w}" height="{h}" fill="{fill}"/>"#
        );
    }
    for s in shifters {
        let (x, y, w, h) = flip(s);
        let _ = writeln!(out, r#"<rect class="shifter" x="{x}" y="{y}" width="{w}" height="{h}" fill="{SHIFTER_FILL}"/>"#);
    }
    out.push_str("</svg>\n");
    out
}
