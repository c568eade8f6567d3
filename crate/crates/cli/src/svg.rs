//! Renders an assembly as unit squares, y axis pointing up.

use std::fmt::Write as _;

use quipu_core::path_algebra::{Direction, Vec2};
use quipu_core::{Assembly, Tas, Window};

const CELL: i64 = 48;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render(tas: &Tas, asm: &Assembly, window: &Window) -> String {
    let w = window.width() * CELL;
    let h = window.height() * CELL;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="monospace">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (p, t) in &asm.tiles {
        if !window.contains(*p) {
            continue;
        }
        let x = (p.x - window.x_min) * CELL;
        let y = (window.y_max - p.y) * CELL;
        let seed = *p == Vec2::ZERO;
        let (stroke, width) = if seed { ("crimson", 4) } else { ("#444", 1) };
        let _ = writeln!(
            out,
            r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="#f4f1e8" stroke="{stroke}" stroke-width="{width}"/>"##
        );
        let (cx, cy) = (x + CELL / 2, y + CELL / 2);
        let _ = writeln!(
            out,
            r#"<text x="{cx}" y="{}" font-size="14" text-anchor="middle">{}</text>"#,
            cy + 5,
            escape(tas.name(*t))
        );
        for d in Direction::ALL {
            let Some(g) = tas.glue_name(tas.tile(*t).glue(d)) else { continue };
            let v = d.vector();
            let (gx, gy) = (cx + v.x * (CELL / 2 - 7), cy - v.y * (CELL / 2 - 7) + 3);
            let _ = writeln!(
                out,
                r##"<text x="{gx}" y="{gy}" font-size="8" fill="#2a5599" text-anchor="middle">{}</text>"##,
                escape(g)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
