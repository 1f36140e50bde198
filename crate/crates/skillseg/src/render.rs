//! Rendering of timelines as side-by-side strips (plain text or SVG) with
//! per-segment class and hold duration, plus per-skill hold-time listings.

use crate::timeline::{SkillClass, Timeline};

/// Characters per strip row in the text renderer.
const TEXT_STRIP_WIDTH: usize = 64;

const SVG_WIDTH: usize = 900;
const SVG_ROW_HEIGHT: usize = 46;
const SVG_STRIP_HEIGHT: usize = 20;
const SVG_MARGIN: usize = 12;

fn class_letter(class: SkillClass) -> char {
    match class {
        SkillClass::BackLever => 'B',
        SkillClass::FrontLever => 'F',
        SkillClass::HumanFlag => 'G',
        SkillClass::IronCross => 'I',
        SkillClass::Maltese => 'M',
        SkillClass::OneArmFrontLever => 'O',
        SkillClass::OneArmHandstand => 'H',
        SkillClass::Planche => 'P',
        SkillClass::VSit => 'V',
        SkillClass::None => '.',
    }
}

fn class_color(class: SkillClass) -> &'static str {
    match class {
        SkillClass::BackLever => "#4e79a7",
        SkillClass::FrontLever => "#f28e2b",
        SkillClass::HumanFlag => "#e15759",
        SkillClass::IronCross => "#76b7b2",
        SkillClass::Maltese => "#59a14f",
        SkillClass::OneArmFrontLever => "#edc948",
        SkillClass::OneArmHandstand => "#b07aa1",
        SkillClass::Planche => "#ff9da7",
        SkillClass::VSit => "#9c755f",
        SkillClass::None => "#d3d3d3",
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Hold durations of the non-`NONE` segments, in seconds rounded to 0.01.
pub fn hold_listing(timeline: &Timeline) -> Vec<(SkillClass, f64)> {
    timeline
        .segments
        .iter()
        .filter(|s| !s.class.is_background())
        .map(|s| (s.class, round2(s.duration_secs(timeline.fps))))
        .collect()
}

/// Plain-text strips, one block per timeline, sharing one frame scale.
pub fn render_text(timelines: &[Timeline]) -> String {
    let max_frames = timelines.iter().map(|t| t.n_frames).max().unwrap_or(1);
    let mut out = String::new();
    for tl in timelines {
        let cols = (TEXT_STRIP_WIDTH * tl.n_frames).div_ceil(max_frames).max(1);
        out.push_str(&format!(
            "{}  {} frames @ {:.2} fps  (total hold {:.2} s)\n",
            if tl.video_id.is_empty() { "<unnamed>" } else { &tl.video_id },
            tl.n_frames,
            tl.fps,
            round2(tl.total_hold_secs()),
        ));

        let mut strip = String::with_capacity(cols);
        for col in 0..cols {
            let frame = col * tl.n_frames / cols;
            let class = tl
                .segments
                .iter()
                .find(|s| frame >= s.start && frame <= s.end)
                .map(|s| s.class)
                .unwrap_or(SkillClass::None);
            strip.push(class_letter(class));
        }
        out.push_str("  |");
        out.push_str(&strip);
        out.push_str("|\n  ");
        for seg in &tl.segments {
            out.push_str(&format!(
                "[{} {}-{} {:.2}s] ",
                seg.class,
                seg.start,
                seg.end,
                round2(seg.duration_secs(tl.fps))
            ));
        }
        out.push('\n');
        let holds = hold_listing(tl);
        if holds.is_empty() {
            out.push_str("  skills: none\n");
        } else {
            out.push_str("  skills: ");
            out.push_str(
                &holds
                    .iter()
                    .map(|(c, s)| format!("{c} {s:.2} s"))
                    .collect::<Vec<_>>()
                    .join(", "),
            );
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// SVG strips, one row per timeline, sharing one frame scale, with a class
/// legend and per-skill hold listing underneath.
pub fn render_svg(timelines: &[Timeline]) -> String {
    let max_frames = timelines.iter().map(|t| t.n_frames).max().unwrap_or(1) as f64;
    let strip_w = (SVG_WIDTH - 2 * SVG_MARGIN) as f64;
    let rows_h = timelines.len() * SVG_ROW_HEIGHT;
    let legend_h = 24;
    let listing_h = timelines.iter().map(|t| hold_listing(t).len()).sum::<usize>() * 16 + 24;
    let height = 2 * SVG_MARGIN + rows_h + legend_h + listing_h;

    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{height}" font-family="monospace" font-size="11">"#
    );
    svg.push('\n');

    for (row, tl) in timelines.iter().enumerate() {
        let y = SVG_MARGIN + row * SVG_ROW_HEIGHT;
        svg.push_str(&format!(
            r#"<text x="{SVG_MARGIN}" y="{}">{} ({} frames @ {:.0} fps, hold {:.2} s)</text>"#,
            y + 10,
            xml_escape(if tl.video_id.is_empty() { "<unnamed>" } else { &tl.video_id }),
            tl.n_frames,
            tl.fps,
            round2(tl.total_hold_secs()),
        ));
        svg.push('\n');
        let y_strip = y + 16;
        for seg in &tl.segments {
            let x = SVG_MARGIN as f64 + seg.start as f64 / max_frames * strip_w;
            let w = seg.duration_frames() as f64 / max_frames * strip_w;
            svg.push_str(&format!(
                r##"<rect x="{x:.1}" y="{y_strip}" width="{w:.1}" height="{SVG_STRIP_HEIGHT}" fill="{}" stroke="#333" stroke-width="0.5"><title>{} {}-{} ({:.2} s)</title></rect>"##,
                class_color(seg.class),
                seg.class,
                seg.start,
                seg.end,
                round2(seg.duration_secs(tl.fps)),
            ));
            svg.push('\n');
            // label segments wide enough to hold text
            if w > 34.0 {
                svg.push_str(&format!(
                    r#"<text x="{:.1}" y="{}" text-anchor="middle">{} {:.2}s</text>"#,
                    x + w / 2.0,
                    y_strip + SVG_STRIP_HEIGHT - 6,
                    seg.class,
                    round2(seg.duration_secs(tl.fps)),
                ));
                svg.push('\n');
            }
        }
    }

    let mut y = SVG_MARGIN + rows_h + 12;
    let mut x = SVG_MARGIN;
    for class in SkillClass::ALL {
        svg.push_str(&format!(
            r#"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{class}</text>"#,
            y - 9,
            class_color(class),
            x + 13,
            y,
        ));
        svg.push('\n');
        x += 14 + 8 * (class.name().len() + 2);
    }
    y += legend_h;
    for tl in timelines {
        for (class, secs) in hold_listing(tl) {
            svg.push_str(&format!(
                r#"<text x="{SVG_MARGIN}" y="{y}">{}: {class} held {secs:.2} s</text>"#,
                xml_escape(&tl.video_id),
            ));
            svg.push('\n');
            y += 16;
        }
    }
    svg.push_str("</svg>\n");
    svg
}
