//! Deterministic SVG rendering of a trace: top-down trajectories with
//! stage-advance markers. Identical traces render to identical bytes.

use std::fmt::Write as _;

use crate::trace::TraceFile;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct Frame {
    min_x: f64,
    min_y: f64,
    scale: f64,
    height: f64,
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.min_x) * self.scale + 20.0,
            // flip: world y grows upward, svg y grows downward
            self.height - ((y - self.min_y) * self.scale + 20.0),
        )
    }
}

pub fn render_trace_svg(trace: &TraceFile) -> String {
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for tick in &trace.ticks {
        for actor in &tick.actors {
            min_x = min_x.min(actor.x);
            max_x = max_x.max(actor.x);
            min_y = min_y.min(actor.y);
            max_y = max_y.max(actor.y);
        }
    }
    if !min_x.is_finite() {
        min_x = 0.0;
        max_x = 1.0;
        min_y = 0.0;
        max_y = 1.0;
    }
    min_y = min_y.min(-6.0);
    max_y = max_y.max(10.0);
    let scale = 900.0 / (max_x - min_x).max(1.0);
    let width = (max_x - min_x) * scale + 40.0;
    let height = (max_y - min_y) * scale + 40.0;
    let frame = Frame {
        min_x,
        min_y,
        scale,
        height,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>");

    // Actor names in first-tick order.
    let names: Vec<String> = trace
        .ticks
        .first()
        .map(|t| t.actors.iter().map(|a| a.name.clone()).collect())
        .unwrap_or_default();

    for (idx, name) in names.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut points = String::new();
        for tick in &trace.ticks {
            if let Some(actor) = tick.actors.iter().find(|a| &a.name == name) {
                let (px, py) = frame.map(actor.x, actor.y);
                let _ = write!(points, "{px:.2},{py:.2} ");
            }
        }
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
            points.trim_end()
        );
        // Spawn marker and label.
        if let Some(actor) = trace
            .ticks
            .first()
            .and_then(|t| t.actors.iter().find(|a| &a.name == name))
        {
            let (px, py) = frame.map(actor.x, actor.y);
            let _ = writeln!(
                svg,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"6\" height=\"6\" fill=\"{color}\"/>",
                px - 3.0,
                py - 3.0
            );
            let _ = writeln!(
                svg,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"{color}\">{name}</text>",
                px + 6.0,
                py - 6.0
            );
        }
    }

    // Stage-advance markers on the ego trajectory.
    for (stage, &tick_index) in trace.stage_log.iter().enumerate() {
        let Some(tick) = trace.ticks.iter().find(|t| t.tick == tick_index) else {
            continue;
        };
        let Some(ego) = tick
            .actors
            .iter()
            .find(|a| a.name == "ego-vehicle")
            .or_else(|| tick.actors.first())
        else {
            continue;
        };
        let (px, py) = frame.map(ego.x, ego.y);
        let _ = writeln!(
            svg,
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"5\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1.5\"/>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#333333\">stage {}</text>",
            px + 7.0,
            py + 4.0,
            stage + 1
        );
    }

    let _ = writeln!(
        svg,
        "<text x=\"20\" y=\"{:.2}\" font-size=\"12\" fill=\"#555555\">map {} | verdict {:?} | {} ticks</text>",
        height - 8.0,
        trace.map_id,
        trace.verdict,
        trace.ticks.len()
    );
    svg.push_str("</svg>\n");
    svg
}
