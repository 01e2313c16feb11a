//! Static SVG renderings: world frames and outcome bar charts.

use std::fmt::Write as _;

use drivebench::benchmark::Summary;
use drivebench::geometry::{Point2, Polygon};
use drivebench::map::{GoalDefinition, RoadMap};
use drivebench::world::{AgentId, World};

const SCALE: f64 = 4.0;
const MARGIN: f64 = 10.0;
/// Past poses drawn behind the current one.
pub const TRAIL: usize = 4;

/// Agent outlines at one instant.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: u64,
    pub agents: Vec<(AgentId, Polygon)>,
}

impl Snapshot {
    pub fn of(world: &World) -> Self {
        Self {
            step: world.step_index,
            agents: world.agents().iter().map(|a| (a.id, a.polygon())).collect(),
        }
    }
}

struct Frame {
    min: Point2,
    max: Point2,
}

impl Frame {
    fn of(map: &RoadMap) -> Self {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for lane in map.lanes() {
            for p in lane
                .left_boundary
                .points()
                .iter()
                .chain(lane.right_boundary.points())
            {
                min = Point2::new(min.x.min(p.x), min.y.min(p.y));
                max = Point2::new(max.x.max(p.x), max.y.max(p.y));
            }
        }
        Self { min, max }
    }

    fn width(&self) -> f64 {
        (self.max.x - self.min.x) * SCALE + 2.0 * MARGIN
    }

    fn height(&self) -> f64 {
        (self.max.y - self.min.y) * SCALE + 2.0 * MARGIN
    }

    // y grows downwards in SVG
    fn map(&self, p: Point2) -> (f64, f64) {
        (
            (p.x - self.min.x) * SCALE + MARGIN,
            (self.max.y - p.y) * SCALE + MARGIN,
        )
    }

    fn points(&self, pts: &[Point2]) -> String {
        let mut s = String::new();
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = self.map(*p);
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{x:.3},{y:.3}");
        }
        s
    }

    fn path(&self, pts: &[Point2]) -> String {
        format!("M {} Z", self.points(pts).replace(' ', " L "))
    }
}

/// One world frame: lanes, the controlled agent's goal, then for every
/// agent its past poses (oldest first, increasingly opaque) and its current
/// pose. Each pose is exactly one `<polygon>` element.
pub fn render_world(
    map: &RoadMap,
    goal: Option<&GoalDefinition>,
    controlled: AgentId,
    history: &[Snapshot],
    current: &Snapshot,
) -> String {
    let f = Frame::of(map);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.3}" height="{:.3}" data-step="{}">"#,
        f.width(),
        f.height(),
        current.step
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    for lane in map.lanes() {
        let mut pts = lane.left_boundary.points().to_vec();
        pts.extend(lane.right_boundary.points().iter().rev());
        let _ = writeln!(
            out,
            r##"<path class="lane" data-lane="{}" d="{}" fill="#e6e6e6" stroke="#808080" stroke-width="0.5"/>"##,
            lane.id.0,
            f.path(&pts)
        );
    }
    let goal_poly = match goal {
        Some(GoalDefinition::Region(p)) => Some(p.clone()),
        Some(GoalDefinition::Lane { lane, min_s }) => map
            .lane(*lane)
            .and_then(|l| map.lane_patch(*lane, *min_s, l.center.length()).ok()),
        None => None,
    };
    if let Some(g) = goal_poly {
        let _ = writeln!(
            out,
            r##"<path class="goal" d="{}" fill="#7fd17f" fill-opacity="0.5" stroke="#2e8b2e"/>"##,
            f.path(g.vertices())
        );
    }
    let n = history.len();
    for (k, snap) in history.iter().enumerate() {
        let opacity = 0.8 * (k + 1) as f64 / (n + 1) as f64;
        for (id, poly) in &snap.agents {
            let _ = writeln!(
                out,
                r#"<polygon class="past" data-agent="{}" data-step="{}" points="{}" fill="{}" fill-opacity="{opacity:.3}"/>"#,
                id.0,
                snap.step,
                f.points(poly.vertices()),
                color(*id, controlled)
            );
        }
    }
    for (id, poly) in &current.agents {
        let _ = writeln!(
            out,
            r##"<polygon class="agent" data-agent="{}" data-step="{}" points="{}" fill="{}" stroke="#000000" stroke-width="0.5"/>"##,
            id.0,
            current.step,
            f.points(poly.vertices()),
            color(*id, controlled)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn color(id: AgentId, controlled: AgentId) -> &'static str {
    if id == controlled {
        "#d62728"
    } else {
        "#1f77b4"
    }
}

const BARS: [(&str, &str); 3] = [
    ("success", "#2ca02c"),
    ("collision", "#d62728"),
    ("max_steps", "#ff7f0e"),
];
const BAR_W: f64 = 18.0;
const GROUP_GAP: f64 = 24.0;
const PLOT_H: f64 = 200.0;
const LEFT: f64 = 40.0;
const TOP: f64 = 30.0;

/// Grouped bars of success, collision and max-steps rates, one group per
/// (set, config) summary.
pub fn render_chart(summaries: &[Summary]) -> String {
    let group_w = BAR_W * BARS.len() as f64 + GROUP_GAP;
    let width = LEFT + group_w * summaries.len() as f64 + 20.0;
    let height = TOP + PLOT_H + 60.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.3}" height="{height:.3}">"#
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    for (i, (name, c)) in BARS.iter().enumerate() {
        let x = LEFT + 110.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.3}" y="8" width="10" height="10" fill="{c}"/><text x="{:.3}" y="17" font-size="10">{name}</text>"#,
            x + 14.0
        );
    }
    let base = TOP + PLOT_H;
    for pct in [0, 25, 50, 75, 100] {
        let y = base - PLOT_H * pct as f64 / 100.0;
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="#cccccc"/><text x="4" y="{:.3}" font-size="9">{pct}%</text>"##,
            width - 20.0,
            y + 3.0
        );
    }
    for (g, s) in summaries.iter().enumerate() {
        let x0 = LEFT + GROUP_GAP / 2.0 + group_w * g as f64;
        let _ = writeln!(
            out,
            r#"<g class="group" data-set="{}" data-config="{}">"#,
            escape(&s.scenario_set),
            escape(&s.config_name)
        );
        for (i, (name, c)) in BARS.iter().enumerate() {
            let rate = match *name {
                "success" => s.success,
                "collision" => s.collision,
                _ => s.max_steps,
            };
            let h = PLOT_H * rate / 100.0;
            let _ = writeln!(
                out,
                r#"<rect class="{name}" data-rate="{rate}" x="{:.3}" y="{:.3}" width="{BAR_W:.3}" height="{h:.3}" fill="{c}"/>"#,
                x0 + BAR_W * i as f64,
                base - h
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" font-size="9">{}</text><text x="{:.3}" y="{:.3}" font-size="9">{}</text>"#,
            x0,
            base + 14.0,
            escape(&s.scenario_set),
            x0,
            base + 26.0,
            escape(&s.config_name)
        );
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
