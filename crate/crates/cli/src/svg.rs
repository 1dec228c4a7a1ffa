//! Dependency-free SVG plots with fixed-precision coordinates.

use std::fmt::Write;

use swarm_pe_core::game::{Agent, Partition, PolicyKind, Role, Trajectory};
use swarm_pe_core::geometry::{ConvexPolygon, Point2};
use swarm_pe_core::grid::RolloutRecord;

const CANVAS: f64 = 480.0;
const MARGIN: f64 = 20.0;

fn f(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" { "0.000".into() } else { s }
}

struct Frame {
    min: Point2,
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(domain: &ConvexPolygon) -> Self {
        let (lo, hi) = domain.bounding_box();
        let span = (hi.x - lo.x).max(hi.y - lo.y);
        let scale = (CANVAS - 2.0 * MARGIN) / span;
        Self { min: lo, scale, height: (hi.y - lo.y) * scale + 2.0 * MARGIN }
    }

    /// World → canvas, with y pointing up.
    fn map(&self, p: Point2) -> (String, String) {
        let x = MARGIN + (p.x - self.min.x) * self.scale;
        let y = self.height - MARGIN - (p.y - self.min.y) * self.scale;
        (f(x), f(y))
    }

    fn points(&self, pts: &[Point2]) -> String {
        pts.iter()
            .map(|&p| {
                let (x, y) = self.map(p);
                format!("{x},{y}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Trajectories up to `sample` over the Voronoi partition of the agents alive then.
pub fn snapshot(
    trajectory: &Trajectory,
    sample: usize,
    domain: &ConvexPolygon,
    capture_radius: f64,
) -> String {
    let frame = Frame::new(domain);
    let s = &trajectory.samples[sample];
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = f(CANVAS),
        h = f(frame.height)
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="14" font-size="12">t = {}</text>"#, f(MARGIN), f(s.t));

    let agents: Vec<Agent> = trajectory
        .roles
        .iter()
        .enumerate()
        .map(|(id, &role)| {
            let policy = match role {
                Role::Pursuer => PolicyKind::AreaMin,
                Role::Evader => PolicyKind::ConstantArea,
            };
            Agent { alive: s.alive[id], ..Agent::new(id, s.positions[id], policy) }
        })
        .collect();
    if let Ok(partition) = Partition::build(&agents, domain) {
        for (site, cell) in partition.diagram.cells.iter().enumerate() {
            let evader_cell = partition
                .site_of
                .iter()
                .zip(&trajectory.roles)
                .any(|(s, &r)| *s == Some(site) && r == Role::Evader);
            let fill = if evader_cell { "#fde0dd" } else { "#deebf7" };
            let _ = writeln!(
                out,
                r##"<polygon points="{}" fill="{fill}" stroke="#888" stroke-width="0.8"/>"##,
                frame.points(cell.vertices())
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<polygon points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        frame.points(domain.vertices())
    );
    for (id, &role) in trajectory.roles.iter().enumerate() {
        let colour = match role {
            Role::Pursuer => "#2171b5",
            Role::Evader => "#cb181d",
        };
        let path = trajectory.path(id, sample);
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.2"/>"#,
            frame.points(&path)
        );
        let (x, y) = frame.map(s.positions[id]);
        let fill = if s.alive[id] { colour } else { "none" };
        let _ = writeln!(
            out,
            r#"<circle cx="{x}" cy="{y}" r="4" fill="{fill}" stroke="{colour}"/>"#
        );
        if role == Role::Pursuer {
            let _ = writeln!(
                out,
                r#"<circle cx="{x}" cy="{y}" r="{}" fill="none" stroke="{colour}" stroke-dasharray="2,2"/>"#,
                f(capture_radius * frame.scale)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// One `n × n` panel per record: defender mass in blue, intruder mass in red on top.
pub fn density_strip(records: &[RolloutRecord], n: usize) -> String {
    const CELL: f64 = 24.0;
    const GAP: f64 = 12.0;
    let panel = CELL * n as f64;
    let width = GAP + records.len() as f64 * (panel + GAP);
    let height = panel + 2.0 * GAP + 14.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = f(width),
        h = f(height)
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (p, rec) in records.iter().enumerate() {
        let x0 = GAP + p as f64 * (panel + GAP);
        let y0 = GAP + 14.0;
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="11">k={}</text>"#, f(x0), f(GAP + 6.0), rec.k);
        for r in 0..n {
            for c in 0..n {
                let (x, y) = (f(x0 + c as f64 * CELL), f(y0 + r as f64 * CELL));
                let i = r * n + c;
                let d = rec.defender[i].clamp(0.0, 1.0);
                let e = rec.intruder[i].clamp(0.0, 1.0);
                let _ = writeln!(
                    out,
                    r##"<rect x="{x}" y="{y}" width="{s}" height="{s}" fill="#08519c" fill-opacity="{}" stroke="#bbb"/>"##,
                    f(d),
                    s = f(CELL)
                );
                if e > 0.0 {
                    let _ = writeln!(
                        out,
                        r##"<rect x="{x}" y="{y}" width="{s}" height="{s}" fill="#cb181d" fill-opacity="{}"/>"##,
                        f(0.8 * e),
                        s = f(CELL)
                    );
                }
            }
        }
    }
    out.push_str("</svg>\n");
    out
}
