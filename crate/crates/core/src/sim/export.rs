use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::{Metrics, TrajectoryLog};
use crate::geometry::BridgeModel;
use crate::scalar::Scalar;
use crate::supervisor::PredicateKind;

pub const CSV_HEADER: &str = "t,x,y,z,yaw,routine,standoff_err,along_err,vx,vy,vz";
const EVENTS_HEADER: &str = "from_leg,to_leg,trigger,t,x,y,z,yaw";

#[derive(Debug, Clone, PartialEq)]
pub struct ExportPaths {
    pub trajectory: PathBuf,
    pub events: PathBuf,
    pub metrics: PathBuf,
    pub svg: PathBuf,
}

impl ExportPaths {
    pub fn in_dir(dir: &Path) -> Self {
        ExportPaths {
            trajectory: dir.join("trajectory.csv"),
            events: dir.join("events.csv"),
            metrics: dir.join("metrics.json"),
            svg: dir.join("trajectory.svg"),
        }
    }
}

pub fn write_trajectory_csv<T: Scalar>(log: &TrajectoryLog<T>) -> String {
    let mut out = String::with_capacity(96 * (log.samples.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &log.samples {
        let p = s.state.position;
        let v = s.state.velocity;
        let routine = s.routine.map_or("HOVER", |r| r.as_str());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            s.t,
            p.x.as_f64(),
            p.y.as_f64(),
            p.z.as_f64(),
            s.state.yaw.as_f64(),
            routine,
            s.standoff_err.as_f64(),
            s.along_err.as_f64(),
            v.x.as_f64(),
            v.y.as_f64(),
            v.z.as_f64()
        );
    }
    out
}

pub fn write_events_csv<T: Scalar>(log: &TrajectoryLog<T>) -> String {
    let mut out = String::from(EVENTS_HEADER);
    out.push('\n');
    for e in &log.events {
        let p = e.pose.position;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            e.from_leg,
            e.to_leg,
            e.trigger,
            e.timestamp,
            p.x.as_f64(),
            p.y.as_f64(),
            p.z.as_f64(),
            e.pose.yaw.as_f64()
        );
    }
    out
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

/// `(t, standoff_err, along_err)` rows of a trajectory CSV.
pub fn parse_trajectory_csv(text: &str) -> io::Result<Vec<(f64, f64, f64)>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(bad("trajectory CSV header mismatch"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 11 {
                return Err(bad(format!("row {}: expected 11 fields", i + 1)));
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|e| bad(format!("row {}: {e}", i + 1)));
            Ok((num(0)?, num(6)?, num(7)?))
        })
        .collect()
}

/// `(t, trigger)` for each switch in an events CSV.
pub fn read_events_csv(text: &str) -> io::Result<Vec<(f64, PredicateKind)>> {
    let mut lines = text.lines();
    if lines.next() != Some(EVENTS_HEADER) {
        return Err(bad("events CSV header mismatch"));
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(bad("events row: expected 8 fields"));
            }
            let t = f[3].parse::<f64>().map_err(|e| bad(e.to_string()))?;
            let k = f[2].parse::<PredicateKind>().map_err(bad)?;
            Ok((t, k))
        })
        .collect()
}

pub fn read_metrics(path: &Path) -> io::Result<Metrics> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| bad(e.to_string()))
}

/// Side view (x right, z up) of the bridge outline, the flown path, switch
/// points and the start and end of the flight.
pub fn write_svg<T: Scalar>(log: &TrajectoryLog<T>, m: &BridgeModel<T>) -> String {
    let mut xs: Vec<f64> = Vec::new();
    let mut zs: Vec<f64> = Vec::new();
    for s in &m.surfaces {
        for v in &s.vertices {
            xs.push(v.x.as_f64());
            zs.push(v.z.as_f64());
        }
    }
    for s in &log.samples {
        xs.push(s.state.position.x.as_f64());
        zs.push(s.state.position.z.as_f64());
    }
    let fold = |v: &[f64], f: fn(f64, f64) -> f64, init: f64| v.iter().copied().fold(init, f);
    let (x0, x1) = (fold(&xs, f64::min, 0.0), fold(&xs, f64::max, 1.0));
    let (z0, z1) = (fold(&zs, f64::min, 0.0), fold(&zs, f64::max, 1.0));
    let scale = 10.0;
    let margin = 20.0;
    let width = (x1 - x0) * scale + 2.0 * margin;
    let height = (z1 - z0) * scale + 2.0 * margin;
    let px = |x: f64| (x - x0) * scale + margin;
    let pz = |z: f64| (z1 - z) * scale + margin;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for s in &m.surfaces {
        let (a, b) = (s.min_x().as_f64(), s.max_x().as_f64());
        let (lo, hi) = (s.min_z().as_f64(), s.max_z().as_f64());
        let _ = writeln!(
            out,
            r#"<rect class="surface" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="orange" stroke-width="2"/>"#,
            px(a),
            pz(hi),
            (b - a) * scale,
            (hi - lo) * scale
        );
    }
    if !log.samples.is_empty() {
        out.push_str(r#"<polyline class="trajectory" fill="none" stroke="blue" stroke-width="1.5" points=""#);
        for s in &log.samples {
            let p = s.state.position;
            let _ = write!(out, "{:.2},{:.2} ", px(p.x.as_f64()), pz(p.z.as_f64()));
        }
        out.push_str("\"/>\n");
    }
    for e in &log.events {
        let p = e.pose.position;
        let _ = writeln!(
            out,
            r#"<circle class="switch" cx="{:.2}" cy="{:.2}" r="5" fill="green"/>"#,
            px(p.x.as_f64()),
            pz(p.z.as_f64())
        );
    }
    if let (Some(first), Some(last)) = (log.samples.first(), log.samples.last()) {
        for (class, color, s) in [("start", "black", first), ("end", "red", last)] {
            let p = s.state.position;
            let _ = writeln!(
                out,
                r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="6" fill="{color}"/>"#,
                px(p.x.as_f64()),
                pz(p.z.as_f64())
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Writes trajectory CSV, events CSV, metrics JSON and the SVG into `dir`.
pub fn export_log<T: Scalar>(log: &TrajectoryLog<T>, m: &BridgeModel<T>, dir: &Path) -> io::Result<ExportPaths> {
    fs::create_dir_all(dir)?;
    let paths = ExportPaths::in_dir(dir);
    fs::write(&paths.trajectory, write_trajectory_csv(log))?;
    fs::write(&paths.events, write_events_csv(log))?;
    let json = serde_json::to_string_pretty(&log.metrics).map_err(|e| bad(e.to_string()))?;
    fs::write(&paths.metrics, json)?;
    fs::write(&paths.svg, write_svg(log, m))?;
    Ok(paths)
}

/// One scan's points in the scan plane with extracted lines drawn over them.
pub fn write_scan_svg<T: Scalar>(scan: &crate::lidar::Scan<T>, lines: &[crate::perception::LineEstimate<T>]) -> String {
    let pts: Vec<[f64; 2]> = scan
        .points
        .iter()
        .map(|p| {
            let [x, y] = p.to_xy();
            [x.as_f64(), y.as_f64()]
        })
        .collect();
    let reach = pts
        .iter()
        .map(|p| p[0].abs().max(p[1].abs()))
        .fold(1.0_f64, f64::max)
        .ceil();
    let size = 600.0;
    let scale = size / (2.0 * reach);
    // Scan x points up the page, scan y to the left, as seen from above.
    let sx = |p: [f64; 2]| size / 2.0 - p[1] * scale;
    let sy = |p: [f64; 2]| size / 2.0 - p[0] * scale;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"black\"/>\n");
    let _ = writeln!(
        out,
        r#"<circle class="sensor" cx="{:.2}" cy="{:.2}" r="4" fill="red"/>"#,
        size / 2.0,
        size / 2.0
    );
    for p in &pts {
        let _ = writeln!(
            out,
            r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="1.5" fill="white"/>"#,
            sx(*p),
            sy(*p)
        );
    }
    for l in lines {
        let [a, b] = l.endpoints.map(|e| [e[0].as_f64(), e[1].as_f64()]);
        let _ = writeln!(
            out,
            r#"<line class="line" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="yellow" stroke-width="2"><title>theta {:.1} rho {:.2} extent {:.2} inliers {}</title></line>"#,
            sx(a),
            sy(a),
            sx(b),
            sy(b),
            l.theta.as_f64(),
            l.rho.as_f64(),
            l.extent.as_f64(),
            l.inlier_count
        );
    }
    out.push_str("</svg>\n");
    out
}
