//! SVG phase portraits of two trajectory coordinates.

use std::fmt::Write as _;
use std::path::Path;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
pub const MARGIN: f64 = 0.05;

/// Reads a CSV or JSON trajectory, choosing by extension and falling back to
/// sniffing the first non-blank character.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path)?;
    let is_json = match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => true,
        Some(e) if e.eq_ignore_ascii_case("csv") => false,
        _ => text.trim_start().starts_with('{'),
    };
    if is_json {
        Trajectory::from_json_str(&text)
    } else {
        Trajectory::read_csv(text.as_bytes())
    }
}

/// Data range padded by the margin on both sides; a zero-width range is
/// widened to ±1 around its value.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = hi - lo;
    if span <= 0.0 {
        return (lo - 1.0, hi + 1.0);
    }
    (lo - MARGIN * span, hi + MARGIN * span)
}

/// Projected points in viewport coordinates (y grows downward).
pub fn project(traj: &Trajectory, a: usize, b: usize) -> Result<Vec<(f64, f64)>> {
    let dim = traj.dim();
    for c in [a, b] {
        if c == 0 || c > dim {
            return Err(Error::VariableOutOfRange { index: c, max: dim });
        }
    }
    if traj.is_empty() {
        return Err(Error::MalformedTrajectory("no samples".into()));
    }
    let xs: Vec<f64> = traj.samples.iter().map(|s| s.x[a - 1]).collect();
    let ys: Vec<f64> = traj.samples.iter().map(|s| s.x[b - 1]).collect();
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        padded(lo, hi)
    };
    let (x0, x1) = range(&xs);
    let (y0, y1) = range(&ys);
    Ok(xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            (
                (x - x0) / (x1 - x0) * WIDTH,
                HEIGHT - (y - y0) / (y1 - y0) * HEIGHT,
            )
        })
        .collect())
}

pub fn render_svg(traj: &Trajectory, a: usize, b: usize) -> Result<String> {
    let pts = project(traj, a, b)?;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if let [(x, y)] = pts.as_slice() {
        let _ = writeln!(svg, r#"<circle cx="{x:.6}" cy="{y:.6}" r="3" fill="black"/>"#);
    } else {
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.6},{y:.6}")).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="black" stroke-width="1" points="{}"/>"#,
            coords.join(" ")
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">x{a}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 6.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 14 {})">x{b}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Points of the first polyline or circle in an SVG produced by
/// [`render_svg`].
pub fn parse_svg_points(svg: &str) -> Vec<(f64, f64)> {
    let attr = |tag: &str, name: &str| -> Option<String> {
        let start = tag.find(&format!("{name}=\""))? + name.len() + 2;
        let end = tag[start..].find('"')? + start;
        Some(tag[start..end].to_string())
    };
    for line in svg.lines() {
        if line.starts_with("<polyline") {
            return attr(line, "points")
                .unwrap_or_default()
                .split_whitespace()
                .filter_map(|p| {
                    let (x, y) = p.split_once(',')?;
                    Some((x.parse().ok()?, y.parse().ok()?))
                })
                .collect();
        }
        if line.starts_with("<circle") {
            let get = |n| attr(line, n).and_then(|v| v.parse().ok());
            if let (Some(x), Some(y)) = (get("cx"), get("cy")) {
                return vec![(x, y)];
            }
        }
    }
    Vec::new()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{TrajectoryMeta, TrajectorySample, IntegratorId};
    use crate::structures::StructureId;

    fn traj(points: &[(f64, f64)]) -> Trajectory {
        Trajectory {
            meta: TrajectoryMeta {
                structure: StructureId::J1,
                integrator: IntegratorId::Rk4,
                dt: 0.1,
                n: 1,
                steps: points.len().saturating_sub(1),
                hamiltonian: "0".into(),
                valid: true,
                error: None,
            },
            samples: points
                .iter()
                .enumerate()
                .map(|(k, &(a, b))| TrajectorySample {
                    t: k as f64 * 0.1,
                    x: vec![a, b, 0., 0., 0., 0., 0., 0.],
                    energy: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn margins_and_orientation() {
        let pts = project(&traj(&[(0.0, 0.0), (1.0, 2.0)]), 1, 2).unwrap();
        let m = MARGIN / (1.0 + 2.0 * MARGIN);
        assert!((pts[0].0 - m * WIDTH).abs() < 1e-9);
        assert!((pts[0].1 - (1.0 - m) * HEIGHT).abs() < 1e-9);
        assert!((pts[1].0 - (1.0 - m) * WIDTH).abs() < 1e-9);
        assert!((pts[1].1 - m * HEIGHT).abs() < 1e-9);
    }

    #[test]
    fn single_sample_is_a_marker() {
        let svg = render_svg(&traj(&[(0.5, 0.5)]), 1, 2).unwrap();
        assert!(svg.contains("<circle"));
        assert!(!svg.contains("<polyline"));
        assert_eq!(parse_svg_points(&svg), vec![(400.0, 300.0)]);
    }

    #[test]
    fn labels_and_bounds() {
        let svg = render_svg(&traj(&[(0.0, 1.0), (1.0, 0.0)]), 1, 2).unwrap();
        assert!(svg.contains(">x1</text>") && svg.contains(">x2</text>"));
        assert!(svg.contains(r#"viewBox="0 0 800 600""#));
        assert_eq!(parse_svg_points(&svg).len(), 2);
        assert!(matches!(
            render_svg(&traj(&[(0.0, 1.0)]), 1, 99),
            Err(Error::VariableOutOfRange { index: 99, max: 8 })
        ));
        assert!(render_svg(&traj(&[(0.0, 1.0)]), 0, 1).is_err());
    }
}
