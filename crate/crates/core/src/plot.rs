//! Minimal deterministic SVG line charts for sweep and offset CSVs.
//!
//! Output depends only on the data: fixed canvas, fixed number formatting,
//! series drawn in a fixed order.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{OffsetTable, SweepRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 56.0;

/// Series color by label.
pub fn color(label: &str) -> &'static str {
    match label {
        "constant" => "#1f5fbf",
        "linear" => "#2a9d3a",
        "ideal" => "#d62728",
        "pure_tone" => "#000000",
        "impaired" => "#d62728",
        "tabulated" => "#8c564b",
        _ => "#7f7f7f",
    }
}

/// One plotted series: label and `(x, y)` points in x order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            let v = if log { v.log10() } else { v };
            (a.min(v), b.max(v))
        });
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        if !log {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Self { lo, hi, log }
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            return (self.lo as i64..=self.hi as i64)
                .map(|e| 10f64.powi(e as i32))
                .collect();
        }
        let raw = (self.hi - self.lo) / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let mut t = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= self.hi + 1e-9 * step {
            out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
            t += step;
        }
        out
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.0e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Renders a chart to an SVG document.
pub fn render(chart: &Chart) -> Result<String> {
    let points = || chart.series.iter().flat_map(|s| s.points.iter());
    if points().next().is_none() {
        return Err(Error::Csv {
            path: chart.title.clone(),
            message: "nothing to plot".into(),
        });
    }
    let log_x = chart.log_x && points().all(|p| p.0 > 0.0);
    let xa = Axis::new(points().map(|p| p.0), log_x);
    let ya = Axis::new(points().map(|p| p.1), false);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + xa.unit(x) * pw;
    let py = |y: f64| TOP + (1.0 - ya.unit(y)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&chart.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.1}" y="{TOP:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="black"/>"#
    );
    for t in xa.ticks() {
        let x = px(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{TOP:.1}" x2="{x:.1}" y2="{:.1}" stroke="#dddddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 16.0,
            tick_label(t)
        );
    }
    for t in ya.ticks() {
        let y = py(t);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 14.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    );
    for (i, series) in chart.series.iter().enumerate() {
        let c = color(&series.label);
        let path: Vec<String> = series
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        for p in &path {
            let (x, y) = p.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{c}"/>"#);
        }
        let ly = TOP + 12.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{c}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Sweep point as read back from CSV: the seed-aggregated values only.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub x_value: f64,
    pub kind: String,
    pub offset_hz: f64,
    pub mean_db: f64,
}

impl From<&SweepRow> for SweepPoint {
    fn from(r: &SweepRow) -> Self {
        Self {
            x_value: r.x_value,
            kind: r.kind.clone(),
            offset_hz: r.offset_hz,
            mean_db: r.mean_db(),
        }
    }
}

/// One chart per offset, one series per kind in order of first appearance.
/// Returns `(name, svg)` pairs named after the offset.
pub fn sweep_points_svgs(points: &[SweepPoint], x_label: &str) -> Result<Vec<(String, String)>> {
    let mut offsets: Vec<f64> = Vec::new();
    let mut kinds: Vec<&str> = Vec::new();
    for p in points {
        if !offsets.contains(&p.offset_hz) {
            offsets.push(p.offset_hz);
        }
        if !kinds.contains(&p.kind.as_str()) {
            kinds.push(&p.kind);
        }
    }
    offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // oversampling ratios span decades; comb widths start at zero
    let log_x = points.iter().all(|p| p.x_value > 0.0);
    offsets
        .iter()
        .map(|&f| {
            let series = kinds
                .iter()
                .map(|k| {
                    let mut pts: Vec<(f64, f64)> = points
                        .iter()
                        .filter(|p| p.offset_hz == f && p.kind == *k)
                        .map(|p| (p.x_value, p.mean_db))
                        .collect();
                    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                    Series {
                        label: k.to_string(),
                        points: pts,
                    }
                })
                .filter(|s| !s.points.is_empty())
                .collect();
            let chart = Chart {
                title: format!("L at {} Hz offset", tick_label(f)),
                x_label: x_label.to_string(),
                y_label: "L (dBc/Hz)".into(),
                log_x,
                series,
            };
            Ok((format!("{f}Hz"), render(&chart)?))
        })
        .collect()
}

pub fn sweep_svgs(rows: &[SweepRow], x_label: &str) -> Result<Vec<(String, String)>> {
    let points: Vec<SweepPoint> = rows.iter().map(SweepPoint::from).collect();
    sweep_points_svgs(&points, x_label)
}

fn offsets_chart(rows: &[(usize, f64, i64, i64)], title: String) -> Result<String> {
    // rows run from long to short wavelength; plot left to right
    let column = |pick: fn(&(usize, f64, i64, i64)) -> i64| -> Vec<(f64, f64)> {
        rows.iter().rev().map(|r| (r.1, pick(r) as f64)).collect()
    };
    render(&Chart {
        title,
        x_label: "wavelength (nm)".into(),
        y_label: "offset difference (samples)".into(),
        log_x: false,
        series: vec![
            Series {
                label: "linear".into(),
                points: column(|r| r.2),
            },
            Series {
                label: "constant".into(),
                points: column(|r| r.3),
            },
        ],
    })
}

/// Offset differences against wavelength, one series per compared kind.
pub fn offsets_svg(table: &OffsetTable) -> Result<String> {
    offsets_chart(
        &table.rows,
        format!(
            "Offset difference to ideal, width {} GHz",
            table.width / 1e9
        ),
    )
}

fn csv_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line: usize, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| csv_error(path, format!("line {line}: `{v}` is not a number")))
}

/// Renders a sweep or offsets CSV written by this crate. Returns
/// `(name suffix, svg)` pairs; the suffix is empty for single charts.
pub fn plot_csv(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, h)| h.trim().to_string())
        .ok_or_else(|| csv_error(path, "empty file"))?;
    let body: Vec<(usize, Vec<&str>)> = lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').collect()))
        .collect();
    if body.is_empty() {
        return Err(csv_error(path, "no data rows"));
    }
    match header.as_str() {
        "x_value,dispersion_kind,offset_hz,mean_L_dbc_hz,std_L_db,n_seeds" => {
            let mut points = Vec::with_capacity(body.len());
            for (line, cols) in &body {
                if cols.len() != 6 {
                    return Err(csv_error(path, format!("line {line}: expected 6 columns")));
                }
                points.push(SweepPoint {
                    x_value: parse_f64(path, *line, cols[0])?,
                    kind: cols[1].trim().to_string(),
                    offset_hz: parse_f64(path, *line, cols[2])?,
                    mean_db: parse_f64(path, *line, cols[3])?,
                });
            }
            let x_label = if points
                .iter()
                .any(|p| p.kind == "pure_tone" || p.kind == "impaired")
            {
                "oversampling ratio N"
            } else {
                "comb width (Hz)"
            };
            sweep_points_svgs(&points, x_label)
        }
        "line_index,lambda_nm,diff_linear_samples,diff_constant_samples" => {
            let mut rows = Vec::with_capacity(body.len());
            for (line, cols) in &body {
                if cols.len() != 4 {
                    return Err(csv_error(path, format!("line {line}: expected 4 columns")));
                }
                rows.push((
                    parse_f64(path, *line, cols[0])? as usize,
                    parse_f64(path, *line, cols[1])?,
                    parse_f64(path, *line, cols[2])? as i64,
                    parse_f64(path, *line, cols[3])? as i64,
                ));
            }
            let title = format!("Offset difference to ideal, {} lines", rows.len());
            let svg = offsets_chart(&rows, title)?;
            Ok(vec![(String::new(), svg)])
        }
        other => Err(csv_error(path, format!("unrecognized header `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<SweepRow> {
        let mut v = Vec::new();
        for (x, k) in [
            (0.0, "constant"),
            (1e11, "constant"),
            (0.0, "ideal"),
            (1e11, "ideal"),
        ] {
            v.push(SweepRow {
                x_value: x,
                kind: k.into(),
                offset_hz: 1e4,
                per_seed_db: vec![-120.0 - x / 1e10, -121.0],
            });
        }
        v
    }

    #[test]
    fn deterministic_output() {
        let a = sweep_svgs(&rows(), "width").unwrap();
        let b = sweep_svgs(&rows(), "width").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1);
        assert!(a[0].1.starts_with("<svg"));
        assert!(a[0].1.contains(color("constant")));
        assert!(a[0].1.contains(color("ideal")));
    }

    #[test]
    fn empty_chart_is_error() {
        assert!(sweep_svgs(&[], "x").unwrap().is_empty());
        let chart = Chart {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_x: false,
            series: vec![],
        };
        assert!(render(&chart).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let mut buf = Vec::new();
        crate::experiments::write_sweep_csv(&rows(), &mut buf).unwrap();
        std::fs::write(&path, &buf).unwrap();
        let svgs = plot_csv(&path).unwrap();
        assert_eq!(svgs, sweep_svgs(&rows(), "comb width (Hz)").unwrap());

        std::fs::write(
            &path,
            "x_value,dispersion_kind,offset_hz,mean_L_dbc_hz,std_L_db,n_seeds\n",
        )
        .unwrap();
        assert!(matches!(plot_csv(&path), Err(Error::Csv { .. })));
        std::fs::write(&path, "").unwrap();
        assert!(plot_csv(&path).is_err());
    }

    #[test]
    fn log_ticks_cover_decades() {
        let a = Axis::new([4.0, 64.0].into_iter(), true);
        assert_eq!(a.ticks(), vec![1.0, 10.0, 100.0]);
    }
}
