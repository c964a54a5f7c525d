//! Hand-written SVG line and scatter plots. Output depends only on the CSV
//! contents, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::str::FromStr;

use attractor_core::report::{read_table, ENERGY_COLUMNS, SEMIDIST_COLUMNS};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `E0` against time from `energy.csv`.
    Energy,
    /// One polyline per series from `semidistance.csv`.
    Semidistance,
    /// `u1` against `u2` (or `v1` for a single mode) from a cloud CSV.
    Cloud,
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "energy" => Ok(PlotKind::Energy),
            "semidistance" => Ok(PlotKind::Semidistance),
            "cloud" => Ok(PlotKind::Cloud),
            _ => Err(format!("unknown plot kind '{s}' (expected energy, semidistance or cloud)")),
        }
    }
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn schema(message: impl Into<String>) -> Failure {
    Failure::Schema {
        field: "csv".into(),
        message: message.into(),
    }
}

struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn parse(text: &str) -> Result<Self, Failure> {
        let (_, mut rows) = read_table(text).map_err(|e| schema(e.to_string()))?;
        if rows.is_empty() {
            return Err(schema("no column row"));
        }
        let columns = rows.remove(0);
        Ok(Table { columns, rows })
    }

    fn col(&self, name: &str) -> Result<usize, Failure> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| schema(format!("missing column '{name}'")))
    }

    fn floats(&self, idx: usize) -> Result<Vec<f64>, Failure> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.get(idx)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| schema(format!("row {}: column {} is not a number", i + 1, self.columns[idx])))
            })
            .collect()
    }
}

/// Renders `csv_text` as an SVG document of the requested kind.
pub fn render(csv_text: &str, kind: PlotKind) -> Result<String, Failure> {
    let table = Table::parse(csv_text)?;
    match kind {
        PlotKind::Energy => {
            if table.columns.iter().map(String::as_str).ne(ENERGY_COLUMNS) {
                return Err(schema(format!("energy plot expects columns {ENERGY_COLUMNS:?}")));
            }
            let t = table.floats(table.col("time")?)?;
            let e = table.floats(table.col("E0")?)?;
            let (lo, hi) = range(&e);
            let note = format!("max E0 - min E0 = {:e}", hi - lo);
            Ok(Figure::new("E0 against time", "time", "E0", false).line("E0", t.into_iter().zip(e).collect()).finish(&note))
        }
        PlotKind::Semidistance => {
            if table.columns.iter().map(String::as_str).ne(SEMIDIST_COLUMNS) {
                return Err(schema(format!("semidistance plot expects columns {SEMIDIST_COLUMNS:?}")));
            }
            let x = table.floats(1)?;
            let y = table.floats(2)?;
            let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
            for (i, r) in table.rows.iter().enumerate() {
                match series.iter_mut().find(|(l, _)| *l == r[0]) {
                    Some((_, pts)) => pts.push((x[i], y[i])),
                    None => series.push((r[0].clone(), vec![(x[i], y[i])])),
                }
            }
            let log = y.iter().all(|v| *v > 0.0) && !y.is_empty();
            let mut fig = Figure::new("Hausdorff semidistance", "checkpoint", "semidistance", log);
            for (label, pts) in series {
                fig = fig.line(&label, pts);
            }
            Ok(fig.finish(if log { "log scale" } else { "linear scale" }))
        }
        PlotKind::Cloud => {
            if table.columns.first().map(String::as_str) != Some("point") {
                return Err(schema("cloud plot expects a 'point' column first"));
            }
            let u1 = table.floats(table.col("u1")?)?;
            let (name, other) = match table.col("u2") {
                Ok(i) => ("u2", table.floats(i)?),
                Err(_) => ("v1", table.floats(table.col("v1")?)?),
            };
            let n = u1.len();
            Ok(Figure::new("attractor sample", "u1", name, false)
                .scatter(u1.into_iter().zip(other).collect())
                .finish(&format!("{n} points")))
        }
    }
}

fn range(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - d, hi + d)
    }
}

enum Mark {
    Line(String, Vec<(f64, f64)>),
    Scatter(Vec<(f64, f64)>),
}

struct Figure {
    title: String,
    xlabel: String,
    ylabel: String,
    log_y: bool,
    marks: Vec<Mark>,
}

impl Figure {
    fn new(title: &str, xlabel: &str, ylabel: &str, log_y: bool) -> Self {
        Figure {
            title: title.into(),
            xlabel: xlabel.into(),
            ylabel: ylabel.into(),
            log_y,
            marks: Vec::new(),
        }
    }

    fn line(mut self, label: &str, pts: Vec<(f64, f64)>) -> Self {
        self.marks.push(Mark::Line(label.into(), pts));
        self
    }

    fn scatter(mut self, pts: Vec<(f64, f64)>) -> Self {
        self.marks.push(Mark::Scatter(pts));
        self
    }

    fn points(&self) -> impl Iterator<Item = &(f64, f64)> {
        self.marks.iter().flat_map(|m| match m {
            Mark::Line(_, p) | Mark::Scatter(p) => p.iter(),
        })
    }

    fn finish(self, note: &str) -> String {
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let xs: Vec<f64> = self.points().map(|p| p.0).collect();
        let ys: Vec<f64> = self.points().map(|p| ty(p.1)).collect();
        let (x0, x1) = { let (a, b) = range(&xs); padded(a, b) };
        let (y0, y1) = { let (a, b) = range(&ys); padded(a, b) };
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
        let sy = |y: f64| H - MARGIN - (ty(y) - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * MARGIN,
            H - 2.0 * MARGIN
        );
        let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#, W / 2.0, esc(&self.title));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, W / 2.0, H - 15.0, esc(&self.xlabel));
        let _ = writeln!(
            s,
            r#"<text x="15" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            esc(&self.ylabel)
        );
        // tick labels at the axis ends
        let ylab = |v: f64| if self.log_y { format!("1e{v:.2}") } else { format!("{v:.4e}") };
        let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}" font-size="10">{:.4e}</text>"#, H - MARGIN + 14.0, x0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{:.4e}</text>"#, W - MARGIN, H - MARGIN + 14.0, x1);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>"#, MARGIN - 4.0, H - MARGIN, ylab(y0));
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>"#, MARGIN - 4.0, MARGIN + 10.0, ylab(y1));
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#, W - MARGIN, MARGIN - 8.0, esc(note));

        for (i, m) in self.marks.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            match m {
                Mark::Line(label, pts) => {
                    let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                    let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
                    let ly = MARGIN + 16.0 + 14.0 * i as f64;
                    let _ = writeln!(s, r#"<text x="{}" y="{ly}" font-size="10" fill="{color}">{}</text>"#, MARGIN + 6.0, esc(label));
                }
                Mark::Scatter(pts) => {
                    for &(x, y) in pts {
                        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="{color}"/>"#, sx(x), sy(y));
                    }
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
