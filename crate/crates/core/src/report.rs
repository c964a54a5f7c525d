//! CSV export. Every file starts with `#`-prefixed provenance lines followed
//! by a single header row; floats use the shortest round-trip formatting so
//! identical runs give identical bytes.

use std::io::Write;

use crate::compactness::{Cloud, CompactnessReport, PullbackReport};
use crate::dynamics::AuditReport;
use crate::energy::{AbsorbReport, EnergyRecord};
use crate::error::Result;
use crate::process::{System, Trajectory};

/// Ordered `key: value` provenance lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        // keep every entry on one line
        let value = value.to_string().replace(['\n', '\r'], " ");
        self.entries.push((key.into(), value));
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn write_to(&self, w: &mut impl Write) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }
}

/// Writes provenance lines, the column row and the data rows.
pub fn write_rows<W: Write>(mut w: W, header: &Header, columns: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    header.write_to(&mut w)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(columns)?;
    for row in rows {
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn modal_columns(modes: usize) -> Vec<String> {
    (1..=modes)
        .map(|k| format!("u{k}"))
        .chain((1..=modes).map(|k| format!("v{k}")))
        .collect()
}

/// `time, x_norm, E0[, u1.., v1..]`.
pub fn write_trajectory<W: Write>(w: W, header: &Header, traj: &Trajectory, system: &System, with_modes: bool) -> Result<()> {
    let mut columns = cols(&["time", "x_norm", "E0"]);
    let modes = traj.last().modes();
    if with_modes {
        columns.extend(modal_columns(modes));
    }
    let rows = traj
        .states
        .iter()
        .map(|s| {
            let e0 = crate::energy::energy0(s, &system.nonlinearity, &system.basis)?;
            let mut row = vec![num(s.time.to_f64()), num(s.x_norm(&system.basis)), num(e0)];
            if with_modes {
                row.extend(s.u.iter().chain(&s.v).map(|x| num(*x)));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    write_rows(w, header, &columns, rows.into_iter())
}

pub const ENERGY_COLUMNS: [&str; 5] = ["time", "E0", "E_eps", "damping_power", "forcing_power"];

pub fn write_energy<W: Write>(w: W, header: &Header, records: &[EnergyRecord]) -> Result<()> {
    let rows = records
        .iter()
        .map(|r| vec![num(r.time), num(r.e0), num(r.e_eps), num(r.damping_power), num(r.forcing_power)]);
    write_rows(w, header, &cols(&ENERGY_COLUMNS), rows)
}

pub const COMPACTNESS_COLUMNS: [&str; 16] = [
    "pair", "delta", "T", "C_delta", "E_w_T", "phi", "phi_f_double", "phi_g_double", "phi_f_wt", "phi_h_w",
    "phi_f_w", "phi_g_w", "C_M", "slack", "E_w_scale", "passed",
];

pub fn write_compactness<W: Write>(w: W, header: &Header, reports: &[CompactnessReport]) -> Result<()> {
    let rows = reports.iter().map(|r| {
        let mut row = vec![
            r.pair.to_string(),
            num(r.delta),
            num(r.t),
            num(r.c_delta),
            num(r.e_w_t),
            num(r.phi),
        ];
        row.extend(r.components.iter().map(|c| num(*c)));
        row.extend([num(r.c_m), num(r.slack), num(r.e_w_scale), r.passed().to_string()]);
        row
    });
    write_rows(w, header, &cols(&COMPACTNESS_COLUMNS), rows)
}

/// `point, x_norm, u1.., v1..`.
pub fn write_cloud<W: Write>(w: W, header: &Header, cloud: &Cloud, system: &System) -> Result<()> {
    let modes = cloud.points.first().map(|p| p.modes()).unwrap_or(system.modes());
    let mut columns = cols(&["point", "x_norm"]);
    columns.extend(modal_columns(modes));
    let rows = cloud.points.iter().enumerate().map(|(i, p)| {
        let mut row = vec![i.to_string(), num(p.x_norm(&system.basis))];
        row.extend(p.u.iter().chain(&p.v).map(|x| num(*x)));
        row
    });
    write_rows(w, header, &columns, rows)
}

pub const ABSORB_COLUMNS: [&str; 7] = [
    "state", "symbol", "initial_norm", "entry_time", "post_entry_sup", "post_transient_sup", "m_ratio",
];

pub fn write_absorb<W: Write>(w: W, header: &Header, report: &AbsorbReport) -> Result<()> {
    let rows = report.runs.iter().map(|r| {
        vec![
            r.state_index.to_string(),
            r.symbol_index.to_string(),
            num(r.initial_norm),
            num(r.entry_time),
            num(r.post_entry_sup),
            num(r.post_transient_sup),
            num(r.m_ratio),
        ]
    });
    write_rows(w, header, &cols(&ABSORB_COLUMNS), rows)
}

/// Plain-text summary of an absorbing-set estimate.
pub fn absorb_summary(report: &AbsorbReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("ensemble: {}\n", report.descriptor));
    s.push_str(&format!("runs: {}\n", report.runs.len()));
    s.push_str(&format!("rho: {}\n", report.rho));
    s.push_str(&format!("rho per symbol: {:?}\n", report.rho_per_symbol));
    s.push_str(&format!("rho spread (max/min over symbols): {}\n", report.rho_spread));
    s.push_str(&format!("entry-time spread: {}\n", report.entry_spread));
    s.push_str(&format!("max post-entry x_norm: {}\n", report.max_post_entry));
    s.push_str(&format!("permanence within 1.1 rho: {}\n", report.permanence_holds()));
    s.push_str(&format!("M in E0(t) <= M(1 + sqrt(E0(0))): {}\n", report.m_fit));
    s
}

pub const SEMIDIST_COLUMNS: [&str; 3] = ["series", "checkpoint", "semidistance"];

/// Long-format semidistance series: one row per (series label, checkpoint).
pub fn write_semidistance<W: Write>(w: W, header: &Header, series: &[(String, Vec<(f64, f64)>)]) -> Result<()> {
    let rows = series
        .iter()
        .flat_map(|(label, pts)| pts.iter().map(move |(t, d)| vec![label.clone(), num(*t), num(*d)]));
    write_rows(w, header, &cols(&SEMIDIST_COLUMNS), rows)
}

/// Successive pullback semidistances in semidistance format.
pub fn pullback_series(report: &PullbackReport) -> (String, Vec<(f64, f64)>) {
    (
        format!("pullback s={}", report.s),
        report.horizons.iter().skip(1).copied().zip(report.successive.iter().copied()).collect(),
    )
}

pub const AUDIT_COLUMNS: [&str; 5] = ["subject", "kind", "id", "value", "detail"];

/// Checks and fitted constants of one or more audits.
pub fn write_audit<W: Write>(w: W, header: &Header, reports: &[AuditReport]) -> Result<()> {
    let rows = reports.iter().flat_map(|r| {
        r.checks
            .iter()
            .map(move |c| {
                vec![
                    r.subject.clone(),
                    "check".into(),
                    c.id.to_string(),
                    if c.passed { "PASSED".into() } else { "FAILED".into() },
                    format!("margin={}; {}", num(c.margin), c.detail),
                ]
            })
            .chain(r.constants.iter().map(move |(name, v)| {
                vec![r.subject.clone(), "constant".into(), name.to_string(), num(*v), String::new()]
            }))
    });
    write_rows(w, header, &cols(&AUDIT_COLUMNS), rows)
}

/// Splits a CSV written by this module into its header entries and the
/// data rows (first row = column names).
pub fn read_table(text: &str) -> Result<(Header, Vec<Vec<String>>)> {
    let mut header = Header::new();
    let mut body = String::new();
    for line in text.lines() {
        match line.strip_prefix('#') {
            Some(rest) => {
                let rest = rest.trim_start();
                let (k, v) = rest.split_once(": ").unwrap_or((rest, ""));
                header.push(k, v);
            }
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(body.as_bytes());
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
    Ok((header, rows))
}
