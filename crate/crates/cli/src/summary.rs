//! Table summary of a drone-scenario bundle, rebuilt from the CSVs on disk.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use crate::experiments::median;

pub const TARGETS_FILE: &str = "targets.csv";
pub const ESTIMATES_FILE: &str = "estimates.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

const QUANTITIES: [&str; 5] = ["range", "velocity", "elevation", "azimuth", "gain"];

/// One `(drone, snapshot)` row: target values plus conducted and OTA estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub drone: usize,
    pub snapshot: String,
    /// Per quantity: `[target, conducted, ota]`, in `range, velocity, elevation, azimuth, gain` order.
    pub values: [[Option<f64>; 3]; 5],
    pub psp_conducted: Option<f64>,
    /// Median over OTA seeds.
    pub psp_ota: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

pub fn header() -> Vec<String> {
    let mut h = vec!["drone".to_string(), "snapshot".to_string()];
    for q in QUANTITIES {
        for col in ["target", "conducted", "ota"] {
            h.push(format!("{q}_{col}"));
        }
    }
    h.push("psp_conducted".into());
    h.push("psp_ota".into());
    h
}

fn parse_opt(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

fn read_csv_rows(path: &Path) -> io::Result<Option<Vec<Vec<String>>>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some(
        text.lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect(),
    ))
}

type EstimateEntry = (String, String, Vec<String>);

fn bad_row(file: &str, row: &[String]) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("{file}: malformed row {:?}", row.join(",")))
}

/// Builds the summary table from `targets.csv` and `estimates.csv`; a bundle
/// without them gives an empty table.
pub fn load_summary(dir: &Path) -> io::Result<SummaryTable> {
    let Some(targets) = read_csv_rows(&dir.join(TARGETS_FILE))? else {
        return Ok(SummaryTable::default());
    };
    let estimates = read_csv_rows(&dir.join(ESTIMATES_FILE))?.unwrap_or_default();

    // (snapshot, target) -> every (mode, seed, row) estimated for it
    let mut by_key: BTreeMap<(String, usize), Vec<EstimateEntry>> = BTreeMap::new();
    for row in &estimates {
        if row.len() != 11 {
            return Err(bad_row(ESTIMATES_FILE, row));
        }
        let target: usize = row[1].parse().map_err(|_| bad_row(ESTIMATES_FILE, row))?;
        by_key.entry((row[0].clone(), target)).or_default().push((row[2].clone(), row[3].clone(), row.clone()));
    }

    let mut rows = Vec::new();
    for row in &targets {
        if row.len() != 7 {
            return Err(bad_row(TARGETS_FILE, row));
        }
        let drone: usize = row[1].parse().map_err(|_| bad_row(TARGETS_FILE, row))?;
        let entries = by_key.get(&(row[0].clone(), drone)).cloned().unwrap_or_default();
        let pick = |mode: &str| entries.iter().find(|e| e.0 == mode).map(|e| &e.2);
        let conducted = pick("conducted");
        let ota = pick("ota");
        let mut values = [[None; 3]; 5];
        for q in 0..5 {
            values[q][0] = parse_opt(&row[2 + q]);
            // estimate columns: range, velocity, elevation, azimuth at 4..8, gain at 9
            let col = if q == 4 { 9 } else { 4 + q };
            values[q][1] = conducted.and_then(|r| parse_opt(&r[col]));
            values[q][2] = ota.and_then(|r| parse_opt(&r[col]));
        }
        let ota_psp: Vec<f64> = entries.iter().filter(|e| e.0 == "ota").filter_map(|e| parse_opt(&e.2[10])).collect();
        rows.push(SummaryRow {
            drone,
            snapshot: row[0].clone(),
            values,
            psp_conducted: conducted.and_then(|r| parse_opt(&r[10])),
            psp_ota: (!ota_psp.is_empty()).then(|| median(&ota_psp)),
        });
    }
    // Group by drone; snapshots keep their file order.
    rows.sort_by_key(|r| r.drone);
    Ok(SummaryTable { rows })
}

impl SummaryTable {
    fn cells(&self) -> Vec<Vec<String>> {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
        self.rows
            .iter()
            .map(|r| {
                let mut c = vec![r.drone.to_string(), r.snapshot.clone()];
                for q in &r.values {
                    c.extend(q.iter().map(|v| fmt(*v)));
                }
                c.push(fmt(r.psp_conducted));
                c.push(fmt(r.psp_ota));
                c
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = header().join(",");
        out.push('\n');
        for row in self.cells() {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let head = header();
        let cells = self.cells();
        let widths: Vec<usize> =
            (0..head.len()).map(|i| cells.iter().map(|r| r[i].len()).chain([head[i].len()]).max().unwrap_or(0)).collect();
        let line =
            |row: &[String]| row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string();
        let mut out = line(&head);
        out.push('\n');
        for row in &cells {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

/// Writes `summary.csv` and `summary.txt` into the bundle directory.
pub fn write_summary(dir: &Path) -> io::Result<SummaryTable> {
    let table = load_summary(dir)?;
    fs::write(dir.join(SUMMARY_CSV), table.to_csv())?;
    fs::write(dir.join(SUMMARY_TXT), table.to_text())?;
    Ok(table)
}
