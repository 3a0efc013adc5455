//! CSV datasets and their provenance sidecars.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const FIG1_HEADER: &[&str] = &[
    "lambda",
    "L",
    "alpha",
    "theta",
    "beta",
    "d",
    "R",
    "trials",
    "seed",
    "mode",
    "pout_sim",
    "ci_low",
    "ci_high",
    "pout_lower_bound",
    "pout_upper_bound",
    "upper_bound_stderr",
];
pub const FIG2_HEADER: &[&str] = &[
    "L",
    "epsilon",
    "lambda_eps",
    "capacity",
    "capacity_err_low",
    "capacity_err_high",
    "alpha",
    "theta",
    "beta",
    "d",
    "seed",
];
pub const FIG3_HEADER: &[&str] = &[
    "L",
    "epsilon",
    "capacity_sim",
    "capacity_err_low",
    "capacity_err_high",
    "asym_low",
    "asym_high",
    "kappa1",
    "kappa2",
    "kappa3_or_blank",
];

/// Version and source revision of this build.
pub fn build_id() -> String {
    format!("{}+{}", env!("CARGO_PKG_VERSION"), env!("TXCAP_GIT_REV"))
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
    Blank,
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            // 17 significant digits round-trip every f64
            Cell::Real(v) => write!(out, "{v:.16e}"),
            Cell::Int(v) => write!(out, "{v}"),
            Cell::Text(s) => write!(out, "{s}"),
            Cell::Blank => Ok(()),
        }
        .expect("writing to a String cannot fail");
    }
}

pub trait CsvRow {
    fn cells(&self) -> Vec<Cell>;
}

pub fn render_csv<R: CsvRow>(header: &[&str], rows: &[R]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (i, cell) in row.cells().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            cell.render(&mut out);
        }
        out.push('\n');
    }
    out
}

/// Path of the JSON provenance file written next to `csv`.
pub fn meta_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_stem().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    csv.with_file_name(name)
}

/// Writes `csv` and a `<stem>.meta.json` sidecar holding `meta`.
pub fn write_dataset<M: Serialize>(path: &Path, csv: &str, meta: &M) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, csv)?;
    let mut json = serde_json::to_string_pretty(meta).map_err(io::Error::other)?;
    json.push('\n');
    fs::write(meta_path(path), json)
}
