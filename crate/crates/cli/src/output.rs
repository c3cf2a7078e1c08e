//! CSV and report writers.
//!
//! Observables CSV columns: `cycle`, one `ramp_p<pulse>_<field>` per ramp
//! channel, `mean_<level>` and `std_<level>` per watched level (level written
//! as `nx_ny_nz`), then `mean_shell`. Events CSV columns: `cycle`,
//! `pulse_index`, `from_id`, `excited_id`, `to_id`. Floats carry 17
//! significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use lasercond::basis::Basis;
use lasercond::dynamics::{EmissionEvent, StatRow};
use lasercond::schedule::RampField;

use crate::error::CliError;

pub const EVENTS_HEADER: &str = "cycle,pulse_index,from_id,excited_id,to_id";

/// Float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(io)?;
        }
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(contents).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn level_tag(basis: &Basis, id: usize) -> String {
    let parts: Vec<String> = basis.level(id).components().iter().map(|c| c.to_string()).collect();
    parts.join("_")
}

pub fn observables_header(basis: &Basis, ramp_channels: &[(usize, RampField)], watched: &[usize]) -> String {
    let mut cols = vec!["cycle".to_string()];
    for (p, f) in ramp_channels {
        cols.push(format!("ramp_p{p}_{}", f.label()));
    }
    for &w in watched {
        let t = level_tag(basis, w);
        cols.push(format!("mean_{t}"));
        cols.push(format!("std_{t}"));
    }
    cols.push("mean_shell".into());
    cols.join(",")
}

pub fn observables_csv(
    basis: &Basis,
    ramp_channels: &[(usize, RampField)],
    watched: &[usize],
    rows: &[StatRow],
) -> String {
    let mut out = observables_header(basis, ramp_channels, watched);
    out.push('\n');
    for r in rows {
        write!(out, "{}", r.cycle).unwrap();
        for &v in &r.ramp {
            write!(out, ",{}", fmt_f64(v)).unwrap();
        }
        for (m, s) in r.mean.iter().zip(&r.std) {
            write!(out, ",{},{}", fmt_f64(*m), fmt_f64(*s)).unwrap();
        }
        writeln!(out, ",{}", fmt_f64(r.mean_shell)).unwrap();
    }
    out
}

pub fn events_csv(events: &[EmissionEvent]) -> String {
    let mut out = String::with_capacity(24 * events.len() + 48);
    out.push_str(EVENTS_HEADER);
    out.push('\n');
    for e in events {
        writeln!(out, "{},{},{},{},{}", e.cycle, e.pulse, e.from, e.excited, e.to).unwrap();
    }
    out
}
