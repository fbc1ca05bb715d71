//! CSV emission and parsing of sweep summaries.

use std::fmt::Write as _;
use std::path::Path;

use super::{CellSummary, RunReport, Scheme};
use crate::error::{Error, Result};

pub const HEADER: &str = "scheme,users,p_max_dbw,mean_sum_rate,std_sum_rate,drops,infeasible";

/// Rounds to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Shortest text that reads back as `round_sig9(x)`.
pub fn format_float(x: f64) -> String {
    let r = round_sig9(x);
    if r.is_nan() {
        "nan".to_string()
    } else {
        format!("{r}")
    }
}

pub fn to_csv(report: &RunReport) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for c in &report.cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.scheme,
            c.users,
            format_float(c.p_max_dbw),
            format_float(c.mean_sum_rate),
            format_float(c.std_sum_rate),
            c.drops,
            c.infeasible
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn emit_csv(report: &RunReport, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, to_csv(report)).map_err(|e| Error::io(path, e))
}

/// Reads rows written by [`to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<CellSummary>> {
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(Error::invalid("missing or unexpected CSV header"));
    }
    lines
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::invalid(format!("malformed CSV row {}: {line:?}", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad());
            }
            Ok(CellSummary {
                scheme: Scheme::from_name(f[0]).ok_or_else(bad)?,
                users: f[1].parse().map_err(|_| bad())?,
                p_max_dbw: f[2].parse().map_err(|_| bad())?,
                mean_sum_rate: f[3].parse().map_err(|_| bad())?,
                std_sum_rate: f[4].parse().map_err(|_| bad())?,
                drops: f[5].parse().map_err(|_| bad())?,
                infeasible: f[6].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(scheme: Scheme, users: usize, mean: f64) -> CellSummary {
        CellSummary {
            scheme,
            users,
            p_max_dbw: 30.0,
            mean_sum_rate: mean,
            std_sum_rate: 0.123_456_789_123,
            drops: 5,
            infeasible: 1,
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(to_csv(&RunReport::default()), format!("{HEADER}\n"));
    }

    #[test]
    fn rounding() {
        assert_eq!(format_float(1.0), "1");
        assert_eq!(format_float(123.456_789_012_3), "123.456789");
        assert_eq!(format_float(0.1 + 0.2), "0.3");
        assert_eq!(format_float(-104.0), "-104");
        assert_eq!(format_float(1.234_567_891_5e-7), "0.000000123456789");
    }

    #[test]
    fn round_trip() {
        let report = RunReport {
            cells: vec![cell(Scheme::Sfma, 10, 42.123_456_789_9), cell(Scheme::Fnoma, 10, 37.0)],
            records: Vec::new(),
        };
        let text = to_csv(&report);
        assert_eq!(text.lines().count(), 3);
        let back = parse_csv(&text).unwrap();
        for (a, b) in report.cells.iter().zip(&back) {
            assert_eq!(a.scheme, b.scheme);
            assert_eq!(b.mean_sum_rate, round_sig9(a.mean_sum_rate));
            assert_eq!(b.std_sum_rate, round_sig9(a.std_sum_rate));
            assert_eq!((a.users, a.drops, a.infeasible), (b.users, b.drops, b.infeasible));
        }
    }

    #[test]
    fn emit_writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out/sweep.csv");
        emit_csv(&RunReport::default(), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{HEADER}\n"));
    }
}
