//! Columnar CSV for solved records.
//!
//! Phase-1 columns: `x_0..x_{n-1}, init_0..init_{m-1}, sol_0..sol_{m-1}, value`.
//! Paired columns: `x_*, init0_*, init1_*, val0, val1`.

use std::path::Path;

use super::phase1::{PairedRecord, Phase1Record};
use crate::error::{Error, Result};
use crate::problems::Instance;

/// 17 significant digits, round-trips every f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::input(format!("{}: {other:?}", path.display())),
    }
}

fn names(prefix: &str, k: usize) -> impl Iterator<Item = String> + '_ {
    (0..k).map(move |i| format!("{prefix}_{i}"))
}

fn count(header: &csv::StringRecord, prefix: &str) -> usize {
    let p = format!("{prefix}_");
    header
        .iter()
        .filter(|h| h.strip_prefix(&p).is_some_and(|rest| rest.parse::<usize>().is_ok()))
        .count()
}

fn parse_row(row: &csv::StringRecord, line: usize) -> Result<Vec<f64>> {
    row.iter()
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::input(format!("unparseable number `{s}`")).at_record(line))
        })
        .collect()
}

pub fn write_phase1_csv(path: &Path, records: &[Phase1Record]) -> Result<()> {
    let (m, n) = records
        .first()
        .map_or((0, 0), |r| (r.init.len(), r.instance.dim()));
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = names("x", n)
        .chain(names("init", m))
        .chain(names("sol", m))
        .chain(std::iter::once("value".to_string()))
        .collect();
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for r in records {
        let row: Vec<String> = r
            .instance
            .x
            .iter()
            .chain(&r.init)
            .chain(&r.solution_arg)
            .chain(std::iter::once(&r.solution_val))
            .map(|v| fmt_f64(*v))
            .collect();
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_phase1_csv(path: &Path) -> Result<Vec<Phase1Record>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let (n, m) = (count(&header, "x"), count(&header, "init"));
    if count(&header, "sol") != m || header.len() != n + 2 * m + 1 {
        return Err(Error::input(format!("{}: not a phase-1 record file", path.display())));
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let v = parse_row(&row, i)?;
        if v.len() != header.len() {
            return Err(Error::input("wrong column count").at_record(i));
        }
        out.push(Phase1Record {
            instance: Instance::new(v[..n].to_vec()),
            init: v[n..n + m].to_vec(),
            solution_arg: v[n + m..n + 2 * m].to_vec(),
            solution_val: v[n + 2 * m],
        });
    }
    Ok(out)
}

pub fn write_paired_csv(path: &Path, records: &[PairedRecord]) -> Result<()> {
    let (m, n) = records
        .first()
        .map_or((0, 0), |r| (r.init0.len(), r.instance.dim()));
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = names("x", n)
        .chain(names("init0", m))
        .chain(names("init1", m))
        .chain(["val0".to_string(), "val1".to_string()])
        .collect();
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for r in records {
        let row: Vec<String> = r
            .instance
            .x
            .iter()
            .chain(&r.init0)
            .chain(&r.init1)
            .chain([&r.val0, &r.val1])
            .map(|v| fmt_f64(*v))
            .collect();
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_paired_csv(path: &Path) -> Result<Vec<PairedRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let (n, m) = (count(&header, "x"), count(&header, "init0"));
    if count(&header, "init1") != m || header.len() != n + 2 * m + 2 {
        return Err(Error::input(format!("{}: not a paired record file", path.display())));
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let v = parse_row(&row, i)?;
        if v.len() != header.len() {
            return Err(Error::input("wrong column count").at_record(i));
        }
        out.push(PairedRecord {
            instance: Instance::new(v[..n].to_vec()),
            init0: v[n..n + m].to_vec(),
            init1: v[n + m..n + 2 * m].to_vec(),
            val0: v[n + 2 * m],
            val1: v[n + 2 * m + 1],
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase1_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let recs = vec![
            Phase1Record {
                instance: Instance::new(vec![0.1, 1.0 / 3.0, -2.5e-17]),
                init: vec![std::f64::consts::PI, -1.0],
                solution_arg: vec![1e300, 0.0],
                solution_val: -0.7,
            };
            3
        ];
        write_phase1_csv(&p, &recs).unwrap();
        assert_eq!(read_phase1_csv(&p).unwrap(), recs);
    }

    #[test]
    fn paired_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        let recs = vec![PairedRecord {
            instance: Instance::new(vec![0.1, 0.2]),
            init0: vec![1.0 / 7.0],
            init1: vec![2.0 / 7.0],
            val0: 1.5,
            val1: -1.5,
        }];
        write_paired_csv(&p, &recs).unwrap();
        assert_eq!(read_paired_csv(&p).unwrap(), recs);
        assert!(read_phase1_csv(&p).is_err());
    }

    #[test]
    fn bad_numbers_name_the_record() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "x_0,init_0,sol_0,value\n1,2,3,4\n1,oops,3,4\n").unwrap();
        let err = read_phase1_csv(&p).unwrap_err();
        assert!(matches!(err, Error::Record { index: 1, .. }), "{err}");
    }
}
