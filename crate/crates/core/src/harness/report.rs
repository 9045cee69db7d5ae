use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{method_name, ExperimentConfig};
use super::run::{InstanceRecord, RunArtifacts};
use crate::diagnostics::{mean_ci, paired_ci, Interval};
use crate::error::{Error, Result};
use crate::initializers::fmt_f64;
use crate::problems::{Instance, ProblemFamily};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub budget: usize,
    pub mean: f64,
    pub ci: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub single_start: bool,
    pub curve: Vec<CurvePoint>,
    pub final_mean: f64,
    pub histogram: Vec<HistogramBin>,
    /// `None` for families without a side constraint.
    pub constraint_violation: Option<f64>,
    pub mean_iterations: f64,
}

/// Interval on `mean(a − b)` at one budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub a: String,
    pub b: String,
    pub budget: usize,
    pub mean_diff: f64,
    pub ci: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub family: String,
    pub test_size: usize,
    pub budgets: Vec<usize>,
    pub confidence: f64,
    pub methods: Vec<MethodReport>,
    pub pairwise: Vec<PairedComparison>,
    /// Lowest-mean single-start method at each budget.
    pub best_single_start: Vec<String>,
    /// Every method saw the same instance sequence.
    pub paired_design: bool,
}

impl ComparisonTable {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }

    pub fn comparison(&self, a: &str, b: &str, budget: usize) -> Option<&PairedComparison> {
        self.pairwise.iter().find(|c| c.a == a && c.b == b && c.budget == budget)
    }
}

/// Fraction of flagged records that violate the constraint. `Ok(None)` when
/// the family has no constraint.
pub fn violation_fraction(flags: &[Option<bool>]) -> Result<Option<f64>> {
    if flags.is_empty() {
        return Err(Error::input("no records to check"));
    }
    if flags.iter().any(Option::is_none) {
        return Ok(None);
    }
    let bad = flags.iter().filter(|f| **f == Some(true)).count();
    Ok(Some(bad as f64 / flags.len() as f64))
}

/// Fraction of solved `(instance, θ†)` pairs whose θ† violates the family's constraint.
pub fn constraint_violation_fraction(family: &dyn ProblemFamily, solved: &[(Instance, Vec<f64>)]) -> Result<Option<f64>> {
    let flags: Vec<Option<bool>> = solved
        .iter()
        .map(|(inst, theta)| family.constraint_check(theta, inst).map(|ok| !ok))
        .collect();
    violation_fraction(&flags)
}

fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<HistogramBin> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in values {
        let k = if width > 0.0 { ((v - lo) / width).floor() as usize } else { 0 };
        counts[k.min(bins - 1)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            left: lo + k as f64 * width,
            right: if k + 1 == bins { hi } else { lo + (k + 1) as f64 * width },
            count,
        })
        .collect()
}

fn interval_or_point(values: &[f64], confidence: f64) -> Result<Interval> {
    if values.len() < 2 {
        Ok(Interval::point(values.iter().sum::<f64>() / values.len() as f64))
    } else {
        mean_ci(values, confidence)
    }
}

/// Aggregates per-instance records (ordered by instance, then roster) into a table.
pub fn build_table(cfg: &ExperimentConfig, family: &str, records: &[InstanceRecord]) -> Result<ComparisonTable> {
    let k = cfg.methods.len();
    let t = cfg.test_size;
    if records.len() != k * t {
        return Err(Error::input(format!("expected {} records, got {}", k * t, records.len())));
    }
    let by_method: Vec<Vec<&InstanceRecord>> = (0..k).map(|j| records.iter().skip(j).step_by(k).collect()).collect();
    let paired_design = by_method
        .iter()
        .all(|rs| rs.iter().zip(&by_method[0]).all(|(a, b)| a.instance_hash == b.instance_hash && a.instance == b.instance));
    let finals: Vec<f64> = records.iter().map(|r| r.final_objective).collect();
    let lo = finals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let budgets = &cfg.gd.budgets;
    let column = |rs: &[&InstanceRecord], c: usize| -> Vec<f64> { rs.iter().map(|r| r.curve[c]).collect() };

    let mut methods = Vec::with_capacity(k);
    for (kind, rs) in cfg.methods.iter().zip(&by_method) {
        let curve = budgets
            .iter()
            .enumerate()
            .map(|(c, &budget)| {
                let vals = column(rs, c);
                Ok(CurvePoint {
                    budget,
                    mean: vals.iter().sum::<f64>() / t as f64,
                    ci: interval_or_point(&vals, cfg.confidence)?,
                })
            })
            .collect::<Result<_>>()?;
        let f: Vec<f64> = rs.iter().map(|r| r.final_objective).collect();
        let flags: Vec<Option<bool>> = rs.iter().map(|r| r.violated).collect();
        methods.push(MethodReport {
            method: method_name(kind),
            single_start: kind.is_single_start(),
            curve,
            final_mean: f.iter().sum::<f64>() / t as f64,
            histogram: histogram(&f, lo, hi, cfg.histogram_bins),
            constraint_violation: violation_fraction(&flags)?,
            mean_iterations: rs.iter().map(|r| r.iterations_used as f64).sum::<f64>() / t as f64,
        });
    }

    let mut pairwise = Vec::new();
    if t >= 2 {
        for a in 0..k {
            for b in a + 1..k {
                for (c, &budget) in budgets.iter().enumerate() {
                    let (va, vb) = (column(&by_method[a], c), column(&by_method[b], c));
                    let ci = paired_ci(&va, &vb, cfg.confidence)?;
                    let mean_diff = va.iter().zip(&vb).map(|(x, y)| x - y).sum::<f64>() / t as f64;
                    pairwise.push(PairedComparison {
                        a: methods[a].method.clone(),
                        b: methods[b].method.clone(),
                        budget,
                        mean_diff,
                        ci,
                    });
                }
            }
        }
    }

    let best_single_start = (0..budgets.len())
        .map(|c| {
            methods
                .iter()
                .filter(|m| m.single_start)
                .min_by(|x, y| x.curve[c].mean.total_cmp(&y.curve[c].mean))
                .map(|m| m.method.clone())
                .unwrap_or_default()
        })
        .collect();

    Ok(ComparisonTable {
        family: family.to_string(),
        test_size: t,
        budgets: budgets.clone(),
        confidence: cfg.confidence,
        methods,
        pairwise,
        best_single_start,
        paired_design,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub crate_name: String,
    pub crate_version: String,
    pub seed: u64,
    pub seed_derivation: String,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            crate_name: env!("CARGO_PKG_NAME").into(),
            crate_version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            seed_derivation: "splitmix64 fold of (seed, stage, ...); stages: family=1 phase1=2 paired=3 \
                              h_val=4 h_arg=5 psi=6 maml=7 test_instances=8 propose=9"
                .into(),
            config: config.clone(),
        }
    }
}

/// Reads an experiment config, or the config embedded in a `manifest.json`.
pub fn load_config_or_manifest(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })?;
    let cfg = match value.get("config") {
        Some(inner) if value.get("family").is_none() => inner.clone(),
        _ => value,
    };
    ExperimentConfig::from_json_str(&cfg.to_string())
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn strings(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Writes `curves.csv`, `histogram.csv`, `records.csv`, `table.json`,
/// `training.json`, `timing.json` and `manifest.json` into `dir`.
pub fn emit_reports(run: &RunArtifacts, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let table = &run.table;

    write_rows(
        &dir.join("curves.csv"),
        &strings(&["method", "iteration_budget", "mean_objective", "ci_low", "ci_high"]),
        table.methods.iter().flat_map(|m| {
            m.curve.iter().map(|p| {
                vec![
                    m.method.clone(),
                    p.budget.to_string(),
                    fmt_f64(p.mean),
                    fmt_f64(p.ci.low),
                    fmt_f64(p.ci.high),
                ]
            })
        }),
    )?;

    write_rows(
        &dir.join("histogram.csv"),
        &strings(&["method", "bin_left", "bin_right", "count"]),
        table.methods.iter().flat_map(|m| {
            m.histogram
                .iter()
                .map(|b| vec![m.method.clone(), fmt_f64(b.left), fmt_f64(b.right), b.count.to_string()])
        }),
    )?;

    let mut header = strings(&["instance", "instance_hash", "method", "final_objective", "iterations_used", "violated"]);
    header.extend(table.budgets.iter().map(|b| format!("objective_at_{b}")));
    write_rows(
        &dir.join("records.csv"),
        &header,
        run.records.iter().map(|r| {
            let mut row = vec![
                r.instance.to_string(),
                format!("{:016x}", r.instance_hash),
                r.method.clone(),
                fmt_f64(r.final_objective),
                r.iterations_used.to_string(),
                r.violated.map_or_else(|| "na".into(), |v| v.to_string()),
            ];
            row.extend(r.curve.iter().map(|v| fmt_f64(*v)));
            row
        }),
    )?;

    write_file(&dir.join("table.json"), &to_json(table))?;
    write_file(&dir.join("training.json"), &to_json(&run.training))?;
    write_file(&dir.join("timing.json"), &to_json(&run.timing))?;
    write_file(&dir.join("manifest.json"), &to_json(&Manifest::new(&run.config)))
}
