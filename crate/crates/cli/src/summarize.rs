//! `summarize`: per-method gap/regret statistics with best-equivalence marks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use modbo::benchmarks::benchmark;
use modbo::metrics::{gap, mark_equivalent_to_best, ComparisonTable, MetricKind};
use serde::{Deserialize, Serialize};

use crate::run::TraceSidecar;
use crate::{CliError, CliResult};

/// The columns of one trace CSV that the metrics need.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRows {
    pub f_raw: Vec<f64>,
    pub best_so_far: Vec<f64>,
}

pub fn read_trace_csv(path: &Path) -> CliResult<TraceRows> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Runtime(format!("{}: missing column {name}", path.display())))
    };
    let (fi, bi) = (col("f_raw")?, col("best_so_far")?);
    let mut rows = TraceRows {
        f_raw: Vec::new(),
        best_so_far: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec?;
        let parse = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
        };
        rows.f_raw.push(parse(fi)?);
        rows.best_so_far.push(parse(bi)?);
    }
    Ok(rows)
}

/// Per-run metric values, keyed by surrogate tag, in repetition order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub benchmark: String,
    pub f_opt: f64,
    pub runs: BTreeMap<String, Vec<f64>>,
    pub table: ComparisonTable,
}

fn sidecars(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".trace.json"))
        .collect();
    v.sort();
    Ok(v)
}

/// Gap (higher is better) or final simple regret per run, computed from the
/// CSV rows; the sidecars supply benchmark, method and design size.
pub fn summarize(dir: &Path, metric: MetricKind) -> CliResult<Summary> {
    let paths = sidecars(dir)?;
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no traces in {}", dir.display())));
    }
    let mut bench: Option<String> = None;
    let mut runs: BTreeMap<String, Vec<(usize, f64)>> = BTreeMap::new();
    for p in &paths {
        let text = fs::read_to_string(p)?;
        let side: TraceSidecar =
            serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
        match &bench {
            None => bench = Some(side.benchmark.clone()),
            Some(b) if *b != side.benchmark => {
                return Err(CliError::Runtime(format!(
                    "traces from different benchmarks ({b}, {}) in one directory",
                    side.benchmark
                )))
            }
            _ => {}
        }
        let name = p.file_name().unwrap().to_string_lossy();
        let csv = p.with_file_name(format!("{}.csv", name.trim_end_matches(".trace.json")));
        let rows = read_trace_csv(&csv)?;
        let Some(&f_best) = rows.best_so_far.last() else {
            return Err(CliError::Runtime(format!("{}: empty trace", csv.display())));
        };
        let f_opt = benchmark(bench.as_deref().unwrap())?.known_min;
        let init = side.trace.initial_points.min(rows.f_raw.len());
        let f_first = rows.f_raw[..init].iter().copied().fold(f64::INFINITY, f64::min);
        let value = match metric {
            MetricKind::Gap => gap(f_first, f_best, f_opt)?,
            MetricKind::Regret => f_best - f_opt,
        };
        runs.entry(side.surrogate.tag().to_string())
            .or_default()
            .push((side.repetition, value));
    }
    let benchmark_name = bench.unwrap();
    let runs: BTreeMap<String, Vec<f64>> = runs
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by_key(|(r, _)| *r);
            (k, v.into_iter().map(|(_, x)| x).collect())
        })
        .collect();
    let table = mark_equivalent_to_best(&runs, metric).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(Summary {
        f_opt: benchmark(&benchmark_name)?.known_min,
        benchmark: benchmark_name,
        runs,
        table,
    })
}

pub fn metric_name(m: MetricKind) -> &'static str {
    match m {
        MetricKind::Gap => "gap",
        MetricKind::Regret => "regret",
    }
}

/// Fixed-width text table; `*` marks methods not significantly different
/// from the best.
pub fn render(summary: &Summary) -> String {
    let mut s = String::new();
    let t = &summary.table;
    let _ = writeln!(s, "{} ({}, n = {})", summary.benchmark, metric_name(t.metric), summary.runs.values().next().map_or(0, Vec::len));
    let _ = writeln!(s, "{:<12} {:>10} {:>10} {:>8}", "method", "mean", "std", "p");
    for r in &t.rows {
        let mark = if r.marked { "*" } else { "" };
        let _ = writeln!(s, "{:<12} {:>10.4} {:>10.4} {:>8.4} {mark}", r.method, r.mean, r.std, r.p_value);
    }
    s
}

/// Writes `summary_<metric>.json` into `dir` and returns the text table.
pub fn cmd_summarize(dir: &Path, metric: MetricKind) -> CliResult<String> {
    let summary = summarize(dir, metric)?;
    let path = dir.join(format!("summary_{}.json", metric_name(metric)));
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(format!("json: {e}")))?;
    fs::write(path, json + "\n")?;
    Ok(render(&summary))
}
