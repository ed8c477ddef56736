//! `report`: aggregate experiment logs into summary tables and a plot.
//!
//! Reads every `*.csv` in the log directory (all must carry the experiment
//! log schema) and writes, only after everything has been read and computed:
//!
//! - `summary.csv`: `strategy,iteration,cumulative_samples,runs,mean_precision,mean_recall,mean_f1`,
//!   one row per strategy and iteration (benchmark rows are keyed by proxy epoch)
//! - `runtime.csv`: `method,runs,avg_runtime_s,time_reduction_pct,target_f1,samples_to_target,sample_reduction_pct,best_f1`
//! - `f1_curve.svg`
//! - `summary.txt`: the runtime table in plain text
//!
//! Means are taken over runs at equal iteration index. Precision, recall and
//! F1 of an empty denominator are reported as 0.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use activecl::eval::{reduction_report, Reduction};
use activecl::record::{read_log, ExperimentRecord, BENCHMARK};
use anyhow::{bail, Context, Result};

use crate::svg::{f1_curve, Series};

#[derive(Debug, Clone, PartialEq)]
pub struct MeanPoint {
    pub iteration: usize,
    pub cumulative_samples: usize,
    pub runs: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeRow {
    pub method: String,
    pub runs: usize,
    pub avg_runtime_s: f64,
    pub time_reduction: Option<f64>,
    pub samples_to_target: Option<usize>,
    pub sample_reduction: Option<f64>,
    pub best_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// Strategy name to mean curve, benchmark included.
    pub curves: BTreeMap<String, Vec<MeanPoint>>,
    pub target_f1: Option<f64>,
    pub runtime: Vec<RuntimeRow>,
}

#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub summary_csv: PathBuf,
    pub runtime_csv: PathBuf,
    pub svg: PathBuf,
    pub text: PathBuf,
}

pub fn read_logs(dir: &Path) -> Result<Vec<(PathBuf, Vec<ExperimentRecord>)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read log directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no experiment logs (*.csv) in {}", dir.display());
    }
    paths
        .into_iter()
        .map(|p| {
            let records = read_log(File::open(&p)?).with_context(|| format!("{}", p.display()))?;
            Ok((p, records))
        })
        .collect()
}

fn mean_curve(runs: &[&[ExperimentRecord]]) -> Vec<MeanPoint> {
    let mut by_iter: BTreeMap<usize, Vec<&ExperimentRecord>> = BTreeMap::new();
    for run in runs {
        for r in run.iter() {
            by_iter.entry(r.iteration).or_default().push(r);
        }
    }
    by_iter
        .into_iter()
        .map(|(iteration, rs)| {
            let n = rs.len() as f64;
            let mean = |f: fn(&ExperimentRecord) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
            MeanPoint {
                iteration,
                cumulative_samples: (rs.iter().map(|r| r.cumulative_samples as f64).sum::<f64>() / n).round() as usize,
                runs: rs.len(),
                precision: mean(|r| r.precision),
                recall: mean(|r| r.recall),
                f1: mean(|r| r.f1),
                wall_time: mean(ExperimentRecord::wall_time),
            }
        })
        .collect()
}

fn as_records(strategy: &str, curve: &[MeanPoint]) -> Vec<ExperimentRecord> {
    curve
        .iter()
        .map(|p| ExperimentRecord {
            run_id: format!("{strategy}-mean"),
            strategy: strategy.to_string(),
            iteration: p.iteration,
            cumulative_samples: p.cumulative_samples,
            precision: p.precision,
            recall: p.recall,
            f1: p.f1,
            t_contrastive_s: p.wall_time,
            t_proxy_s: 0.0,
            t_sampling_s: 0.0,
            loss_trace: Vec::new(),
        })
        .collect()
}

/// Mean curves and the runtime table from parsed logs.
pub fn summarize(logs: &[(PathBuf, Vec<ExperimentRecord>)]) -> Result<Summary> {
    let mut runs: BTreeMap<String, BTreeMap<String, Vec<ExperimentRecord>>> = BTreeMap::new();
    for (path, records) in logs {
        for r in records {
            runs.entry(r.strategy.clone())
                .or_default()
                .entry(r.run_id.clone())
                .or_default()
                .push(r.clone());
        }
        if records.is_empty() {
            log::warn!("{} holds no records", path.display());
        }
    }
    if runs.is_empty() {
        bail!("experiment logs hold no records");
    }

    let mut curves = BTreeMap::new();
    let mut totals = BTreeMap::new();
    for (strategy, by_run) in &runs {
        let slices: Vec<&[ExperimentRecord]> = by_run.values().map(Vec::as_slice).collect();
        curves.insert(strategy.clone(), mean_curve(&slices));
        let per_run: Vec<f64> = slices.iter().map(|s| s.iter().map(ExperimentRecord::wall_time).sum()).collect();
        totals.insert(strategy.clone(), (slices.len(), per_run.iter().sum::<f64>() / per_run.len() as f64));
    }

    let bench_records = curves.get(BENCHMARK).map(|c| as_records(BENCHMARK, c));
    let bench_time = totals.get(BENCHMARK).map(|t| t.1);
    let target_f1 = curves.get(BENCHMARK).map(|c| c.iter().map(|p| p.f1).fold(f64::NEG_INFINITY, f64::max));

    let mut runtime = Vec::new();
    for (strategy, curve) in &curves {
        let (n, avg) = totals[strategy];
        let best_f1 = curve.iter().map(|p| p.f1).fold(f64::NEG_INFINITY, f64::max);
        let mut row = RuntimeRow {
            method: strategy.clone(),
            runs: n,
            avg_runtime_s: avg,
            time_reduction: None,
            samples_to_target: None,
            sample_reduction: None,
            best_f1,
        };
        if let (Some(bench), Some(bt)) = (&bench_records, bench_time) {
            if bt > 0.0 {
                row.time_reduction = Some(1.0 - avg / bt);
            }
            if strategy != BENCHMARK {
                if let Reduction::Reached {
                    samples,
                    sample_reduction,
                    ..
                } = reduction_report(bench, &as_records(strategy, curve))?.outcome
                {
                    row.samples_to_target = Some(samples);
                    row.sample_reduction = Some(sample_reduction);
                }
            } else {
                row.samples_to_target = curve.first().map(|p| p.cumulative_samples);
                row.sample_reduction = Some(0.0);
            }
        }
        runtime.push(row);
    }
    // benchmark first, then strategies alphabetically
    runtime.sort_by_key(|r| (r.method != BENCHMARK, r.method.clone()));
    Ok(Summary {
        curves,
        target_f1,
        runtime,
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_csv(summary: &Summary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "strategy",
        "iteration",
        "cumulative_samples",
        "runs",
        "mean_precision",
        "mean_recall",
        "mean_f1",
    ])?;
    for (strategy, curve) in &summary.curves {
        for p in curve {
            w.write_record([
                strategy.clone(),
                p.iteration.to_string(),
                p.cumulative_samples.to_string(),
                p.runs.to_string(),
                p.precision.to_string(),
                p.recall.to_string(),
                p.f1.to_string(),
            ])?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn runtime_csv(summary: &Summary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "method",
        "runs",
        "avg_runtime_s",
        "time_reduction_pct",
        "target_f1",
        "samples_to_target",
        "sample_reduction_pct",
        "best_f1",
    ])?;
    for r in &summary.runtime {
        w.write_record([
            r.method.clone(),
            r.runs.to_string(),
            format!("{:.3}", r.avg_runtime_s),
            opt(r.time_reduction.map(|v| format!("{:.1}", 100.0 * v))),
            opt(summary.target_f1.map(|v| format!("{v:.4}"))),
            opt(r.samples_to_target),
            opt(r.sample_reduction.map(|v| format!("{:.1}", 100.0 * v))),
            format!("{:.4}", r.best_f1),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn summary_text(summary: &Summary) -> String {
    let mut s = String::new();
    match summary.target_f1 {
        Some(t) => s.push_str(&format!("Target F1 (best benchmark F1): {t:.4}\n\n")),
        None => s.push_str("No benchmark log: reductions are not available.\n\n"),
    }
    s.push_str(&format!(
        "{:<14}{:>6}{:>18}{:>16}{:>18}{:>18}{:>10}\n",
        "Method", "Runs", "Avg runtime (s)", "Time red. (%)", "Samples to F1*", "Sample red. (%)", "Best F1"
    ));
    let dash = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    for r in &summary.runtime {
        let reached = r.samples_to_target.is_some() || summary.target_f1.is_none();
        s.push_str(&format!(
            "{:<14}{:>6}{:>18.1}{:>16}{:>18}{:>18}{:>10.4}\n",
            r.method,
            r.runs,
            r.avg_runtime_s,
            dash(r.time_reduction.map(|v| format!("{:.1}", 100.0 * v))),
            if reached { dash(r.samples_to_target.map(|v| v.to_string())) } else { "not reached".into() },
            dash(r.sample_reduction.map(|v| format!("{:.1}", 100.0 * v))),
            r.best_f1
        ));
    }
    s.push_str("\nPrecision, recall and F1 with an empty denominator count as 0.\n");
    s
}

pub fn plot(summary: &Summary) -> String {
    let series: Vec<Series> = summary
        .curves
        .iter()
        .filter(|(k, _)| k.as_str() != BENCHMARK)
        .map(|(k, c)| Series {
            name: k.clone(),
            points: c.iter().map(|p| (p.cumulative_samples as f64, p.f1)).collect(),
        })
        .collect();
    f1_curve(&series, summary.target_f1.map(|f| (BENCHMARK.to_string(), f)))
}

/// Writes the four report files into `out`. Nothing is written when any log
/// fails to parse.
pub fn cmd_report(logs: &Path, out: &Path) -> Result<ReportFiles> {
    let parsed = read_logs(logs)?;
    let summary = summarize(&parsed)?;
    let summary_csv_text = summary_csv(&summary)?;
    let runtime_csv_text = runtime_csv(&summary)?;
    let svg = plot(&summary);
    let text = summary_text(&summary);

    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let files = ReportFiles {
        summary_csv: out.join("summary.csv"),
        runtime_csv: out.join("runtime.csv"),
        svg: out.join("f1_curve.svg"),
        text: out.join("summary.txt"),
    };
    fs::write(&files.summary_csv, summary_csv_text)?;
    fs::write(&files.runtime_csv, runtime_csv_text)?;
    fs::write(&files.svg, svg)?;
    fs::write(&files.text, text)?;
    Ok(files)
}
