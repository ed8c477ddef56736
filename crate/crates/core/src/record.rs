//! Per-iteration experiment records and the experiment-log CSV schema:
//!
//! ```text
//! run_id,strategy,iteration,cumulative_samples,precision,recall,f1,t_contrastive_s,t_proxy_s,t_sampling_s
//! ```
//!
//! `strategy` is `random`, `uncertainty`, `coreset` or `benchmark`. For the
//! benchmark, `iteration` holds the proxy epoch of the evaluation.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LOG_HEADER: [&str; 10] = [
    "run_id",
    "strategy",
    "iteration",
    "cumulative_samples",
    "precision",
    "recall",
    "f1",
    "t_contrastive_s",
    "t_proxy_s",
    "t_sampling_s",
];

pub const BENCHMARK: &str = "benchmark";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub run_id: String,
    pub strategy: String,
    pub iteration: usize,
    pub cumulative_samples: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub t_contrastive_s: f64,
    pub t_proxy_s: f64,
    pub t_sampling_s: f64,
    /// Mean contrastive loss per epoch; not part of the CSV row.
    #[serde(skip)]
    pub loss_trace: Vec<f64>,
}

impl ExperimentRecord {
    pub fn wall_time(&self) -> f64 {
        self.t_contrastive_s + self.t_proxy_s + self.t_sampling_s
    }
}

pub fn write_log<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(LOG_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an experiment log, rejecting any header other than [`LOG_HEADER`].
pub fn read_log<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(LOG_HEADER.iter().copied()) {
        return Err(Error::Format(format!(
            "unexpected experiment-log header {:?}, expected {:?}",
            header.iter().collect::<Vec<_>>(),
            LOG_HEADER
        )));
    }
    rdr.deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Loss-trace side file: `run_id,iteration,epoch,loss`.
pub fn write_loss_trace<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run_id", "iteration", "epoch", "loss"])?;
    for r in records {
        for (e, loss) in r.loss_trace.iter().enumerate() {
            w.write_record([
                r.run_id.clone(),
                r.iteration.to_string(),
                (e + 1).to_string(),
                loss.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Selection side file: `iteration,strategy,ids` with ids separated by spaces.
pub fn write_selections<W: Write>(strategy: &str, selections: &[Vec<u64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "strategy", "ids"])?;
    for (t, ids) in selections.iter().enumerate() {
        let joined = ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        w.write_record([t.to_string(), strategy.to_string(), joined])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: usize) -> ExperimentRecord {
        ExperimentRecord {
            run_id: "uncertainty-rep0".into(),
            strategy: "uncertainty".into(),
            iteration: i,
            cumulative_samples: 100 * (i + 1),
            precision: 0.8,
            recall: 2.0 / 3.0,
            f1: 0.1 + i as f64 * 0.05,
            t_contrastive_s: 1.5,
            t_proxy_s: 0.25,
            t_sampling_s: 1e-4,
            loss_trace: vec![3.0, 2.5],
        }
    }

    #[test]
    fn log_round_trip_drops_only_the_trace() {
        let records: Vec<_> = (0..3).map(rec).collect();
        let mut buf = Vec::new();
        write_log(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&LOG_HEADER.join(",")));
        let back = read_log(buf.as_slice()).unwrap();
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(
                ExperimentRecord {
                    loss_trace: vec![],
                    ..a.clone()
                },
                *b
            );
        }
    }

    #[test]
    fn foreign_schema_is_rejected() {
        let csv = "run,strategy\nx,y\n";
        assert!(matches!(read_log(csv.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn side_files() {
        let mut buf = Vec::new();
        write_loss_trace(&[rec(0)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "run_id,iteration,epoch,loss\nuncertainty-rep0,0,1,3\nuncertainty-rep0,0,2,2.5\n"
        );
        let mut buf = Vec::new();
        write_selections("coreset", &[vec![3, 1], vec![7]], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iteration,strategy,ids\n0,coreset,3 1\n1,coreset,7\n"
        );
    }
}
