//! Binary classification metrics and sample/runtime reduction summaries.
//!
//! Zero denominators resolve to zero: precision is 0 without positive
//! predictions, recall is 0 without positive labels and F1 is 0 when both are.

use crate::datagen::Label;
use crate::error::{Error, Result};
use crate::record::ExperimentRecord;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Counts predictions `p >= threshold` against the labels.
pub fn confusion(probabilities: &[f64], labels: &[Label], threshold: f64) -> Result<Confusion> {
    if probabilities.len() != labels.len() {
        return Err(Error::Contract(format!(
            "{} probabilities for {} labels",
            probabilities.len(),
            labels.len()
        )));
    }
    let mut c = Confusion::default();
    for (&p, &y) in probabilities.iter().zip(labels) {
        match (p >= threshold, y.is_positive()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(c: &Confusion) -> Scores {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Scores {
        precision,
        recall,
        f1,
    }
}

/// Smallest `cumulative_samples` among records with `f1 >= target`, or
/// `None` when no record gets there.
pub fn samples_to_reach(records: &[ExperimentRecord], target: f64) -> Result<Option<usize>> {
    if records.is_empty() {
        return Err(Error::Contract("samples_to_reach needs at least one record".into()));
    }
    Ok(records
        .iter()
        .filter(|r| r.f1 >= target)
        .map(|r| r.cumulative_samples)
        .min())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Reduction {
    Reached {
        samples: usize,
        /// `1 - samples / |U|`
        sample_reduction: f64,
        /// Strategy wall time up to and including the reaching record.
        wall_time: f64,
        /// `1 - wall_time / benchmark wall time`
        time_reduction: f64,
    },
    NotReached {
        best_f1: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionReport {
    /// Best benchmark F1, the target every strategy is measured against.
    pub target_f1: f64,
    pub pool_size: usize,
    pub benchmark_wall_time: f64,
    pub strategy_wall_time: f64,
    pub outcome: Reduction,
}

/// Compares one strategy run against the benchmark.
///
/// The pool size is the benchmark's `cumulative_samples` and its wall time is
/// the sum over all benchmark records. Strategy records are taken in
/// iteration order.
pub fn reduction_report(benchmark: &[ExperimentRecord], strategy: &[ExperimentRecord]) -> Result<ReductionReport> {
    if benchmark.is_empty() || strategy.is_empty() {
        return Err(Error::Contract("reduction_report needs benchmark and strategy records".into()));
    }
    let target_f1 = benchmark.iter().map(|r| r.f1).fold(f64::NEG_INFINITY, f64::max);
    let pool_size = benchmark.iter().map(|r| r.cumulative_samples).max().unwrap_or(0);
    if pool_size == 0 {
        return Err(Error::Contract("benchmark records carry no pool size".into()));
    }
    let benchmark_wall_time: f64 = benchmark.iter().map(ExperimentRecord::wall_time).sum();

    let mut ordered: Vec<&ExperimentRecord> = strategy.iter().collect();
    ordered.sort_by_key(|r| r.iteration);
    let strategy_wall_time: f64 = ordered.iter().map(|r| r.wall_time()).sum();

    let outcome = match ordered.iter().position(|r| r.f1 >= target_f1) {
        Some(k) => {
            let samples = ordered[k].cumulative_samples;
            let wall_time: f64 = ordered[..=k].iter().map(|r| r.wall_time()).sum();
            Reduction::Reached {
                samples,
                sample_reduction: 1.0 - samples as f64 / pool_size as f64,
                wall_time,
                time_reduction: if benchmark_wall_time > 0.0 {
                    1.0 - wall_time / benchmark_wall_time
                } else {
                    0.0
                },
            }
        }
        None => Reduction::NotReached {
            best_f1: ordered.iter().map(|r| r.f1).fold(f64::NEG_INFINITY, f64::max),
        },
    };
    Ok(ReductionReport {
        target_f1,
        pool_size,
        benchmark_wall_time,
        strategy_wall_time,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Negative as N, Positive as P};

    pub(crate) fn record(iteration: usize, samples: usize, f1: f64, secs: f64) -> ExperimentRecord {
        ExperimentRecord {
            run_id: "r".into(),
            strategy: "uncertainty".into(),
            iteration,
            cumulative_samples: samples,
            precision: f1,
            recall: f1,
            f1,
            t_contrastive_s: secs,
            t_proxy_s: 0.0,
            t_sampling_s: 0.0,
            loss_trace: vec![],
        }
    }

    #[test]
    fn confusion_cases() {
        let c = confusion(&[0.9, 0.1, 0.7, 0.2], &[P, N, P, N], 0.5).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (2, 0, 0, 2));

        let c = confusion(&[0.6, 0.0], &[N, N], 0.0).unwrap();
        assert_eq!(c.fp, 2);
        // threshold is inclusive
        let c = confusion(&[0.5], &[P], 0.5).unwrap();
        assert_eq!(c.tp, 1);
        assert!(matches!(confusion(&[0.5], &[], 0.5), Err(Error::Contract(_))));
    }

    #[test]
    fn all_negative_predictor_on_imbalanced_test_set() {
        let mut labels = vec![P; 1233];
        labels.extend(vec![N; 5947]);
        let c = confusion(&vec![0.0; labels.len()], &labels, DEFAULT_THRESHOLD).unwrap();
        assert_eq!((c.tp, c.fn_, c.tn, c.fp), (0, 1233, 5947, 0));
        assert_eq!(f1_score(&c).f1, 0.0);
    }

    #[test]
    fn f1_values() {
        let s = f1_score(&Confusion {
            tp: 80,
            fp: 20,
            fn_: 40,
            tn: 0,
        });
        assert!((s.precision - 0.8).abs() < 1e-12);
        assert!((s.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.f1 - 0.727_272_727).abs() < 1e-8);
        let zero = f1_score(&Confusion {
            tp: 0,
            fp: 3,
            fn_: 2,
            tn: 5,
        });
        assert_eq!((zero.precision, zero.recall, zero.f1), (0.0, 0.0, 0.0));
        assert_eq!(f1_score(&Confusion::default()).f1, 0.0);
    }

    #[test]
    fn samples_to_reach_cases() {
        let recs = vec![record(0, 100, 0.5, 1.0), record(1, 200, 0.8, 1.0), record(2, 300, 0.7, 1.0)];
        assert_eq!(samples_to_reach(&recs, 0.1).unwrap(), Some(100));
        assert_eq!(samples_to_reach(&recs, 0.75).unwrap(), Some(200));
        assert_eq!(samples_to_reach(&recs, 1.01).unwrap(), None);
        assert!(samples_to_reach(&[], 0.5).is_err());
    }

    #[test]
    fn equal_time_means_no_time_reduction() {
        let bench = vec![ExperimentRecord {
            strategy: "benchmark".into(),
            ..record(20, 1000, 0.9, 10.0)
        }];
        let strat = vec![record(0, 100, 0.95, 10.0)];
        let rep = reduction_report(&bench, &strat).unwrap();
        match rep.outcome {
            Reduction::Reached {
                samples,
                sample_reduction,
                time_reduction,
                ..
            } => {
                assert_eq!(samples, 100);
                assert!((sample_reduction - 0.9).abs() < 1e-12);
                assert_eq!(time_reduction, 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn not_reached_reports_closest() {
        let bench = vec![record(20, 1000, 0.9, 10.0)];
        let strat = vec![record(0, 100, 0.4, 1.0), record(1, 200, 0.6, 1.0)];
        let rep = reduction_report(&bench, &strat).unwrap();
        assert_eq!(rep.outcome, Reduction::NotReached { best_f1: 0.6 });
        assert_eq!(rep.strategy_wall_time, 2.0);
        assert!(reduction_report(&[], &strat).is_err());
    }
}
