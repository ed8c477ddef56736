//! The active contrastive loop and the full-pool benchmark.
//!
//! Each loop iteration `t` trains the encoder on the accumulated subset
//! `S^t` (weights carry over between iterations), fits a fresh linear proxy
//! on encoder features of the labeled set, scores it on the test set and then
//! picks the next `b` pool samples with the configured strategy.

use std::collections::HashSet;
use std::time::Instant;

use log::{debug, info, warn};

use crate::datagen::{AugmentationConfig, PatchId, Pools};
use crate::error::{Error, Result};
use crate::eval::{confusion, f1_score};
use crate::proxy::{entropy, extract_features, predict_proba, train_proxy, train_proxy_monitored, ProxyHyper, ProxyParams};
use crate::record::{ExperimentRecord, BENCHMARK};
use crate::sampler::{k_center_greedy, sample_random, sample_uncertainty, subsample_candidates, Candidates, SamplerKind};
use crate::seed::{SeedSchedule, Stream};
use crate::simclr::{encode, train_contrastive, ContrastiveHyper, ContrastiveModel, EncoderConfig};

/// Stream index reserved for the benchmark's one-off training run.
const BENCHMARK_INDEX: u32 = u32::MAX;

/// Model and optimizer settings shared by the loop and the benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub encoder: EncoderConfig,
    pub contrastive: ContrastiveHyper,
    pub proxy: ProxyHyper,
    pub augmentation: AugmentationConfig,
    /// Decision threshold on proxy probabilities.
    pub threshold: f64,
}

impl TrainingConfig {
    pub fn validate(&self, side: usize) -> Result<()> {
        self.encoder.validate()?;
        if self.encoder.input_dim != side * side {
            return Err(Error::Validation(format!(
                "encoder input_dim {} does not match {side}x{side} patches",
                self.encoder.input_dim
            )));
        }
        self.contrastive.validate()?;
        self.proxy.validate()?;
        self.augmentation.validate(side)?;
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Validation(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopConfig {
    /// Samples added to `S` per iteration.
    pub budget: usize,
    pub iterations: usize,
    pub sampler: SamplerKind,
    /// Pool samples scored per selection round.
    pub candidate_cap: usize,
    pub training: TrainingConfig,
    pub seeds: SeedSchedule,
}

impl LoopConfig {
    pub fn validate(&self, side: usize) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Validation("budget must be >= 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Validation("iterations must be >= 1".into()));
        }
        if self.candidate_cap == 0 {
            return Err(Error::Validation("candidate_cap must be >= 1".into()));
        }
        self.training.validate(side)
    }

    pub fn run_id(&self) -> String {
        format!("{}-rep{}", self.sampler, self.seeds.repetition)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkConfig {
    pub training: TrainingConfig,
    /// Proxy epochs between evaluations.
    pub eval_interval: usize,
    pub seeds: SeedSchedule,
}

impl BenchmarkConfig {
    pub fn validate(&self, side: usize) -> Result<()> {
        if self.eval_interval == 0 {
            return Err(Error::Validation("eval_interval must be >= 1".into()));
        }
        self.training.validate(side)
    }

    pub fn run_id(&self) -> String {
        format!("{BENCHMARK}-rep{}", self.seeds.repetition)
    }
}

#[derive(Clone, Debug)]
pub struct LoopOutcome {
    /// One record per completed iteration.
    pub records: Vec<ExperimentRecord>,
    /// Ids added at each iteration; entry 0 is the random seed subset.
    pub selections: Vec<Vec<PatchId>>,
    /// The pool ran out before all iterations completed.
    pub truncated: bool,
    pub model: ContrastiveModel,
    /// Encoder fingerprint after each iteration's training.
    pub encoder_fingerprints: Vec<u64>,
    /// Fingerprint of each iteration's freshly trained proxy.
    pub proxy_fingerprints: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct BenchmarkOutcome {
    pub records: Vec<ExperimentRecord>,
    pub model: ContrastiveModel,
}

fn proxy_fingerprint(p: &ProxyParams) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for v in p.weight.data().iter().chain(p.bias.data()) {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

struct Evaluation {
    proxy: ProxyParams,
    precision: f64,
    recall: f64,
    f1: f64,
}

fn evaluate(proxy: ProxyParams, test_features: &crate::ndgrad::Tensor, pools: &Pools, threshold: f64) -> Result<Evaluation> {
    let probs = predict_proba(&proxy, test_features)?;
    let scores = f1_score(&confusion(&probs, &pools.test.labels(), threshold)?);
    Ok(Evaluation {
        proxy,
        precision: scores.precision,
        recall: scores.recall,
        f1: scores.f1,
    })
}

fn check_bookkeeping(pool_size: usize, subset: &[PatchId], remaining: &HashSet<PatchId>, pools: &Pools) -> Result<()> {
    let unique: HashSet<PatchId> = subset.iter().copied().collect();
    if unique.len() != subset.len() {
        return Err(Error::Invariant("an id was selected twice".into()));
    }
    if let Some(id) = subset.iter().find(|id| remaining.contains(id)) {
        return Err(Error::Invariant(format!("id {id} is both selected and still in the pool")));
    }
    if subset.len() + remaining.len() != pool_size {
        return Err(Error::Invariant(format!(
            "|S| {} + |U| {} != initial pool {pool_size}",
            subset.len(),
            remaining.len()
        )));
    }
    let labeled: HashSet<PatchId> = pools.labeled.ids().into_iter().chain(pools.test.ids()).collect();
    if let Some(id) = subset.iter().find(|id| labeled.contains(id)) {
        return Err(Error::Invariant(format!("labeled id {id} entered the contrastive subset")));
    }
    Ok(())
}

/// Runs the active loop for `config.iterations` iterations or until the pool
/// can no longer supply a full budget, whichever comes first.
pub fn run_active_loop(config: &LoopConfig, pools: &Pools) -> Result<LoopOutcome> {
    let side = pools.unlabeled.side();
    config.validate(side)?;
    let seeds = config.seeds;
    let training = &config.training;
    let pool_size = pools.unlabeled.len();
    let run_id = config.run_id();
    let labeled_x = pools.labeled.matrix();
    let labeled_y = pools.labeled.labels();
    let test_x = pools.test.matrix();

    let mut model = ContrastiveModel::new(training.encoder.clone(), &mut seeds.rng(Stream::Init, 0))?;
    let mut remaining: HashSet<PatchId> = pools.unlabeled.ids().iter().copied().collect();
    let mut subset: Vec<PatchId> = Vec::new();

    let started = Instant::now();
    let mut truncated = pool_size < config.budget;
    let mut next = if truncated {
        Vec::new()
    } else {
        sample_random(pools.unlabeled.ids(), config.budget, &mut seeds.rng(Stream::Sampling, 0))
    };
    let mut t_sampling = started.elapsed().as_secs_f64();

    let mut outcome = LoopOutcome {
        records: Vec::new(),
        selections: Vec::new(),
        truncated: false,
        model: model.clone(),
        encoder_fingerprints: Vec::new(),
        proxy_fingerprints: Vec::new(),
    };

    for t in 0..config.iterations {
        if truncated {
            warn!("{run_id}: pool exhausted after {t} iterations");
            break;
        }
        let index = t as u32;
        for id in &next {
            remaining.remove(id);
        }
        subset.extend_from_slice(&next);
        outcome.selections.push(std::mem::take(&mut next));
        check_bookkeeping(pool_size, &subset, &remaining, pools)?;

        let clock = Instant::now();
        let pixels: Vec<&[f64]> = subset
            .iter()
            .map(|id| pools.unlabeled.pixels(*id).expect("subset ids come from the pool"))
            .collect();
        let loss_trace = train_contrastive(
            &mut model,
            &pixels,
            side,
            &training.contrastive,
            &training.augmentation,
            &mut seeds.rng(Stream::Shuffle, index),
            &mut seeds.rng(Stream::Augment, index),
        )?;
        let t_contrastive = clock.elapsed().as_secs_f64();
        outcome.encoder_fingerprints.push(model.fingerprint());

        let clock = Instant::now();
        let features = extract_features(&model, &labeled_x)?;
        let proxy = train_proxy(&features, &labeled_y, &training.proxy, &mut seeds.rng(Stream::Proxy, index))?;
        let eval = evaluate(proxy, &extract_features(&model, &test_x)?, pools, training.threshold)?;
        let t_proxy = clock.elapsed().as_secs_f64();
        outcome.proxy_fingerprints.push(proxy_fingerprint(&eval.proxy));

        let last = t + 1 == config.iterations;
        if !last {
            let clock = Instant::now();
            if remaining.len() < config.budget {
                truncated = true;
            } else {
                next = select(config, pools, &model, &eval.proxy, &subset, &remaining, index + 1)?;
            }
            t_sampling += clock.elapsed().as_secs_f64();
        }

        info!(
            "{run_id}: iteration {t}, |S| = {}, F1 = {:.4}, loss = {:.4}",
            subset.len(),
            eval.f1,
            loss_trace.last().copied().unwrap_or(f64::NAN)
        );
        outcome.records.push(ExperimentRecord {
            run_id: run_id.clone(),
            strategy: config.sampler.to_string(),
            iteration: t,
            cumulative_samples: subset.len(),
            precision: eval.precision,
            recall: eval.recall,
            f1: eval.f1,
            t_contrastive_s: t_contrastive,
            t_proxy_s: t_proxy,
            t_sampling_s: t_sampling,
            loss_trace,
        });
        t_sampling = 0.0;
    }
    outcome.truncated = truncated && outcome.records.len() < config.iterations;
    outcome.model = model;
    Ok(outcome)
}

fn select(
    config: &LoopConfig,
    pools: &Pools,
    model: &ContrastiveModel,
    proxy: &ProxyParams,
    subset: &[PatchId],
    remaining: &HashSet<PatchId>,
    index: u32,
) -> Result<Vec<PatchId>> {
    let mut rng = config.seeds.rng(Stream::Sampling, index);
    let mut pool: Vec<PatchId> = remaining.iter().copied().collect();
    pool.sort_unstable();
    let ids = subsample_candidates(&pool, config.candidate_cap, &mut rng)?;
    let picked = match config.sampler {
        SamplerKind::Random => sample_random(&ids, config.budget, &mut rng),
        SamplerKind::Uncertainty => {
            let features = encode(model, &pools.unlabeled.matrix(&ids)?)?;
            let scores = predict_proba(proxy, &features)?
                .into_iter()
                .map(entropy)
                .collect::<Result<Vec<_>>>()?;
            sample_uncertainty(&Candidates::new(ids, features)?.with_scores(scores)?, config.budget)?
        }
        SamplerKind::Coreset => {
            let features = encode(model, &pools.unlabeled.matrix(&ids)?)?;
            let centers = encode(model, &pools.unlabeled.matrix(subset)?)?;
            k_center_greedy(&Candidates::new(ids, features)?, &centers, config.budget)?
        }
    };
    debug!("selected {} ids with {}", picked.len(), config.sampler);
    Ok(picked)
}

/// Trains the encoder once on the whole unlabeled pool, then trains one proxy
/// and evaluates it every `eval_interval` epochs. Record `iteration` holds the
/// proxy epoch; the first record also carries the contrastive training time.
pub fn run_benchmark(config: &BenchmarkConfig, pools: &Pools) -> Result<BenchmarkOutcome> {
    let side = pools.unlabeled.side();
    config.validate(side)?;
    let seeds = config.seeds;
    let training = &config.training;
    let run_id = config.run_id();
    let pool_size = pools.unlabeled.len();

    let mut model = ContrastiveModel::new(training.encoder.clone(), &mut seeds.rng(Stream::Init, 0))?;
    let clock = Instant::now();
    let pixels: Vec<&[f64]> = pools
        .unlabeled
        .ids()
        .iter()
        .map(|id| pools.unlabeled.pixels(*id).expect("pool id"))
        .collect();
    let loss_trace = train_contrastive(
        &mut model,
        &pixels,
        side,
        &training.contrastive,
        &training.augmentation,
        &mut seeds.rng(Stream::Shuffle, BENCHMARK_INDEX),
        &mut seeds.rng(Stream::Augment, BENCHMARK_INDEX),
    )?;
    let mut t_contrastive = clock.elapsed().as_secs_f64();
    info!("{run_id}: contrastive training on {pool_size} samples took {t_contrastive:.1}s");

    let mut clock = Instant::now();
    let features = extract_features(&model, &pools.labeled.matrix())?;
    let test_features = extract_features(&model, &pools.test.matrix())?;
    let mut records = Vec::new();
    let mut trace = Some(loss_trace);
    train_proxy_monitored(
        &features,
        &pools.labeled.labels(),
        &training.proxy,
        &mut seeds.rng(Stream::Proxy, BENCHMARK_INDEX),
        config.eval_interval,
        |epoch, proxy| {
            let eval = evaluate(proxy.clone(), &test_features, pools, training.threshold)?;
            info!("{run_id}: proxy epoch {epoch}, F1 = {:.4}", eval.f1);
            records.push(ExperimentRecord {
                run_id: run_id.clone(),
                strategy: BENCHMARK.to_string(),
                iteration: epoch,
                cumulative_samples: pool_size,
                precision: eval.precision,
                recall: eval.recall,
                f1: eval.f1,
                t_contrastive_s: std::mem::take(&mut t_contrastive),
                t_proxy_s: clock.elapsed().as_secs_f64(),
                t_sampling_s: 0.0,
                loss_trace: trace.take().unwrap_or_default(),
            });
            clock = Instant::now();
            Ok(())
        },
    )?;
    Ok(BenchmarkOutcome { records, model })
}
