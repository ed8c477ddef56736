use std::collections::HashSet;
use std::time::Instant;

use activecl::active::{run_active_loop, run_benchmark, BenchmarkConfig, LoopConfig, TrainingConfig};
use activecl::datagen::{generate_dataset, split_pools, AugmentationConfig, DatasetSpec, Pools, SplitSpec};
use activecl::proxy::ProxyHyper;
use activecl::sampler::SamplerKind;
use activecl::seed::SeedSchedule;
use activecl::simclr::{ContrastiveHyper, EncoderConfig};

fn pools() -> Pools {
    let spec = DatasetSpec {
        pool_size: 400,
        patch_side: 4,
        ..DatasetSpec::default()
    };
    let data = generate_dataset(&spec).unwrap();
    split_pools(
        &data,
        &SplitSpec {
            labeled_size: 60,
            test_size: 100,
            stratify_labeled: false,
            seed: 5,
        },
    )
    .unwrap()
}

fn training() -> TrainingConfig {
    TrainingConfig {
        encoder: EncoderConfig {
            input_dim: 16,
            hidden_dims: vec![12],
            feature_dim: 8,
            head_dims: [8, 8, 4],
        },
        contrastive: ContrastiveHyper {
            epochs: 2,
            batch_size: 16,
            ..ContrastiveHyper::default()
        },
        proxy: ProxyHyper {
            epochs: 5,
            learning_rate: 0.05,
            ..ProxyHyper::default()
        },
        augmentation: AugmentationConfig::default(),
        threshold: 0.5,
    }
}

fn config(sampler: SamplerKind, iterations: usize) -> LoopConfig {
    LoopConfig {
        budget: 20,
        iterations,
        sampler,
        candidate_cap: 10_000,
        training: training(),
        seeds: SeedSchedule::new(11, 0),
    }
}

#[test]
fn single_iteration_draws_only_the_seed_subset() {
    let p = pools();
    for sampler in SamplerKind::ALL {
        let out = run_active_loop(&config(sampler, 1), &p).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.selections.len(), 1);
        assert_eq!(out.selections[0].len(), 20);
        assert_eq!(out.records[0].cumulative_samples, 20);
    }
    // the seed subset does not depend on the strategy
    let a = run_active_loop(&config(SamplerKind::Random, 1), &p).unwrap();
    let b = run_active_loop(&config(SamplerKind::Coreset, 1), &p).unwrap();
    assert_eq!(a.selections, b.selections);
    assert_eq!(a.records[0].f1, b.records[0].f1);
}

#[test]
fn cumulative_samples_grow_by_the_budget() {
    let p = pools();
    for sampler in SamplerKind::ALL {
        let out = run_active_loop(&config(sampler, 3), &p).unwrap();
        let counts: Vec<usize> = out.records.iter().map(|r| r.cumulative_samples).collect();
        assert_eq!(counts, vec![20, 40, 60], "{sampler}");
        assert!(!out.truncated);
    }
}

#[test]
fn bookkeeping_and_leakage() {
    let p = pools();
    let labeled: HashSet<u64> = p.labeled.ids().into_iter().chain(p.test.ids()).collect();
    for sampler in SamplerKind::ALL {
        let out = run_active_loop(&config(sampler, 4), &p).unwrap();
        let all: Vec<u64> = out.selections.iter().flatten().copied().collect();
        let unique: HashSet<u64> = all.iter().copied().collect();
        assert_eq!(unique.len(), all.len(), "{sampler}: repeated id");
        assert!(unique.is_disjoint(&labeled), "{sampler}: labeled id selected");
        assert!(all.iter().all(|id| p.unlabeled.contains(*id)));
    }
}

#[test]
fn same_seeds_same_run() {
    let p = pools();
    let cfg = config(SamplerKind::Uncertainty, 3);
    let a = run_active_loop(&cfg, &p).unwrap();
    let b = run_active_loop(&cfg, &p).unwrap();
    assert_eq!(a.selections, b.selections);
    let f1 = |o: &activecl::active::LoopOutcome| o.records.iter().map(|r| r.f1).collect::<Vec<_>>();
    assert_eq!(f1(&a), f1(&b));
    assert_eq!(a.model, b.model);
}

#[test]
fn encoder_persists_and_proxy_is_fresh() {
    let p = pools();
    let out = run_active_loop(&config(SamplerKind::Coreset, 3), &p).unwrap();
    let enc: HashSet<u64> = out.encoder_fingerprints.iter().copied().collect();
    let prox: HashSet<u64> = out.proxy_fingerprints.iter().copied().collect();
    assert_eq!(enc.len(), 3);
    assert_eq!(prox.len(), 3);
    // optimizer steps accumulate across iterations: 2 epochs of 2, 3 and 4 batches
    assert_eq!(out.model.steps(), 2 * (2 + 3 + 4));
}

#[test]
fn pool_exhaustion_truncates() {
    let p = pools();
    // 240 pool samples, 100 per iteration: iteration 2 cannot be filled
    let cfg = LoopConfig {
        budget: 100,
        ..config(SamplerKind::Random, 5)
    };
    let out = run_active_loop(&cfg, &p).unwrap();
    assert!(out.truncated);
    assert_eq!(out.records.len(), 2);
    assert_eq!(out.records[1].cumulative_samples, 200);
}

#[test]
fn phase_times_cover_the_loop() {
    let p = pools();
    let started = Instant::now();
    let out = run_active_loop(&config(SamplerKind::Uncertainty, 4), &p).unwrap();
    let total = started.elapsed().as_secs_f64();
    let phases: f64 = out.records.iter().map(|r| r.wall_time()).sum();
    assert!(out.records.iter().all(|r| r.t_contrastive_s >= 0.0 && r.t_proxy_s >= 0.0 && r.t_sampling_s >= 0.0));
    assert!(phases <= total && phases >= 0.9 * total, "phases {phases}, total {total}");
}

#[test]
fn benchmark_records_follow_the_epoch_grid() {
    let p = pools();
    let cfg = BenchmarkConfig {
        training: TrainingConfig {
            proxy: ProxyHyper {
                epochs: 200,
                ..training().proxy
            },
            ..training()
        },
        eval_interval: 20,
        seeds: SeedSchedule::new(11, 0),
    };
    let a = run_benchmark(&cfg, &p).unwrap();
    assert_eq!(a.records.len(), 10);
    let epochs: Vec<usize> = a.records.iter().map(|r| r.iteration).collect();
    assert_eq!(epochs, (1..=10).map(|k| 20 * k).collect::<Vec<_>>());
    assert!(a.records.iter().all(|r| r.cumulative_samples == p.unlabeled.len()));
    assert!(a.records.iter().all(|r| r.strategy == "benchmark"));
    assert!(a.records[0].t_contrastive_s > 0.0 && a.records[1..].iter().all(|r| r.t_contrastive_s == 0.0));
    let b = run_benchmark(&cfg, &p).unwrap();
    assert_eq!(
        a.records.iter().map(|r| r.f1).collect::<Vec<_>>(),
        b.records.iter().map(|r| r.f1).collect::<Vec<_>>()
    );
}

#[test]
fn invalid_configs_are_rejected() {
    let p = pools();
    assert!(run_active_loop(&config(SamplerKind::Random, 0), &p).is_err());
    let zero_budget = LoopConfig {
        budget: 0,
        ..config(SamplerKind::Random, 2)
    };
    assert!(run_active_loop(&zero_budget, &p).is_err());
    let mut wrong_width = config(SamplerKind::Random, 2);
    wrong_width.training.encoder.input_dim = 64;
    assert!(run_active_loop(&wrong_width, &p).is_err());
}
