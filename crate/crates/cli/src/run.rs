//! `gen-data` and `run`.
//!
//! Output layout of `run`:
//!
//! ```text
//! <out>/config.toml                     full config echo
//! <out>/logs/benchmark.csv              experiment-log schema
//! <out>/logs/<strategy>_rep<r>.csv
//! <out>/trace/<run>_loss.csv            run_id,iteration,epoch,loss
//! <out>/trace/<strategy>_rep<r>_selected.csv
//! <out>/checkpoints/<run>.ckpt          when output.checkpoints is set
//! ```
//!
//! Each file is written as soon as its run finishes.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use activecl::active::{run_active_loop, run_benchmark};
use activecl::datagen::{generate_dataset, read_dataset, split_pools, write_csv, write_dataset, Dataset};
use activecl::record::{write_log, write_loss_trace, write_selections, ExperimentRecord};
use activecl::simclr::{save_checkpoint, ContrastiveModel};
use anyhow::{Context, Result};
use log::info;

use crate::config::RunConfig;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

pub fn load_or_generate(config: &RunConfig) -> Result<Dataset> {
    if config.data.path.is_empty() {
        Ok(generate_dataset(&config.dataset_spec())?)
    } else {
        let path = Path::new(&config.data.path);
        let file = File::open(path).with_context(|| format!("cannot open dataset {}", path.display()))?;
        read_dataset(std::io::BufReader::new(file)).with_context(|| format!("cannot read dataset {}", path.display()))
    }
}

/// Writes the synthetic dataset described by `config` in the binary format,
/// and as CSV when `csv` is given.
pub fn cmd_gen_data(config: &RunConfig, out: &Path, csv: Option<&Path>) -> Result<Dataset> {
    let dataset = generate_dataset(&config.dataset_spec())?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_dataset(&dataset, create(out)?)?;
    if let Some(csv) = csv {
        write_csv(&dataset, create(csv)?)?;
    }
    info!(
        "wrote {} patches ({} positive) to {}",
        dataset.len(),
        dataset.positives(),
        out.display()
    );
    Ok(dataset)
}

#[derive(Debug, Default)]
pub struct RunArtifacts {
    pub logs: Vec<PathBuf>,
    pub truncated: Vec<String>,
}

fn write_run(dir: &Path, name: &str, records: &[ExperimentRecord]) -> Result<PathBuf> {
    let log = dir.join("logs").join(format!("{name}.csv"));
    write_log(records, create(&log)?)?;
    write_loss_trace(records, create(&dir.join("trace").join(format!("{name}_loss.csv")))?)?;
    Ok(log)
}

fn checkpoint(dir: &Path, config: &RunConfig, name: &str, model: &ContrastiveModel) -> Result<()> {
    if config.output.checkpoints {
        save_checkpoint(model, create(&dir.join("checkpoints").join(format!("{name}.ckpt")))?)?;
    }
    Ok(())
}

/// Runs the benchmark once and every strategy for every repetition.
pub fn cmd_run(config: &RunConfig, out: &Path) -> Result<RunArtifacts> {
    config.validate()?;
    for sub in ["logs", "trace"] {
        fs::create_dir_all(out.join(sub)).with_context(|| format!("cannot create {}", out.display()))?;
    }
    if config.output.checkpoints {
        fs::create_dir_all(out.join("checkpoints"))?;
    }
    fs::write(out.join("config.toml"), config.emit())?;

    let dataset = load_or_generate(config)?;
    let pools = split_pools(&dataset, &config.split_spec())?;
    let side = dataset.side;
    info!(
        "pool {} / labeled {} / test {} ({} positive in test)",
        pools.unlabeled.len(),
        pools.labeled.len(),
        pools.test.len(),
        pools.test.positives()
    );

    let mut artifacts = RunArtifacts::default();
    if config.benchmark.enabled {
        let bench = run_benchmark(&config.benchmark_config(side), &pools)?;
        artifacts.logs.push(write_run(out, "benchmark", &bench.records)?);
        checkpoint(out, config, "benchmark", &bench.model)?;
    }
    for rep in 0..config.repetitions {
        for &sampler in &config.strategies {
            let name = format!("{sampler}_rep{rep}");
            let outcome = run_active_loop(&config.loop_config(side, sampler, rep), &pools)?;
            artifacts.logs.push(write_run(out, &name, &outcome.records)?);
            write_selections(
                sampler.as_str(),
                &outcome.selections,
                create(&out.join("trace").join(format!("{name}_selected.csv")))?,
            )?;
            checkpoint(out, config, &name, &outcome.model)?;
            if outcome.truncated {
                artifacts.truncated.push(name);
            }
        }
    }
    Ok(artifacts)
}
