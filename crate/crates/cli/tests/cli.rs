use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use activecl::record::{write_log, ExperimentRecord};
use activecl_cli::report::{plot, read_logs, summarize};
use activecl_cli::svg::{f1_curve, Series};
use activecl_cli::{cmd_report, cmd_run, RunConfig};

fn tiny() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/tiny.toml")
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_activecl"));
    c.env("ACTIVECL_LOG", "error");
    c
}

fn record(strategy: &str, rep: u32, iteration: usize, samples: usize, f1: f64) -> ExperimentRecord {
    ExperimentRecord {
        run_id: format!("{strategy}-rep{rep}"),
        strategy: strategy.into(),
        iteration,
        cumulative_samples: samples,
        precision: f1,
        recall: f1,
        f1,
        t_contrastive_s: 1.0,
        t_proxy_s: 0.5,
        t_sampling_s: 0.0,
        loss_trace: vec![],
    }
}

fn write(dir: &Path, name: &str, records: &[ExperimentRecord]) {
    write_log(records, fs::File::create(dir.join(name)).unwrap()).unwrap();
}

#[test]
fn exit_codes() {
    let help = bin().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("gen-data"));

    let usage = bin().arg("frobnicate").output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
    let bad_flag = bin().args(["run", "--profile", "huge"]).output().unwrap();
    assert_eq!(bad_flag.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let missing = bin()
        .args(["report", "--logs"])
        .arg(dir.path().join("nope"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[contrastive]\ntemperature = -1.0\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).args(["run", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("contrastive.temperature"));
}

#[test]
fn run_then_report_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fresh/nested");
    let status = bin()
        .arg("--config")
        .arg(tiny())
        .args(["run", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let mut logs: Vec<String> = fs::read_dir(out.join("logs"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    logs.sort();
    // 3 strategies x 2 repetitions + 1 benchmark
    assert_eq!(
        logs,
        [
            "benchmark.csv",
            "coreset_rep0.csv",
            "coreset_rep1.csv",
            "random_rep0.csv",
            "random_rep1.csv",
            "uncertainty_rep0.csv",
            "uncertainty_rep1.csv"
        ]
    );
    let echo = RunConfig::parse(&fs::read_to_string(out.join("config.toml")).unwrap(), None).unwrap();
    assert_eq!(echo, RunConfig::load(&tiny(), None).unwrap());
    assert!(out.join("trace/uncertainty_rep1_selected.csv").exists());
    assert!(out.join("trace/benchmark_loss.csv").exists());

    let report = bin().args(["report", "--logs"]).arg(out.join("logs")).output().unwrap();
    assert!(report.status.success(), "{}", String::from_utf8_lossy(&report.stderr));
    for f in ["summary.csv", "runtime.csv", "f1_curve.svg", "summary.txt"] {
        assert!(out.join("report").join(f).exists(), "{f}");
    }
    assert!(String::from_utf8_lossy(&report.stdout).contains("uncertainty"));
}

#[test]
fn gen_data_writes_a_readable_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("data/pool.bin");
    let csv = dir.path().join("pool.csv");
    let status = bin()
        .arg("--config")
        .arg(tiny())
        .args(["gen-data", "--out"])
        .arg(&file)
        .arg("--csv")
        .arg(&csv)
        .status()
        .unwrap();
    assert!(status.success());
    let data = activecl::datagen::read_dataset(fs::File::open(&file).unwrap()).unwrap();
    assert_eq!(data.len(), 300);
    assert_eq!(data.positives(), 43);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 301);

    // a run over the saved file matches a run that generates in memory
    let mut from_file = RunConfig::load(&tiny(), None).unwrap();
    from_file.data.path = file.display().to_string();
    from_file.strategies = vec![activecl::sampler::SamplerKind::Random];
    from_file.repetitions = 1;
    let mut in_memory = from_file.clone();
    in_memory.data.path.clear();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    cmd_run(&from_file, &a).unwrap();
    cmd_run(&in_memory, &b).unwrap();
    assert_eq!(
        fs::read_to_string(a.join("trace/random_rep0_selected.csv")).unwrap(),
        fs::read_to_string(b.join("trace/random_rep0_selected.csv")).unwrap()
    );
}

#[test]
fn checkpoints_are_optional() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::load(&tiny(), None).unwrap();
    config.repetitions = 1;
    config.strategies = vec![activecl::sampler::SamplerKind::Coreset];
    config.output.checkpoints = true;
    cmd_run(&config, dir.path()).unwrap();
    let model = activecl::simclr::load_checkpoint(fs::File::open(dir.path().join("checkpoints/coreset_rep0.ckpt")).unwrap())
        .unwrap();
    assert_eq!(model.config().input_dim, 16);
    assert!(dir.path().join("checkpoints/benchmark.ckpt").exists());
}

#[test]
fn report_on_empty_directory_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    assert!(cmd_report(dir.path(), &out).is_err());
    assert!(!out.exists());
}

#[test]
fn report_rejects_foreign_csv_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "random_rep0.csv", &[record("random", 0, 0, 100, 0.5)]);
    fs::write(dir.path().join("other.csv"), "a,b\n1,2\n").unwrap();
    let out = dir.path().join("report");
    let err = cmd_report(dir.path(), &out).unwrap_err();
    assert!(format!("{err:#}").contains("other.csv"), "{err:#}");
    assert!(!out.exists());
}

#[test]
fn report_averages_repetitions() {
    let dir = tempfile::tempdir().unwrap();
    let f1s = [[0.3, 0.6], [0.5, 0.9], [0.4, 0.3]];
    for (rep, f) in f1s.iter().enumerate() {
        write(
            dir.path(),
            &format!("uncertainty_rep{rep}.csv"),
            &[
                record("uncertainty", rep as u32, 0, 100, f[0]),
                record("uncertainty", rep as u32, 1, 200, f[1]),
            ],
        );
    }
    write(
        dir.path(),
        "benchmark.csv",
        &[record("benchmark", 0, 20, 1000, 0.55), record("benchmark", 0, 40, 1000, 0.7)],
    );
    let summary = summarize(&read_logs(dir.path()).unwrap()).unwrap();
    let curve = &summary.curves["uncertainty"];
    assert!((curve[0].f1 - 0.4).abs() < 1e-12);
    assert!((curve[1].f1 - 0.6).abs() < 1e-12);
    assert_eq!(curve[1].runs, 3);
    // reference line at the best benchmark F1
    assert_eq!(summary.target_f1, Some(0.7));
    let svg = plot(&summary);
    assert!(svg.contains("benchmark (0.700)"));
    // no mean point reaches 0.7
    let row = summary.runtime.iter().find(|r| r.method == "uncertainty").unwrap();
    assert_eq!(row.samples_to_target, None);
    assert!((row.avg_runtime_s - 3.0).abs() < 1e-12);
    // benchmark takes 3 s as well: no time reduction
    assert!(row.time_reduction.unwrap().abs() < 1e-12);
}

#[test]
fn svg_matches_golden_file() {
    let series = vec![
        Series {
            name: "random".into(),
            points: vec![(100.0, 0.42), (200.0, 0.61), (300.0, 0.7)],
        },
        Series {
            name: "uncertainty".into(),
            points: vec![(100.0, 0.42), (200.0, 0.68), (300.0, 0.81)],
        },
    ];
    let svg = f1_curve(&series, Some(("benchmark".into(), 0.85)));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/f1_curve.svg");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&golden, &svg).unwrap();
    }
    assert_eq!(svg, fs::read_to_string(&golden).unwrap());
}
