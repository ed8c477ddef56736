//! Run configuration: TOML file layered over a named profile.
//!
//! Loading starts from the profile's full default table, overlays the user
//! file key by key (rejecting unknown keys and type mismatches with their
//! dotted path), deserializes and range-checks every field.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use activecl::active::{BenchmarkConfig, LoopConfig, TrainingConfig};
use activecl::datagen::{AugmentationConfig, DatasetSpec, SplitSpec};
use activecl::proxy::ProxyHyper;
use activecl::sampler::SamplerKind;
use activecl::seed::{SeedSchedule, Stream};
use activecl::simclr::{ContrastiveHyper, EncoderConfig};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("`{key}` must be {expected}")]
    Type { key: String, expected: &'static str },
    #[error("`{key}`: {message}")]
    Range { key: String, message: String },
    #[error("malformed configuration: {0}")]
    Syntax(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Minutes on a laptop.
    Desk,
    /// The full-scale protocol: 99k pool, b = 1000, T = 20, 100 epochs.
    Paper,
}

impl FromStr for Profile {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(ConfigError::Range {
                key: "profile".into(),
                message: format!("unknown profile {other:?}, expected desk or paper"),
            }),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSection {
    /// Dataset file written by `gen-data`; empty means generate in memory.
    pub path: String,
    pub pool_size: usize,
    pub positive_fraction: f64,
    pub negative_subclusters: usize,
    pub patch_side: usize,
    pub cluster_separation: f64,
    pub noise_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSection {
    pub labeled_size: usize,
    pub test_size: usize,
    pub stratify_labeled: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveSection {
    pub budget: usize,
    pub iterations: usize,
    pub candidate_cap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSection {
    pub enabled: bool,
    pub contrastive_epochs: usize,
    pub proxy_epochs: usize,
    pub eval_interval: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderSection {
    pub hidden_dims: Vec<usize>,
    pub feature_dim: usize,
    pub head_dims: [usize; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSection {
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    pub dir: String,
    /// Save the final encoder of every run.
    pub checkpoints: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub profile: Profile,
    pub seed: u64,
    pub repetitions: u32,
    pub strategies: Vec<SamplerKind>,
    pub data: DataSection,
    pub split: SplitSection,
    pub active: ActiveSection,
    pub benchmark: BenchmarkSection,
    pub encoder: EncoderSection,
    pub contrastive: ContrastiveHyper,
    pub proxy: ProxyHyper,
    pub augment: AugmentationConfig,
    pub eval: EvalSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => desk(),
            Profile::Paper => paper(),
        }
    }

    /// Parses `text` over the profile named by `profile`, or by the file's
    /// own `profile` key, or `desk`.
    pub fn parse(text: &str, profile: Option<Profile>) -> Result<Self, ConfigError> {
        let user: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        let from_file = match user.get("profile") {
            None => None,
            Some(Value::String(s)) => Some(s.parse::<Profile>()?),
            Some(_) => {
                return Err(ConfigError::Type {
                    key: "profile".into(),
                    expected: "a string",
                })
            }
        };
        let chosen = profile.or(from_file).unwrap_or(Profile::Desk);
        let mut base = Value::try_from(Self::profile(chosen))
            .expect("profile defaults serialize")
            .as_table()
            .cloned()
            .expect("config is a table");
        overlay(&mut base, user, "")?;
        base.insert("profile".into(), Value::String(chosen.to_string()));
        let config: RunConfig = Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, profile: Option<Profile>) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        Ok(Self::parse(&text, profile)?)
    }

    pub fn emit(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = self;
        let mut checks = Checks::default();
        checks.at_least("repetitions", c.repetitions as f64, 1.0);
        if c.strategies.is_empty() {
            checks.fail("strategies", "at least one strategy is required");
        }
        let mut seen = c.strategies.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != c.strategies.len() {
            checks.fail("strategies", "strategies must not repeat");
        }

        checks.at_least("data.pool_size", c.data.pool_size as f64, 10.0);
        checks.open_unit("data.positive_fraction", c.data.positive_fraction);
        checks.at_least("data.negative_subclusters", c.data.negative_subclusters as f64, 1.0);
        checks.at_least("data.patch_side", c.data.patch_side as f64, 1.0);
        checks.non_negative("data.cluster_separation", c.data.cluster_separation);
        checks.non_negative("data.noise_scale", c.data.noise_scale);

        checks.at_least("split.labeled_size", c.split.labeled_size as f64, 2.0);
        checks.at_least("split.test_size", c.split.test_size as f64, 1.0);
        if c.data.path.is_empty() && c.split.labeled_size + c.split.test_size >= c.data.pool_size {
            checks.fail("split.test_size", "labeled_size + test_size must be smaller than data.pool_size");
        }

        checks.at_least("active.budget", c.active.budget as f64, 1.0);
        checks.at_least("active.iterations", c.active.iterations as f64, 1.0);
        checks.at_least("active.candidate_cap", c.active.candidate_cap as f64, 1.0);
        if c.data.path.is_empty() {
            let pool = c.data.pool_size.saturating_sub(c.split.labeled_size + c.split.test_size);
            if c.active.budget.saturating_mul(c.active.iterations) > pool {
                checks.fail(
                    "active.iterations",
                    &format!(
                        "budget x iterations = {} exceeds the unlabeled pool of {pool}",
                        c.active.budget * c.active.iterations
                    ),
                );
            }
        }

        checks.at_least("benchmark.proxy_epochs", c.benchmark.proxy_epochs as f64, 1.0);
        checks.at_least("benchmark.eval_interval", c.benchmark.eval_interval as f64, 1.0);

        for (i, w) in c.encoder.hidden_dims.iter().enumerate() {
            checks.at_least(&format!("encoder.hidden_dims[{i}]"), *w as f64, 1.0);
        }
        checks.at_least("encoder.feature_dim", c.encoder.feature_dim as f64, 1.0);
        for (i, w) in c.encoder.head_dims.iter().enumerate() {
            checks.at_least(&format!("encoder.head_dims[{i}]"), *w as f64, 1.0);
        }

        checks.positive("contrastive.temperature", c.contrastive.temperature);
        checks.at_least("contrastive.batch_size", c.contrastive.batch_size as f64, 2.0);
        checks.positive("contrastive.learning_rate", c.contrastive.learning_rate);
        checks.unit_interval_open_top("contrastive.beta1", c.contrastive.beta1);
        checks.unit_interval_open_top("contrastive.beta2", c.contrastive.beta2);
        checks.positive("contrastive.epsilon", c.contrastive.epsilon);

        checks.positive("proxy.learning_rate", c.proxy.learning_rate);
        checks.at_least("proxy.batch_size", c.proxy.batch_size as f64, 1.0);
        checks.unit_interval_open_top("proxy.beta1", c.proxy.beta1);
        checks.unit_interval_open_top("proxy.beta2", c.proxy.beta2);
        checks.positive("proxy.epsilon", c.proxy.epsilon);

        checks.non_negative("augment.noise_sigma", c.augment.noise_sigma);
        checks.non_negative("augment.intensity_jitter", c.augment.intensity_jitter);
        if c.augment.max_shift >= c.data.patch_side {
            checks.fail("augment.max_shift", "must be smaller than data.patch_side");
        }

        if !(0.0..=1.0).contains(&c.eval.threshold) {
            checks.fail("eval.threshold", "must lie in [0, 1]");
        }
        checks.finish()
    }

    pub fn dataset_spec(&self) -> DatasetSpec {
        DatasetSpec {
            pool_size: self.data.pool_size,
            positive_fraction: self.data.positive_fraction,
            negative_subclusters: self.data.negative_subclusters,
            patch_side: self.data.patch_side,
            cluster_separation: self.data.cluster_separation,
            noise_scale: self.data.noise_scale,
            seed: SeedSchedule::new(self.seed, 0).seed(Stream::Data, 0),
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            labeled_size: self.split.labeled_size,
            test_size: self.split.test_size,
            stratify_labeled: self.split.stratify_labeled,
            seed: SeedSchedule::new(self.seed, 0).seed(Stream::Split, 0),
        }
    }

    pub fn training(&self, side: usize) -> TrainingConfig {
        TrainingConfig {
            encoder: EncoderConfig {
                input_dim: side * side,
                hidden_dims: self.encoder.hidden_dims.clone(),
                feature_dim: self.encoder.feature_dim,
                head_dims: self.encoder.head_dims,
            },
            contrastive: self.contrastive.clone(),
            proxy: self.proxy.clone(),
            augmentation: self.augment.clone(),
            threshold: self.eval.threshold,
        }
    }

    pub fn loop_config(&self, side: usize, sampler: SamplerKind, repetition: u32) -> LoopConfig {
        LoopConfig {
            budget: self.active.budget,
            iterations: self.active.iterations,
            sampler,
            candidate_cap: self.active.candidate_cap,
            training: self.training(side),
            seeds: SeedSchedule::new(self.seed, repetition),
        }
    }

    pub fn benchmark_config(&self, side: usize) -> BenchmarkConfig {
        let mut training = self.training(side);
        training.contrastive.epochs = self.benchmark.contrastive_epochs;
        training.proxy.epochs = self.benchmark.proxy_epochs;
        BenchmarkConfig {
            training,
            eval_interval: self.benchmark.eval_interval,
            seeds: SeedSchedule::new(self.seed, 0),
        }
    }
}

#[derive(Default)]
struct Checks(Vec<ConfigError>);

impl Checks {
    fn fail(&mut self, key: &str, message: &str) {
        self.0.push(ConfigError::Range {
            key: key.into(),
            message: message.into(),
        });
    }

    fn at_least(&mut self, key: &str, v: f64, min: f64) {
        if v < min {
            self.fail(key, &format!("must be >= {min}, got {v}"));
        }
    }

    fn positive(&mut self, key: &str, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.fail(key, &format!("must be > 0, got {v}"));
        }
    }

    fn non_negative(&mut self, key: &str, v: f64) {
        if !(v.is_finite() && v >= 0.0) {
            self.fail(key, &format!("must be >= 0, got {v}"));
        }
    }

    fn open_unit(&mut self, key: &str, v: f64) {
        if !(v > 0.0 && v < 1.0) {
            self.fail(key, &format!("must lie in (0, 1), got {v}"));
        }
    }

    fn unit_interval_open_top(&mut self, key: &str, v: f64) {
        if !(0.0..1.0).contains(&v) {
            self.fail(key, &format!("must lie in [0, 1), got {v}"));
        }
    }

    /// Reports the first failure.
    fn finish(self) -> Result<(), ConfigError> {
        match self.0.into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "a string",
        Value::Integer(_) => "an integer",
        Value::Float(_) => "a number",
        Value::Boolean(_) => "a boolean",
        Value::Datetime(_) => "a datetime",
        Value::Array(_) => "an array",
        Value::Table(_) => "a table",
    }
}

fn overlay(base: &mut Table, user: Table, prefix: &str) -> Result<(), ConfigError> {
    for (k, v) in user {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let Some(slot) = base.get_mut(&k) else {
            return Err(ConfigError::UnknownKey(key));
        };
        match (slot, v) {
            (Value::Table(b), Value::Table(u)) => overlay(b, u, &key)?,
            (slot @ Value::Float(_), Value::Integer(i)) => *slot = Value::Float(i as f64),
            (slot, v) if std::mem::discriminant(slot) == std::mem::discriminant(&v) => *slot = v,
            (slot, _) => {
                return Err(ConfigError::Type {
                    key,
                    expected: type_name(slot),
                })
            }
        }
    }
    Ok(())
}

fn desk() -> RunConfig {
    RunConfig {
        profile: Profile::Desk,
        seed: 0,
        repetitions: 3,
        strategies: SamplerKind::ALL.to_vec(),
        data: DataSection {
            path: String::new(),
            pool_size: 2000,
            positive_fraction: 0.14317,
            negative_subclusters: 8,
            patch_side: 8,
            cluster_separation: 0.2,
            noise_scale: 0.2,
        },
        split: SplitSection {
            labeled_size: 200,
            test_size: 500,
            stratify_labeled: false,
        },
        active: ActiveSection {
            budget: 100,
            iterations: 10,
            candidate_cap: 10_000,
        },
        benchmark: BenchmarkSection {
            enabled: true,
            contrastive_epochs: 30,
            proxy_epochs: 200,
            eval_interval: 20,
        },
        encoder: EncoderSection {
            hidden_dims: vec![128, 128],
            feature_dim: 64,
            head_dims: [64, 64, 32],
        },
        contrastive: ContrastiveHyper {
            temperature: 0.1,
            batch_size: 64,
            epochs: 30,
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        },
        proxy: ProxyHyper {
            learning_rate: 0.05,
            epochs: 40,
            batch_size: 32,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        },
        augment: AugmentationConfig::default(),
        eval: EvalSection { threshold: 0.5 },
        output: OutputSection {
            dir: "runs/desk".into(),
            checkpoints: false,
        },
    }
}

fn paper() -> RunConfig {
    let d = desk();
    RunConfig {
        profile: Profile::Paper,
        data: DataSection {
            pool_size: 107_180,
            ..d.data
        },
        split: SplitSection {
            labeled_size: 1000,
            test_size: 7180,
            stratify_labeled: false,
        },
        active: ActiveSection {
            budget: 1000,
            iterations: 20,
            candidate_cap: 10_000,
        },
        benchmark: BenchmarkSection {
            enabled: true,
            contrastive_epochs: 100,
            proxy_epochs: 200,
            eval_interval: 20,
        },
        encoder: EncoderSection {
            hidden_dims: vec![512, 512],
            feature_dim: 512,
            head_dims: [128, 128, 128],
        },
        contrastive: ContrastiveHyper {
            batch_size: 128,
            epochs: 100,
            ..d.contrastive
        },
        proxy: ProxyHyper {
            learning_rate: 1e-3,
            batch_size: 128,
            ..d.proxy
        },
        output: OutputSection {
            dir: "runs/paper".into(),
            checkpoints: false,
        },
        ..d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_profile_defaults() {
        assert_eq!(RunConfig::parse("", None).unwrap(), desk());
        assert_eq!(RunConfig::parse("", Some(Profile::Paper)).unwrap(), paper());
        assert_eq!(RunConfig::parse("profile = \"paper\"", None).unwrap(), paper());
        // the flag wins over the file
        assert_eq!(RunConfig::parse("profile = \"paper\"", Some(Profile::Desk)).unwrap(), desk());
    }

    #[test]
    fn profiles_are_valid() {
        desk().validate().unwrap();
        paper().validate().unwrap();
    }

    #[test]
    fn overrides_apply() {
        let c = RunConfig::parse(
            "seed = 9\nstrategies = [\"coreset\"]\n[contrastive]\ntemperature = 1\n[encoder]\nhidden_dims = [32]\n",
            None,
        )
        .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.strategies, vec![SamplerKind::Coreset]);
        assert_eq!(c.contrastive.temperature, 1.0);
        assert_eq!(c.encoder.hidden_dims, vec![32]);
        assert_eq!(c.contrastive.epochs, 30);
    }

    #[test]
    fn negative_temperature_names_the_key() {
        let err = RunConfig::parse("[contrastive]\ntemperature = -1.0\n", None).unwrap_err();
        assert!(matches!(&err, ConfigError::Range { key, .. } if key == "contrastive.temperature"), "{err}");
        assert!(err.to_string().contains("contrastive.temperature"));
    }

    #[test]
    fn unknown_and_mistyped_keys() {
        assert_eq!(
            RunConfig::parse("[proxy]\nlr = 0.1\n", None).unwrap_err(),
            ConfigError::UnknownKey("proxy.lr".into())
        );
        assert_eq!(
            RunConfig::parse("[active]\nbudget = \"many\"\n", None).unwrap_err(),
            ConfigError::Type {
                key: "active.budget".into(),
                expected: "an integer"
            }
        );
        assert!(matches!(RunConfig::parse("strategies = [\"entropy\"]", None), Err(ConfigError::Syntax(_))));
        assert!(matches!(RunConfig::parse("seed = ", None), Err(ConfigError::Syntax(_))));
        assert!(matches!(
            RunConfig::parse("profile = \"huge\"", None),
            Err(ConfigError::Range { key, .. }) if key == "profile"
        ));
    }

    #[test]
    fn range_checks() {
        let cases = [
            ("repetitions = 0", "repetitions"),
            ("strategies = []", "strategies"),
            ("[active]\nbudget = 500", "active.iterations"),
            ("[split]\ntest_size = 1900", "split.test_size"),
            ("[proxy]\nbeta2 = 1.0", "proxy.beta2"),
            ("[augment]\nmax_shift = 8", "augment.max_shift"),
            ("[eval]\nthreshold = 1.5", "eval.threshold"),
            ("[encoder]\nhead_dims = [4, 0, 4]", "encoder.head_dims[1]"),
        ];
        for (text, key) in cases {
            match RunConfig::parse(text, None) {
                Err(ConfigError::Range { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn emit_round_trips() {
        for c in [desk(), paper(), RunConfig::parse("seed = 4\n[split]\nstratify_labeled = true", None).unwrap()] {
            assert_eq!(RunConfig::parse(&c.emit(), None).unwrap(), c);
        }
    }
}
