//! Flat dotted-key run configuration. Files are TOML; nested tables are
//! flattened (`[train] beta = 1` and `"train.beta" = 1` are the same key).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use toml::Value;

use crate::embeddings::{
    EncoderHandle, PoolingConfig, PoolingStrategy, DEFAULT_PROMPT_TEMPLATE, TOY_BACKBONE,
};
use crate::error::{Error, Result};
use crate::losses::HtConfig;
use crate::pattern_sim::client::{DEFAULT_API_KEY_ENV, DEFAULT_ENDPOINT, DEFAULT_MODEL};
use crate::pattern_sim::{DataDomain, GenerationConfig, PatternKind, RetryPolicy};
use crate::repr_metrics::AlignUniformConfig;
use crate::train_eval::{GridSpec, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Str,
    Int,
    Float,
    Bool,
    FloatList,
}

fn schema() -> Vec<(&'static str, Kind, Value)> {
    let s = |v: &str| Value::String(v.to_string());
    let list = |v: &[f64]| Value::Array(v.iter().map(|x| Value::Float(*x)).collect());
    let train = TrainConfig::default();
    let enc = EncoderHandle::default();
    use Kind::*;
    vec![
        ("seed", Int, Value::Integer(0)),
        ("out", Str, s("run")),
        ("data.corpus", Str, s("")),
        ("data.pattern_source", Str, s("")),
        ("data.dataset", Str, s("")),
        ("data.eval", Str, s("")),
        ("data.domain", Str, s("Wiki")),
        ("pattern.kind", Str, s("STS")),
        ("pattern.hierarchical", Bool, Value::Boolean(true)),
        ("pattern.n_generated", Int, Value::Integer(20_000)),
        ("llm.model", Str, s(DEFAULT_MODEL)),
        ("llm.endpoint", Str, s(DEFAULT_ENDPOINT)),
        ("llm.api_key_env", Str, s(DEFAULT_API_KEY_ENV)),
        ("llm.concurrency", Int, Value::Integer(8)),
        ("llm.mock", Bool, Value::Boolean(false)),
        ("llm.timeout_secs", Int, Value::Integer(60)),
        ("llm.max_attempts", Int, Value::Integer(3)),
        ("encoder.backbone", Str, s(TOY_BACKBONE)),
        (
            "encoder.pooling",
            Str,
            s(PoolingStrategy::default().as_str()),
        ),
        ("encoder.template", Str, s(DEFAULT_PROMPT_TEMPLATE)),
        ("encoder.d", Int, Value::Integer(enc.dim as i64)),
        ("encoder.hidden", Int, Value::Integer(enc.hidden as i64)),
        ("encoder.buckets", Int, Value::Integer(enc.buckets as i64)),
        ("encoder.dropout", Float, Value::Float(enc.dropout)),
        ("train.optimizer", Str, s("adamw")),
        (
            "train.learning_rate",
            Float,
            Value::Float(train.learning_rate),
        ),
        (
            "train.weight_decay",
            Float,
            Value::Float(train.weight_decay),
        ),
        (
            "train.batch_size",
            Int,
            Value::Integer(train.batch_size as i64),
        ),
        ("train.tau", Float, Value::Float(train.tau)),
        ("train.m1", Float, Value::Float(train.ht.m1)),
        ("train.m2", Float, Value::Float(train.ht.m2)),
        ("train.beta", Float, Value::Float(train.ht.beta)),
        ("train.epochs", Int, Value::Integer(train.epochs as i64)),
        (
            "train.heldout_fraction",
            Float,
            Value::Float(train.heldout_fraction),
        ),
        ("train.augmentation", Str, s(train.augmentation.as_str())),
        ("metrics.alpha", Float, Value::Float(train.metrics.alpha)),
        ("metrics.t", Float, Value::Float(train.metrics.t)),
        (
            "metrics.record_interval",
            Int,
            Value::Integer(train.record_interval as i64),
        ),
        ("grid.learning_rates", FloatList, list(&[1e-5, 3e-5, 5e-5])),
        ("grid.m1s", FloatList, list(&[1e-3, 5e-3, 1e-2])),
        ("grid.m2s", FloatList, list(&[1e-2, 5e-2, 1e-1])),
        ("grid.betas", FloatList, list(&[0.1, 0.5, 1.0])),
        ("grid.jobs", Int, Value::Integer(1)),
        ("hist.metric", Str, s("mer")),
        ("hist.polarity", Str, s("positive")),
        ("hist.bins", Int, Value::Integer(50)),
        ("hist.encoder", Str, s("")),
    ]
}

/// Fully resolved configuration: every known key has a value.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, Value>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn coerce(key: &str, kind: Kind, value: Value) -> Result<Value> {
    let bad = |v: &Value| Error::Config(format!("key `{key}` expects {kind:?}, got `{v}`"));
    Ok(match (kind, value) {
        (Kind::Str, v @ Value::String(_)) => v,
        (Kind::Int, v @ Value::Integer(i)) if i >= 0 => v,
        (Kind::Float, Value::Integer(i)) => Value::Float(i as f64),
        (Kind::Float, v @ Value::Float(_)) => v,
        (Kind::Bool, v @ Value::Boolean(_)) => v,
        (Kind::FloatList, Value::Array(items)) => Value::Array(
            items
                .into_iter()
                .map(|item| coerce(key, Kind::Float, item))
                .collect::<Result<_>>()?,
        ),
        (Kind::FloatList, Value::Float(f)) => Value::Array(vec![Value::Float(f)]),
        (Kind::FloatList, Value::Integer(i)) => Value::Array(vec![Value::Float(i as f64)]),
        (_, v) => return Err(bad(&v)),
    })
}

/// Parses the right-hand side of `--set key=value`. Bare words that are not
/// TOML values are taken as strings.
fn parse_override_value(raw: &str) -> Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            values: schema()
                .into_iter()
                .map(|(k, _, v)| (k.to_string(), v))
                .collect(),
        }
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: Value) -> Result<()> {
        let kinds = schema();
        let Some((_, kind, _)) = kinds.iter().find(|(k, _, _)| *k == key) else {
            return Err(Error::Config(format!("unknown configuration key `{key}`")));
        };
        self.values
            .insert(key.to_string(), coerce(key, *kind, value)?);
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_str(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "override `{assignment}` is not of the form key=value"
            ))
        })?;
        self.set(key.trim(), parse_override_value(raw.trim()))
    }

    /// Applies every key of a TOML document.
    pub fn merge_toml(&mut self, text: &str, origin: &str) -> Result<()> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: e.span().map_or(0, |span| {
                text[..span.start.min(text.len())].lines().count().max(1)
            }),
            message: e.message().to_string(),
        })?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        for (k, v) in flat {
            self.set(&k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        let mut cfg = RunConfig::default();
        cfg.merge_toml(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// One `key = value` line per key, sorted; valid TOML that reads back to
    /// the same configuration.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {}\n", render(v)));
        }
        out
    }

    fn get(&self, key: &str) -> &Value {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("schema key `{key}` missing"))
    }

    pub fn str(&self, key: &str) -> &str {
        self.get(key).as_str().expect("type checked on insert")
    }

    pub fn int(&self, key: &str) -> u64 {
        self.get(key).as_integer().expect("type checked on insert") as u64
    }

    pub fn usize(&self, key: &str) -> usize {
        self.int(key) as usize
    }

    pub fn float(&self, key: &str) -> f64 {
        self.get(key).as_float().expect("type checked on insert")
    }

    pub fn bool(&self, key: &str) -> bool {
        self.get(key).as_bool().expect("type checked on insert")
    }

    pub fn floats(&self, key: &str) -> Vec<f64> {
        self.get(key)
            .as_array()
            .expect("type checked on insert")
            .iter()
            .map(|v| v.as_float().expect("type checked on insert"))
            .collect()
    }

    /// A path-valued key; empty means unset.
    pub fn path(&self, key: &str) -> Result<PathBuf> {
        match self.str(key) {
            "" => Err(Error::Config(format!("`{key}` is not set"))),
            p => Ok(PathBuf::from(p)),
        }
    }

    pub fn seed(&self) -> u64 {
        self.int("seed")
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.str("out"))
    }

    pub fn encoder_handle(&self) -> Result<EncoderHandle> {
        let strategy: PoolingStrategy = self.str("encoder.pooling").parse()?;
        let pooling = match strategy {
            PoolingStrategy::PromptMask => {
                PoolingConfig::prompt_mask(self.str("encoder.template"))?
            }
            s => PoolingConfig::new(s),
        };
        let handle = EncoderHandle {
            backbone: self.str("encoder.backbone").to_string(),
            pooling,
            dim: self.usize("encoder.d"),
            hidden: self.usize("encoder.hidden"),
            buckets: self.usize("encoder.buckets"),
            dropout: self.float("encoder.dropout"),
        };
        handle.validate()?;
        Ok(handle)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            optimizer: self.str("train.optimizer").parse()?,
            learning_rate: self.float("train.learning_rate"),
            weight_decay: self.float("train.weight_decay"),
            batch_size: self.usize("train.batch_size"),
            tau: self.float("train.tau"),
            ht: HtConfig {
                m1: self.float("train.m1"),
                m2: self.float("train.m2"),
                beta: self.float("train.beta"),
            },
            epochs: self.usize("train.epochs"),
            record_interval: self.usize("metrics.record_interval"),
            heldout_fraction: self.float("train.heldout_fraction"),
            seed: self.seed(),
            augmentation: self.str("train.augmentation").parse()?,
            metrics: AlignUniformConfig {
                alpha: self.float("metrics.alpha"),
                t: self.float("metrics.t"),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn domain(&self) -> Result<DataDomain> {
        self.str("data.domain").parse()
    }

    pub fn generation_config(&self) -> Result<GenerationConfig> {
        let attempts = self.int("llm.max_attempts");
        if attempts == 0 {
            return Err(Error::Config("llm.max_attempts must be at least 1".into()));
        }
        Ok(GenerationConfig {
            pattern: self.str("pattern.kind").parse::<PatternKind>()?,
            hierarchical: self.bool("pattern.hierarchical"),
            n_generated: self.usize("pattern.n_generated"),
            domain: self.domain()?,
            seed: self.seed(),
            concurrency: self.usize("llm.concurrency").max(1),
            retry: RetryPolicy {
                max_attempts: attempts as u32,
                ..RetryPolicy::default()
            },
        })
    }

    pub fn llm_timeout(&self) -> Duration {
        Duration::from_secs(self.int("llm.timeout_secs"))
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let grid = GridSpec {
            learning_rates: self.floats("grid.learning_rates"),
            m1s: self.floats("grid.m1s"),
            m2s: self.floats("grid.m2s"),
            betas: self.floats("grid.betas"),
        };
        grid.validate()?;
        Ok(grid)
    }
}

fn render(v: &Value) -> String {
    match v {
        // Debug keeps a decimal point on integral floats and round-trips.
        Value::Float(f) => format!("{f:?}"),
        Value::Array(items) => format!(
            "[{}]",
            items.iter().map(render).collect::<Vec<_>>().join(", ")
        ),
        other => other.to_string(),
    }
}
