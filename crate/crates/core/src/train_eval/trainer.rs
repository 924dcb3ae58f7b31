use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::optim::{AdamW, AdamWConfig};
use super::sts::StsEvalSet;
use crate::embeddings::{ForwardCache, ToyEncoder, ToyParams};
use crate::error::{Error, Result};
use crate::losses::{combined_loss_with_grad, BatchRow, ContrastiveBatch, HtConfig, InfoNceConfig};
use crate::pattern_sim::{HybridDataset, Origin, QuadrupleExample};
use crate::repr_metrics::{record_snapshot, AlignUniformConfig, MetricData, Trajectory};
use crate::seeds::derive_seed;

pub const TOKEN_CUTOFF_RATE: f64 = 0.15;
pub const DEFAULT_RECORD_INTERVAL: usize = 125;
pub const DEFAULT_HELDOUT_FRACTION: f64 = 0.1;

/// How corpus_only records get their positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Augmentation {
    /// Two stochastic encoder passes of the same sentence.
    #[default]
    Dropout,
    TokenShuffle,
    /// Drops a seeded 15% of the tokens (at least one token is kept).
    TokenCutoff,
}

impl Augmentation {
    pub fn as_str(self) -> &'static str {
        match self {
            Augmentation::Dropout => "dropout",
            Augmentation::TokenShuffle => "token_shuffle",
            Augmentation::TokenCutoff => "token_cutoff",
        }
    }

    /// The text of the positive view of `sentence`.
    pub fn apply<R: Rng>(self, sentence: &str, rng: &mut R) -> String {
        let mut tokens: Vec<&str> = sentence.split_whitespace().collect();
        match self {
            Augmentation::Dropout => sentence.to_string(),
            Augmentation::TokenShuffle => {
                tokens.shuffle(rng);
                tokens.join(" ")
            }
            Augmentation::TokenCutoff => {
                let n = tokens.len();
                let cut =
                    ((n as f64 * TOKEN_CUTOFF_RATE).round() as usize).min(n.saturating_sub(1));
                let drop: HashSet<usize> = rand::seq::index::sample(rng, n.max(1), cut)
                    .into_iter()
                    .collect();
                let kept: Vec<&str> = tokens
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !drop.contains(i))
                    .map(|(_, t)| *t)
                    .collect();
                kept.join(" ")
            }
        }
    }
}

impl fmt::Display for Augmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Augmentation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dropout" => Ok(Augmentation::Dropout),
            "token_shuffle" => Ok(Augmentation::TokenShuffle),
            "token_cutoff" => Ok(Augmentation::TokenCutoff),
            _ => Err(Error::Config(format!(
                "unknown augmentation `{s}` (expected dropout, token_shuffle or token_cutoff)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    #[default]
    AdamW,
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adamw" => Ok(Optimizer::AdamW),
            _ => Err(Error::Config(format!(
                "unknown optimizer `{s}` (expected adamw)"
            ))),
        }
    }
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("adamw")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub tau: f64,
    pub ht: HtConfig,
    pub epochs: usize,
    pub record_interval: usize,
    pub heldout_fraction: f64,
    pub seed: u64,
    pub augmentation: Augmentation,
    pub metrics: AlignUniformConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::AdamW,
            learning_rate: 3e-5,
            weight_decay: 0.0,
            batch_size: 256,
            tau: InfoNceConfig::default().tau,
            ht: HtConfig::default(),
            epochs: 1,
            record_interval: DEFAULT_RECORD_INTERVAL,
            heldout_fraction: DEFAULT_HELDOUT_FRACTION,
            seed: 0,
            augmentation: Augmentation::Dropout,
            metrics: AlignUniformConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.adamw().validate()?;
        InfoNceConfig { tau: self.tau }.validate()?;
        self.ht.validate()?;
        self.metrics.validate()?;
        if self.batch_size == 0 || self.epochs == 0 || self.record_interval == 0 {
            return Err(Error::Config(
                "batch_size, epochs and record_interval must be positive".into(),
            ));
        }
        if !(self.heldout_fraction > 0.0 && self.heldout_fraction < 1.0) {
            return Err(Error::Config(format!(
                "heldout_fraction must lie in (0, 1), got {}",
                self.heldout_fraction
            )));
        }
        Ok(())
    }

    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            ..AdamWConfig::default()
        }
    }

    /// Optimizer steps for `n_train` training records.
    pub fn total_steps(&self, n_train: usize) -> usize {
        self.epochs * n_train.div_ceil(self.batch_size)
    }

    /// Snapshot count: every `record_interval` steps plus the final step.
    pub fn snapshot_count(&self, n_train: usize) -> usize {
        self.total_steps(n_train).div_ceil(self.record_interval)
    }
}

/// Shuffles `records` with `seed` and holds out the first `⌈fraction·N⌉`.
/// Returns `(train, heldout)`.
pub fn split_heldout<T: Clone>(
    records: &[T],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Argument(format!(
            "fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = records.len();
    if n < 2 {
        return Err(Error::Argument(format!("cannot split {n} records")));
    }
    let n_heldout = (fraction * n as f64).ceil() as usize;
    if n_heldout >= n {
        return Err(Error::Argument(format!(
            "holding out {n_heldout} of {n} records leaves nothing to train on"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
        seed,
        &[b"heldout"],
    )));
    let heldout = order[..n_heldout]
        .iter()
        .map(|&i| records[i].clone())
        .collect();
    let train = order[n_heldout..]
        .iter()
        .map(|&i| records[i].clone())
        .collect();
    Ok((train, heldout))
}

/// Alignment pairs and uniformity pool for held-out training records.
/// corpus_only records are paired with their augmented view, which under
/// dropout (inactive at measurement time) is the sentence itself.
pub fn heldout_metric_data(
    records: &[QuadrupleExample],
    augmentation: Augmentation,
    seed: u64,
) -> MetricData {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[b"heldout-views"]));
    let mut pairs = Vec::with_capacity(records.len());
    let mut pool = Vec::new();
    for r in records {
        let positive = match &r.positive {
            Some(p) => p.clone(),
            None => augmentation.apply(&r.anchor, &mut rng),
        };
        pool.push(r.anchor.clone());
        pool.extend(
            [&r.positive, &r.intermediate, &r.negative]
                .into_iter()
                .flatten()
                .cloned(),
        );
        pairs.push((r.anchor.clone(), positive));
    }
    MetricData::new(pairs, pool)
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub encoder: ToyEncoder,
    pub trajectory: Trajectory,
    /// Total loss of every optimizer step.
    pub step_losses: Vec<f64>,
    pub n_train: usize,
    pub n_heldout: usize,
}

struct RowCaches {
    anchor: ForwardCache,
    positive: ForwardCache,
    negative: Option<ForwardCache>,
    intermediate: Option<ForwardCache>,
}

fn forward_record<R: Rng>(
    enc: &ToyEncoder,
    r: &QuadrupleExample,
    aug: Augmentation,
    rng: &mut R,
) -> RowCaches {
    let anchor = enc.forward_train(&r.anchor, rng);
    let positive = match &r.positive {
        Some(p) => enc.forward_train(p, rng),
        None => {
            let view = aug.apply(&r.anchor, rng);
            enc.forward_train(&view, rng)
        }
    };
    let negative = r.negative.as_ref().map(|n| enc.forward_train(n, rng));
    let intermediate = r.intermediate.as_ref().map(|m| enc.forward_train(m, rng));
    RowCaches {
        anchor,
        positive,
        negative,
        intermediate,
    }
}

/// Trains `encoder` on `dataset`, recording a trajectory snapshot every
/// `record_interval` steps and at the final step.
pub fn train(
    cfg: &TrainConfig,
    dataset: &HybridDataset,
    mut encoder: ToyEncoder,
    evalset: &StsEvalSet,
) -> Result<TrainOutput> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Data("training dataset is empty".into()));
    }
    let ids: Vec<usize> = (0..dataset.len()).collect();
    let (mut train_ids, heldout_ids) = split_heldout(&ids, cfg.heldout_fraction, cfg.seed)?;
    let heldout: Vec<QuadrupleExample> = heldout_ids
        .iter()
        .map(|&i| dataset.examples[i].clone())
        .collect();
    let heldout_data = heldout_metric_data(&heldout, cfg.augmentation, cfg.seed);
    let eval_data = evalset.metric_data();

    let nce = InfoNceConfig { tau: cfg.tau };
    let mut optimizer = AdamW::new(cfg.adamw(), encoder.params())?;
    let mut order_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[b"batch-order"]));
    let total_steps = cfg.total_steps(train_ids.len());
    let mut trajectory = Trajectory::new();
    let mut step_losses = Vec::with_capacity(total_steps);
    let mut grads = ToyParams::zeros_like(encoder.params());
    let mut step = 0usize;

    for epoch in 0..cfg.epochs {
        train_ids.shuffle(&mut order_rng);
        for chunk in train_ids.chunks(cfg.batch_size) {
            // Each record draws its dropout masks and augmentation from its
            // own stream, so a record is encoded the same way regardless of
            // what else is in the dataset.
            let caches: Vec<RowCaches> = chunk
                .iter()
                .map(|&i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                        cfg.seed,
                        &[
                            b"record",
                            &(epoch as u64).to_le_bytes(),
                            &(i as u64).to_le_bytes(),
                        ],
                    ));
                    forward_record(&encoder, &dataset.examples[i], cfg.augmentation, &mut rng)
                })
                .collect();
            let chunk: Vec<&QuadrupleExample> =
                chunk.iter().map(|&i| &dataset.examples[i]).collect();
            let rows = chunk
                .iter()
                .zip(&caches)
                .map(|(r, c)| BatchRow {
                    anchor: c.anchor.embedding(),
                    positive: c.positive.embedding(),
                    hard_negative: c.negative.as_ref().map(ForwardCache::embedding),
                    intermediate: c.intermediate.as_ref().map(ForwardCache::embedding),
                    // HT applies to generated data only.
                    ht: r.origin != Origin::CorpusOnly && r.is_hierarchical(),
                })
                .collect();
            let fail = |message: String| Error::Training {
                batch: step,
                message,
            };
            let batch = ContrastiveBatch::new(rows).map_err(|e| fail(e.to_string()))?;
            let (loss, grad) =
                combined_loss_with_grad(&batch, &nce, &cfg.ht).map_err(|e| fail(e.to_string()))?;
            if !loss.total.is_finite() {
                return Err(fail(format!("non-finite loss {}", loss.total)));
            }

            grads.fill(0.0);
            for (i, c) in caches.iter().enumerate() {
                encoder.backward(&c.anchor, &grad.anchors[i], &mut grads);
                encoder.backward(&c.positive, &grad.positives[i], &mut grads);
                if let (Some(c), Some(g)) = (&c.negative, &grad.hard_negatives[i]) {
                    encoder.backward(c, g, &mut grads);
                }
                if let (Some(c), Some(g)) = (&c.intermediate, &grad.intermediates[i]) {
                    encoder.backward(c, g, &mut grads);
                }
            }
            optimizer.step(encoder.params_mut(), &grads);
            if !encoder.params().is_finite() {
                return Err(fail("parameters became non-finite".into()));
            }
            step_losses.push(loss.total);
            step += 1;

            if step.is_multiple_of(cfg.record_interval) || step == total_steps {
                let snap = record_snapshot(
                    &encoder,
                    &heldout_data,
                    &eval_data,
                    step as u64,
                    &cfg.metrics,
                )?;
                trajectory.push(snap)?;
            }
        }
    }

    Ok(TrainOutput {
        encoder,
        trajectory,
        step_losses,
        n_train: train_ids.len(),
        n_heldout: heldout.len(),
    })
}
