//! A small trainable encoder: hashed token-embedding table, a global-context
//! mix, pooling, one dense layer and L2 normalization. Small enough to train on
//! a CPU in seconds while exercising every pooling strategy.
//!
//! For tokens `t_0..t_{L-1}` with table rows `x_i`, the hidden state at
//! position `i` is `x_i + mean_j x_j`. Pooling picks one hidden state (or the
//! mean), which is a fixed linear combination `z = Σ w_i x_i`. The output is
//! `normalize(W z + b)`.

use std::hash::Hasher;

use fnv::FnvHasher;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    dot, Embedding, EncoderHandle, PoolingStrategy, SentenceEncoder, TemplateParts,
    MASK_PLACEHOLDER,
};
use crate::error::{Error, Result};
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyParams {
    /// `buckets × hidden`, row-major.
    pub table: Vec<f64>,
    /// `dim × hidden`, row-major.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ToyParams {
    pub fn zeros_like(other: &ToyParams) -> Self {
        ToyParams {
            table: vec![0.0; other.table.len()],
            weight: vec![0.0; other.weight.len()],
            bias: vec![0.0; other.bias.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.table.len() + self.weight.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fill(&mut self, value: f64) {
        for slice in self.slices_mut() {
            slice.iter_mut().for_each(|v| *v = value);
        }
    }

    pub fn slices(&self) -> [&[f64]; 3] {
        [&self.table, &self.weight, &self.bias]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 3] {
        [&mut self.table, &mut self.weight, &mut self.bias]
    }

    pub fn is_finite(&self) -> bool {
        self.slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Everything `backward` needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    buckets: Vec<usize>,
    weights: Vec<f64>,
    /// Per-token dropout multipliers, `L × hidden`; `None` in inference mode.
    masks: Option<Vec<f64>>,
    pooled: Vec<f64>,
    output: Vec<f64>,
    norm: f64,
}

impl ForwardCache {
    pub fn embedding(&self) -> Embedding {
        Embedding::new(self.output.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyEncoder {
    handle: EncoderHandle,
    params: ToyParams,
}

impl ToyEncoder {
    pub(super) fn new(handle: EncoderHandle, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden = handle.hidden;
        let table = (0..handle.buckets * hidden)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let scale = 1.0 / (hidden as f64).sqrt();
        let weight = (0..handle.dim * hidden)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
            .collect();
        let bias = vec![0.0; handle.dim];
        ToyEncoder {
            handle,
            params: ToyParams {
                table,
                weight,
                bias,
            },
        }
    }

    pub fn handle(&self) -> &EncoderHandle {
        &self.handle
    }

    pub fn params(&self) -> &ToyParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ToyParams {
        &mut self.params
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Data(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let enc: ToyEncoder = serde_json::from_str(s).map_err(|e| Error::Data(e.to_string()))?;
        let h = &enc.handle;
        h.validate()?;
        if enc.params.table.len() != h.buckets * h.hidden
            || enc.params.weight.len() != h.dim * h.hidden
            || enc.params.bias.len() != h.dim
        {
            return Err(Error::Data(
                "encoder parameter shapes do not match its handle".into(),
            ));
        }
        Ok(enc)
    }

    fn bucket(&self, token: &str) -> usize {
        let mut hasher = FnvHasher::default();
        hasher.write(token.as_bytes());
        (hasher.finish() % self.handle.buckets as u64) as usize
    }

    /// Token buckets and pooling weights for `sentence`.
    fn prepare(&self, sentence: &str) -> (Vec<usize>, Vec<f64>) {
        let mut tokens = Vec::new();
        let mut mask_at = None;
        match (self.handle.pooling.strategy, &self.handle.pooling.template) {
            (PoolingStrategy::PromptMask, Some(template)) => {
                let parts = TemplateParts::parse(template).expect("validated at load");
                let before = tokenize(parts.before);
                let after = tokenize(parts.after);
                let find_mask =
                    |toks: &[String]| toks.iter().position(|t| t.contains(MASK_PLACEHOLDER));
                let sentence_tokens = tokenize(sentence);
                mask_at = find_mask(&before).or_else(|| {
                    find_mask(&after).map(|i| before.len() + sentence_tokens.len() + i)
                });
                tokens.extend(before);
                tokens.extend(sentence_tokens);
                tokens.extend(after);
            }
            _ => tokens = tokenize(sentence),
        }
        if tokens.is_empty() {
            tokens.push(String::new());
        }
        let len = tokens.len() as f64;
        let mut weights = vec![1.0 / len; tokens.len()];
        match self.handle.pooling.strategy {
            PoolingStrategy::FirstToken => weights[0] += 1.0,
            PoolingStrategy::MeanTokens => weights.iter_mut().for_each(|w| *w *= 2.0),
            PoolingStrategy::PromptMask => weights[mask_at.expect("template has a mask")] += 1.0,
        }
        let buckets = tokens.iter().map(|t| self.bucket(t)).collect();
        (buckets, weights)
    }

    fn forward_impl(&self, sentence: &str, rng: Option<&mut dyn rand::RngCore>) -> ForwardCache {
        let hidden = self.handle.hidden;
        let (buckets, weights) = self.prepare(sentence);
        let keep = 1.0 - self.handle.dropout;
        let masks = rng.filter(|_| self.handle.dropout > 0.0).map(|rng| {
            (0..buckets.len() * hidden)
                .map(|_| {
                    if rng.gen::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
                .collect::<Vec<f64>>()
        });

        let mut pooled = vec![0.0; hidden];
        for (i, (&b, &w)) in buckets.iter().zip(&weights).enumerate() {
            let row = &self.params.table[b * hidden..(b + 1) * hidden];
            for j in 0..hidden {
                let m = masks.as_ref().map_or(1.0, |m| m[i * hidden + j]);
                pooled[j] += w * row[j] * m;
            }
        }
        let output_raw: Vec<f64> = (0..self.handle.dim)
            .map(|k| {
                dot(&self.params.weight[k * hidden..(k + 1) * hidden], &pooled)
                    + self.params.bias[k]
            })
            .collect();
        let norm = dot(&output_raw, &output_raw).sqrt().max(1e-12);
        let output = output_raw.iter().map(|v| v / norm).collect();
        ForwardCache {
            buckets,
            weights,
            masks,
            pooled,
            output,
            norm,
        }
    }

    /// Inference-mode forward pass (no dropout).
    pub fn forward(&self, sentence: &str) -> ForwardCache {
        self.forward_impl(sentence, None)
    }

    /// Training-mode forward pass with dropout drawn from `rng`.
    pub fn forward_train<R: Rng>(&self, sentence: &str, rng: &mut R) -> ForwardCache {
        self.forward_impl(sentence, Some(rng))
    }

    /// Accumulates into `grads` the gradient of a scalar loss given its
    /// gradient `grad_output` w.r.t. the normalized output of `cache`.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64], grads: &mut ToyParams) {
        let hidden = self.handle.hidden;
        let proj = dot(&cache.output, grad_output);
        let grad_raw: Vec<f64> = grad_output
            .iter()
            .zip(&cache.output)
            .map(|(g, u)| (g - u * proj) / cache.norm)
            .collect();

        let mut grad_pooled = vec![0.0; hidden];
        for (k, &g) in grad_raw.iter().enumerate() {
            grads.bias[k] += g;
            let w_row = &self.params.weight[k * hidden..(k + 1) * hidden];
            let gw_row = &mut grads.weight[k * hidden..(k + 1) * hidden];
            for j in 0..hidden {
                gw_row[j] += g * cache.pooled[j];
                grad_pooled[j] += g * w_row[j];
            }
        }
        for (i, (&b, &w)) in cache.buckets.iter().zip(&cache.weights).enumerate() {
            let row = &mut grads.table[b * hidden..(b + 1) * hidden];
            for j in 0..hidden {
                let m = cache.masks.as_ref().map_or(1.0, |m| m[i * hidden + j]);
                row[j] += w * grad_pooled[j] * m;
            }
        }
    }
}

impl SentenceEncoder for ToyEncoder {
    fn dim(&self) -> usize {
        self.handle.dim
    }

    fn embed_raw(&self, sentence: &str) -> Vec<f64> {
        let cache = self.forward(sentence);
        cache.output.iter().map(|u| u * cache.norm).collect()
    }
}
