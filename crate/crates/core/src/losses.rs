//! Contrastive (InfoNCE) loss with in-batch negatives, the hierarchical
//! triplet loss over (anchor, positive, intermediate, negative) rows, and
//! their weighted sum. Every loss returns its value together with the exact
//! gradient w.r.t. each embedding row so a trainer can backpropagate it.

use serde::{Deserialize, Serialize};

use crate::embeddings::{dot, Embedding};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoNceConfig {
    pub tau: f64,
}

impl Default for InfoNceConfig {
    fn default() -> Self {
        InfoNceConfig { tau: 5e-2 }
    }
}

impl InfoNceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::Argument(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HtConfig {
    pub m1: f64,
    pub m2: f64,
    /// Weight of the hierarchical triplet term in the combined loss.
    pub beta: f64,
}

impl Default for HtConfig {
    fn default() -> Self {
        HtConfig {
            m1: 5e-3,
            m2: 1e-2,
            beta: 1.0,
        }
    }
}

impl HtConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m1", self.m1), ("m2", self.m2), ("beta", self.beta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Argument(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// One training instance as seen by the losses.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRow {
    pub anchor: Embedding,
    pub positive: Embedding,
    pub hard_negative: Option<Embedding>,
    pub intermediate: Option<Embedding>,
    /// Whether this row takes part in the hierarchical triplet loss.
    pub ht: bool,
}

impl BatchRow {
    pub fn pair(anchor: Embedding, positive: Embedding) -> Self {
        BatchRow {
            anchor,
            positive,
            hard_negative: None,
            intermediate: None,
            ht: false,
        }
    }
}

/// A validated batch: all rows share one dimension, every present row is
/// unit-norm, and HT-supervised rows carry both an intermediate and a negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastiveBatch {
    rows: Vec<BatchRow>,
    dim: usize,
}

impl ContrastiveBatch {
    pub fn new(rows: Vec<BatchRow>) -> Result<Self> {
        let batch = Self::new_unnormalized(rows)?;
        for (i, row) in batch.rows.iter().enumerate() {
            let all = [
                Some(&row.anchor),
                Some(&row.positive),
                row.hard_negative.as_ref(),
                row.intermediate.as_ref(),
            ];
            if let Some(bad) = all.into_iter().flatten().find(|e| !e.is_unit()) {
                return Err(Error::Argument(format!(
                    "row {i} holds a vector with norm {} (expected unit norm)",
                    bad.norm()
                )));
            }
        }
        Ok(batch)
    }

    /// Checks shapes and supervision flags but not norms. The losses are
    /// well-defined on arbitrary vectors (inner products), which is what
    /// finite-difference probes rely on.
    pub fn new_unnormalized(rows: Vec<BatchRow>) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Argument("batch must contain at least one row".into()))?;
        let dim = first.anchor.dim();
        for (i, row) in rows.iter().enumerate() {
            let all = [
                Some(&row.anchor),
                Some(&row.positive),
                row.hard_negative.as_ref(),
                row.intermediate.as_ref(),
            ];
            if all.into_iter().flatten().any(|e| e.dim() != dim) {
                return Err(Error::Argument(format!(
                    "row {i} has a dimension other than {dim}"
                )));
            }
            if row.ht && (row.intermediate.is_none() || row.hard_negative.is_none()) {
                return Err(Error::Argument(format!(
                    "row {i} is marked for HT supervision but lacks an intermediate or negative"
                )));
            }
        }
        Ok(ContrastiveBatch { rows, dim })
    }

    pub fn rows(&self) -> &[BatchRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ht_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.ht).count()
    }
}

/// Gradient of a scalar loss w.r.t. every vector of a [`ContrastiveBatch`],
/// laid out like the batch rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchGrad {
    pub anchors: Vec<Vec<f64>>,
    pub positives: Vec<Vec<f64>>,
    pub hard_negatives: Vec<Option<Vec<f64>>>,
    pub intermediates: Vec<Option<Vec<f64>>>,
}

impl BatchGrad {
    pub fn zeros(batch: &ContrastiveBatch) -> Self {
        let d = batch.dim;
        let zeros_if = |present: bool| present.then(|| vec![0.0; d]);
        BatchGrad {
            anchors: vec![vec![0.0; d]; batch.len()],
            positives: vec![vec![0.0; d]; batch.len()],
            hard_negatives: batch
                .rows
                .iter()
                .map(|r| zeros_if(r.hard_negative.is_some()))
                .collect(),
            intermediates: batch
                .rows
                .iter()
                .map(|r| zeros_if(r.intermediate.is_some()))
                .collect(),
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &BatchGrad, scale: f64) {
        for (d, s) in self.anchors.iter_mut().zip(&other.anchors) {
            axpy(d, s, scale);
        }
        for (d, s) in self.positives.iter_mut().zip(&other.positives) {
            axpy(d, s, scale);
        }
        for (d, s) in self.hard_negatives.iter_mut().zip(&other.hard_negatives) {
            if let (Some(d), Some(s)) = (d, s) {
                axpy(d, s, scale);
            }
        }
        for (d, s) in self.intermediates.iter_mut().zip(&other.intermediates) {
            if let (Some(d), Some(s)) = (d, s) {
                axpy(d, s, scale);
            }
        }
    }
}

fn axpy(dst: &mut [f64], src: &[f64], scale: f64) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += scale * s);
}

/// Mean InfoNCE loss and its gradient.
///
/// Anchor `i` is scored against its own positive and, as negatives, every
/// other positive in the batch plus every hard negative present in the batch.
pub fn info_nce_with_grad(
    batch: &ContrastiveBatch,
    cfg: &InfoNceConfig,
) -> Result<(f64, BatchGrad)> {
    cfg.validate()?;
    let rows = &batch.rows;
    let n = rows.len() as f64;
    let mut grad = BatchGrad::zeros(batch);

    // Candidate order for every anchor: positives 0..B, then hard negatives.
    enum Cand {
        Pos(usize),
        Neg(usize),
    }
    let candidates: Vec<(Cand, &[f64])> = rows
        .iter()
        .enumerate()
        .map(|(j, r)| (Cand::Pos(j), r.positive.as_slice()))
        .chain(rows.iter().enumerate().filter_map(|(j, r)| {
            r.hard_negative
                .as_ref()
                .map(|e| (Cand::Neg(j), e.as_slice()))
        }))
        .collect();

    let mut total = 0.0;
    let mut logits = vec![0.0; candidates.len()];
    for (i, row) in rows.iter().enumerate() {
        let a = row.anchor.as_slice();
        for (l, (_, c)) in logits.iter_mut().zip(&candidates) {
            *l = dot(a, c) / cfg.tau;
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        total += log_z - logits[i];

        for (k, (cand, c)) in candidates.iter().enumerate() {
            let mut g = (logits[k] - log_z).exp();
            if matches!(cand, Cand::Pos(j) if *j == i) {
                g -= 1.0;
            }
            let g = g / (cfg.tau * n);
            axpy(&mut grad.anchors[i], c, g);
            match *cand {
                Cand::Pos(j) => axpy(&mut grad.positives[j], a, g),
                Cand::Neg(j) => axpy(grad.hard_negatives[j].as_mut().expect("present"), a, g),
            }
        }
    }
    Ok((total / n, grad))
}

pub fn info_nce(batch: &ContrastiveBatch, cfg: &InfoNceConfig) -> Result<f64> {
    info_nce_with_grad(batch, cfg).map(|(v, _)| v)
}

/// Result of the hierarchical triplet loss. `supervised_rows == 0` marks the
/// empty case, where the loss is defined as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HtOutcome {
    pub loss: f64,
    pub supervised_rows: usize,
}

impl HtOutcome {
    pub fn is_empty(&self) -> bool {
        self.supervised_rows == 0
    }
}

/// Mean over HT-supervised rows of
/// `½ [max(a·m − a·p + m1, 0) + max(a·n − a·m + m2, 0)]`, with its gradient.
pub fn hierarchical_triplet_with_grad(
    batch: &ContrastiveBatch,
    cfg: &HtConfig,
) -> Result<(HtOutcome, BatchGrad)> {
    cfg.validate()?;
    let mut grad = BatchGrad::zeros(batch);
    let supervised = batch.ht_rows();
    if supervised == 0 {
        return Ok((
            HtOutcome {
                loss: 0.0,
                supervised_rows: 0,
            },
            grad,
        ));
    }
    let scale = 0.5 / supervised as f64;
    let mut total = 0.0;
    for (i, row) in batch.rows.iter().enumerate().filter(|(_, r)| r.ht) {
        let a = row.anchor.as_slice();
        let p = row.positive.as_slice();
        let m = row.intermediate.as_ref().expect("validated").as_slice();
        let neg = row.hard_negative.as_ref().expect("validated").as_slice();
        let sim_m = dot(a, m);
        let upper = sim_m - dot(a, p) + cfg.m1;
        let lower = dot(a, neg) - sim_m + cfg.m2;
        total += upper.max(0.0) + lower.max(0.0);

        if upper > 0.0 {
            // ∂/∂a (a·m − a·p) = m − p
            axpy(&mut grad.anchors[i], m, scale);
            axpy(&mut grad.anchors[i], p, -scale);
            axpy(grad.intermediates[i].as_mut().expect("present"), a, scale);
            axpy(&mut grad.positives[i], a, -scale);
        }
        if lower > 0.0 {
            axpy(&mut grad.anchors[i], neg, scale);
            axpy(&mut grad.anchors[i], m, -scale);
            axpy(grad.hard_negatives[i].as_mut().expect("present"), a, scale);
            axpy(grad.intermediates[i].as_mut().expect("present"), a, -scale);
        }
    }
    Ok((
        HtOutcome {
            loss: total * scale,
            supervised_rows: supervised,
        },
        grad,
    ))
}

pub fn hierarchical_triplet(batch: &ContrastiveBatch, cfg: &HtConfig) -> Result<HtOutcome> {
    hierarchical_triplet_with_grad(batch, cfg).map(|(v, _)| v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedLoss {
    pub total: f64,
    pub contrastive: f64,
    pub ht: f64,
    pub ht_rows: usize,
}

/// `contrastive + beta · ht` and its gradient.
pub fn combined_loss_with_grad(
    batch: &ContrastiveBatch,
    nce_cfg: &InfoNceConfig,
    ht_cfg: &HtConfig,
) -> Result<(CombinedLoss, BatchGrad)> {
    let (contrastive, mut grad) = info_nce_with_grad(batch, nce_cfg)?;
    let (ht, ht_grad) = hierarchical_triplet_with_grad(batch, ht_cfg)?;
    if !ht.is_empty() && ht_cfg.beta != 0.0 {
        grad.add_scaled(&ht_grad, ht_cfg.beta);
    }
    // An empty HT set contributes nothing, so `total` is exactly `contrastive`.
    let total = if ht.is_empty() {
        contrastive
    } else {
        contrastive + ht_cfg.beta * ht.loss
    };
    Ok((
        CombinedLoss {
            total,
            contrastive,
            ht: ht.loss,
            ht_rows: ht.supervised_rows,
        },
        grad,
    ))
}

pub fn combined_loss(
    batch: &ContrastiveBatch,
    nce_cfg: &InfoNceConfig,
    ht_cfg: &HtConfig,
) -> Result<CombinedLoss> {
    combined_loss_with_grad(batch, nce_cfg, ht_cfg).map(|(v, _)| v)
}
