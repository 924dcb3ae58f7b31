use crate::embeddings::EncoderHandle;
use crate::error::Result;
use crate::pattern_sim::{generate_dataset, GenerationConfig, LlmClient, PatternSource};
use crate::repr_metrics::rfd;

use super::grid::TOP_K;
use super::stats::top_k_average;
use super::sts::StsEvalSet;
use super::trainer::{train, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub n_generated: usize,
    /// Quadruples that survived generation (flagged anchors stay corpus_only).
    pub generated: usize,
    pub outcome: std::result::Result<AblationScore, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationScore {
    pub top5_spearman: f64,
    pub rfd_a: f64,
    pub rfd_u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

pub const ABLATION_HEADER: &str = "n_generated\tgenerated\ttop5_spearman\trfd_a\trfd_u\tstatus";

impl AblationReport {
    pub fn scores(&self) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .map(|r| r.outcome.as_ref().ok().map(|s| s.top5_spearman))
            .collect()
    }

    /// Whether every row succeeded and top-5 Spearman never decreases.
    pub fn is_non_decreasing(&self) -> bool {
        let scores = self.scores();
        scores.iter().all(Option::is_some) && scores.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("{ABLATION_HEADER}\n");
        for r in &self.rows {
            match &r.outcome {
                Ok(s) => out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\tok\n",
                    r.n_generated, r.generated, s.top5_spearman, s.rfd_a, s.rfd_u
                )),
                Err(msg) => out.push_str(&format!(
                    "{}\t{}\tNA\tNA\tNA\tfailed: {}\n",
                    r.n_generated,
                    r.generated,
                    msg.split_whitespace().collect::<Vec<_>>().join(" ")
                )),
            }
        }
        out
    }
}

/// Generates a hybrid dataset for each count in `counts` from the same corpus
/// and trains a fresh encoder on each with identical settings.
#[allow(clippy::too_many_arguments)]
pub fn generated_count_ablation(
    corpus: &[String],
    source: &PatternSource,
    evalset: &StsEvalSet,
    counts: &[usize],
    generation: &GenerationConfig,
    client: &dyn LlmClient,
    train_cfg: &TrainConfig,
    encoder: &EncoderHandle,
) -> Result<AblationReport> {
    let mut rows = Vec::with_capacity(counts.len());
    for &n in counts {
        let gen_cfg = GenerationConfig {
            n_generated: n,
            ..generation.clone()
        };
        let out = generate_dataset(corpus, source, &gen_cfg, client)?;
        let generated = out.report.generated;
        let outcome = encoder
            .load(train_cfg.seed)
            .and_then(|enc| train(train_cfg, &out.dataset, enc, evalset))
            .and_then(|run| {
                let r = rfd(&run.trajectory)?;
                Ok(AblationScore {
                    top5_spearman: top_k_average(&run.trajectory, TOP_K)?,
                    rfd_a: r.rfd_a,
                    rfd_u: r.rfd_u,
                })
            })
            .map_err(|e| e.to_string());
        rows.push(AblationRow {
            n_generated: n,
            generated,
            outcome,
        });
    }
    Ok(AblationReport { rows })
}
