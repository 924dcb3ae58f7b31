//! Drives the LLM over sampled corpus anchors and assembles the hybrid
//! dataset.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::client::{complete_with_retry, ChatRequest, ClientError, LlmClient, RetryPolicy};
use super::dataset::{
    assemble_hybrid, DataDomain, HybridDataset, Origin, Provenance, QuadrupleExample,
};
use super::prompts::{PromptBundle, PromptSet};
use super::source::{sample_pattern_examples, GenerationKind, PatternKind, PatternSource};
use crate::error::{Error, Result};
use crate::seeds::derive_seed;

const LABELS: &[&str] = &[
    "hypothesis:",
    "sentence 2:",
    "sentence:",
    "new sentence:",
    "revised sentence:",
    "output:",
];
const QUOTES: &[char] = &['"', '\'', '“', '”', '‘', '’', '`'];

/// Strips a leading label, surrounding quotes and surrounding whitespace.
pub fn sanitize_output(raw: &str) -> String {
    let mut s = raw.trim();
    loop {
        let before = s;
        let lower = s.to_lowercase();
        if let Some(label) = LABELS.iter().find(|l| lower.starts_with(*l)) {
            s = s[label.len()..].trim_start();
        }
        if s.len() >= 2 && s.starts_with(QUOTES) && s.ends_with(QUOTES) {
            let first = s.chars().next().expect("non-empty").len_utf8();
            let last = s.chars().next_back().expect("non-empty").len_utf8();
            s = s[first..s.len() - last].trim();
        }
        if s == before {
            return s.to_string();
        }
    }
}

/// Samples the fixed prompt examples for one simulation run.
pub fn build_prompt_set(
    source: &PatternSource,
    pattern: PatternKind,
    hierarchical: bool,
    seed: u64,
) -> Result<PromptSet> {
    if hierarchical && pattern == PatternKind::Nli {
        return Err(Error::Unsupported(
            "hierarchical generation is defined for STS patterns only".into(),
        ));
    }
    if source.kind() != pattern {
        return Err(Error::Config(format!(
            "pattern source holds {} records but pattern kind is {pattern}",
            source.kind()
        )));
    }
    let bundle = |kind: GenerationKind| -> Result<PromptBundle> {
        let examples = sample_pattern_examples(
            source,
            kind,
            derive_seed(seed, &[b"examples", kind.as_str().as_bytes()]),
        )?;
        PromptBundle::new(kind, pattern, examples)
    };
    Ok(PromptSet {
        pattern,
        positive: bundle(GenerationKind::Positive)?,
        intermediate: hierarchical
            .then(|| bundle(GenerationKind::Intermediate))
            .transpose()?,
        negative: bundle(GenerationKind::Negative)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuadrupleOutcome {
    Generated(QuadrupleExample),
    /// The model produced no usable sentence even after one retry.
    Flagged {
        reason: String,
    },
}

/// One generation with sanitation and a single retry for unusable output.
/// `Ok(None)` means the output was unusable twice.
fn generate_one(
    client: &dyn LlmClient,
    bundle: &PromptBundle,
    input: &str,
    anchor: &str,
    index: usize,
    retry: &RetryPolicy,
) -> Result<Option<String>> {
    for attempt in 0..2 {
        let request = ChatRequest {
            system: &bundle.role_instructions,
            user: input,
            kind: bundle.generation_kind,
            attempt,
        };
        match complete_with_retry(client, &request, retry) {
            Ok(raw) => {
                let out = sanitize_output(&raw);
                if !out.is_empty() && out != anchor && out != input {
                    return Ok(Some(out));
                }
            }
            Err(ClientError::Rejected(_)) | Err(ClientError::InvalidResponse(_)) => {}
            Err(ClientError::Auth(msg)) => return Err(Error::Environment(msg)),
            Err(ClientError::Transport(msg)) => {
                return Err(Error::Generation {
                    index,
                    message: msg,
                })
            }
        }
    }
    Ok(None)
}

/// Generates the positive, optional intermediate and negative sentences for
/// `anchor`. The positive and intermediate rewrite the anchor; the negative
/// rewrites the positive.
pub fn generate_quadruple(
    anchor: &str,
    index: usize,
    prompts: &PromptSet,
    client: &dyn LlmClient,
    hierarchical: bool,
    retry: &RetryPolicy,
) -> Result<QuadrupleOutcome> {
    if hierarchical && prompts.intermediate.is_none() {
        return Err(Error::Unsupported(format!(
            "hierarchical generation requested without an intermediate prompt ({} pattern)",
            prompts.pattern
        )));
    }
    let flagged = |what: &str| {
        Ok(QuadrupleOutcome::Flagged {
            reason: format!("no usable {what} sentence"),
        })
    };
    let Some(positive) = generate_one(client, &prompts.positive, anchor, anchor, index, retry)?
    else {
        return flagged("positive");
    };
    let intermediate = match (&prompts.intermediate, hierarchical) {
        (Some(bundle), true) => match generate_one(client, bundle, anchor, anchor, index, retry)? {
            Some(m) => Some(m),
            None => return flagged("intermediate"),
        },
        _ => None,
    };
    let Some(negative) = generate_one(client, &prompts.negative, &positive, anchor, index, retry)?
    else {
        return flagged("negative");
    };
    Ok(QuadrupleOutcome::Generated(QuadrupleExample {
        anchor: anchor.to_string(),
        positive: Some(positive),
        intermediate,
        negative: Some(negative),
        origin: Origin::for_pattern(prompts.pattern),
        provenance: Some(Provenance {
            model_id: client.model_id().to_string(),
            prompt_hashes: prompts.bundles().map(PromptBundle::hash).collect(),
        }),
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub pattern: PatternKind,
    pub hierarchical: bool,
    pub n_generated: usize,
    pub domain: DataDomain,
    pub seed: u64,
    /// Maximum in-flight requests for remote clients.
    pub concurrency: usize,
    pub retry: RetryPolicy,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            pattern: PatternKind::Sts,
            hierarchical: true,
            n_generated: 20_000,
            domain: DataDomain::Wiki,
            seed: 0,
            concurrency: 8,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlaggedRecord {
    pub index: usize,
    pub anchor: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptSummary {
    pub kind: GenerationKind,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationReport {
    pub dataset: String,
    pub model_id: String,
    pub corpus_size: usize,
    pub requested: usize,
    pub generated: usize,
    pub corpus_only: usize,
    pub flagged: Vec<FlaggedRecord>,
    pub prompts: Vec<PromptSummary>,
}

#[derive(Debug, Clone)]
pub struct GenerationOutput {
    pub dataset: HybridDataset,
    pub report: GenerationReport,
    pub prompts: PromptSet,
}

/// Samples `n_generated` anchors from `corpus`, generates their quadruples and
/// merges them with the rest of the corpus. Flagged anchors stay in the
/// dataset as plain corpus sentences.
pub fn generate_dataset(
    corpus: &[String],
    source: &PatternSource,
    cfg: &GenerationConfig,
    client: &dyn LlmClient,
) -> Result<GenerationOutput> {
    if cfg.n_generated > corpus.len() {
        return Err(Error::Argument(format!(
            "cannot generate {} records from a corpus of {}",
            cfg.n_generated,
            corpus.len()
        )));
    }
    let prompts = build_prompt_set(source, cfg.pattern, cfg.hierarchical, cfg.seed)?;

    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
        cfg.seed,
        &[b"anchors"],
    )));
    let anchors: Vec<&str> = order[..cfg.n_generated]
        .iter()
        .map(|&i| corpus[i].as_str())
        .collect();

    let run = |i: usize| {
        generate_quadruple(
            anchors[i],
            i,
            &prompts,
            client,
            cfg.hierarchical,
            &cfg.retry,
        )
    };
    let outcomes: Vec<Result<QuadrupleOutcome>> = if client.is_offline() || cfg.concurrency <= 1 {
        (0..anchors.len()).map(run).collect()
    } else {
        let slots: Mutex<Vec<Option<Result<QuadrupleOutcome>>>> =
            Mutex::new((0..anchors.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..cfg.concurrency.min(anchors.len().max(1)) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= anchors.len() {
                        break;
                    }
                    let out = run(i);
                    slots.lock().expect("no poisoned workers")[i] = Some(out);
                });
            }
        });
        slots
            .into_inner()
            .expect("no poisoned workers")
            .into_iter()
            .map(|o| o.expect("every slot filled"))
            .collect()
    };

    let mut generated = Vec::new();
    let mut flagged = Vec::new();
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome? {
            QuadrupleOutcome::Generated(q) => generated.push(q),
            QuadrupleOutcome::Flagged { reason } => flagged.push(FlaggedRecord {
                index: i,
                anchor: anchors[i].to_string(),
                reason,
            }),
        }
    }

    let n = generated.len();
    let dataset = assemble_hybrid(corpus, generated, n, cfg.domain, cfg.pattern)?;
    let report = GenerationReport {
        dataset: dataset.name(),
        model_id: client.model_id().to_string(),
        corpus_size: corpus.len(),
        requested: cfg.n_generated,
        generated: n,
        corpus_only: dataset.len() - n,
        flagged,
        prompts: prompts
            .bundles()
            .map(|b| PromptSummary {
                kind: b.generation_kind,
                sha256: b.hash(),
            })
            .collect(),
    };
    Ok(GenerationOutput {
        dataset,
        report,
        prompts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern_sim::mock::MockClient;
    use crate::pattern_sim::source::{NliRecord, StsRecord};

    pub(crate) fn sts_source() -> PatternSource {
        let mut records = Vec::new();
        for (i, score) in [4.6, 4.2, 5.0, 4.8, 0.2, 0.5, 0.0, 0.8, 2.0, 3.1, 1.4, 3.9]
            .iter()
            .enumerate()
        {
            records.push(StsRecord {
                sentence1: format!("first sentence {i}"),
                sentence2: format!("second sentence {i}"),
                score: *score,
            });
        }
        PatternSource::Sts(records)
    }

    fn nli_source() -> PatternSource {
        PatternSource::Nli(
            (0..4)
                .map(|i| NliRecord {
                    premise: format!("premise {i}"),
                    entailment: format!("entailed {i}"),
                    contradiction: format!("contradicted {i}"),
                })
                .collect(),
        )
    }

    #[test]
    fn sanitizes_labels_and_quotes() {
        assert_eq!(
            sanitize_output("  Hypothesis: \"A dog is outside.\"  "),
            "A dog is outside."
        );
        assert_eq!(sanitize_output("Sentence 2: 'x y'"), "x y");
        assert_eq!(sanitize_output("“quoted”"), "quoted");
        assert_eq!(sanitize_output("plain text"), "plain text");
        assert_eq!(sanitize_output("\"\""), "");
    }

    #[test]
    fn sts_hierarchical_quadruple_is_complete_and_distinct() {
        let prompts = build_prompt_set(&sts_source(), PatternKind::Sts, true, 3).unwrap();
        let client = MockClient::new(11);
        let out = generate_quadruple(
            "the old man walked slowly to the market",
            0,
            &prompts,
            &client,
            true,
            &RetryPolicy::default(),
        )
        .unwrap();
        let QuadrupleOutcome::Generated(q) = out else {
            panic!("flagged: {out:?}")
        };
        let fields = [
            &q.anchor,
            q.positive.as_ref().unwrap(),
            q.intermediate.as_ref().unwrap(),
            q.negative.as_ref().unwrap(),
        ];
        for (i, a) in fields.iter().enumerate() {
            assert!(!a.is_empty());
            for b in &fields[i + 1..] {
                assert_ne!(a, b);
            }
        }
        assert_eq!(q.origin, Origin::LlmSts);
        assert_eq!(q.provenance.as_ref().unwrap().prompt_hashes.len(), 3);
    }

    #[test]
    fn nli_quadruple_has_no_intermediate() {
        let prompts = build_prompt_set(&nli_source(), PatternKind::Nli, false, 3).unwrap();
        let out = generate_quadruple(
            "a child plays in the park",
            0,
            &prompts,
            &MockClient::new(1),
            false,
            &RetryPolicy::default(),
        )
        .unwrap();
        let QuadrupleOutcome::Generated(q) = out else {
            panic!()
        };
        assert!(q.intermediate.is_none());
        assert_eq!(q.origin, Origin::LlmNli);
        assert!(q.validate().is_ok());
    }

    #[test]
    fn nli_hierarchical_is_unsupported() {
        assert!(matches!(
            build_prompt_set(&nli_source(), PatternKind::Nli, true, 0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn mock_generation_is_deterministic() {
        let prompts = build_prompt_set(&sts_source(), PatternKind::Sts, true, 3).unwrap();
        let gen = || {
            generate_quadruple(
                "one two three four five six",
                4,
                &prompts,
                &MockClient::new(5),
                true,
                &RetryPolicy::default(),
            )
            .unwrap()
        };
        assert_eq!(gen(), gen());
    }

    #[test]
    fn single_token_anchors_are_flagged() {
        let prompts = build_prompt_set(&sts_source(), PatternKind::Sts, true, 3).unwrap();
        let out = generate_quadruple(
            "alone",
            0,
            &prompts,
            &MockClient::new(5),
            true,
            &RetryPolicy::default(),
        )
        .unwrap();
        assert!(matches!(out, QuadrupleOutcome::Flagged { .. }));
    }

    struct Broken;

    impl LlmClient for Broken {
        fn model_id(&self) -> &str {
            "broken"
        }

        fn complete(&self, _: &ChatRequest<'_>) -> std::result::Result<String, ClientError> {
            Err(ClientError::Transport("connection refused".into()))
        }
    }

    #[test]
    fn transport_failure_names_anchor_index() {
        let corpus: Vec<String> = (0..5).map(|i| format!("w{i} x y z")).collect();
        let cfg = GenerationConfig {
            n_generated: 2,
            concurrency: 2,
            retry: RetryPolicy {
                max_attempts: 2,
                base_delay: std::time::Duration::from_millis(1),
            },
            ..GenerationConfig::default()
        };
        match generate_dataset(&corpus, &sts_source(), &cfg, &Broken) {
            Err(Error::Generation { index, .. }) => assert_eq!(index, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dataset_generation_counts() {
        let corpus: Vec<String> = (0..100)
            .map(|i| format!("token{i} alpha beta gamma delta"))
            .collect();
        let cfg = GenerationConfig {
            n_generated: 20,
            seed: 9,
            ..GenerationConfig::default()
        };
        let out = generate_dataset(&corpus, &sts_source(), &cfg, &MockClient::new(9)).unwrap();
        assert_eq!(out.dataset.len(), 100);
        assert_eq!(out.dataset.n_generated, 20);
        assert_eq!(out.report.generated, 20);
        assert_eq!(out.report.corpus_only, 80);
        assert!(out.report.flagged.is_empty());
        assert_eq!(out.report.prompts.len(), 3);
    }
}
