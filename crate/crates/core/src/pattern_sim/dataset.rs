use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::source::PatternKind;
use crate::error::{Error, Result};
use crate::io::{read_jsonl, to_jsonl, write_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    LlmSts,
    LlmNli,
    Supervised,
    /// A bare corpus sentence; its positive is formed by augmentation at
    /// training time.
    CorpusOnly,
}

impl Origin {
    pub fn is_generated(self) -> bool {
        matches!(self, Origin::LlmSts | Origin::LlmNli)
    }

    pub fn for_pattern(pattern: PatternKind) -> Self {
        match pattern {
            PatternKind::Sts => Origin::LlmSts,
            PatternKind::Nli => Origin::LlmNli,
        }
    }
}

/// Where a generated record came from. Kept in memory and in the generation
/// report; not part of the dataset file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Provenance {
    pub model_id: String,
    pub prompt_hashes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadrupleExample {
    pub anchor: String,
    pub positive: Option<String>,
    pub intermediate: Option<String>,
    pub negative: Option<String>,
    pub origin: Origin,
    #[serde(skip)]
    pub provenance: Option<Provenance>,
}

impl QuadrupleExample {
    pub fn corpus_only(anchor: impl Into<String>) -> Self {
        QuadrupleExample {
            anchor: anchor.into(),
            positive: None,
            intermediate: None,
            negative: None,
            origin: Origin::CorpusOnly,
            provenance: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Data(format!("{msg}: {:?}", self.anchor)));
        match self.origin {
            Origin::CorpusOnly => {
                if self.positive.is_some() || self.intermediate.is_some() || self.negative.is_some()
                {
                    return fail("corpus_only record carries generated sentences");
                }
            }
            Origin::LlmNli => {
                if self.intermediate.is_some() {
                    return fail("llm_nli record has an intermediate sentence");
                }
                if self.positive.is_none() || self.negative.is_none() {
                    return fail("llm_nli record lacks a positive or negative");
                }
            }
            Origin::LlmSts => {
                if self.positive.is_none() || self.negative.is_none() {
                    return fail("llm_sts record lacks a positive or negative");
                }
            }
            Origin::Supervised => {
                if self.positive.is_none() {
                    return fail("supervised record lacks a positive");
                }
            }
        }
        Ok(())
    }

    /// Whether the record supports the hierarchical triplet loss.
    pub fn is_hierarchical(&self) -> bool {
        self.origin.is_generated() && self.intermediate.is_some() && self.negative.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataDomain {
    Wiki,
    #[serde(rename = "NLI")]
    NliPremises,
}

impl fmt::Display for DataDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataDomain::Wiki => "Wiki",
            DataDomain::NliPremises => "NLI",
        })
    }
}

impl FromStr for DataDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wiki" => Ok(DataDomain::Wiki),
            "nli" | "nli-premises" => Ok(DataDomain::NliPremises),
            _ => Err(Error::Config(format!(
                "unknown data domain `{s}` (expected Wiki or NLI)"
            ))),
        }
    }
}

/// Generated quadruples plus the untouched remainder of the corpus sample.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridDataset {
    pub examples: Vec<QuadrupleExample>,
    pub n_generated: usize,
    pub corpus_domain: DataDomain,
    pub pattern_kind: PatternKind,
}

impl HybridDataset {
    /// `[Data-Domain].[Similarity-Pattern]`, e.g. `Wiki.STS`.
    pub fn name(&self) -> String {
        format!("{}.{}", self.corpus_domain, self.pattern_kind)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn from_examples(
        examples: Vec<QuadrupleExample>,
        corpus_domain: DataDomain,
        pattern_kind: PatternKind,
    ) -> Result<Self> {
        for ex in &examples {
            ex.validate()?;
        }
        let n_generated = examples.iter().filter(|e| e.origin.is_generated()).count();
        Ok(HybridDataset {
            examples,
            n_generated,
            corpus_domain,
            pattern_kind,
        })
    }

    pub fn to_jsonl(&self) -> Result<String> {
        to_jsonl(&self.examples)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_jsonl()?.as_bytes())
    }

    /// Reads a dataset file. The pattern kind is taken from the generated
    /// records (STS when there are none).
    pub fn read_jsonl(path: &Path, corpus_domain: DataDomain) -> Result<Self> {
        let examples: Vec<QuadrupleExample> = read_jsonl(path)?;
        let pattern = examples
            .iter()
            .find_map(|e| match e.origin {
                Origin::LlmNli => Some(PatternKind::Nli),
                Origin::LlmSts => Some(PatternKind::Sts),
                _ => None,
            })
            .unwrap_or(PatternKind::Sts);
        Self::from_examples(examples, corpus_domain, pattern)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CorpusLine {
    text: String,
}

/// Reads a corpus file of `{"text": ...}` lines.
pub fn read_corpus(path: &Path) -> Result<Vec<String>> {
    Ok(read_jsonl::<CorpusLine>(path)?
        .into_iter()
        .map(|l| l.text)
        .collect())
}

pub fn corpus_to_jsonl(sentences: &[String]) -> Result<String> {
    let lines: Vec<CorpusLine> = sentences
        .iter()
        .map(|s| CorpusLine { text: s.clone() })
        .collect();
    to_jsonl(&lines)
}

/// Merges generated quadruples with the corpus sentences that were not used
/// as anchors. Records follow corpus order; each generated quadruple takes
/// the place of its anchor sentence (the first unclaimed occurrence when the
/// corpus repeats a sentence).
pub fn assemble_hybrid(
    corpus: &[String],
    generated: Vec<QuadrupleExample>,
    n_generated: usize,
    corpus_domain: DataDomain,
    pattern_kind: PatternKind,
) -> Result<HybridDataset> {
    if generated.len() != n_generated {
        return Err(Error::Consistency(format!(
            "expected {n_generated} generated records, got {}",
            generated.len()
        )));
    }
    let mut available: HashMap<&str, usize> = HashMap::new();
    for s in corpus {
        *available.entry(s.as_str()).or_default() += 1;
    }
    let mut pending: HashMap<String, VecDeque<QuadrupleExample>> = HashMap::new();
    for g in generated {
        g.validate()?;
        if !g.origin.is_generated() {
            return Err(Error::Consistency(format!(
                "record for anchor {:?} is not a generated record",
                g.anchor
            )));
        }
        match available.get_mut(g.anchor.as_str()) {
            Some(n) if *n > 0 => *n -= 1,
            _ => {
                return Err(Error::Consistency(format!(
                    "generated anchor {:?} is not in the corpus sample",
                    g.anchor
                )))
            }
        }
        pending.entry(g.anchor.clone()).or_default().push_back(g);
    }
    let examples = corpus
        .iter()
        .map(|s| {
            pending
                .get_mut(s)
                .and_then(VecDeque::pop_front)
                .unwrap_or_else(|| QuadrupleExample::corpus_only(s.clone()))
        })
        .collect();
    Ok(HybridDataset {
        examples,
        n_generated,
        corpus_domain,
        pattern_kind,
    })
}
