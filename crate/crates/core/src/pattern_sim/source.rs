use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_jsonl;

/// Which labelled dataset's notion of similarity is being imitated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatternKind {
    #[serde(rename = "STS")]
    Sts,
    #[serde(rename = "NLI")]
    Nli,
}

impl PatternKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PatternKind::Sts => "STS",
            PatternKind::Nli => "NLI",
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "STS" => Ok(PatternKind::Sts),
            "NLI" => Ok(PatternKind::Nli),
            _ => Err(Error::Config(format!(
                "unknown pattern kind `{s}` (expected STS or NLI)"
            ))),
        }
    }
}

/// Which of the generated sentences a prompt produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationKind {
    Positive,
    Intermediate,
    Negative,
}

impl GenerationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GenerationKind::Positive => "positive",
            GenerationKind::Intermediate => "intermediate",
            GenerationKind::Negative => "negative",
        }
    }
}

impl fmt::Display for GenerationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StsRecord {
    pub sentence1: String,
    pub sentence2: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliRecord {
    pub premise: String,
    pub entailment: String,
    pub contradiction: String,
}

/// An in-context example: the input sentence and the sentence the model
/// should learn to produce from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExamplePair {
    pub input: String,
    pub output: String,
}

/// Pool of labelled records from which prompt examples are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum PatternSource {
    Sts(Vec<StsRecord>),
    Nli(Vec<NliRecord>),
}

impl PatternSource {
    pub fn kind(&self) -> PatternKind {
        match self {
            PatternSource::Sts(_) => PatternKind::Sts,
            PatternSource::Nli(_) => PatternKind::Nli,
        }
    }

    pub fn read_jsonl(path: &Path, kind: PatternKind) -> Result<Self> {
        match kind {
            PatternKind::Sts => {
                let records: Vec<StsRecord> = read_jsonl(path)?;
                if let Some(bad) = records.iter().find(|r| !(0.0..=5.0).contains(&r.score)) {
                    return Err(Error::Data(format!(
                        "{}: STS score {} outside [0, 5]",
                        path.display(),
                        bad.score
                    )));
                }
                Ok(PatternSource::Sts(records))
            }
            PatternKind::Nli => Ok(PatternSource::Nli(read_jsonl(path)?)),
        }
    }
}

/// Number of in-context examples per prompt.
pub const EXAMPLES_PER_PROMPT: usize = 3;

/// Draws the three prompt examples for `kind`.
///
/// STS bands: positive `score > 4`, negative `score < 1`, intermediate
/// `1 ≤ score ≤ 4`. NLI: premise with its entailment (positive) or
/// contradiction (negative) hypothesis.
pub fn sample_pattern_examples(
    src: &PatternSource,
    kind: GenerationKind,
    rng_seed: u64,
) -> Result<[ExamplePair; EXAMPLES_PER_PROMPT]> {
    let (band, candidates): (&str, Vec<ExamplePair>) = match (src, kind) {
        (PatternSource::Sts(records), _) => {
            let (band, keep): (&str, fn(f64) -> bool) = match kind {
                GenerationKind::Positive => ("STS score > 4", |s| s > 4.0),
                GenerationKind::Negative => ("STS score < 1", |s| s < 1.0),
                GenerationKind::Intermediate => {
                    ("1 <= STS score <= 4", |s| (1.0..=4.0).contains(&s))
                }
            };
            let pairs = records
                .iter()
                .filter(|r| keep(r.score))
                .map(|r| ExamplePair {
                    input: r.sentence1.clone(),
                    output: r.sentence2.clone(),
                })
                .collect();
            (band, pairs)
        }
        (PatternSource::Nli(records), GenerationKind::Positive) => (
            "NLI entailment",
            records
                .iter()
                .map(|r| ExamplePair {
                    input: r.premise.clone(),
                    output: r.entailment.clone(),
                })
                .collect(),
        ),
        (PatternSource::Nli(records), GenerationKind::Negative) => (
            "NLI contradiction",
            records
                .iter()
                .map(|r| ExamplePair {
                    input: r.premise.clone(),
                    output: r.contradiction.clone(),
                })
                .collect(),
        ),
        (PatternSource::Nli(_), GenerationKind::Intermediate) => {
            return Err(Error::Unsupported(
                "NLI patterns have no intermediate sentences".into(),
            ))
        }
    };
    if candidates.len() < EXAMPLES_PER_PROMPT {
        return Err(Error::Data(format!(
            "pattern source has {} records in band `{band}`, need {EXAMPLES_PER_PROMPT}",
            candidates.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut picked = index::sample(&mut rng, candidates.len(), EXAMPLES_PER_PROMPT).into_vec();
    picked.sort_unstable();
    let mut it = picked.into_iter().map(|i| candidates[i].clone());
    Ok([
        it.next().expect("3 picked"),
        it.next().expect("3 picked"),
        it.next().expect("3 picked"),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sts(scores: &[f64]) -> PatternSource {
        PatternSource::Sts(
            scores
                .iter()
                .enumerate()
                .map(|(i, &score)| StsRecord {
                    sentence1: format!("left {i}"),
                    sentence2: format!("right {i}"),
                    score,
                })
                .collect(),
        )
    }

    #[test]
    fn sts_bands() {
        let src = sts(&[4.5, 4.2, 5.0, 4.8, 0.1, 0.5, 0.9, 2.0, 1.0, 4.0, 3.3]);
        let score_of = |p: &ExamplePair| {
            let PatternSource::Sts(r) = &src else {
                unreachable!()
            };
            r.iter().find(|r| r.sentence1 == p.input).unwrap().score
        };
        for seed in 0..10 {
            let pos = sample_pattern_examples(&src, GenerationKind::Positive, seed).unwrap();
            assert!(pos.iter().all(|p| score_of(p) > 4.0));
            let neg = sample_pattern_examples(&src, GenerationKind::Negative, seed).unwrap();
            assert!(neg.iter().all(|p| score_of(p) < 1.0));
            let mid = sample_pattern_examples(&src, GenerationKind::Intermediate, seed).unwrap();
            assert!(mid.iter().all(|p| (1.0..=4.0).contains(&score_of(p))));
        }
    }

    #[test]
    fn exactly_three_candidates_are_always_chosen() {
        let src = sts(&[0.1, 0.5, 0.9, 4.5, 4.6, 4.7, 2.0, 2.0, 2.0]);
        let first = sample_pattern_examples(&src, GenerationKind::Negative, 1).unwrap();
        for seed in 2..20 {
            assert_eq!(
                sample_pattern_examples(&src, GenerationKind::Negative, seed).unwrap(),
                first
            );
        }
    }

    #[test]
    fn too_few_candidates_name_the_band() {
        let src = sts(&[0.1, 0.5, 4.5, 4.6, 4.7]);
        match sample_pattern_examples(&src, GenerationKind::Negative, 0) {
            Err(Error::Data(msg)) => assert!(msg.contains("STS score < 1"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nli_has_no_intermediate() {
        let src = PatternSource::Nli(vec![]);
        assert!(matches!(
            sample_pattern_examples(&src, GenerationKind::Intermediate, 0),
            Err(Error::Unsupported(_))
        ));
    }
}
