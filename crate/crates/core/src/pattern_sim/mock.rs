//! Offline stand-in for the LLM: deterministic, seeded, rule-based rewrites.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::client::{ChatRequest, ClientError, LlmClient};
use super::source::GenerationKind;
use crate::error::{Error, Result};
use crate::seeds::derive_seed;

/// Function words; every other token counts as content.
pub const STOPWORDS: &[&str] = &[
    "a", "an", "the", "of", "in", "on", "at", "to", "for", "with", "by", "from", "and", "or",
    "but", "is", "are", "was", "were", "be", "been", "it", "its", "this", "that", "these", "those",
    "as", "into", "over", "under", "after", "before", "while", "his", "her", "their", "our", "has",
    "have", "had", "not", "no", "some", "all", "very", "then", "there",
];

/// Replacement words for negatives.
pub const NEGATIVE_VOCAB: &[&str] = &[
    "anchor", "basket", "candle", "desert", "engine", "falcon", "glacier", "harbor", "island",
    "jacket", "kettle", "ladder", "marble", "needle", "orchard", "pebble", "quarry", "ribbon",
    "saddle", "tunnel", "umbrella", "valley", "wagon", "yarn", "zipper", "bridge", "canyon",
    "dolphin", "ember", "fossil", "garden", "helmet", "igloo", "jungle", "kernel", "lantern",
    "meadow", "nickel", "oyster", "parrot", "quiver", "rocket", "shovel", "thimble", "urchin",
    "violin", "walrus", "yacht", "zephyr", "barrel", "cobalt", "drizzle", "fabric", "granite",
    "hammock", "ivory", "juniper", "kayak", "lobster", "mosaic", "nutmeg", "obelisk", "pigeon",
    "radish",
];

fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(&token.to_lowercase().as_str())
}

/// Rule-based rewrite of `anchor`:
///
/// * positive: a seeded reordering of the tokens (same multiset);
/// * intermediate: the anchor minus its last `max(1, ⌊0.3·n⌋)` tokens;
/// * negative: content tokens replaced by words from [`NEGATIVE_VOCAB`] that
///   do not occur in the anchor (all tokens when there is no content token).
pub fn mock_generate(anchor: &str, kind: GenerationKind, rng_seed: u64) -> Result<String> {
    let tokens: Vec<&str> = anchor.split_whitespace().collect();
    let min = match kind {
        GenerationKind::Positive => 1,
        GenerationKind::Intermediate | GenerationKind::Negative => 2,
    };
    if tokens.len() < min {
        return Err(Error::Argument(format!(
            "mock {kind} generation needs at least {min} tokens, got {}",
            tokens.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let out = match kind {
        GenerationKind::Positive => {
            let mut shuffled = tokens.clone();
            shuffled.shuffle(&mut rng);
            if shuffled == tokens {
                shuffled.rotate_left(1);
            }
            shuffled
        }
        GenerationKind::Intermediate => {
            let n = tokens.len();
            let drop = ((3 * n) / 10).max(1);
            tokens[..n - drop].to_vec()
        }
        GenerationKind::Negative => {
            let present: HashSet<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
            let vocab: Vec<&str> = NEGATIVE_VOCAB
                .iter()
                .copied()
                .filter(|w| !present.contains(*w))
                .collect();
            let any_content = tokens.iter().any(|t| !is_stopword(t));
            tokens
                .iter()
                .map(|&t| {
                    if !any_content || !is_stopword(t) {
                        vocab[rng.gen_range(0..vocab.len())]
                    } else {
                        t
                    }
                })
                .collect()
        }
    };
    Ok(out.join(" "))
}

/// [`LlmClient`] backed by [`mock_generate`]. The rewrite seed depends on the
/// run seed, the input text, the generation kind and the attempt number.
#[derive(Debug, Clone)]
pub struct MockClient {
    seed: u64,
}

impl MockClient {
    pub fn new(seed: u64) -> Self {
        MockClient { seed }
    }
}

impl LlmClient for MockClient {
    fn model_id(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &ChatRequest<'_>) -> std::result::Result<String, ClientError> {
        let seed = derive_seed(
            self.seed,
            &[
                request.user.as_bytes(),
                request.kind.as_str().as_bytes(),
                &request.attempt.to_le_bytes(),
            ],
        );
        mock_generate(request.user, request.kind, seed)
            .map_err(|e| ClientError::Rejected(e.to_string()))
    }

    fn is_offline(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn multiset(s: &str) -> Vec<&str> {
        let mut v: Vec<&str> = s.split_whitespace().collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn intermediate_drops_trailing_tokens() {
        assert_eq!(
            mock_generate("a b c d", GenerationKind::Intermediate, 0).unwrap(),
            "a b c"
        );
        let ten = "w0 w1 w2 w3 w4 w5 w6 w7 w8 w9";
        assert_eq!(
            mock_generate(ten, GenerationKind::Intermediate, 0).unwrap(),
            "w0 w1 w2 w3 w4 w5 w6"
        );
    }

    #[test]
    fn positive_preserves_bag_and_changes_order() {
        let anchor = "the cat sat on the warm mat";
        for seed in 0..20 {
            let out = mock_generate(anchor, GenerationKind::Positive, seed).unwrap();
            assert_eq!(multiset(&out), multiset(anchor));
            assert_ne!(out, anchor);
        }
    }

    #[test]
    fn negative_replaces_content_only() {
        let anchor = "the cat sat on the mat";
        let out = mock_generate(anchor, GenerationKind::Negative, 5).unwrap();
        let toks: Vec<&str> = out.split_whitespace().collect();
        assert_eq!(toks.len(), 6);
        assert_eq!((toks[0], toks[3], toks[4]), ("the", "on", "the"));
        for i in [1, 2, 5] {
            assert!(NEGATIVE_VOCAB.contains(&toks[i]));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        for kind in [
            GenerationKind::Positive,
            GenerationKind::Intermediate,
            GenerationKind::Negative,
        ] {
            let a = mock_generate("one two three four five", kind, 77).unwrap();
            let b = mock_generate("one two three four five", kind, 77).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn short_anchors_are_rejected() {
        assert!(mock_generate("solo", GenerationKind::Intermediate, 0).is_err());
        assert!(mock_generate("solo", GenerationKind::Negative, 0).is_err());
        assert!(mock_generate("", GenerationKind::Positive, 0).is_err());
    }
}
