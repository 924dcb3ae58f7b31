//! A small generated language for CPU-scale experiments.
//!
//! Sentences interleave "style" words (function words from the mock
//! generator's stopword list) with content words drawn from one topic. STS
//! gold scores depend on shared content only, so an encoder must learn to
//! ignore style to score well.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embeddings::{EncoderHandle, PoolingConfig, PoolingStrategy};
use crate::error::{Error, Result};
use crate::pattern_sim::mock::{NEGATIVE_VOCAB, STOPWORDS};
use crate::pattern_sim::{PatternSource, StsRecord};
use crate::seeds::derive_seed;
use crate::train_eval::{StsEvalSet, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldConfig {
    pub topics: usize,
    pub words_per_topic: usize,
    pub styles: usize,
    pub words_per_style: usize,
    pub content_per_sentence: usize,
    pub style_per_sentence: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            topics: 12,
            words_per_topic: 24,
            styles: 6,
            words_per_style: 6,
            content_per_sentence: 4,
            style_per_sentence: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    cfg: WorldConfig,
    topics: Vec<Vec<String>>,
    styles: Vec<Vec<&'static str>>,
}

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

fn pseudo_word<R: Rng>(rng: &mut R) -> String {
    let syllables = rng.gen_range(2..=3);
    (0..syllables)
        .map(|_| {
            format!(
                "{}{}",
                ONSETS.choose(rng).expect("non-empty"),
                VOWELS.choose(rng).expect("non-empty")
            )
        })
        .collect()
}

impl SyntheticWorld {
    pub fn new(cfg: WorldConfig, seed: u64) -> Result<Self> {
        if cfg.content_per_sentence == 0 || cfg.words_per_topic < 2 * cfg.content_per_sentence {
            return Err(Error::Config(
                "each topic needs at least twice as many words as a sentence uses".into(),
            ));
        }
        if cfg.words_per_style > STOPWORDS.len()
            || cfg.style_per_sentence > cfg.words_per_style
            || cfg.styles == 0
        {
            return Err(Error::Config("invalid style settings".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[b"world"]));
        let mut seen: std::collections::HashSet<String> = STOPWORDS
            .iter()
            .chain(NEGATIVE_VOCAB)
            .map(|w| w.to_string())
            .collect();
        let mut topics = Vec::with_capacity(cfg.topics);
        for _ in 0..cfg.topics {
            let mut words = Vec::with_capacity(cfg.words_per_topic);
            while words.len() < cfg.words_per_topic {
                let w = pseudo_word(&mut rng);
                if seen.insert(w.clone()) {
                    words.push(w);
                }
            }
            topics.push(words);
        }
        let styles = (0..cfg.styles)
            .map(|_| {
                index::sample(&mut rng, STOPWORDS.len(), cfg.words_per_style)
                    .into_iter()
                    .map(|i| STOPWORDS[i])
                    .collect()
            })
            .collect();
        Ok(SyntheticWorld {
            cfg,
            topics,
            styles,
        })
    }

    /// Interleaves the content words with words of a random style.
    fn render<R: Rng>(&self, content: &[String], rng: &mut R) -> String {
        let style = self.styles.choose(rng).expect("at least one style");
        let mut tokens: Vec<&str> = content.iter().map(String::as_str).collect();
        for _ in 0..self.cfg.style_per_sentence {
            let at = rng.gen_range(0..=tokens.len());
            tokens.insert(at, style.choose(rng).expect("non-empty"));
        }
        tokens.join(" ")
    }

    fn content<R: Rng>(&self, topic: usize, n: usize, rng: &mut R) -> Vec<String> {
        index::sample(rng, self.topics[topic].len(), n)
            .into_iter()
            .map(|i| self.topics[topic][i].clone())
            .collect()
    }

    pub fn sentence<R: Rng>(&self, rng: &mut R) -> String {
        let topic = rng.gen_range(0..self.topics.len());
        let content = self.content(topic, self.cfg.content_per_sentence, rng);
        self.render(&content, rng)
    }

    pub fn corpus(&self, n: usize, seed: u64) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[b"corpus"]));
        (0..n).map(|_| self.sentence(&mut rng)).collect()
    }

    /// A pair sharing `shared` content words, scored `5·shared/c` for `c`
    /// content words per sentence. Both sentences take their content from
    /// one topic; styles are drawn independently.
    fn scored_pair<R: Rng>(&self, shared: usize, rng: &mut R) -> StsRecord {
        let c = self.cfg.content_per_sentence;
        let topic = rng.gen_range(0..self.topics.len());
        let words = self.content(topic, 2 * c - shared, rng);
        let first = words[..c].to_vec();
        let mut second: Vec<String> = words[..shared].to_vec();
        second.extend_from_slice(&words[c..]);
        second.shuffle(rng);
        StsRecord {
            sentence1: self.render(&first, rng),
            sentence2: self.render(&second, rng),
            score: 5.0 * shared as f64 / c as f64,
        }
    }

    /// Scored pairs with the shared-word count cycling through `0..=c`.
    pub fn sts_records(&self, n: usize, seed: u64) -> Vec<StsRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[b"sts"]));
        let c = self.cfg.content_per_sentence;
        (0..n)
            .map(|i| self.scored_pair(i % (c + 1), &mut rng))
            .collect()
    }

    pub fn sts_eval(&self, n: usize, seed: u64) -> Result<StsEvalSet> {
        StsEvalSet::new(self.sts_records(n, seed))
    }

    /// An STS pattern source covering every score band.
    pub fn pattern_source(&self, seed: u64) -> PatternSource {
        PatternSource::Sts(self.sts_records(
            5 * (self.cfg.content_per_sentence + 1),
            derive_seed(seed, &[b"pattern"]),
        ))
    }
}

pub const DESK_CORPUS_SIZE: usize = 300;
pub const DESK_EVAL_PAIRS: usize = 300;

/// Corpus, evaluation pairs and pattern source drawn from one world.
#[derive(Debug, Clone)]
pub struct DeskData {
    pub world: SyntheticWorld,
    pub corpus: Vec<String>,
    pub eval: StsEvalSet,
    pub source: PatternSource,
}

impl DeskData {
    pub fn new(seed: u64) -> Result<Self> {
        let world = SyntheticWorld::new(WorldConfig::default(), seed)?;
        Ok(DeskData {
            corpus: world.corpus(DESK_CORPUS_SIZE, seed),
            eval: world.sts_eval(DESK_EVAL_PAIRS, seed)?,
            source: world.pattern_source(seed),
            world,
        })
    }
}

/// Mean-pooled toy encoder used for the CPU-scale experiments.
pub fn desk_encoder() -> EncoderHandle {
    EncoderHandle {
        pooling: PoolingConfig::new(PoolingStrategy::MeanTokens),
        ..EncoderHandle::default()
    }
}

/// Training settings for the CPU-scale experiments: the toy encoder needs a
/// far larger learning rate and more passes than a pretrained backbone.
pub fn desk_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 3e-3,
        batch_size: 32,
        epochs: 10,
        record_interval: 5,
        seed,
        ..TrainConfig::default()
    }
}
