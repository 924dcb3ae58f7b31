//! Sentence embeddings on the unit hypersphere, pooling configuration and the
//! encoder abstraction shared by every loss and metric in the crate.

mod toy;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use toy::{ForwardCache, ToyEncoder, ToyParams};

/// Maximum allowed deviation of `‖v‖₂` from 1 for a vector to count as unit-norm.
pub const NORM_TOLERANCE: f64 = 1e-6;

pub const SENTENCE_PLACEHOLDER: &str = "{s}";
pub const MASK_PLACEHOLDER: &str = "{mask}";

/// Prompt template for mask pooling, `This sentence: "{s}" means {mask}`.
pub const DEFAULT_PROMPT_TEMPLATE: &str = "This sentence: \"{s}\" means {mask}";

/// The only backbone this build can instantiate.
pub const TOY_BACKBONE: &str = "toy";

/// A sentence embedding. Vectors produced by [`encode`] with normalization on
/// are unit-norm; the loss and metric APIs check this at their boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Self {
        Embedding(values)
    }

    /// Scales `values` to unit length. Fails for the zero vector.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self> {
        let norm = l2_norm(&values);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Argument(format!(
                "cannot normalize a vector with norm {norm}"
            )));
        }
        values.iter_mut().for_each(|v| *v /= norm);
        Ok(Embedding(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.0)
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() < NORM_TOLERANCE
    }
}

impl std::ops::Neg for &Embedding {
    type Output = Embedding;

    fn neg(self) -> Embedding {
        Embedding(self.0.iter().map(|v| -v).collect())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Cosine similarity of two unit embeddings, i.e. their inner product.
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Argument(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(dot(a.as_slice(), b.as_slice()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingStrategy {
    /// Hidden state of the first token (the `[CLS]` convention).
    #[default]
    FirstToken,
    MeanTokens,
    /// Hidden state of the mask token after wrapping the sentence in a prompt.
    PromptMask,
}

impl PoolingStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolingStrategy::FirstToken => "first_token",
            PoolingStrategy::MeanTokens => "mean_tokens",
            PoolingStrategy::PromptMask => "prompt_mask",
        }
    }
}

impl fmt::Display for PoolingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoolingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first_token" => Ok(PoolingStrategy::FirstToken),
            "mean_tokens" => Ok(PoolingStrategy::MeanTokens),
            "prompt_mask" => Ok(PoolingStrategy::PromptMask),
            other => Err(Error::Config(format!("unknown pooling strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PoolingConfig {
    pub strategy: PoolingStrategy,
    pub template: Option<String>,
}

impl PoolingConfig {
    pub fn new(strategy: PoolingStrategy) -> Self {
        let template =
            (strategy == PoolingStrategy::PromptMask).then(|| DEFAULT_PROMPT_TEMPLATE.to_string());
        PoolingConfig { strategy, template }
    }

    pub fn prompt_mask(template: impl Into<String>) -> Result<Self> {
        let template = template.into();
        TemplateParts::parse(&template)?;
        Ok(PoolingConfig {
            strategy: PoolingStrategy::PromptMask,
            template: Some(template),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match (self.strategy, &self.template) {
            (PoolingStrategy::PromptMask, None) => Err(Error::Config(
                "prompt_mask pooling requires a template".into(),
            )),
            (PoolingStrategy::PromptMask, Some(t)) => TemplateParts::parse(t).map(|_| ()),
            _ => Ok(()),
        }
    }
}

/// A prompt template split around its sentence placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateParts<'a> {
    pub before: &'a str,
    pub after: &'a str,
}

impl<'a> TemplateParts<'a> {
    pub fn parse(template: &'a str) -> Result<Self> {
        for placeholder in [SENTENCE_PLACEHOLDER, MASK_PLACEHOLDER] {
            let count = template.matches(placeholder).count();
            if count != 1 {
                return Err(Error::Config(format!(
                    "template must contain `{placeholder}` exactly once, found {count}: {template:?}"
                )));
            }
        }
        let (before, after) = template
            .split_once(SENTENCE_PLACEHOLDER)
            .expect("placeholder counted above");
        Ok(TemplateParts { before, after })
    }
}

/// Substitutes `sentence` into `template`; the mask placeholder is kept verbatim.
pub fn wrap_with_template(sentence: &str, template: &str) -> Result<String> {
    let parts = TemplateParts::parse(template)?;
    Ok(format!("{}{}{}", parts.before, sentence, parts.after))
}

/// Identifies a sentence encoder: which backbone, how token states are pooled
/// and the output dimension. The toy backbone additionally reads its table
/// size, hidden width and dropout rate from here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderHandle {
    pub backbone: String,
    pub pooling: PoolingConfig,
    pub dim: usize,
    pub hidden: usize,
    pub buckets: usize,
    pub dropout: f64,
}

impl Default for EncoderHandle {
    fn default() -> Self {
        EncoderHandle {
            backbone: TOY_BACKBONE.to_string(),
            pooling: PoolingConfig::default(),
            dim: 32,
            hidden: 32,
            buckets: 2048,
            dropout: 0.1,
        }
    }
}

impl EncoderHandle {
    pub fn validate(&self) -> Result<()> {
        self.pooling.validate()?;
        if self.dim == 0 || self.hidden == 0 || self.buckets == 0 {
            return Err(Error::Config(
                "encoder dim, hidden and buckets must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }

    /// Instantiates the backbone with parameters drawn from `seed`.
    pub fn load(&self, seed: u64) -> Result<ToyEncoder> {
        self.validate()?;
        if self.backbone != TOY_BACKBONE {
            return Err(Error::Environment(format!(
                "backbone `{}` is not available; this build ships the `{TOY_BACKBONE}` encoder only",
                self.backbone
            )));
        }
        Ok(ToyEncoder::new(self.clone(), seed))
    }
}

/// Anything that maps a sentence to a fixed-width vector in inference mode.
pub trait SentenceEncoder {
    fn dim(&self) -> usize;

    /// Unnormalized output for one sentence. Must be deterministic.
    fn embed_raw(&self, sentence: &str) -> Vec<f64>;
}

/// Encodes `sentences` in order, one embedding each.
pub fn encode<E, S>(encoder: &E, sentences: &[S], normalize: bool) -> Result<Vec<Embedding>>
where
    E: SentenceEncoder + ?Sized,
    S: AsRef<str>,
{
    if sentences.is_empty() {
        return Err(Error::Argument(
            "cannot encode an empty sentence list".into(),
        ));
    }
    sentences
        .iter()
        .map(|s| {
            let raw = encoder.embed_raw(s.as_ref());
            if normalize {
                Embedding::normalized(raw)
            } else {
                Ok(Embedding::new(raw))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_sentence_and_keeps_mask() {
        let out = wrap_with_template("A dog runs.", "This sentence: \"{s}\" means {mask}").unwrap();
        assert_eq!(out, "This sentence: \"A dog runs.\" means {mask}");
    }

    #[test]
    fn wraps_empty_sentence() {
        let out = wrap_with_template("", DEFAULT_PROMPT_TEMPLATE).unwrap();
        assert_eq!(out, "This sentence: \"\" means {mask}");
    }

    #[test]
    fn malformed_templates_are_config_errors() {
        for t in [
            "This sentence: \"{s}\" means",
            "{s} {s} {mask}",
            "{mask} {mask} {s}",
            "plain",
        ] {
            assert!(
                matches!(wrap_with_template("x", t), Err(Error::Config(_))),
                "{t}"
            );
        }
    }

    #[test]
    fn prompt_mask_pooling_requires_template() {
        let cfg = PoolingConfig {
            strategy: PoolingStrategy::PromptMask,
            template: None,
        };
        assert!(cfg.validate().is_err());
        assert!(PoolingConfig::new(PoolingStrategy::PromptMask)
            .validate()
            .is_ok());
        assert!(PoolingConfig::prompt_mask("This sentence of \"{s}\" means {mask}").is_ok());
    }

    #[test]
    fn cosine_trivial_cases() {
        let e = Embedding::normalized(vec![0.3, -0.4, 1.2]).unwrap();
        assert!((cosine_similarity(&e, &e).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine_similarity(&e, &-&e).unwrap() + 1.0).abs() < 1e-12);
        let e1 = Embedding::new(vec![1.0, 0.0]);
        let e2 = Embedding::new(vec![0.0, 1.0]);
        assert_eq!(cosine_similarity(&e1, &e2).unwrap(), 0.0);
        let short = Embedding::new(vec![1.0]);
        assert!(matches!(
            cosine_similarity(&e1, &short),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn normalizing_zero_vector_fails() {
        assert!(Embedding::normalized(vec![0.0; 4]).is_err());
    }

    #[test]
    fn unknown_backbone_is_environment_error() {
        let handle = EncoderHandle {
            backbone: "bert-base-uncased".into(),
            ..EncoderHandle::default()
        };
        assert!(matches!(handle.load(0), Err(Error::Environment(_))));
    }

    #[test]
    fn encode_rejects_empty_input() {
        let enc = EncoderHandle::default().load(1).unwrap();
        let none: [&str; 0] = [];
        assert!(matches!(encode(&enc, &none, true), Err(Error::Argument(_))));
    }
}
