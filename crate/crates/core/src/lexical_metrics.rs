//! Match Error Rate between token sequences and density histograms of
//! pairwise metrics (MER or cosine similarity) over sentence pairs.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embeddings::{cosine_similarity, encode, SentenceEncoder};
use crate::error::{Error, Result};
use crate::text::tokenize;

pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EditCounts {
    pub insertions: usize,
    pub deletions: usize,
    pub substitutions: usize,
    pub retains: usize,
}

impl EditCounts {
    pub fn errors(&self) -> usize {
        self.insertions + self.deletions + self.substitutions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchErrorRate {
    pub value: f64,
    pub counts: EditCounts,
}

#[derive(Clone, Copy)]
enum Op {
    Retain,
    Substitute,
    Delete,
    Insert,
}

/// `(I + D + S) / (I + D + S + R)` under a minimal-cost token alignment,
/// choosing among minimal alignments one with the most retains.
///
/// Returns `None` when both sentences are empty after tokenization.
pub fn mer(s1: &str, s2: &str) -> Option<MatchErrorRate> {
    let a = tokenize(s1);
    let b = tokenize(s2);
    mer_tokens(&a, &b)
}

pub fn mer_tokens<T: PartialEq>(a: &[T], b: &[T]) -> Option<MatchErrorRate> {
    if a.is_empty() && b.is_empty() {
        return None;
    }
    let counts = align_counts(a, b);
    Some(MatchErrorRate {
        value: counts.errors() as f64 / (counts.errors() + counts.retains) as f64,
        counts,
    })
}

fn align_counts<T: PartialEq>(a: &[T], b: &[T]) -> EditCounts {
    let (n, m) = (a.len(), b.len());
    let w = m + 1;
    // (cost, retains) per cell; lower cost wins, then more retains.
    let mut best = vec![(0usize, 0usize); (n + 1) * w];
    let mut op = vec![Op::Retain; (n + 1) * w];
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut cell: Option<((usize, usize), Op)> = None;
            let mut offer = |cand: (usize, usize), o: Op| {
                let better = match cell {
                    None => true,
                    Some(((c, r), _)) => cand.0 < c || (cand.0 == c && cand.1 > r),
                };
                if better {
                    cell = Some((cand, o));
                }
            };
            if i > 0 && j > 0 {
                let (c, r) = best[(i - 1) * w + j - 1];
                if a[i - 1] == b[j - 1] {
                    offer((c, r + 1), Op::Retain);
                } else {
                    offer((c + 1, r), Op::Substitute);
                }
            }
            if i > 0 {
                let (c, r) = best[(i - 1) * w + j];
                offer((c + 1, r), Op::Delete);
            }
            if j > 0 {
                let (c, r) = best[i * w + j - 1];
                offer((c + 1, r), Op::Insert);
            }
            let (score, o) = cell.expect("at least one predecessor");
            best[i * w + j] = score;
            op[i * w + j] = o;
        }
    }

    let mut counts = EditCounts::default();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match op[i * w + j] {
            Op::Retain => {
                counts.retains += 1;
                i -= 1;
                j -= 1;
            }
            Op::Substitute => {
                counts.substitutions += 1;
                i -= 1;
                j -= 1;
            }
            Op::Delete => {
                counts.deletions += 1;
                i -= 1;
            }
            Op::Insert => {
                counts.insertions += 1;
                j -= 1;
            }
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMetric {
    Mer,
    Cs,
}

impl PairMetric {
    /// The metric's natural value range.
    pub fn range(self) -> (f64, f64) {
        match self {
            PairMetric::Mer => (0.0, 1.0),
            PairMetric::Cs => (-1.0, 1.0),
        }
    }
}

impl FromStr for PairMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mer" => Ok(PairMetric::Mer),
            "cs" => Ok(PairMetric::Cs),
            other => Err(Error::Argument(format!(
                "unknown metric `{other}` (expected mer or cs)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
}

impl Histogram {
    /// Density-normalized histogram of `values` over `[lo, hi]` with equal-width
    /// bins; the top edge belongs to the last bin.
    pub fn from_values(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Argument(format!(
                "invalid histogram layout: {bins} bins over [{lo}, {hi}]"
            )));
        }
        if values.is_empty() {
            return Err(Error::Argument("histogram of an empty value list".into()));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &v in values {
            if !(lo..=hi).contains(&v) {
                return Err(Error::Argument(format!("value {v} outside [{lo}, {hi}]")));
            }
            let idx = (((v - lo) / width).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let n = values.len() as f64;
        Ok(Histogram {
            bin_edges: (0..=bins).map(|k| lo + k as f64 * width).collect(),
            densities: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
        })
    }

    pub fn bins(&self) -> usize {
        self.densities.len()
    }

    /// `Σ density × width`; 1 for any non-empty input.
    pub fn total_mass(&self) -> f64 {
        self.densities
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("bin_left\tbin_right\tdensity\n");
        for (d, e) in self.densities.iter().zip(self.bin_edges.windows(2)) {
            writeln!(out, "{}\t{}\t{}", e[0], e[1], d).expect("writing to a String");
        }
        out
    }
}

/// Values of `metric` for every pair. MER pairs with two empty sentences are
/// skipped.
pub fn pairwise_values<S: AsRef<str>>(
    pairs: &[(S, S)],
    metric: PairMetric,
    encoder: Option<&dyn SentenceEncoder>,
) -> Result<Vec<f64>> {
    match metric {
        PairMetric::Mer => Ok(pairs
            .iter()
            .filter_map(|(a, b)| mer(a.as_ref(), b.as_ref()).map(|m| m.value))
            .collect()),
        PairMetric::Cs => {
            let encoder = encoder.ok_or_else(|| {
                Error::Argument("cosine-similarity histograms need an encoder".into())
            })?;
            if pairs.is_empty() {
                return Ok(Vec::new());
            }
            let left = encode(
                encoder,
                &pairs.iter().map(|p| p.0.as_ref()).collect::<Vec<_>>(),
                true,
            )?;
            let right = encode(
                encoder,
                &pairs.iter().map(|p| p.1.as_ref()).collect::<Vec<_>>(),
                true,
            )?;
            left.iter()
                .zip(&right)
                .map(|(a, b)| cosine_similarity(a, b))
                .collect()
        }
    }
}

pub fn pairwise_histogram<S: AsRef<str>>(
    pairs: &[(S, S)],
    metric: PairMetric,
    encoder: Option<&dyn SentenceEncoder>,
    bins: usize,
) -> Result<Histogram> {
    if pairs.is_empty() {
        return Err(Error::Argument("no sentence pairs given".into()));
    }
    let values = pairwise_values(pairs, metric, encoder)?;
    if values.is_empty() {
        return Err(Error::Data(
            "every pair was empty after tokenization".into(),
        ));
    }
    let (lo, hi) = metric.range();
    Histogram::from_values(&values, lo, hi, bins)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sequences() {
        let m = mer("a b c", "a b c").unwrap();
        assert_eq!(m.value, 0.0);
        assert_eq!(m.counts.retains, 3);
        assert_eq!(m.counts.errors(), 0);
    }

    #[test]
    fn one_substitution() {
        let m = mer("a b c", "a b d").unwrap();
        assert!((m.value - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            m.counts,
            EditCounts {
                insertions: 0,
                deletions: 0,
                substitutions: 1,
                retains: 2
            }
        );
    }

    #[test]
    fn no_shared_tokens() {
        let m = mer("x y", "p q r").unwrap();
        assert_eq!(m.value, 1.0);
        assert_eq!(m.counts.substitutions, 2);
        assert_eq!(m.counts.insertions, 1);
        assert_eq!(m.counts.retains, 0);
    }

    #[test]
    fn empty_inputs() {
        assert!(mer("", "  ").is_none());
        let m = mer("", "a b").unwrap();
        assert_eq!(m.value, 1.0);
        assert_eq!(m.counts.insertions, 2);
    }

    #[test]
    fn prefers_retains_among_minimal_alignments() {
        // Cost 2 either as two substitutions (R=0) or delete+insert around a
        // retained "a" (R=1).
        let m = mer("a b", "c a").unwrap();
        assert_eq!(m.counts.retains, 1);
        assert_eq!(m.counts.errors(), 2);
    }

    #[test]
    fn histogram_point_mass() {
        let pairs = vec![("a b", "a b"); 5];
        let h = pairwise_histogram(&pairs, PairMetric::Mer, None, 10).unwrap();
        assert_eq!(h.densities[0], 10.0);
        assert!(h.densities[1..].iter().all(|&d| d == 0.0));
        assert!((h.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cs_requires_encoder() {
        let pairs = vec![("a", "b")];
        assert!(matches!(
            pairwise_histogram(&pairs, PairMetric::Cs, None, 10),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn tsv_layout() {
        let h = Histogram::from_values(&[0.1, 0.9], 0.0, 1.0, 2).unwrap();
        assert_eq!(
            h.to_tsv(),
            "bin_left\tbin_right\tdensity\n0\t0.5\t1\n0.5\t1\t1\n"
        );
    }
}
