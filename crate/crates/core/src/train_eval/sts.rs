use std::path::Path;

use crate::embeddings::{cosine_similarity, encode, SentenceEncoder};
use crate::error::{Error, Result};
use crate::io::read_jsonl;
use crate::pattern_sim::StsRecord;
use crate::repr_metrics::MetricData;

use super::stats::spearman;

/// Scored sentence pairs used for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct StsEvalSet {
    records: Vec<StsRecord>,
}

impl StsEvalSet {
    pub fn new(records: Vec<StsRecord>) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::Data(format!(
                "evaluation set needs at least 2 records, got {}",
                records.len()
            )));
        }
        if let Some(r) = records.iter().find(|r| !(0.0..=5.0).contains(&r.score)) {
            return Err(Error::Data(format!(
                "gold score {} is outside [0, 5]",
                r.score
            )));
        }
        if records.iter().all(|r| r.score == records[0].score) {
            return Err(Error::Data("all gold scores are equal".into()));
        }
        Ok(StsEvalSet { records })
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        Self::new(read_jsonl(path)?)
    }

    pub fn records(&self) -> &[StsRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn metric_data(&self) -> MetricData {
        let scored: Vec<(String, String, f64)> = self
            .records
            .iter()
            .map(|r| (r.sentence1.clone(), r.sentence2.clone(), r.score))
            .collect();
        MetricData::from_scored(&scored)
    }
}

/// Spearman between the cosine similarity of each encoded pair and its gold
/// score.
pub fn evaluate_sts<E: SentenceEncoder + ?Sized>(encoder: &E, evalset: &StsEvalSet) -> Result<f64> {
    let mut sims = Vec::with_capacity(evalset.len());
    for r in evalset.records() {
        let e = encode(encoder, &[r.sentence1.as_str(), r.sentence2.as_str()], true)?;
        sims.push(cosine_similarity(&e[0], &e[1])?);
    }
    let gold: Vec<f64> = evalset.records().iter().map(|r| r.score).collect();
    spearman(&sims, &gold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(a: &str, b: &str, score: f64) -> StsRecord {
        StsRecord {
            sentence1: a.into(),
            sentence2: b.into(),
            score,
        }
    }

    /// Maps "k" to a unit vector at angle acos(k/5) from (1, 0); pairs are
    /// always ("0", "k") so the cosine equals k/5.
    struct Angles;

    impl SentenceEncoder for Angles {
        fn dim(&self) -> usize {
            2
        }

        fn embed_raw(&self, s: &str) -> Vec<f64> {
            let c: f64 = s.parse::<f64>().unwrap() / 5.0;
            let c = if s == "0" { 1.0 } else { c };
            vec![c, (1.0 - c * c).sqrt()]
        }
    }

    struct Constant;

    impl SentenceEncoder for Constant {
        fn dim(&self) -> usize {
            2
        }

        fn embed_raw(&self, _: &str) -> Vec<f64> {
            vec![1.0, 1.0]
        }
    }

    #[test]
    fn cosine_equal_to_gold_is_perfect() {
        let set = StsEvalSet::new(vec![
            rec("0", "1", 1.0),
            rec("0", "3", 3.0),
            rec("0", "4.5", 4.5),
            rec("0", "2", 2.0),
        ])
        .unwrap();
        assert_eq!(evaluate_sts(&Angles, &set).unwrap(), 1.0);
    }

    #[test]
    fn constant_encoder_is_undefined() {
        let set = StsEvalSet::new(vec![rec("a", "b", 1.0), rec("c", "d", 3.0)]).unwrap();
        assert!(matches!(
            evaluate_sts(&Constant, &set),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn two_records_give_unit_magnitude() {
        let enc = crate::embeddings::EncoderHandle::default().load(3).unwrap();
        let set = StsEvalSet::new(vec![
            rec("a cat", "a dog", 1.0),
            rec("the sun", "the sky", 3.0),
        ])
        .unwrap();
        assert_eq!(evaluate_sts(&enc, &set).unwrap().abs(), 1.0);
    }

    #[test]
    fn invalid_sets() {
        assert!(StsEvalSet::new(vec![rec("a", "b", 1.0)]).is_err());
        assert!(StsEvalSet::new(vec![rec("a", "b", 1.0), rec("c", "d", 1.0)]).is_err());
        assert!(StsEvalSet::new(vec![rec("a", "b", 1.0), rec("c", "d", 6.0)]).is_err());
    }
}
