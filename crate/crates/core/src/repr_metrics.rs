//! Alignment and uniformity of embedding distributions, training trajectories
//! of both metrics on held-out training data and evaluation data, and the
//! relative fitting difficulty (RFD) summary of a trajectory.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embeddings::{encode, Embedding, SentenceEncoder};
use crate::error::{Error, Result};
use crate::train_eval::spearman;

pub const TRAJECTORY_HEADER: [&str; 6] = [
    "step",
    "align_heldout",
    "unif_heldout",
    "align_eval",
    "unif_eval",
    "spearman_eval",
];

/// Pairs scored strictly above this count as positives in STS-style data.
pub const STS_POSITIVE_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignUniformConfig {
    /// Exponent on the positive-pair distance.
    pub alpha: f64,
    /// Scale of the Gaussian potential.
    pub t: f64,
}

impl Default for AlignUniformConfig {
    fn default() -> Self {
        AlignUniformConfig { alpha: 2.0, t: 2.0 }
    }
}

impl AlignUniformConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.t.is_finite() && self.t > 0.0) {
            return Err(Error::Argument(format!(
                "alpha and t must be positive, got alpha={} t={}",
                self.alpha, self.t
            )));
        }
        Ok(())
    }
}

fn squared_distance(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Argument(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

/// Mean of `‖e₁ − e₂‖₂^α` over positive pairs. Lower is better.
pub fn alignment(pairs: &[(Embedding, Embedding)], cfg: &AlignUniformConfig) -> Result<f64> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::Argument(
            "alignment needs at least one positive pair".into(),
        ));
    }
    let mut total = 0.0;
    for (a, b) in pairs {
        total += squared_distance(a, b)?.sqrt().powf(cfg.alpha);
    }
    Ok(total / pairs.len() as f64)
}

/// Log of the mean of `exp(−t‖eᵢ − eⱼ‖²)` over all unordered pairs `i < j`.
/// Lower is better. Exact O(n²) enumeration.
pub fn uniformity(embeddings: &[Embedding], cfg: &AlignUniformConfig) -> Result<f64> {
    cfg.validate()?;
    let n = embeddings.len();
    if n < 2 {
        return Err(Error::Argument(format!(
            "uniformity needs at least 2 embeddings, got {n}"
        )));
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += (-cfg.t * squared_distance(&embeddings[i], &embeddings[j])?).exp();
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok((total / pairs).ln())
}

/// Text-level inputs for one side of a snapshot: positive pairs for
/// alignment, a deduplicated sentence pool for uniformity, and optionally
/// gold-scored pairs for Spearman evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricData {
    pub positive_pairs: Vec<(String, String)>,
    pub pool: Vec<String>,
    pub scored: Vec<(String, String, f64)>,
}

impl MetricData {
    pub fn new(
        positive_pairs: Vec<(String, String)>,
        sentences: impl IntoIterator<Item = String>,
    ) -> Self {
        MetricData {
            positive_pairs,
            pool: dedup(sentences),
            scored: Vec::new(),
        }
    }

    /// Positives are the pairs scored above [`STS_POSITIVE_THRESHOLD`]; the
    /// pool is every distinct sentence; all pairs are kept for Spearman.
    pub fn from_scored(scored: &[(String, String, f64)]) -> Self {
        let positive_pairs = scored
            .iter()
            .filter(|(_, _, s)| *s > STS_POSITIVE_THRESHOLD)
            .map(|(a, b, _)| (a.clone(), b.clone()))
            .collect();
        let pool = dedup(scored.iter().flat_map(|(a, b, _)| [a.clone(), b.clone()]));
        MetricData {
            positive_pairs,
            pool,
            scored: scored.to_vec(),
        }
    }
}

fn dedup(sentences: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut seen = HashSet::new();
    sentences
        .into_iter()
        .filter(|s| seen.insert(s.clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySnapshot {
    pub step: u64,
    pub align_heldout: f64,
    pub unif_heldout: f64,
    pub align_eval: f64,
    pub unif_eval: f64,
    pub spearman_eval: f64,
}

impl TrajectorySnapshot {
    fn is_finite(&self) -> bool {
        [
            self.align_heldout,
            self.unif_heldout,
            self.align_eval,
            self.unif_eval,
            self.spearman_eval,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Measures alignment/uniformity on both sides and eval Spearman with a
/// frozen encoder.
pub fn record_snapshot<E: SentenceEncoder + ?Sized>(
    encoder: &E,
    heldout: &MetricData,
    eval: &MetricData,
    step: u64,
    cfg: &AlignUniformConfig,
) -> Result<TrajectorySnapshot> {
    if heldout.positive_pairs.is_empty() || eval.positive_pairs.is_empty() {
        return Err(Error::Data(
            "held-out and evaluation data must both contain positive pairs".into(),
        ));
    }
    if eval.scored.is_empty() {
        return Err(Error::Data("evaluation data has no scored pairs".into()));
    }

    let mut cache: HashMap<&str, Embedding> = HashMap::new();
    let texts = heldout
        .positive_pairs
        .iter()
        .chain(&eval.positive_pairs)
        .flat_map(|(a, b)| [a.as_str(), b.as_str()])
        .chain(heldout.pool.iter().map(String::as_str))
        .chain(eval.pool.iter().map(String::as_str))
        .chain(
            eval.scored
                .iter()
                .flat_map(|(a, b, _)| [a.as_str(), b.as_str()]),
        );
    for text in texts {
        if !cache.contains_key(text) {
            let e = encode(encoder, &[text], true)?.pop().expect("one input");
            cache.insert(text, e);
        }
    }

    let pairs = |d: &MetricData| -> Vec<(Embedding, Embedding)> {
        d.positive_pairs
            .iter()
            .map(|(a, b)| (cache[a.as_str()].clone(), cache[b.as_str()].clone()))
            .collect()
    };
    let pool = |d: &MetricData| -> Vec<Embedding> {
        d.pool.iter().map(|s| cache[s.as_str()].clone()).collect()
    };

    let sims: Vec<f64> = eval
        .scored
        .iter()
        .map(|(a, b, _)| {
            crate::embeddings::dot(cache[a.as_str()].as_slice(), cache[b.as_str()].as_slice())
        })
        .collect();
    let gold: Vec<f64> = eval.scored.iter().map(|(_, _, s)| *s).collect();

    Ok(TrajectorySnapshot {
        step,
        align_heldout: alignment(&pairs(heldout), cfg)?,
        unif_heldout: uniformity(&pool(heldout), cfg)?,
        align_eval: alignment(&pairs(eval), cfg)?,
        unif_eval: uniformity(&pool(eval), cfg)?,
        spearman_eval: spearman(&sims, &gold)?,
    })
}

/// Ordered snapshots of one training run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    snapshots: Vec<TrajectorySnapshot>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_snapshots(snapshots: Vec<TrajectorySnapshot>) -> Result<Self> {
        let mut traj = Trajectory::new();
        for s in snapshots {
            traj.push(s)?;
        }
        Ok(traj)
    }

    /// Appends a snapshot; steps must strictly increase and values be finite.
    pub fn push(&mut self, snapshot: TrajectorySnapshot) -> Result<()> {
        if !snapshot.is_finite() {
            return Err(Error::Data(format!(
                "snapshot at step {} has non-finite values",
                snapshot.step
            )));
        }
        if let Some(last) = self.snapshots.last() {
            if snapshot.step <= last.step {
                return Err(Error::Data(format!(
                    "snapshot step {} does not follow step {}",
                    snapshot.step, last.step
                )));
            }
        }
        self.snapshots.push(snapshot);
        Ok(())
    }

    pub fn snapshots(&self) -> &[TrajectorySnapshot] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last_step(&self) -> Option<u64> {
        self.snapshots.last().map(|s| s.step)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        w.write_record(TRAJECTORY_HEADER).map_err(csv_err)?;
        for s in &self.snapshots {
            w.serialize(s).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Data(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Parses trajectory CSV; `label` names the source in errors.
    pub fn read_csv<R: Read>(reader: R, label: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: label.to_string(),
            line,
            message,
        };
        let mut r = csv::Reader::from_reader(reader);
        let headers = r
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != TRAJECTORY_HEADER {
            return Err(parse_err(
                1,
                format!("expected header `{}`", TRAJECTORY_HEADER.join(",")),
            ));
        }
        let mut traj = Trajectory::new();
        for record in r.deserialize::<TrajectorySnapshot>() {
            let snapshot = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                parse_err(line, e.to_string())
            })?;
            let line = traj.len() + 2;
            traj.push(snapshot)
                .map_err(|e| parse_err(line, e.to_string()))?;
        }
        Ok(traj)
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), &path.display().to_string())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(format!("writing trajectory csv: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfdResult {
    pub rfd_a: f64,
    pub rfd_u: f64,
}

/// Mean over snapshots of (held-out − eval) alignment and uniformity.
pub fn rfd(traj: &Trajectory) -> Result<RfdResult> {
    if traj.is_empty() {
        return Err(Error::Argument("rfd needs at least one snapshot".into()));
    }
    let m = traj.len() as f64;
    let (sum_a, sum_u) = traj.snapshots.iter().fold((0.0, 0.0), |(a, u), s| {
        (
            a + (s.align_heldout - s.align_eval),
            u + (s.unif_heldout - s.unif_eval),
        )
    });
    Ok(RfdResult {
        rfd_a: sum_a / m,
        rfd_u: sum_u / m,
    })
}
