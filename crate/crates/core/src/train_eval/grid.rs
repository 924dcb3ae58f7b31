use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::stats::top_k_average;
use super::sts::StsEvalSet;
use super::trainer::{train, TrainConfig};
use crate::embeddings::ToyEncoder;
use crate::error::{Error, Result};
use crate::pattern_sim::HybridDataset;

pub const TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub learning_rates: Vec<f64>,
    pub m1s: Vec<f64>,
    pub m2s: Vec<f64>,
    pub betas: Vec<f64>,
}

impl GridSpec {
    /// A one-cell grid holding the values of `base`.
    pub fn singleton(base: &TrainConfig) -> Self {
        GridSpec {
            learning_rates: vec![base.learning_rate],
            m1s: vec![base.ht.m1],
            m2s: vec![base.ht.m2],
            betas: vec![base.ht.beta],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, values) in [
            ("learning_rates", &self.learning_rates),
            ("m1s", &self.m1s),
            ("m2s", &self.m2s),
            ("betas", &self.betas),
        ] {
            if values.is_empty() {
                return Err(Error::Config(format!("grid list `{name}` is empty")));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!(
                    "grid list `{name}` has a non-finite value"
                )));
            }
        }
        Ok(())
    }

    /// Cartesian product with `lr` varying slowest and `beta` fastest.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut cells = Vec::new();
        for &learning_rate in &self.learning_rates {
            for &m1 in &self.m1s {
                for &m2 in &self.m2s {
                    for &beta in &self.betas {
                        cells.push(GridCell {
                            learning_rate,
                            m1,
                            m2,
                            beta,
                        });
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub learning_rate: f64,
    pub m1: f64,
    pub m2: f64,
    pub beta: f64,
}

impl GridCell {
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        cfg.learning_rate = self.learning_rate;
        cfg.ht.m1 = self.m1;
        cfg.ht.m2 = self.m2;
        cfg.ht.beta = self.beta;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok(f64),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: GridCell,
    pub status: CellStatus,
}

impl CellResult {
    pub fn score(&self) -> Option<f64> {
        match self.status {
            CellStatus::Ok(s) => Some(s),
            CellStatus::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub results: Vec<CellResult>,
    /// Index of the winning cell; the first-enumerated cell wins ties.
    pub best: Option<usize>,
}

pub const GRID_REPORT_HEADER: &str = "learning_rate\tm1\tm2\tbeta\ttop5_spearman\tstatus\tbest";

impl GridReport {
    pub fn from_results(results: Vec<CellResult>) -> Self {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in results.iter().enumerate() {
            if let Some(s) = r.score() {
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((i, s));
                }
            }
        }
        GridReport {
            results,
            best: best.map(|(i, _)| i),
        }
    }

    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.score().is_none()).count()
    }

    pub fn best_cell(&self) -> Option<&CellResult> {
        self.best.map(|i| &self.results[i])
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(GRID_REPORT_HEADER);
        out.push('\n');
        for (i, r) in self.results.iter().enumerate() {
            let (score, status) = match &r.status {
                CellStatus::Ok(s) => (s.to_string(), "ok".to_string()),
                CellStatus::Failed(msg) => ("NA".to_string(), format!("failed: {}", one_line(msg))),
            };
            let c = r.cell;
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{score}\t{status}\t{}\n",
                c.learning_rate,
                c.m1,
                c.m2,
                c.beta,
                if self.best == Some(i) { "*" } else { "" }
            ));
        }
        out
    }
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Trains one fresh encoder per grid cell and scores each run by the mean of
/// its top-5 eval Spearman values. Failed cells are reported, not fatal.
/// Up to `jobs` cells train concurrently; results do not depend on `jobs`.
pub fn grid_search<F>(
    grid: &GridSpec,
    base: &TrainConfig,
    dataset: &HybridDataset,
    encoder_factory: F,
    evalset: &StsEvalSet,
    jobs: usize,
) -> Result<GridReport>
where
    F: Fn(&TrainConfig) -> Result<ToyEncoder> + Sync,
{
    grid.validate()?;
    let cells = grid.cells();
    let run = |cell: &GridCell| -> CellStatus {
        let cfg = cell.apply(base);
        let scored = encoder_factory(&cfg)
            .and_then(|enc| train(&cfg, dataset, enc, evalset))
            .and_then(|out| top_k_average(&out.trajectory, TOP_K));
        match scored {
            Ok(s) if s.is_finite() => CellStatus::Ok(s),
            Ok(s) => CellStatus::Failed(format!("non-finite score {s}")),
            Err(e) => CellStatus::Failed(e.to_string()),
        }
    };

    let statuses: Vec<CellStatus> = if jobs <= 1 {
        cells.iter().map(run).collect()
    } else {
        let slots = Mutex::new(vec![None; cells.len()]);
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(cells.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(cell) = cells.get(i) else { break };
                    let status = run(cell);
                    slots.lock().expect("no poisoned workers")[i] = Some(status);
                });
            }
        });
        slots
            .into_inner()
            .expect("no poisoned workers")
            .into_iter()
            .map(|s| s.expect("every cell ran"))
            .collect()
    };

    Ok(GridReport::from_results(
        cells
            .into_iter()
            .zip(statuses)
            .map(|(cell, status)| CellResult { cell, status })
            .collect(),
    ))
}
