//! Training loop, held-out split, STS evaluation and grid search.

pub mod ablation;
pub mod grid;
pub mod optim;
pub mod stats;
pub mod sts;
pub mod trainer;

pub use ablation::{generated_count_ablation, AblationReport, AblationRow, AblationScore};
pub use grid::{grid_search, CellResult, CellStatus, GridCell, GridReport, GridSpec, TOP_K};
pub use optim::{AdamW, AdamWConfig};
pub use stats::{average_ranks, spearman, top_k_average};
pub use sts::{evaluate_sts, StsEvalSet};
pub use trainer::{split_heldout, train, Augmentation, Optimizer, TrainConfig, TrainOutput};
