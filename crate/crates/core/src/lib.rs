//! Adaptive evaluation of theorem provers.
//!
//! Recorded proof attempts are turned into a bank of theorems annotated with
//! difficulty and discrimination, which an adaptive loop then uses to
//! estimate a prover's ability from a small number of administrations.

// `!(x > 0.0)` is used on purpose so that NaN fails validation too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod analysis;
pub mod annotate;
pub mod corpus;
mod error;
pub mod examinee;
pub mod irt;

pub use adaptive::{
    cost_metrics, run_adaptive, run_adaptive_with_statements, select_theorems, transform_rate, update_ability,
    EvalConfig, EvalReport, SelectionState, TieBreak, TraceRow, UpdateRule,
};
pub use analysis::{
    category_summary, kendall_tau, level_pass_table, ranking_concordance, scatter_export, tune_hyperparams,
    LevelSubset,
};
pub use annotate::{annotate, grade, normalize_bank, AnnotationConfig, Grading, ItemBank, ItemParams};
pub use corpus::{AggregateCell, AttemptRecord, Corpus, ResponseMatrix, TheoremRecord};
pub use error::{Error, Result};
pub use examinee::{
    synthetic_bank, BackendError, Cached, Capabilities, ExamineeBackend, ExternalBackend, ReplayBackend,
    SyntheticExaminee, TrueParams,
};
pub use irt::{fisher_info, p_2pl};
