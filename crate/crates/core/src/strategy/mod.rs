//! Execution plans derived from coupling reports: staged sequences,
//! influential subsets, and side-by-side comparison of strategies.

mod compare;
mod execute;
mod sequence;
mod subset;

pub use compare::{
    all_sequences, compare_strategies, compare_strategies_with, describe_sequence, distinct_sequences,
    random_sequences, CompareOptions, ComparisonRow, ComparisonTable, RandomStats, Sequence, EIGHT_VARIABLE_SHAPE,
};
pub use execute::{run_sequence, run_sequence_with, SequenceOutcome, StageResult};
pub use sequence::{build_sequence, SequencePlan, Thresholds, TraceEntry};
pub use subset::{
    select_subset, select_subset_with, sensitivity_scores, SensitivityScore, SubsetMode, SubsetSelection, SubsetStep,
};
