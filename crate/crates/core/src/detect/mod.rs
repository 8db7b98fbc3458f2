//! Suspected-case detection.
//!
//! Two detectors share one labelled cohort: a one-sided test of each
//! windowed score against the empirical distribution of normal scores, and
//! tree classifiers over the last few daily scores.

mod cohort;
mod ecdf;
mod forest;
mod metrics;
mod model_io;
mod sweep;
mod tree;

pub use cohort::{build_features, stratified_split, Cohort, CohortMember, FeatureMatrix};
pub use ecdf::{detect_stat, DetectionOutcome, EmpiricalCdf};
pub use forest::{ForestParams, RandomForest};
pub use metrics::{confusion, ConfusionCounts, Metrics};
pub use model_io::{read_forest, read_tree, write_forest, write_tree};
pub use sweep::{evaluate_sweep, fit_and_test, resample_to_rate, Method, SweepConfig, SweepRow};
pub use tree::{DecisionTree, Node, TreeParams};

pub use crate::ingest::Label;
