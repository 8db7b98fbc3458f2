//! Epidemic risk engine driven by cell-level mobility trajectories.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`ingest`] parses trajectory and case-registry files and turns raw
//!    cell observations into per-user dwell segments.
//! 2. [`cleaning`] removes ping-pong handovers, fast pass-through cells and
//!    short stays.
//! 3. [`riskfield`] converts cleaned dwell into per-day stay fractions and
//!    aggregates confirmed cases into a daily risk map over cells.
//! 4. [`score`] overlays each person's stay fractions on the risk maps to
//!    get a daily risk score and its windowed maximum.
//! 5. [`detect`] flags suspected cases, either through an empirical-quantile
//!    test against the normal population or with tree classifiers.
//!
//! [`simgen`] produces seeded synthetic corpora in the same file formats so
//! the whole chain can be exercised end to end.

// Parameter checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cleaning;
pub mod config;
pub mod corpus;
pub mod detect;
pub mod error;
pub mod geo;
pub mod ingest;
pub mod pipeline;
pub mod riskfield;
pub mod score;
pub mod simgen;

pub use corpus::{CellId, CellTable, Corpus, UserId};
pub use error::{Error, Result};

/// Integer day number relative to the corpus epoch.
pub type DayIndex = i64;
