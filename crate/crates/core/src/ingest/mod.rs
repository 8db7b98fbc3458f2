//! Trajectory and case-registry ingestion.

mod clock;
mod dwell;
mod records;
mod registry;

pub use clock::{parse_utc_offset, DayClock, SECONDS_PER_DAY};
pub use dwell::{build_dwell_segments, split_at_days, DwellSegment, ObservationWindow};
pub use records::{
    parse_trajectories, write_corpus, write_trajectories, ParseOptions, ParsedTrajectories, RejectCounts,
    TrajectoryRecord, TRAJECTORY_HEADER,
};
pub use registry::{parse_registry, write_registry, CaseEntry, CaseRegistry, Label, REGISTRY_HEADER};
