use crate::corpus::{CellId, Observation};

use super::clock::DayClock;

/// A user's continuous stay in one cell over `[start, end)` epoch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DwellSegment {
    pub cell: CellId,
    pub start: i64,
    pub end: i64,
}

impl DwellSegment {
    pub fn new(cell: CellId, start: i64, end: i64) -> Self {
        debug_assert!(end >= start);
        Self { cell, start, end }
    }

    pub fn dwell_s(&self) -> i64 {
        self.end - self.start
    }
}

/// Half-open interval of epoch seconds during which the corpus is observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationWindow {
    pub start: i64,
    pub end: i64,
}

/// Differences consecutive observations into dwell segments.
///
/// Observation `i` covers `[ts_i, ts_{i+1})`; the last one is held for
/// `terminal_dwell_s`, cut at the window end. Runs of the same cell merge,
/// everything is clipped to the window and zero-length pieces are dropped.
pub fn build_dwell_segments(
    observations: &[Observation],
    window: ObservationWindow,
    terminal_dwell_s: i64,
) -> Vec<DwellSegment> {
    let mut out: Vec<DwellSegment> = Vec::new();
    for (i, obs) in observations.iter().enumerate() {
        let raw_end = match observations.get(i + 1) {
            Some(next) => next.ts,
            None => obs.ts.saturating_add(terminal_dwell_s),
        };
        let start = obs.ts.max(window.start);
        let end = raw_end.min(window.end);
        if end <= start {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.cell == obs.cell && last.end == start => last.end = end,
            _ => out.push(DwellSegment::new(obs.cell, start, end)),
        }
    }
    out
}

/// Splits segments at local midnight so every piece lies in one day.
pub fn split_at_days(segments: &[DwellSegment], clock: &DayClock) -> Vec<DwellSegment> {
    let mut out = Vec::with_capacity(segments.len() + segments.len() / 2);
    for seg in segments {
        let mut start = seg.start;
        while start < seg.end {
            let boundary = clock.day_start(clock.day_of(start) + 1);
            let end = boundary.min(seg.end);
            out.push(DwellSegment::new(seg.cell, start, end));
            start = end;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SECONDS_PER_DAY;

    const A: CellId = CellId(0);
    const B: CellId = CellId(1);
    const WIDE: ObservationWindow = ObservationWindow { start: 0, end: i64::MAX };

    fn obs(cell: CellId, ts: i64) -> Observation {
        Observation { cell, ts }
    }

    #[test]
    fn adjacent_differencing() {
        let segs = build_dwell_segments(&[obs(A, 0), obs(B, 600)], WIDE, 0);
        assert_eq!(segs, [DwellSegment::new(A, 0, 600)]);
    }

    #[test]
    fn terminal_dwell_capped_by_window() {
        let window = ObservationWindow { start: 0, end: 1800 };
        let segs = build_dwell_segments(&[obs(A, 0)], window, 3600);
        assert_eq!(segs, [DwellSegment::new(A, 0, 1800)]);
        let segs = build_dwell_segments(&[obs(A, 0)], WIDE, 3600);
        assert_eq!(segs[0].dwell_s(), 3600);
    }

    #[test]
    fn same_cell_runs_merge() {
        let segs = build_dwell_segments(&[obs(A, 0), obs(A, 100), obs(B, 400)], WIDE, 50);
        assert_eq!(segs, [DwellSegment::new(A, 0, 400), DwellSegment::new(B, 400, 450)]);
    }

    #[test]
    fn empty_and_zero_length() {
        assert!(build_dwell_segments(&[], WIDE, 3600).is_empty());
        let segs = build_dwell_segments(&[obs(A, 10), obs(B, 10), obs(A, 20)], WIDE, 0);
        assert_eq!(segs, [DwellSegment::new(B, 10, 20)]);
    }

    #[test]
    fn midnight_split() {
        let clock = DayClock::default();
        let d0 = clock.day_start(0);
        let seg = DwellSegment::new(A, d0 + 80_000, d0 + SECONDS_PER_DAY + 10_000);
        let pieces = split_at_days(&[seg], &clock);
        assert_eq!(
            pieces,
            [
                DwellSegment::new(A, d0 + 80_000, d0 + SECONDS_PER_DAY),
                DwellSegment::new(A, d0 + SECONDS_PER_DAY, d0 + SECONDS_PER_DAY + 10_000),
            ]
        );
    }
}
