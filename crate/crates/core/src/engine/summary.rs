use std::io::{self, Write};

use super::trace::{EventKind, TraceEvent};
use super::SimState;
use crate::scalar::Scalar;
use crate::schedulers::Strategy;

pub const SUMMARY_HEADER: &str = "strategy,seed,ticks_run,completion_tick,final_accuracy,\
final_progress,arrived,applied,dropped,delayed,pending,mb_transferred";

/// End-of-run totals for one mission.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionSummary<T> {
    pub strategy: Strategy,
    pub seed: u64,
    pub ticks_run: u64,
    /// Tick on which every application had reached its goal, if that happened.
    pub completion_tick: Option<u64>,
    pub final_mean_accuracy: T,
    pub final_mean_progress: T,
    pub arrived: u64,
    pub applied: u64,
    pub dropped: u64,
    pub delayed: u64,
    pub pending: u64,
    pub mb_transferred: T,
}

impl<T: Scalar> MissionSummary<T> {
    pub fn from_state(state: &SimState<T>, strategy: Strategy, ticks_run: u64) -> Self {
        let m = state.metrics();
        Self {
            strategy,
            seed: state.spec.seed,
            ticks_run,
            completion_tick: state.completion_tick,
            final_mean_accuracy: m.mean_accuracy,
            final_mean_progress: m.mean_progress,
            arrived: state.counters.arrived,
            applied: state.counters.applied,
            dropped: state.counters.dropped,
            delayed: state.counters.delayed,
            pending: state.pending(),
            mb_transferred: state.mb_transferred,
        }
    }

    /// One row matching [`SUMMARY_HEADER`]; an unfinished mission leaves `completion_tick` empty.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{},{},{},{},{},{:.6}",
            self.strategy,
            self.seed,
            self.ticks_run,
            self.completion_tick
                .map(|t| t.to_string())
                .unwrap_or_default(),
            self.final_mean_accuracy.to_f64_lossless(),
            self.final_mean_progress.to_f64_lossless(),
            self.arrived,
            self.applied,
            self.dropped,
            self.delayed,
            self.pending,
            self.mb_transferred.to_f64_lossless(),
        )
    }
}

pub fn write_summary_csv<'a, T, W, I>(rows: I, sink: &mut W) -> io::Result<()>
where
    T: Scalar,
    W: Write,
    I: IntoIterator<Item = &'a MissionSummary<T>>,
{
    writeln!(sink, "{SUMMARY_HEADER}")?;
    for row in rows {
        writeln!(sink, "{}", row.csv_row())?;
    }
    sink.flush()
}

/// Mean accuracy at the first tick where mean progress reached `percent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<T> {
    pub percent: u32,
    pub tick: Option<u64>,
    pub mean_accuracy: Option<T>,
}

/// Samples the trace's metrics at 10%, 20%, ..., 100% completion. Deciles never reached
/// have no tick or accuracy.
pub fn completion_curve<T: Scalar>(trace: &[TraceEvent<T>]) -> Vec<CurvePoint<T>> {
    let mut points: Vec<CurvePoint<T>> = (1..=10)
        .map(|d| CurvePoint {
            percent: d * 10,
            tick: None,
            mean_accuracy: None,
        })
        .collect();
    let mut next = 0;
    for event in trace {
        let EventKind::TickMetrics(m) = &event.kind else {
            continue;
        };
        while next < points.len() {
            let target = T::lit(f64::from(points[next].percent) / 100.0);
            if m.mean_progress + T::snap_tolerance() < target {
                break;
            }
            points[next].tick = Some(event.tick);
            points[next].mean_accuracy = Some(m.mean_accuracy);
            next += 1;
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::MetricsSnapshot;

    fn tick(t: u64, progress: f64, accuracy: f64) -> TraceEvent<f64> {
        TraceEvent {
            tick: t,
            kind: EventKind::TickMetrics(MetricsSnapshot {
                mean_accuracy: accuracy,
                mean_progress: progress,
                node_utilization: vec![],
                queue_depth: 0,
                in_flight: 0,
                updates_applied: 0,
                mb_transferred: 0.0,
            }),
        }
    }

    #[test]
    fn curve_has_ten_points_and_skips_jumps() {
        let trace = vec![tick(0, 0.05, 0.5), tick(1, 0.25, 0.6), tick(2, 0.3, 0.7)];
        let c = completion_curve(&trace);
        assert_eq!(c.len(), 10);
        assert_eq!(c[0].tick, Some(1));
        assert_eq!(c[1].tick, Some(1));
        assert_eq!(c[2].tick, Some(2));
        assert_eq!(c[2].mean_accuracy, Some(0.7));
        assert!(c[3..].iter().all(|p| p.tick.is_none()));
        assert_eq!(c[9].percent, 100);
    }

    #[test]
    fn csv_row_shape() {
        let s = MissionSummary {
            strategy: Strategy::Greedy,
            seed: 3,
            ticks_run: 10,
            completion_tick: None,
            final_mean_accuracy: 0.5f64,
            final_mean_progress: 0.25,
            arrived: 5,
            applied: 3,
            dropped: 1,
            delayed: 4,
            pending: 1,
            mb_transferred: 12.0,
        };
        assert_eq!(
            s.csv_row(),
            "greedy,3,10,,0.500000,0.250000,5,3,1,4,1,12.000000"
        );
        assert_eq!(
            s.csv_row().split(',').count(),
            SUMMARY_HEADER.split(',').count()
        );
    }
}
