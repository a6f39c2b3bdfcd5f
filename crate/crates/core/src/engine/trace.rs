//! Trace events and their line format.
//!
//! One event per line, space-separated: `tick kind subject key=value ...`. Floats carry six
//! decimals. The subject is the update (`u17`), application (`a3`) or `-` for tick metrics.

use std::io::{self, Write};

use crate::cluster::{AppId, ClassifierId, NodeId, ResourceVector, UpdateId};
use crate::priority::PriorityScore;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSnapshot<T> {
    pub mean_accuracy: T,
    pub mean_progress: T,
    pub node_utilization: Vec<ResourceVector<T>>,
    pub queue_depth: usize,
    pub in_flight: usize,
    pub updates_applied: u64,
    pub mb_transferred: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind<T> {
    UpdateArrived {
        update: UpdateId,
        app: AppId,
        node: NodeId,
        classifier: ClassifierId,
        delta_mb: T,
        accuracy_gain: T,
    },
    UpdateAssigned {
        update: UpdateId,
        app: AppId,
        node: NodeId,
        rate_mb_per_tick: T,
        score: Option<PriorityScore<T>>,
    },
    UpdateDelayed {
        update: UpdateId,
        score: Option<PriorityScore<T>>,
    },
    UpdateDropped {
        update: UpdateId,
        score: Option<PriorityScore<T>>,
    },
    UpdateCompleted {
        update: UpdateId,
        app: AppId,
        classifier: ClassifierId,
        delta_mb: T,
        classifier_accuracy: T,
    },
    TickMetrics(MetricsSnapshot<T>),
    GoalReached {
        app: AppId,
    },
}

impl<T> EventKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::UpdateArrived { .. } => "UpdateArrived",
            EventKind::UpdateAssigned { .. } => "UpdateAssigned",
            EventKind::UpdateDelayed { .. } => "UpdateDelayed",
            EventKind::UpdateDropped { .. } => "UpdateDropped",
            EventKind::UpdateCompleted { .. } => "UpdateCompleted",
            EventKind::TickMetrics(_) => "TickMetrics",
            EventKind::GoalReached { .. } => "GoalReached",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent<T> {
    pub tick: u64,
    pub kind: EventKind<T>,
}

struct F6<T>(T);

impl<T: Scalar> std::fmt::Display for F6<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = self.0.to_f64_lossless();
        // keep "-0.000000" out of the output
        let v = if v == 0.0 { 0.0 } else { v };
        write!(f, "{v:.6}")
    }
}

fn write_score<T: Scalar, W: Write>(
    out: &mut W,
    score: &Option<PriorityScore<T>>,
) -> io::Result<()> {
    if let Some(s) = score {
        write!(
            out,
            " pval={} class={} sp={} ap={}",
            F6(s.pval),
            s.class,
            F6(s.sp),
            F6(s.ap)
        )?;
    }
    Ok(())
}

impl<T: Scalar> TraceEvent<T> {
    pub fn write_line<W: Write>(&self, out: &mut W) -> io::Result<()> {
        write!(out, "{} {}", self.tick, self.kind.name())?;
        match &self.kind {
            EventKind::UpdateArrived {
                update,
                app,
                node,
                classifier,
                delta_mb,
                accuracy_gain,
            } => write!(
                out,
                " {update} app={app} node={node} classifier={classifier} delta_mb={} gain={}",
                F6(*delta_mb),
                F6(*accuracy_gain)
            )?,
            EventKind::UpdateAssigned {
                update,
                app,
                node,
                rate_mb_per_tick,
                score,
            } => {
                write!(
                    out,
                    " {update} app={app} node={node} rate={}",
                    F6(*rate_mb_per_tick)
                )?;
                write_score(out, score)?;
            }
            EventKind::UpdateDelayed { update, score }
            | EventKind::UpdateDropped { update, score } => {
                write!(out, " {update}")?;
                write_score(out, score)?;
            }
            EventKind::UpdateCompleted {
                update,
                app,
                classifier,
                delta_mb,
                classifier_accuracy,
            } => write!(
                out,
                " {update} app={app} classifier={classifier} delta_mb={} accuracy={}",
                F6(*delta_mb),
                F6(*classifier_accuracy)
            )?,
            EventKind::TickMetrics(m) => {
                write!(
                    out,
                    " - accuracy={} progress={} queue={} inflight={} applied={} mb={} util=",
                    F6(m.mean_accuracy),
                    F6(m.mean_progress),
                    m.queue_depth,
                    m.in_flight,
                    m.updates_applied,
                    F6(m.mb_transferred)
                )?;
                for (i, u) in m.node_utilization.iter().enumerate() {
                    if i > 0 {
                        out.write_all(b",")?;
                    }
                    write!(
                        out,
                        "{}/{}/{}/{}",
                        F6(u.cpu),
                        F6(u.memory),
                        F6(u.storage),
                        F6(u.throughput)
                    )?;
                }
            }
            EventKind::GoalReached { app } => write!(out, " {app}")?,
        }
        out.write_all(b"\n")
    }
}

/// Writes `trace` to `sink`, one line per event.
pub fn emit_trace<'a, T, W, I>(trace: I, sink: &mut W) -> io::Result<()>
where
    T: Scalar,
    W: Write,
    I: IntoIterator<Item = &'a TraceEvent<T>>,
{
    for event in trace {
        event.write_line(sink)?;
    }
    sink.flush()
}
