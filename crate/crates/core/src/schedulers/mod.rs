//! Update selection strategies.
//!
//! Both strategies share one admission rule, applied update by update against a tentative
//! copy of the cluster: the target application's worker must be free (and not claimed
//! earlier in the round), its node must be unconstrained given everything admitted so far,
//! and admitting the update must keep every load component within capacity. A candidate
//! that fails is skipped and the walk continues; nothing admitted is ever withdrawn.
//!
//! * [`greedy_schedule`] walks the queue in FIFO order and delays whatever fails.
//! * [`dsoc_schedule`] scores every queued update, drops Red ones, and walks the rest
//!   Green to Blue, highest `pval` first.

mod oracle;
mod queue;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

pub use oracle::{is_feasible_set, oracle_max_feasible, OracleError, ORACLE_MAX_CANDIDATES};
pub use queue::{QueueError, UpdateQueue};

use crate::cluster::{AppId, Cluster, ResourceVector, UpdateId, UpdateRequest};
use crate::error::ConfigError;
use crate::priority::{
    assign_priority, PriorityClass, PriorityScore, PriorityThresholds, WeightConfig,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Greedy,
    Dsoc,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Greedy, Strategy::Dsoc];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Greedy => "greedy",
            Strategy::Dsoc => "dsoc",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(Strategy::Greedy),
            "dsoc" => Ok(Strategy::Dsoc),
            other => Err(format!(
                "unknown strategy {other:?} (expected greedy or dsoc)"
            )),
        }
    }
}

/// Outcome of one scheduling round.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleDecision<T> {
    /// Updates to start this round, in start order.
    pub assigned: Vec<UpdateId>,
    pub delayed: Vec<UpdateId>,
    /// Red updates discarded by the prioritized strategy.
    pub dropped: Vec<UpdateId>,
    /// Number of updates deemed safe this round.
    pub k: usize,
    /// Scores of every update the prioritized strategy evaluated.
    pub scores: BTreeMap<UpdateId, PriorityScore<T>>,
}

impl<T> Default for ScheduleDecision<T> {
    fn default() -> Self {
        Self {
            assigned: Vec::new(),
            delayed: Vec::new(),
            dropped: Vec::new(),
            k: 0,
            scores: BTreeMap::new(),
        }
    }
}

/// Why the admission walk skipped a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    UnknownTarget,
    WorkerBusy,
    NodeConstrained,
}

/// Tentative admission state for one round.
struct Admission<'a, T> {
    cluster: &'a Cluster<T>,
    thresholds: &'a ResourceVector<T>,
    extra: Vec<usize>,
    claimed: BTreeSet<AppId>,
}

impl<'a, T: Scalar> Admission<'a, T> {
    fn new(cluster: &'a Cluster<T>, thresholds: &'a ResourceVector<T>) -> Self {
        Self {
            cluster,
            thresholds,
            extra: vec![0; cluster.nodes().len()],
            claimed: BTreeSet::new(),
        }
    }

    fn try_admit(&mut self, update: &UpdateRequest<T>) -> Result<(), Rejection> {
        let node = self
            .cluster
            .node(update.node_id)
            .map_err(|_| Rejection::UnknownTarget)?;
        let app = self
            .cluster
            .app(update.app_id)
            .map_err(|_| Rejection::UnknownTarget)?;
        if app.node_id != node.id {
            return Err(Rejection::UnknownTarget);
        }
        if app.worker_busy || self.claimed.contains(&app.id) {
            return Err(Rejection::WorkerBusy);
        }
        let idx = node.id.0 as usize;
        if !node.can_admit_with(self.thresholds, self.extra[idx]) {
            return Err(Rejection::NodeConstrained);
        }
        self.extra[idx] += 1;
        self.claimed.insert(app.id);
        Ok(())
    }
}

/// Walks `candidates` in order and returns how many the admission rule accepts.
pub fn compute_k<'u, T, I>(
    candidates: I,
    cluster: &Cluster<T>,
    thresholds: &ResourceVector<T>,
) -> usize
where
    T: Scalar,
    I: IntoIterator<Item = &'u UpdateRequest<T>>,
{
    let mut walk = Admission::new(cluster, thresholds);
    candidates
        .into_iter()
        .filter(|u| walk.try_admit(u).is_ok())
        .count()
}

pub fn greedy_schedule<T: Scalar>(
    queue: &UpdateQueue<T>,
    cluster: &Cluster<T>,
    thresholds: &ResourceVector<T>,
) -> ScheduleDecision<T> {
    let mut walk = Admission::new(cluster, thresholds);
    let mut decision = ScheduleDecision::default();
    for update in queue {
        match walk.try_admit(update) {
            Ok(()) => decision.assigned.push(update.id),
            Err(_) => decision.delayed.push(update.id),
        }
    }
    decision.k = decision.assigned.len();
    decision
}

pub fn dsoc_schedule<T: Scalar>(
    queue: &UpdateQueue<T>,
    cluster: &Cluster<T>,
    weights: &WeightConfig<T>,
    thresholds: &ResourceVector<T>,
    priority_thresholds: &PriorityThresholds<T>,
) -> Result<ScheduleDecision<T>, ConfigError> {
    weights.validate()?;
    priority_thresholds.validate()?;
    let mut decision = ScheduleDecision::default();
    let mut ranked = Vec::with_capacity(queue.len());
    for update in queue {
        let node = cluster.node(update.node_id);
        let app = cluster.app(update.app_id);
        let (Ok(node), Ok(app)) = (node, app) else {
            return Err(ConfigError::Scenario(format!(
                "update {} targets unknown node or application",
                update.id
            )));
        };
        let score = assign_priority(update, node, app, weights, priority_thresholds)?;
        decision.scores.insert(update.id, score);
        if score.class == PriorityClass::Red {
            decision.dropped.push(update.id);
        } else {
            ranked.push((update, score));
        }
    }
    ranked.sort_by(|(ua, sa), (ub, sb)| {
        sa.class
            .rank()
            .cmp(&sb.class.rank())
            .then_with(|| sb.pval.partial_cmp(&sa.pval).expect("pval is finite"))
            .then_with(|| ua.arrival_tick.cmp(&ub.arrival_tick))
            .then_with(|| ua.id.cmp(&ub.id))
    });
    let mut walk = Admission::new(cluster, thresholds);
    for (update, _) in ranked {
        match walk.try_admit(update) {
            Ok(()) => decision.assigned.push(update.id),
            Err(_) => decision.delayed.push(update.id),
        }
    }
    decision.k = decision.assigned.len();
    Ok(decision)
}
