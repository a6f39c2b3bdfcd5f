//! The tick loop.
//!
//! Each tick runs the same phases in the same order:
//!
//! 1. sample update arrivals into the queue
//! 2. run the selected scheduler over the queue
//! 3. start transfers for assigned updates
//! 4. advance every transfer by one tick
//! 5. apply the effects of completed updates
//! 6. apply accuracy drift
//! 7. advance progress by `progress_rate * accuracy` per application
//! 8. check invariants and emit a metrics snapshot
//!
//! Reordering phases changes the golden trace.

mod summary;
mod trace;

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;

pub use summary::{
    completion_curve, write_summary_csv, CurvePoint, MissionSummary, SUMMARY_HEADER,
};
pub use trace::{emit_trace, EventKind, MetricsSnapshot, TraceEvent};

use crate::cluster::{Cluster, UpdateId, UpdateRequest};
use crate::error::{ConfigError, SimError};
use crate::scalar::Scalar;
use crate::schedulers::{dsoc_schedule, greedy_schedule, Strategy, UpdateQueue};
use crate::workload::{
    apply_drift, generate_scenario, sample_update_arrivals, Correlations, ScenarioSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counters {
    pub arrived: u64,
    pub applied: u64,
    pub dropped: u64,
    /// Delay decisions, counted once per round an update is held back.
    pub delayed: u64,
}

/// Complete simulation world; everything a run depends on, including the random stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState<T> {
    /// Index of the next tick to run.
    pub tick: u64,
    pub spec: ScenarioSpec<T>,
    pub cluster: Cluster<T>,
    pub correlations: Correlations<T>,
    pub queue: UpdateQueue<T>,
    /// Assigned updates whose transfer has not finished.
    pub inflight: BTreeMap<UpdateId, UpdateRequest<T>>,
    pub counters: Counters,
    pub mb_transferred: T,
    pub next_update_id: u64,
    /// Tick on which the last application reached its goal.
    pub completion_tick: Option<u64>,
    pub rng: ChaCha8Rng,
}

impl<T: Scalar> SimState<T> {
    pub fn new(
        spec: ScenarioSpec<T>,
        cluster: Cluster<T>,
        correlations: Correlations<T>,
        rng: ChaCha8Rng,
    ) -> Self {
        Self {
            tick: 0,
            spec,
            cluster,
            correlations,
            queue: UpdateQueue::new(),
            inflight: BTreeMap::new(),
            counters: Counters::default(),
            mb_transferred: T::zero(),
            next_update_id: 0,
            completion_tick: None,
            rng,
        }
    }

    pub fn all_goals_reached(&self) -> bool {
        self.cluster.apps().iter().all(|a| a.goal_reached())
    }

    /// Updates still queued or in flight.
    pub fn pending(&self) -> u64 {
        (self.queue.len() + self.inflight.len()) as u64
    }

    pub fn metrics(&self) -> MetricsSnapshot<T> {
        let apps = self.cluster.apps();
        let mean = |f: fn(&crate::cluster::Application<T>) -> T| {
            if apps.is_empty() {
                T::zero()
            } else {
                apps.iter().fold(T::zero(), |acc, a| acc + f(a))
                    / T::from_usize(apps.len()).expect("count fits scalar")
            }
        };
        MetricsSnapshot {
            mean_accuracy: mean(|a| a.accuracy),
            mean_progress: mean(|a| a.progress),
            node_utilization: self.cluster.nodes().iter().map(|n| n.load()).collect(),
            queue_depth: self.queue.len(),
            in_flight: self.inflight.len(),
            updates_applied: self.counters.applied,
            mb_transferred: self.mb_transferred,
        }
    }

    fn cluster_err(&self, source: crate::cluster::ClusterError) -> SimError {
        SimError::Cluster {
            tick: self.tick,
            source,
        }
    }

    fn invariant(&self, detail: impl Into<String>) -> SimError {
        SimError::Invariant {
            tick: self.tick,
            detail: detail.into(),
        }
    }

    /// Runs one tick and returns the events it produced, in emission order.
    pub fn step(&mut self, strategy: Strategy) -> Result<Vec<TraceEvent<T>>, SimError> {
        let tick = self.tick;
        let mut events = Vec::new();
        let mut emit = |kind| events.push(TraceEvent { tick, kind });
        let progress_before: Vec<T> = self.cluster.apps().iter().map(|a| a.progress).collect();

        // 1. arrivals
        for update in sample_update_arrivals(self, tick) {
            emit(EventKind::UpdateArrived {
                update: update.id,
                app: update.app_id,
                node: update.node_id,
                classifier: update.classifier_id,
                delta_mb: update.delta_mb,
                accuracy_gain: update.accuracy_gain,
            });
            self.counters.arrived += 1;
            self.queue
                .push(update)
                .map_err(|e| self.invariant(e.to_string()))?;
        }

        // 2. scheduling
        let thresholds = self.spec.constraint_thresholds();
        let decision = match strategy {
            Strategy::Greedy => greedy_schedule(&self.queue, &self.cluster, &thresholds),
            Strategy::Dsoc => dsoc_schedule(
                &self.queue,
                &self.cluster,
                &self.spec.weight_config(),
                &thresholds,
                &self.spec.priority_thresholds(),
            )?,
        };
        let (assigned, dropped) = self.queue.apply_decision(&decision);
        for update in &dropped {
            emit(EventKind::UpdateDropped {
                update: update.id,
                score: decision.scores.get(&update.id).copied(),
            });
        }
        self.counters.dropped += dropped.len() as u64;
        for id in &decision.delayed {
            emit(EventKind::UpdateDelayed {
                update: *id,
                score: decision.scores.get(id).copied(),
            });
        }
        self.counters.delayed += decision.delayed.len() as u64;

        // 3. start transfers
        for update in assigned {
            let transfer = self
                .cluster
                .begin_transfer(&update)
                .map_err(|e| self.cluster_err(e))?;
            emit(EventKind::UpdateAssigned {
                update: update.id,
                app: update.app_id,
                node: update.node_id,
                rate_mb_per_tick: transfer.rate_mb_per_tick,
                score: decision.scores.get(&update.id).copied(),
            });
            self.inflight.insert(update.id, update);
        }
        self.cluster
            .check_invariants()
            .map_err(|d| self.invariant(d))?;

        // 4. transfers
        let mut completed = Vec::new();
        for node in 0..self.cluster.nodes().len() {
            let node_id = crate::cluster::NodeId(node as u32);
            let (done, moved) = self
                .cluster
                .advance_transfers(node_id, 1)
                .map_err(|e| self.cluster_err(e))?;
            self.mb_transferred = self.mb_transferred + moved;
            completed.extend(done);
        }

        // 5. update effects
        for done in completed {
            let update = self.inflight.remove(&done.update_id).ok_or_else(|| {
                self.invariant(format!("completed {} not in flight", done.update_id))
            })?;
            let app = self
                .cluster
                .app_mut(update.app_id)
                .map_err(|e| SimError::Cluster { tick, source: e })?;
            app.apply_update_effects(&update)
                .map_err(|e| SimError::Cluster { tick, source: e })?;
            let accuracy = app
                .classifier(update.classifier_id)
                .map(|c| c.accuracy)
                .unwrap_or_else(T::zero);
            self.correlations.record_update(update.classifier_id);
            self.counters.applied += 1;
            emit(EventKind::UpdateCompleted {
                update: update.id,
                app: update.app_id,
                classifier: update.classifier_id,
                delta_mb: update.delta_mb,
                classifier_accuracy: accuracy,
            });
        }

        // 6. drift
        apply_drift(self);

        // 7. progress
        let rate = self.spec.progress_rate;
        for app in self.cluster.apps_mut() {
            let was_done = app.goal_reached();
            app.advance_progress(rate * app.accuracy);
            if !was_done && app.goal_reached() {
                emit(EventKind::GoalReached { app: app.id });
            }
        }
        if self.completion_tick.is_none() && self.all_goals_reached() {
            self.completion_tick = Some(tick);
        }

        // 8. invariants and metrics
        self.cluster
            .check_invariants()
            .map_err(|d| self.invariant(d))?;
        for (app, before) in self.cluster.apps().iter().zip(progress_before) {
            if app.progress < before {
                return Err(self.invariant(format!("progress of {} decreased", app.id)));
            }
        }
        let accounted = self.counters.applied + self.counters.dropped + self.pending();
        if accounted != self.counters.arrived {
            return Err(self.invariant(format!(
                "accounting: arrived {} != applied + dropped + pending {}",
                self.counters.arrived, accounted
            )));
        }
        emit(EventKind::TickMetrics(self.metrics()));
        self.tick += 1;
        Ok(events)
    }
}

/// Result of [`run_mission`].
#[derive(Debug, Clone)]
pub struct Mission<T> {
    pub state: SimState<T>,
    pub trace: Vec<TraceEvent<T>>,
    pub summary: MissionSummary<T>,
}

/// Ticks `state` until every application reaches its goal or `max_ticks` ticks have run.
pub fn run_state<T: Scalar>(
    mut state: SimState<T>,
    strategy: Strategy,
    max_ticks: u64,
) -> Result<Mission<T>, SimError> {
    if max_ticks == 0 {
        return Err(ConfigError::Scenario("max_ticks must be at least 1".into()).into());
    }
    let mut trace = Vec::new();
    let start = state.tick;
    while state.tick - start < max_ticks && !state.all_goals_reached() {
        trace.extend(state.step(strategy)?);
    }
    let summary = MissionSummary::from_state(&state, strategy, state.tick - start);
    Ok(Mission {
        state,
        trace,
        summary,
    })
}

pub fn run_mission<T: Scalar>(
    spec: &ScenarioSpec<T>,
    strategy: Strategy,
    max_ticks: u64,
) -> Result<Mission<T>, SimError> {
    if max_ticks == 0 {
        return Err(ConfigError::Scenario("max_ticks must be at least 1".into()).into());
    }
    run_state(generate_scenario(spec)?, strategy, max_ticks)
}
