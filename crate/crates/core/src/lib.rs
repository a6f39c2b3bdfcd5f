//! Deterministic simulation of classifier-update orchestration on edge clusters.
//!
//! Applications on a small cluster run classifiers whose accuracy drifts; updates arrive
//! over time and compete for node resources and link bandwidth. Two strategies pick which
//! updates to start each tick:
//!
//! * **greedy**: FIFO, start anything whose node is unconstrained and whose worker is free;
//! * **dsoc**: score each update from node headroom and application benefit, drop the
//!   low-value (Red) ones, and start the rest by priority class.
//!
//! Numeric types are generic over [`Scalar`] (`f32` or `f64`). The `*64` / `*32` aliases
//! below fix the precision.

pub mod cluster;
pub mod engine;
pub mod error;
pub mod priority;
pub mod scalar;
pub mod schedulers;
pub mod workload;

pub use cluster::{
    AppId, Application, Classifier, ClassifierId, Cluster, ClusterError, Node, NodeId,
    ResourceVector, TransferState, UpdateFootprint, UpdateId, UpdateRequest,
};
pub use engine::{
    completion_curve, emit_trace, run_mission, run_state, write_summary_csv, EventKind,
    MetricsSnapshot, Mission, MissionSummary, SimState, TraceEvent, SUMMARY_HEADER,
};
pub use error::{ConfigError, SimError};
pub use priority::{
    assign_priority, classify_pval, compute_ap, compute_sp, PriorityClass, PriorityScore,
    PriorityThresholds, WeightConfig,
};
pub use scalar::Scalar;
pub use schedulers::{
    compute_k, dsoc_schedule, greedy_schedule, oracle_max_feasible, ScheduleDecision, Strategy,
    UpdateQueue,
};
pub use workload::{generate_scenario, CorrelationGroup, ScenarioSpec};

pub type ScenarioSpec64 = ScenarioSpec<f64>;
pub type ScenarioSpec32 = ScenarioSpec<f32>;
pub type SimState64 = SimState<f64>;
pub type SimState32 = SimState<f32>;
pub type Cluster64 = Cluster<f64>;
pub type Cluster32 = Cluster<f32>;
pub type Node64 = Node<f64>;
pub type Node32 = Node<f32>;
pub type Application64 = Application<f64>;
pub type Application32 = Application<f32>;
pub type UpdateRequest64 = UpdateRequest<f64>;
pub type UpdateRequest32 = UpdateRequest<f32>;
pub type WeightConfig64 = WeightConfig<f64>;
pub type WeightConfig32 = WeightConfig<f32>;
pub type PriorityScore64 = PriorityScore<f64>;
pub type PriorityScore32 = PriorityScore<f32>;
pub type Mission64 = Mission<f64>;
pub type Mission32 = Mission<f32>;
pub type TraceEvent64 = TraceEvent<f64>;
pub type TraceEvent32 = TraceEvent<f32>;
