//! Nodes, applications, classifiers and the in-flight transfers that deliver updates.
//!
//! Node load is split in two: the background `utilization` a node carries regardless of
//! updates, and the load added by every in-flight update. Each in-flight update adds a fixed
//! [`UpdateFootprint`] to cpu, memory and storage, and commits `min_transfer_rate` of the link
//! to the throughput component. The link available to transfers is whatever background
//! traffic leaves free; concurrent transfers split it equally.

use std::fmt;

use thiserror::Error;

use crate::scalar::{clamp_unit, in_unit, Scalar};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $inner:ty, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub $inner);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(
    /// Index of a node in [`Cluster::nodes`].
    NodeId, u32, "n"
);
id_type!(
    /// Index of an application in [`Cluster::apps`].
    AppId, u32, "a"
);
id_type!(
    /// Cluster-wide classifier identifier.
    ClassifierId, u32, "c"
);
id_type!(UpdateId, u64, "u");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown application {0}")]
    UnknownApp(AppId),
    #[error("application {app} has no classifier {classifier}")]
    UnknownClassifier {
        app: AppId,
        classifier: ClassifierId,
    },
    #[error("worker for application {0} is already busy")]
    WorkerBusy(AppId),
    #[error("application {app} is not hosted on node {node}")]
    WrongNode { app: AppId, node: NodeId },
    #[error("node {0} has no link capacity")]
    NoLinkCapacity(NodeId),
    #[error("malformed cluster: {0}")]
    Malformed(String),
}

/// Four system metrics: cpu, memory, storage and link throughput.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResourceVector<T> {
    pub cpu: T,
    pub memory: T,
    pub storage: T,
    pub throughput: T,
}

impl<T: Scalar> ResourceVector<T> {
    pub fn new(cpu: T, memory: T, storage: T, throughput: T) -> Self {
        Self {
            cpu,
            memory,
            storage,
            throughput,
        }
    }

    pub fn splat(v: T) -> Self {
        Self::new(v, v, v, v)
    }

    pub fn zero() -> Self {
        Self::splat(T::zero())
    }

    pub fn from_array([cpu, memory, storage, throughput]: [T; 4]) -> Self {
        Self::new(cpu, memory, storage, throughput)
    }

    pub fn to_array(self) -> [T; 4] {
        [self.cpu, self.memory, self.storage, self.throughput]
    }

    pub fn sum(self) -> T {
        self.cpu + self.memory + self.storage + self.throughput
    }

    pub fn all_in_unit(self) -> bool {
        self.to_array().into_iter().all(in_unit)
    }

    /// Componentwise `self <= other`.
    pub fn all_le(self, other: Self) -> bool {
        self.to_array()
            .into_iter()
            .zip(other.to_array())
            .all(|(a, b)| a <= b)
    }

    /// True when some component of `self` is at or above the matching component of `limits`.
    pub fn any_ge(self, limits: Self) -> bool {
        self.to_array()
            .into_iter()
            .zip(limits.to_array())
            .any(|(a, b)| a >= b)
    }
}

/// Per-update load on the host node while the update's worker is active.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateFootprint<T> {
    pub cpu: T,
    pub memory: T,
    pub storage: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferState<T> {
    pub update_id: UpdateId,
    pub app_id: AppId,
    pub delta_mb: T,
    pub remaining_mb: T,
    pub rate_mb_per_tick: T,
}

/// A transfer that finished during [`Cluster::advance_transfers`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedTransfer<T> {
    pub update_id: UpdateId,
    pub app_id: AppId,
    pub delta_mb: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node<T> {
    pub id: NodeId,
    /// Absolute capacity: cores, MB memory, MB storage, MB per tick of link.
    pub capacity: ResourceVector<T>,
    /// Background utilization as fractions of capacity, excluding update workers.
    pub utilization: ResourceVector<T>,
    pub footprint: UpdateFootprint<T>,
    /// Smallest fair-share rate a transfer may be given.
    pub min_transfer_rate: T,
    transfers: Vec<TransferState<T>>,
}

impl<T: Scalar> Node<T> {
    pub fn new(
        id: NodeId,
        capacity: ResourceVector<T>,
        utilization: ResourceVector<T>,
        footprint: UpdateFootprint<T>,
        min_transfer_rate: T,
    ) -> Self {
        Self {
            id,
            capacity,
            utilization,
            footprint,
            min_transfer_rate,
            transfers: Vec::new(),
        }
    }

    pub fn transfers(&self) -> &[TransferState<T>] {
        &self.transfers
    }

    /// Link bandwidth left over by background traffic, in MB per tick.
    pub fn link_available(&self) -> T {
        self.capacity.throughput * (T::one() - self.utilization.throughput)
    }

    /// Node load with the current transfers plus `extra` hypothetical ones.
    pub fn load_with(&self, extra: usize) -> ResourceVector<T> {
        let n = T::from_usize(self.transfers.len() + extra).expect("count fits scalar");
        let link_committed = if self.capacity.throughput > T::zero() {
            n * self.min_transfer_rate / self.capacity.throughput
        } else if n > T::zero() {
            T::infinity()
        } else {
            T::zero()
        };
        ResourceVector {
            cpu: self.utilization.cpu + n * self.footprint.cpu,
            memory: self.utilization.memory + n * self.footprint.memory,
            storage: self.utilization.storage + n * self.footprint.storage,
            throughput: self.utilization.throughput + link_committed,
        }
    }

    pub fn load(&self) -> ResourceVector<T> {
        self.load_with(0)
    }

    /// One more transfer (beyond `extra` pending ones) would get less than the minimum rate.
    pub fn link_saturated_with(&self, extra: usize) -> bool {
        self.capacity.throughput <= T::zero()
            || self.load_with(extra + 1).throughput > T::one() + T::sum_tolerance()
    }

    pub fn link_saturated(&self) -> bool {
        self.link_saturated_with(0)
    }

    /// Constrained check against a hypothetical state with `extra` additional transfers.
    pub fn is_constrained_with(&self, thresholds: &ResourceVector<T>, extra: usize) -> bool {
        self.load_with(extra).any_ge(*thresholds) || self.link_saturated_with(extra)
    }

    /// True iff some load component is at or above its threshold, or the link cannot take
    /// another transfer at the minimum rate.
    pub fn is_constrained(&self, thresholds: &ResourceVector<T>) -> bool {
        self.is_constrained_with(thresholds, 0)
    }

    /// Whether one more update can start given `extra` already admitted this round: the node
    /// must be unconstrained beforehand and every load component must stay within 1 after.
    pub fn can_admit_with(&self, thresholds: &ResourceVector<T>, extra: usize) -> bool {
        !self.is_constrained_with(thresholds, extra)
            && self
                .load_with(extra + 1)
                .all_le(ResourceVector::splat(T::one() + T::sum_tolerance()))
    }

    pub fn total_rate(&self) -> T {
        self.transfers
            .iter()
            .fold(T::zero(), |acc, t| acc + t.rate_mb_per_tick)
    }

    fn reshare(&mut self) {
        if self.transfers.is_empty() {
            return;
        }
        let n = T::from_usize(self.transfers.len()).expect("count fits scalar");
        let rate = self.link_available() / n;
        for t in &mut self.transfers {
            t.rate_mb_per_tick = rate;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier<T> {
    pub id: ClassifierId,
    pub version: u32,
    pub accuracy: T,
    pub size_mb: T,
    pub frequent_update: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Application<T> {
    pub id: AppId,
    pub node_id: NodeId,
    pub classifiers: Vec<Classifier<T>>,
    /// Mean of classifier accuracies.
    pub accuracy: T,
    pub progress: T,
    pub latency_ms: T,
    pub exec_time_ms: T,
    pub worker_busy: bool,
}

impl<T: Scalar> Application<T> {
    pub fn new(
        id: AppId,
        node_id: NodeId,
        classifiers: Vec<Classifier<T>>,
        latency_ms: T,
        exec_time_ms: T,
    ) -> Self {
        let mut app = Self {
            id,
            node_id,
            classifiers,
            accuracy: T::zero(),
            progress: T::zero(),
            latency_ms,
            exec_time_ms,
            worker_busy: false,
        };
        app.recompute_accuracy();
        app
    }

    pub fn recompute_accuracy(&mut self) {
        self.accuracy = if self.classifiers.is_empty() {
            T::zero()
        } else {
            let sum = self
                .classifiers
                .iter()
                .fold(T::zero(), |acc, c| acc + c.accuracy);
            sum / T::from_usize(self.classifiers.len()).expect("count fits scalar")
        };
    }

    pub fn classifier(&self, id: ClassifierId) -> Option<&Classifier<T>> {
        self.classifiers.iter().find(|c| c.id == id)
    }

    /// Applies a delivered update: raises the target classifier's accuracy (capped at 1),
    /// bumps its version, and scales latency and execution time down.
    pub fn apply_update_effects(&mut self, update: &UpdateRequest<T>) -> Result<(), ClusterError> {
        let app = self.id;
        let classifier = self
            .classifiers
            .iter_mut()
            .find(|c| c.id == update.classifier_id)
            .ok_or(ClusterError::UnknownClassifier {
                app,
                classifier: update.classifier_id,
            })?;
        classifier.accuracy = (classifier.accuracy + update.accuracy_gain).min(T::one());
        classifier.version += 1;
        self.recompute_accuracy();
        self.latency_ms = self.latency_ms * (T::one() - update.latency_reduction);
        self.exec_time_ms = self.exec_time_ms * (T::one() - update.exec_reduction);
        Ok(())
    }

    /// Adds `amount` to progress, snapping onto 1 when within tolerance.
    pub fn advance_progress(&mut self, amount: T) {
        let next = self.progress + amount;
        self.progress = if next >= T::one() - T::snap_tolerance() {
            T::one()
        } else {
            clamp_unit(next)
        };
    }

    pub fn goal_reached(&self) -> bool {
        self.progress >= T::one()
    }
}

/// A pending code or model update for one classifier of one application.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRequest<T> {
    pub id: UpdateId,
    pub app_id: AppId,
    pub node_id: NodeId,
    pub classifier_id: ClassifierId,
    pub delta_mb: T,
    pub accuracy_gain: T,
    pub latency_reduction: T,
    pub exec_reduction: T,
    pub arrival_tick: u64,
    pub correlated_with: Vec<UpdateId>,
}

impl<T: Scalar> UpdateRequest<T> {
    pub fn validate(&self) -> Result<(), String> {
        if self.delta_mb.is_nan() || self.delta_mb < T::zero() {
            return Err(format!("{}: negative delta_mb", self.id));
        }
        for (name, v) in [
            ("accuracy_gain", self.accuracy_gain),
            ("latency_reduction", self.latency_reduction),
            ("exec_reduction", self.exec_reduction),
        ] {
            if !in_unit(v) {
                return Err(format!("{}: {name} outside [0,1]", self.id));
            }
        }
        Ok(())
    }
}

/// Nodes and applications, indexed by their ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<T> {
    nodes: Vec<Node<T>>,
    apps: Vec<Application<T>>,
}

impl<T: Scalar> Cluster<T> {
    /// Ids must equal positions, every application must sit on an existing node, and
    /// classifier ids must be unique cluster-wide.
    pub fn new(nodes: Vec<Node<T>>, apps: Vec<Application<T>>) -> Result<Self, ClusterError> {
        for (i, n) in nodes.iter().enumerate() {
            if n.id.0 as usize != i {
                return Err(ClusterError::Malformed(format!(
                    "node {} at index {i}",
                    n.id
                )));
            }
            if !n.utilization.all_in_unit() {
                return Err(ClusterError::Malformed(format!(
                    "node {} utilization outside [0,1]",
                    n.id
                )));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, a) in apps.iter().enumerate() {
            if a.id.0 as usize != i {
                return Err(ClusterError::Malformed(format!(
                    "app {} at index {i}",
                    a.id
                )));
            }
            if a.node_id.0 as usize >= nodes.len() {
                return Err(ClusterError::UnknownNode(a.node_id));
            }
            for c in &a.classifiers {
                if !seen.insert(c.id) {
                    return Err(ClusterError::Malformed(format!(
                        "duplicate classifier {}",
                        c.id
                    )));
                }
            }
        }
        Ok(Self { nodes, apps })
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn apps(&self) -> &[Application<T>] {
        &self.apps
    }

    pub fn apps_mut(&mut self) -> &mut [Application<T>] {
        &mut self.apps
    }

    pub fn node(&self, id: NodeId) -> Result<&Node<T>, ClusterError> {
        self.nodes
            .get(id.0 as usize)
            .ok_or(ClusterError::UnknownNode(id))
    }

    pub fn app(&self, id: AppId) -> Result<&Application<T>, ClusterError> {
        self.apps
            .get(id.0 as usize)
            .ok_or(ClusterError::UnknownApp(id))
    }

    pub fn app_mut(&mut self, id: AppId) -> Result<&mut Application<T>, ClusterError> {
        self.apps
            .get_mut(id.0 as usize)
            .ok_or(ClusterError::UnknownApp(id))
    }

    /// Registers a transfer for `update` on its node and marks the application's worker busy.
    /// All transfers on the node are re-shared equally afterwards.
    pub fn begin_transfer(
        &mut self,
        update: &UpdateRequest<T>,
    ) -> Result<TransferState<T>, ClusterError> {
        let node_idx = update.node_id.0 as usize;
        let app_idx = update.app_id.0 as usize;
        let node = self
            .nodes
            .get_mut(node_idx)
            .ok_or(ClusterError::UnknownNode(update.node_id))?;
        let app = self
            .apps
            .get_mut(app_idx)
            .ok_or(ClusterError::UnknownApp(update.app_id))?;
        if app.node_id != node.id {
            return Err(ClusterError::WrongNode {
                app: app.id,
                node: node.id,
            });
        }
        if app.worker_busy {
            return Err(ClusterError::WorkerBusy(app.id));
        }
        if node.link_available() <= T::zero() {
            return Err(ClusterError::NoLinkCapacity(node.id));
        }
        app.worker_busy = true;
        node.transfers.push(TransferState {
            update_id: update.id,
            app_id: app.id,
            delta_mb: update.delta_mb,
            remaining_mb: update.delta_mb,
            rate_mb_per_tick: T::zero(),
        });
        node.reshare();
        Ok(node.transfers.last().cloned().expect("just pushed"))
    }

    /// Moves every transfer on `node` forward by `ticks` at its current rate. Finished
    /// transfers are removed, their workers freed, and the link re-shared. Returns the
    /// finished transfers in registration order together with the megabytes moved.
    pub fn advance_transfers(
        &mut self,
        node: NodeId,
        ticks: u32,
    ) -> Result<(Vec<CompletedTransfer<T>>, T), ClusterError> {
        let node = self
            .nodes
            .get_mut(node.0 as usize)
            .ok_or(ClusterError::UnknownNode(node))?;
        let span = T::from_u32(ticks).expect("ticks fit scalar");
        let mut moved = T::zero();
        let mut completed = Vec::new();
        for t in &mut node.transfers {
            let step = (t.rate_mb_per_tick * span).min(t.remaining_mb);
            t.remaining_mb = t.remaining_mb - step;
            moved = moved + step;
            if t.remaining_mb <= T::snap_tolerance() {
                moved = moved + t.remaining_mb;
                t.remaining_mb = T::zero();
                completed.push(CompletedTransfer {
                    update_id: t.update_id,
                    app_id: t.app_id,
                    delta_mb: t.delta_mb,
                });
            }
        }
        if completed.is_empty() {
            return Ok((completed, moved));
        }
        node.transfers.retain(|t| t.remaining_mb > T::zero());
        node.reshare();
        for c in &completed {
            let app = self
                .apps
                .get_mut(c.app_id.0 as usize)
                .ok_or(ClusterError::UnknownApp(c.app_id))?;
            app.worker_busy = false;
        }
        Ok((completed, moved))
    }

    /// Checks resource safety and worker exclusivity; returns a description of the first
    /// breach.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut busy_refs = vec![0usize; self.apps.len()];
        for node in &self.nodes {
            let load = node.load();
            if !load.all_le(ResourceVector::splat(T::one() + T::sum_tolerance())) {
                return Err(format!(
                    "node {} load exceeds capacity: {:?}",
                    node.id, load
                ));
            }
            if node.total_rate() > node.capacity.throughput * (T::one() + T::sum_tolerance()) {
                return Err(format!(
                    "node {} transfer rates exceed link capacity",
                    node.id
                ));
            }
            for t in &node.transfers {
                if t.remaining_mb < T::zero() {
                    return Err(format!("transfer {} has negative remaining", t.update_id));
                }
                let app = self
                    .apps
                    .get(t.app_id.0 as usize)
                    .ok_or_else(|| format!("transfer {} for unknown app", t.update_id))?;
                if app.node_id != node.id {
                    return Err(format!("transfer {} on wrong node", t.update_id));
                }
                busy_refs[t.app_id.0 as usize] += 1;
            }
        }
        for (app, refs) in self.apps.iter().zip(busy_refs) {
            if refs > 1 {
                return Err(format!("app {} has {refs} concurrent updates", app.id));
            }
            if app.worker_busy != (refs == 1) {
                return Err(format!("app {} worker flag out of sync", app.id));
            }
            if !in_unit(app.accuracy) || !in_unit(app.progress) {
                return Err(format!("app {} accuracy/progress outside [0,1]", app.id));
            }
            if app.classifiers.iter().any(|c| !in_unit(c.accuracy)) {
                return Err(format!("app {} classifier accuracy outside [0,1]", app.id));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn node(id: u32, link: f64, utilization: [f64; 4], min_rate: f64) -> Node<f64> {
        Node::new(
            NodeId(id),
            ResourceVector::new(8.0, 16384.0, 65536.0, link),
            ResourceVector::from_array(utilization),
            UpdateFootprint::default(),
            min_rate,
        )
    }

    pub fn app(id: u32, node: u32, accuracies: &[f64]) -> Application<f64> {
        let classifiers = accuracies
            .iter()
            .enumerate()
            .map(|(i, &a)| Classifier {
                id: ClassifierId(id * 100 + i as u32),
                version: 0,
                accuracy: a,
                size_mb: 10.0,
                frequent_update: false,
            })
            .collect();
        Application::new(AppId(id), NodeId(node), classifiers, 100.0, 200.0)
    }

    pub fn update(id: u64, app: u32, node: u32, delta_mb: f64) -> UpdateRequest<f64> {
        UpdateRequest {
            id: UpdateId(id),
            app_id: AppId(app),
            node_id: NodeId(node),
            classifier_id: ClassifierId(app * 100),
            delta_mb,
            accuracy_gain: 0.1,
            latency_reduction: 0.0,
            exec_reduction: 0.0,
            arrival_tick: 0,
            correlated_with: Vec::new(),
        }
    }
}
