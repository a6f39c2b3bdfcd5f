//! Scenario generation, update arrivals, accuracy drift and correlated-update coupling.

mod scenario;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

pub use scenario::{ceil_share, ScenarioSpec, CLASSIFIER_RANGE};

use crate::cluster::{
    AppId, Application, Classifier, ClassifierId, Cluster, Node, NodeId, ResourceVector, UpdateId,
    UpdateRequest,
};
use crate::engine::SimState;
use crate::error::ConfigError;
use crate::scalar::Scalar;

/// Classifiers whose accuracy depends on each other. When one member is updated the others
/// drift faster until they are updated too.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGroup<T> {
    pub members: Vec<ClassifierId>,
    pub penalty_multiplier: T,
}

/// Correlation groups plus the set of members currently lagging a partner's update.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlations<T> {
    groups: Vec<CorrelationGroup<T>>,
    group_of: BTreeMap<ClassifierId, usize>,
    out_of_sync: BTreeSet<ClassifierId>,
}

impl<T: Scalar> Default for Correlations<T> {
    fn default() -> Self {
        Self {
            groups: Vec::new(),
            group_of: BTreeMap::new(),
            out_of_sync: BTreeSet::new(),
        }
    }
}

impl<T: Scalar> Correlations<T> {
    /// Groups must be disjoint, have at least two members, and a multiplier of at least 1.
    pub fn new(groups: Vec<CorrelationGroup<T>>) -> Result<Self, ConfigError> {
        let mut group_of = BTreeMap::new();
        for (gi, g) in groups.iter().enumerate() {
            if g.members.len() < 2 {
                return Err(ConfigError::Scenario(
                    "correlation group smaller than 2".into(),
                ));
            }
            if g.penalty_multiplier.is_nan() || g.penalty_multiplier < T::one() {
                return Err(ConfigError::Scenario("correlation penalty below 1".into()));
            }
            for &m in &g.members {
                if group_of.insert(m, gi).is_some() {
                    return Err(ConfigError::Scenario(format!(
                        "classifier {m} in two groups"
                    )));
                }
            }
        }
        Ok(Self {
            groups,
            group_of,
            out_of_sync: BTreeSet::new(),
        })
    }

    pub fn groups(&self) -> &[CorrelationGroup<T>] {
        &self.groups
    }

    pub fn partners(&self, id: ClassifierId) -> impl Iterator<Item = ClassifierId> + '_ {
        self.group_of
            .get(&id)
            .map(|&g| self.groups[g].members.as_slice())
            .unwrap_or_default()
            .iter()
            .copied()
            .filter(move |&m| m != id)
    }

    pub fn is_out_of_sync(&self, id: ClassifierId) -> bool {
        self.out_of_sync.contains(&id)
    }

    /// Drift multiplier for a lagging member, `None` when the classifier is in sync.
    pub fn penalty(&self, id: ClassifierId) -> Option<T> {
        if !self.out_of_sync.contains(&id) {
            return None;
        }
        self.group_of
            .get(&id)
            .map(|&g| self.groups[g].penalty_multiplier)
    }

    /// An update to a lagging member brings it back in sync; an update to an in-sync member
    /// leaves its partners lagging.
    pub fn record_update(&mut self, id: ClassifierId) {
        if !self.group_of.contains_key(&id) {
            return;
        }
        if !self.out_of_sync.remove(&id) {
            let partners: Vec<_> = self.partners(id).collect();
            self.out_of_sync.extend(partners);
        }
    }
}

fn uniform<T: Scalar, R: Rng>(rng: &mut R, [lo, hi]: [T; 2]) -> T {
    let u: f64 = rng.random();
    lo + (hi - lo) * T::lit(u)
}

/// Builds the initial simulation state. Deterministic in `spec.seed`.
pub fn generate_scenario<T: Scalar>(spec: &ScenarioSpec<T>) -> Result<SimState<T>, ConfigError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let footprint = spec.footprint();

    let nodes: Vec<Node<T>> = (0..spec.node_count)
        .map(|i| {
            let mut bg = || uniform(&mut rng, spec.background_utilization_range);
            let utilization = ResourceVector::new(bg(), bg(), bg(), bg());
            Node::new(
                NodeId(i),
                ResourceVector::new(
                    spec.node_cpu_cores,
                    spec.node_memory_mb,
                    spec.node_storage_mb,
                    spec.link_mb_per_tick,
                ),
                utilization,
                footprint,
                spec.min_transfer_rate,
            )
        })
        .collect();

    let total = spec.classifier_total as usize;
    let mut frequent = vec![false; total];
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    for &i in &order[..spec.frequent_count() as usize] {
        frequent[i] = true;
    }

    let apps_n = spec.app_count as usize;
    let mut per_app: Vec<Vec<Classifier<T>>> = vec![Vec::new(); apps_n];
    for (c, &is_frequent) in frequent.iter().enumerate() {
        // First pass is strict round-robin so every application gets a classifier.
        let target = if c < apps_n {
            c
        } else {
            (c + rng.random_range(0..=1usize)) % apps_n
        };
        per_app[target].push(Classifier {
            id: ClassifierId(c as u32),
            version: 0,
            accuracy: uniform(&mut rng, spec.initial_accuracy_range),
            size_mb: uniform(&mut rng, spec.classifier_size_mb_range),
            frequent_update: is_frequent,
        });
    }
    let apps: Vec<Application<T>> = per_app
        .into_iter()
        .enumerate()
        .map(|(j, classifiers)| {
            let latency = uniform(&mut rng, spec.latency_ms_range);
            let exec = uniform(&mut rng, spec.exec_time_ms_range);
            Application::new(
                AppId(j as u32),
                NodeId(j as u32 % spec.node_count),
                classifiers,
                latency,
                exec,
            )
        })
        .collect();

    let mut order: Vec<u32> = (0..spec.classifier_total).collect();
    order.shuffle(&mut rng);
    let covered = &order[..spec.correlated_count() as usize];
    let mut groups: Vec<CorrelationGroup<T>> = covered
        .chunks(2)
        .map(|pair| CorrelationGroup {
            members: pair.iter().map(|&c| ClassifierId(c)).collect(),
            penalty_multiplier: spec.correlation_penalty,
        })
        .collect();
    if let Some(lone) = groups.pop_if(|g| g.members.len() == 1) {
        let lone = lone.members[0];
        groups
            .last_mut()
            .ok_or_else(|| ConfigError::Scenario("cannot pair a single classifier".into()))?
            .members
            .push(lone);
    }

    let cluster = Cluster::new(nodes, apps).map_err(|e| ConfigError::Scenario(e.to_string()))?;
    Ok(SimState::new(
        spec.clone(),
        cluster,
        Correlations::new(groups)?,
        rng,
    ))
}

/// Draws this tick's update requests. The count is Poisson with mean `arrival_rate`; targets
/// are chosen with frequent-update classifiers `frequent_weight` times more likely.
pub fn sample_update_arrivals<T: Scalar>(
    state: &mut SimState<T>,
    tick: u64,
) -> Vec<UpdateRequest<T>> {
    let spec = &state.spec;
    let rate = spec.arrival_rate.to_f64_lossless();
    let targets: Vec<(&Application<T>, &Classifier<T>)> = state
        .cluster
        .apps()
        .iter()
        .flat_map(|a| a.classifiers.iter().map(move |c| (a, c)))
        .collect();
    if rate <= 0.0 || targets.is_empty() {
        return Vec::new();
    }
    let rng = &mut state.rng;
    let count = Poisson::new(rate)
        .expect("positive finite rate")
        .sample(rng) as u64;
    if count == 0 {
        return Vec::new();
    }
    let heavy = spec.frequent_weight.to_f64_lossless();
    let cumulative: Vec<f64> = targets
        .iter()
        .scan(0.0, |acc, (_, c)| {
            *acc += if c.frequent_update { heavy } else { 1.0 };
            Some(*acc)
        })
        .collect();
    let total_weight = *cumulative.last().expect("non-empty");

    let mut out: Vec<UpdateRequest<T>> = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let x = rng.random::<f64>() * total_weight;
        let idx = cumulative
            .partition_point(|&c| c <= x)
            .min(targets.len() - 1);
        let (app, classifier) = targets[idx];
        let gain = uniform(rng, spec.accuracy_gain_range);
        let delta = uniform(rng, spec.delta_mb_range);
        let latency = uniform(rng, [T::zero(), spec.reduction_max]);
        let exec = uniform(rng, [T::zero(), spec.reduction_max]);
        let partners: BTreeSet<ClassifierId> = state.correlations.partners(classifier.id).collect();
        let correlated_with: Vec<UpdateId> = state
            .queue
            .iter()
            .chain(out.iter())
            .filter(|r| partners.contains(&r.classifier_id))
            .map(|r| r.id)
            .collect();
        out.push(UpdateRequest {
            id: UpdateId(state.next_update_id),
            app_id: app.id,
            node_id: app.node_id,
            classifier_id: classifier.id,
            delta_mb: delta,
            accuracy_gain: gain,
            latency_reduction: latency,
            exec_reduction: exec,
            arrival_tick: tick,
            correlated_with,
        });
        state.next_update_id += 1;
    }
    out
}

/// One tick of accuracy decay. Frequent-update classifiers lose `drift_per_tick`; members
/// lagging a partner's update lose `drift_per_tick * penalty` whether frequent or not.
/// Nothing is pushed below `accuracy_floor`.
pub fn apply_drift<T: Scalar>(state: &mut SimState<T>) {
    let drift = state.spec.drift_per_tick;
    let floor = state.spec.accuracy_floor;
    if drift <= T::zero() {
        return;
    }
    let correlations = &state.correlations;
    for app in state.cluster.apps_mut() {
        let mut changed = false;
        for c in &mut app.classifiers {
            let loss = match correlations.penalty(c.id) {
                Some(p) => drift * p,
                None if c.frequent_update => drift,
                None => continue,
            };
            if c.accuracy > floor {
                c.accuracy = (c.accuracy - loss).max(floor);
                changed = true;
            }
        }
        if changed {
            app.recompute_accuracy();
        }
    }
}
