#![allow(dead_code)]

use patchsim_core::cluster::{Classifier, UpdateFootprint};
use patchsim_core::priority::AppWeights;
use patchsim_core::schedulers::is_feasible_set;
use patchsim_core::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Rv = ResourceVector<f64>;

/// A random scheduling round: cluster with some workers already busy, plus a queue.
pub struct Instance {
    pub cluster: Cluster64,
    pub queue: UpdateQueue<f64>,
    pub thresholds: Rv,
    pub weights: WeightConfig64,
    pub priority: PriorityThresholds<f64>,
}

pub fn unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>()
}

pub fn between(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

pub fn simplex4(rng: &mut ChaCha8Rng) -> [f64; 4] {
    let raw: [f64; 4] = std::array::from_fn(|_| unit(rng) + 1e-3);
    let sum: f64 = raw.iter().sum();
    let mut w = raw.map(|v| v / sum);
    // put the rounding residue on the last weight so the sum is 1 to within an ulp
    w[3] = 1.0 - (w[0] + w[1] + w[2]);
    w
}

pub fn random_weights(rng: &mut ChaCha8Rng) -> WeightConfig64 {
    let c1 = between(rng, 0.0, 0.5);
    WeightConfig {
        c1,
        c2: 1.0 - c1,
        s_weight: ResourceVector::from_array(simplex4(rng)),
        a_weight: AppWeights::from_array(simplex4(rng)),
        relax_ordering: false,
    }
}

pub fn random_priority_thresholds(rng: &mut ChaCha8Rng) -> PriorityThresholds<f64> {
    let mut cuts = [
        between(rng, 0.05, 0.95),
        between(rng, 0.05, 0.95),
        between(rng, 0.05, 0.95),
    ];
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if cuts[0] < cuts[1] && cuts[1] < cuts[2] {
        PriorityThresholds {
            blue_min: cuts[0],
            yellow_min: cuts[1],
            green_min: cuts[2],
        }
    } else {
        PriorityThresholds::default()
    }
}

pub fn random_node(rng: &mut ChaCha8Rng, id: u32) -> Node64 {
    Node::new(
        NodeId(id),
        ResourceVector::new(8.0, 16384.0, 65536.0, between(rng, 5.0, 40.0)),
        ResourceVector::from_array(std::array::from_fn(|_| between(rng, 0.0, 0.75))),
        UpdateFootprint {
            cpu: between(rng, 0.0, 0.15),
            memory: between(rng, 0.0, 0.15),
            storage: between(rng, 0.0, 0.1),
        },
        between(rng, 1.0, 15.0),
    )
}

pub fn random_update(
    rng: &mut ChaCha8Rng,
    id: u64,
    app: &Application64,
    tick: u64,
) -> UpdateRequest64 {
    let classifier = app.classifiers[rng.random_range(0..app.classifiers.len())].id;
    UpdateRequest {
        id: UpdateId(id),
        app_id: app.id,
        node_id: app.node_id,
        classifier_id: classifier,
        delta_mb: between(rng, 0.0, 50.0),
        accuracy_gain: unit(rng),
        latency_reduction: unit(rng),
        exec_reduction: unit(rng),
        arrival_tick: tick,
        correlated_with: Vec::new(),
    }
}

/// At most `max_nodes` nodes and `max_updates` queued updates.
pub fn micro_instance(rng: &mut ChaCha8Rng, max_nodes: u32, max_updates: usize) -> Instance {
    let node_n = rng.random_range(1..=max_nodes);
    let nodes: Vec<Node64> = (0..node_n).map(|i| random_node(rng, i)).collect();
    let app_n = rng.random_range(1..=5u32);
    let mut next_classifier = 0;
    let apps: Vec<Application64> = (0..app_n)
        .map(|j| {
            let classifiers = (0..rng.random_range(1..=3))
                .map(|_| {
                    next_classifier += 1;
                    Classifier {
                        id: ClassifierId(next_classifier),
                        version: 0,
                        accuracy: unit(rng),
                        size_mb: 10.0,
                        frequent_update: false,
                    }
                })
                .collect();
            let mut app = Application::new(
                AppId(j),
                NodeId(rng.random_range(0..node_n)),
                classifiers,
                100.0,
                100.0,
            );
            app.progress = unit(rng);
            app
        })
        .collect();
    let mut cluster = Cluster::new(nodes, apps).unwrap();
    let thresholds = ResourceVector::from_array(std::array::from_fn(|_| between(rng, 0.6, 1.0)));

    // some workers already busy with transfers the node can hold
    let mut id = 1000;
    for j in 0..app_n {
        if unit(rng) < 0.3 {
            let app = cluster.app(AppId(j)).unwrap().clone();
            let node = cluster.node(app.node_id).unwrap();
            if node.load_with(1).all_le(ResourceVector::splat(1.0)) && !node.link_saturated() {
                let u = random_update(rng, id, &app, 0);
                cluster.begin_transfer(&u).unwrap();
                id += 1;
            }
        }
    }

    let mut queue = UpdateQueue::new();
    for i in 0..rng.random_range(0..=max_updates) {
        let app = cluster
            .app(AppId(rng.random_range(0..app_n)))
            .unwrap()
            .clone();
        queue
            .push(random_update(rng, i as u64, &app, i as u64 / 3))
            .unwrap();
    }
    Instance {
        cluster,
        queue,
        thresholds,
        weights: random_weights(rng),
        priority: random_priority_thresholds(rng),
    }
}

pub fn pick<'a>(queue: &'a UpdateQueue<f64>, ids: &[UpdateId]) -> Vec<&'a UpdateRequest64> {
    ids.iter()
        .map(|id| queue.get(*id).expect("queued"))
        .collect()
}

/// Some maximal set from the exhaustive oracle contains `assigned`.
pub fn oracle_admits(inst: &Instance, assigned: &[UpdateId]) -> bool {
    let sets = oracle_max_feasible(inst.queue.as_slice(), &inst.cluster, &inst.thresholds).unwrap();
    is_feasible_set(
        &pick(&inst.queue, assigned),
        &inst.cluster,
        &inst.thresholds,
    ) && sets.iter().any(|s| assigned.iter().all(|a| s.contains(a)))
}

/// No delayed update can join the assigned set.
pub fn locally_maximal(inst: &Instance, decision: &ScheduleDecision<f64>) -> bool {
    decision.delayed.iter().all(|id| {
        let mut ids = decision.assigned.clone();
        ids.push(*id);
        !is_feasible_set(&pick(&inst.queue, &ids), &inst.cluster, &inst.thresholds)
    })
}

/// Per-trace resource-safety check: no node load component above 1, no application with
/// two overlapping updates. Returns the first violation.
pub fn trace_safety(trace: &[TraceEvent64]) -> Result<(), String> {
    let mut open = std::collections::BTreeSet::new();
    for e in trace {
        match &e.kind {
            EventKind::UpdateAssigned { app, update, .. } => {
                if !open.insert(*app) {
                    return Err(format!("tick {}: {update} overlaps on {app}", e.tick));
                }
            }
            EventKind::UpdateCompleted { app, .. } => {
                open.remove(app);
            }
            EventKind::TickMetrics(m) => {
                for u in &m.node_utilization {
                    if !u.all_le(ResourceVector::splat(1.0)) {
                        return Err(format!("tick {}: load {:?} above 1", e.tick, u));
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn closure_holds(s: &MissionSummary<f64>) -> bool {
    s.arrived == s.applied + s.dropped + s.pending
}
