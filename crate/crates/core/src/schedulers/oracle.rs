//! Exhaustive reference for the admission rule, used by tests.
//!
//! Feasibility here is judged per set rather than per step: for each node, the set's
//! updates are actually started on a scratch copy of the cluster and the resulting state is
//! inspected.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::cluster::{Cluster, NodeId, ResourceVector, UpdateId, UpdateRequest};
use crate::scalar::Scalar;

pub const ORACLE_MAX_CANDIDATES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{0} candidates exceed the exhaustive-search cap of {ORACLE_MAX_CANDIDATES}")]
    TooLarge(usize),
}

/// Whether every update in `subset` can run concurrently on top of the cluster's current
/// transfers. Per node with `c` chosen updates: all target applications are distinct, idle
/// and hosted there; with the first `c - 1` started the node is still unconstrained; and
/// with all `c` started no load component exceeds capacity.
pub fn is_feasible_set<T: Scalar>(
    subset: &[&UpdateRequest<T>],
    cluster: &Cluster<T>,
    thresholds: &ResourceVector<T>,
) -> bool {
    let mut by_node: BTreeMap<NodeId, Vec<&UpdateRequest<T>>> = BTreeMap::new();
    let mut apps = BTreeSet::new();
    for u in subset {
        if !apps.insert(u.app_id) {
            return false;
        }
        match cluster.app(u.app_id) {
            Ok(app) if app.node_id == u.node_id && !app.worker_busy => {}
            _ => return false,
        }
        by_node.entry(u.node_id).or_default().push(u);
    }
    let ceiling = ResourceVector::splat(T::one() + T::sum_tolerance());
    by_node.into_iter().all(|(node_id, updates)| {
        let mut scratch = cluster.clone();
        let (last, rest) = updates.split_last().expect("non-empty group");
        for u in rest {
            if scratch.begin_transfer(u).is_err() {
                return false;
            }
        }
        let node = scratch.node(node_id).expect("node exists");
        if node.is_constrained(thresholds) {
            return false;
        }
        if scratch.begin_transfer(last).is_err() {
            return false;
        }
        scratch
            .node(node_id)
            .expect("node exists")
            .load()
            .all_le(ceiling)
    })
}

/// All feasible subsets of `candidates` that cannot be extended by another candidate.
/// Each subset lists ids in candidate order; subsets are ordered by their bitmask.
pub fn oracle_max_feasible<T: Scalar>(
    candidates: &[UpdateRequest<T>],
    cluster: &Cluster<T>,
    thresholds: &ResourceVector<T>,
) -> Result<Vec<Vec<UpdateId>>, OracleError> {
    let n = candidates.len();
    if n > ORACLE_MAX_CANDIDATES {
        return Err(OracleError::TooLarge(n));
    }
    let pick = |mask: u32| -> Vec<&UpdateRequest<T>> {
        (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| &candidates[i])
            .collect()
    };
    let feasible: Vec<bool> = (0..1u32 << n)
        .map(|mask| is_feasible_set(&pick(mask), cluster, thresholds))
        .collect();
    Ok((0..1u32 << n)
        .filter(|&mask| feasible[mask as usize])
        .filter(|&mask| (0..n).all(|i| mask & (1 << i) != 0 || !feasible[(mask | 1 << i) as usize]))
        .map(|mask| pick(mask).into_iter().map(|u| u.id).collect())
        .collect())
}
