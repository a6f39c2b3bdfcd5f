use std::collections::BTreeSet;

use thiserror::Error;

use super::ScheduleDecision;
use crate::cluster::{UpdateId, UpdateRequest};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueueError {
    #[error("update {0} is already queued")]
    Duplicate(UpdateId),
}

/// Pending updates in service order. Built in arrival order; delayed updates are moved to
/// the tail when a decision is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateQueue<T> {
    items: Vec<UpdateRequest<T>>,
    ids: BTreeSet<UpdateId>,
}

impl<T> Default for UpdateQueue<T> {
    fn default() -> Self {
        Self {
            items: Vec::new(),
            ids: BTreeSet::new(),
        }
    }
}

impl<T: Clone> UpdateQueue<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Orders by arrival tick, keeping the given order among equal ticks.
    pub fn from_requests(mut requests: Vec<UpdateRequest<T>>) -> Result<Self, QueueError> {
        requests.sort_by_key(|r| r.arrival_tick);
        let mut q = Self::new();
        for r in requests {
            q.push(r)?;
        }
        Ok(q)
    }

    pub fn push(&mut self, request: UpdateRequest<T>) -> Result<(), QueueError> {
        if !self.ids.insert(request.id) {
            return Err(QueueError::Duplicate(request.id));
        }
        self.items.push(request);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, UpdateRequest<T>> {
        self.items.iter()
    }

    pub fn as_slice(&self) -> &[UpdateRequest<T>] {
        &self.items
    }

    pub fn contains(&self, id: UpdateId) -> bool {
        self.ids.contains(&id)
    }

    pub fn get(&self, id: UpdateId) -> Option<&UpdateRequest<T>> {
        self.items.iter().find(|r| r.id == id)
    }

    /// Removes assigned and dropped updates and moves delayed ones to the tail in decision
    /// order. Returns the assigned requests (in assignment order) and the dropped ones.
    pub fn apply_decision(
        &mut self,
        decision: &ScheduleDecision<T>,
    ) -> (Vec<UpdateRequest<T>>, Vec<UpdateRequest<T>>) {
        let mut take = |id: UpdateId| -> Option<UpdateRequest<T>> {
            let pos = self.items.iter().position(|r| r.id == id)?;
            self.ids.remove(&id);
            Some(self.items.remove(pos))
        };
        let assigned: Vec<_> = decision
            .assigned
            .iter()
            .filter_map(|&id| take(id))
            .collect();
        let dropped: Vec<_> = decision.dropped.iter().filter_map(|&id| take(id)).collect();
        let delayed: Vec<_> = decision.delayed.iter().filter_map(|&id| take(id)).collect();
        for r in delayed {
            self.ids.insert(r.id);
            self.items.push(r);
        }
        (assigned, dropped)
    }
}

impl<'a, T> IntoIterator for &'a UpdateQueue<T> {
    type Item = &'a UpdateRequest<T>;
    type IntoIter = std::slice::Iter<'a, UpdateRequest<T>>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}
