//! Ordered frontier store keyed by arrival time.
//!
//! Keys map to buckets of nodes so all nodes sharing the minimum key come out
//! together in one extraction. A node index tracks each node's current key;
//! bucket entries made stale by `decrease_key` are skipped lazily.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::network::NodeId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StoreError {
    #[error("store is empty")]
    Empty,
    #[error("node {0} is already in the store")]
    Duplicate(NodeId),
    #[error("node {0} is not in the store")]
    Missing(NodeId),
    #[error("new key {new} for node {node} is not below its current key {current}")]
    NotDecreasing { node: NodeId, current: u64, new: u64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StoreCounters {
    pub inserts: u64,
    pub decreases: u64,
    /// Nodes handed out by group extraction.
    pub extractions: u64,
    pub groups: u64,
}

#[derive(Clone, Debug)]
pub struct PriorityStore {
    buckets: BTreeMap<u64, Vec<(NodeId, u32)>>,
    key: Vec<Option<u64>>,
    stamp: Vec<u32>,
    len: usize,
    counters: StoreCounters,
}

impl PriorityStore {
    /// Store for node ids in `0..node_count`.
    pub fn new(node_count: usize) -> Self {
        Self {
            buckets: BTreeMap::new(),
            key: vec![None; node_count],
            stamp: vec![0; node_count],
            len: 0,
            counters: StoreCounters::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.key[node.index()].is_some()
    }

    pub fn key_of(&self, node: NodeId) -> Option<u64> {
        self.key[node.index()]
    }

    pub fn counters(&self) -> StoreCounters {
        self.counters
    }

    pub fn insert(&mut self, node: NodeId, key: u64) -> Result<(), StoreError> {
        let v = node.index();
        if self.key[v].is_some() {
            return Err(StoreError::Duplicate(node));
        }
        self.key[v] = Some(key);
        self.stamp[v] = self.stamp[v].wrapping_add(1);
        self.buckets.entry(key).or_default().push((node, self.stamp[v]));
        self.len += 1;
        self.counters.inserts += 1;
        Ok(())
    }

    pub fn decrease_key(&mut self, node: NodeId, new_key: u64) -> Result<(), StoreError> {
        let v = node.index();
        let current = self.key[v].ok_or(StoreError::Missing(node))?;
        if new_key >= current {
            return Err(StoreError::NotDecreasing { node, current, new: new_key });
        }
        self.key[v] = Some(new_key);
        self.stamp[v] = self.stamp[v].wrapping_add(1);
        self.buckets.entry(new_key).or_default().push((node, self.stamp[v]));
        self.counters.decreases += 1;
        Ok(())
    }

    /// Inserts the node or lowers its key; returns `true` if it was newly inserted.
    pub fn push_or_decrease(&mut self, node: NodeId, key: u64) -> Result<bool, StoreError> {
        if self.contains(node) {
            self.decrease_key(node, key).map(|_| false)
        } else {
            self.insert(node, key).map(|_| true)
        }
    }

    /// Removes every node holding the minimum key.
    pub fn extract_min_group(&mut self) -> Result<(u64, Vec<NodeId>), StoreError> {
        let mut group = Vec::new();
        let key = self.extract_min_group_into(&mut group).ok_or(StoreError::Empty)?;
        Ok((key, group))
    }

    /// Like [`extract_min_group`](Self::extract_min_group) but reuses `out`, which is cleared first.
    pub fn extract_min_group_into(&mut self, out: &mut Vec<NodeId>) -> Option<u64> {
        out.clear();
        while let Some((key, bucket)) = self.buckets.pop_first() {
            for (node, stamp) in bucket {
                let v = node.index();
                if self.key[v] == Some(key) && self.stamp[v] == stamp {
                    self.key[v] = None;
                    out.push(node);
                }
            }
            if !out.is_empty() {
                self.len -= out.len();
                self.counters.extractions += out.len() as u64;
                self.counters.groups += 1;
                return Some(key);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton() {
        let mut s = PriorityStore::new(4);
        s.insert(NodeId(2), 9).unwrap();
        assert_eq!(s.extract_min_group(), Ok((9, vec![NodeId(2)])));
        assert_eq!(s.extract_min_group(), Err(StoreError::Empty));
    }

    #[test]
    fn ordering() {
        let mut s = PriorityStore::new(3);
        s.insert(NodeId(0), 5).unwrap();
        s.insert(NodeId(1), 3).unwrap();
        s.insert(NodeId(2), 7).unwrap();
        let keys: Vec<u64> = std::iter::from_fn(|| s.extract_min_group().ok().map(|g| g.0)).collect();
        assert_eq!(keys, vec![3, 5, 7]);
    }

    #[test]
    fn cousins() {
        let (a, b, c) = (NodeId(0), NodeId(1), NodeId(2));
        let mut s = PriorityStore::new(3);
        s.insert(a, 4).unwrap();
        s.insert(b, 4).unwrap();
        s.insert(c, 9).unwrap();
        let mut t = s.clone();
        assert_eq!(s.extract_min_group(), Ok((4, vec![a, b])));

        t.decrease_key(c, 4).unwrap();
        assert_eq!(t.extract_min_group(), Ok((4, vec![a, b, c])));
        assert!(t.is_empty());
    }

    #[test]
    fn decrease_min_stays_min() {
        let mut s = PriorityStore::new(2);
        s.insert(NodeId(0), 4).unwrap();
        s.insert(NodeId(1), 6).unwrap();
        s.decrease_key(NodeId(0), 1).unwrap();
        assert_eq!(s.extract_min_group(), Ok((1, vec![NodeId(0)])));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn contract_violations() {
        let mut s = PriorityStore::new(2);
        s.insert(NodeId(0), 4).unwrap();
        assert_eq!(s.insert(NodeId(0), 2), Err(StoreError::Duplicate(NodeId(0))));
        assert_eq!(
            s.decrease_key(NodeId(0), 4),
            Err(StoreError::NotDecreasing { node: NodeId(0), current: 4, new: 4 })
        );
        assert_eq!(s.decrease_key(NodeId(1), 1), Err(StoreError::Missing(NodeId(1))));
    }

    #[test]
    fn reinsert_after_extract_with_stale_key() {
        let mut s = PriorityStore::new(2);
        s.insert(NodeId(0), 8).unwrap();
        s.decrease_key(NodeId(0), 3).unwrap();
        assert_eq!(s.extract_min_group(), Ok((3, vec![NodeId(0)])));
        // A stale entry for key 8 remains; re-inserting at 8 must yield exactly one copy.
        s.insert(NodeId(0), 8).unwrap();
        assert_eq!(s.extract_min_group(), Ok((8, vec![NodeId(0)])));
        assert!(s.is_empty());
        assert_eq!(s.extract_min_group(), Err(StoreError::Empty));
    }
}
