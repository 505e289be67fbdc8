//! Consistent hash ring with virtual points per node.
//!
//! Lookup walks the sorted hash space clockwise from the key's hash and
//! returns the owner of the first point at or after it, wrapping at the
//! end. The ring is deterministic for a fixed node set: point positions
//! depend only on node ids and the stable placement hash.

use std::collections::BTreeMap;

use crate::{stable_hash64, NodeId};

#[derive(Debug, Clone)]
pub struct HashRing {
    points: BTreeMap<u64, NodeId>,
    points_per_node: usize,
}

impl HashRing {
    pub fn new(n_nodes: usize, points_per_node: usize) -> Self {
        assert!(n_nodes >= 1 && points_per_node >= 1);
        let mut points = BTreeMap::new();
        for node in 0..n_nodes {
            for vp in 0..points_per_node {
                let h = stable_hash64(format!("node-{node}-vp-{vp}").as_bytes());
                points.insert(h, node);
            }
        }
        Self { points, points_per_node }
    }

    pub fn points_per_node(&self) -> usize {
        self.points_per_node
    }

    /// Node owning the key.
    pub fn lookup(&self, key: &str) -> NodeId {
        self.walk(key).next().expect("ring is never empty")
    }

    /// Clockwise walk from the key's position, yielding each distinct node
    /// once in ring order. Used as the load-balance fallback when the owner
    /// is full.
    pub fn walk<'a>(&'a self, key: &str) -> impl Iterator<Item = NodeId> + 'a {
        let start = stable_hash64(key.as_bytes());
        let mut seen = vec![false; self.max_node_id() + 1];
        self.points
            .range(start..)
            .chain(self.points.range(..start))
            .map(|(_, &node)| node)
            .filter(move |&node| {
                let fresh = !seen[node];
                seen[node] = true;
                fresh
            })
    }

    fn max_node_id(&self) -> usize {
        self.points.values().copied().max().unwrap_or(0)
    }
}
