//! Sharding-style policy: each function name hashes to a home list, a
//! seeded permutation of all node ids. Every invocation scans that list in
//! order and takes the first node that already runs a warm instance of the
//! function or has free capacity. No load-driven scale-out: with ample
//! capacity a function never leaves its first home.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::cluster::{ClusterState, FunctionSpec};
use crate::sched::{ClusterFull, SchedulingDecision};
use crate::{stable_hash64, NodeId};

#[derive(Debug, Clone)]
pub struct OpenWhiskPolicy {
    n_nodes: usize,
    home_lists: BTreeMap<String, Vec<NodeId>>,
}

impl OpenWhiskPolicy {
    pub fn new(n_nodes: usize) -> Self {
        Self { n_nodes, home_lists: BTreeMap::new() }
    }

    /// Home list for a function name: a permutation of all nodes seeded by
    /// the name's hash, fixed for the lifetime of the node set.
    fn home_list(&mut self, name: &str) -> &[NodeId] {
        let n = self.n_nodes;
        self.home_lists.entry(name.to_string()).or_insert_with(|| {
            let mut perm: Vec<NodeId> = (0..n).collect();
            let mut rng = ChaCha12Rng::seed_from_u64(stable_hash64(name.as_bytes()));
            perm.shuffle(&mut rng);
            perm
        })
    }

    pub fn schedule(
        &mut self,
        spec: &FunctionSpec,
        cluster: &ClusterState,
    ) -> Result<SchedulingDecision, ClusterFull> {
        let demand = spec.resource_demand;
        for &node in self.home_list(&spec.name) {
            if cluster.has_live_host(node, spec.function_id) {
                return Ok(SchedulingDecision { node_id: node, cold: false });
            }
            if cluster.check_resource(node, demand) {
                return Ok(SchedulingDecision { node_id: node, cold: true });
            }
        }
        Err(ClusterFull { demand })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TTL: u32 = 20;

    fn drive(policy: &mut OpenWhiskPolicy, cluster: &mut ClusterState, spec: &FunctionSpec) -> SchedulingDecision {
        let d = policy.schedule(spec, cluster).unwrap();
        if d.cold {
            cluster.place_host(d.node_id, spec, TTL).unwrap();
        } else {
            cluster.touch_or_miss(d.node_id, spec.function_id, TTL);
        }
        d
    }

    #[test]
    fn repeat_invocations_stay_on_the_first_home() {
        let mut cluster = ClusterState::new(100, 1024);
        let mut policy = OpenWhiskPolicy::new(100);
        let spec = FunctionSpec::new(1, "stay-put", 1);
        let first = drive(&mut policy, &mut cluster, &spec).node_id;
        for _ in 0..99 {
            let d = drive(&mut policy, &mut cluster, &spec);
            assert_eq!(d.node_id, first);
            assert!(!d.cold);
        }
        assert_eq!(cluster.function_host_count(1), 1);
    }

    #[test]
    fn different_names_generally_land_on_different_nodes() {
        let mut cluster = ClusterState::new(1000, 1024);
        let mut policy = OpenWhiskPolicy::new(1000);
        let a = drive(&mut policy, &mut cluster, &FunctionSpec::new(1, "copy-a", 1));
        let b = drive(&mut policy, &mut cluster, &FunctionSpec::new(2, "copy-b", 1));
        assert_ne!(a.node_id, b.node_id);
    }

    #[test]
    fn full_home_falls_back_to_the_next_list_entry() {
        let mut cluster = ClusterState::new(4, 1);
        let mut policy = OpenWhiskPolicy::new(4);
        let spec = FunctionSpec::new(1, "fallback", 1);
        let home: Vec<NodeId> = policy.home_list("fallback").to_vec();
        // Occupy the first home slot with someone else's host.
        cluster.place_host(home[0], &FunctionSpec::new(99, "other", 9), TTL).unwrap();
        let d = drive(&mut policy, &mut cluster, &spec);
        assert_eq!(d.node_id, home[1]);
        assert!(d.cold);
    }

    #[test]
    fn eviction_and_restart_reuse_the_same_home() {
        let mut cluster = ClusterState::new(50, 1024);
        let mut policy = OpenWhiskPolicy::new(50);
        let spec = FunctionSpec::new(1, "come-back", 1);
        let first = drive(&mut policy, &mut cluster, &spec).node_id;
        for _ in 0..=TTL {
            cluster.tick();
        }
        assert_eq!(cluster.function_host_count(1), 0);
        let again = drive(&mut policy, &mut cluster, &spec);
        assert_eq!(again.node_id, first);
        assert!(again.cold);
    }
}
