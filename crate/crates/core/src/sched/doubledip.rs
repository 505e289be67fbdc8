//! Soft user isolation: run a function where its owner is already active
//! whenever such a node has room, otherwise pick the feasible node serving
//! the fewest distinct users. Both scans go in ascending node-id order, so
//! ties resolve to the lowest id.

use crate::cluster::{ClusterState, FunctionSpec};
use crate::sched::{ClusterFull, SchedulingDecision};
use crate::NodeId;

/// Feasible node with the smallest user variety; ties break to the lowest
/// node id (strict less-than scan).
pub fn find_least_user_variety_host(
    cluster: &ClusterState,
    demand: u32,
) -> Result<NodeId, ClusterFull> {
    cluster
        .nodes()
        .filter(|n| n.free_slots() >= demand)
        .min_by_key(|n| (n.user_variety(), n.node_id))
        .map(|n| n.node_id)
        .ok_or(ClusterFull { demand })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleDipPolicy;

impl DoubleDipPolicy {
    pub fn schedule(
        &self,
        spec: &FunctionSpec,
        cluster: &ClusterState,
    ) -> Result<SchedulingDecision, ClusterFull> {
        let demand = spec.resource_demand;
        for node in cluster.user_nodes(spec.owner) {
            if cluster.check_resource(node, demand) {
                return Ok(SchedulingDecision {
                    node_id: node,
                    cold: !cluster.has_live_host(node, spec.function_id),
                });
            }
        }
        let node = find_least_user_variety_host(cluster, demand)?;
        Ok(SchedulingDecision {
            node_id: node,
            cold: !cluster.has_live_host(node, spec.function_id),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(id: u64, owner: u64) -> FunctionSpec {
        FunctionSpec::new(id, format!("fn-{id}"), owner)
    }

    #[test]
    fn owner_activity_wins_over_variety() {
        let mut cluster = ClusterState::new(10, 8);
        cluster.place_host(7, &spec(1, 42), 20).unwrap();
        let d = DoubleDipPolicy.schedule(&spec(2, 42), &cluster).unwrap();
        assert_eq!(d.node_id, 7);
        assert!(d.cold);
    }

    #[test]
    fn empty_cluster_ties_resolve_to_node_zero() {
        let cluster = ClusterState::new(10, 8);
        let d = DoubleDipPolicy.schedule(&spec(1, 1), &cluster).unwrap();
        assert_eq!(d.node_id, 0);
        assert!(d.cold);
    }

    #[test]
    fn least_variety_examples() {
        // Varieties {2, 1, 3} -> the node with 1.
        let mut cluster = ClusterState::new(3, 16);
        cluster.place_host(0, &spec(1, 1), 20).unwrap();
        cluster.place_host(0, &spec(2, 2), 20).unwrap();
        cluster.place_host(1, &spec(3, 3), 20).unwrap();
        for (f, u) in [(4, 4), (5, 5), (6, 6)] {
            cluster.place_host(2, &spec(f, u), 20).unwrap();
        }
        assert_eq!(find_least_user_variety_host(&cluster, 1).unwrap(), 1);

        // Varieties {0, 0, 5}: tie resolves to the lowest id.
        let mut tied = ClusterState::new(3, 16);
        for u in 10..15 {
            tied.place_host(2, &spec(u, u), 20).unwrap();
        }
        assert_eq!(find_least_user_variety_host(&tied, 1).unwrap(), 0);
    }

    #[test]
    fn full_least_variety_node_yields_to_next_feasible() {
        // Node 0 empty but zero capacity left, node 1 variety 1, node 2 variety 2.
        let mut cluster = ClusterState::new(3, 2);
        cluster.place_host(0, &spec(1, 1), 20).unwrap();
        cluster.place_host(0, &spec(2, 1), 20).unwrap(); // node 0 full, variety 1
        cluster.place_host(1, &spec(3, 2), 20).unwrap();
        cluster.place_host(2, &spec(4, 3), 20).unwrap();
        cluster.place_host(2, &spec(5, 4), 20).unwrap(); // node 2 full, variety 2
        assert_eq!(find_least_user_variety_host(&cluster, 1).unwrap(), 1);
    }

    #[test]
    fn owners_full_node_falls_back_to_least_variety() {
        // Owner active only on node 1 which is full; node 2 has variety 1,
        // node 0 variety... node 0 holds one other user, node 2 empty.
        let mut cluster = ClusterState::new(3, 1);
        cluster.place_host(0, &spec(1, 9), 20).unwrap(); // variety 1, full
        cluster.place_host(1, &spec(2, 42), 20).unwrap(); // owner's node, full
        let d = DoubleDipPolicy.schedule(&spec(3, 42), &cluster).unwrap();
        assert_eq!(d.node_id, 2); // the only feasible node, variety 0
        assert!(d.cold);
    }

    #[test]
    fn cluster_full_is_reported() {
        let mut cluster = ClusterState::new(1, 1);
        cluster.place_host(0, &spec(1, 1), 20).unwrap();
        assert_eq!(
            DoubleDipPolicy.schedule(&spec(2, 2), &cluster).unwrap_err(),
            ClusterFull { demand: 1 }
        );
    }
}
