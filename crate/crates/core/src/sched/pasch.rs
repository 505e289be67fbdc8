//! Package-aware policy: placement is keyed on the function's largest
//! declared package, mapped through a consistent hash ring. Functions that
//! agree on the largest package land on the same node no matter who owns
//! them; when the ring owner is full the walk continues clockwise to the
//! next node with capacity.

use crate::cluster::{ClusterState, FunctionSpec};
use crate::sched::ring::HashRing;
use crate::sched::{ClusterFull, SchedulingDecision};

#[derive(Debug, Clone)]
pub struct PaschPolicy {
    ring: HashRing,
}

impl PaschPolicy {
    pub fn new(n_nodes: usize, ring_points: usize) -> Self {
        Self { ring: HashRing::new(n_nodes, ring_points) }
    }

    pub fn ring(&self) -> &HashRing {
        &self.ring
    }

    pub fn schedule(
        &self,
        spec: &FunctionSpec,
        cluster: &ClusterState,
    ) -> Result<SchedulingDecision, ClusterFull> {
        let key = &spec
            .largest_package()
            .expect("package-aware scheduling requires a nonempty package set")
            .name;
        let demand = spec.resource_demand;
        for node in self.ring.walk(key) {
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
    use crate::cluster::PackageDep;

    fn with_pkg(id: u64, owner: u64, pkg: &str, size: u64) -> FunctionSpec {
        FunctionSpec::new(id, format!("fn-{id}"), owner)
            .with_packages(vec![PackageDep::new(pkg, size), PackageDep::new("util", 1)])
    }

    #[test]
    fn identical_largest_package_means_identical_node() {
        let cluster = ClusterState::new(1000, 1024);
        let policy = PaschPolicy::new(1000, 100);
        let victim = with_pkg(1, 10, "numpy-like", 80);
        let attacker = with_pkg(2, 20, "numpy-like", 80);
        let a = policy.schedule(&victim, &cluster).unwrap();
        let b = policy.schedule(&attacker, &cluster).unwrap();
        assert_eq!(a.node_id, b.node_id);
    }

    #[test]
    fn different_largest_packages_generally_split() {
        let cluster = ClusterState::new(1000, 1024);
        let policy = PaschPolicy::new(1000, 100);
        let a = policy.schedule(&with_pkg(1, 10, "pandas-like", 90), &cluster).unwrap();
        let b = policy.schedule(&with_pkg(2, 10, "torch-like", 95), &cluster).unwrap();
        assert_ne!(a.node_id, b.node_id);
    }

    #[test]
    fn single_node_ring_resolves_to_node_zero() {
        let cluster = ClusterState::new(1, 1024);
        let policy = PaschPolicy::new(1, 100);
        let d = policy.schedule(&with_pkg(1, 1, "whatever", 5), &cluster).unwrap();
        assert_eq!(d.node_id, 0);
    }

    #[test]
    fn full_owner_walks_clockwise_to_capacity() {
        let mut cluster = ClusterState::new(4, 1);
        let policy = PaschPolicy::new(4, 100);
        let spec = with_pkg(1, 1, "busy-pkg", 50);
        let owner = policy.ring().lookup("busy-pkg");
        cluster.place_host(owner, &FunctionSpec::new(99, "squatter", 9), 20).unwrap();
        let d = policy.schedule(&spec, &cluster).unwrap();
        assert_ne!(d.node_id, owner);
        let expected = policy.ring().walk("busy-pkg").nth(1).unwrap();
        assert_eq!(d.node_id, expected);
    }
}
