//! Baseline policy: every invocation is dispatched to a uniformly random
//! node with capacity, independently of any prior decision. Warm hits
//! happen only by coincidence, when the draw lands on a node already
//! hosting the function.

use rand::Rng;

use crate::cluster::{ClusterState, FunctionSpec};
use crate::sched::{decision_at, feasible_nodes, ClusterFull, SchedulingDecision};

#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

impl RandomPolicy {
    pub fn schedule<R: Rng>(
        &self,
        spec: &FunctionSpec,
        cluster: &ClusterState,
        rng: &mut R,
    ) -> Result<SchedulingDecision, ClusterFull> {
        let candidates = feasible_nodes(cluster, spec.resource_demand);
        if candidates.is_empty() {
            return Err(ClusterFull { demand: spec.resource_demand });
        }
        let node = candidates[rng.gen_range(0..candidates.len())];
        Ok(decision_at(cluster, node, spec))
    }
}
