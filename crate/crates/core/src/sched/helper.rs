//! Load-driven scale-out policy. Each function gets a random base server
//! on first sight; live invocations rotate round-robin over the function's
//! hosts, and every `scale_r`-th invocation since the last scale-out
//! spawns one more host on a fresh random node. When all hosts of a
//! function have expired, the next invocation returns to the original base
//! server (cold-start locality).

use std::collections::BTreeMap;

use rand::Rng;

use crate::cluster::{ClusterState, FunctionSpec};
use crate::sched::{decision_at, feasible_nodes, ClusterFull, SchedulingDecision};
use crate::{FunctionId, NodeId};

#[derive(Debug, Clone)]
struct FunctionState {
    base: NodeId,
    rr_cursor: usize,
    since_scaleout: u32,
}

#[derive(Debug, Clone)]
pub struct HelperPolicy {
    scale_r: u32,
    state: BTreeMap<FunctionId, FunctionState>,
}

impl HelperPolicy {
    pub fn new(scale_r: u32) -> Self {
        assert!(scale_r >= 1);
        Self { scale_r, state: BTreeMap::new() }
    }

    pub fn schedule<R: Rng>(
        &mut self,
        spec: &FunctionSpec,
        cluster: &ClusterState,
        rng: &mut R,
    ) -> Result<SchedulingDecision, ClusterFull> {
        let fid = spec.function_id;
        let live: Vec<NodeId> = cluster.function_nodes(fid).collect();

        if live.is_empty() {
            return self.cold_start(spec, cluster, rng);
        }

        let st = self
            .state
            .entry(fid)
            .or_insert(FunctionState { base: live[0], rr_cursor: 0, since_scaleout: 0 });
        st.since_scaleout = st.since_scaleout.saturating_add(1);

        if st.since_scaleout >= self.scale_r {
            // Scale out onto a node not yet hosting this function. If every
            // feasible node already hosts it, keep serving warm and retry on
            // the next invocation.
            let fresh: Vec<NodeId> = feasible_nodes(cluster, spec.resource_demand)
                .into_iter()
                .filter(|n| !live.contains(n))
                .collect();
            if !fresh.is_empty() {
                st.since_scaleout = 0;
                let node = fresh[rng.gen_range(0..fresh.len())];
                return Ok(SchedulingDecision { node_id: node, cold: true });
            }
        }

        let node = live[st.rr_cursor % live.len()];
        st.rr_cursor += 1;
        Ok(SchedulingDecision { node_id: node, cold: false })
    }

    /// First placement of a function, or a restart after every host of it
    /// expired. A remembered base server is reused whenever it still has
    /// room; a brand-new function draws one uniformly at random.
    fn cold_start<R: Rng>(
        &mut self,
        spec: &FunctionSpec,
        cluster: &ClusterState,
        rng: &mut R,
    ) -> Result<SchedulingDecision, ClusterFull> {
        let demand = spec.resource_demand;
        let node = match self.state.get(&spec.function_id) {
            Some(st) if cluster.check_resource(st.base, demand) => st.base,
            _ => {
                let candidates = feasible_nodes(cluster, demand);
                if candidates.is_empty() {
                    return Err(ClusterFull { demand });
                }
                candidates[rng.gen_range(0..candidates.len())]
            }
        };
        let st = self
            .state
            .entry(spec.function_id)
            .or_insert(FunctionState { base: node, rr_cursor: 0, since_scaleout: 0 });
        st.rr_cursor = 0;
        st.since_scaleout = 0;
        Ok(decision_at(cluster, node, spec))
    }
}
