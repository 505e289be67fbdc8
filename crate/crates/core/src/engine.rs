//! Simulation driver: owns one cluster, one policy instance and one seeded
//! RNG stream, and applies scheduling decisions as warm touches or cold
//! placements. Single-threaded by construction; parallel experiments each
//! own a whole `Simulation`.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::cluster::{ClusterState, FunctionSpec, Touch};
use crate::sched::{ClusterFull, PolicyKind, PolicyParams, Scheduler, SchedulingDecision};

/// Name of the RNG stream recorded in run manifests.
pub const RNG_ALGORITHM: &str = "chacha12";

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    ClusterFull(#[from] ClusterFull),
    /// A policy broke its contract (wrong cold flag, infeasible node).
    /// Exit status 3 territory: this is a bug, not an input problem.
    #[error("scheduler invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy)]
pub struct SimParams {
    pub n_nodes: usize,
    pub node_capacity: u32,
    pub ttl: u32,
    pub policy: PolicyParams,
}

impl Default for SimParams {
    fn default() -> Self {
        Self { n_nodes: 1000, node_capacity: 1024, ttl: 20, policy: PolicyParams::default() }
    }
}

#[derive(Debug)]
pub struct Simulation {
    cluster: ClusterState,
    scheduler: Scheduler,
    rng: ChaCha12Rng,
    ttl: u32,
}

impl Simulation {
    pub fn new(kind: PolicyKind, params: SimParams, seed: u64) -> Self {
        Self {
            cluster: ClusterState::new(params.n_nodes, params.node_capacity),
            scheduler: Scheduler::new(kind, params.n_nodes, params.policy),
            rng: ChaCha12Rng::seed_from_u64(seed),
            ttl: params.ttl,
        }
    }

    pub fn cluster(&self) -> &ClusterState {
        &self.cluster
    }

    pub fn policy_kind(&self) -> PolicyKind {
        self.scheduler.kind()
    }

    pub fn ttl(&self) -> u32 {
        self.ttl
    }

    /// Routes one invocation: asks the policy for a node, then either
    /// refreshes the warm host there or places a fresh one.
    pub fn invoke(&mut self, spec: &FunctionSpec) -> Result<SchedulingDecision, SimError> {
        let decision = self.scheduler.schedule(spec, &self.cluster, &mut self.rng)?;
        if decision.node_id >= self.cluster.n_nodes() {
            return Err(SimError::Invariant(format!(
                "{} returned node {} outside the cluster",
                self.scheduler.kind(),
                decision.node_id
            )));
        }
        let live = self.cluster.has_live_host(decision.node_id, spec.function_id);
        if decision.cold == live {
            return Err(SimError::Invariant(format!(
                "{} mislabelled a {} invocation of function {} at node {}",
                self.scheduler.kind(),
                if live { "warm" } else { "cold" },
                spec.function_id,
                decision.node_id
            )));
        }
        if decision.cold {
            self.cluster
                .place_host(decision.node_id, spec, self.ttl)
                .map_err(|e| SimError::Invariant(e.to_string()))?;
        } else {
            let touch = self.cluster.touch_or_miss(decision.node_id, spec.function_id, self.ttl);
            debug_assert_eq!(touch, Touch::Warm);
        }
        Ok(decision)
    }

    /// Ends the round: TTL decay, evictions, clock advance.
    pub fn tick(&mut self) {
        self.cluster.tick();
    }

    /// Idle rounds with no invocations; `ticks >= ttl` clears every host.
    pub fn drain(&mut self, ticks: u32) {
        for _ in 0..ticks {
            self.cluster.tick();
        }
    }
}
