//! Placement policies behind one scheduler abstraction.
//!
//! Each policy answers a single question: given an invocation and the
//! current cluster, which node serves it, and is that a warm hit or a cold
//! start. Policies own their persistent state (home lists, base servers,
//! the hash ring); distinct simulations never share a policy instance.

mod doubledip;
mod helper;
mod openwhisk;
mod pasch;
mod random;
pub mod ring;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::cluster::{ClusterState, FunctionSpec};
use crate::NodeId;

pub use doubledip::{find_least_user_variety_host, DoubleDipPolicy};
pub use helper::HelperPolicy;
pub use openwhisk::OpenWhiskPolicy;
pub use pasch::PaschPolicy;
pub use random::RandomPolicy;
pub use ring::HashRing;

/// Where an invocation goes and whether it cold-starts there.
///
/// `cold` reflects whether the function had a live host on `node_id` at
/// decision time; the engine checks the claim before applying it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchedulingDecision {
    pub node_id: NodeId,
    pub cold: bool,
}

/// No node in the cluster can satisfy the invocation's demand.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("cluster full: no node can host demand {demand}")]
pub struct ClusterFull {
    pub demand: u32,
}

/// The five selectable policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PolicyKind {
    Random,
    Helper,
    OpenWhisk,
    Pasch,
    DoubleDip,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Random,
        PolicyKind::Helper,
        PolicyKind::OpenWhisk,
        PolicyKind::Pasch,
        PolicyKind::DoubleDip,
    ];

    /// The four policies the fingerprinting protocol is evaluated against.
    pub const BASELINES: [PolicyKind; 4] = [
        PolicyKind::Random,
        PolicyKind::Helper,
        PolicyKind::OpenWhisk,
        PolicyKind::Pasch,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::Helper => "helper",
            PolicyKind::OpenWhisk => "openwhisk",
            PolicyKind::Pasch => "pasch",
            PolicyKind::DoubleDip => "doubledip",
        }
    }

    /// True when the policy keys placement on function packages.
    pub fn package_aware(&self) -> bool {
        matches!(self, PolicyKind::Pasch)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(PolicyKind::Random),
            "helper" => Ok(PolicyKind::Helper),
            "openwhisk" => Ok(PolicyKind::OpenWhisk),
            "pasch" => Ok(PolicyKind::Pasch),
            "doubledip" => Ok(PolicyKind::DoubleDip),
            other => Err(format!(
                "unknown scheduler {other:?}, expected one of: random | helper | openwhisk | pasch | doubledip"
            )),
        }
    }
}

/// Tunables shared by policy constructors.
#[derive(Debug, Clone, Copy)]
pub struct PolicyParams {
    /// Helper: one scale-out per this many invocations since the last one.
    pub scale_r: u32,
    /// PASch: virtual points per node on the hash ring.
    pub ring_points: usize,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self { scale_r: 10, ring_points: 100 }
    }
}

/// A policy instance bound to one simulation.
#[derive(Debug, Clone)]
pub enum Scheduler {
    Random(RandomPolicy),
    Helper(HelperPolicy),
    OpenWhisk(OpenWhiskPolicy),
    Pasch(PaschPolicy),
    DoubleDip(DoubleDipPolicy),
}

impl Scheduler {
    pub fn new(kind: PolicyKind, n_nodes: usize, params: PolicyParams) -> Self {
        match kind {
            PolicyKind::Random => Scheduler::Random(RandomPolicy),
            PolicyKind::Helper => Scheduler::Helper(HelperPolicy::new(params.scale_r)),
            PolicyKind::OpenWhisk => Scheduler::OpenWhisk(OpenWhiskPolicy::new(n_nodes)),
            PolicyKind::Pasch => {
                Scheduler::Pasch(PaschPolicy::new(n_nodes, params.ring_points))
            }
            PolicyKind::DoubleDip => Scheduler::DoubleDip(DoubleDipPolicy),
        }
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            Scheduler::Random(_) => PolicyKind::Random,
            Scheduler::Helper(_) => PolicyKind::Helper,
            Scheduler::OpenWhisk(_) => PolicyKind::OpenWhisk,
            Scheduler::Pasch(_) => PolicyKind::Pasch,
            Scheduler::DoubleDip(_) => PolicyKind::DoubleDip,
        }
    }

    pub fn schedule<R: Rng>(
        &mut self,
        spec: &FunctionSpec,
        cluster: &ClusterState,
        rng: &mut R,
    ) -> Result<SchedulingDecision, ClusterFull> {
        match self {
            Scheduler::Random(p) => p.schedule(spec, cluster, rng),
            Scheduler::Helper(p) => p.schedule(spec, cluster, rng),
            Scheduler::OpenWhisk(p) => p.schedule(spec, cluster),
            Scheduler::Pasch(p) => p.schedule(spec, cluster),
            Scheduler::DoubleDip(p) => p.schedule(spec, cluster),
        }
    }
}

/// Nodes able to take `demand` slots, ascending id order.
pub(crate) fn feasible_nodes(cluster: &ClusterState, demand: u32) -> Vec<NodeId> {
    cluster
        .nodes()
        .filter(|n| n.free_slots() >= demand)
        .map(|n| n.node_id)
        .collect()
}

pub(crate) fn decision_at(
    cluster: &ClusterState,
    node_id: NodeId,
    spec: &FunctionSpec,
) -> SchedulingDecision {
    SchedulingDecision {
        node_id,
        cold: !cluster.has_live_host(node_id, spec.function_id),
    }
}
