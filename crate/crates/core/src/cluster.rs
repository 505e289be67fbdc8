//! Cluster state: nodes, resident function hosts, TTL lifecycle and
//! resource accounting. Every mutation is logged to the embedded
//! [`EventLog`], which is what all downstream metrics consume.
//!
//! Resources are homogeneous host slots. A node is full when it holds
//! `capacity` resident hosts; a placement of demand `d` requires `d` free
//! slots. One tick is one scheduling round: invocations submitted in a
//! round are processed first-come-first-serve, then [`ClusterState::tick`]
//! ages every host by one.

use std::collections::{BTreeMap, BTreeSet};

use crate::log::{EventKind, EventLog, LogEntry};
use crate::{FunctionId, NodeId, UserId};

/// A declared package dependency with its size (arbitrary units). The
/// package-aware scheduler keys placement on the largest one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageDep {
    pub name: String,
    pub size: u64,
}

impl PackageDep {
    pub fn new(name: impl Into<String>, size: u64) -> Self {
        Self { name: name.into(), size }
    }
}

/// A user's deployable function.
///
/// `function_id` is unique per deployment; `name` is the deploy name some
/// schedulers hash on (clones may share it).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSpec {
    pub function_id: FunctionId,
    pub name: String,
    pub owner: UserId,
    pub app_id: u64,
    pub packages: Vec<PackageDep>,
    pub resource_demand: u32,
}

impl FunctionSpec {
    pub fn new(function_id: FunctionId, name: impl Into<String>, owner: UserId) -> Self {
        Self {
            function_id,
            name: name.into(),
            owner,
            app_id: function_id,
            packages: Vec::new(),
            resource_demand: 1,
        }
    }

    pub fn with_packages(mut self, packages: Vec<PackageDep>) -> Self {
        self.packages = packages;
        self
    }

    pub fn with_app(mut self, app_id: u64) -> Self {
        self.app_id = app_id;
        self
    }

    pub fn with_demand(mut self, demand: u32) -> Self {
        assert!(demand >= 1, "resource_demand must be >= 1");
        self.resource_demand = demand;
        self
    }

    /// Largest declared package: max by size, ties broken by name so the
    /// choice is total and deterministic.
    pub fn largest_package(&self) -> Option<&PackageDep> {
        self.packages.iter().max_by_key(|p| (p.size, &p.name))
    }
}

/// One resident function host.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostRecord {
    pub function_id: FunctionId,
    pub owner: UserId,
    pub node_id: NodeId,
    pub ttl_remaining: u32,
    pub born_tick: u64,
}

/// A worker node: capacity plus the hosts currently resident on it.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub node_id: NodeId,
    pub capacity: u32,
    hosts: BTreeMap<FunctionId, HostRecord>,
    /// Owner -> number of their resident hosts here. Keys are exactly the
    /// node's user set; entries drop to zero and are removed on eviction.
    users: BTreeMap<UserId, u32>,
}

impl NodeState {
    fn new(node_id: NodeId, capacity: u32) -> Self {
        Self { node_id, capacity, hosts: BTreeMap::new(), users: BTreeMap::new() }
    }

    pub fn resident_count(&self) -> usize {
        self.hosts.len()
    }

    pub fn free_slots(&self) -> u32 {
        self.capacity - self.hosts.len() as u32
    }

    /// Number of distinct users with at least one resident host here.
    pub fn user_variety(&self) -> usize {
        self.users.len()
    }

    pub fn serves_user(&self, user: UserId) -> bool {
        self.users.contains_key(&user)
    }

    pub fn host(&self, function_id: FunctionId) -> Option<&HostRecord> {
        self.hosts.get(&function_id)
    }

    pub fn hosts(&self) -> impl Iterator<Item = &HostRecord> {
        self.hosts.values()
    }

    pub fn user_set(&self) -> impl Iterator<Item = UserId> + '_ {
        self.users.keys().copied()
    }
}

/// Raised when a placement violates the capacity precondition; this always
/// signals a scheduler bug, never a recoverable condition.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("placement overflow on node {node_id}: demand {demand}, free {free}")]
pub struct PlacementOverflow {
    pub node_id: NodeId,
    pub demand: u32,
    pub free: u32,
}

/// Result of routing an invocation at a specific node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Touch {
    /// A live host was found; its TTL was refreshed.
    Warm,
    /// No live host here; the caller must place one.
    Cold,
}

/// The simulated datacenter.
#[derive(Debug, Clone)]
pub struct ClusterState {
    nodes: Vec<NodeState>,
    clock: u64,
    log: EventLog,
    /// Live-host index: function -> nodes currently hosting it.
    by_function: BTreeMap<FunctionId, BTreeSet<NodeId>>,
    /// Live-activity index: user -> nodes where they have >= 1 host.
    by_user: BTreeMap<UserId, BTreeSet<NodeId>>,
}

impl ClusterState {
    pub fn new(n_nodes: usize, capacity: u32) -> Self {
        assert!(n_nodes >= 1, "cluster needs at least one node");
        Self {
            nodes: (0..n_nodes).map(|i| NodeState::new(i, capacity)).collect(),
            clock: 0,
            log: EventLog::new(),
            by_function: BTreeMap::new(),
            by_user: BTreeMap::new(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &NodeState {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeState> {
        self.nodes.iter()
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    /// True iff the node has at least `demand` free host slots.
    pub fn check_resource(&self, node_id: NodeId, demand: u32) -> bool {
        debug_assert!(demand >= 1);
        self.nodes[node_id].free_slots() >= demand
    }

    pub fn has_live_host(&self, node_id: NodeId, function_id: FunctionId) -> bool {
        self.nodes[node_id].hosts.contains_key(&function_id)
    }

    /// Nodes currently hosting the function, in ascending id order.
    pub fn function_nodes(&self, function_id: FunctionId) -> impl Iterator<Item = NodeId> + '_ {
        self.by_function.get(&function_id).into_iter().flatten().copied()
    }

    pub fn function_host_count(&self, function_id: FunctionId) -> usize {
        self.by_function.get(&function_id).map_or(0, |s| s.len())
    }

    /// Nodes where the user is active (has a live host), ascending id order.
    pub fn user_nodes(&self, user: UserId) -> impl Iterator<Item = NodeId> + '_ {
        self.by_user.get(&user).into_iter().flatten().copied()
    }

    pub fn total_resident_hosts(&self) -> usize {
        self.nodes.iter().map(|n| n.hosts.len()).sum()
    }

    /// Creates a host for `spec` on `node_id` with a fresh TTL and logs the
    /// cold start. Fails if the capacity precondition does not hold.
    pub fn place_host(
        &mut self,
        node_id: NodeId,
        spec: &FunctionSpec,
        ttl: u32,
    ) -> Result<(), PlacementOverflow> {
        assert!(ttl >= 1, "ttl must be >= 1");
        let node = &mut self.nodes[node_id];
        if node.free_slots() < spec.resource_demand {
            return Err(PlacementOverflow {
                node_id,
                demand: spec.resource_demand,
                free: node.free_slots(),
            });
        }
        debug_assert!(
            !node.hosts.contains_key(&spec.function_id),
            "placing over a live host; route through touch_or_miss first"
        );
        node.hosts.insert(
            spec.function_id,
            HostRecord {
                function_id: spec.function_id,
                owner: spec.owner,
                node_id,
                ttl_remaining: ttl,
                born_tick: self.clock,
            },
        );
        *node.users.entry(spec.owner).or_insert(0) += 1;
        self.by_function.entry(spec.function_id).or_default().insert(node_id);
        self.by_user.entry(spec.owner).or_default().insert(node_id);
        self.log.push(LogEntry {
            tick: self.clock,
            kind: EventKind::Place,
            function_id: spec.function_id,
            owner: spec.owner,
            node_id,
            cold: true,
        });
        Ok(())
    }

    /// Routes an invocation at `node_id`: warm-hits refresh the TTL to the
    /// full keep-alive window and log a warm execution; otherwise the call
    /// reports `Cold` and the caller places a host.
    pub fn touch_or_miss(&mut self, node_id: NodeId, function_id: FunctionId, ttl: u32) -> Touch {
        let node = &mut self.nodes[node_id];
        match node.hosts.get_mut(&function_id) {
            Some(host) => {
                host.ttl_remaining = ttl;
                let owner = host.owner;
                self.log.push(LogEntry {
                    tick: self.clock,
                    kind: EventKind::WarmExec,
                    function_id,
                    owner,
                    node_id,
                    cold: false,
                });
                Touch::Warm
            }
            None => Touch::Cold,
        }
    }

    /// Ends the current round: ages every host by one tick, evicts those
    /// reaching TTL 0, logs the evictions and advances the clock. Returns
    /// the evicted `(function, node)` pairs in deterministic order.
    pub fn tick(&mut self) -> Vec<(FunctionId, NodeId)> {
        let mut evicted = Vec::new();
        for node in &mut self.nodes {
            let mut dead = Vec::new();
            for (fid, host) in node.hosts.iter_mut() {
                host.ttl_remaining -= 1;
                if host.ttl_remaining == 0 {
                    dead.push(*fid);
                }
            }
            for fid in dead {
                let host = node.hosts.remove(&fid).expect("host vanished");
                match node.users.get_mut(&host.owner) {
                    Some(count) if *count > 1 => *count -= 1,
                    Some(_) => {
                        node.users.remove(&host.owner);
                    }
                    None => unreachable!("user refcount out of sync"),
                }
                if let Some(set) = self.by_function.get_mut(&fid) {
                    set.remove(&node.node_id);
                    if set.is_empty() {
                        self.by_function.remove(&fid);
                    }
                }
                if !node.users.contains_key(&host.owner) {
                    if let Some(set) = self.by_user.get_mut(&host.owner) {
                        set.remove(&node.node_id);
                        if set.is_empty() {
                            self.by_user.remove(&host.owner);
                        }
                    }
                }
                self.log.push(LogEntry {
                    tick: self.clock,
                    kind: EventKind::Evict,
                    function_id: fid,
                    owner: host.owner,
                    node_id: node.node_id,
                    cold: false,
                });
                evicted.push((fid, node.node_id));
            }
        }
        self.clock += 1;
        evicted
    }

    /// Full structural invariant check, used by the property suites after
    /// every fuzzed operation.
    pub fn validate(&self) -> Result<(), String> {
        for node in &self.nodes {
            if node.hosts.len() as u32 > node.capacity {
                return Err(format!("node {} over capacity", node.node_id));
            }
            let mut owners: BTreeMap<UserId, u32> = BTreeMap::new();
            for host in node.hosts.values() {
                if host.ttl_remaining == 0 {
                    return Err(format!("expired host survived on node {}", node.node_id));
                }
                if host.node_id != node.node_id {
                    return Err("host node_id mismatch".into());
                }
                *owners.entry(host.owner).or_insert(0) += 1;
            }
            if owners != node.users {
                return Err(format!("user set out of sync on node {}", node.node_id));
            }
        }
        let mut by_function: BTreeMap<FunctionId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut by_user: BTreeMap<UserId, BTreeSet<NodeId>> = BTreeMap::new();
        for node in &self.nodes {
            for host in node.hosts.values() {
                by_function.entry(host.function_id).or_default().insert(node.node_id);
                by_user.entry(host.owner).or_default().insert(node.node_id);
            }
        }
        if by_function != self.by_function {
            return Err("function index out of sync".into());
        }
        if by_user != self.by_user {
            return Err("user index out of sync".into());
        }
        Ok(())
    }
}
