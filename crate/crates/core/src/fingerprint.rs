//! Scheduler fingerprinting: drive a three-phase probe workload against an
//! unknown policy, record which server answers each invocation, and infer
//! the feature matrix from the collected traces.
//!
//! Phase 1 hammers a single probe function. Phase 2, after a drain long
//! enough to clear every host, alternates the probe with an identical copy
//! under a different name. Phase 3 rotates through variants of the probe
//! that differ only along one locality axis (package set or application
//! grouping), built in pairs so that shared and distinct axis values can
//! be told apart.
//!
//! In simulation the server identification function is the ground-truth
//! node id read from the scheduling decision; discovered servers still get
//! dense ids in first-seen order, exactly as a real probe would assign
//! them.

use std::collections::{BTreeMap, BTreeSet};

use crate::cluster::{FunctionSpec, PackageDep};
use crate::engine::{SimError, Simulation};
use crate::FunctionId;

/// Mapping from raw server fingerprints to dense discovered-server ids.
/// Ids start at 1 and are assigned in discovery order.
#[derive(Debug, Clone, Default)]
pub struct ServerRecord {
    map: BTreeMap<u64, u32>,
    next_id: u32,
}

impl ServerRecord {
    pub fn new() -> Self {
        Self { map: BTreeMap::new(), next_id: 1 }
    }

    /// Next id to be handed out (`d` in the protocol state).
    pub fn next_id(&self) -> u32 {
        self.next_id.max(1)
    }

    pub fn discovered(&self) -> usize {
        self.map.len()
    }

    /// Resolves a fingerprint to its server id, discovering it if unseen.
    pub fn observe(&mut self, fingerprint: u64) -> u32 {
        if self.next_id == 0 {
            self.next_id = 1;
        }
        match self.map.get(&fingerprint) {
            Some(&id) => id,
            None => {
                let id = self.next_id;
                self.map.insert(fingerprint, id);
                self.next_id += 1;
                id
            }
        }
    }
}

/// Appends the fingerprint's server id to the trace.
pub fn update_trace(record: &mut ServerRecord, trace: &mut Vec<u32>, fingerprint: u64) {
    let id = record.observe(fingerprint);
    trace.push(id);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceSample {
    pub invocation_idx: usize,
    pub function_id: FunctionId,
    pub server_id: u32,
}

#[derive(Debug, Clone)]
pub struct PhaseTrace {
    pub phase: u8,
    pub samples: Vec<TraceSample>,
}

impl PhaseTrace {
    fn server_set_of(&self, function_id: FunctionId) -> BTreeSet<u32> {
        self.samples
            .iter()
            .filter(|s| s.function_id == function_id)
            .map(|s| s.server_id)
            .collect()
    }

    fn first_server_of(&self, function_id: FunctionId) -> Option<u32> {
        self.samples.iter().find(|s| s.function_id == function_id).map(|s| s.server_id)
    }
}

/// Which configuration attribute Phase 3 varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalityAxis {
    Package,
    App,
}

impl LocalityAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            LocalityAxis::Package => "package",
            LocalityAxis::App => "app",
        }
    }
}

/// Inferred configuration-based locality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigLocality {
    None,
    Package,
    App,
}

impl ConfigLocality {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConfigLocality::None => "none",
            ConfigLocality::Package => "package",
            ConfigLocality::App => "app",
        }
    }
}

/// The reverse-engineered feature row for one scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureMatrix {
    pub f1_invocation_locality: bool,
    pub f2_auto_scaling: bool,
    pub f3_cold_start_same_location: bool,
    pub f4_account_locality: bool,
    pub f5_config_locality: ConfigLocality,
}

#[derive(Debug, Clone, Copy)]
pub struct ProtocolConfig {
    /// Invocations per phase.
    pub phase_len: usize,
    /// Idle ticks between phases; must be at least the TTL so every host
    /// is cleared before the next phase starts.
    pub drain_len: u32,
    /// Phase 3 variant count; even and >= 4 so the axis grouping has at
    /// least two groups of two.
    pub n_variants: usize,
    pub locality_axis: LocalityAxis,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { phase_len: 2000, drain_len: 25, n_variants: 8, locality_axis: LocalityAxis::Package }
    }
}

/// Thresholds for turning traces into the feature matrix.
#[derive(Debug, Clone, Copy)]
pub struct InferParams {
    /// F1: Phase 1 may touch at most this fraction of distinct servers.
    pub locality_max_distinct_ratio: f64,
    /// F1: some run of identical consecutive servers must reach this length.
    pub min_repeat_run: usize,
    /// F2: Phase 1 is cut into this many equal windows.
    pub growth_windows: usize,
    /// F2: cumulative distinct-server count must rise across at least this
    /// many window boundaries.
    pub growth_min_increases: usize,
}

impl Default for InferParams {
    fn default() -> Self {
        Self {
            locality_max_distinct_ratio: 0.25,
            min_repeat_run: 3,
            growth_windows: 4,
            growth_min_increases: 2,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("drain length {drain_len} is shorter than the TTL {ttl}; hosts would survive between phases")]
    DrainTooShort { drain_len: u32, ttl: u32 },
    #[error("n_variants must be an even number >= 4, got {0}")]
    BadVariantCount(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, thiserror::Error)]
#[error("cannot infer features: phase {phase} trace is empty")]
pub struct InsufficientTrace {
    pub phase: u8,
}

/// Everything the probe run produced: the three phase traces plus the
/// attacker's own knowledge of which functions were involved and how the
/// Phase 3 variants group along the probed axis.
#[derive(Debug, Clone)]
pub struct ProtocolTraces {
    pub phases: [PhaseTrace; 3],
    pub probe: FunctionId,
    pub companion: FunctionId,
    pub variant_groups: Vec<(FunctionId, u64)>,
    pub locality_axis: LocalityAxis,
}

impl ProtocolTraces {
    /// CSV rows `phase,invocation_idx,function_id,server_id`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,invocation_idx,function_id,server_id\n");
        for phase in &self.phases {
            for s in &phase.samples {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    phase.phase, s.invocation_idx, s.function_id, s.server_id
                ));
            }
        }
        out
    }
}

const PROBE_OWNER: u64 = 1;
const PROBE_ID: FunctionId = 1;
const COMPANION_ID: FunctionId = 2;
const VARIANT_ID_BASE: FunctionId = 10;

fn probe_packages() -> Vec<PackageDep> {
    vec![PackageDep::new("probe-base", 64), PackageDep::new("probe-util", 4)]
}

fn probe_function() -> FunctionSpec {
    FunctionSpec::new(PROBE_ID, "probe-0", PROBE_OWNER)
        .with_packages(probe_packages())
        .with_app(100)
}

/// The identical copy used in Phase 2: same packages, same owner, new name.
fn companion_function() -> FunctionSpec {
    FunctionSpec::new(COMPANION_ID, "probe-1", PROBE_OWNER)
        .with_packages(probe_packages())
        .with_app(101)
}

/// Phase 3 variants in consecutive pairs sharing the probed axis value.
fn variant_functions(cfg: &ProtocolConfig) -> Vec<(FunctionSpec, u64)> {
    (0..cfg.n_variants)
        .map(|i| {
            let group = (i / 2) as u64;
            let id = VARIANT_ID_BASE + i as FunctionId;
            let spec = FunctionSpec::new(id, format!("probe-var-{i}"), PROBE_OWNER);
            let spec = match cfg.locality_axis {
                LocalityAxis::Package => spec
                    .with_packages(vec![
                        PackageDep::new(format!("probe-ax-{group}"), 64),
                        PackageDep::new(format!("probe-filler-{i}"), 1),
                    ])
                    .with_app(200 + i as u64),
                LocalityAxis::App => {
                    spec.with_packages(probe_packages()).with_app(300 + group)
                }
            };
            (spec, group)
        })
        .collect()
}

/// Runs the three probe phases against a fresh simulation and returns the
/// collected traces. One invocation is submitted per round; the round is
/// ticked after each invocation so TTLs age exactly once per submission.
pub fn run_protocol(
    sim: &mut Simulation,
    cfg: &ProtocolConfig,
) -> Result<ProtocolTraces, ProtocolError> {
    if cfg.drain_len < sim.ttl() {
        return Err(ProtocolError::DrainTooShort { drain_len: cfg.drain_len, ttl: sim.ttl() });
    }
    if cfg.n_variants < 4 || cfg.n_variants % 2 != 0 {
        return Err(ProtocolError::BadVariantCount(cfg.n_variants));
    }

    let probe = probe_function();
    let companion = companion_function();
    let variants = variant_functions(cfg);

    let mut record = ServerRecord::new();
    let mut run_phase = |sim: &mut Simulation,
                         phase: u8,
                         pick: &mut dyn FnMut(usize) -> FunctionSpec|
     -> Result<PhaseTrace, ProtocolError> {
        let mut samples = Vec::with_capacity(cfg.phase_len);
        for i in 0..cfg.phase_len {
            let spec = pick(i);
            let decision = sim.invoke(&spec)?;
            let server_id = record.observe(decision.node_id as u64);
            samples.push(TraceSample {
                invocation_idx: i,
                function_id: spec.function_id,
                server_id,
            });
            sim.tick();
        }
        Ok(PhaseTrace { phase, samples })
    };

    let phase1 = run_phase(sim, 1, &mut |_| probe.clone())?;
    sim.drain(cfg.drain_len);
    let phase2 = run_phase(sim, 2, &mut |i| {
        if i % 2 == 0 {
            probe.clone()
        } else {
            companion.clone()
        }
    })?;
    sim.drain(cfg.drain_len);
    let phase3 = run_phase(sim, 3, &mut |i| variants[i % variants.len()].0.clone())?;

    Ok(ProtocolTraces {
        phases: [phase1, phase2, phase3],
        probe: PROBE_ID,
        companion: COMPANION_ID,
        variant_groups: variants.iter().map(|(s, g)| (s.function_id, *g)).collect(),
        locality_axis: cfg.locality_axis,
    })
}

fn longest_run(servers: &[u32]) -> usize {
    let mut best = 0;
    let mut run = 0;
    let mut prev = None;
    for &s in servers {
        if Some(s) == prev {
            run += 1;
        } else {
            run = 1;
            prev = Some(s);
        }
        best = best.max(run);
    }
    best
}

/// Cumulative distinct-server counts sampled at equal window boundaries.
fn cumulative_distinct(servers: &[u32], windows: usize) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(windows);
    let mut start = 0;
    for w in 1..=windows {
        let end = servers.len() * w / windows;
        for &s in &servers[start..end] {
            seen.insert(s);
        }
        out.push(seen.len());
        start = end;
    }
    out
}

/// Pure analysis of the protocol traces into the feature matrix.
pub fn infer_features(
    traces: &ProtocolTraces,
    params: &InferParams,
) -> Result<FeatureMatrix, InsufficientTrace> {
    for phase in &traces.phases {
        if phase.samples.is_empty() {
            return Err(InsufficientTrace { phase: phase.phase });
        }
    }
    let [p1, p2, p3] = &traces.phases;

    // F1: the Phase 1 placement set stays small and the trace shows real
    // consecutive reuse rather than coincidental revisits.
    let servers1: Vec<u32> = p1.samples.iter().map(|s| s.server_id).collect();
    let distinct1 = servers1.iter().copied().collect::<BTreeSet<_>>().len();
    let ratio = distinct1 as f64 / servers1.len() as f64;
    let f1 = longest_run(&servers1) >= params.min_repeat_run
        && ratio <= params.locality_max_distinct_ratio;

    // F2: locality plus continuous discovery of new servers over time.
    let cum = cumulative_distinct(&servers1, params.growth_windows);
    let increases = cum.windows(2).filter(|w| w[1] > w[0]).count();
    let f2 = f1 && increases >= params.growth_min_increases;

    // F3: after a full drain the probe cold-starts exactly where its very
    // first invocation ran.
    let f3 = match (p1.first_server_of(traces.probe), p2.first_server_of(traces.probe)) {
        (Some(a), Some(b)) => a == b,
        _ => false,
    };

    // F4: the same user's two functions overlap in Phase 2 AND the Phase 3
    // variants — which differ in configuration — still share a common
    // location. The cross-check separates account locality from
    // configuration-driven collisions.
    let probe_set = p2.server_set_of(traces.probe);
    let companion_set = p2.server_set_of(traces.companion);
    let phase2_overlap = !probe_set.is_disjoint(&companion_set);
    let variant_sets: Vec<BTreeSet<u32>> =
        traces.variant_groups.iter().map(|(fid, _)| p3.server_set_of(*fid)).collect();
    let common_across_variants = variant_sets
        .iter()
        .skip(1)
        .fold(variant_sets.first().cloned().unwrap_or_default(), |acc, s| {
            acc.intersection(s).copied().collect()
        });
    let f4 = phase2_overlap && !common_across_variants.is_empty();

    // F5: variants sharing the axis value run on identical server sets
    // while variants with different values stay apart.
    let mut groups: BTreeMap<u64, Vec<BTreeSet<u32>>> = BTreeMap::new();
    for ((fid, group), set) in traces.variant_groups.iter().zip(&variant_sets) {
        debug_assert_eq!(p3.server_set_of(*fid), *set);
        groups.entry(*group).or_default().push(set.clone());
    }
    let within_agree = groups.values().all(|sets| {
        sets.iter().all(|s| !s.is_empty()) && sets.windows(2).all(|w| w[0] == w[1])
    });
    let group_sets: Vec<BTreeSet<u32>> = groups
        .values()
        .map(|sets| sets.iter().flatten().copied().collect())
        .collect();
    let across_disjoint = group_sets
        .iter()
        .enumerate()
        .all(|(i, a)| group_sets.iter().skip(i + 1).all(|b| a.is_disjoint(b)));
    let f5 = if within_agree && across_disjoint && groups.len() >= 2 {
        match traces.locality_axis {
            LocalityAxis::Package => ConfigLocality::Package,
            LocalityAxis::App => ConfigLocality::App,
        }
    } else {
        ConfigLocality::None
    };

    Ok(FeatureMatrix {
        f1_invocation_locality: f1,
        f2_auto_scaling: f2,
        f3_cold_start_same_location: f3,
        f4_account_locality: f4,
        f5_config_locality: f5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::SimParams;
    use crate::sched::PolicyKind;

    #[test]
    fn trace_ids_follow_discovery_order() {
        let mut record = ServerRecord::new();
        let mut trace = Vec::new();
        for fp in [7u64, 7, 7, 42, 42, 42] {
            update_trace(&mut record, &mut trace, fp);
        }
        assert_eq!(trace, vec![1, 1, 1, 2, 2, 2]);
    }

    #[test]
    fn empty_record_starts_at_one() {
        let record = ServerRecord::new();
        assert_eq!(record.next_id(), 1);
        assert_eq!(record.discovered(), 0);
    }

    #[test]
    fn revisits_keep_their_id() {
        let mut record = ServerRecord::new();
        let mut trace = Vec::new();
        for fp in [1u64, 2, 1] {
            update_trace(&mut record, &mut trace, fp);
        }
        assert_eq!(trace, vec![1, 2, 1]);
    }

    #[test]
    fn rerunning_the_same_stream_is_idempotent() {
        let stream = [3u64, 1, 4, 1, 5, 9, 2, 6, 5, 3];
        let run = || {
            let mut record = ServerRecord::new();
            let mut trace = Vec::new();
            for &fp in &stream {
                update_trace(&mut record, &mut trace, fp);
            }
            trace
        };
        let first = run();
        assert_eq!(first, run());
        // Dense prefix: ids cover 1..=max with no gaps.
        let max = *first.iter().max().unwrap();
        for id in 1..=max {
            assert!(first.contains(&id));
        }
    }

    #[test]
    fn drain_shorter_than_ttl_is_rejected() {
        let params = SimParams { n_nodes: 16, node_capacity: 64, ttl: 20, ..Default::default() };
        let mut sim = Simulation::new(PolicyKind::Random, params, 1);
        let cfg = ProtocolConfig { drain_len: 5, ..Default::default() };
        assert!(matches!(
            run_protocol(&mut sim, &cfg),
            Err(ProtocolError::DrainTooShort { .. })
        ));
    }

    #[test]
    fn phases_start_with_an_empty_cluster() {
        let params = SimParams { n_nodes: 64, node_capacity: 64, ttl: 10, ..Default::default() };
        let mut sim = Simulation::new(PolicyKind::OpenWhisk, params, 3);
        let cfg = ProtocolConfig { phase_len: 40, drain_len: 10, ..Default::default() };
        let traces = run_protocol(&mut sim, &cfg).unwrap();
        for phase in &traces.phases {
            assert_eq!(phase.samples.len(), 40);
        }
        // The probe stays warm within each phase (touched at least every
        // other round), so exactly one cold start per phase proves the
        // drains cleared it in between.
        use crate::log::EventKind;
        let probe_places = sim
            .cluster()
            .log()
            .entries()
            .iter()
            .filter(|e| e.kind == EventKind::Place && e.function_id == PROBE_ID)
            .count();
        assert_eq!(probe_places, 2); // phases 1 and 2; phase 3 never invokes it
    }

    #[test]
    fn openwhisk_smoke_matrix() {
        let params = SimParams { n_nodes: 128, node_capacity: 256, ttl: 10, ..Default::default() };
        let mut sim = Simulation::new(PolicyKind::OpenWhisk, params, 11);
        let cfg = ProtocolConfig { phase_len: 200, drain_len: 12, ..Default::default() };
        let traces = run_protocol(&mut sim, &cfg).unwrap();
        let m = infer_features(&traces, &InferParams::default()).unwrap();
        assert!(m.f1_invocation_locality);
        assert!(!m.f2_auto_scaling);
        assert!(m.f3_cold_start_same_location);
        assert!(!m.f4_account_locality);
        assert_eq!(m.f5_config_locality, ConfigLocality::None);
    }

    #[test]
    fn empty_phase_is_insufficient() {
        let empty = ProtocolTraces {
            phases: [
                PhaseTrace { phase: 1, samples: vec![] },
                PhaseTrace { phase: 2, samples: vec![] },
                PhaseTrace { phase: 3, samples: vec![] },
            ],
            probe: 1,
            companion: 2,
            variant_groups: vec![],
            locality_axis: LocalityAxis::Package,
        };
        assert!(infer_features(&empty, &InferParams::default()).is_err());
    }
}
