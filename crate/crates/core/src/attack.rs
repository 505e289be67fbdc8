//! Attack planning and execution: turn an inferred feature matrix plus
//! optional victim knowledge into a concrete plan, then drive the plan
//! against a simulated cluster hosting a victim workload.
//!
//! The four strategies:
//! - M1 scatters k identically-configured functions under distinct names;
//! - M2 stresses a single function with invocation bursts to ride
//!   auto-scaling;
//! - M3-1 clones the victim's package profile to hit exactly the node a
//!   package-aware policy maps that profile to;
//! - M3-2 spreads k functions over k distinct largest packages to widen
//!   ring coverage when the victim's packages are unknown.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::cluster::{FunctionSpec, PackageDep};
use crate::engine::{SimError, Simulation};
use crate::fingerprint::{ConfigLocality, FeatureMatrix};
use crate::log::EventLog;
use crate::{FunctionId, NodeId, UserId};

/// First user id of the attacker account range; accounts are numbered up
/// from here so they never collide with victim or background users.
pub const ATTACKER_USER_BASE: UserId = 900_000;
/// First function id used by generated attack functions.
pub const ATTACK_FUNCTION_BASE: FunctionId = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Strategy {
    M1,
    M2,
    M31,
    M32,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::M1, Strategy::M2, Strategy::M31, Strategy::M32];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::M1 => "m1",
            Strategy::M2 => "m2",
            Strategy::M31 => "m3_1",
            Strategy::M32 => "m3_2",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "m1" => Ok(Strategy::M1),
            "m2" => Ok(Strategy::M2),
            "m3_1" => Ok(Strategy::M31),
            "m3_2" => Ok(Strategy::M32),
            other => Err(format!("unknown strategy {other:?}, expected m1 | m2 | m3_1 | m3_2")),
        }
    }
}

/// What the attacker knows about the victim before planning.
#[derive(Debug, Clone)]
pub struct VictimKnowledge {
    knows_packages: bool,
    packages: Option<Vec<PackageDep>>,
}

impl VictimKnowledge {
    pub fn blind() -> Self {
        Self { knows_packages: false, packages: None }
    }

    pub fn with_packages(packages: Vec<PackageDep>) -> Self {
        Self { knows_packages: true, packages: Some(packages) }
    }

    pub fn knows_packages(&self) -> bool {
        self.knows_packages
    }

    pub fn packages(&self) -> Option<&[PackageDep]> {
        self.packages.as_deref()
    }
}

/// Outcome of walking the four construction steps over a feature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrategyChoice {
    pub strategy: Strategy,
    /// Step 1: account locality observed, spread over multiple accounts.
    pub use_multiple_accounts: bool,
    /// Step 2: invocation locality observed, deploy multiple functions.
    pub use_multiple_functions: bool,
    /// Secondary recommendation where one exists (multiple functions beat
    /// burst-stressing even on auto-scalers).
    pub fallback: Option<Strategy>,
}

/// Walks Steps 1-4 of the construction guide: account locality asks for
/// multiple accounts, invocation locality for multiple functions,
/// configuration locality picks the targeted or scattering M3 variant, and
/// auto-scaling without configuration locality suggests burst stressing.
pub fn select_strategy(features: &FeatureMatrix, vk: &VictimKnowledge) -> StrategyChoice {
    let strategy = if features.f5_config_locality == ConfigLocality::Package && vk.knows_packages()
    {
        Strategy::M31
    } else if features.f5_config_locality != ConfigLocality::None {
        Strategy::M32
    } else if features.f2_auto_scaling {
        Strategy::M2
    } else {
        Strategy::M1
    };
    StrategyChoice {
        strategy,
        use_multiple_accounts: features.f4_account_locality,
        use_multiple_functions: features.f1_invocation_locality,
        fallback: (strategy == Strategy::M2).then_some(Strategy::M1),
    }
}

/// One entry of the per-round attack wave: `burst_size` invocations of one
/// plan function at the given offset round. Plans in this crate use a
/// single-round wave (`round == 0`) replayed every round by
/// [`execute_attack`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub round: u32,
    pub function_id: FunctionId,
    pub burst_size: u32,
}

#[derive(Debug, Clone)]
pub struct AttackPlan {
    pub strategy: Strategy,
    pub accounts: Vec<UserId>,
    pub functions: Vec<FunctionSpec>,
    pub schedule: Vec<ScheduleEntry>,
}

impl AttackPlan {
    pub fn k(&self) -> usize {
        self.functions.len()
    }

    /// Reassigns function ownership round-robin across `n` attacker
    /// accounts (Step 1 of the construction guide).
    pub fn spread_over_accounts(mut self, n: usize) -> Self {
        assert!(n >= 1);
        self.accounts = (0..n as UserId).map(|i| ATTACKER_USER_BASE + i).collect();
        for (i, f) in self.functions.iter_mut().enumerate() {
            f.owner = self.accounts[i % n];
        }
        self
    }

    /// Flat `key = value` rendering for reproducibility records.
    pub fn to_config_string(&self) -> String {
        let packages: BTreeSet<&str> = self
            .functions
            .iter()
            .filter_map(|f| f.largest_package())
            .map(|p| p.name.as_str())
            .collect();
        let mut out = String::new();
        out.push_str(&format!("strategy = {}\n", self.strategy));
        out.push_str(&format!("k_functions = {}\n", self.k()));
        out.push_str(&format!(
            "accounts = {}\n",
            self.accounts.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
        ));
        out.push_str(&format!(
            "packages = {}\n",
            packages.into_iter().collect::<Vec<_>>().join(",")
        ));
        out
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("strategy m3_1 requires knowledge of the victim's packages")]
    UnknownVictimPackages,
    #[error("package catalog of {catalog} cannot supply {k} distinct packages")]
    CatalogTooSmall { catalog: usize, k: usize },
}

/// Synthetic package catalog M3-2 draws from: `pkg-000`, `pkg-001`, ...
pub fn catalog_package(idx: usize) -> PackageDep {
    PackageDep::new(format!("pkg-{idx:03}"), 50)
}

fn attacker_payload_packages() -> Vec<PackageDep> {
    vec![PackageDep::new("att-payload", 32), PackageDep::new("att-util", 2)]
}

/// Builds the concrete plan for a strategy with `k` functions.
pub fn generate_plan<R: Rng>(
    strategy: Strategy,
    k: usize,
    vk: &VictimKnowledge,
    catalog_size: usize,
    rng: &mut R,
) -> Result<AttackPlan, PlanError> {
    assert!(k >= 1, "a plan needs at least one function");
    let owner = ATTACKER_USER_BASE;
    let fid = |i: usize| ATTACK_FUNCTION_BASE + i as FunctionId;

    let functions: Vec<FunctionSpec> = match strategy {
        // k identical copies under distinct names; every other parameter is
        // the same on purpose.
        Strategy::M1 => (0..k)
            .map(|i| {
                FunctionSpec::new(fid(i), format!("att-m1-{i}"), owner)
                    .with_packages(attacker_payload_packages())
            })
            .collect(),
        // A single function; the burst lives in the schedule.
        Strategy::M2 => vec![FunctionSpec::new(fid(0), "att-m2", owner)
            .with_packages(attacker_payload_packages())],
        // Clones of the victim's configuration. They share one deploy name:
        // the point is to target a single configuration value, not to
        // scatter.
        Strategy::M31 => {
            let pkgs = vk.packages().ok_or(PlanError::UnknownVictimPackages)?;
            (0..k)
                .map(|i| {
                    FunctionSpec::new(fid(i), "att-m31", owner).with_packages(pkgs.to_vec())
                })
                .collect()
        }
        // k distinct largest packages drawn without replacement.
        Strategy::M32 => {
            if k > catalog_size {
                return Err(PlanError::CatalogTooSmall { catalog: catalog_size, k });
            }
            let choice = rand::seq::index::sample(rng, catalog_size, k);
            choice
                .iter()
                .enumerate()
                .map(|(i, pkg_idx)| {
                    FunctionSpec::new(fid(i), format!("att-m32-{i}"), owner).with_packages(vec![
                        catalog_package(pkg_idx),
                        PackageDep::new(format!("att-filler-{i}"), 1),
                    ])
                })
                .collect()
        }
    };

    let schedule = match strategy {
        Strategy::M2 => vec![ScheduleEntry {
            round: 0,
            function_id: functions[0].function_id,
            burst_size: k as u32,
        }],
        _ => functions
            .iter()
            .map(|f| ScheduleEntry { round: 0, function_id: f.function_id, burst_size: 1 })
            .collect(),
    };

    Ok(AttackPlan { strategy, accounts: vec![owner], functions, schedule })
}

/// The victim side of an experiment: one function invoked every `period`
/// rounds, which keeps at least one victim host alive whenever
/// `period <= ttl`.
#[derive(Debug, Clone)]
pub struct VictimWorkload {
    pub spec: FunctionSpec,
    pub period: u32,
}

impl VictimWorkload {
    pub fn every_round(spec: FunctionSpec) -> Self {
        Self { spec, period: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub colocated: bool,
    pub colocated_nodes: BTreeSet<NodeId>,
    pub log: EventLog,
}

/// Runs the plan against a simulation hosting the victim workload:
/// round by round the victim invokes first, then the attack wave replays,
/// then the round ticks. Co-location is detected on live cluster state at
/// every cold placement, independently of the log-scan metrics path.
pub fn execute_attack(
    plan: &AttackPlan,
    sim: &mut Simulation,
    victim: &VictimWorkload,
    rounds: u32,
) -> Result<AttackOutcome, SimError> {
    let by_id: BTreeMap<FunctionId, &FunctionSpec> =
        plan.functions.iter().map(|f| (f.function_id, f)).collect();
    let attacker_ids: BTreeSet<UserId> = plan.accounts.iter().copied().collect();
    let victim_id = victim.spec.owner;
    let mut colocated_nodes = BTreeSet::new();

    for round in 0..rounds {
        if round % victim.period == 0 {
            let d = sim.invoke(&victim.spec)?;
            if d.cold {
                let node = sim.cluster().node(d.node_id);
                if node.user_set().any(|u| attacker_ids.contains(&u)) {
                    colocated_nodes.insert(d.node_id);
                }
            }
        }
        for entry in &plan.schedule {
            let spec = by_id[&entry.function_id];
            for _ in 0..entry.burst_size {
                let d = sim.invoke(spec)?;
                if d.cold && sim.cluster().node(d.node_id).serves_user(victim_id) {
                    colocated_nodes.insert(d.node_id);
                }
            }
        }
        sim.tick();
    }

    Ok(AttackOutcome {
        colocated: !colocated_nodes.is_empty(),
        colocated_nodes,
        log: sim.cluster().log().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::SimParams;
    use crate::sched::PolicyKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn matrix(
        f1: bool,
        f2: bool,
        f3: bool,
        f4: bool,
        f5: ConfigLocality,
    ) -> FeatureMatrix {
        FeatureMatrix {
            f1_invocation_locality: f1,
            f2_auto_scaling: f2,
            f3_cold_start_same_location: f3,
            f4_account_locality: f4,
            f5_config_locality: f5,
        }
    }

    fn victim_spec() -> FunctionSpec {
        FunctionSpec::new(500, "victim-fn", 100).with_packages(vec![
            PackageDep::new("victim-pkg", 64),
            PackageDep::new("victim-util", 8),
        ])
    }

    #[test]
    fn pasch_row_with_knowledge_selects_targeted_m3() {
        let features = matrix(true, false, true, false, ConfigLocality::Package);
        let vk = VictimKnowledge::with_packages(victim_spec().packages.clone());
        let choice = select_strategy(&features, &vk);
        assert_eq!(choice.strategy, Strategy::M31);
        assert!(choice.use_multiple_functions);
        assert!(!choice.use_multiple_accounts);
    }

    #[test]
    fn pasch_row_without_knowledge_scatters_configurations() {
        let features = matrix(true, false, true, false, ConfigLocality::Package);
        assert_eq!(select_strategy(&features, &VictimKnowledge::blind()).strategy, Strategy::M32);
    }

    #[test]
    fn helper_row_selects_burst_with_m1_fallback() {
        let features = matrix(true, true, true, false, ConfigLocality::None);
        let choice = select_strategy(&features, &VictimKnowledge::blind());
        assert_eq!(choice.strategy, Strategy::M2);
        assert_eq!(choice.fallback, Some(Strategy::M1));
    }

    #[test]
    fn featureless_scheduler_falls_back_to_m1() {
        let features = matrix(false, false, false, false, ConfigLocality::None);
        let choice = select_strategy(&features, &VictimKnowledge::blind());
        assert_eq!(choice.strategy, Strategy::M1);
        assert_eq!(choice.fallback, None);
    }

    #[test]
    fn m31_plan_clones_the_victim_profile() {
        let vk = VictimKnowledge::with_packages(victim_spec().packages.clone());
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let plan = generate_plan(Strategy::M31, 4, &vk, 256, &mut rng).unwrap();
        assert_eq!(plan.k(), 4);
        for f in &plan.functions {
            assert_eq!(f.largest_package().unwrap().name, "victim-pkg");
        }
        assert!(
            generate_plan(Strategy::M31, 4, &VictimKnowledge::blind(), 256, &mut rng)
                .unwrap_err()
                == PlanError::UnknownVictimPackages
        );
    }

    #[test]
    fn m2_plan_is_one_function_with_a_burst() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let plan = generate_plan(Strategy::M2, 50, &VictimKnowledge::blind(), 256, &mut rng).unwrap();
        assert_eq!(plan.functions.len(), 1);
        assert_eq!(plan.schedule.len(), 1);
        assert_eq!(plan.schedule[0].burst_size, 50);
    }

    #[test]
    fn m1_and_m32_use_distinct_names() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for strategy in [Strategy::M1, Strategy::M32] {
            let plan = generate_plan(strategy, 8, &VictimKnowledge::blind(), 256, &mut rng).unwrap();
            let names: BTreeSet<&str> = plan.functions.iter().map(|f| f.name.as_str()).collect();
            assert_eq!(names.len(), 8, "{strategy} names must be distinct");
        }
    }

    #[test]
    fn m32_draws_distinct_packages_without_replacement() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let plan = generate_plan(Strategy::M32, 32, &VictimKnowledge::blind(), 256, &mut rng).unwrap();
        let pkgs: BTreeSet<String> =
            plan.functions.iter().map(|f| f.largest_package().unwrap().name.clone()).collect();
        assert_eq!(pkgs.len(), 32);
        assert_eq!(
            generate_plan(Strategy::M32, 9, &VictimKnowledge::blind(), 8, &mut rng).unwrap_err(),
            PlanError::CatalogTooSmall { catalog: 8, k: 9 }
        );
    }

    #[test]
    fn plan_generation_is_deterministic_under_a_seed() {
        let plan = |seed: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            generate_plan(Strategy::M32, 16, &VictimKnowledge::blind(), 256, &mut rng)
                .unwrap()
                .functions
                .iter()
                .map(|f| f.largest_package().unwrap().name.clone())
                .collect::<Vec<_>>()
        };
        assert_eq!(plan(7), plan(7));
        assert_ne!(plan(7), plan(8));
    }

    #[test]
    fn targeted_attack_on_package_scheduler_lands_with_the_victim() {
        let vk = VictimKnowledge::with_packages(victim_spec().packages.clone());
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let plan = generate_plan(Strategy::M31, 2, &vk, 256, &mut rng).unwrap();
        let params = SimParams { n_nodes: 1000, node_capacity: 1024, ttl: 20, ..Default::default() };
        let mut sim = Simulation::new(PolicyKind::Pasch, params, 9);
        let outcome =
            execute_attack(&plan, &mut sim, &VictimWorkload::every_round(victim_spec()), 10)
                .unwrap();
        assert!(outcome.colocated);
        assert_eq!(outcome.colocated_nodes.len(), 1);
    }

    #[test]
    fn m1_on_package_scheduler_stays_away() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let plan = generate_plan(Strategy::M1, 32, &VictimKnowledge::blind(), 256, &mut rng).unwrap();
        let params = SimParams { n_nodes: 1000, node_capacity: 1024, ttl: 20, ..Default::default() };
        let mut sim = Simulation::new(PolicyKind::Pasch, params, 10);
        let outcome =
            execute_attack(&plan, &mut sim, &VictimWorkload::every_round(victim_spec()), 10)
                .unwrap();
        assert!(!outcome.colocated);
    }

    #[test]
    fn single_node_cluster_forces_colocation() {
        let params = SimParams { n_nodes: 1, node_capacity: 1024, ttl: 20, ..Default::default() };
        for (kind, strategy) in [
            (PolicyKind::Random, Strategy::M1),
            (PolicyKind::Helper, Strategy::M2),
            (PolicyKind::OpenWhisk, Strategy::M1),
        ] {
            let mut rng = ChaCha12Rng::seed_from_u64(11);
            let plan = generate_plan(strategy, 3, &VictimKnowledge::blind(), 256, &mut rng).unwrap();
            let mut sim = Simulation::new(kind, params, 12);
            let outcome =
                execute_attack(&plan, &mut sim, &VictimWorkload::every_round(victim_spec()), 5)
                    .unwrap();
            assert!(outcome.colocated, "{kind} should force co-location on one node");
        }
    }

    #[test]
    fn spreading_accounts_reassigns_owners() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let plan = generate_plan(Strategy::M1, 6, &VictimKnowledge::blind(), 256, &mut rng)
            .unwrap()
            .spread_over_accounts(3);
        assert_eq!(plan.accounts.len(), 3);
        let owners: BTreeSet<UserId> = plan.functions.iter().map(|f| f.owner).collect();
        assert_eq!(owners.len(), 3);
    }
}
