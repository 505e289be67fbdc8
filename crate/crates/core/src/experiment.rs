//! Experiment orchestration: seeded multi-run Monte Carlo execution of the
//! canned experiment recipes, plus CSV/manifest emission.
//!
//! Reproducibility contract: `(config, seed)` determines every output
//! byte. Per-run seeds derive from the base seed and a run tag through the
//! crate hash, so runs are independent streams yet fully replayable;
//! every output row carries its seed and the config hash.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::attack::{
    catalog_package, execute_attack, generate_plan, PlanError, Strategy, VictimKnowledge,
    VictimWorkload, ATTACKER_USER_BASE,
};
use crate::cluster::{FunctionSpec, PackageDep};
use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::engine::{SimError, Simulation, RNG_ALGORITHM};
use crate::fingerprint::{infer_features, run_protocol, FeatureMatrix, ProtocolError, ProtocolTraces};
use crate::log::EventLog;
use crate::metrics::{
    compute_ae_pa, success_rate, warm_start_ratio, warm_start_ratio_typed, MetricError,
};
use crate::oracle;
use crate::sched::PolicyKind;
use crate::{stable_hash64, FunctionId, UserId};

/// Hash recorded in manifests; placement hashing and seed derivation both
/// use it.
pub const HASH_ALGORITHM: &str = "fnv1a64-splitmix64";

pub const VICTIM_USER: UserId = 100;
pub const VICTIM_FUNCTION: FunctionId = 500;
const BACKGROUND_USER_BASE: UserId = 200_000;
const BACKGROUND_FUNCTION_BASE: FunctionId = 300_000;
const WORKLOAD_FUNCTION_BASE: FunctionId = 400_000;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Independent, replayable seed stream for a tagged sub-experiment.
fn derive_seed(base: u64, tag: &str) -> u64 {
    stable_hash64(format!("{base}:{tag}").as_bytes())
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "nan".into(),
    }
}

// ---------------------------------------------------------------------------
// shared workload pieces

/// The victim: one function whose largest package is drawn from the same
/// catalog the M3-2 attacker samples, so package-targeting is meaningful.
fn victim_spec(catalog_size: usize, rng: &mut ChaCha12Rng) -> FunctionSpec {
    let pkg_idx = rng.gen_range(0..catalog_size);
    FunctionSpec::new(VICTIM_FUNCTION, "victim-fn", VICTIM_USER)
        .with_packages(vec![catalog_package(pkg_idx), PackageDep::new("victim-util", 8)])
        .with_app(1)
}

// ---------------------------------------------------------------------------
// attack cells (used by the `attack` and `transfer` recipes)

#[derive(Debug, Clone, Copy)]
pub struct RunRow {
    pub run_idx: usize,
    pub seed: u64,
    pub colocated: bool,
    pub ae: Option<f64>,
    pub pa: Option<f64>,
    pub max_pa: Option<f64>,
    pub warm_start_ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub scheduler: PolicyKind,
    pub strategy: Strategy,
    pub k: usize,
    pub rows: Vec<RunRow>,
}

impl CellResult {
    pub fn success_rate(&self) -> f64 {
        let flags: Vec<bool> = self.rows.iter().map(|r| r.colocated).collect();
        success_rate(&flags).expect("cells always hold >= 1 run")
    }

    pub fn mean_of<F: Fn(&RunRow) -> Option<f64>>(&self, f: F) -> Option<f64> {
        let vals: Vec<f64> = self.rows.iter().filter_map(&f).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    pub fn stderr_of<F: Fn(&RunRow) -> Option<f64>>(&self, f: F) -> Option<f64> {
        let vals: Vec<f64> = self.rows.iter().filter_map(&f).collect();
        if vals.len() < 2 {
            return None;
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var =
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (vals.len() - 1) as f64;
        Some((var / vals.len() as f64).sqrt())
    }

    pub fn median_ae(&self) -> Option<f64> {
        let mut vals: Vec<f64> = self.rows.iter().filter_map(|r| r.ae).collect();
        if vals.is_empty() {
            return None;
        }
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mid = vals.len() / 2;
        Some(if vals.len() % 2 == 1 { vals[mid] } else { (vals[mid - 1] + vals[mid]) / 2.0 })
    }
}

struct AttackRun {
    row: RunRow,
    log: EventLog,
}

fn run_attack_once(
    cfg: &ExperimentConfig,
    scheduler: PolicyKind,
    strategy: Strategy,
    k: usize,
    run_idx: usize,
    seed: u64,
) -> Result<AttackRun, ExperimentError> {
    let mut plan_rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, "plan"));
    let victim = victim_spec(cfg.package_catalog, &mut plan_rng);
    let vk = if cfg.knows_packages {
        VictimKnowledge::with_packages(victim.packages.clone())
    } else {
        VictimKnowledge::blind()
    };
    let plan = generate_plan(strategy, k, &vk, cfg.package_catalog, &mut plan_rng)?;
    let mut sim = Simulation::new(scheduler, cfg.sim_params(), derive_seed(seed, "sim"));
    let workload = VictimWorkload { spec: victim, period: cfg.victim_period };
    let outcome = execute_attack(&plan, &mut sim, &workload, cfg.rounds)?;

    let attackers: BTreeSet<UserId> = plan.accounts.iter().copied().collect();
    let victims: BTreeSet<UserId> = [VICTIM_USER].into();
    let report = compute_ae_pa(&outcome.log, &attackers, &victims, cfg.pa_windows);
    debug_assert_eq!(report.colocated(), outcome.colocated, "live and log paths disagree");
    let row = RunRow {
        run_idx,
        seed,
        colocated: outcome.colocated,
        ae: report.ae,
        pa: report.pa,
        max_pa: report.max_pa,
        warm_start_ratio: warm_start_ratio(&outcome.log).ok(),
    };
    Ok(AttackRun { row, log: outcome.log })
}

/// One (scheduler, strategy, k) cell of `runs` seeded repetitions.
pub fn run_attack_cell(
    cfg: &ExperimentConfig,
    scheduler: PolicyKind,
    strategy: Strategy,
    k: usize,
) -> Result<CellResult, ExperimentError> {
    let mut rows = Vec::with_capacity(cfg.runs);
    for i in 0..cfg.runs {
        let seed = derive_seed(cfg.seed, &format!("attack:{scheduler}:{strategy}:k{k}:run{i}"));
        rows.push(run_attack_once(cfg, scheduler, strategy, k, i, seed)?.row);
    }
    Ok(CellResult { scheduler, strategy, k, rows })
}

// ---------------------------------------------------------------------------
// recipe: fingerprint

pub fn fingerprint_features(
    cfg: &ExperimentConfig,
) -> Result<Vec<(PolicyKind, FeatureMatrix, ProtocolTraces)>, ExperimentError> {
    let mut out = Vec::new();
    for kind in PolicyKind::BASELINES {
        let seed = derive_seed(cfg.seed, &format!("fingerprint:{kind}"));
        let mut sim = Simulation::new(kind, cfg.sim_params(), seed);
        let traces = run_protocol(&mut sim, &cfg.protocol_config())?;
        let features = infer_features(&traces, &cfg.infer_params())
            .expect("protocol phases are nonempty by construction");
        out.push((kind, features, traces));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// recipe: transfer matrix

#[derive(Debug, Clone, Copy)]
pub struct TransferCell {
    pub scheduler: PolicyKind,
    pub strategy: Strategy,
    pub k: usize,
    pub success_rate: f64,
}

/// Applies M1, M2 and M3-1 to every baseline scheduler, matched or not.
/// M3-1 cells assume package knowledge; k is the largest sweep entry.
pub fn transfer_matrix(cfg: &ExperimentConfig) -> Result<Vec<TransferCell>, ExperimentError> {
    let k = *cfg.k_functions.last().expect("validated nonempty");
    let mut cells = Vec::new();
    for scheduler in PolicyKind::BASELINES {
        for strategy in [Strategy::M1, Strategy::M2, Strategy::M31] {
            let mut cell_cfg = cfg.clone();
            cell_cfg.knows_packages = true;
            let cell = run_attack_cell(&cell_cfg, scheduler, strategy, k)?;
            cells.push(TransferCell {
                scheduler,
                strategy,
                k,
                success_rate: cell.success_rate(),
            });
        }
    }
    Ok(cells)
}

// ---------------------------------------------------------------------------
// recipe: doubledip evaluation

#[derive(Debug, Clone, Copy)]
pub struct DoubledipRow {
    pub scheduler: PolicyKind,
    pub n_attackers: usize,
    pub success_rate: f64,
    pub runs: usize,
}

/// One seeded run of the multi-account evaluation workload.
///
/// The cluster is pre-populated with `background_users` tenants plus the
/// victim, arriving in a per-run random order and kept alive for the whole
/// run. Attacker accounts start staggered; each performs `attempts`
/// invocation bursts of its own attack function, `attempt_gap` rounds
/// apart. Success is any-tick co-residence of an attacker host with the
/// victim's host.
fn doubledip_run(
    cfg: &ExperimentConfig,
    kind: PolicyKind,
    n_attackers: usize,
    seed: u64,
) -> Result<bool, ExperimentError> {
    let mut sim = Simulation::new(kind, cfg.sim_params(), derive_seed(seed, "sim"));
    let mut arrival_rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, "arrivals"));

    let victim = victim_spec(cfg.package_catalog, &mut arrival_rng);
    let mut arrivals: Vec<FunctionSpec> = (0..cfg.background_users)
        .map(|j| {
            FunctionSpec::new(
                BACKGROUND_FUNCTION_BASE + j as FunctionId,
                format!("bg-{j}"),
                BACKGROUND_USER_BASE + j as UserId,
            )
            .with_packages(vec![
                catalog_package(j % cfg.package_catalog),
                PackageDep::new(format!("bg-util-{j}"), 1),
            ])
        })
        .collect();
    arrivals.push(victim.clone());
    use rand::seq::SliceRandom;
    arrivals.shuffle(&mut arrival_rng);

    let attackers: Vec<FunctionSpec> = (0..n_attackers)
        .map(|i| {
            FunctionSpec::new(
                crate::attack::ATTACK_FUNCTION_BASE + i as FunctionId,
                format!("att-acct-{i}"),
                ATTACKER_USER_BASE + i as UserId,
            )
            .with_packages(vec![PackageDep::new("att-payload", 32)])
        })
        .collect();
    let attacker_users: BTreeSet<UserId> = attackers.iter().map(|a| a.owner).collect();

    // Background keep-alive period: half the TTL so no tenant ever expires.
    let bg_period = (cfg.ttl / 2).max(1);
    let total_rounds = cfg.warmup_rounds
        + cfg.attacker_stagger * n_attackers as u32
        + cfg.attempt_gap * cfg.attempts
        + cfg.ttl
        + 2;

    let mut colocated = false;
    for round in 0..total_rounds {
        if round == 0 {
            for spec in &arrivals {
                sim.invoke(spec)?;
            }
        } else {
            for (j, spec) in arrivals.iter().enumerate() {
                if spec.owner == VICTIM_USER {
                    continue; // the victim has its own cadence below
                }
                if round % bg_period == j as u32 % bg_period {
                    sim.invoke(spec)?;
                }
            }
            if round % cfg.victim_period == 0 {
                let d = sim.invoke(&victim)?;
                if d.cold {
                    let node = sim.cluster().node(d.node_id);
                    if node.user_set().any(|u| attacker_users.contains(&u)) {
                        colocated = true;
                    }
                }
            }
        }
        for (i, spec) in attackers.iter().enumerate() {
            let start = cfg.warmup_rounds + cfg.attacker_stagger * i as u32;
            if round < start {
                continue;
            }
            let local = round - start;
            if local % cfg.attempt_gap == 0 && local / cfg.attempt_gap < cfg.attempts {
                for _ in 0..cfg.attempt_burst {
                    let d = sim.invoke(spec)?;
                    if d.cold && sim.cluster().node(d.node_id).serves_user(VICTIM_USER) {
                        colocated = true;
                    }
                }
            }
        }
        sim.tick();
    }
    Ok(colocated)
}

/// Attack-resistance comparison: success rate against the soft-isolation
/// policy and against the auto-scaling policy, per attacker count.
pub fn doubledip_eval(cfg: &ExperimentConfig) -> Result<Vec<DoubledipRow>, ExperimentError> {
    let mut rows = Vec::new();
    for kind in [PolicyKind::DoubleDip, PolicyKind::Helper] {
        for &a in &cfg.n_attackers {
            let mut hits = Vec::with_capacity(cfg.runs);
            for i in 0..cfg.runs {
                let seed = derive_seed(cfg.seed, &format!("doubledip:{kind}:a{a}:run{i}"));
                hits.push(doubledip_run(cfg, kind, a, seed)?);
            }
            rows.push(DoubledipRow {
                scheduler: kind,
                n_attackers: a,
                success_rate: success_rate(&hits)?,
                runs: cfg.runs,
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// recipe: warm-start cost

#[derive(Debug, Clone, Copy)]
pub struct WarmstartRow {
    pub scheduler: PolicyKind,
    pub warm_start_ratio: f64,
    pub runs: usize,
}

/// One seeded run of the multi-tenant cost workload: `n_users` tenants,
/// each owning `functions_per_user` functions whose types come from a
/// shared catalog of `function_types`; every round each user invokes one
/// of their functions until `total_invocations` executions ran. The
/// reported ratio uses per-worker type memory.
fn warmstart_run(
    cfg: &ExperimentConfig,
    kind: PolicyKind,
    seed: u64,
) -> Result<f64, ExperimentError> {
    let mut sim = Simulation::new(kind, cfg.sim_params(), derive_seed(seed, "sim"));
    let mut type_rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, "types"));
    let fpu = cfg.functions_per_user;
    let mut functions = Vec::with_capacity(cfg.n_users * fpu);
    let mut type_of = std::collections::BTreeMap::new();
    for u in 0..cfg.n_users {
        for j in 0..fpu {
            let fid = WORKLOAD_FUNCTION_BASE + (u * fpu + j) as FunctionId;
            let ty = type_rng.gen_range(0..cfg.function_types) as u64;
            type_of.insert(fid, ty);
            functions.push(
                FunctionSpec::new(fid, format!("user{u}-fn{j}"), BACKGROUND_USER_BASE + u as UserId)
                    .with_packages(vec![PackageDep::new(format!("type-pkg-{ty}"), 32)])
                    .with_app(u as u64),
            );
        }
    }
    let rounds = cfg.total_invocations / cfg.n_users;
    for round in 0..rounds {
        for u in 0..cfg.n_users {
            let spec = &functions[u * fpu + (round % fpu)];
            sim.invoke(spec)?;
        }
        sim.tick();
    }
    Ok(warm_start_ratio_typed(sim.cluster().log(), |fid| {
        type_of.get(&fid).copied().unwrap_or(fid)
    })?)
}

pub fn warmstart_cost(cfg: &ExperimentConfig) -> Result<Vec<WarmstartRow>, ExperimentError> {
    let mut rows = Vec::new();
    for kind in [PolicyKind::Helper, PolicyKind::DoubleDip, PolicyKind::OpenWhisk] {
        let mut total = 0.0;
        for i in 0..cfg.runs {
            let seed = derive_seed(cfg.seed, &format!("warmstart:{kind}:run{i}"));
            total += warmstart_run(cfg, kind, seed)?;
        }
        rows.push(WarmstartRow {
            scheduler: kind,
            warm_start_ratio: total / cfg.runs as f64,
            runs: cfg.runs,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// recipe: oracle sweep

#[derive(Debug, Clone, Copy)]
pub struct OracleRow {
    pub n: u64,
    pub alpha: u64,
    pub beta: u64,
    pub r: u64,
    pub p: f64,
    pub e_colocated_random: f64,
    pub p_invocation_locality: f64,
    pub p_autoscaling: f64,
    pub p_config_locality: f64,
}

pub fn oracle_sweep(cfg: &ExperimentConfig) -> Result<Vec<OracleRow>, ExperimentError> {
    let mut rows = Vec::new();
    for &n in &cfg.oracle_n {
        for &alpha in &cfg.oracle_alpha {
            let map_err = |_e: oracle::DomainError| {
                ConfigError::Field { msg: "oracle parameters out of domain".into() }
            };
            rows.push(OracleRow {
                n,
                alpha,
                beta: cfg.oracle_beta,
                r: cfg.oracle_r,
                p: cfg.oracle_p,
                e_colocated_random: oracle::e_colocated_random(n, alpha, cfg.oracle_beta)
                    .map_err(map_err)?,
                p_invocation_locality: oracle::p_colocate_invocation_locality(n, alpha)
                    .map_err(map_err)?,
                p_autoscaling: oracle::p_colocate_autoscaling(n, alpha, cfg.oracle_r)
                    .map_err(map_err)?,
                p_config_locality: oracle::p_colocate_config_locality(alpha, cfg.oracle_p)
                    .map_err(map_err)?,
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// dispatch + emission

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// (file name, contents) pairs; written under `out_dir` by
    /// [`write_output`].
    pub files: Vec<(String, String)>,
    /// One-paragraph stdout summary.
    pub summary: String,
}

fn manifest(cfg: &ExperimentConfig) -> String {
    format!(
        "# run manifest\n{}config_hash = {:016x}\nrng = {}\nplacement_hash = {}\nrun_seed_rule = fnv1a64-splitmix64(\"<seed>:<tag>\")\n",
        cfg.canonical_string(),
        cfg.config_hash(),
        RNG_ALGORITHM,
        HASH_ALGORITHM,
    )
}

/// Runs the configured experiment and renders its artifacts. Pure with
/// respect to the filesystem; pair with [`write_output`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    let hash = format!("{:016x}", cfg.config_hash());
    let mut files = vec![("manifest.txt".to_string(), manifest(cfg))];
    let summary;

    match cfg.experiment {
        ExperimentKind::Fingerprint => {
            let results = fingerprint_features(cfg)?;
            let mut csv = String::from("scheduler,f1,f2,f3,f4,f5,seed,config_hash\n");
            let mut lines = Vec::new();
            for (kind, m, traces) in &results {
                let seed = derive_seed(cfg.seed, &format!("fingerprint:{kind}"));
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    kind,
                    u8::from(m.f1_invocation_locality),
                    u8::from(m.f2_auto_scaling),
                    u8::from(m.f3_cold_start_same_location),
                    u8::from(m.f4_account_locality),
                    m.f5_config_locality.as_str(),
                    seed,
                    hash,
                ));
                files.push((format!("trace_{kind}.csv"), traces.to_csv()));
                lines.push(format!(
                    "{kind}: F1={} F2={} F3={} F4={} F5={}",
                    m.f1_invocation_locality,
                    m.f2_auto_scaling,
                    m.f3_cold_start_same_location,
                    m.f4_account_locality,
                    m.f5_config_locality.as_str()
                ));
            }
            files.push(("features.csv".to_string(), csv));
            summary = lines.join("\n");
        }
        ExperimentKind::Attack => {
            let mut summary_csv = String::from(
                "scheduler,strategy,k,ae,pa,max_pa,warm_start_ratio,success_rate,runs,seed,config_hash\n",
            );
            let mut runs_csv = String::from(
                "scheduler,strategy,k,run_idx,seed,colocated,ae,pa,max_pa,warm_start_ratio,config_hash\n",
            );
            let mut lines = Vec::new();
            for &k in &cfg.k_functions {
                let cell = run_attack_cell(cfg, cfg.scheduler, cfg.strategy, k)?;
                for row in &cell.rows {
                    runs_csv.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{}\n",
                        cell.scheduler,
                        cell.strategy,
                        k,
                        row.run_idx,
                        row.seed,
                        u8::from(row.colocated),
                        fmt_opt(row.ae),
                        fmt_opt(row.pa),
                        fmt_opt(row.max_pa),
                        fmt_opt(row.warm_start_ratio),
                        hash,
                    ));
                }
                if cfg.write_logs {
                    for row in &cell.rows {
                        let rerun = run_attack_once(
                            cfg,
                            cfg.scheduler,
                            cfg.strategy,
                            k,
                            row.run_idx,
                            row.seed,
                        )?;
                        files.push((
                            format!(
                                "events_{}_{}_k{}_run{}.csv",
                                cell.scheduler, cell.strategy, k, row.run_idx
                            ),
                            rerun.log.to_csv(),
                        ));
                    }
                }
                summary_csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    cell.scheduler,
                    cell.strategy,
                    k,
                    fmt_opt(cell.mean_of(|r| r.ae)),
                    fmt_opt(cell.mean_of(|r| r.pa)),
                    fmt_opt(cell.mean_of(|r| r.max_pa)),
                    fmt_opt(cell.mean_of(|r| r.warm_start_ratio)),
                    cell.success_rate(),
                    cfg.runs,
                    cfg.seed,
                    hash,
                ));
                lines.push(format!(
                    "{} x {} k={k}: success_rate={:.3}",
                    cell.scheduler,
                    cell.strategy,
                    cell.success_rate()
                ));
            }
            files.push(("summary.csv".to_string(), summary_csv));
            files.push(("runs.csv".to_string(), runs_csv));
            summary = lines.join("\n");
        }
        ExperimentKind::TransferMatrix => {
            let cells = transfer_matrix(cfg)?;
            let mut csv =
                String::from("scheduler,strategy,k,success_rate,runs,seed,config_hash\n");
            let mut lines = Vec::new();
            for c in &cells {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    c.scheduler, c.strategy, c.k, c.success_rate, cfg.runs, cfg.seed, hash
                ));
                lines.push(format!(
                    "{} x {}: {:.3}",
                    c.scheduler, c.strategy, c.success_rate
                ));
            }
            files.push(("transfer.csv".to_string(), csv));
            summary = lines.join("\n");
        }
        ExperimentKind::DoubledipEval => {
            let rows = doubledip_eval(cfg)?;
            let mut csv = String::from(
                "scheduler,n_attackers,attempts,success_rate,runs,seed,config_hash\n",
            );
            let mut lines = Vec::new();
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.scheduler, r.n_attackers, cfg.attempts, r.success_rate, r.runs, cfg.seed, hash
                ));
                lines.push(format!(
                    "{} attackers={}: success_rate={:.3}",
                    r.scheduler, r.n_attackers, r.success_rate
                ));
            }
            files.push(("doubledip.csv".to_string(), csv));
            summary = lines.join("\n");
        }
        ExperimentKind::WarmstartCost => {
            let rows = warmstart_cost(cfg)?;
            let mut csv = String::from(
                "scheduler,n_users,total_invocations,warm_start_ratio,runs,seed,config_hash\n",
            );
            let mut lines = Vec::new();
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.scheduler,
                    cfg.n_users,
                    cfg.total_invocations,
                    r.warm_start_ratio,
                    r.runs,
                    cfg.seed,
                    hash
                ));
                lines.push(format!("{}: warm_start_ratio={:.4}", r.scheduler, r.warm_start_ratio));
            }
            files.push(("warmstart.csv".to_string(), csv));
            summary = lines.join("\n");
        }
        ExperimentKind::OracleSweep => {
            let rows = oracle_sweep(cfg)?;
            let mut csv = String::from(
                "n,alpha,beta,r,p,e_colocated_random,p_invocation_locality,p_autoscaling,p_config_locality,config_hash\n",
            );
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.n,
                    r.alpha,
                    r.beta,
                    r.r,
                    r.p,
                    r.e_colocated_random,
                    r.p_invocation_locality,
                    r.p_autoscaling,
                    r.p_config_locality,
                    hash
                ));
            }
            files.push(("oracle.csv".to_string(), csv));
            summary = format!("{} oracle rows", rows.len());
        }
    }

    Ok(ExperimentOutput { files, summary })
}

/// Writes every artifact under `out_dir`, creating it if needed.
pub fn write_output(
    cfg: &ExperimentConfig,
    output: &ExperimentOutput,
) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(&cfg.out_dir)?;
    let mut written = Vec::new();
    for (name, contents) in &output.files {
        let path = cfg.out_dir.join(name);
        fs::write(&path, contents)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn small_attack_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults_for(ExperimentKind::Attack);
        cfg.n_nodes = 50;
        cfg.runs = 5;
        cfg.rounds = 10;
        cfg.k_functions = vec![2];
        cfg.scheduler = PolicyKind::Random;
        cfg
    }

    #[test]
    fn attack_cells_are_reproducible() {
        let cfg = small_attack_cfg();
        let a = run_attack_cell(&cfg, PolicyKind::Random, Strategy::M1, 2).unwrap();
        let b = run_attack_cell(&cfg, PolicyKind::Random, Strategy::M1, 2).unwrap();
        let flags =
            |c: &CellResult| c.rows.iter().map(|r| r.colocated).collect::<Vec<_>>();
        assert_eq!(flags(&a), flags(&b));
    }

    #[test]
    fn run_experiment_outputs_are_byte_identical_across_calls() {
        let mut cfg = small_attack_cfg();
        cfg.write_logs = true;
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.files, b.files);
        assert!(a.files.iter().any(|(n, _)| n == "manifest.txt"));
        assert!(a.files.iter().any(|(n, _)| n == "summary.csv"));
        assert!(a.files.iter().any(|(n, _)| n.starts_with("events_")));
    }

    #[test]
    fn summary_rows_carry_seed_and_config_hash() {
        let cfg = small_attack_cfg();
        let out = run_experiment(&cfg).unwrap();
        let (_, summary) = out.files.iter().find(|(n, _)| n == "summary.csv").unwrap();
        let hash = format!("{:016x}", cfg.config_hash());
        for line in summary.lines().skip(1) {
            assert!(line.contains(&hash), "row missing config hash: {line}");
            assert!(line.split(',').any(|f| f == cfg.seed.to_string()));
        }
    }

    #[test]
    fn oracle_sweep_runs_from_minimal_config() {
        let cfg = parse_config("experiment = oracle_sweep\n").unwrap();
        let rows = oracle_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), cfg.oracle_n.len() * cfg.oracle_alpha.len());
        for r in rows {
            assert!(r.p_autoscaling <= r.p_invocation_locality);
        }
    }

    #[test]
    fn aggregate_means_are_recomputable_from_rows() {
        let cfg = small_attack_cfg();
        let cell = run_attack_cell(&cfg, PolicyKind::Random, Strategy::M1, 2).unwrap();
        let manual: Vec<f64> = cell.rows.iter().filter_map(|r| r.warm_start_ratio).collect();
        let mean = manual.iter().sum::<f64>() / manual.len() as f64;
        assert!((cell.mean_of(|r| r.warm_start_ratio).unwrap() - mean).abs() < 1e-12);
    }
}
