//! Experiment configuration: a flat `key = value` text format with `#`
//! comments and comma-separated lists. Parsing is strict — unknown keys
//! are rejected with the offending line number — and every field has a
//! per-experiment default so a minimal config is just the `experiment`
//! line.

use std::path::PathBuf;

use crate::attack::Strategy;
use crate::engine::SimParams;
use crate::fingerprint::{InferParams, LocalityAxis, ProtocolConfig};
use crate::sched::{PolicyKind, PolicyParams};
use crate::stable_hash64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Fingerprint,
    Attack,
    TransferMatrix,
    DoubledipEval,
    WarmstartCost,
    OracleSweep,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Fingerprint => "fingerprint",
            ExperimentKind::Attack => "attack",
            ExperimentKind::TransferMatrix => "transfer_matrix",
            ExperimentKind::DoubledipEval => "doubledip_eval",
            ExperimentKind::WarmstartCost => "warmstart_cost",
            ExperimentKind::OracleSweep => "oracle_sweep",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fingerprint" => Ok(ExperimentKind::Fingerprint),
            "attack" => Ok(ExperimentKind::Attack),
            "transfer_matrix" => Ok(ExperimentKind::TransferMatrix),
            "doubledip_eval" => Ok(ExperimentKind::DoubledipEval),
            "warmstart_cost" => Ok(ExperimentKind::WarmstartCost),
            "oracle_sweep" => Ok(ExperimentKind::OracleSweep),
            other => Err(format!(
                "unknown experiment {other:?}, expected fingerprint | attack | transfer_matrix | doubledip_eval | warmstart_cost | oracle_sweep"
            )),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{msg}")]
    Field { msg: String },
}

impl ConfigError {
    fn at(line: usize, msg: impl Into<String>) -> Self {
        ConfigError::Line { line, msg: msg.into() }
    }

    fn field(msg: impl Into<String>) -> Self {
        ConfigError::Field { msg: msg.into() }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_nodes: usize,
    pub node_capacity: u32,
    pub ttl: u32,
    pub scheduler: PolicyKind,
    pub strategy: Strategy,
    pub k_functions: Vec<usize>,
    pub n_attackers: Vec<usize>,
    pub runs: usize,
    pub rounds: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub write_logs: bool,
    // scheduler knobs
    pub scale_r: u32,
    pub ring_points: usize,
    // fingerprint protocol
    pub phase_len: usize,
    pub drain_len: u32,
    pub n_variants: usize,
    pub locality_axis: LocalityAxis,
    pub locality_max_distinct_ratio: f64,
    pub min_repeat_run: usize,
    pub growth_windows: usize,
    pub growth_min_increases: usize,
    // attack experiments
    pub knows_packages: bool,
    pub package_catalog: usize,
    pub victim_period: u32,
    // doubledip evaluation workload
    pub background_users: usize,
    pub attempts: u32,
    pub attempt_gap: u32,
    pub attempt_burst: u32,
    pub attacker_stagger: u32,
    pub warmup_rounds: u32,
    // warm-start cost workload
    pub n_users: usize,
    pub total_invocations: usize,
    pub functions_per_user: usize,
    pub function_types: usize,
    // metrics
    pub pa_windows: usize,
    // oracle sweep
    pub oracle_n: Vec<u64>,
    pub oracle_alpha: Vec<u64>,
    pub oracle_beta: u64,
    pub oracle_r: u64,
    pub oracle_p: f64,
}

impl ExperimentConfig {
    /// Defaults per experiment; cluster shape and run counts follow the
    /// canned setups each experiment reproduces.
    pub fn defaults_for(kind: ExperimentKind) -> Self {
        let mut cfg = Self {
            experiment: kind,
            n_nodes: 1000,
            node_capacity: 1024,
            ttl: 20,
            scheduler: PolicyKind::Random,
            strategy: Strategy::M1,
            k_functions: vec![1, 4, 16, 64],
            n_attackers: vec![5, 10, 20, 30, 50],
            runs: 50,
            rounds: 30,
            seed: 42,
            out_dir: PathBuf::from("out"),
            write_logs: false,
            scale_r: 10,
            ring_points: 100,
            phase_len: 2000,
            drain_len: 25,
            n_variants: 8,
            locality_axis: LocalityAxis::Package,
            locality_max_distinct_ratio: 0.25,
            min_repeat_run: 3,
            growth_windows: 4,
            growth_min_increases: 2,
            knows_packages: true,
            package_catalog: 256,
            victim_period: 1,
            background_users: 99,
            attempts: 10,
            attempt_gap: 4,
            attempt_burst: 10,
            attacker_stagger: 2,
            warmup_rounds: 20,
            n_users: 50,
            total_invocations: 5000,
            functions_per_user: 1,
            function_types: 8,
            pa_windows: 10,
            oracle_n: vec![10, 100, 1000],
            oracle_alpha: vec![1, 2, 4, 8, 16, 32, 64],
            oracle_beta: 1,
            oracle_r: 10,
            oracle_p: 0.1,
        };
        match kind {
            ExperimentKind::DoubledipEval => {
                cfg.n_nodes = 100;
                cfg.runs = 1000;
                cfg.victim_period = 8;
            }
            ExperimentKind::WarmstartCost => {
                cfg.n_nodes = 20;
                cfg.runs = 10;
            }
            _ => {}
        }
        cfg
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            n_nodes: self.n_nodes,
            node_capacity: self.node_capacity,
            ttl: self.ttl,
            policy: PolicyParams { scale_r: self.scale_r, ring_points: self.ring_points },
        }
    }

    pub fn protocol_config(&self) -> ProtocolConfig {
        ProtocolConfig {
            phase_len: self.phase_len,
            drain_len: self.drain_len,
            n_variants: self.n_variants,
            locality_axis: self.locality_axis,
        }
    }

    pub fn infer_params(&self) -> InferParams {
        InferParams {
            locality_max_distinct_ratio: self.locality_max_distinct_ratio,
            min_repeat_run: self.min_repeat_run,
            growth_windows: self.growth_windows,
            growth_min_increases: self.growth_min_increases,
        }
    }

    /// Canonical `key = value` rendering of every field, in a fixed order.
    /// The config hash stamped on output rows is the stable hash of this text.
    pub fn canonical_string(&self) -> String {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let list64 = |v: &[u64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        format!(
            "experiment = {}\n\
             n_nodes = {}\nnode_capacity = {}\nttl = {}\n\
             scheduler = {}\nstrategy = {}\n\
             k_functions = {}\nn_attackers = {}\n\
             runs = {}\nrounds = {}\nseed = {}\nout_dir = {}\nwrite_logs = {}\n\
             scale_r = {}\nring_points = {}\n\
             phase_len = {}\ndrain_len = {}\nn_variants = {}\nlocality_axis = {}\n\
             locality_max_distinct_ratio = {}\nmin_repeat_run = {}\n\
             growth_windows = {}\ngrowth_min_increases = {}\n\
             knows_packages = {}\npackage_catalog = {}\nvictim_period = {}\n\
             background_users = {}\nattempts = {}\nattempt_gap = {}\n\
             attempt_burst = {}\nattacker_stagger = {}\nwarmup_rounds = {}\n\
             n_users = {}\ntotal_invocations = {}\nfunctions_per_user = {}\nfunction_types = {}\n\
             pa_windows = {}\n\
             oracle_n = {}\noracle_alpha = {}\noracle_beta = {}\noracle_r = {}\noracle_p = {}\n",
            self.experiment.as_str(),
            self.n_nodes,
            self.node_capacity,
            self.ttl,
            self.scheduler,
            self.strategy,
            list(&self.k_functions),
            list(&self.n_attackers),
            self.runs,
            self.rounds,
            self.seed,
            self.out_dir.display(),
            self.write_logs,
            self.scale_r,
            self.ring_points,
            self.phase_len,
            self.drain_len,
            self.n_variants,
            self.locality_axis.as_str(),
            self.locality_max_distinct_ratio,
            self.min_repeat_run,
            self.growth_windows,
            self.growth_min_increases,
            self.knows_packages,
            self.package_catalog,
            self.victim_period,
            self.background_users,
            self.attempts,
            self.attempt_gap,
            self.attempt_burst,
            self.attacker_stagger,
            self.warmup_rounds,
            self.n_users,
            self.total_invocations,
            self.functions_per_user,
            self.function_types,
            self.pa_windows,
            list64(&self.oracle_n),
            list64(&self.oracle_alpha),
            self.oracle_beta,
            self.oracle_r,
            self.oracle_p,
        )
    }

    /// Hash stamped on every output row so results stay traceable to the
    /// exact configuration that produced them.
    pub fn config_hash(&self) -> u64 {
        stable_hash64(self.canonical_string().as_bytes())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let ensure = |cond: bool, msg: &str| {
            if cond {
                Ok(())
            } else {
                Err(ConfigError::field(msg))
            }
        };
        ensure(self.n_nodes >= 1, "n_nodes must be >= 1")?;
        ensure(self.node_capacity >= 1, "node_capacity must be >= 1")?;
        ensure(self.ttl >= 1, "ttl must be >= 1")?;
        ensure(self.runs >= 1, "runs must be >= 1")?;
        ensure(self.rounds >= 1, "rounds must be >= 1")?;
        ensure(!self.k_functions.is_empty(), "k_functions sweep must not be empty")?;
        ensure(
            self.k_functions.iter().all(|&k| k >= 1),
            "k_functions entries must be >= 1",
        )?;
        ensure(!self.n_attackers.is_empty(), "n_attackers sweep must not be empty")?;
        ensure(
            self.n_attackers.iter().all(|&a| a >= 1),
            "n_attackers entries must be >= 1",
        )?;
        ensure(self.scale_r >= 1, "scale_r must be >= 1")?;
        ensure(self.ring_points >= 1, "ring_points must be >= 1")?;
        ensure(self.drain_len >= self.ttl, "drain_len must be >= ttl so phases start clean")?;
        ensure(
            self.n_variants >= 4 && self.n_variants % 2 == 0,
            "n_variants must be an even number >= 4",
        )?;
        ensure(
            self.phase_len >= self.growth_windows && self.growth_windows >= 2,
            "phase_len must cover growth_windows and growth_windows must be >= 2",
        )?;
        ensure(
            self.locality_max_distinct_ratio > 0.0 && self.locality_max_distinct_ratio <= 1.0,
            "locality_max_distinct_ratio must lie in (0, 1]",
        )?;
        ensure(self.min_repeat_run >= 2, "min_repeat_run must be >= 2")?;
        ensure(
            self.growth_min_increases >= 1,
            "growth_min_increases must be >= 1",
        )?;
        let max_k = self.k_functions.iter().copied().max().unwrap_or(1);
        ensure(
            self.package_catalog >= max_k,
            "package_catalog must cover the largest k_functions entry",
        )?;
        ensure(self.victim_period >= 1, "victim_period must be >= 1")?;
        ensure(self.attempts >= 1, "attempts must be >= 1")?;
        ensure(self.attempt_gap >= 1, "attempt_gap must be >= 1")?;
        ensure(self.attempt_burst >= 1, "attempt_burst must be >= 1")?;
        ensure(self.n_users >= 1, "n_users must be >= 1")?;
        ensure(self.functions_per_user >= 1, "functions_per_user must be >= 1")?;
        ensure(self.function_types >= 1, "function_types must be >= 1")?;
        ensure(
            self.total_invocations >= self.n_users,
            "total_invocations must cover at least one invocation per user",
        )?;
        ensure(self.pa_windows >= 1, "pa_windows must be >= 1")?;
        ensure(!self.oracle_n.is_empty(), "oracle_n sweep must not be empty")?;
        ensure(self.oracle_n.iter().all(|&n| n >= 1), "oracle_n entries must be >= 1")?;
        ensure(!self.oracle_alpha.is_empty(), "oracle_alpha sweep must not be empty")?;
        ensure(self.oracle_r >= 1, "oracle_r must be >= 1")?;
        ensure(
            self.oracle_p > 0.0 && self.oracle_p <= 1.0,
            "oracle_p must lie in (0, 1]",
        )?;
        Ok(())
    }
}

fn split_key_value(line: &str) -> Option<(&str, &str)> {
    let stripped = match line.find('#') {
        Some(idx) => &line[..idx],
        None => line,
    };
    let trimmed = stripped.trim();
    if trimmed.is_empty() {
        return None;
    }
    let (key, value) = trimmed.split_once('=')?;
    Some((key.trim(), value.trim()))
}

/// Strict parse: the `experiment` key selects the default set, every other
/// key overrides one field, unknown keys and malformed values fail with
/// the offending line.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut kind = None;
    for (idx, line) in text.lines().enumerate() {
        if let Some(("experiment", value)) = split_key_value(line) {
            let parsed = value
                .parse::<ExperimentKind>()
                .map_err(|e| ConfigError::at(idx + 1, e))?;
            if kind.is_some() {
                return Err(ConfigError::at(idx + 1, "duplicate experiment key"));
            }
            kind = Some(parsed);
        }
    }
    let kind = kind.ok_or_else(|| ConfigError::field("missing required key: experiment"))?;
    let mut cfg = ExperimentConfig::defaults_for(kind);

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let Some((key, value)) = split_key_value(line) else { continue };
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::at(lineno, "expected `key = value`"));
        }
        let bad = |what: &str| ConfigError::at(lineno, format!("bad {what} value: {value:?}"));
        macro_rules! num {
            ($t:ty, $what:expr) => {
                value.parse::<$t>().map_err(|_| bad($what))?
            };
        }
        let parse_list_usize = || -> Result<Vec<usize>, ConfigError> {
            value
                .split(',')
                .map(|p| p.trim().parse::<usize>().map_err(|_| bad("list")))
                .collect()
        };
        let parse_list_u64 = || -> Result<Vec<u64>, ConfigError> {
            value
                .split(',')
                .map(|p| p.trim().parse::<u64>().map_err(|_| bad("list")))
                .collect()
        };
        let parse_bool = || -> Result<bool, ConfigError> {
            match value {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(bad("boolean")),
            }
        };
        match key {
            "experiment" => {} // handled in the first pass
            "n_nodes" => cfg.n_nodes = num!(usize, "n_nodes"),
            "node_capacity" => cfg.node_capacity = num!(u32, "node_capacity"),
            "ttl" => cfg.ttl = num!(u32, "ttl"),
            "scheduler" => {
                cfg.scheduler = value.parse().map_err(|e: String| ConfigError::at(lineno, e))?
            }
            "strategy" => {
                cfg.strategy = value.parse().map_err(|e: String| ConfigError::at(lineno, e))?
            }
            "k_functions" => cfg.k_functions = parse_list_usize()?,
            "n_attackers" => cfg.n_attackers = parse_list_usize()?,
            "runs" => cfg.runs = num!(usize, "runs"),
            "rounds" => cfg.rounds = num!(u32, "rounds"),
            "seed" => cfg.seed = num!(u64, "seed"),
            "out_dir" => cfg.out_dir = PathBuf::from(value),
            "write_logs" => cfg.write_logs = parse_bool()?,
            "scale_r" => cfg.scale_r = num!(u32, "scale_r"),
            "ring_points" => cfg.ring_points = num!(usize, "ring_points"),
            "phase_len" => cfg.phase_len = num!(usize, "phase_len"),
            "drain_len" => cfg.drain_len = num!(u32, "drain_len"),
            "n_variants" => cfg.n_variants = num!(usize, "n_variants"),
            "locality_axis" => {
                cfg.locality_axis = match value {
                    "package" => LocalityAxis::Package,
                    "app" => LocalityAxis::App,
                    _ => return Err(bad("locality_axis")),
                }
            }
            "locality_max_distinct_ratio" => {
                cfg.locality_max_distinct_ratio = num!(f64, "locality_max_distinct_ratio")
            }
            "min_repeat_run" => cfg.min_repeat_run = num!(usize, "min_repeat_run"),
            "growth_windows" => cfg.growth_windows = num!(usize, "growth_windows"),
            "growth_min_increases" => {
                cfg.growth_min_increases = num!(usize, "growth_min_increases")
            }
            "knows_packages" => cfg.knows_packages = parse_bool()?,
            "package_catalog" => cfg.package_catalog = num!(usize, "package_catalog"),
            "victim_period" => cfg.victim_period = num!(u32, "victim_period"),
            "background_users" => cfg.background_users = num!(usize, "background_users"),
            "attempts" => cfg.attempts = num!(u32, "attempts"),
            "attempt_gap" => cfg.attempt_gap = num!(u32, "attempt_gap"),
            "attempt_burst" => cfg.attempt_burst = num!(u32, "attempt_burst"),
            "attacker_stagger" => cfg.attacker_stagger = num!(u32, "attacker_stagger"),
            "warmup_rounds" => cfg.warmup_rounds = num!(u32, "warmup_rounds"),
            "n_users" => cfg.n_users = num!(usize, "n_users"),
            "total_invocations" => cfg.total_invocations = num!(usize, "total_invocations"),
            "functions_per_user" => cfg.functions_per_user = num!(usize, "functions_per_user"),
            "function_types" => cfg.function_types = num!(usize, "function_types"),
            "pa_windows" => cfg.pa_windows = num!(usize, "pa_windows"),
            "oracle_n" => cfg.oracle_n = parse_list_u64()?,
            "oracle_alpha" => cfg.oracle_alpha = parse_list_u64()?,
            "oracle_beta" => cfg.oracle_beta = num!(u64, "oracle_beta"),
            "oracle_r" => cfg.oracle_r = num!(u64, "oracle_r"),
            "oracle_p" => cfg.oracle_p = num!(f64, "oracle_p"),
            unknown => {
                return Err(ConfigError::at(lineno, format!("unknown key {unknown:?}")));
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config("experiment = attack\n").unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Attack);
        assert_eq!(cfg.n_nodes, 1000);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.k_functions, vec![1, 4, 16, 64]);
    }

    #[test]
    fn per_experiment_defaults_differ() {
        let dd = parse_config("experiment = doubledip_eval\n").unwrap();
        assert_eq!(dd.n_nodes, 100);
        assert_eq!(dd.runs, 1000);
        let ws = parse_config("experiment = warmstart_cost\n").unwrap();
        assert_eq!(ws.n_nodes, 20);
    }

    #[test]
    fn unknown_key_is_rejected_with_its_line() {
        let err = parse_config("experiment = attack\nfoo = 1\n").unwrap_err();
        assert_eq!(err, ConfigError::Line { line: 2, msg: "unknown key \"foo\"".into() });
    }

    #[test]
    fn missing_experiment_key_is_an_error() {
        assert!(matches!(parse_config("runs = 5\n"), Err(ConfigError::Field { .. })));
    }

    #[test]
    fn lists_and_comments_parse() {
        let text = "\
# paper setup
experiment = doubledip_eval
n_attackers = 5,10,20,30,50   # sweep
seed = 7
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.n_attackers, vec![5, 10, 20, 30, 50]);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn validation_catches_bad_fields() {
        assert!(parse_config("experiment = attack\nruns = 0\n").is_err());
        assert!(parse_config("experiment = fingerprint\ndrain_len = 3\n").is_err());
        assert!(parse_config("experiment = attack\nk_functions = 1,0\n").is_err());
        assert!(parse_config("experiment = oracle_sweep\noracle_p = 1.5\n").is_err());
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = parse_config("experiment = attack\n").unwrap();
        let b = parse_config("experiment = attack\nseed = 43\n").unwrap();
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash(), parse_config("experiment = attack\n").unwrap().config_hash());
    }
}
