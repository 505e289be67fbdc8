//! Deterministic serverless-cluster simulator and analysis toolkit.
//!
//! The crate models a cluster of worker nodes hosting serverless function
//! instances ("function hosts") with keep-alive TTLs, five placement
//! policies behind one scheduler abstraction, a three-phase scheduler
//! fingerprinting protocol, co-location attack strategies, the metrics
//! computed from event logs (AE, PA, warm-start ratio, success rate), and
//! closed-form probability oracles used to cross-check Monte Carlo runs.
//!
//! Everything is seeded and single-threaded per simulation: a `(config,
//! seed)` pair fully determines every event and every output byte.

pub mod attack;
pub mod cluster;
pub mod config;
pub mod engine;
pub mod experiment;
pub mod fingerprint;
pub mod log;
pub mod metrics;
pub mod oracle;
pub mod sched;

pub use cluster::{ClusterState, FunctionSpec, HostRecord, NodeState, PackageDep, Touch};
pub use log::{EventKind, EventLog, LogEntry};
pub use sched::{PolicyKind, SchedulingDecision};

/// Node index within a cluster, `0..n_nodes`.
pub type NodeId = usize;
/// Owning account of a function.
pub type UserId = u64;
/// Unique id of a deployed function.
pub type FunctionId = u64;

/// Stable 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// The placement hash: FNV-1a finished with a splitmix64 avalanche. Plain
/// FNV leaves near-identical short keys (sequential package names) close
/// together in hash space, which would pile them onto one ring arc; the
/// finalizer spreads them. Recorded in run manifests as
/// `fnv1a64-splitmix64` so traces stay reproducible across builds.
pub fn stable_hash64(bytes: &[u8]) -> u64 {
    let mut z = fnv1a64(bytes);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::fnv1a64;

    #[test]
    fn fnv_reference_vectors() {
        // Published FNV-1a test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }
}
