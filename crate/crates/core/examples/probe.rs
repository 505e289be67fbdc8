// Temporary calibration probe; not part of the deliverable.
use schedsim::config::{ExperimentConfig, ExperimentKind};
use schedsim::experiment::fingerprint_features;

fn main() {
    let mut cfg = ExperimentConfig::defaults_for(ExperimentKind::Fingerprint);
    if let Some(seed) = std::env::args().nth(1) {
        cfg.seed = seed.parse().unwrap();
    }
    let t0 = std::time::Instant::now();
    for (kind, m, traces) in fingerprint_features(&cfg).unwrap() {
        let p1: Vec<u32> = traces.phases[0].samples.iter().map(|s| s.server_id).collect();
        let distinct: std::collections::BTreeSet<u32> = p1.iter().copied().collect();
        println!(
            "{kind::<10} F1={} F2={} F3={} F4={} F5={:8} phase1_distinct={} ",
            m.f1_invocation_locality,
            m.f2_auto_scaling,
            m.f3_cold_start_same_location,
            m.f4_account_locality,
            m.f5_config_locality.as_str(),
            distinct.len(),
        );
    }
    println!("elapsed: {:?}", t0.elapsed());
}
