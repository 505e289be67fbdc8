// Temporary calibration probe; not part of the deliverable.
use schedsim::config::{ExperimentConfig, ExperimentKind};
use schedsim::experiment::doubledip_eval;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = ExperimentConfig::defaults_for(ExperimentKind::DoubledipEval);
    cfg.runs = 300;
    for pair in &args {
        let (k, v) = pair.split_once('=').unwrap();
        match k {
            "runs" => cfg.runs = v.parse().unwrap(),
            "seed" => cfg.seed = v.parse().unwrap(),
            "stagger" => cfg.attacker_stagger = v.parse().unwrap(),
            "gap" => cfg.attempt_gap = v.parse().unwrap(),
            "burst" => cfg.attempt_burst = v.parse().unwrap(),
            "attempts" => cfg.attempts = v.parse().unwrap(),
            "ttl" => cfg.ttl = v.parse().unwrap(),
            "vp" => cfg.victim_period = v.parse().unwrap(),
            "warmup" => cfg.warmup_rounds = v.parse().unwrap(),
            "bg" => cfg.background_users = v.parse().unwrap(),
            "scale_r" => cfg.scale_r = v.parse().unwrap(),
            other => panic!("unknown knob {other}"),
        }
    }
    let t0 = std::time::Instant::now();
    let rows = doubledip_eval(&cfg).unwrap();
    let dd_targets = [0.056, 0.118, 0.203, 0.260, 0.306];
    let helper_targets = [0.495, 0.781, 1.0, 1.0, 1.0];
    let mut i = 0;
    for row in rows {
        let target = if row.scheduler == schedsim::sched::PolicyKind::DoubleDip {
            dd_targets[i % 5]
        } else {
            helper_targets[i % 5]
        };
        println!(
            "{:<10} A={:<3} rate={:.3} target={:.3} diff={:+.3}",
            row.scheduler.as_str(),
            row.n_attackers,
            row.success_rate,
            target,
            row.success_rate - target
        );
        i += 1;
    }
    println!("elapsed: {:?} (runs={})", t0.elapsed(), cfg.runs);
}
