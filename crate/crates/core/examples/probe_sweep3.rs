// Temporary calibration probe; not part of the deliverable.
use schedsim::config::{ExperimentConfig, ExperimentKind};
use schedsim::experiment::doubledip_eval;
use schedsim::sched::PolicyKind;

fn main() {
    let runs: usize = std::env::args().nth(1).map_or(10000, |s| s.parse().unwrap());
    let dd_t = [0.056f64, 0.118, 0.203, 0.260, 0.306];
    for (ttl, vp, warmup, burst) in [
        (20u32, 8u32, 10u32, 15u32),
        (21, 8, 10, 15),
        (21, 8, 8, 14),
        (24, 8, 6, 14),
        (21, 8, 8, 15),
    ] {
        let mut cfg = ExperimentConfig::defaults_for(ExperimentKind::DoubledipEval);
        cfg.runs = runs;
        cfg.ttl = ttl;
        cfg.drain_len = ttl + 5;
        cfg.victim_period = vp;
        cfg.warmup_rounds = warmup;
        cfg.attempt_burst = burst;
        let rows = doubledip_eval(&cfg).unwrap();
        let dd: Vec<f64> = rows.iter().filter(|r| r.scheduler == PolicyKind::DoubleDip).map(|r| r.success_rate).collect();
        let h: Vec<f64> = rows.iter().filter(|r| r.scheduler == PolicyKind::Helper).map(|r| r.success_rate).collect();
        let mut slack = f64::INFINITY;
        for (got, want) in dd.iter().zip(&dd_t) { slack = slack.min(0.05 - (got - want).abs()); }
        slack = slack.min(0.07 - (h[0] - 0.495).abs());
        slack = slack.min(0.07 - (h[1] - 0.781).abs());
        for cell in &h[2..] { slack = slack.min(cell - 0.99); }
        println!("ttl={ttl} vp={vp} w={warmup} b={burst}: DD {:.4} {:.4} {:.4} {:.4} {:.4} | H {:.4} {:.4} {:.4} {:.4} {:.4} | slack {:+.4}",
            dd[0], dd[1], dd[2], dd[3], dd[4], h[0], h[1], h[2], h[3], h[4], slack);
    }
}
