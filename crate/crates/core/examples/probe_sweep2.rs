// Temporary calibration probe; not part of the deliverable.
use schedsim::config::{ExperimentConfig, ExperimentKind};
use schedsim::experiment::doubledip_eval;
use schedsim::sched::PolicyKind;

fn main() {
    let runs: usize = std::env::args().nth(1).map_or(400, |s| s.parse().unwrap());
    let dd_t = [0.056, 0.118, 0.203, 0.260, 0.306];
    let mut best: Vec<(f64, String)> = Vec::new();
    for gap in [4u32, 5] {
        for attempts in [10u32, 12] {
            for vp in [7u32, 8, 9] {
                for warmup in [10u32, 20] {
                    for burst in [10u32, 12] {
                        let mut cfg = ExperimentConfig::defaults_for(ExperimentKind::DoubledipEval);
                        cfg.runs = runs;
                        cfg.attempt_gap = gap;
                        cfg.attempts = attempts;
                        cfg.victim_period = vp;
                        cfg.warmup_rounds = warmup;
                        cfg.attempt_burst = burst;
                        let rows = doubledip_eval(&cfg).unwrap();
                        let dd: Vec<f64> = rows
                            .iter()
                            .filter(|r| r.scheduler == PolicyKind::DoubleDip)
                            .map(|r| r.success_rate)
                            .collect();
                        let h: Vec<f64> = rows
                            .iter()
                            .filter(|r| r.scheduler == PolicyKind::Helper)
                            .map(|r| r.success_rate)
                            .collect();
                        // margin: worst slack across all ten constraints (positive = pass)
                        let mut slack: f64 = f64::INFINITY;
                        for (got, want) in dd.iter().zip(&dd_t) {
                            slack = slack.min(0.05 - (got - want).abs());
                        }
                        slack = slack.min(0.07 - (h[0] - 0.495).abs());
                        slack = slack.min(0.07 - (h[1] - 0.781).abs());
                        for cell in &h[2..] {
                            slack = slack.min(cell - 0.99);
                        }
                        let desc = format!(
                            "g={gap} at={attempts} vp={vp} w={warmup} b={burst}: DD {:.3} {:.3} {:.3} {:.3} {:.3} | H {:.3} {:.3} {:.3} {:.3} {:.3} | slack {:+.3}",
                            dd[0], dd[1], dd[2], dd[3], dd[4], h[0], h[1], h[2], h[3], h[4], slack
                        );
                        println!("{desc}");
                        best.push((slack, desc));
                    }
                }
            }
        }
    }
    best.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    println!("\n== top 5 ==");
    for (_, d) in best.iter().take(5) {
        println!("{d}");
    }
}
