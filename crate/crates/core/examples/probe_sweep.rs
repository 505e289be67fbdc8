// Temporary calibration probe; not part of the deliverable.
use schedsim::config::{ExperimentConfig, ExperimentKind};
use schedsim::experiment::doubledip_eval;
use schedsim::sched::PolicyKind;

fn eval(cfg: &ExperimentConfig) -> (Vec<f64>, Vec<f64>) {
    let rows = doubledip_eval(cfg).unwrap();
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
    (dd, h)
}

fn main() {
    let runs: usize = std::env::args().nth(1).map_or(400, |s| s.parse().unwrap());
    let dd_t = [0.056, 0.118, 0.203, 0.260, 0.306];
    for (stagger, gap) in [(4u32, 10u32), (4, 12), (6, 14), (6, 16), (6, 18), (8, 20), (8, 23)] {
        for vp in [8u32, 12] {
            let mut cfg = ExperimentConfig::defaults_for(ExperimentKind::DoubledipEval);
            cfg.runs = runs;
            cfg.attacker_stagger = stagger;
            cfg.attempt_gap = gap;
            cfg.victim_period = vp;
            let (dd, h) = eval(&cfg);
            let dd_ok = dd.iter().zip(&dd_t).all(|(got, want)| (got - want).abs() <= 0.05);
            let h_ok = (h[0] - 0.495).abs() <= 0.07
                && (h[1] - 0.781).abs() <= 0.07
                && h[2] >= 0.99
                && h[3] >= 0.99
                && h[4] >= 0.99;
            println!(
                "s={stagger:<2} g={gap:<2} vp={vp:<2} DD {:.3} {:.3} {:.3} {:.3} {:.3} [{}]  H {:.3} {:.3} {:.3} {:.3} {:.3} [{}]",
                dd[0], dd[1], dd[2], dd[3], dd[4],
                if dd_ok { "ok" } else { "XX" },
                h[0], h[1], h[2], h[3], h[4],
                if h_ok { "ok" } else { "XX" },
            );
        }
    }
}
