//! Evaluates an untrained agent on the in-distribution and widened ranges of
//! each task, showing the eval report fields.

use std::path::Path;

use pushcurl::cli::{load_config, train_spec};
use pushcurl::eval::{self, Distribution};

fn main() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for t in 1..=3 {
        let cfg = load_config(&configs.join(format!("task{t}_baseline.cfg")), &[]).unwrap();
        let agent = train_spec(&cfg, 0, "untrained").initial_agent();
        let id = cfg.eval_ranges();
        let ood = eval::extend_ranges(&id, cfg.eval.ood_pct, &cfg.env.limits());
        for (dist, ranges) in [(Distribution::InDistribution, id), (Distribution::OutOfDistribution, ood)] {
            let r = eval::evaluate(&agent, &cfg.env, &ranges, 20, 0, "untrained", dist).unwrap();
            println!("task {t} {:<3} n {} mean {:.4} std {:.4}", r.dist, r.n(), r.mean, r.std);
        }
    }
}
