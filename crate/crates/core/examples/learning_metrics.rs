//! Jump start, asymptotic performance and time to threshold on two
//! synthetic learning curves, plus out-of-distribution range widening.

use pushcurl::curriculum::{stage_rows, TaskFamily};
use pushcurl::env::EnvConfig;
use pushcurl::eval::{self, CurvePoint, LearningCurve};

fn curve(arm: &str, f: impl Fn(f64) -> f64) -> LearningCurve {
    let mut c = LearningCurve::new(0, arm);
    for i in 0..200u64 {
        c.points.push(CurvePoint {
            step: 100 * (i + 1),
            episode: i,
            ret: f(i as f64),
            success: 0.0,
            stage: 0,
        });
    }
    c
}

fn main() {
    let base = curve("baseline", |x| 100.0 * (1.0 - (-x / 80.0).exp()));
    let cur = curve("curriculum", |x| 30.0 + 75.0 * (1.0 - (-x / 50.0).exp()));
    let k = base.len() / 10;
    println!("jump start over {k} episodes: {:+.2}", eval::jump_start(&cur, &base, k, 10));
    for c in [&base, &cur] {
        println!(
            "{:<10} asymptotic {:.2}  time to 90: {:?}",
            c.arm,
            eval::asymptotic(c, k, 10),
            eval::time_to_threshold(c, 90.0, 10)
        );
    }

    let limits = EnvConfig::default().limits();
    for (family, pct) in [(TaskFamily::Size, 0.67), (TaskFamily::Goal, 0.13), (TaskFamily::Mass, 0.21)] {
        let id = stage_rows(family)[2];
        let ood = eval::extend_ranges(&id, pct, &limits);
        for ((name, a), (_, b)) in id.fields().into_iter().zip(ood.fields()) {
            if a != b {
                println!("task {} {name}: [{:.4}, {:.4}] -> [{:.4}, {:.4}]", family.id(), a.min, a.max, b.min, b.max);
            }
        }
    }
}
