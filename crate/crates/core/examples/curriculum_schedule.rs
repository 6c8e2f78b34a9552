//! Prints the stage ranges of each task family and which stage is active
//! around the switch points.

use pushcurl::curriculum::{baseline, three_stage, two_stage, TaskFamily};
use pushcurl::env::EnvConfig;

fn main() {
    let env = EnvConfig::default();
    for family in [TaskFamily::Size, TaskFamily::Goal, TaskFamily::Mass] {
        println!("task {}", family.id());
        for (name, sched) in [
            ("baseline", baseline(family)),
            ("2-stage", two_stage(family, 6000)),
            ("3-stage", three_stage(family, 2000, 4000)),
        ] {
            sched.validate(&env).expect("schedule within limits");
            let active: Vec<usize> = [0, 1999, 2000, 3999, 4000, 5999, 6000].iter().map(|&s| sched.active_stage(s)).collect();
            println!("  {name:<9} active at 0/1999/2000/3999/4000/5999/6000: {active:?}");
        }
        for st in three_stage(family, 2000, 4000).stages() {
            let fields: Vec<String> = st
                .ranges
                .fields()
                .iter()
                .map(|(n, i)| format!("{n} [{:.3}, {:.3}]", i.min, i.max))
                .collect();
            println!("    {:<13} {}", st.name, fields.join(", "));
        }
    }
}
