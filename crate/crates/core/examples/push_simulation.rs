//! Drives one effector straight down into the block, towards a goal below
//! it, once for a light block and once for a heavy, grippy one.

use std::f64::consts::FRAC_PI_2;

use pushcurl::env::{self, EnvConfig, RewardSpec, TaskParams, ACTION_DIM};

fn run(task: &TaskParams) {
    let cfg = EnvConfig::default();
    let spec = RewardSpec::default();
    let (mut state, _) = env::reset(&cfg, task, 0).unwrap();
    println!("mass {:.2} friction {:.2} mobility {:.3}", task.mass, task.friction, cfg.mobility(task));
    let mut action = [0.0; ACTION_DIM];
    action[1] = -cfg.v_max;
    for t in 1..=30 {
        let out = env::step(&state, &action, &cfg, &spec).unwrap();
        state = out.state;
        if t % 5 == 0 {
            let c = state.block.center();
            println!(
                "  t {t:>2}  block ({:+.4}, {:+.4})  iou {:.3}  dist_og {:.4}  reward {:+.2}",
                c.x, c.y, out.info.fractional_success, out.info.dist_og, out.reward
            );
        }
    }
}

fn main() {
    let below = TaskParams {
        goal_angle: -FRAC_PI_2,
        ..TaskParams::default()
    };
    run(&below);
    run(&TaskParams {
        mass: 0.6,
        friction: 0.9,
        ..below
    });
}
