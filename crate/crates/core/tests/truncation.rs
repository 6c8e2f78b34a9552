use std::path::Path;

use pushcurl::cli::{load_config, train_spec};
use pushcurl::sac::{train, NoopObserver};

/// Training is causal and episodes have a fixed length, so a run cut short
/// reproduces the leading episodes of the longer run exactly.
#[test]
fn truncated_run_is_a_prefix() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/task1_2stage.cfg");
    let overrides = [
        ("curriculum.stage.1.start_step".to_string(), "600".to_string()),
        ("sac.warmup_steps".to_string(), "200".to_string()),
    ];
    let cfg = load_config(&path, &overrides).unwrap();
    let mut long = train_spec(&cfg, 3, "curriculum-2");
    long.total_steps = 1500;
    long.checkpoint_every = 0;
    let mut short = long.clone();
    short.total_steps = 800;
    let a = train(&long, None, &mut NoopObserver).unwrap().curve;
    let b = train(&short, None, &mut NoopObserver).unwrap().curve;
    assert_eq!(b.len(), 8);
    assert_eq!(a.len(), 15);
    assert_eq!(a.points[..b.len()], b.points[..]);
    assert!(a.points.iter().any(|p| p.stage == 1));
}
