use std::collections::BTreeMap;
use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pushcurl::config::ExperimentConfig;
use pushcurl::curriculum::{stage_rows, TaskFamily};
use pushcurl::env::{EnvConfig, ACTION_DIM, OBS_DIM};
use pushcurl::eval::{self, CurvePoint, LearningCurve};
use pushcurl::geom::{rect_iou, OrientedRect, Pose2D};
use pushcurl::sac::{Architecture, ReplayBuffer, SacAgent, SacConfig};
use pushcurl::transfer::{apply_transfer, Checkpoint, TransferKind};

fn rect() -> impl Strategy<Value = OrientedRect> {
    (-0.1..0.1f64, -0.1..0.1f64, -PI..PI, 0.002..0.08f64, 0.002..0.08f64)
        .prop_map(|(x, y, t, hx, hy)| OrientedRect::new(Pose2D::new(x, y, t), hx, hy).unwrap())
}

fn curve(rets: &[f64]) -> LearningCurve {
    let mut c = LearningCurve::new(0, "p");
    for (i, &r) in rets.iter().enumerate() {
        c.points.push(CurvePoint {
            step: i as u64 + 1,
            episode: i as u64,
            ret: r,
            success: 0.0,
            stage: 0,
        });
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn iou_symmetric_and_bounded(a in rect(), b in rect()) {
        let ab = rect_iou(&a, &b);
        let ba = rect_iou(&b, &a);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn iou_invariant_under_rigid_motion(a in rect(), b in rect(), dx in -0.05..0.05f64, dth in -PI..PI) {
        let move_ = |r: &OrientedRect| {
            let c = r.center().rotate(dth);
            r.with_pose(Pose2D::new(c.x + dx, c.y, r.pose.theta + dth))
        };
        prop_assert!((rect_iou(&a, &b) - rect_iou(&move_(&a), &move_(&b))).abs() < 1e-9);
    }

    #[test]
    fn replay_buffer_keeps_latest(cap in 1usize..20, n in 0usize..60) {
        let mut buf = ReplayBuffer::new(cap, 1, 1);
        for i in 0..n {
            let x = i as f64;
            buf.push(&[x], &[x], x, &[x + 1.0], false);
        }
        prop_assert_eq!(buf.len(), n.min(cap));
        let mut kept: Vec<f64> = buf.iter().map(|t| t.reward).collect();
        kept.sort_by(f64::total_cmp);
        let want: Vec<f64> = (n.saturating_sub(cap)..n).map(|i| i as f64).collect();
        prop_assert_eq!(kept, want);
        if n > 0 {
            let batch = buf.sample(8, &mut ChaCha8Rng::seed_from_u64(0));
            prop_assert_eq!(batch.len(), 8);
            for (o, no) in batch.obs.iter().zip(&batch.next_obs) {
                prop_assert_eq!(*o + 1.0, *no);
            }
        }
    }

    #[test]
    fn extend_ranges_monotone(p in 0.0..2.0f64, q in 0.0..2.0f64, fam in 0usize..3) {
        let family = [TaskFamily::Size, TaskFamily::Goal, TaskFamily::Mass][fam];
        let base = stage_rows(family)[2];
        let limits = EnvConfig::default().limits();
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let a = eval::extend_ranges(&base, lo, &limits);
        let b = eval::extend_ranges(&base, hi, &limits);
        for ((_, x), (_, y)) in a.fields().into_iter().zip(b.fields()) {
            prop_assert!(y.min <= x.min && x.max <= y.max);
        }
        prop_assert_eq!(eval::extend_ranges(&base, 0.0, &limits), base);
    }

    #[test]
    fn jump_start_of_self_is_zero(rets in prop::collection::vec(-100.0..100.0f64, 1..50), w in 1usize..8) {
        let c = curve(&rets);
        prop_assert_eq!(eval::jump_start(&c, &c, rets.len(), w), 0.0);
    }

    #[test]
    fn asymptotic_ignores_early_history(
        rets in prop::collection::vec(-100.0..100.0f64, 10..40),
        early in prop::collection::vec(-100.0..100.0f64, 0..20),
        k in 1usize..5,
    ) {
        let longer: Vec<f64> = early.iter().chain(&rets).copied().collect();
        let a = eval::asymptotic(&curve(&rets), k, 1);
        let b = eval::asymptotic(&curve(&longer), k, 1);
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transfer_is_idempotent(src_seed in 0u64..1000, dst_seed in 0u64..1000, whole in any::<bool>(), reset in any::<bool>()) {
        let cfg = SacConfig { hidden_width: 16, ..SacConfig::default() };
        let arch = Architecture::new(OBS_DIM, ACTION_DIM, cfg.hidden());
        let src = SacAgent::new(arch.clone(), &cfg, &mut ChaCha8Rng::seed_from_u64(src_seed));
        let ck = Checkpoint::from_agent(&src, true, BTreeMap::new());
        let kind = if whole { TransferKind::Whole } else { TransferKind::PolicyOnly };
        let mut dst = SacAgent::new(arch, &cfg, &mut ChaCha8Rng::seed_from_u64(dst_seed));
        apply_transfer(kind, reset, &ck, &mut dst).unwrap();
        let once = dst.clone();
        apply_transfer(kind, reset, &ck, &mut dst).unwrap();
        prop_assert!(dst == once);
    }

    #[test]
    fn config_echo_round_trips(lr in 1e-5..1e-2f64, total in 100u64..100_000, horizon in 10usize..400, boundary in 1u64..50_000) {
        let text = format!(
            "env.horizon = {horizon}\nsac.lr = {lr}\ntrain.total_steps = {total}\n\
             task.size.min = 0.075\ntask.size.max = 0.075\ncurriculum.stage.0.start_step = 0\n\
             curriculum.stage.1.start_step = {boundary}\ncurriculum.stage.1.size.min = 0.03\ncurriculum.stage.1.size.max = 0.09\n"
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        let echo = cfg.resolved();
        let again = ExperimentConfig::parse(&echo).unwrap();
        prop_assert_eq!(echo, again.resolved());
        prop_assert_eq!(again.sac.lr, lr);
        prop_assert_eq!(again.schedule.stages()[1].start_step, boundary);
    }
}
