use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::autodiff::Mlp;
use crate::curriculum::{self, TaskFamily};
use crate::env::{EnvConfig, RewardSpec};

fn small_arch() -> Architecture {
    Architecture::new(3, 2, vec![8])
}

fn small_agent(seed: u64) -> (SacAgent, SacConfig) {
    let cfg = SacConfig {
        hidden_width: 8,
        hidden_layers: 1,
        ..SacConfig::default()
    };
    let agent = SacAgent::new(small_arch(), &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
    (agent, cfg)
}

fn batch(n: usize, seed: u64) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = ReplayBuffer::new(n, 3, 2);
    for i in 0..n {
        let o = standard_normal(3, &mut rng);
        let a: Vec<f64> = standard_normal(2, &mut rng).iter().map(|x| x.tanh()).collect();
        let o2 = standard_normal(3, &mut rng);
        buf.push(&o, &a, i as f64 * 0.1, &o2, i % 4 == 0);
    }
    buf.sample(n, &mut rng)
}

fn group(params: &ParamSet, prefix: &str) -> Vec<(String, Vec<f64>)> {
    params
        .names_with_prefix(prefix)
        .map(|n| (n.clone(), params.get(n).unwrap().data().to_vec()))
        .collect()
}

fn zero_output_layer(params: &mut ParamSet, prefix: &str, layers: usize, bias: f64) {
    let last = layers - 1;
    for v in params.get_mut(&Mlp::weight_name(prefix, last)).unwrap().data_mut() {
        *v = 0.0;
    }
    for v in params.get_mut(&Mlp::bias_name(prefix, last)).unwrap().data_mut() {
        *v = bias;
    }
}

use crate::autodiff::ParamSet;

#[test]
fn soft_target_hand_case() {
    assert!((soft_target(1.0, 0.0, 0.5, 2.0, 3.0, 0.2, -1.0) - 2.1).abs() < 1e-15);
    assert_eq!(soft_target(1.5, 1.0, 0.9, 7.0, 3.0, 0.2, -1.0), 1.5);
}

#[test]
fn targets_use_the_smaller_critic() {
    let (mut agent, _) = small_agent(1);
    agent.params.copy_group(TARGET1, TARGET2).unwrap();
    let b = agent.params.get_mut("target2.l1.b").unwrap();
    b.data_mut()[0] -= 1.0;
    let bt = batch(16, 2);
    let noise = vec![0.0; 32];
    let y = compute_targets_with_noise(&agent.arch, &agent.params, &bt, 0.9, 0.0, &noise);

    let mut one = agent.params.clone();
    one.copy_group(TARGET2, TARGET1).unwrap();
    let y2 = compute_targets_with_noise(&agent.arch, &one, &bt, 0.9, 0.0, &noise);
    assert_eq!(y, y2);
}

#[test]
fn polyak_extremes() {
    let (agent, _) = small_agent(3);
    let mut p = agent.params.clone();
    for v in p.get_mut("critic1.l0.w").unwrap().data_mut() {
        *v = 2.0;
    }
    for v in p.get_mut("target1.l0.w").unwrap().data_mut() {
        *v = 0.0;
    }
    let mut q = p.clone();
    polyak(&mut q, 0.0);
    assert_eq!(q, p);
    polyak(&mut q, 0.5);
    assert!(q.get("target1.l0.w").unwrap().data().iter().all(|v| *v == 1.0));
    polyak(&mut q, 1.0);
    assert_eq!(group(&q, TARGET1).iter().map(|x| &x.1).collect::<Vec<_>>(), group(&q, CRITIC1).iter().map(|x| &x.1).collect::<Vec<_>>());
}

#[test]
fn updates_touch_only_their_group() {
    let (mut agent, cfg) = small_agent(4);
    let bt = batch(8, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let y = agent.compute_targets(&bt, &cfg, &mut rng);
    let before = agent.params.clone();
    agent.critic_update(&bt, &y);
    assert_eq!(group(&agent.params, ACTOR), group(&before, ACTOR));
    assert_ne!(group(&agent.params, CRITIC1), group(&before, CRITIC1));

    let before = agent.params.clone();
    agent.actor_update(&bt, &cfg, &mut rng);
    for g in [CRITIC1, CRITIC2, TARGET1, TARGET2] {
        assert_eq!(group(&agent.params, g), group(&before, g));
    }
    assert_ne!(group(&agent.params, ACTOR), group(&before, ACTOR));
}

#[test]
fn critic_fit_improves() {
    let (mut agent, _) = small_agent(7);
    agent.opt.critic.lr = 1e-2;
    let bt = batch(32, 8);
    let y: Vec<f64> = bt.rewards.iter().map(|r| 2.0 * r - 0.3).collect();
    let (first, _) = agent.critic_update(&bt, &y);
    let mut last = first;
    for _ in 0..100 {
        last = agent.critic_update(&bt, &y).0;
    }
    assert!(last < 0.2 * first, "{first} -> {last}");
}

#[test]
fn exact_critic_fit_leaves_params_unchanged() {
    let (mut agent, _) = small_agent(9);
    zero_output_layer(&mut agent.params, CRITIC1, 2, 0.5);
    zero_output_layer(&mut agent.params, CRITIC2, 2, 0.5);
    let bt = batch(8, 10);
    let before = agent.params.clone();
    let (l1, l2) = agent.critic_update(&bt, &[0.5; 8]);
    assert_eq!((l1, l2), (0.0, 0.0));
    assert_eq!(agent.params, before);
}

#[test]
fn actor_static_without_entropy_or_q_signal() {
    let (mut agent, mut cfg) = small_agent(11);
    cfg.alpha = 0.0;
    zero_output_layer(&mut agent.params, CRITIC1, 2, 1.0);
    zero_output_layer(&mut agent.params, CRITIC2, 2, 1.0);
    let before = agent.params.clone();
    agent.actor_update(&batch(8, 12), &cfg, &mut ChaCha8Rng::seed_from_u64(13));
    assert_eq!(agent.params, before);
}

#[test]
fn entropy_pressure_raises_log_std() {
    let (mut agent, mut cfg) = small_agent(14);
    cfg.alpha = 5.0;
    zero_output_layer(&mut agent.params, CRITIC1, 2, 0.0);
    zero_output_layer(&mut agent.params, CRITIC2, 2, 0.0);
    let bt = batch(16, 15);
    let mean_log_std = |a: &SacAgent| {
        let out = a.arch.actor().predict(&a.params, ACTOR, bt.len(), &bt.obs);
        out.chunks(4).map(|r| r[2] + r[3]).sum::<f64>() / (2 * bt.len()) as f64
    };
    let start = mean_log_std(&agent);
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..500 {
        agent.actor_update(&bt, &cfg, &mut rng);
    }
    assert!(mean_log_std(&agent) > start + 0.1);
}

#[test]
fn alpha_gradient_sign() {
    let (agent, _) = small_agent(17);
    let (_, g) = alpha_loss(&agent.params, &[6.0, 6.0], -6.0);
    assert_eq!(g[LOG_ALPHA], vec![0.0]);
    // log-probs above the target mean entropy is too low
    let (_, g) = alpha_loss(&agent.params, &[9.0, 8.0], -6.0);
    assert!(g[LOG_ALPHA][0] < 0.0);

    let (mut agent, mut cfg) = small_agent(18);
    cfg.auto_alpha = true;
    let a0 = agent.alpha(&cfg);
    let a1 = agent.alpha_update(&[9.0, 8.0], &cfg);
    assert!(a1 > a0);
    cfg.auto_alpha = false;
    assert_eq!(agent.alpha_update(&[9.0, 8.0], &cfg), cfg.alpha);
}

#[test]
fn architecture_descriptor_round_trip() {
    let arch = Architecture::new(26, 6, vec![64, 64]);
    let text = arch.descriptor();
    assert_eq!(Architecture::parse_descriptor(&text).unwrap(), arch);
    let other = Architecture::new(27, 6, vec![64, 64]);
    assert_eq!(arch.diff(&other), vec!["obs_dim: 26 vs 27".to_string()]);
}

fn tiny_spec(total: u64, warmup: u64) -> TrainSpec {
    let env = EnvConfig {
        horizon: 5,
        ..EnvConfig::default()
    };
    TrainSpec {
        env,
        reward: RewardSpec::default(),
        schedule: curriculum::baseline(TaskFamily::Size),
        sac: SacConfig {
            warmup_steps: warmup,
            batch: 8,
            hidden_width: 8,
            hidden_layers: 1,
            ..SacConfig::default()
        },
        total_steps: total,
        seed: 3,
        checkpoint_every: 0,
        arm: "baseline".into(),
    }
}

#[test]
fn warmup_arithmetic() {
    let out = train(&tiny_spec(10, 10), None, &mut NoopObserver).unwrap();
    assert_eq!(out.curve.len(), 2);
    assert_eq!(out.updates, 0);
    let out = train(&tiny_spec(12, 10), None, &mut NoopObserver).unwrap();
    assert_eq!(out.updates, 2);
}

#[test]
fn training_is_deterministic() {
    let a = train(&tiny_spec(40, 10), None, &mut NoopObserver).unwrap();
    let b = train(&tiny_spec(40, 10), None, &mut NoopObserver).unwrap();
    assert_eq!(a.curve, b.curve);
    assert_eq!(a.agent, b.agent);
}
