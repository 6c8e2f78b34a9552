//! Pretrains briefly on the fixed grasp task, saves a checkpoint, then starts
//! a push agent from it three ways and compares the first episodes.

use std::collections::BTreeMap;
use std::path::Path;

use pushcurl::cli::{load_config, train_spec};
use pushcurl::sac::{self, NoopObserver};
use pushcurl::transfer::{apply_transfer, source_meta, Checkpoint, TransferKind};

fn main() {
    let dir = std::env::temp_dir().join("pushcurl_transfer_pipeline");
    std::fs::create_dir_all(&dir).unwrap();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let short = [("train.total_steps".to_string(), "2000".to_string())];

    let grasp = load_config(&configs.join("grasp_pretrain.cfg"), &short).unwrap();
    let src = sac::train(&train_spec(&grasp, 0, "pretrain_grasp"), None, &mut NoopObserver).unwrap();
    let meta: BTreeMap<String, String> = source_meta("grasp", 2000, 0);
    let path = dir.join("grasp.ckpt");
    Checkpoint::from_agent(&src.agent, true, meta).save(&path).unwrap();
    let ck = Checkpoint::load(&path).unwrap();
    println!("saved {} tensors to {}", ck.params.len(), path.display());

    let push = load_config(&configs.join("task1_baseline.cfg"), &short).unwrap();
    let spec = train_spec(&push, 0, "");
    for plan in [None, Some(TransferKind::PolicyOnly), Some(TransferKind::Whole)] {
        let mut agent = spec.initial_agent();
        if let Some(kind) = plan {
            apply_transfer(kind, true, &ck, &mut agent).unwrap();
        }
        let out = sac::train(&spec, Some(agent), &mut NoopObserver).unwrap();
        let r = out.curve.returns();
        let label = plan.map_or("scratch".to_string(), |k| k.to_string());
        println!("{label:<12} mean return over {} episodes: {:+.2}", r.len(), r.iter().sum::<f64>() / r.len() as f64);
    }
}
