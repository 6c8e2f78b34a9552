//! Trains the reaching preset in-process and prints a smoothed learning
//! curve. Takes under a minute in release mode.

use std::path::Path;

use pushcurl::cli::{load_config, train_spec};
use pushcurl::eval::{self, CurvePoint};
use pushcurl::sac::{self, Observer, SacError};

struct Progress;

impl Observer for Progress {
    fn on_episode(&mut self, p: &CurvePoint) -> Result<(), SacError> {
        if p.episode % 40 == 0 {
            println!("step {:>6}  episode {:>4}  return {:+9.2}", p.step, p.episode, p.ret);
        }
        Ok(())
    }
}

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/reach.cfg");
    let cfg = load_config(&path, &[]).unwrap();
    let spec = train_spec(&cfg, 0, "reach");
    let out = sac::train(&spec, None, &mut Progress).unwrap();
    let smoothed = eval::smooth(&out.curve.returns(), 20);
    println!("smoothed return: first {:+.2}, last {:+.2}", smoothed[0], smoothed[smoothed.len() - 1]);
    println!("{} gradient updates", out.updates);
}
