//! Fits `y = tanh(w x + b)` by hand-rolled gradient descent on the tape, then
//! checks the tape's gradients against central differences.

use pushcurl::autodiff::{grad_check, Gradients, ParamSet, Tape, Tensor};

fn loss(p: &ParamSet) -> (f64, Gradients) {
    let xs = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let ys: Vec<f64> = xs.iter().map(|x: &f64| (0.8 * x - 0.3).tanh()).collect();
    let mut tape = Tape::new();
    let x = tape.constant(5, 1, xs.to_vec());
    let w = tape.param("w", p.get("w").unwrap());
    let b = tape.param("b", p.get("b").unwrap());
    let z = tape.linear(x, w, b);
    let pred = tape.tanh(z);
    let target = tape.constant(5, 1, ys);
    let err = tape.sub(pred, target);
    let sq = tape.square(err);
    let l = tape.mean(sq);
    (tape.scalar_value(l), tape.backward(l))
}

fn main() {
    let mut p = ParamSet::new();
    p.insert("w", Tensor::new(vec![1, 1], vec![0.1]).unwrap());
    p.insert("b", Tensor::new(vec![1, 1], vec![0.0]).unwrap());

    let report = grad_check(loss, &p, 1e-5);
    println!("gradcheck: {} entries, max rel err {:.2e}", report.checked, report.max_rel_error);

    for it in 0..=400 {
        let (l, g) = loss(&p);
        if it % 100 == 0 {
            println!("iter {it:>3}  loss {l:.3e}  w {:+.4}  b {:+.4}", p.get("w").unwrap().data()[0], p.get("b").unwrap().data()[0]);
        }
        for (name, grad) in &g {
            let t = p.get_mut(name).unwrap();
            t.data_mut()[0] -= 0.5 * grad[0];
        }
    }
}
