use rand::Rng;

use super::{ParamSet, Tape, Tensor, TensorError, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn tag(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "linear",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "linear" => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// Fully connected network description. Layer `i` maps `widths[i]` to
/// `widths[i + 1]` and stores `{prefix}.l{i}.w` (`in × out`) and
/// `{prefix}.l{i}.b` (`out`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    pub widths: Vec<usize>,
    pub hidden: Activation,
    pub output: Activation,
}

impl Mlp {
    pub fn new(widths: Vec<usize>, hidden: Activation, output: Activation) -> Self {
        assert!(widths.len() >= 2, "an MLP needs at least input and output widths");
        Self { widths, hidden, output }
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            self.output
        } else {
            self.hidden
        }
    }

    pub fn weight_name(prefix: &str, layer: usize) -> String {
        format!("{prefix}.l{layer}.w")
    }

    pub fn bias_name(prefix: &str, layer: usize) -> String {
        format!("{prefix}.l{layer}.b")
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(&self, prefix: &str, params: &mut ParamSet, rng: &mut R) {
        for l in 0..self.num_layers() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let w: Vec<f64> = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
            params.insert(Self::weight_name(prefix, l), Tensor::new(vec![fan_in, fan_out], w).unwrap());
            params.insert(Self::bias_name(prefix, l), Tensor::zeros(vec![fan_out]));
        }
    }

    pub fn check(&self, prefix: &str, params: &ParamSet) -> Result<(), TensorError> {
        for l in 0..self.num_layers() {
            let expect = [
                (Self::weight_name(prefix, l), vec![self.widths[l], self.widths[l + 1]]),
                (Self::bias_name(prefix, l), vec![self.widths[l + 1]]),
            ];
            for (name, shape) in expect {
                let t = params.expect(&name)?;
                if t.shape() != shape.as_slice() {
                    return Err(TensorError::ShapeMismatch {
                        name,
                        left: t.shape().to_vec(),
                        right: shape,
                    });
                }
            }
        }
        Ok(())
    }

    /// Records the forward pass on `tape`. With `trainable` the layer
    /// parameters become named gradient leaves, otherwise frozen leaves.
    pub fn forward<'a>(&self, tape: &mut Tape<'a>, params: &'a ParamSet, prefix: &str, input: Var, trainable: bool) -> Var {
        assert_eq!(tape.dims(input).1, self.input_dim(), "{prefix}: input width");
        let mut h = input;
        for l in 0..self.num_layers() {
            let wn = Self::weight_name(prefix, l);
            let bn = Self::bias_name(prefix, l);
            let w = params.get(&wn).unwrap_or_else(|| panic!("missing parameter {wn}"));
            let b = params.get(&bn).unwrap_or_else(|| panic!("missing parameter {bn}"));
            let (wv, bv) = if trainable {
                (tape.param(&wn, w), tape.param(&bn, b))
            } else {
                (tape.frozen(w), tape.frozen(b))
            };
            h = tape.linear(h, wv, bv);
            h = match self.activation(l) {
                Activation::Relu => tape.relu(h),
                Activation::Tanh => tape.tanh(h),
                Activation::Identity => h,
            };
        }
        h
    }

    /// Convenience forward pass returning plain values.
    pub fn predict(&self, params: &ParamSet, prefix: &str, rows: usize, input: &[f64]) -> Vec<f64> {
        let mut tape = Tape::new();
        let x = tape.constant(rows, self.input_dim(), input.to_vec());
        let y = self.forward(&mut tape, params, prefix, x, false);
        tape.value(y).to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_layer_passes_input_through() {
        let mlp = Mlp::new(vec![3, 3], Activation::Relu, Activation::Identity);
        let mut p = ParamSet::new();
        let mut eye = vec![0.0; 9];
        for i in 0..3 {
            eye[i * 3 + i] = 1.0;
        }
        p.insert("n.l0.w", Tensor::new(vec![3, 3], eye).unwrap());
        p.insert("n.l0.b", Tensor::zeros(vec![3]));
        assert_eq!(mlp.predict(&p, "n", 1, &[0.5, -2.0, 3.0]), vec![0.5, -2.0, 3.0]);
    }

    #[test]
    fn zero_weights_give_bias() {
        let mlp = Mlp::new(vec![2, 3], Activation::Relu, Activation::Identity);
        let mut p = ParamSet::new();
        p.insert("n.l0.w", Tensor::zeros(vec![2, 3]));
        p.insert("n.l0.b", Tensor::new(vec![3], vec![1.0, -1.0, 0.25]).unwrap());
        assert_eq!(mlp.predict(&p, "n", 2, &[7.0, 8.0, 9.0, 10.0]), vec![1.0, -1.0, 0.25, 1.0, -1.0, 0.25]);
    }

    #[test]
    fn two_layer_matches_hand_matmul() {
        let mlp = Mlp::new(vec![3, 4, 2], Activation::Relu, Activation::Identity);
        let mut p = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        mlp.init("n", &mut p, &mut rng);
        for l in 0..2 {
            let b = p.get_mut(&Mlp::bias_name("n", l)).unwrap();
            for v in b.data_mut() {
                *v = rng.gen_range(-0.5..0.5);
            }
        }
        let x = [0.3, -1.2, 2.0];
        let w0 = p.get("n.l0.w").unwrap().data();
        let b0 = p.get("n.l0.b").unwrap().data();
        let w1 = p.get("n.l1.w").unwrap().data();
        let b1 = p.get("n.l1.b").unwrap().data();
        let h: Vec<f64> = (0..4)
            .map(|j| (b0[j] + (0..3).map(|i| x[i] * w0[i * 4 + j]).sum::<f64>()).max(0.0))
            .collect();
        let y: Vec<f64> = (0..2).map(|k| b1[k] + (0..4).map(|j| h[j] * w1[j * 2 + k]).sum::<f64>()).collect();
        let got = mlp.predict(&p, "n", 1, &x);
        for (g, e) in got.iter().zip(&y) {
            assert_abs_diff_eq!(*g, *e, epsilon = 1e-14);
        }
    }

    #[test]
    fn glorot_bounds_respected() {
        let mlp = Mlp::new(vec![10, 6], Activation::Relu, Activation::Identity);
        let mut p = ParamSet::new();
        mlp.init("n", &mut p, &mut ChaCha8Rng::seed_from_u64(2));
        let bound = (6.0f64 / 16.0).sqrt();
        assert!(p.get("n.l0.w").unwrap().data().iter().all(|v| v.abs() <= bound));
        assert!(p.get("n.l0.b").unwrap().data().iter().all(|v| *v == 0.0));
        assert!(mlp.check("n", &p).is_ok());
    }
}
