//! Small reverse-mode automatic differentiation engine for dense MLPs.
//!
//! Values are row-major matrices of `f64`. A [`Tape`] records operations in
//! creation order, so a backward sweep is a single reverse pass over the
//! node list. Parameters live in a [`ParamSet`] and enter a tape as borrowed
//! leaves.

mod adam;
mod gradcheck;
mod mlp;
mod tape;

use std::collections::BTreeMap;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{grad_check, GradCheckReport};
pub use mlp::{Activation, Mlp};
pub use tape::{BackwardFault, Tape, Var};

/// Gradients keyed by parameter name.
pub type Gradients = BTreeMap<String, Vec<f64>>;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TensorError {
    #[error("shape {shape:?} needs {expected} values, got {got}")]
    Length {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("unknown parameter `{0}`")]
    Missing(String),
    #[error("shape mismatch for `{name}`: {left:?} vs {right:?}")]
    ShapeMismatch {
        name: String,
        left: Vec<usize>,
        right: Vec<usize>,
    },
}

/// Dense tensor of doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        let expected = shape.iter().product::<usize>();
        if expected != data.len() {
            return Err(TensorError::Length {
                shape,
                expected,
                got: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// (rows, cols) view used by the tape; rank-1 tensors are row vectors.
    pub fn matrix_dims(&self) -> (usize, usize) {
        match self.shape.as_slice() {
            [] => (1, 1),
            [n] => (1, *n),
            [r, c] => (*r, *c),
            [r, rest @ ..] => (*r, rest.iter().product()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Named parameter tensors. Iteration is sorted by name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    tensors: BTreeMap<String, Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) -> Option<Tensor> {
        self.tensors.insert(name.into(), t)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    pub fn expect(&self, name: &str) -> Result<&Tensor, TensorError> {
        self.get(name).ok_or_else(|| TensorError::Missing(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.tensors.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    /// Names starting with `prefix` followed by a dot.
    pub fn names_with_prefix<'s>(&'s self, prefix: &'s str) -> impl Iterator<Item = &'s String> + 's {
        self.tensors
            .keys()
            .filter(move |k| k.len() > prefix.len() && k.starts_with(prefix) && k.as_bytes()[prefix.len()] == b'.')
    }

    /// Copies every `from.*` tensor onto the matching `to.*` tensor.
    pub fn copy_group(&mut self, from: &str, to: &str) -> Result<(), TensorError> {
        let names: Vec<String> = self.names_with_prefix(from).cloned().collect();
        for name in names {
            let suffix = &name[from.len()..];
            let target = format!("{to}{suffix}");
            let src = self.tensors[&name].clone();
            let dst = self.get_mut(&target).ok_or_else(|| TensorError::Missing(target.clone()))?;
            if dst.shape != src.shape {
                return Err(TensorError::ShapeMismatch {
                    name: target,
                    left: dst.shape.clone(),
                    right: src.shape,
                });
            }
            dst.data.copy_from_slice(&src.data);
        }
        Ok(())
    }

    pub fn total_len(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.values().all(Tensor::is_finite)
    }
}

pub(crate) fn log_2pi() -> f64 {
    (2.0 * std::f64::consts::PI).ln()
}

/// Lower and upper clamp applied to the policy's log standard deviation.
pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// `ln(1 - tanh(u)^2)` via `2 (ln 2 - u - softplus(-2u))`, exact at `u = 0`
/// and finite for any `u`.
pub fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Reparameterized tanh-squashed Gaussian sample on a tape.
///
/// `mean` and `log_std` are `rows x d`; `noise` holds `rows * d` standard
/// normal draws. `log_std` is clamped to `[LOG_STD_MIN, LOG_STD_MAX]`.
/// Returns the squashed action (`rows x d`) and its log density (`rows x 1`).
pub fn tanh_gaussian_sample<'a>(tape: &mut Tape<'a>, mean: Var, log_std: Var, noise: &[f64]) -> (Var, Var) {
    let (rows, cols) = tape.dims(mean);
    assert_eq!(tape.dims(log_std), (rows, cols), "mean/log_std shape mismatch");
    assert_eq!(noise.len(), rows * cols, "noise length mismatch");
    let log_std = tape.clamp(log_std, LOG_STD_MIN, LOG_STD_MAX);
    let eps = tape.constant(rows, cols, noise.to_vec());
    let std = tape.exp(log_std);
    let scaled = tape.mul(std, eps);
    let u = tape.add(mean, scaled);
    let action = tape.tanh(u);

    // per element: -ln(2π)/2 - n²/2 - log_std - ln(1 - tanh(u)²)
    let half_log_2pi = 0.5 * log_2pi();
    let two_ln2 = 2.0 * std::f64::consts::LN_2;
    let base: Vec<f64> = noise.iter().map(|n| -half_log_2pi - 0.5 * n * n - two_ln2).collect();
    let base = tape.constant(rows, cols, base);
    let neg2u = tape.scale(u, -2.0);
    let sp = tape.softplus(neg2u);
    let w = tape.add(u, sp);
    let w = tape.scale(w, 2.0);
    let lp = tape.sub(base, log_std);
    let lp = tape.add(lp, w);
    let log_prob = tape.sum_cols(lp);
    (action, log_prob)
}

/// Value-only version of [`tanh_gaussian_sample`] for a single sample.
pub fn tanh_gaussian_sample_values(mean: &[f64], log_std: &[f64], noise: &[f64]) -> (Vec<f64>, f64) {
    assert!(mean.len() == log_std.len() && mean.len() == noise.len());
    let half_log_2pi = 0.5 * log_2pi();
    let mut log_prob = 0.0;
    let action = mean
        .iter()
        .zip(log_std)
        .zip(noise)
        .map(|((&m, &ls), &n)| {
            let ls = ls.clamp(LOG_STD_MIN, LOG_STD_MAX);
            let u = m + ls.exp() * n;
            log_prob += -ls - half_log_2pi - 0.5 * n * n - log_one_minus_tanh_sq(u);
            u.tanh()
        })
        .collect();
    (action, log_prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tensor_length_checked() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert_eq!(Tensor::new(vec![2, 3], vec![0.0; 6]).unwrap().matrix_dims(), (2, 3));
    }

    #[test]
    fn deep_copy_is_storage_disjoint() {
        let mut p = ParamSet::new();
        p.insert("a.w", Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());
        let mut q = p.clone();
        assert_eq!(p, q);
        q.get_mut("a.w").unwrap().data_mut()[0] = 9.0;
        assert_eq!(p.get("a.w").unwrap().data()[0], 1.0);
    }

    #[test]
    fn prefix_filter_needs_dot() {
        let mut p = ParamSet::new();
        for n in ["actor.l0.w", "actor2.l0.w", "critic1.l0.w"] {
            p.insert(n, Tensor::scalar(0.0));
        }
        let names: Vec<_> = p.names_with_prefix("actor").collect();
        assert_eq!(names, vec!["actor.l0.w"]);
    }

    #[test]
    fn squashed_gaussian_closed_form_point() {
        let (a, lp) = tanh_gaussian_sample_values(&[0.0], &[0.0], &[0.0]);
        assert_eq!(a, vec![0.0]);
        assert_abs_diff_eq!(lp, -0.5 * (2.0 * std::f64::consts::PI).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(lp, -0.918_938_533_204_672_7, epsilon = 1e-12);
    }

    #[test]
    fn stable_tanh_correction_matches_naive_form() {
        for u in [-3.0, -0.5, 0.0, 0.1, 1.7, 4.0] {
            let t: f64 = f64::tanh(u);
            assert_abs_diff_eq!(log_one_minus_tanh_sq(u), (1.0 - t * t).ln(), epsilon = 1e-10);
        }
        assert!(log_one_minus_tanh_sq(400.0).is_finite());
    }

    #[test]
    fn zero_noise_gives_tanh_of_mean() {
        let (a, _) = tanh_gaussian_sample_values(&[0.3, -2.0], &[1.0, -3.0], &[0.0, 0.0]);
        assert_eq!(a, vec![0.3f64.tanh(), (-2.0f64).tanh()]);
    }

    #[test]
    fn tape_and_value_paths_agree() {
        let mean = [0.2, -0.7, 1.1];
        let log_std = [-0.5, 0.3, 5.0];
        let noise = [0.4, -1.2, 0.9];
        let (a_ref, lp_ref) = tanh_gaussian_sample_values(&mean, &log_std, &noise);
        let mut tape = Tape::new();
        let m = tape.constant(1, 3, mean.to_vec());
        let s = tape.constant(1, 3, log_std.to_vec());
        let (a, lp) = tanh_gaussian_sample(&mut tape, m, s, &noise);
        assert_eq!(tape.value(a), a_ref.as_slice());
        assert_abs_diff_eq!(tape.value(lp)[0], lp_ref, epsilon = 1e-12);
    }
}
