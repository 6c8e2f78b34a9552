use std::borrow::Cow;

use super::{softplus, Gradients, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    /// `x · w + b` with `x: r×i`, `w: i×o`, `b: 1×o`.
    Linear(usize, usize, usize),
    Relu(usize),
    Tanh(usize),
    Exp(usize),
    Ln(usize),
    Softplus(usize),
    Square(usize),
    Neg(usize),
    Scale(usize, f64),
    AddScalar(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    /// Elementwise product with a `1×1` node.
    MulByScalarVar(usize, usize),
    Minimum(usize, usize),
    Clamp(usize, f64, f64),
    ConcatCols(usize, usize),
    SliceCols(usize, usize),
    SumCols(usize),
    Sum(usize),
    Mean(usize),
}

struct Node<'a> {
    value: Cow<'a, [f64]>,
    rows: usize,
    cols: usize,
    op: Op,
    requires_grad: bool,
    name: Option<String>,
}

/// Deliberate backward defects, used to prove the gradient checker bites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackwardFault {
    /// Tanh backward forgets the `1 - y²` factor.
    TanhPassThrough,
}

/// Operation record for one forward pass.
#[derive(Default)]
pub struct Tape<'a> {
    nodes: Vec<Node<'a>>,
    fault: Option<BackwardFault>,
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn inject_fault(&mut self, fault: BackwardFault) {
        self.fault = Some(fault);
    }

    fn push(&mut self, value: Cow<'a, [f64]>, rows: usize, cols: usize, op: Op, requires_grad: bool) -> Var {
        debug_assert_eq!(value.len(), rows * cols);
        debug_assert!(value.iter().all(|v| !v.is_nan()), "NaN produced by {op:?}");
        self.nodes.push(Node {
            value,
            rows,
            cols,
            op,
            requires_grad,
            name: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let n = &self.nodes[a.0];
        let value: Vec<f64> = n.value.iter().map(|&v| f(v)).collect();
        let (r, c, g) = (n.rows, n.cols, n.requires_grad);
        self.push(Cow::Owned(value), r, c, op, g)
    }

    fn binary(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let (na, nb) = (&self.nodes[a.0], &self.nodes[b.0]);
        assert_eq!((na.rows, na.cols), (nb.rows, nb.cols), "shape mismatch in {op:?}");
        let value: Vec<f64> = na.value.iter().zip(nb.value.iter()).map(|(&x, &y)| f(x, y)).collect();
        let (r, c, g) = (na.rows, na.cols, na.requires_grad || nb.requires_grad);
        self.push(Cow::Owned(value), r, c, op, g)
    }

    pub fn constant(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> Var {
        assert_eq!(data.len(), rows * cols, "constant length mismatch");
        self.push(Cow::Owned(data), rows, cols, Op::Leaf, false)
    }

    /// Trainable leaf borrowing a parameter tensor; its gradient is
    /// reported under `name` by [`Tape::backward`].
    pub fn param(&mut self, name: &str, t: &'a Tensor) -> Var {
        let (r, c) = t.matrix_dims();
        let v = self.push(Cow::Borrowed(t.data()), r, c, Op::Leaf, true);
        self.nodes[v.0].name = Some(name.to_string());
        v
    }

    /// Non-trainable leaf borrowing a parameter tensor.
    pub fn frozen(&mut self, t: &'a Tensor) -> Var {
        let (r, c) = t.matrix_dims();
        self.push(Cow::Borrowed(t.data()), r, c, Op::Leaf, false)
    }

    /// Trainable leaf owning its data; gradient reported under `name`.
    pub fn input(&mut self, name: &str, rows: usize, cols: usize, data: Vec<f64>) -> Var {
        let v = self.push(Cow::Owned(data), rows, cols, Op::Leaf, true);
        self.nodes[v.0].name = Some(name.to_string());
        v
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn dims(&self, v: Var) -> (usize, usize) {
        let n = &self.nodes[v.0];
        (n.rows, n.cols)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        let n = &self.nodes[v.0];
        assert_eq!(n.value.len(), 1, "not a scalar");
        n.value[0]
    }

    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Var {
        let (nx, nw, nb) = (&self.nodes[x.0], &self.nodes[w.0], &self.nodes[b.0]);
        let (rows, inner, out) = (nx.rows, nx.cols, nw.cols);
        assert_eq!(nw.rows, inner, "linear: input width {} vs weight rows {}", inner, nw.rows);
        assert_eq!(nb.value.len(), out, "linear: bias length");
        let (xv, wv, bv) = (&nx.value[..], &nw.value[..], &nb.value[..]);
        let mut y = vec![0.0; rows * out];
        for r in 0..rows {
            let yr = &mut y[r * out..(r + 1) * out];
            yr.copy_from_slice(bv);
            for (i, &xi) in xv[r * inner..(r + 1) * inner].iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let wi = &wv[i * out..(i + 1) * out];
                for (yo, &wo) in yr.iter_mut().zip(wi) {
                    *yo += xi * wo;
                }
            }
        }
        let g = nx.requires_grad || nw.requires_grad || nb.requires_grad;
        self.push(Cow::Owned(y), rows, out, Op::Linear(x.0, w.0, b.0), g)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a.0), |v| v.max(0.0))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a.0), f64::tanh)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp(a.0), f64::exp)
    }

    pub fn ln(&mut self, a: Var) -> Var {
        self.unary(a, Op::Ln(a.0), f64::ln)
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        self.unary(a, Op::Softplus(a.0), softplus)
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, Op::Square(a.0), |v| v * v)
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.unary(a, Op::Neg(a.0), |v| -v)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.unary(a, Op::Scale(a.0, s), |v| v * s)
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        self.unary(a, Op::AddScalar(a.0), |v| v + s)
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        self.unary(a, Op::Clamp(a.0, lo, hi), |v| v.clamp(lo, hi))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Add(a.0, b.0), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Sub(a.0, b.0), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Mul(a.0, b.0), |x, y| x * y)
    }

    /// Elementwise minimum; ties send the gradient to `a`.
    pub fn minimum(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Minimum(a.0, b.0), |x, y| if y < x { y } else { x })
    }

    /// Multiplies every element of `a` by the single value held in `s`.
    pub fn mul_by_scalar_var(&mut self, a: Var, s: Var) -> Var {
        let sv = self.scalar_value(s);
        let out = self.unary(a, Op::MulByScalarVar(a.0, s.0), |v| v * sv);
        let g = self.nodes[a.0].requires_grad || self.nodes[s.0].requires_grad;
        self.nodes[out.0].requires_grad = g;
        out
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Var {
        let (na, nb) = (&self.nodes[a.0], &self.nodes[b.0]);
        assert_eq!(na.rows, nb.rows, "concat: row mismatch");
        let (rows, ca, cb) = (na.rows, na.cols, nb.cols);
        let mut v = Vec::with_capacity(rows * (ca + cb));
        for r in 0..rows {
            v.extend_from_slice(&na.value[r * ca..(r + 1) * ca]);
            v.extend_from_slice(&nb.value[r * cb..(r + 1) * cb]);
        }
        let g = na.requires_grad || nb.requires_grad;
        self.push(Cow::Owned(v), rows, ca + cb, Op::ConcatCols(a.0, b.0), g)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let n = &self.nodes[a.0];
        assert!(start + len <= n.cols, "slice out of range");
        let (rows, cols) = (n.rows, n.cols);
        let mut v = Vec::with_capacity(rows * len);
        for r in 0..rows {
            v.extend_from_slice(&n.value[r * cols + start..r * cols + start + len]);
        }
        let g = n.requires_grad;
        self.push(Cow::Owned(v), rows, len, Op::SliceCols(a.0, start), g)
    }

    /// Row sums, `r×c -> r×1`.
    pub fn sum_cols(&mut self, a: Var) -> Var {
        let n = &self.nodes[a.0];
        let v: Vec<f64> = n.value.chunks(n.cols).map(|row| row.iter().sum()).collect();
        let (rows, g) = (n.rows, n.requires_grad);
        self.push(Cow::Owned(v), rows, 1, Op::SumCols(a.0), g)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let n = &self.nodes[a.0];
        let v = n.value.iter().sum();
        let g = n.requires_grad;
        self.push(Cow::Owned(vec![v]), 1, 1, Op::Sum(a.0), g)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = &self.nodes[a.0];
        let v = n.value.iter().sum::<f64>() / n.value.len() as f64;
        let g = n.requires_grad;
        self.push(Cow::Owned(vec![v]), 1, 1, Op::Mean(a.0), g)
    }

    /// Reverse sweep from a scalar output with seed gradient 1.
    pub fn backward(&self, output: Var) -> Gradients {
        assert_eq!(self.nodes[output.0].value.len(), 1, "backward needs a scalar output");
        self.backward_with(output, &[1.0])
    }

    /// Reverse sweep from `output` seeded with `output_grad`; returns the
    /// gradients of every named trainable leaf.
    pub fn backward_with(&self, output: Var, output_grad: &[f64]) -> Gradients {
        let grads = self.sweep(output, output_grad);
        let mut out = Gradients::new();
        for (node, g) in self.nodes.iter().zip(grads) {
            if let (Some(name), true) = (&node.name, node.requires_grad) {
                let g = g.unwrap_or_else(|| vec![0.0; node.value.len()]);
                match out.get_mut(name) {
                    Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                    None => {
                        out.insert(name.clone(), g);
                    }
                }
            }
        }
        out
    }

    /// Gradient with respect to an arbitrary node.
    pub fn grad_of(&self, output: Var, wrt: Var) -> Vec<f64> {
        let mut grads = self.sweep(output, &[1.0]);
        grads[wrt.0]
            .take()
            .unwrap_or_else(|| vec![0.0; self.nodes[wrt.0].value.len()])
    }

    fn sweep(&self, output: Var, seed: &[f64]) -> Vec<Option<Vec<f64>>> {
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        assert_eq!(seed.len(), self.nodes[output.0].value.len(), "seed gradient shape");
        grads[output.0] = Some(seed.to_vec());

        for i in (0..=output.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        grads
    }

    fn wants(&self, i: usize) -> bool {
        self.nodes[i].requires_grad
    }

    fn accumulate(grads: &mut [Option<Vec<f64>>], i: usize, len: usize, f: impl FnOnce(&mut [f64])) {
        let slot = grads[i].get_or_insert_with(|| vec![0.0; len]);
        f(slot);
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let y = &node.value[..];
        match node.op {
            Op::Leaf => {}
            Op::Linear(x, w, b) => {
                let (nx, nw) = (&self.nodes[x], &self.nodes[w]);
                let (rows, inner, out) = (nx.rows, nx.cols, nw.cols);
                let (xv, wv) = (&nx.value[..], &nw.value[..]);
                if self.wants(x) {
                    Self::accumulate(grads, x, rows * inner, |dx| {
                        for r in 0..rows {
                            let gr = &g[r * out..(r + 1) * out];
                            for (ii, d) in dx[r * inner..(r + 1) * inner].iter_mut().enumerate() {
                                let wi = &wv[ii * out..(ii + 1) * out];
                                *d += gr.iter().zip(wi).map(|(a, b)| a * b).sum::<f64>();
                            }
                        }
                    });
                }
                if self.wants(w) {
                    Self::accumulate(grads, w, inner * out, |dw| {
                        for r in 0..rows {
                            let gr = &g[r * out..(r + 1) * out];
                            for (ii, &xi) in xv[r * inner..(r + 1) * inner].iter().enumerate() {
                                if xi == 0.0 {
                                    continue;
                                }
                                for (d, &gv) in dw[ii * out..(ii + 1) * out].iter_mut().zip(gr) {
                                    *d += xi * gv;
                                }
                            }
                        }
                    });
                }
                if self.wants(b) {
                    Self::accumulate(grads, b, out, |db| {
                        for gr in g.chunks(out) {
                            db.iter_mut().zip(gr).for_each(|(d, v)| *d += v);
                        }
                    });
                }
            }
            Op::Relu(a) => self.elementwise(a, g, grads, |k| if y[k] > 0.0 { 1.0 } else { 0.0 }),
            Op::Tanh(a) => {
                let pass = self.fault == Some(BackwardFault::TanhPassThrough);
                self.elementwise(a, g, grads, |k| if pass { 1.0 } else { 1.0 - y[k] * y[k] })
            }
            Op::Exp(a) => self.elementwise(a, g, grads, |k| y[k]),
            Op::Ln(a) => {
                let xv = &self.nodes[a].value;
                self.elementwise(a, g, grads, |k| 1.0 / xv[k])
            }
            Op::Softplus(a) => {
                let xv = &self.nodes[a].value;
                self.elementwise(a, g, grads, |k| sigmoid(xv[k]))
            }
            Op::Square(a) => {
                let xv = &self.nodes[a].value;
                self.elementwise(a, g, grads, |k| 2.0 * xv[k])
            }
            Op::Neg(a) => self.elementwise(a, g, grads, |_| -1.0),
            Op::Scale(a, s) => self.elementwise(a, g, grads, |_| s),
            Op::AddScalar(a) => self.elementwise(a, g, grads, |_| 1.0),
            Op::Clamp(a, lo, hi) => {
                let xv = &self.nodes[a].value;
                self.elementwise(a, g, grads, |k| if xv[k] >= lo && xv[k] <= hi { 1.0 } else { 0.0 })
            }
            Op::Add(a, b) => {
                self.elementwise(a, g, grads, |_| 1.0);
                self.elementwise(b, g, grads, |_| 1.0);
            }
            Op::Sub(a, b) => {
                self.elementwise(a, g, grads, |_| 1.0);
                self.elementwise(b, g, grads, |_| -1.0);
            }
            Op::Mul(a, b) => {
                let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
                self.elementwise(a, g, grads, |k| bv[k]);
                self.elementwise(b, g, grads, |k| av[k]);
            }
            Op::MulByScalarVar(a, s) => {
                let sv = self.nodes[s].value[0];
                self.elementwise(a, g, grads, |_| sv);
                if self.wants(s) {
                    let av = &self.nodes[a].value;
                    let total: f64 = g.iter().zip(av.iter()).map(|(x, y)| x * y).sum();
                    Self::accumulate(grads, s, 1, |ds| ds[0] += total);
                }
            }
            Op::Minimum(a, b) => {
                let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
                self.elementwise(a, g, grads, |k| if bv[k] < av[k] { 0.0 } else { 1.0 });
                self.elementwise(b, g, grads, |k| if bv[k] < av[k] { 1.0 } else { 0.0 });
            }
            Op::ConcatCols(a, b) => {
                let (ca, cb) = (self.nodes[a].cols, self.nodes[b].cols);
                let rows = node.rows;
                let w = ca + cb;
                if self.wants(a) {
                    Self::accumulate(grads, a, rows * ca, |da| {
                        for r in 0..rows {
                            for c in 0..ca {
                                da[r * ca + c] += g[r * w + c];
                            }
                        }
                    });
                }
                if self.wants(b) {
                    Self::accumulate(grads, b, rows * cb, |db| {
                        for r in 0..rows {
                            for c in 0..cb {
                                db[r * cb + c] += g[r * w + ca + c];
                            }
                        }
                    });
                }
            }
            Op::SliceCols(a, start) => {
                if self.wants(a) {
                    let src_cols = self.nodes[a].cols;
                    let (rows, len) = (node.rows, node.cols);
                    Self::accumulate(grads, a, rows * src_cols, |da| {
                        for r in 0..rows {
                            for c in 0..len {
                                da[r * src_cols + start + c] += g[r * len + c];
                            }
                        }
                    });
                }
            }
            Op::SumCols(a) => {
                if self.wants(a) {
                    let na = &self.nodes[a];
                    let cols = na.cols;
                    Self::accumulate(grads, a, na.value.len(), |d| {
                        for (k, dk) in d.iter_mut().enumerate() {
                            *dk += g[k / cols];
                        }
                    });
                }
            }
            Op::Sum(a) => {
                let g0 = g[0];
                self.broadcast(a, grads, g0);
            }
            Op::Mean(a) => {
                let n = self.nodes[a].value.len() as f64;
                self.broadcast(a, grads, g[0] / n);
            }
        }
    }

    /// `d[k] += g[k] * local(k)` for a same-shape parent.
    fn elementwise(&self, a: usize, g: &[f64], grads: &mut [Option<Vec<f64>>], local: impl Fn(usize) -> f64) {
        if !self.wants(a) {
            return;
        }
        let len = self.nodes[a].value.len();
        debug_assert_eq!(g.len(), len);
        Self::accumulate(grads, a, len, |d| {
            for (k, dk) in d.iter_mut().enumerate() {
                *dk += g[k] * local(k);
            }
        });
    }

    fn broadcast(&self, a: usize, grads: &mut [Option<Vec<f64>>], v: f64) {
        if !self.wants(a) {
            return;
        }
        let len = self.nodes[a].value.len();
        Self::accumulate(grads, a, len, |d| d.iter_mut().for_each(|x| *x += v));
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
