use super::{KernelError, Tensor};
use crate::Scalar;

/// Handle to a value recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddBias(Var, Var),
    Scale(Var, T),
    Tanh(Var),
    Sigmoid(Var),
    Ln(Var),
    SoftmaxRows(Var),
    Sum(Var),
    ConcatCols(Vec<Var>),
    SegmentMax { input: Var, argmax: Vec<usize> },
    EmbedBags { table: Var, bags: Vec<Vec<(usize, T)>> },
}

#[derive(Debug, Clone)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// The computation tape: nodes are appended in evaluation order, so reverse
/// index order is a reverse topological order.
#[derive(Debug, Clone)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    backward_done: bool,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn mismatch(op: &'static str, a: &Tensor<impl Scalar>, b: &Tensor<impl Scalar>) -> KernelError {
    KernelError::ShapeMismatch {
        op,
        left: a.shape(),
        right: b.shape(),
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            backward_done: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        debug_assert!(value.is_finite(), "non-finite value produced by {op:?}");
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> Result<&Node<T>, KernelError> {
        self.nodes.get(v.0).ok_or(KernelError::UnknownVar(v.0))
    }

    fn grad_flag(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// A trainable leaf.
    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, KernelError> {
        let value = self.node(a)?.value.matmul(&self.node(b)?.value)?;
        let rg = self.grad_flag(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, KernelError> {
        let value = self.node(a)?.value.transpose();
        let rg = self.grad_flag(&[a]);
        Ok(self.push(value, Op::Transpose(a), rg))
    }

    fn elementwise(&mut self, a: Var, b: Var, name: &'static str, op: Op<T>, f: impl Fn(T, T) -> T) -> Result<Var, KernelError> {
        let (x, y) = (&self.node(a)?.value, &self.node(b)?.value);
        if x.shape() != y.shape() {
            return Err(mismatch(name, x, y));
        }
        let value = x.zip_map(y, f);
        let rg = self.grad_flag(&[a, b]);
        Ok(self.push(value, op, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, KernelError> {
        self.elementwise(a, b, "add", Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, KernelError> {
        self.elementwise(a, b, "sub", Op::Sub(a, b), |x, y| x - y)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, KernelError> {
        self.elementwise(a, b, "mul", Op::Mul(a, b), |x, y| x * y)
    }

    /// Adds a bias broadcast along one axis: a `rows x 1` bias is added to
    /// every column, a `1 x cols` bias to every row.
    pub fn add_bias(&mut self, m: Var, bias: Var) -> Result<Var, KernelError> {
        let (x, b) = (&self.node(m)?.value, &self.node(bias)?.value);
        let (rows, cols) = x.shape();
        let value = if b.shape() == (rows, 1) {
            let mut out = x.clone();
            for r in 0..rows {
                let bv = b.get(r, 0);
                for c in 0..cols {
                    out.set(r, c, x.get(r, c) + bv);
                }
            }
            out
        } else if b.shape() == (1, cols) {
            let mut out = x.clone();
            for r in 0..rows {
                for c in 0..cols {
                    out.set(r, c, x.get(r, c) + b.get(0, c));
                }
            }
            out
        } else {
            return Err(mismatch("add_bias", x, b));
        };
        let rg = self.grad_flag(&[m, bias]);
        Ok(self.push(value, Op::AddBias(m, bias), rg))
    }

    pub fn scale(&mut self, a: Var, factor: T) -> Result<Var, KernelError> {
        let value = self.node(a)?.value.map(|x| x * factor);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(value, Op::Scale(a, factor), rg))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, KernelError> {
        let value = self.node(a)?.value.map(T::tanh);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(value, Op::Tanh(a), rg))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, KernelError> {
        let value = self.node(a)?.value.map(|x| {
            if x >= T::zero() {
                T::one() / (T::one() + (-x).exp())
            } else {
                let e = x.exp();
                e / (T::one() + e)
            }
        });
        let rg = self.grad_flag(&[a]);
        Ok(self.push(value, Op::Sigmoid(a), rg))
    }

    /// Natural logarithm; inputs must be positive.
    pub fn ln(&mut self, a: Var) -> Result<Var, KernelError> {
        let x = &self.node(a)?.value;
        if x.data().iter().any(|v| *v <= T::zero()) {
            return Err(KernelError::InvalidArgument {
                op: "ln",
                msg: "non-positive input".into(),
            });
        }
        let value = x.map(T::ln);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(value, Op::Ln(a), rg))
    }

    /// Row-wise softmax, stabilized by subtracting each row's maximum.
    pub fn softmax_rows(&mut self, a: Var) -> Result<Var, KernelError> {
        let x = &self.node(a)?.value;
        let (rows, cols) = x.shape();
        let mut out = x.clone();
        for r in 0..rows {
            let max = (0..cols).map(|c| x.get(r, c)).fold(T::neg_infinity(), T::max);
            let mut total = T::zero();
            for c in 0..cols {
                let e = (x.get(r, c) - max).exp();
                out.set(r, c, e);
                total += e;
            }
            for c in 0..cols {
                out.set(r, c, out.get(r, c) / total);
            }
        }
        let rg = self.grad_flag(&[a]);
        Ok(self.push(out, Op::SoftmaxRows(a), rg))
    }

    /// Sum of all entries as a 1x1 tensor.
    pub fn sum(&mut self, a: Var) -> Result<Var, KernelError> {
        let total: T = self.node(a)?.value.data().iter().copied().sum();
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Tensor::scalar(total), Op::Sum(a), rg))
    }

    /// Concatenates tensors with equal row counts side by side.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, KernelError> {
        let first = parts.first().ok_or(KernelError::InvalidArgument {
            op: "concat_cols",
            msg: "nothing to concatenate".into(),
        })?;
        let rows = self.node(*first)?.value.rows();
        let mut cols = 0;
        for p in parts {
            let t = &self.node(*p)?.value;
            if t.rows() != rows {
                return Err(mismatch("concat_cols", &self.nodes[first.0].value, t));
            }
            cols += t.cols();
        }
        let mut out = Tensor::zeros(rows, cols);
        let mut offset = 0;
        for p in parts {
            let t = &self.nodes[p.0].value;
            for r in 0..rows {
                for c in 0..t.cols() {
                    out.set(r, offset + c, t.get(r, c));
                }
            }
            offset += t.cols();
        }
        let rg = self.grad_flag(parts);
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), rg))
    }

    /// Max over consecutive blocks of `segment` columns in every row:
    /// `rows x (k * segment)` becomes `rows x k`.
    pub fn segment_max_cols(&mut self, a: Var, segment: usize) -> Result<Var, KernelError> {
        let x = &self.node(a)?.value;
        let (rows, cols) = x.shape();
        if segment == 0 || cols % segment != 0 {
            return Err(KernelError::InvalidArgument {
                op: "segment_max_cols",
                msg: format!("{cols} columns do not split into segments of {segment}"),
            });
        }
        let k = cols / segment;
        let mut out = Tensor::zeros(rows, k);
        let mut argmax = Vec::with_capacity(rows * k);
        for r in 0..rows {
            for s in 0..k {
                let mut best = s * segment;
                for c in s * segment + 1..(s + 1) * segment {
                    if x.get(r, c) > x.get(r, best) {
                        best = c;
                    }
                }
                out.set(r, s, x.get(r, best));
                argmax.push(r * cols + best);
            }
        }
        let rg = self.grad_flag(&[a]);
        Ok(self.push(out, Op::SegmentMax { input: a, argmax }, rg))
    }

    /// Weighted column sums of `table`: output column `m` is
    /// `sum_(j, w) in bags[m] w * table[:, j]`. An empty bag gives a zero column.
    pub fn embed_bags(&mut self, table: Var, bags: Vec<Vec<(usize, T)>>) -> Result<Var, KernelError> {
        let t = &self.node(table)?.value;
        let (rows, cols) = t.shape();
        if bags.is_empty() {
            return Err(KernelError::InvalidArgument {
                op: "embed_bags",
                msg: "no bags".into(),
            });
        }
        if let Some(&(j, _)) = bags.iter().flatten().find(|(j, _)| *j >= cols) {
            return Err(KernelError::InvalidArgument {
                op: "embed_bags",
                msg: format!("column {j} outside table with {cols} columns"),
            });
        }
        let mut out = Tensor::zeros(rows, bags.len());
        for (m, bag) in bags.iter().enumerate() {
            for &(j, w) in bag {
                for r in 0..rows {
                    out.set(r, m, out.get(r, m) + w * t.get(r, j));
                }
            }
        }
        let rg = self.grad_flag(&[table]);
        Ok(self.push(out, Op::EmbedBags { table, bags }, rg))
    }

    /// Allows `backward` to run again on this tape.
    pub fn reset_backward(&mut self) {
        self.backward_done = false;
    }

    /// Propagates d(loss)/d(node) to every node that requires a gradient.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients<T>, KernelError> {
        let shape = self.node(loss)?.value.shape();
        if shape != (1, 1) {
            return Err(KernelError::NonScalarLoss(shape));
        }
        if self.backward_done {
            return Err(KernelError::BackwardAlreadyRun);
        }
        self.backward_done = true;
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(T::one()));
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].clone() else { continue };
            self.propagate(i, &g, &mut grads);
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.requires_grad && grads[i].is_none() && matches!(node.op, Op::Leaf) {
                let (r, c) = node.value.shape();
                grads[i] = Some(Tensor::zeros(r, c));
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, i: usize, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let nodes = &self.nodes;
        let needs = |v: &Var| nodes[v.0].requires_grad;
        let val = |v: &Var| &nodes[v.0].value;
        let out = &nodes[i].value;
        match &nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if needs(a) {
                    accumulate(grads, *a, g.matmul_t(val(b)));
                }
                if needs(b) {
                    accumulate(grads, *b, val(a).t_matmul(g));
                }
            }
            Op::Transpose(a) => {
                if needs(a) {
                    accumulate(grads, *a, g.transpose());
                }
            }
            Op::Add(a, b) => {
                if needs(a) {
                    accumulate(grads, *a, g.clone());
                }
                if needs(b) {
                    accumulate(grads, *b, g.clone());
                }
            }
            Op::Sub(a, b) => {
                if needs(a) {
                    accumulate(grads, *a, g.clone());
                }
                if needs(b) {
                    accumulate(grads, *b, g.map(|x| -x));
                }
            }
            Op::Mul(a, b) => {
                if needs(a) {
                    accumulate(grads, *a, g.zip_map(val(b), |x, y| x * y));
                }
                if needs(b) {
                    accumulate(grads, *b, g.zip_map(val(a), |x, y| x * y));
                }
            }
            Op::AddBias(m, bias) => {
                if needs(m) {
                    accumulate(grads, *m, g.clone());
                }
                if needs(bias) {
                    let (rows, cols) = g.shape();
                    let bg = if val(bias).shape() == (rows, 1) {
                        Tensor::column((0..rows).map(|r| (0..cols).map(|c| g.get(r, c)).sum()).collect())
                    } else {
                        Tensor::row((0..cols).map(|c| (0..rows).map(|r| g.get(r, c)).sum()).collect())
                    };
                    accumulate(grads, *bias, bg);
                }
            }
            Op::Scale(a, f) => {
                if needs(a) {
                    let f = *f;
                    accumulate(grads, *a, g.map(|x| x * f));
                }
            }
            Op::Tanh(a) => {
                if needs(a) {
                    accumulate(grads, *a, g.zip_map(out, |x, y| x * (T::one() - y * y)));
                }
            }
            Op::Sigmoid(a) => {
                if needs(a) {
                    accumulate(grads, *a, g.zip_map(out, |x, y| x * y * (T::one() - y)));
                }
            }
            Op::Ln(a) => {
                if needs(a) {
                    accumulate(grads, *a, g.zip_map(val(a), |x, y| x / y));
                }
            }
            Op::SoftmaxRows(a) => {
                if needs(a) {
                    let (rows, cols) = out.shape();
                    let mut dx = Tensor::zeros(rows, cols);
                    for r in 0..rows {
                        let dot: T = (0..cols).map(|c| g.get(r, c) * out.get(r, c)).sum();
                        for c in 0..cols {
                            dx.set(r, c, out.get(r, c) * (g.get(r, c) - dot));
                        }
                    }
                    accumulate(grads, *a, dx);
                }
            }
            Op::Sum(a) => {
                if needs(a) {
                    let (r, c) = val(a).shape();
                    accumulate(grads, *a, Tensor::filled(r, c, g.data()[0]));
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for p in parts {
                    let (rows, cols) = val(p).shape();
                    if needs(p) {
                        let mut part = Tensor::zeros(rows, cols);
                        for r in 0..rows {
                            for c in 0..cols {
                                part.set(r, c, g.get(r, offset + c));
                            }
                        }
                        accumulate(grads, *p, part);
                    }
                    offset += cols;
                }
            }
            Op::SegmentMax { input, argmax } => {
                if needs(input) {
                    let (rows, cols) = val(input).shape();
                    let mut dx = Tensor::zeros(rows, cols);
                    for (o, &flat) in argmax.iter().enumerate() {
                        dx.data_mut()[flat] += g.data()[o];
                    }
                    accumulate(grads, *input, dx);
                }
            }
            Op::EmbedBags { table, bags } => {
                if needs(table) {
                    let (rows, cols) = val(table).shape();
                    let mut dt = Tensor::zeros(rows, cols);
                    for (m, bag) in bags.iter().enumerate() {
                        for &(j, w) in bag {
                            for r in 0..rows {
                                dt.set(r, j, dt.get(r, j) + w * g.get(r, m));
                            }
                        }
                    }
                    accumulate(grads, *table, dt);
                }
            }
        }
    }
}

fn accumulate<T: Scalar>(grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot => *slot = Some(g),
    }
}

/// Gradients produced by [`Graph::backward`]. Every trainable leaf has an
/// entry, zero when it did not influence the loss.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}
