//! Reverse-mode differentiation over matrix-valued nodes.
//!
//! Every node holds a dense matrix. Batches are laid out with one sample
//! per column, so a network layer is a single `MatMul` plus `AddBias`.

use ndarray::{s, Array2, Axis};

use crate::num::Real;

use super::{Activation, NetError};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Sensitivities of a parameter-dependent linear map `y = M·x + g·e₁⊗f`
/// with respect to one parameter.
#[derive(Debug, Clone)]
pub struct LinearSensitivity<T> {
    pub d_matrix: Array2<T>,
    pub d_gain: T,
}

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    Constant,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    ScaleRows(Var, Vec<T>),
    Activate(Var, Activation),
    ActivateDeriv(Var, Activation),
    SliceCols(Var, usize, usize),
    WeightedMse(Var, Vec<T>),
    Sum(Var),
    LinearSystem {
        params: Var,
        x: Var,
        matrix: Array2<T>,
        forcing: Vec<T>,
        sens: Vec<LinearSensitivity<T>>,
    },
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Constant => "constant",
            Op::MatMul(..) => "matmul",
            Op::AddBias(..) => "add_bias",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::ScaleRows(..) => "scale_rows",
            Op::Activate(..) => "activate",
            Op::ActivateDeriv(..) => "activate_deriv",
            Op::SliceCols(..) => "slice_cols",
            Op::WeightedMse(..) => "weighted_mse",
            Op::Sum(..) => "sum",
            Op::LinearSystem { .. } => "linear_system",
        }
    }
}

struct Node<T> {
    op: Op<T>,
    value: Array2<T>,
    needs_grad: bool,
}

/// Records operations in evaluation order; [`Tape::gradient`] sweeps them
/// backwards.
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array2<T> {
        &self.nodes[v.0].value
    }

    /// Value of a `1×1` node.
    pub fn scalar(&self, v: Var) -> T {
        self.value(v)[[0, 0]]
    }

    fn push(&mut self, op: Op<T>, value: Array2<T>, needs_grad: bool) -> Var {
        self.nodes.push(Node { op, value, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// A trainable input.
    pub fn leaf(&mut self, value: Array2<T>) -> Var {
        self.push(Op::Leaf, value, true)
    }

    pub fn constant(&mut self, value: Array2<T>) -> Var {
        self.push(Op::Constant, value, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(self.value(b));
        let g = self.needs(a) || self.needs(b);
        self.push(Op::MatMul(a, b), v, g)
    }

    /// `x + b·1ᵀ` for a column vector `b`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Var {
        let v = self.value(x) + self.value(b);
        let g = self.needs(x) || self.needs(b);
        self.push(Op::AddBias(x, b), v, g)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        let g = self.needs(a) || self.needs(b);
        self.push(Op::Add(a, b), v, g)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        let g = self.needs(a) || self.needs(b);
        self.push(Op::Sub(a, b), v, g)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        let g = self.needs(a) || self.needs(b);
        self.push(Op::Mul(a, b), v, g)
    }

    pub fn scale(&mut self, x: Var, c: T) -> Var {
        let v = self.value(x) * c;
        let g = self.needs(x);
        self.push(Op::Scale(x, c), v, g)
    }

    /// Multiplies row `i` by `c[i]`.
    pub fn scale_rows(&mut self, x: Var, c: Vec<T>) -> Var {
        let mut v = self.value(x).clone();
        for (mut row, &ci) in v.rows_mut().into_iter().zip(&c) {
            row *= ci;
        }
        let g = self.needs(x);
        self.push(Op::ScaleRows(x, c), v, g)
    }

    pub fn activate(&mut self, x: Var, act: Activation) -> Var {
        let v = self.value(x).mapv(|z| act.value(z));
        let g = self.needs(x);
        self.push(Op::Activate(x, act), v, g)
    }

    /// Elementwise `σ'(x)`.
    pub fn activate_deriv(&mut self, x: Var, act: Activation) -> Var {
        let v = self.value(x).mapv(|z| act.deriv(z));
        let g = self.needs(x);
        self.push(Op::ActivateDeriv(x, act), v, g)
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Var {
        let v = self.value(x).slice(s![.., start..end]).to_owned();
        let g = self.needs(x);
        self.push(Op::SliceCols(x, start, end), v, g)
    }

    /// `Σᵢ wᵢ · meanⱼ xᵢⱼ²` as a `1×1` node.
    pub fn weighted_mse(&mut self, x: Var, weights: Vec<T>) -> Var {
        let xv = self.value(x);
        assert_eq!(xv.nrows(), weights.len(), "one weight per row");
        let n = T::from_usize(xv.ncols().max(1)).unwrap();
        let total = xv
            .rows()
            .into_iter()
            .zip(&weights)
            .fold(T::zero(), |acc, (row, &w)| acc + w * (row.iter().fold(T::zero(), |s, &r| s + r * r) / n));
        let g = self.needs(x);
        self.push(Op::WeightedMse(x, weights), Array2::from_elem((1, 1), total), g)
    }

    /// Sum of all entries as a `1×1` node.
    pub fn sum(&mut self, x: Var) -> Var {
        let total = self.value(x).sum();
        let g = self.needs(x);
        self.push(Op::Sum(x), Array2::from_elem((1, 1), total), g)
    }

    /// `M·x + gain·e₁⊗forcing`, where `M` and `gain` depend on `params`
    /// through the supplied per-parameter sensitivities.
    pub fn linear_system(
        &mut self,
        params: Var,
        x: Var,
        matrix: Array2<T>,
        gain: T,
        forcing: Vec<T>,
        sens: Vec<LinearSensitivity<T>>,
    ) -> Var {
        assert_eq!(self.value(params).len(), sens.len(), "one sensitivity per parameter");
        let mut v = matrix.dot(self.value(x));
        for (out, &f) in v.row_mut(0).iter_mut().zip(&forcing) {
            *out += gain * f;
        }
        let g = self.needs(x) || self.needs(params);
        self.push(
            Op::LinearSystem {
                params,
                x,
                matrix,
                forcing,
                sens,
            },
            v,
            g,
        )
    }

    /// Adjoint of every node with respect to the `1×1` node `root`.
    pub fn gradient(&self, root: Var) -> Result<Gradients<T>, NetError> {
        assert_eq!(self.value(root).dim(), (1, 1), "gradient root must be scalar");
        let mut adj: Vec<Option<Array2<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        adj[root.0] = Some(Array2::ones((1, 1)));

        for i in (0..=root.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            if g.iter().any(|x| !x.is_finite()) {
                return Err(NetError::NonFiniteGradient {
                    node: i,
                    op: node.op.name(),
                });
            }
            let mut send = |v: Var, contrib: Array2<T>| {
                if !self.nodes[v.0].needs_grad {
                    return;
                }
                match &mut adj[v.0] {
                    Some(acc) => *acc += &contrib,
                    slot @ None => *slot = Some(contrib),
                }
            };
            match &node.op {
                Op::Leaf => {
                    adj[i] = Some(g);
                    continue;
                }
                Op::Constant => {}
                Op::MatMul(a, b) => {
                    if self.needs(*a) {
                        send(*a, g.dot(&self.value(*b).t()));
                    }
                    if self.needs(*b) {
                        send(*b, self.value(*a).t().dot(&g));
                    }
                }
                Op::AddBias(x, b) => {
                    if self.needs(*b) {
                        send(*b, g.sum_axis(Axis(1)).insert_axis(Axis(1)));
                    }
                    send(*x, g.clone());
                }
                Op::Add(a, b) => {
                    send(*a, g.clone());
                    send(*b, g.clone());
                }
                Op::Sub(a, b) => {
                    send(*a, g.clone());
                    send(*b, g.mapv(|v| -v));
                }
                Op::Mul(a, b) => {
                    if self.needs(*a) {
                        send(*a, &g * self.value(*b));
                    }
                    if self.needs(*b) {
                        send(*b, &g * self.value(*a));
                    }
                }
                Op::Scale(x, c) => send(*x, &g * *c),
                Op::ScaleRows(x, c) => {
                    let mut d = g.clone();
                    for (mut row, &ci) in d.rows_mut().into_iter().zip(c) {
                        row *= ci;
                    }
                    send(*x, d);
                }
                Op::Activate(x, act) => {
                    let mut d = self.value(*x).mapv(|z| act.deriv(z));
                    d *= &g;
                    send(*x, d);
                }
                Op::ActivateDeriv(x, act) => {
                    let mut d = self.value(*x).mapv(|z| act.second_deriv(z));
                    d *= &g;
                    send(*x, d);
                }
                Op::SliceCols(x, start, end) => {
                    let mut d = Array2::zeros(self.value(*x).raw_dim());
                    d.slice_mut(s![.., *start..*end]).assign(&g);
                    send(*x, d);
                }
                Op::WeightedMse(x, w) => {
                    let xv = self.value(*x);
                    let two_over_n = T::lit(2.0) / T::from_usize(xv.ncols().max(1)).unwrap();
                    let gs = g[[0, 0]];
                    let mut d = xv.clone();
                    for (mut row, &wi) in d.rows_mut().into_iter().zip(w) {
                        row *= gs * wi * two_over_n;
                    }
                    send(*x, d);
                }
                Op::Sum(x) => send(*x, Array2::from_elem(self.value(*x).raw_dim(), g[[0, 0]])),
                Op::LinearSystem {
                    params,
                    x,
                    matrix,
                    forcing,
                    sens,
                    ..
                } => {
                    if self.needs(*params) {
                        // ∂/∂p_j = Σ (∂M/∂p_j ⊙ G·xᵀ) + ∂g/∂p_j · Σ G₀ₙ fₙ
                        let gx = g.dot(&self.value(*x).t());
                        let gf = g.row(0).iter().zip(forcing).fold(T::zero(), |s, (&a, &b)| s + a * b);
                        let d: Vec<T> = sens
                            .iter()
                            .map(|s| (&s.d_matrix * &gx).sum() + s.d_gain * gf)
                            .collect();
                        let shape = self.value(*params).raw_dim();
                        send(*params, Array2::from_shape_vec(shape, d).expect("one entry per parameter"));
                    }
                    if self.needs(*x) {
                        send(*x, matrix.t().dot(&g));
                    }
                }
            }
        }
        Ok(Gradients {
            shapes: self.nodes.iter().map(|n| n.value.dim()).collect(),
            adj,
        })
    }
}

/// Leaf adjoints produced by [`Tape::gradient`].
pub struct Gradients<T> {
    shapes: Vec<(usize, usize)>,
    adj: Vec<Option<Array2<T>>>,
}

impl<T: Real> Gradients<T> {
    /// `∂root/∂v`; zero for leaves that do not reach the root.
    pub fn wrt(&self, v: Var) -> Array2<T> {
        self.adj[v.0].clone().unwrap_or_else(|| Array2::zeros(self.shapes[v.0]))
    }

    /// Appends `∂root/∂v` to `out` in row-major order.
    pub fn extend_into(&self, v: Var, out: &mut Vec<T>) {
        match &self.adj[v.0] {
            Some(a) => out.extend(a.iter().copied()),
            None => out.extend(std::iter::repeat_n(T::zero(), self.shapes[v.0].0 * self.shapes[v.0].1)),
        }
    }
}
