//! Two-layer GCN encoder with an MLP projection head.
//!
//! The encoder computes `H = Â · relu(Â · X · W1) · W2` and the head computes
//! `g(h) = G2 · elu(G1 · h + b1) + b2` row by row. Backward passes are written
//! out by hand per layer; each forward pass returns a cache holding exactly the
//! intermediates its backward pass needs.

mod adam;
mod checkpoint;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;

/// Node embeddings, one row per node.
pub type Embeddings = Array2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl ModelDims {
    pub fn new(input: usize, hidden: usize, output: usize) -> Self {
        ModelDims { input, hidden, output }
    }
}

/// Encoder and projection-head weights. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
    pub g1: Array2<f64>,
    pub b1: Array1<f64>,
    pub g2: Array2<f64>,
    pub b2: Array1<f64>,
}

pub type Gradients = ModelParams;

pub const TENSOR_NAMES: [&str; 6] = ["w1", "w2", "g1", "b1", "g2", "b2"];

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(dims: ModelDims, rng: &mut impl Rng) -> Self {
        let d = dims.output;
        ModelParams {
            w1: glorot(dims.input, dims.hidden, rng),
            w2: glorot(dims.hidden, d, rng),
            g1: glorot(d, d, rng),
            b1: Array1::zeros(d),
            g2: glorot(d, d, rng),
            b2: Array1::zeros(d),
        }
    }

    pub fn zeros(dims: ModelDims) -> Self {
        let d = dims.output;
        ModelParams {
            w1: Array2::zeros((dims.input, dims.hidden)),
            w2: Array2::zeros((dims.hidden, d)),
            g1: Array2::zeros((d, d)),
            b1: Array1::zeros(d),
            g2: Array2::zeros((d, d)),
            b2: Array1::zeros(d),
        }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams::zeros(self.dims())
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims::new(self.w1.nrows(), self.w1.ncols(), self.w2.ncols())
    }

    /// Shapes of the six tensors in [`TENSOR_NAMES`] order; biases are `[d]`.
    pub fn shapes(&self) -> Vec<Vec<usize>> {
        vec![
            self.w1.shape().to_vec(),
            self.w2.shape().to_vec(),
            self.g1.shape().to_vec(),
            self.b1.shape().to_vec(),
            self.g2.shape().to_vec(),
            self.b2.shape().to_vec(),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let ModelDims { hidden, output, .. } = self.dims();
        let ok = self.w2.nrows() == hidden
            && self.g1.dim() == (output, output)
            && self.g2.dim() == (output, output)
            && self.b1.len() == output
            && self.b2.len() == output;
        if !ok {
            return Err(Error::invalid_argument(format!(
                "inconsistent parameter shapes {:?}",
                self.shapes()
            )));
        }
        self.check_finite()
    }

    /// Flat row-major views of the tensors, in [`TENSOR_NAMES`] order.
    pub fn tensors(&self) -> [&[f64]; 6] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.g1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.g2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.g1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.g2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Tensor name, flat index and value of the first NaN or infinity.
    pub fn first_non_finite(&self) -> Option<(&'static str, usize, f64)> {
        TENSOR_NAMES
            .iter()
            .zip(self.tensors())
            .find_map(|(name, t)| t.iter().position(|x| !x.is_finite()).map(|k| (*name, k, t[k])))
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.first_non_finite() {
            Some((name, k, value)) => Err(Error::numeric(format!("{name}[{k}] = {value}"))),
            None => Ok(()),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn add_assign(&mut self, other: &ModelParams) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

fn elu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// Intermediates of one encoder pass.
#[derive(Debug, Clone)]
pub struct EncoderPass {
    /// `Â · X`, constant with respect to the parameters.
    propagated_input: Array2<f64>,
    pre_activation: Array2<f64>,
    hidden: Array2<f64>,
    pub output: Embeddings,
}

/// Runs the encoder given the already propagated input `Â · X`.
pub fn encode_propagated(
    adj: &NormalizedAdjacency,
    propagated_input: Array2<f64>,
    p: &ModelParams,
) -> Result<EncoderPass> {
    if propagated_input.ncols() != p.w1.nrows() {
        return Err(Error::invalid_argument(format!(
            "features have {} columns but W1 expects {}",
            propagated_input.ncols(),
            p.w1.nrows()
        )));
    }
    if propagated_input.nrows() != adj.node_count() {
        return Err(Error::invalid_argument(format!(
            "{} feature rows for an adjacency over {} nodes",
            propagated_input.nrows(),
            adj.node_count()
        )));
    }
    let pre_activation = propagated_input.dot(&p.w1);
    let hidden = pre_activation.mapv(relu);
    let output = adj.matmul(hidden.dot(&p.w2).view());
    if output.iter().any(|x| !x.is_finite()) {
        return Err(Error::numeric("encoder produced a non-finite embedding"));
    }
    Ok(EncoderPass {
        propagated_input,
        pre_activation,
        hidden,
        output,
    })
}

pub fn encode(adj: &NormalizedAdjacency, x: ArrayView2<'_, f64>, p: &ModelParams) -> Result<EncoderPass> {
    if x.nrows() != adj.node_count() {
        return Err(Error::invalid_argument(format!(
            "{} feature rows for an adjacency over {} nodes",
            x.nrows(),
            adj.node_count()
        )));
    }
    encode_propagated(adj, adj.matmul(x), p)
}

/// `H = Â · relu(Â · X · W1) · W2`.
pub fn gcn_forward(adj: &NormalizedAdjacency, x: ArrayView2<'_, f64>, p: &ModelParams) -> Result<Embeddings> {
    Ok(encode(adj, x, p)?.output)
}

impl EncoderPass {
    /// Accumulates `dL/dW1` and `dL/dW2` given `dL/dH`.
    pub fn backward(&self, adj: &NormalizedAdjacency, p: &ModelParams, d_out: &Array2<f64>, grads: &mut Gradients) {
        // Â is symmetric, so Âᵀ · dH = Â · dH
        let d_q = adj.matmul(d_out.view());
        grads.w2 += &self.hidden.t().dot(&d_q);
        let mut d_pre = d_q.dot(&p.w2.t());
        ndarray::Zip::from(&mut d_pre)
            .and(&self.pre_activation)
            .for_each(|g, &z| {
                if z <= 0.0 {
                    *g = 0.0;
                }
            });
        grads.w1 += &self.propagated_input.t().dot(&d_pre);
    }
}

/// Projection head applied to one embedding row.
pub fn project(h: ArrayView1<'_, f64>, p: &ModelParams) -> Array1<f64> {
    let a = p.g1.dot(&h) + &p.b1;
    p.g2.dot(&a.mapv(elu)) + &p.b2
}

#[derive(Debug, Clone)]
pub struct ProjectionPass {
    input: Array2<f64>,
    pre_activation: Array2<f64>,
    activation: Array2<f64>,
    pub output: Array2<f64>,
}

/// Projection head applied to every row of `h`.
pub fn project_rows(h: Array2<f64>, p: &ModelParams) -> ProjectionPass {
    let pre_activation = h.dot(&p.g1.t()) + p.b1.view().insert_axis(Axis(0));
    let activation = pre_activation.mapv(elu);
    let output = activation.dot(&p.g2.t()) + p.b2.view().insert_axis(Axis(0));
    ProjectionPass {
        input: h,
        pre_activation,
        activation,
        output,
    }
}

impl ProjectionPass {
    /// Accumulates head gradients and returns `dL/dh` given `dL/dg(h)`.
    pub fn backward(&self, p: &ModelParams, d_out: &Array2<f64>, grads: &mut Gradients) -> Array2<f64> {
        grads.g2 += &d_out.t().dot(&self.activation);
        grads.b2 += &d_out.sum_axis(Axis(0));
        let mut d_pre = d_out.dot(&p.g2);
        ndarray::Zip::from(&mut d_pre)
            .and(&self.pre_activation)
            .for_each(|g, &z| *g *= elu_grad(z));
        grads.g1 += &d_pre.t().dot(&self.input);
        grads.b1 += &d_pre.sum_axis(Axis(0));
        d_pre.dot(&p.g1)
    }
}
