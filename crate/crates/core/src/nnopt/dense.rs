use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::matrix::{gemm, Matrix, Op};
use crate::error::{Error, Result};

/// Fully connected network with rectified-linear hidden layers and an
/// identity output layer.
///
/// Parameters live in one flat vector; layer `l` stores its weights as an
/// `in × out` row-major block followed by its `out` biases. That layout is
/// also the checkpoint layout.
#[derive(Debug, Clone)]
pub struct DenseNet {
    dims: Vec<usize>,
    params: Vec<f64>,
    offsets: Vec<usize>,
    cache: Option<Vec<Matrix>>,
}

/// Reverse-mode result of [`DenseNet::backward`].
#[derive(Debug, Clone)]
pub struct Gradients {
    /// Same layout as [`DenseNet::params`].
    pub params: Vec<f64>,
    pub input: Matrix,
}

impl PartialEq for DenseNet {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.params == other.params
    }
}

fn layer_offsets(dims: &[usize]) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(dims.len().saturating_sub(1));
    let mut total = 0;
    for w in dims.windows(2) {
        offsets.push(total);
        total += w[0] * w[1] + w[1];
    }
    (offsets, total)
}

/// Number of parameters of a network with the given layer widths.
pub fn param_count(dims: &[usize]) -> usize {
    layer_offsets(dims).1
}

impl DenseNet {
    /// All-zero parameters.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::Shape(format!(
                "a network needs at least two non-zero layer widths, got {dims:?}"
            )));
        }
        let (offsets, total) = layer_offsets(dims);
        Ok(Self {
            dims: dims.to_vec(),
            params: vec![0.0; total],
            offsets,
            cache: None,
        })
    }

    /// Weights and biases uniform on `±1/sqrt(fan_in)`.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        for l in 0..net.num_layers() {
            let bound = 1.0 / (dims[l] as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            let (start, end) = net.layer_range(l);
            for p in &mut net.params[start..end] {
                *p = dist.sample(rng);
            }
        }
        Ok(net)
    }

    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        if params.len() != net.params.len() {
            return Err(Error::Shape(format!(
                "network {dims:?} needs {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two layers")
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn layer_range(&self, l: usize) -> (usize, usize) {
        let start = self.offsets[l];
        (start, start + self.dims[l] * self.dims[l + 1] + self.dims[l + 1])
    }

    /// Weight block (`in × out`, row-major) and bias of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (start, end) = self.layer_range(l);
        let split = start + self.dims[l] * self.dims[l + 1];
        (&self.params[start..split], &self.params[split..end])
    }

    pub fn layer_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let (start, end) = self.layer_range(l);
        let split = start + self.dims[l] * self.dims[l + 1];
        let (w, b) = self.params[start..end].split_at_mut(split - start);
        (w, b)
    }

    fn check_input(&self, input: &Matrix) -> Result<()> {
        if input.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.cols()
            )));
        }
        Ok(())
    }

    fn run(&self, input: &Matrix, mut keep: Option<&mut Vec<Matrix>>) -> Matrix {
        let mut x = input.clone();
        for l in 0..self.num_layers() {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let (w, b) = self.layer(l);
            let mut z = Matrix::zeros(x.rows(), fan_out);
            for r in 0..x.rows() {
                z.row_mut(r).copy_from_slice(b);
            }
            gemm(
                1.0,
                x.as_slice(),
                x.rows(),
                fan_in,
                Op::N,
                w,
                fan_in,
                fan_out,
                Op::N,
                1.0,
                z.as_mut_slice(),
            );
            if l + 1 < self.num_layers() {
                for v in z.as_mut_slice() {
                    *v = v.max(0.0);
                }
            }
            if let Some(cache) = keep.as_deref_mut() {
                cache.push(std::mem::replace(&mut x, z));
            } else {
                x = z;
            }
        }
        x
    }

    /// Batched forward pass without caching; rows are samples.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input)?;
        Ok(self.run(input, None))
    }

    /// Single-sample forward pass.
    pub fn forward_vec(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.predict(&Matrix::row_vector(input))?.into_vec())
    }

    /// Batched forward pass that caches what [`DenseNet::backward`] needs.
    pub fn forward(&mut self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input)?;
        let mut cache = Vec::with_capacity(self.num_layers());
        let out = self.run(input, Some(&mut cache));
        self.cache = Some(cache);
        Ok(out)
    }

    /// Gradients of `Σ_rows Σ_cols upstream ⊙ output` with respect to the
    /// parameters and the input of the last cached forward pass. Consumes
    /// the cache.
    pub fn backward(&mut self, upstream: &Matrix) -> Result<Gradients> {
        self.backprop(upstream, true)
    }

    /// Like [`DenseNet::backward`] but only the input gradient is formed;
    /// the returned parameter gradient is empty.
    pub fn backward_input(&mut self, upstream: &Matrix) -> Result<Gradients> {
        self.backprop(upstream, false)
    }

    fn backprop(&mut self, upstream: &Matrix, with_params: bool) -> Result<Gradients> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::State("backward called without a cached forward pass".into()))?;
        let batch = cache[0].rows();
        if upstream.rows() != batch || upstream.cols() != self.output_dim() {
            return Err(Error::Shape(format!(
                "upstream gradient is {}x{}, output is {}x{}",
                upstream.rows(),
                upstream.cols(),
                batch,
                self.output_dim()
            )));
        }
        let mut grads = if with_params {
            vec![0.0; self.params.len()]
        } else {
            Vec::new()
        };
        let mut delta = upstream.clone();
        for l in (0..self.num_layers()).rev() {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let x = &cache[l];
            if with_params {
                let (start, end) = self.layer_range(l);
                let split = start + fan_in * fan_out;
                let (gw, gb) = grads[start..end].split_at_mut(split - start);
                gemm(
                    1.0,
                    x.as_slice(),
                    batch,
                    fan_in,
                    Op::T,
                    delta.as_slice(),
                    batch,
                    fan_out,
                    Op::N,
                    0.0,
                    gw,
                );
                for r in 0..batch {
                    for (g, d) in gb.iter_mut().zip(delta.row(r)) {
                        *g += d;
                    }
                }
            }
            let (w, _) = self.layer(l);
            let mut dx = Matrix::zeros(batch, fan_in);
            gemm(
                1.0,
                delta.as_slice(),
                batch,
                fan_out,
                Op::N,
                w,
                fan_in,
                fan_out,
                Op::T,
                0.0,
                dx.as_mut_slice(),
            );
            if l > 0 {
                // x is the rectified output of layer l-1
                for (g, a) in dx.as_mut_slice().iter_mut().zip(x.as_slice()) {
                    if *a <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            delta = dx;
        }
        Ok(Gradients {
            params: grads,
            input: delta,
        })
    }

    /// `self ← ν·self + (1 − ν)·main`, element-wise.
    pub fn soft_update_from(&mut self, main: &DenseNet, retention: f64) -> Result<()> {
        if self.dims != main.dims {
            return Err(Error::Shape(format!(
                "soft update between {:?} and {:?}",
                self.dims, main.dims
            )));
        }
        for (t, m) in self.params.iter_mut().zip(&main.params) {
            *t = retention * *t + (1.0 - retention) * m;
        }
        Ok(())
    }

    pub fn copy_params_from(&mut self, other: &DenseNet) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!(
                "copy between {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        self.params.copy_from_slice(&other.params);
        Ok(())
    }
}
