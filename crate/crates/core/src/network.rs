//! Declarative network specs and the executable network built from them.
//!
//! A network is a set of parallel input branches whose outputs are
//! concatenated along the time axis (a single branch passes through) followed
//! by a head chain. That covers all three model families: the baseline is one
//! branch with an empty head, the CNN models are two convolutional branches
//! merged into a recurrent head.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{
    AvgPool1d, BiLstm, Conv1d, Dense, Dropout, ForwardMode, Layer, LayerCache, Lstm, Mat, Padding,
};
use crate::tensor::Tensor2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        filters: usize,
        kernel_size: usize,
        padding: Padding,
    },
    AvgPool1d {
        pool: usize,
    },
    Relu,
    Lstm {
        units: usize,
        return_sequences: bool,
    },
    BiLstm {
        units_per_direction: usize,
        return_sequences: bool,
    },
    Dense {
        units: usize,
    },
    Dropout {
        rate: f64,
    },
    Flatten,
}

impl LayerSpec {
    fn kind_label(&self) -> String {
        match self {
            LayerSpec::Conv1d { filters, .. } => format!("conv1d({filters})"),
            LayerSpec::AvgPool1d { pool } => format!("avg_pool1d({pool})"),
            LayerSpec::Relu => "relu".into(),
            LayerSpec::Lstm { units, .. } => format!("lstm({units})"),
            LayerSpec::BiLstm {
                units_per_direction,
                ..
            } => format!("bilstm({units_per_direction})"),
            LayerSpec::Dense { units } => format!("dense({units})"),
            LayerSpec::Dropout { rate } => format!("dropout({rate})"),
            LayerSpec::Flatten => "flatten".into(),
        }
    }
}

/// Branch inputs, branch chains, and the post-concatenation head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// `(time_steps, channels)` per input branch.
    pub branch_inputs: Vec<(usize, usize)>,
    pub branches: Vec<Vec<LayerSpec>>,
    pub head: Vec<LayerSpec>,
    /// Relabel a `(1, n)` final output as an `(n, 1)` column.
    pub output_as_column: bool,
}

/// Inferred output shape after every layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeTrace {
    pub branch_shapes: Vec<Vec<(usize, usize)>>,
    pub concat_shape: (usize, usize),
    pub head_shapes: Vec<(usize, usize)>,
    pub output_shape: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerParamCount {
    pub label: String,
    pub params: usize,
}

fn infer_layer(spec: &LayerSpec, shape: (usize, usize)) -> Result<(usize, usize)> {
    let (t, c) = shape;
    match spec {
        LayerSpec::Conv1d {
            filters,
            kernel_size,
            padding,
        } => {
            if *filters == 0 || *kernel_size == 0 {
                return Err(Error::Argument(
                    "conv1d needs filters >= 1 and kernel_size >= 1".into(),
                ));
            }
            let t_out = match padding {
                Padding::Same => t,
                Padding::Valid => {
                    if t < *kernel_size {
                        return Err(Error::Dimension(format!(
                            "conv1d valid padding needs at least {kernel_size} steps, got {t}"
                        )));
                    }
                    t - kernel_size + 1
                }
            };
            Ok((t_out, *filters))
        }
        LayerSpec::AvgPool1d { pool } => {
            if *pool == 0 || t % pool != 0 {
                return Err(Error::Dimension(format!(
                    "avg_pool1d pool size {pool} does not divide {t} time steps"
                )));
            }
            Ok((t / pool, c))
        }
        LayerSpec::Relu => Ok((t, c)),
        LayerSpec::Lstm {
            units,
            return_sequences,
        } => {
            if *units == 0 {
                return Err(Error::Argument("lstm needs units >= 1".into()));
            }
            Ok((if *return_sequences { t } else { 1 }, *units))
        }
        LayerSpec::BiLstm {
            units_per_direction,
            return_sequences,
        } => {
            if *units_per_direction == 0 {
                return Err(Error::Argument("bilstm needs units >= 1".into()));
            }
            Ok((
                if *return_sequences { t } else { 1 },
                2 * units_per_direction,
            ))
        }
        LayerSpec::Dense { units } => {
            if *units == 0 {
                return Err(Error::Argument("dense needs units >= 1".into()));
            }
            Ok((t, *units))
        }
        LayerSpec::Dropout { rate } => {
            if !(0.0..1.0).contains(rate) {
                return Err(Error::Argument(format!(
                    "dropout rate must lie in [0, 1), got {rate}"
                )));
            }
            Ok((t, c))
        }
        LayerSpec::Flatten => Ok((1, t * c)),
    }
}

fn layer_params(spec: &LayerSpec, in_channels: usize) -> usize {
    match spec {
        LayerSpec::Conv1d {
            filters,
            kernel_size,
            ..
        } => kernel_size * in_channels * filters + filters,
        LayerSpec::Lstm { units, .. } => 4 * (units * (in_channels + units) + units),
        LayerSpec::BiLstm {
            units_per_direction,
            ..
        } => 2 * 4 * (units_per_direction * (in_channels + units_per_direction) + units_per_direction),
        LayerSpec::Dense { units } => in_channels * units + units,
        _ => 0,
    }
}

impl NetworkSpec {
    /// Validates the chain and returns the shape after every layer.
    pub fn infer_shapes(&self) -> Result<ShapeTrace> {
        if self.branches.is_empty() || self.branches.len() != self.branch_inputs.len() {
            return Err(Error::Dimension(format!(
                "{} branch chains for {} branch inputs",
                self.branches.len(),
                self.branch_inputs.len()
            )));
        }
        let mut branch_shapes = Vec::with_capacity(self.branches.len());
        let mut branch_out = Vec::with_capacity(self.branches.len());
        for (chain, &input) in self.branches.iter().zip(&self.branch_inputs) {
            let mut shapes = Vec::with_capacity(chain.len());
            let mut shape = input;
            for spec in chain {
                shape = infer_layer(spec, shape)?;
                shapes.push(shape);
            }
            branch_shapes.push(shapes);
            branch_out.push(shape);
        }

        let channels = branch_out[0].1;
        if branch_out.iter().any(|&(_, c)| c != channels) {
            return Err(Error::Dimension(format!(
                "branch outputs must share a channel count to concatenate, got {branch_out:?}"
            )));
        }
        let concat_shape = (branch_out.iter().map(|&(t, _)| t).sum(), channels);

        let mut head_shapes = Vec::with_capacity(self.head.len());
        let mut shape = concat_shape;
        for spec in &self.head {
            shape = infer_layer(spec, shape)?;
            head_shapes.push(shape);
        }
        let output_shape = if self.output_as_column {
            (shape.0 * shape.1, 1)
        } else {
            shape
        };
        Ok(ShapeTrace {
            branch_shapes,
            concat_shape,
            head_shapes,
            output_shape,
        })
    }

    /// Per-layer trainable parameter counts in declaration order.
    pub fn parameter_counts(&self) -> Result<Vec<LayerParamCount>> {
        let trace = self.infer_shapes()?;
        let mut out = Vec::new();
        for (b, chain) in self.branches.iter().enumerate() {
            let mut in_c = self.branch_inputs[b].1;
            for (j, spec) in chain.iter().enumerate() {
                out.push(LayerParamCount {
                    label: format!("branch{b}.{}", spec.kind_label()),
                    params: layer_params(spec, in_c),
                });
                in_c = trace.branch_shapes[b][j].1;
            }
        }
        let mut in_c = trace.concat_shape.1;
        for (j, spec) in self.head.iter().enumerate() {
            out.push(LayerParamCount {
                label: format!("head.{}", spec.kind_label()),
                params: layer_params(spec, in_c),
            });
            in_c = trace.head_shapes[j].1;
        }
        Ok(out)
    }

    pub fn parameter_total(&self) -> Result<usize> {
        Ok(self.parameter_counts()?.iter().map(|c| c.params).sum())
    }
}

/// Exact trainable-parameter count of a valid spec.
pub fn count_parameters(spec: &NetworkSpec) -> Result<usize> {
    spec.parameter_total()
}

/// Rounds every value onto the 32-bit float grid. Weights live on this grid
/// so the f32 model file round-trips without changing a single forward pass.
pub fn quantize_to_f32(values: &mut [f64]) {
    for v in values {
        *v = *v as f32 as f64;
    }
}

/// Trained parameters of a network, in declaration order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkWeights {
    pub rng_seed: u64,
    pub values: Vec<f32>,
}

/// Gradients for every parameter array, aligned with declaration order.
#[derive(Clone, Debug)]
pub struct NetworkGrads {
    per_layer: Vec<Vec<Mat>>,
}

impl NetworkGrads {
    pub fn add_assign(&mut self, other: &NetworkGrads) {
        for (mine, theirs) in self.per_layer.iter_mut().zip(&other.per_layer) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.per_layer {
            for a in layer {
                a.mapv_inplace(|v| v * factor);
            }
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.per_layer {
            for a in layer {
                out.extend(a.iter().copied());
            }
        }
        out
    }
}

/// Caches of one training forward pass.
pub struct NetworkCaches {
    branch_caches: Vec<Vec<LayerCache>>,
    head_caches: Vec<LayerCache>,
    branch_out_steps: Vec<usize>,
    pre_column_shape: (usize, usize),
}

/// An executable network: spec plus parameter arrays.
#[derive(Clone, Debug)]
pub struct Network {
    spec: NetworkSpec,
    branches: Vec<Vec<Layer>>,
    head: Vec<Layer>,
    rng_seed: u64,
}

impl Network {
    /// Builds and initializes a network: Glorot-uniform kernels, uniform
    /// +/-0.05 recurrent kernels, zero biases with forget gates at +1.
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self> {
        let mut net = Self::zeroed(spec, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer_count = net.layer_slot_count();
        for slot in 0..layer_count {
            let layer = net.layer_mut(slot);
            init_layer(layer, &mut rng);
        }
        let mut flat = net.flatten_params();
        quantize_to_f32(&mut flat);
        net.set_flat_params(&flat)?;
        Ok(net)
    }

    /// Rebuilds a network from serialized weights.
    pub fn from_weights(spec: NetworkSpec, weights: &NetworkWeights) -> Result<Self> {
        let mut net = Self::zeroed(spec, weights.rng_seed)?;
        if weights.values.len() != net.param_count() {
            return Err(Error::Dimension(format!(
                "weight buffer holds {} values but the spec needs {}",
                weights.values.len(),
                net.param_count()
            )));
        }
        let flat: Vec<f64> = weights.values.iter().map(|&v| v as f64).collect();
        net.set_flat_params(&flat)?;
        Ok(net)
    }

    fn zeroed(spec: NetworkSpec, rng_seed: u64) -> Result<Self> {
        let trace = spec.infer_shapes()?;
        let mut branches = Vec::with_capacity(spec.branches.len());
        for (b, chain) in spec.branches.iter().enumerate() {
            let mut layers = Vec::with_capacity(chain.len());
            let mut in_c = spec.branch_inputs[b].1;
            for (j, layer_spec) in chain.iter().enumerate() {
                layers.push(build_layer(layer_spec, in_c));
                in_c = trace.branch_shapes[b][j].1;
            }
            branches.push(layers);
        }
        let mut head = Vec::with_capacity(spec.head.len());
        let mut in_c = trace.concat_shape.1;
        for (j, layer_spec) in spec.head.iter().enumerate() {
            head.push(build_layer(layer_spec, in_c));
            in_c = trace.head_shapes[j].1;
        }
        Ok(Network {
            spec,
            branches,
            head,
            rng_seed,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    fn layer_slot_count(&self) -> usize {
        self.branches.iter().map(Vec::len).sum::<usize>() + self.head.len()
    }

    fn layer_mut(&mut self, slot: usize) -> &mut Layer {
        let mut idx = slot;
        for branch in &mut self.branches {
            if idx < branch.len() {
                return &mut branch[idx];
            }
            idx -= branch.len();
        }
        &mut self.head[idx]
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.branches.iter().flatten().chain(self.head.iter())
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(Layer::param_count).sum()
    }

    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in self.layers() {
            for array in layer.param_arrays() {
                out.extend(array.iter().copied());
            }
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Dimension(format!(
                "parameter buffer holds {} values but the network needs {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut offset = 0;
        let slots = self.layer_slot_count();
        for slot in 0..slots {
            for array in self.layer_mut(slot).param_arrays_mut() {
                for v in array.iter_mut() {
                    *v = flat[offset];
                    offset += 1;
                }
            }
        }
        Ok(())
    }

    /// Current parameters as serializable 32-bit weights (bit-exact, since
    /// parameters always live on the f32 grid).
    pub fn weights(&self) -> NetworkWeights {
        NetworkWeights {
            rng_seed: self.rng_seed,
            values: self.flatten_params().iter().map(|&v| v as f32).collect(),
        }
    }

    fn check_inputs(&self, inputs: &[Tensor2]) -> Result<()> {
        if inputs.len() != self.branches.len() {
            return Err(Error::Dimension(format!(
                "network takes {} inputs, got {}",
                self.branches.len(),
                inputs.len()
            )));
        }
        for (i, (input, &expected)) in inputs.iter().zip(&self.spec.branch_inputs).enumerate() {
            if input.shape() != expected {
                return Err(Error::Dimension(format!(
                    "input {i} has shape {:?}, expected {:?}",
                    input.shape(),
                    expected
                )));
            }
        }
        Ok(())
    }

    fn run(
        &self,
        inputs: &[Tensor2],
        mode: &mut ForwardMode,
    ) -> Result<(Mat, NetworkCaches)> {
        self.check_inputs(inputs)?;
        let mut branch_caches = Vec::with_capacity(self.branches.len());
        let mut branch_outputs = Vec::with_capacity(self.branches.len());
        for (chain, input) in self.branches.iter().zip(inputs) {
            let mut x = input.as_array().clone();
            let mut caches = Vec::with_capacity(chain.len());
            for layer in chain {
                let (y, cache) = layer.forward(&x, mode)?;
                caches.push(cache);
                x = y;
            }
            branch_caches.push(caches);
            branch_outputs.push(x);
        }

        let branch_out_steps: Vec<usize> = branch_outputs.iter().map(Mat::nrows).collect();
        let mut x = if branch_outputs.len() == 1 {
            branch_outputs.pop().expect("one branch")
        } else {
            let channels = branch_outputs[0].ncols();
            let total: usize = branch_out_steps.iter().sum();
            let mut merged = Array2::zeros((total, channels));
            let mut row = 0;
            for out in &branch_outputs {
                merged
                    .slice_mut(ndarray::s![row..row + out.nrows(), ..])
                    .assign(out);
                row += out.nrows();
            }
            merged
        };

        let mut head_caches = Vec::with_capacity(self.head.len());
        for layer in &self.head {
            let (y, cache) = layer.forward(&x, mode)?;
            head_caches.push(cache);
            x = y;
        }

        let pre_column_shape = (x.nrows(), x.ncols());
        if self.spec.output_as_column {
            let n = x.nrows() * x.ncols();
            x = x.to_shape((n, 1)).expect("row-major reshape").to_owned();
        }
        Ok((
            x,
            NetworkCaches {
                branch_caches,
                head_caches,
                branch_out_steps,
                pre_column_shape,
            },
        ))
    }

    /// Inference forward pass; dropout is the identity.
    pub fn forward(&self, inputs: &[Tensor2]) -> Result<Tensor2> {
        let (y, _) = self.run(inputs, &mut ForwardMode::Infer)?;
        Ok(Tensor2::from_array(y))
    }

    /// Training forward pass; dropout masks are sampled from `rng` and kept
    /// in the caches for the backward pass.
    pub fn forward_training(
        &self,
        inputs: &[Tensor2],
        rng: &mut ChaCha8Rng,
    ) -> Result<(Tensor2, NetworkCaches)> {
        let (y, caches) = self.run(inputs, &mut ForwardMode::Train { rng })?;
        Ok((Tensor2::from_array(y), caches))
    }

    /// Inference pass that also reports the realized shape after every layer.
    pub fn forward_traced(&self, inputs: &[Tensor2]) -> Result<(Tensor2, ShapeTrace)> {
        self.check_inputs(inputs)?;
        let mut mode = ForwardMode::Infer;
        let mut branch_shapes = Vec::new();
        let mut branch_outputs = Vec::new();
        for (chain, input) in self.branches.iter().zip(inputs) {
            let mut x = input.as_array().clone();
            let mut shapes = Vec::new();
            for layer in chain {
                let (y, _) = layer.forward(&x, &mut mode)?;
                shapes.push((y.nrows(), y.ncols()));
                x = y;
            }
            branch_shapes.push(shapes);
            branch_outputs.push(x);
        }
        let channels = branch_outputs[0].ncols();
        let total: usize = branch_outputs.iter().map(Mat::nrows).sum();
        let mut merged = Array2::zeros((total, channels));
        let mut row = 0;
        for out in &branch_outputs {
            merged
                .slice_mut(ndarray::s![row..row + out.nrows(), ..])
                .assign(out);
            row += out.nrows();
        }
        let concat_shape = (merged.nrows(), merged.ncols());
        let mut head_shapes = Vec::new();
        let mut x = merged;
        for layer in &self.head {
            let (y, _) = layer.forward(&x, &mut mode)?;
            head_shapes.push((y.nrows(), y.ncols()));
            x = y;
        }
        if self.spec.output_as_column {
            let n = x.nrows() * x.ncols();
            x = x.to_shape((n, 1)).expect("row-major reshape").to_owned();
        }
        let output_shape = (x.nrows(), x.ncols());
        Ok((
            Tensor2::from_array(x),
            ShapeTrace {
                branch_shapes,
                concat_shape,
                head_shapes,
                output_shape,
            },
        ))
    }

    /// Reverse pass over the cached forward state. Returns parameter
    /// gradients plus the gradient with respect to each branch input.
    pub fn backward(
        &self,
        caches: &NetworkCaches,
        output_grad: &Tensor2,
    ) -> Result<(NetworkGrads, Vec<Mat>)> {
        let mut grad = output_grad.as_array().clone();
        if self.spec.output_as_column {
            grad = grad
                .to_shape(caches.pre_column_shape)
                .map_err(|e| Error::Dimension(e.to_string()))?
                .to_owned();
        }

        let mut head_grads: Vec<Vec<Mat>> = Vec::with_capacity(self.head.len());
        for (layer, cache) in self.head.iter().zip(&caches.head_caches).rev() {
            let (dx, g) = layer.backward(cache, &grad);
            head_grads.push(g);
            grad = dx;
        }
        head_grads.reverse();

        let mut input_grads = Vec::with_capacity(self.branches.len());
        let mut branch_grads: Vec<Vec<Vec<Mat>>> = Vec::with_capacity(self.branches.len());
        let mut row = 0;
        for (chain, (caches_b, &steps)) in self
            .branches
            .iter()
            .zip(caches.branch_caches.iter().zip(&caches.branch_out_steps))
        {
            let mut g = grad
                .slice(ndarray::s![row..row + steps, ..])
                .to_owned();
            row += steps;
            let mut chain_grads: Vec<Vec<Mat>> = Vec::with_capacity(chain.len());
            for (layer, cache) in chain.iter().zip(caches_b).rev() {
                let (dx, lg) = layer.backward(cache, &g);
                chain_grads.push(lg);
                g = dx;
            }
            chain_grads.reverse();
            branch_grads.push(chain_grads);
            input_grads.push(g);
        }

        let mut per_layer = Vec::with_capacity(self.layer_slot_count());
        for chain in branch_grads {
            per_layer.extend(chain);
        }
        per_layer.extend(head_grads);
        Ok((NetworkGrads { per_layer }, input_grads))
    }
}

fn build_layer(spec: &LayerSpec, in_channels: usize) -> Layer {
    match spec {
        LayerSpec::Conv1d {
            filters,
            kernel_size,
            padding,
        } => Layer::Conv1d(Conv1d {
            kernel: Array2::zeros((kernel_size * in_channels, *filters)),
            bias: Array2::zeros((1, *filters)),
            kernel_size: *kernel_size,
            in_channels,
            filters: *filters,
            padding: *padding,
        }),
        LayerSpec::AvgPool1d { pool } => Layer::AvgPool1d(AvgPool1d { pool: *pool }),
        LayerSpec::Relu => Layer::Relu,
        LayerSpec::Lstm {
            units,
            return_sequences,
        } => Layer::Lstm(zero_lstm(in_channels, *units, *return_sequences)),
        LayerSpec::BiLstm {
            units_per_direction,
            return_sequences,
        } => Layer::BiLstm(BiLstm {
            forward_cell: zero_lstm(in_channels, *units_per_direction, *return_sequences),
            backward_cell: zero_lstm(in_channels, *units_per_direction, *return_sequences),
        }),
        LayerSpec::Dense { units } => Layer::Dense(Dense {
            weight: Array2::zeros((in_channels, *units)),
            bias: Array2::zeros((1, *units)),
        }),
        LayerSpec::Dropout { rate } => Layer::Dropout(Dropout { rate: *rate }),
        LayerSpec::Flatten => Layer::Flatten,
    }
}

fn zero_lstm(in_channels: usize, units: usize, return_sequences: bool) -> Lstm {
    Lstm {
        kernel: Array2::zeros((in_channels, 4 * units)),
        recurrent: Array2::zeros((units, 4 * units)),
        bias: Array2::zeros((1, 4 * units)),
        units,
        return_sequences,
    }
}

fn glorot_fill(array: &mut Mat, rng: &mut ChaCha8Rng) {
    let limit = (6.0 / (array.nrows() + array.ncols()) as f64).sqrt();
    for v in array.iter_mut() {
        *v = rng.random_range(-limit..limit);
    }
}

fn uniform_fill(array: &mut Mat, limit: f64, rng: &mut ChaCha8Rng) {
    for v in array.iter_mut() {
        *v = rng.random_range(-limit..limit);
    }
}

fn init_lstm(cell: &mut Lstm, rng: &mut ChaCha8Rng) {
    glorot_fill(&mut cell.kernel, rng);
    uniform_fill(&mut cell.recurrent, 0.05, rng);
    cell.bias.fill(0.0);
    let u = cell.units;
    // Forget-gate bias starts at +1.
    cell.bias
        .slice_mut(ndarray::s![0, u..2 * u])
        .fill(1.0);
}

fn init_layer(layer: &mut Layer, rng: &mut ChaCha8Rng) {
    match layer {
        Layer::Conv1d(l) => {
            glorot_fill(&mut l.kernel, rng);
            l.bias.fill(0.0);
        }
        Layer::Lstm(l) => init_lstm(l, rng),
        Layer::BiLstm(l) => {
            init_lstm(&mut l.forward_cell, rng);
            init_lstm(&mut l.backward_cell, rng);
        }
        Layer::Dense(l) => {
            glorot_fill(&mut l.weight, rng);
            l.bias.fill(0.0);
        }
        _ => {}
    }
}
