//! Per-view feedforward decoders mapping the shared latent code to a view.
//!
//! A network is a chain of affine layers `h ↦ act(h·W + 1·bᵀ)`, optionally
//! followed by single-group normalization on hidden layers. Hidden layers use
//! ELU; the output layer is linear so that standardized values below −1 stay
//! reachable. Gradients are computed by hand in reverse mode.

mod checkpoint;
mod group_norm;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

pub use checkpoint::{LayerRecord, NetworkRecord};
pub use group_norm::{group_norm_backward, group_norm_forward, GroupNormCache, GROUP_NORM_EPS};

use crate::error::{Error, Result};
use crate::ndcore::{adam_step, elu, elu_grad, AdamState, Matrix, Rng};

/// ELU slope parameter used throughout.
pub const ELU_ALPHA: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Elu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Elu => elu(x, ELU_ALPHA),
            Activation::Identity => x,
        }
    }

    #[inline]
    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Elu => elu_grad(x, ELU_ALPHA),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_width: usize,
    pub out_width: usize,
    pub activation: Activation,
    pub group_norm: bool,
}

impl LayerSpec {
    /// `latent → hidden[0] → … → output`, ELU on hidden layers and a linear
    /// output layer.
    pub fn chain(latent: usize, hidden: &[usize], output: usize, group_norm: bool) -> Vec<LayerSpec> {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(latent);
        widths.extend_from_slice(hidden);
        widths.push(output);
        let last = widths.len() - 2;
        widths
            .windows(2)
            .enumerate()
            .map(|(l, w)| LayerSpec {
                in_width: w[0],
                out_width: w[1],
                activation: if l == last { Activation::Identity } else { Activation::Elu },
                group_norm: group_norm && l != last,
            })
            .collect()
    }
}

fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument("network needs at least one layer".into()));
    }
    for (l, s) in specs.iter().enumerate() {
        if s.in_width == 0 || s.out_width == 0 {
            return Err(Error::InvalidArgument(format!("layer {l} has a zero width")));
        }
        if l + 1 < specs.len() && s.out_width != specs[l + 1].in_width {
            return Err(Error::InvalidArgument(format!(
                "layer {l} outputs {} units but layer {} expects {}",
                s.out_width,
                l + 1,
                specs[l + 1].in_width
            )));
        }
        if s.group_norm && l + 1 == specs.len() {
            return Err(Error::InvalidArgument("group norm is only allowed on hidden layers".into()));
        }
        if s.group_norm && s.out_width < 2 {
            return Err(Error::InvalidArgument(format!("layer {l}: group norm needs width >= 2")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormParams {
    pub gamma: Matrix,
    pub beta: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    spec: LayerSpec,
    weight: Matrix,
    bias: Matrix,
    norm: Option<NormParams>,
}

impl Layer {
    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    /// `1 × out_width`
    pub fn bias(&self) -> &Matrix {
        &self.bias
    }

    pub fn norm(&self) -> Option<&NormParams> {
        self.norm.as_ref()
    }
}

static NEXT_REVISION: AtomicU64 = AtomicU64::new(1);

fn fresh_revision() -> u64 {
    NEXT_REVISION.fetch_add(1, Ordering::Relaxed)
}

/// Decoder for one view.
///
/// Each parameter mutation stamps a process-unique revision; forward caches
/// remember the revision they were built from so that a cache cannot be
/// replayed against different parameters.
#[derive(Clone, Debug)]
pub struct DecoderNetwork {
    view_id: usize,
    layers: Vec<Layer>,
    revision: u64,
}

impl PartialEq for DecoderNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.view_id == other.view_id && self.layers == other.layers
    }
}

/// Values kept from [`DecoderNetwork::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    revision: u64,
    input_shape: (usize, usize),
    layers: Vec<LayerCache>,
}

#[derive(Clone, Debug)]
struct LayerCache {
    input: Matrix,
    pre: Matrix,
    norm: Option<GroupNormCache>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads {
    pub weight: Matrix,
    pub bias: Matrix,
    pub norm: Option<NormParams>,
}

/// Gradients for every parameter of one network plus the latent code.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientBundle {
    pub layers: Vec<LayerGrads>,
    pub latent: Matrix,
}

impl GradientBundle {
    /// Same order as [`DecoderNetwork::parameters`].
    pub fn parameters(&self) -> Vec<&Matrix> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(&l.weight);
            out.push(&l.bias);
            if let Some(n) = &l.norm {
                out.push(&n.gamma);
                out.push(&n.beta);
            }
        }
        out
    }
}

impl DecoderNetwork {
    /// Draws every weight and bias of a layer from `U(−1/√in, 1/√in)`;
    /// normalization scales start at 1 and shifts at 0.
    pub fn init(view_id: usize, specs: &[LayerSpec], rng: &mut Rng) -> Result<Self> {
        validate_specs(specs)?;
        let layers = specs
            .iter()
            .map(|&spec| {
                let bound = 1.0 / (spec.in_width as f64).sqrt();
                let weight = rng.uniform_matrix(spec.in_width, spec.out_width, -bound, bound);
                let bias = rng.uniform_matrix(1, spec.out_width, -bound, bound);
                let norm = spec.group_norm.then(|| NormParams {
                    gamma: Matrix::filled(1, spec.out_width, 1.0),
                    beta: Matrix::zeros(1, spec.out_width),
                });
                Layer { spec, weight, bias, norm }
            })
            .collect();
        Ok(Self { view_id, layers, revision: fresh_revision() })
    }

    /// Assembles a network from explicit parameters.
    pub fn from_parts(view_id: usize, parts: Vec<(LayerSpec, Matrix, Matrix, Option<NormParams>)>) -> Result<Self> {
        let specs: Vec<_> = parts.iter().map(|p| p.0).collect();
        validate_specs(&specs)?;
        let mut layers = Vec::with_capacity(parts.len());
        for (spec, weight, bias, norm) in parts {
            if weight.shape() != (spec.in_width, spec.out_width) || bias.shape() != (1, spec.out_width) {
                return Err(Error::InvalidArgument("parameter shapes do not match layer spec".into()));
            }
            match (&norm, spec.group_norm) {
                (Some(n), true) if n.gamma.shape() == (1, spec.out_width) && n.beta.shape() == (1, spec.out_width) => {}
                (None, false) => {}
                _ => return Err(Error::InvalidArgument("normalization parameters do not match layer spec".into())),
            }
            layers.push(Layer { spec, weight, bias, norm });
        }
        Ok(Self { view_id, layers, revision: fresh_revision() })
    }

    pub fn view_id(&self) -> usize {
        self.view_id
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].spec.in_width
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].spec.out_width
    }

    pub fn parameters(&self) -> Vec<&Matrix> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(&l.weight);
            out.push(&l.bias);
            if let Some(n) = &l.norm {
                out.push(&n.gamma);
                out.push(&n.beta);
            }
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Matrix> {
        self.revision = fresh_revision();
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
            if let Some(n) = &mut l.norm {
                out.push(&mut n.gamma);
                out.push(&mut n.beta);
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.as_slice().len()).sum()
    }

    fn check_input(&self, z: &Matrix) -> Result<()> {
        if z.cols() != self.input_width() {
            return Err(Error::ShapeMismatch { op: "decoder forward", left: z.shape(), right: (z.rows(), self.input_width()) });
        }
        Ok(())
    }

    /// Network output only.
    pub fn predict(&self, z: &Matrix) -> Result<Matrix> {
        self.check_input(z)?;
        let mut h = z.clone();
        for layer in &self.layers {
            let mut a = h.matmul(&layer.weight)?;
            a.add_row_broadcast(&layer.bias)?;
            let act = layer.spec.activation;
            h = a.map(|x| act.apply(x));
            if let Some(n) = &layer.norm {
                h = group_norm_forward(&h, &n.gamma, &n.beta)?.0;
            }
        }
        Ok(h)
    }

    /// Output `n × out_width` plus the cache needed by [`Self::backward`].
    pub fn forward(&self, z: &Matrix) -> Result<(Matrix, ForwardCache)> {
        self.check_input(z)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = z.clone();
        for layer in &self.layers {
            let mut pre = h.matmul(&layer.weight)?;
            pre.add_row_broadcast(&layer.bias)?;
            let act = layer.spec.activation;
            let mut out = pre.map(|x| act.apply(x));
            let mut norm_cache = None;
            if let Some(n) = &layer.norm {
                let (y, c) = group_norm_forward(&out, &n.gamma, &n.beta)?;
                out = y;
                norm_cache = Some(c);
            }
            caches.push(LayerCache { input: h, pre, norm: norm_cache });
            h = out;
        }
        Ok((h, ForwardCache { revision: self.revision, input_shape: z.shape(), layers: caches }))
    }

    fn check_cache(&self, z: &Matrix, upstream: &Matrix, cache: &ForwardCache) -> Result<()> {
        if cache.revision != self.revision || cache.layers.len() != self.layers.len() || cache.input_shape != z.shape() {
            return Err(Error::StaleCache);
        }
        if cache.layers[0].input != *z {
            return Err(Error::StaleCache);
        }
        if upstream.shape() != (z.rows(), self.output_width()) {
            return Err(Error::ShapeMismatch { op: "decoder backward", left: upstream.shape(), right: (z.rows(), self.output_width()) });
        }
        Ok(())
    }

    /// Gradient w.r.t. a layer's pre-activation from the gradient w.r.t. its output.
    fn through_layer(&self, l: usize, upstream: Matrix, cache: &LayerCache) -> Result<(Matrix, Option<NormParams>)> {
        let layer = &self.layers[l];
        let (d_act, norm_grads) = match (&layer.norm, &cache.norm) {
            (Some(n), Some(c)) => {
                let (d_in, dg, db) = group_norm_backward(&upstream, c, &n.gamma)?;
                (d_in, Some(NormParams { gamma: dg, beta: db }))
            }
            (None, None) => (upstream, None),
            _ => return Err(Error::StaleCache),
        };
        let act = layer.spec.activation;
        let d_pre = match act {
            Activation::Identity => d_act,
            Activation::Elu => d_act.zip_map(&cache.pre, |d, x| d * act.derivative(x))?,
        };
        Ok((d_pre, norm_grads))
    }

    /// Reverse-mode gradients of a scalar loss given `upstream = ∂loss/∂output`.
    pub fn backward(&self, z: &Matrix, upstream: &Matrix, cache: &ForwardCache) -> Result<GradientBundle> {
        self.check_cache(z, upstream, cache)?;
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut d_out = upstream.clone();
        for l in (0..self.layers.len()).rev() {
            let c = &cache.layers[l];
            let (d_pre, norm) = self.through_layer(l, d_out, c)?;
            let weight = c.input.t_matmul(&d_pre)?;
            let bias = d_pre.column_sums();
            d_out = d_pre.matmul_t(&self.layers[l].weight)?;
            grads.push(LayerGrads { weight, bias, norm });
        }
        grads.reverse();
        Ok(GradientBundle { layers: grads, latent: d_out })
    }

    /// Gradient w.r.t. the latent code only; skips all parameter gradients.
    pub fn backward_latent(&self, z: &Matrix, upstream: &Matrix, cache: &ForwardCache) -> Result<Matrix> {
        self.check_cache(z, upstream, cache)?;
        let mut d_out = upstream.clone();
        for l in (0..self.layers.len()).rev() {
            let (d_pre, _) = self.through_layer(l, d_out, &cache.layers[l])?;
            d_out = d_pre.matmul_t(&self.layers[l].weight)?;
        }
        Ok(d_out)
    }
}

/// ADAM moments for every parameter tensor of one network.
#[derive(Clone, Debug)]
pub struct NetworkAdam {
    states: Vec<AdamState>,
}

impl NetworkAdam {
    pub fn new(net: &DecoderNetwork) -> Self {
        Self { states: net.parameters().into_iter().map(AdamState::for_param).collect() }
    }

    pub fn step(&mut self, net: &mut DecoderNetwork, grads: &GradientBundle, lr: f64) -> Result<()> {
        let g = grads.parameters();
        let params = net.parameters_mut();
        if g.len() != params.len() || params.len() != self.states.len() {
            return Err(Error::InvalidArgument("gradient bundle does not match network".into()));
        }
        for ((p, g), s) in params.into_iter().zip(g).zip(&mut self.states) {
            adam_step(p, g, s, lr)?;
        }
        Ok(())
    }
}
