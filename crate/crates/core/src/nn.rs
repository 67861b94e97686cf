//! Small policy/value network with hand-written backpropagation.
//!
//! Two descriptor encoders and a two-layer CNN over the occupancy map are
//! concatenated into a shared embedding that feeds a diagonal Gaussian actor
//! head and a scalar critic head.

use std::f64::consts::{PI, SQRT_2};
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Observation, ACTION_DIM};
use crate::scene::DESCRIPTOR_LEN;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
pub const LOG_STD_BIAS_INIT: f64 = -0.5;

const CHECKPOINT_MAGIC: &[u8; 8] = b"IRLCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch for {what}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        what: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("bad checkpoint header: {0}")]
    Header(String),
    #[error("checkpoint tensor `{name}`: {reason}")]
    BadTensor { name: String, reason: String },
    #[error("checkpoint has {0} trailing bytes")]
    TrailingBytes(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn bad(name: &str, reason: impl Into<String>) -> NnError {
    NnError::BadTensor {
        name: name.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, NnError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(NnError::ShapeMismatch {
                what: "tensor data".into(),
                expected: shape.to_vec(),
                got: vec![data.len()],
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
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

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / SQRT_2))
}

pub fn gelu(x: f64) -> f64 {
    x * normal_cdf(x)
}

pub fn gelu_grad(x: f64) -> f64 {
    normal_cdf(x) + x * (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// GELU values and slopes sharing one CDF evaluation per element.
fn activate(z: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let inv_sqrt_2pi = 1.0 / (2.0 * PI).sqrt();
    let mut slope = z;
    let mut act = Vec::with_capacity(slope.len());
    for x in slope.iter_mut() {
        let cdf = normal_cdf(*x);
        act.push(*x * cdf);
        *x = cdf + *x * (-0.5 * *x * *x).exp() * inv_sqrt_2pi;
    }
    (act, slope)
}

pub fn gelu_tensor(t: &Tensor) -> Tensor {
    Tensor {
        shape: t.shape.clone(),
        data: t.data.iter().map(|&x| gelu(x)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub descriptor_len: usize,
    pub encoder_widths: Vec<usize>,
    pub grid: usize,
    pub conv1_channels: usize,
    pub conv1_kernel: usize,
    pub conv1_stride: usize,
    pub conv2_channels: usize,
    pub conv2_kernel: usize,
    pub conv2_stride: usize,
    pub cnn_width: usize,
    pub action_dim: usize,
    /// When false the CNN branch is replaced by zeros.
    pub spatial_encoding: bool,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            descriptor_len: DESCRIPTOR_LEN,
            encoder_widths: vec![64, 64],
            grid: crate::env::OBS_GRID,
            conv1_channels: 8,
            conv1_kernel: 5,
            conv1_stride: 2,
            conv2_channels: 16,
            conv2_kernel: 3,
            conv2_stride: 2,
            cnn_width: 128,
            action_dim: ACTION_DIM,
            spatial_encoding: true,
        }
    }
}

impl ArchConfig {
    pub fn conv1_out(&self) -> usize {
        (self.grid - self.conv1_kernel) / self.conv1_stride + 1
    }

    pub fn conv2_out(&self) -> usize {
        (self.conv1_out() - self.conv2_kernel) / self.conv2_stride + 1
    }

    pub fn flat_len(&self) -> usize {
        self.conv2_channels * self.conv2_out() * self.conv2_out()
    }

    pub fn encoder_out(&self) -> usize {
        *self.encoder_widths.last().unwrap_or(&self.descriptor_len)
    }

    pub fn embed_len(&self) -> usize {
        2 * self.encoder_out() + self.cnn_width
    }

    fn conv_shapes(&self) -> (ConvShape, ConvShape) {
        let n1 = self.conv1_out();
        (
            ConvShape {
                in_c: 1,
                n: self.grid,
                k: self.conv1_kernel,
                s: self.conv1_stride,
                n_out: n1,
            },
            ConvShape {
                in_c: self.conv1_channels,
                n: n1,
                k: self.conv2_kernel,
                s: self.conv2_stride,
                n_out: self.conv2_out(),
            },
        )
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let fail = |m: &str| Err(NnError::InvalidArch(m.to_string()));
        if self.action_dim != ACTION_DIM {
            return fail("action_dim must be 3");
        }
        if self.descriptor_len != DESCRIPTOR_LEN {
            return fail("descriptor_len must be 12");
        }
        if self.encoder_widths.is_empty() || self.encoder_widths.contains(&0) {
            return fail("encoder widths must be non-empty and positive");
        }
        if self.conv1_stride == 0 || self.conv2_stride == 0 {
            return fail("strides must be positive");
        }
        if self.conv1_kernel == 0 || self.conv1_kernel > self.grid {
            return fail("conv1 kernel does not fit the grid");
        }
        if self.conv2_kernel == 0 || self.conv2_kernel > self.conv1_out() {
            return fail("conv2 kernel does not fit the conv1 output");
        }
        if self.conv1_channels == 0 || self.conv2_channels == 0 || self.cnn_width == 0 {
            return fail("layer widths must be positive");
        }
        Ok(())
    }
}

/// Weight and bias of one dense or convolutional layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Tensor,
    pub b: Tensor,
}

impl Layer {
    fn zeros(w_shape: &[usize], out: usize) -> Self {
        Self {
            w: Tensor::zeros(w_shape),
            b: Tensor::zeros(&[out]),
        }
    }

    fn xavier<R: Rng + ?Sized>(w_shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let mut layer = Self::zeros(w_shape, w_shape[0]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for x in layer.w.data_mut() {
            *x = rng.gen_range(-limit..=limit);
        }
        layer
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub arch: ArchConfig,
    pub enc_current: Vec<Layer>,
    pub enc_next: Vec<Layer>,
    pub conv1: Layer,
    pub conv2: Layer,
    pub cnn_dense: Layer,
    pub mu: Layer,
    pub log_std: Layer,
    pub value: Layer,
}

/// Which optimizer group a tensor belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    Actor,
    Critic,
}

impl PolicyParams {
    pub fn zeros(arch: &ArchConfig) -> Result<Self, NnError> {
        arch.validate()?;
        let encoder = || {
            let mut fan_in = arch.descriptor_len;
            arch.encoder_widths
                .iter()
                .map(|&w| {
                    let l = Layer::zeros(&[w, fan_in], w);
                    fan_in = w;
                    l
                })
                .collect::<Vec<_>>()
        };
        let (c1, k1, c2, k2) = (arch.conv1_channels, arch.conv1_kernel, arch.conv2_channels, arch.conv2_kernel);
        let h = arch.embed_len();
        Ok(Self {
            arch: arch.clone(),
            enc_current: encoder(),
            enc_next: encoder(),
            conv1: Layer::zeros(&[c1, 1, k1, k1], c1),
            conv2: Layer::zeros(&[c2, c1, k2, k2], c2),
            cnn_dense: Layer::zeros(&[arch.cnn_width, arch.flat_len()], arch.cnn_width),
            mu: Layer::zeros(&[ACTION_DIM, h], ACTION_DIM),
            log_std: Layer::zeros(&[ACTION_DIM, h], ACTION_DIM),
            value: Layer::zeros(&[1, h], 1),
        })
    }

    /// Xavier-uniform weights, zero biases, log-std bias at its initial offset.
    pub fn init<R: Rng + ?Sized>(arch: &ArchConfig, rng: &mut R) -> Result<Self, NnError> {
        let mut p = Self::zeros(arch)?;
        for (_, t) in p.named_mut() {
            if t.shape.len() == 1 {
                continue;
            }
            let (fan_in, fan_out) = if t.shape.len() == 4 {
                let rf = t.shape[2] * t.shape[3];
                (t.shape[1] * rf, t.shape[0] * rf)
            } else {
                (t.shape[1], t.shape[0])
            };
            *t = Layer::xavier(&t.shape, fan_in, fan_out, rng).w;
        }
        p.log_std.b.fill(LOG_STD_BIAS_INIT);
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, t) in z.named_mut() {
            t.fill(0.0);
        }
        z
    }

    fn layers(&self) -> Vec<(String, &Layer)> {
        let mut out = Vec::new();
        for (i, l) in self.enc_current.iter().enumerate() {
            out.push((format!("enc_current.{i}"), l));
        }
        for (i, l) in self.enc_next.iter().enumerate() {
            out.push((format!("enc_next.{i}"), l));
        }
        out.push(("conv1".into(), &self.conv1));
        out.push(("conv2".into(), &self.conv2));
        out.push(("cnn_dense".into(), &self.cnn_dense));
        out.push(("mu".into(), &self.mu));
        out.push(("log_std".into(), &self.log_std));
        out.push(("value".into(), &self.value));
        out
    }

    /// Every tensor with its stable name, in checkpoint order.
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        self.layers()
            .into_iter()
            .flat_map(|(n, l)| [(format!("{n}.w"), &l.w), (format!("{n}.b"), &l.b)])
            .collect()
    }

    pub fn named_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        fn push<'a>(out: &mut Vec<(String, &'a mut Tensor)>, n: String, l: &'a mut Layer) {
            out.push((format!("{n}.w"), &mut l.w));
            out.push((format!("{n}.b"), &mut l.b));
        }
        let mut out = Vec::new();
        for (i, l) in self.enc_current.iter_mut().enumerate() {
            push(&mut out, format!("enc_current.{i}"), l);
        }
        for (i, l) in self.enc_next.iter_mut().enumerate() {
            push(&mut out, format!("enc_next.{i}"), l);
        }
        push(&mut out, "conv1".into(), &mut self.conv1);
        push(&mut out, "conv2".into(), &mut self.conv2);
        push(&mut out, "cnn_dense".into(), &mut self.cnn_dense);
        push(&mut out, "mu".into(), &mut self.mu);
        push(&mut out, "log_std".into(), &mut self.log_std);
        push(&mut out, "value".into(), &mut self.value);
        out
    }

    pub fn group_of(name: &str) -> ParamGroup {
        if name.starts_with("value.") {
            ParamGroup::Critic
        } else {
            ParamGroup::Actor
        }
    }

    pub fn num_params(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.named().iter().all(|(_, t)| t.is_finite())
    }

    pub fn scale(&mut self, s: f64) {
        for (_, t) in self.named_mut() {
            t.data_mut().iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn sq_norm(&self) -> f64 {
        self.named()
            .iter()
            .flat_map(|(_, t)| t.data().iter())
            .map(|x| x * x)
            .sum()
    }

    /// Forward pass on an environment observation.
    pub fn forward(&self, obs: &Observation) -> Result<(PolicyOutput, ForwardCache), NnError> {
        let grid: Vec<f64> = obs.occupancy.iter().map(|&c| f64::from(c)).collect();
        self.forward_parts(&obs.current, &obs.next, &grid)
    }

    pub fn forward_parts(
        &self,
        current: &[f64],
        next: &[f64],
        grid: &[f64],
    ) -> Result<(PolicyOutput, ForwardCache), NnError> {
        let a = &self.arch;
        for (what, got, want) in [
            ("current descriptor", current.len(), a.descriptor_len),
            ("next descriptor", next.len(), a.descriptor_len),
            ("occupancy grid", grid.len(), a.grid * a.grid),
        ] {
            if got != want {
                return Err(NnError::ShapeMismatch {
                    what: what.into(),
                    expected: vec![want],
                    got: vec![got],
                });
            }
        }
        let enc_current = encode(&self.enc_current, current);
        let enc_next = encode(&self.enc_next, next);
        let cnn = a.spatial_encoding.then(|| self.cnn_forward(grid));

        let mut h = Vec::with_capacity(a.embed_len());
        h.extend_from_slice(enc_current.output());
        h.extend_from_slice(enc_next.output());
        match &cnn {
            Some(c) => h.extend_from_slice(&c.a3),
            None => h.extend(std::iter::repeat(0.0).take(a.cnn_width)),
        }

        let mut mu = [0.0; ACTION_DIM];
        let mut log_std = [0.0; ACTION_DIM];
        dense_forward_into(&self.mu, &h, &mut mu);
        dense_forward_into(&self.log_std, &h, &mut log_std);
        let mut v = [0.0];
        dense_forward_into(&self.value, &h, &mut v);
        let out = PolicyOutput {
            mu,
            log_std,
            value: v[0],
        };
        Ok((
            out,
            ForwardCache {
                enc_current,
                enc_next,
                cnn,
                h,
            },
        ))
    }

    fn cnn_forward(&self, grid: &[f64]) -> CnnCache {
        let a = &self.arch;
        let (s1, s2) = a.conv_shapes();
        let p1 = im2col(grid, s1);
        let (a1, d1) = activate(conv_forward(&self.conv1, &p1, s1));
        let p2 = im2col(&a1, s2);
        let (a2, d2) = activate(conv_forward(&self.conv2, &p2, s2));
        let mut z3 = vec![0.0; a.cnn_width];
        dense_forward_into(&self.cnn_dense, &a2, &mut z3);
        let (a3, d3) = activate(z3);
        CnnCache {
            p1,
            d1,
            p2,
            d2,
            a2,
            a3,
            d3,
        }
    }

    /// Accumulates parameter gradients of `dμ·μ + dlogσ·logσ + dV·V` into `acc`.
    ///
    /// With `value_into_trunk == false` the critic gradient reaches only the
    /// value head; the shared layers see the actor gradient alone.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        grad: &OutputGrad,
        value_into_trunk: bool,
        acc: &mut PolicyParams,
    ) {
        let a = &self.arch;
        let h = &cache.h;
        let mut dh = vec![0.0; h.len()];
        dense_backward(&self.mu, h, &grad.mu, &mut acc.mu, Some(&mut dh));
        dense_backward(&self.log_std, h, &grad.log_std, &mut acc.log_std, Some(&mut dh));
        let dv = [grad.value];
        dense_backward(
            &self.value,
            h,
            &dv,
            &mut acc.value,
            value_into_trunk.then_some(&mut dh[..]),
        );

        let e = a.encoder_out();
        encode_backward(&self.enc_current, &cache.enc_current, &dh[..e], &mut acc.enc_current);
        encode_backward(&self.enc_next, &cache.enc_next, &dh[e..2 * e], &mut acc.enc_next);

        let Some(cnn) = &cache.cnn else { return };
        let dz3: Vec<f64> = dh[2 * e..]
            .iter()
            .zip(&cnn.d3)
            .map(|(g, d)| g * d)
            .collect();
        let mut da2 = vec![0.0; cnn.a2.len()];
        dense_backward(&self.cnn_dense, &cnn.a2, &dz3, &mut acc.cnn_dense, Some(&mut da2));
        let dz2: Vec<f64> = da2.iter().zip(&cnn.d2).map(|(g, d)| g * d).collect();
        let (s1, s2) = a.conv_shapes();
        let mut da1 = vec![0.0; cnn.d1.len()];
        conv_backward(&self.conv2, &cnn.p2, &dz2, s2, &mut acc.conv2, Some(&mut da1));
        let dz1: Vec<f64> = da1.iter().zip(&cnn.d1).map(|(g, d)| g * d).collect();
        conv_backward(&self.conv1, &cnn.p1, &dz1, s1, &mut acc.conv1, None);
    }

    /// Fresh gradient of a scalar objective with the given output sensitivities.
    pub fn backward(&self, cache: &ForwardCache, grad: &OutputGrad) -> PolicyParams {
        let mut acc = self.zeros_like();
        self.backward_into(cache, grad, true, &mut acc);
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyOutput {
    pub mu: [f64; ACTION_DIM],
    /// Unclamped; clamp with [`clamp_log_std`] before use.
    pub log_std: [f64; ACTION_DIM],
    pub value: f64,
}

/// Upstream gradient of a scalar objective with respect to the network outputs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OutputGrad {
    pub mu: [f64; ACTION_DIM],
    pub log_std: [f64; ACTION_DIM],
    pub value: f64,
}

#[derive(Debug, Clone)]
struct EncoderCache {
    /// Input to each layer followed by the final activation.
    acts: Vec<Vec<f64>>,
    /// GELU slope at each layer's pre-activation.
    slopes: Vec<Vec<f64>>,
}

impl EncoderCache {
    fn output(&self) -> &[f64] {
        self.acts.last().expect("non-empty")
    }
}

#[derive(Debug, Clone)]
struct CnnCache {
    p1: Vec<f64>,
    d1: Vec<f64>,
    p2: Vec<f64>,
    d2: Vec<f64>,
    a2: Vec<f64>,
    a3: Vec<f64>,
    d3: Vec<f64>,
}

/// Intermediates kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    enc_current: EncoderCache,
    enc_next: EncoderCache,
    cnn: Option<CnnCache>,
    h: Vec<f64>,
}

impl ForwardCache {
    pub fn embedding(&self) -> &[f64] {
        &self.h
    }
}

fn encode(layers: &[Layer], input: &[f64]) -> EncoderCache {
    let mut acts = vec![input.to_vec()];
    let mut slopes = Vec::with_capacity(layers.len());
    for l in layers {
        let mut z = vec![0.0; l.b.len()];
        dense_forward_into(l, acts.last().unwrap(), &mut z);
        let (a, d) = activate(z);
        acts.push(a);
        slopes.push(d);
    }
    EncoderCache { acts, slopes }
}

fn encode_backward(layers: &[Layer], cache: &EncoderCache, d_out: &[f64], acc: &mut [Layer]) {
    let mut g = d_out.to_vec();
    for i in (0..layers.len()).rev() {
        let dz: Vec<f64> = g.iter().zip(&cache.slopes[i]).map(|(g, d)| g * d).collect();
        let mut dx = vec![0.0; cache.acts[i].len()];
        let want_dx = i > 0;
        dense_backward(&layers[i], &cache.acts[i], &dz, &mut acc[i], want_dx.then_some(&mut dx[..]));
        g = dx;
    }
}

fn dense_forward_into(l: &Layer, x: &[f64], out: &mut [f64]) {
    let n_in = x.len();
    for (o, (z, row)) in out.iter_mut().zip(l.w.data.chunks_exact(n_in)).enumerate() {
        *z = l.b.data[o] + dot(row, x);
    }
}

fn dense_backward(l: &Layer, x: &[f64], dz: &[f64], acc: &mut Layer, mut dx: Option<&mut [f64]>) {
    let n_in = x.len();
    for (o, &g) in dz.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        acc.b.data[o] += g;
        axpy(&mut acc.w.data[o * n_in..(o + 1) * n_in], g, x);
        if let Some(dx) = dx.as_deref_mut() {
            axpy(dx, g, &l.w.data[o * n_in..(o + 1) * n_in]);
        }
    }
}

/// Dot product with independent partial sums so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for j in 0..4 {
            acc[j] += x[j] * y[j];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (y, &x) in y.iter_mut().zip(x) {
        *y += alpha * x;
    }
}

/// Geometry of a valid (unpadded) strided convolution over square `in_c × n × n` input.
#[derive(Debug, Clone, Copy)]
struct ConvShape {
    in_c: usize,
    n: usize,
    k: usize,
    s: usize,
    n_out: usize,
}

impl ConvShape {
    fn patch_len(&self) -> usize {
        self.in_c * self.k * self.k
    }

    fn positions(&self) -> usize {
        self.n_out * self.n_out
    }
}

/// One row per output position holding its receptive field in `(channel, ky, kx)` order.
fn im2col(input: &[f64], cs: ConvShape) -> Vec<f64> {
    let ConvShape { in_c, n, k, s, n_out } = cs;
    let mut out = Vec::with_capacity(cs.positions() * cs.patch_len());
    for oy in 0..n_out {
        for ox in 0..n_out {
            for ic in 0..in_c {
                for ky in 0..k {
                    let base = ic * n * n + (oy * s + ky) * n + ox * s;
                    out.extend_from_slice(&input[base..base + k]);
                }
            }
        }
    }
    out
}

fn conv_forward(l: &Layer, patches: &[f64], cs: ConvShape) -> Vec<f64> {
    let pl = cs.patch_len();
    let np = cs.positions();
    let mut out = vec![0.0; l.b.len() * np];
    for (oc, (kern, dst)) in l.w.data.chunks_exact(pl).zip(out.chunks_exact_mut(np)).enumerate() {
        let bias = l.b.data[oc];
        for (z, patch) in dst.iter_mut().zip(patches.chunks_exact(pl)) {
            *z = bias + dot(kern, patch);
        }
    }
    out
}

fn conv_backward(
    l: &Layer,
    patches: &[f64],
    dz: &[f64],
    cs: ConvShape,
    acc: &mut Layer,
    dinput: Option<&mut [f64]>,
) {
    let pl = cs.patch_len();
    let np = cs.positions();
    let mut dpatches = dinput.as_ref().map(|_| vec![0.0; patches.len()]);
    for (oc, g_row) in dz.chunks_exact(np).enumerate() {
        let kern = &l.w.data[oc * pl..(oc + 1) * pl];
        let gw = &mut acc.w.data[oc * pl..(oc + 1) * pl];
        let mut gb = 0.0;
        for (p, &g) in g_row.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            gb += g;
            axpy(gw, g, &patches[p * pl..(p + 1) * pl]);
            if let Some(dp) = dpatches.as_mut() {
                axpy(&mut dp[p * pl..(p + 1) * pl], g, kern);
            }
        }
        acc.b.data[oc] += gb;
    }
    if let (Some(di), Some(dp)) = (dinput, dpatches) {
        let ConvShape { in_c, n, k, s, n_out } = cs;
        let mut rows = dp.chunks_exact(k);
        for oy in 0..n_out {
            for ox in 0..n_out {
                for ic in 0..in_c {
                    for ky in 0..k {
                        let base = ic * n * n + (oy * s + ky) * n + ox * s;
                        let src = rows.next().expect("patch rows");
                        for (d, &g) in di[base..base + k].iter_mut().zip(src) {
                            *d += g;
                        }
                    }
                }
            }
        }
    }
}

pub fn clamp_log_std(log_std: &[f64; ACTION_DIM]) -> [f64; ACTION_DIM] {
    log_std.map(|l| l.clamp(LOG_STD_MIN, LOG_STD_MAX))
}

/// Draws `μ + σ·z` and returns it with its log-density. `log_std` is clamped first.
pub fn sample_action<R: Rng + ?Sized>(
    mu: &[f64; ACTION_DIM],
    log_std: &[f64; ACTION_DIM],
    rng: &mut R,
) -> ([f64; ACTION_DIM], f64) {
    let ls = clamp_log_std(log_std);
    let mut raw = [0.0; ACTION_DIM];
    for i in 0..ACTION_DIM {
        let z: f64 = StandardNormal.sample(rng);
        raw[i] = mu[i] + ls[i].exp() * z;
    }
    let (lp, _) = logprob_and_entropy(mu, log_std, &raw);
    (raw, lp)
}

/// Diagonal Gaussian log-density of `raw` and the distribution's entropy.
pub fn logprob_and_entropy(
    mu: &[f64; ACTION_DIM],
    log_std: &[f64; ACTION_DIM],
    raw: &[f64; ACTION_DIM],
) -> (f64, f64) {
    let ls = clamp_log_std(log_std);
    let half_log_2pi = 0.5 * (2.0 * PI).ln();
    let mut lp = 0.0;
    let mut ent = 0.0;
    for i in 0..ACTION_DIM {
        let u = (raw[i] - mu[i]) / ls[i].exp();
        lp += -0.5 * u * u - ls[i] - half_log_2pi;
        ent += ls[i] + half_log_2pi + 0.5;
    }
    (lp, ent)
}

/// Partial derivatives of log-density and entropy with respect to `μ` and raw `logσ`.
///
/// Returns `(dlogp/dμ, dlogp/dlogσ, dH/dlogσ)`; components outside the clamp range have zero slope.
pub fn gaussian_grads(
    mu: &[f64; ACTION_DIM],
    log_std: &[f64; ACTION_DIM],
    raw: &[f64; ACTION_DIM],
) -> ([f64; ACTION_DIM], [f64; ACTION_DIM], [f64; ACTION_DIM]) {
    let ls = clamp_log_std(log_std);
    let mut d_mu = [0.0; ACTION_DIM];
    let mut d_ls = [0.0; ACTION_DIM];
    let mut d_ent = [0.0; ACTION_DIM];
    for i in 0..ACTION_DIM {
        let sigma = ls[i].exp();
        let u = (raw[i] - mu[i]) / sigma;
        d_mu[i] = u / sigma;
        let active = (LOG_STD_MIN..=LOG_STD_MAX).contains(&log_std[i]);
        if active {
            d_ls[i] = u * u - 1.0;
            d_ent[i] = 1.0;
        }
    }
    (d_mu, d_ls, d_ent)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &PolicyParams, lr_actor: f64, lr_critic: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params.named().iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            lr_actor,
            lr_critic,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }
}

/// One bias-corrected Adam update of a flat parameter slice at step `t ≥ 1`.
#[allow(clippy::too_many_arguments)]
pub fn adam_update(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    lr: f64,
    (beta1, beta2, eps): (f64, f64, f64),
) {
    let c1 = 1.0 - beta1.powi(t as i32);
    let c2 = 1.0 - beta2.powi(t as i32);
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Applies one Adam step with the actor rate on shared and actor tensors and the critic rate on the value head.
pub fn adam_step(params: &mut PolicyParams, grads: &PolicyParams, state: &mut AdamState) {
    state.step += 1;
    let t = state.step;
    let hyper = (state.beta1, state.beta2, state.eps);
    let grads = grads.named();
    for (i, (name, p)) in params.named_mut().into_iter().enumerate() {
        let lr = match PolicyParams::group_of(&name) {
            ParamGroup::Actor => state.lr_actor,
            ParamGroup::Critic => state.lr_critic,
        };
        adam_update(p.data_mut(), grads[i].1.data(), &mut state.m[i], &mut state.v[i], t, lr, hyper);
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    version: u32,
    arch: ArchConfig,
}

/// Serializes parameters: magic, version, JSON header, then named little-endian tensors.
pub fn checkpoint_bytes(params: &PolicyParams) -> Vec<u8> {
    let header = serde_json::to_vec(&CheckpointHeader {
        version: CHECKPOINT_VERSION,
        arch: params.arch.clone(),
    })
    .expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    let named = params.named();
    out.extend_from_slice(&(named.len() as u32).to_le_bytes());
    for (name, t) in named {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &x in &t.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.buf.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}

pub fn params_from_checkpoint(bytes: &[u8]) -> Result<PolicyParams, NnError> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    if cur.take(8) != Some(&CHECKPOINT_MAGIC[..]) {
        return Err(NnError::BadMagic);
    }
    let version = cur.u32().ok_or(NnError::BadMagic)?;
    if version != CHECKPOINT_VERSION {
        return Err(NnError::UnsupportedVersion(version));
    }
    let hlen = cur.u32().ok_or_else(|| NnError::Header("truncated".into()))? as usize;
    let hbytes = cur.take(hlen).ok_or_else(|| NnError::Header("truncated".into()))?;
    let header: CheckpointHeader =
        serde_json::from_slice(hbytes).map_err(|e| NnError::Header(e.to_string()))?;
    if header.version != version {
        return Err(NnError::Header("version field disagrees with file version".into()));
    }
    let mut params = PolicyParams::zeros(&header.arch)?;
    let count = cur.u32().ok_or_else(|| NnError::Header("missing tensor count".into()))? as usize;
    let mut slots = params.named_mut();
    if count != slots.len() {
        return Err(NnError::Header(format!(
            "expected {} tensors, found {count}",
            slots.len()
        )));
    }
    for (expected, t) in slots.iter_mut() {
        let name_len = cur.u32().ok_or_else(|| bad(expected, "truncated before name"))? as usize;
        let name = cur
            .take(name_len)
            .and_then(|b| std::str::from_utf8(b).ok())
            .ok_or_else(|| bad(expected, "unreadable name"))?;
        if name != expected.as_str() {
            return Err(bad(expected, format!("found `{name}` in its place")));
        }
        let ndim = cur.u32().ok_or_else(|| bad(name, "truncated shape"))? as usize;
        let mut shape = Vec::with_capacity(ndim.min(8));
        for _ in 0..ndim {
            shape.push(cur.u64().ok_or_else(|| bad(name, "truncated shape"))? as usize);
        }
        if shape != t.shape {
            return Err(bad(name, format!("shape {shape:?}, expected {:?}", t.shape)));
        }
        for x in t.data_mut() {
            let v = f64::from_le_bytes(
                cur.take(8)
                    .ok_or_else(|| bad(name, "truncated payload"))?
                    .try_into()
                    .unwrap(),
            );
            if !v.is_finite() {
                return Err(bad(name, "non-finite value"));
            }
            *x = v;
        }
    }
    drop(slots);
    let rest = bytes.len() - cur.pos;
    if rest != 0 {
        return Err(NnError::TrailingBytes(rest));
    }
    Ok(params)
}

pub fn save_checkpoint(params: &PolicyParams, path: impl AsRef<Path>) -> Result<(), NnError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&checkpoint_bytes(params))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<PolicyParams, NnError> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    params_from_checkpoint(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_arch() -> ArchConfig {
        ArchConfig {
            encoder_widths: vec![5, 4],
            grid: 9,
            conv1_channels: 2,
            conv1_kernel: 3,
            conv1_stride: 2,
            conv2_channels: 3,
            conv2_kernel: 2,
            conv2_stride: 1,
            cnn_width: 6,
            ..ArchConfig::default()
        }
    }

    #[test]
    fn gelu_values() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(30.0) - 30.0).abs() < 1e-12);
        // 0.5·(1 + erf(1/√2)) with erf from its Maclaurin series.
        let z = 1.0 / SQRT_2;
        let mut term = z;
        let mut sum = 0.0;
        for n in 0..60 {
            sum += term / (2 * n + 1) as f64;
            term *= -z * z / (n + 1) as f64;
        }
        let phi = 0.5 * (1.0 + 2.0 / PI.sqrt() * sum);
        assert!((gelu(1.0) - phi).abs() < 1e-14);
        assert!((gelu(1.0) - 0.841_344_7).abs() < 1e-7);
    }

    #[test]
    fn default_shapes() {
        let a = ArchConfig::default();
        assert_eq!((a.conv1_out(), a.conv2_out(), a.flat_len(), a.embed_len()), (30, 14, 3136, 256));
        let p = PolicyParams::init(&a, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(p.log_std.b.data().iter().all(|&b| b == LOG_STD_BIAS_INIT));
        assert!(p.mu.b.data().iter().all(|&b| b == 0.0));
        let lim = (6.0f64 / (256.0 + 3.0)).sqrt();
        assert!(p.mu.w.data().iter().all(|w| w.abs() <= lim));
    }

    #[test]
    fn zero_observation_gives_biases() {
        let arch = ArchConfig::default();
        let mut p = PolicyParams::init(&arch, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        p.mu.b.data_mut().copy_from_slice(&[0.1, -0.2, 0.3]);
        p.value.b.data_mut()[0] = 0.7;
        let (out, _) = p.forward(&Observation::zeros()).unwrap();
        assert_eq!(out.mu, [0.1, -0.2, 0.3]);
        assert_eq!(out.value, 0.7);
        assert_eq!(out.log_std, [LOG_STD_BIAS_INIT; 3]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let p = PolicyParams::zeros(&ArchConfig::default()).unwrap();
        let mut obs = Observation::zeros();
        obs.occupancy.pop();
        assert!(matches!(p.forward(&obs), Err(NnError::ShapeMismatch { .. })));
    }

    #[test]
    fn value_does_not_touch_log_std_head() {
        let arch = small_arch();
        let p = PolicyParams::init(&arch, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let (_, cache) = p.forward_parts(&[0.3; 12], &[0.1; 12], &[1.0; 81]).unwrap();
        let g = p.backward(
            &cache,
            &OutputGrad {
                value: 1.0,
                ..Default::default()
            },
        );
        assert!(g.log_std.w.data().iter().all(|&x| x == 0.0));
        assert!(g.mu.w.data().iter().all(|&x| x == 0.0));
        let z = p.backward(&cache, &OutputGrad::default());
        assert_eq!(z.sq_norm(), 0.0);
    }

    #[test]
    fn critic_gradient_can_stop_at_head() {
        let arch = small_arch();
        let p = PolicyParams::init(&arch, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let (_, cache) = p.forward_parts(&[0.3; 12], &[0.1; 12], &[0.5; 81]).unwrap();
        let mut acc = p.zeros_like();
        let grad = OutputGrad {
            value: 1.0,
            ..Default::default()
        };
        p.backward_into(&cache, &grad, false, &mut acc);
        assert!(acc.value.w.data().iter().any(|&x| x != 0.0));
        assert_eq!(acc.enc_current[0].w.data().iter().map(|x| x * x).sum::<f64>(), 0.0);
        assert_eq!(acc.conv1.w.data().iter().map(|x| x * x).sum::<f64>(), 0.0);
    }

    #[test]
    fn gaussian_closed_forms() {
        let half_log_2pi = 0.5 * (2.0 * PI).ln();
        let (lp, ent) = logprob_and_entropy(&[0.5; 3], &[0.0; 3], &[0.5; 3]);
        assert!((lp + 3.0 * half_log_2pi).abs() < 1e-12);
        assert!((lp + 2.756_815_599).abs() < 1e-8);
        assert!((ent - 4.256_815_599).abs() < 1e-8);
        let (_, ent2) = logprob_and_entropy(&[0.5; 3], &[2f64.ln(); 3], &[0.5; 3]);
        assert!((ent2 - ent - 3.0 * 2f64.ln()).abs() < 1e-12);
        let (far, _) = logprob_and_entropy(&[0.0; 3], &[0.0; 3], &[100.0; 3]);
        assert!(far.is_finite());
    }

    #[test]
    fn tiny_sigma_sample_equals_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mu = [0.3, -1.0, 2.0];
        let (raw, _) = sample_action(&mu, &[-5.0; 3], &mut rng);
        for i in 0..3 {
            assert!((raw[i] - mu[i]).abs() < 0.05);
        }
        // Clamping applies even to wild inputs.
        let (raw, lp) = sample_action(&mu, &[-50.0; 3], &mut rng);
        assert!(lp.is_finite() && (raw[0] - mu[0]).abs() < 0.05);
    }

    #[test]
    fn adam_first_step_and_zero_grad() {
        let mut p = [1.0, -2.0];
        let (mut m, mut v) = ([0.0; 2], [0.0; 2]);
        adam_update(&mut p, &[0.5, -3.0], &mut m, &mut v, 1, 0.01, (0.9, 0.999, 1e-8));
        assert!((p[0] - (1.0 - 0.01 * 0.5 / (0.5 + 1e-8))).abs() < 1e-12);
        assert!((p[1] - (-2.0 + 0.01 * 3.0 / (3.0 + 1e-8))).abs() < 1e-12);
        let before = p;
        let (mut m, mut v) = ([0.0; 2], [0.0; 2]);
        adam_update(&mut p, &[0.0, 0.0], &mut m, &mut v, 1, 0.01, (0.9, 0.999, 1e-8));
        assert_eq!(p, before);
    }

    #[test]
    fn checkpoint_round_trip_is_byte_exact() {
        let p = PolicyParams::init(&small_arch(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let bytes = checkpoint_bytes(&p);
        let q = params_from_checkpoint(&bytes).unwrap();
        assert_eq!(p, q);
        assert_eq!(checkpoint_bytes(&q), bytes);
    }

    #[test]
    fn corrupt_checkpoints_name_the_tensor() {
        let p = PolicyParams::init(&small_arch(), &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let bytes = checkpoint_bytes(&p);
        let truncated = &bytes[..bytes.len() - 3];
        let err = params_from_checkpoint(truncated).unwrap_err().to_string();
        assert!(err.contains("value.b"), "{err}");

        let mut nan = bytes.clone();
        let n = nan.len();
        nan[n - 8..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(params_from_checkpoint(&nan).unwrap_err().to_string().contains("value.b"));

        assert!(matches!(params_from_checkpoint(b"garbage!"), Err(NnError::BadMagic)));
        let mut extra = bytes;
        extra.push(0);
        assert!(matches!(params_from_checkpoint(&extra), Err(NnError::TrailingBytes(1))));
    }
}
