//! Sigmoid feedforward networks with exact input derivatives up to second
//! order, parameter gradients of the residual and data losses, Adam, and the
//! alternating mini-batch training loop.
//!
//! Input derivatives are carried forward as jets: for every unit the value,
//! the gradient and the packed upper triangle of the Hessian with respect to
//! the network input. Parameter gradients reverse-accumulate through that
//! jet graph, so the residual-loss gradient includes all second-order paths.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{DensityField, GridSpec};
use crate::models::{generator_apply, SdeModel};
use crate::rng::{substream, Stream};

/// Hidden layer widths of the reference architecture.
pub const DEFAULT_HIDDEN: [usize; 6] = [16, 128, 128, 128, 16, 4];

/// Layer sizes `[n, hidden..., 1]` of the reference architecture.
pub fn default_layer_sizes(n: usize) -> Vec<usize> {
    let mut sizes = vec![n];
    sizes.extend_from_slice(&DEFAULT_HIDDEN);
    sizes.push(1);
    sizes
}

/// Network parameters in one flat vector. Layer `l` stores its weight matrix
/// (`sizes[l+1] x sizes[l]`, row-major) followed by its bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    sizes: Vec<usize>,
    pub theta: Vec<f64>,
    /// Multiplier applied to the raw network output when reporting densities;
    /// set when training on targets rescaled to maximum one.
    pub output_scale: f64,
}

impl MlpParams {
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidArgument(format!("invalid layer sizes {layer_sizes:?}")));
        }
        if *layer_sizes.last().unwrap() != 1 {
            return Err(Error::InvalidArgument("the output layer must have one unit".into()));
        }
        let count = layer_sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum();
        Ok(Self { sizes: layer_sizes.to_vec(), theta: vec![0.0; count], output_scale: 1.0 })
    }

    pub fn from_parts(layer_sizes: &[usize], theta: Vec<f64>, output_scale: f64) -> Result<Self> {
        let mut p = Self::zeros(layer_sizes)?;
        if theta.len() != p.theta.len() {
            return Err(Error::DimensionMismatch { expected: p.theta.len(), got: theta.len() });
        }
        if theta.iter().any(|v| !v.is_finite()) || !(output_scale.is_finite() && output_scale > 0.0) {
            return Err(Error::InvalidArgument("parameters must be finite".into()));
        }
        p.theta = theta;
        p.output_scale = output_scale;
        Ok(p)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Offsets of the weight block and the bias block of layer `l`.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let mut off = 0;
        for w in self.sizes.windows(2).take(l) {
            off += w[1] * w[0] + w[1];
        }
        (off, off + self.sizes[l + 1] * self.sizes[l])
    }

    pub fn weights(&self, l: usize) -> &[f64] {
        let (w, b) = self.offsets(l);
        &self.theta[w..b]
    }

    pub fn biases(&self, l: usize) -> &[f64] {
        let (_, b) = self.offsets(l);
        &self.theta[b..b + self.sizes[l + 1]]
    }

    /// Density in the original units: `output_scale * forward(x)`.
    pub fn density(&self, x: &[f64]) -> f64 {
        self.output_scale * forward(self, x)
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(layer_sizes: &[usize], seed: u64) -> Result<MlpParams> {
    let mut p = MlpParams::zeros(layer_sizes)?;
    let mut rng = substream(seed, Stream::Init);
    for l in 0..p.num_layers() {
        let (fan_in, fan_out) = (p.sizes[l], p.sizes[l + 1]);
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let (w, b) = p.offsets(l);
        for v in &mut p.theta[w..b] {
            *v = rng.random_range(-a..=a);
        }
    }
    Ok(p)
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Raw network output in `(0, 1)`.
pub fn forward(params: &MlpParams, x: &[f64]) -> f64 {
    assert_eq!(x.len(), params.input_dim(), "input dimension");
    let mut a = x.to_vec();
    let mut next = Vec::new();
    for l in 0..params.num_layers() {
        let (w, b) = (params.weights(l), params.biases(l));
        let (n_in, n_out) = (params.sizes[l], params.sizes[l + 1]);
        next.clear();
        for j in 0..n_out {
            let row = &w[j * n_in..(j + 1) * n_in];
            let mut z = b[j];
            for i in 0..n_in {
                z += row[i] * a[i];
            }
            next.push(sigmoid(z));
        }
        std::mem::swap(&mut a, &mut next);
    }
    a[0]
}

/// Value, gradient and Hessian (row-major `n x n`) of the raw output.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

/// Channel layout of a jet: value, `n` first derivatives, then the packed
/// upper triangle `(k, l), k <= l` of the Hessian.
#[derive(Debug, Clone)]
struct Layout {
    n: usize,
    channels: usize,
    pairs: Vec<(usize, usize)>,
}

impl Layout {
    fn new(n: usize, derivatives: bool) -> Self {
        if !derivatives {
            return Self { n: 0, channels: 1, pairs: Vec::new() };
        }
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        for k in 0..n {
            for l in k..n {
                pairs.push((k, l));
            }
        }
        Self { n, channels: 1 + n + pairs.len(), pairs }
    }
}

/// Per-point record of the forward sweep, reused across points.
struct Tape {
    layout: Layout,
    /// Jets of the layer inputs; `acts[0]` is the network input.
    acts: Vec<Vec<f64>>,
    /// Pre-activation jets per layer.
    pre: Vec<Vec<f64>>,
    /// `s1, s2, s3` per unit.
    slopes: Vec<Vec<[f64; 3]>>,
    abar: Vec<f64>,
    zbar: Vec<f64>,
}

impl Tape {
    fn new(params: &MlpParams, derivatives: bool) -> Self {
        let layout = Layout::new(params.input_dim(), derivatives);
        let c = layout.channels;
        Self {
            acts: params.sizes.iter().map(|&s| vec![0.0; s * c]).collect(),
            pre: params.sizes[1..].iter().map(|&s| vec![0.0; s * c]).collect(),
            slopes: params.sizes[1..].iter().map(|&s| vec![[0.0; 3]; s]).collect(),
            abar: Vec::new(),
            zbar: Vec::new(),
            layout,
        }
    }

    fn run(&mut self, params: &MlpParams, x: &[f64]) {
        let c = self.layout.channels;
        let n = params.input_dim();
        let input = &mut self.acts[0];
        input.fill(0.0);
        for i in 0..n {
            input[i * c] = x[i];
            if self.layout.n > 0 {
                input[i * c + 1 + i] = 1.0;
            }
        }
        for l in 0..params.num_layers() {
            let (w, b) = (params.weights(l), params.biases(l));
            let (n_in, n_out) = (params.sizes[l], params.sizes[l + 1]);
            let (head, tail) = self.acts.split_at_mut(l + 1);
            let (a, out) = (&head[l], &mut tail[0]);
            let z = &mut self.pre[l];
            for j in 0..n_out {
                let zj = &mut z[j * c..(j + 1) * c];
                zj.fill(0.0);
                zj[0] = b[j];
                let row = &w[j * n_in..(j + 1) * n_in];
                for i in 0..n_in {
                    let wji = row[i];
                    let ai = &a[i * c..(i + 1) * c];
                    zj[0] += wji * ai[0];
                    for ch in 1..c {
                        zj[ch] += wji * ai[ch];
                    }
                }
                let s = sigmoid(zj[0]);
                let s1 = s * (1.0 - s);
                let s2 = s1 * (1.0 - 2.0 * s);
                let s3 = s1 * (1.0 - 6.0 * s + 6.0 * s * s);
                self.slopes[l][j] = [s1, s2, s3];
                let oj = &mut out[j * c..(j + 1) * c];
                oj[0] = s;
                let nd = self.layout.n;
                for k in 0..nd {
                    oj[1 + k] = s1 * zj[1 + k];
                }
                for (p, &(k, m)) in self.layout.pairs.iter().enumerate() {
                    oj[1 + nd + p] = s1 * zj[1 + nd + p] + s2 * zj[1 + k] * zj[1 + m];
                }
            }
        }
    }

    fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }

    /// Accumulates `d(out . seed)/d theta` into `grad`.
    fn backward(&mut self, params: &MlpParams, seed: &[f64], grad: &mut [f64]) {
        let c = self.layout.channels;
        let nd = self.layout.n;
        let mut abar = std::mem::take(&mut self.abar);
        let mut zbar = std::mem::take(&mut self.zbar);
        abar.clear();
        abar.extend_from_slice(seed);
        for l in (0..params.num_layers()).rev() {
            let (n_in, n_out) = (params.sizes[l], params.sizes[l + 1]);
            let z = &self.pre[l];
            zbar.clear();
            zbar.resize(n_out * c, 0.0);
            for j in 0..n_out {
                let [s1, s2, s3] = self.slopes[l][j];
                let ab = &abar[j * c..(j + 1) * c];
                let zj = &z[j * c..(j + 1) * c];
                let zb = &mut zbar[j * c..(j + 1) * c];
                let mut s1bar = 0.0;
                let mut s2bar = 0.0;
                for k in 0..nd {
                    zb[1 + k] = ab[1 + k] * s1;
                    s1bar += ab[1 + k] * zj[1 + k];
                }
                for (p, &(k, m)) in self.layout.pairs.iter().enumerate() {
                    let g = ab[1 + nd + p];
                    zb[1 + nd + p] = g * s1;
                    s1bar += g * zj[1 + nd + p];
                    s2bar += g * zj[1 + k] * zj[1 + m];
                    zb[1 + k] += g * s2 * zj[1 + m];
                    zb[1 + m] += g * s2 * zj[1 + k];
                }
                zb[0] = ab[0] * s1 + s1bar * s2 + s2bar * s3;
            }
            let (wo, bo) = params.offsets(l);
            let a = &self.acts[l];
            for j in 0..n_out {
                let zb = &zbar[j * c..(j + 1) * c];
                grad[bo + j] += zb[0];
                let grow = &mut grad[wo + j * n_in..wo + (j + 1) * n_in];
                for i in 0..n_in {
                    let ai = &a[i * c..(i + 1) * c];
                    let mut acc = 0.0;
                    for ch in 0..c {
                        acc += zb[ch] * ai[ch];
                    }
                    grow[i] += acc;
                }
            }
            if l > 0 {
                let w = params.weights(l);
                abar.clear();
                abar.resize(n_in * c, 0.0);
                for j in 0..n_out {
                    let zb = &zbar[j * c..(j + 1) * c];
                    let row = &w[j * n_in..(j + 1) * n_in];
                    for i in 0..n_in {
                        let wji = row[i];
                        let dst = &mut abar[i * c..(i + 1) * c];
                        for ch in 0..c {
                            dst[ch] += wji * zb[ch];
                        }
                    }
                }
            }
        }
        self.abar = abar;
        self.zbar = zbar;
    }
}

/// Raw output together with its exact input gradient and Hessian.
pub fn forward_jet(params: &MlpParams, x: &[f64]) -> Jet {
    assert_eq!(x.len(), params.input_dim(), "input dimension");
    let mut tape = Tape::new(params, true);
    tape.run(params, x);
    unpack(&tape.layout, tape.output())
}

fn unpack(layout: &Layout, out: &[f64]) -> Jet {
    let n = layout.n;
    let mut hess = vec![0.0; n * n];
    for (p, &(k, l)) in layout.pairs.iter().enumerate() {
        hess[k * n + l] = out[1 + n + p];
        hess[l * n + k] = out[1 + n + p];
    }
    Jet { value: out[0], grad: out[1..1 + n].to_vec(), hess }
}

/// Generator applied to the raw network output at `x`.
pub fn residual(model: &SdeModel, params: &MlpParams, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim() || params.input_dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: x.len() });
    }
    let j = forward_jet(params, x);
    generator_apply(model, j.value, &j.grad, &j.hess, x)
}

/// Coefficients `c` with `residual = c . jet` in the packed channel layout.
fn residual_functional(model: &SdeModel, layout: &Layout, x: &[f64], out: &mut Vec<f64>) {
    let n = layout.n;
    out.clear();
    out.resize(layout.channels, 0.0);
    out[0] = -model.drift_divergence(x);
    let f = model.drift_vec(x);
    for k in 0..n {
        out[1 + k] = -f[k];
    }
    let sigma = model.diffusion();
    for (p, &(k, l)) in layout.pairs.iter().enumerate() {
        out[1 + n + p] = if k == l { 0.5 * sigma[(k, k)] } else { sigma[(k, l)] };
    }
}

fn check_batch(params: &MlpParams, batch: &[Vec<f64>]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if let Some(p) = batch.iter().find(|p| p.len() != params.input_dim()) {
        return Err(Error::DimensionMismatch { expected: params.input_dim(), got: p.len() });
    }
    Ok(())
}

/// Mean squared residual over `batch` and its exact parameter gradient.
pub fn loss_and_grad_l1(model: &SdeModel, params: &MlpParams, batch: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    check_batch(params, batch)?;
    if model.dim() != params.input_dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: params.input_dim() });
    }
    let mut tape = Tape::new(params, true);
    let mut grad = vec![0.0; params.len()];
    let mut coef = Vec::new();
    let mut seed = Vec::new();
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for x in batch {
        tape.run(params, x);
        residual_functional(model, &tape.layout, x, &mut coef);
        let r: f64 = coef.iter().zip(tape.output()).map(|(c, j)| c * j).sum();
        loss += r * r;
        seed.clear();
        seed.extend(coef.iter().map(|c| 2.0 * r * c * scale));
        tape.backward(params, &seed, &mut grad);
    }
    Ok((loss * scale, grad))
}

/// Mean squared misfit `(u(y) - v)^2` over the batch and its gradient.
pub fn loss_and_grad_l2(params: &MlpParams, batch: &[Vec<f64>], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_batch(params, batch)?;
    if targets.len() != batch.len() {
        return Err(Error::DimensionMismatch { expected: batch.len(), got: targets.len() });
    }
    let mut tape = Tape::new(params, false);
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for (y, &v) in batch.iter().zip(targets) {
        tape.run(params, y);
        let d = tape.output()[0] - v;
        loss += d * d;
        tape.backward(params, &[2.0 * d * scale], &mut grad);
    }
    Ok((loss * scale, grad))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(len: usize, hyper: AdamHyper) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], step: 0, hyper }
    }
}

pub fn adam_update(theta: &mut [f64], grad: &[f64], state: &mut AdamState) {
    assert_eq!(theta.len(), grad.len());
    assert_eq!(theta.len(), state.m.len());
    let AdamHyper { lr, beta1, beta2, eps } = state.hyper;
    state.step += 1;
    let c1 = 1.0 - beta1.powi(state.step as i32);
    let c2 = 1.0 - beta2.powi(state.step as i32);
    for i in 0..theta.len() {
        let g = grad[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        let mhat = state.m[i] / c1;
        let vhat = state.v[i] / c2;
        theta[i] -= lr * mhat / (vhat.sqrt() + eps);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_collocation: usize,
    /// Defaults to `min(128, number of reference points)` when `None`.
    pub batch_reference: Option<usize>,
    pub max_iters: usize,
    pub tol_l1: f64,
    pub tol_l2: f64,
    pub ema_decay: f64,
    pub seed: u64,
    /// Divide targets by their maximum before training.
    pub rescale: bool,
    /// `false` skips the residual step, training on the data loss alone.
    pub use_residual: bool,
    pub adam: AdamHyper,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_collocation: 128,
            batch_reference: None,
            max_iters: 10_000,
            tol_l1: 1e-5,
            tol_l2: 1e-5,
            ema_decay: 0.99,
            seed: 0,
            rescale: false,
            use_residual: true,
            adam: AdamHyper::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iter: usize,
    /// NaN when the residual step is disabled.
    pub l1: f64,
    pub l2: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: MlpParams,
    pub history: Vec<LossRecord>,
    pub converged: bool,
}

/// Epoch-wise shuffled mini-batch source.
struct Batcher {
    order: Vec<usize>,
    pos: usize,
    size: usize,
}

impl Batcher {
    fn new(len: usize, size: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut order: Vec<usize> = (0..len).collect();
        order.shuffle(rng);
        Self { order, pos: 0, size }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.size);
        while out.len() < self.size {
            if self.pos == self.order.len() {
                self.order.shuffle(rng);
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

/// Alternating training: each iteration takes one Adam step on a mini-batch of
/// the residual loss and then one on a mini-batch of the data loss, each with
/// its own Adam state. Stops when the smoothed batch losses fall below their
/// thresholds; otherwise returns the best parameters seen.
pub fn train_double_shuffle(
    model: &SdeModel,
    init: MlpParams,
    collocation: &[Vec<f64>],
    reference: &[Vec<f64>],
    targets: &[f64],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if reference.is_empty() || (cfg.use_residual && collocation.is_empty()) {
        return Err(Error::InvalidArgument("training sets must be nonempty".into()));
    }
    if targets.len() != reference.len() {
        return Err(Error::DimensionMismatch { expected: reference.len(), got: targets.len() });
    }
    let batch_y = cfg.batch_reference.unwrap_or(128.min(reference.len()));
    if batch_y == 0 || batch_y > reference.len() {
        return Err(Error::InvalidArgument(format!("reference batch size {batch_y} out of range")));
    }
    if cfg.use_residual && (cfg.batch_collocation == 0 || cfg.batch_collocation > collocation.len()) {
        return Err(Error::InvalidArgument(format!(
            "collocation batch size {} out of range",
            cfg.batch_collocation
        )));
    }
    if !(0.0..1.0).contains(&cfg.ema_decay) {
        return Err(Error::InvalidArgument("ema decay must be in [0, 1)".into()));
    }

    let mut params = init;
    let (targets, scale) = if cfg.rescale {
        let max = targets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0) {
            return Err(Error::InvalidArgument("rescaling needs a positive maximum target".into()));
        }
        (targets.iter().map(|v| v / max).collect::<Vec<_>>(), max)
    } else {
        (targets.to_vec(), 1.0)
    };
    params.output_scale = scale;

    let mut rng = substream(cfg.seed, Stream::Shuffle);
    let mut xs = Batcher::new(collocation.len(), cfg.batch_collocation.max(1), &mut rng);
    let mut ys = Batcher::new(reference.len(), batch_y, &mut rng);
    let mut adam1 = AdamState::new(params.len(), cfg.adam);
    let mut adam2 = AdamState::new(params.len(), cfg.adam);
    let gather = |idx: &[usize], set: &[Vec<f64>]| idx.iter().map(|&i| set[i].clone()).collect::<Vec<_>>();

    let mut history = Vec::new();
    let mut ema = (0.0, 0.0);
    let mut best = (f64::INFINITY, params.clone());
    for iter in 0..cfg.max_iters {
        let l1_step = if cfg.use_residual {
            let bx = gather(&xs.next(&mut rng), collocation);
            Some(loss_and_grad_l1(model, &params, &bx)?)
        } else {
            None
        };
        let idx = ys.next(&mut rng);
        let by = gather(&idx, reference);
        let ty: Vec<f64> = idx.iter().map(|&i| targets[i]).collect();
        let (l2, _) = loss_and_grad_l2(&params, &by, &ty)?;
        let l1 = l1_step.as_ref().map_or(f64::NAN, |s| s.0);
        if !l1.is_finite() && cfg.use_residual || !l2.is_finite() {
            return Err(Error::BlowUp { step: iter as u64, state: vec![l1, l2] });
        }
        history.push(LossRecord { iter, l1, l2 });
        let l1v = if cfg.use_residual { l1 } else { 0.0 };
        ema = if iter == 0 {
            (l1v, l2)
        } else {
            (cfg.ema_decay * ema.0 + (1.0 - cfg.ema_decay) * l1v, cfg.ema_decay * ema.1 + (1.0 - cfg.ema_decay) * l2)
        };
        if ema.0 + ema.1 < best.0 {
            best = (ema.0 + ema.1, params.clone());
        }
        if ema.0 < cfg.tol_l1 && ema.1 < cfg.tol_l2 {
            return Ok(TrainOutcome { params, history, converged: true });
        }
        if let Some((_, g1)) = l1_step {
            adam_update(&mut params.theta, &g1, &mut adam1);
        }
        let (_, g2) = loss_and_grad_l2(&params, &by, &ty)?;
        adam_update(&mut params.theta, &g2, &mut adam2);
    }
    Ok(TrainOutcome { params: best.1, history, converged: false })
}

/// Densities (`output_scale * forward`) at every node of `grid`.
pub fn evaluate_on_grid(params: &MlpParams, grid: &GridSpec) -> Result<DensityField> {
    if grid.dim() != params.input_dim() {
        return Err(Error::DimensionMismatch { expected: params.input_dim(), got: grid.dim() });
    }
    Ok(DensityField::from_fn(grid.clone(), |x| params.density(x)))
}

/// Densities on a two-dimensional slice: `axes` vary over `plane`, the other
/// coordinates are taken from `base`.
pub fn evaluate_slice(
    params: &MlpParams,
    plane: &GridSpec,
    axes: (usize, usize),
    base: &[f64],
) -> Result<DensityField> {
    let n = params.input_dim();
    if base.len() != n || plane.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: n, got: base.len() });
    }
    if axes.0 >= n || axes.1 >= n || axes.0 == axes.1 {
        return Err(Error::InvalidArgument(format!("invalid slice axes {axes:?}")));
    }
    let mut x = base.to_vec();
    Ok(DensityField::from_fn(plane.clone(), |p| {
        x[axes.0] = p[0];
        x[axes.1] = p[1];
        params.density(&x)
    }))
}
