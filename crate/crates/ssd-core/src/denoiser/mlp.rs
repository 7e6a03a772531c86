//! Desk-scale trainable denoiser: one small fully connected net per
//! (input-resolution, output-resolution) pair occurring in the schedule,
//! trained with explicit backpropagation and a decoupled-weight-decay
//! Adam-style optimizer on the Min-SNR weighted x0-prediction loss.
//!
//! Checkpoint format: magic "SSDW", version u32 LE, then per-tensor records
//! of (name length u32 LE, name UTF-8, rank u8, dims u32 LE each, payload
//! f32 LE row-major) until end of file.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SsdError};
use crate::process::DiffusionProcess;
use crate::schedules::MIN_SNR_GAMMA;
use crate::tensor::{Tensor, TensorShape};

use super::{sample_timesteps_batch, Denoiser};

/// Architecture knobs for the per-pair nets.
#[derive(Debug, Clone, Copy)]
pub struct MlpConfig {
    pub hidden: usize,
    pub embed_dim: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 128,
            embed_dim: 32,
        }
    }
}

/// Optimizer hyperparameters (decoupled weight decay).
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// Dense layer, weights stored row-major (n_out x n_in).
#[derive(Debug, Clone)]
struct Affine {
    n_in: usize,
    n_out: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Affine {
    fn he_init<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let sd = (2.0 / n_in as f64).sqrt();
        let w = (0..n_in * n_out)
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self {
            n_in,
            n_out,
            w,
            b: vec![0.0; n_out],
        }
    }

    fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            w: vec![0.0; n_in * n_out],
            b: vec![0.0; n_out],
        }
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_in);
        debug_assert_eq!(out.len(), self.n_out);
        for (o, (row, bias)) in out
            .iter_mut()
            .zip(self.w.chunks_exact(self.n_in).zip(&self.b))
        {
            *o = bias + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// Accumulates parameter gradients and writes the input gradient.
    fn backward(&self, x: &[f64], d_out: &[f64], g: &mut AffineGrads, d_in: &mut [f64]) {
        for v in d_in.iter_mut() {
            *v = 0.0;
        }
        for (i, &d) in d_out.iter().enumerate() {
            g.b[i] += d;
            let row = &self.w[i * self.n_in..(i + 1) * self.n_in];
            let grow = &mut g.w[i * self.n_in..(i + 1) * self.n_in];
            for j in 0..self.n_in {
                grow[j] += d * x[j];
                d_in[j] += row[j] * d;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct AffineGrads {
    w: Vec<f64>,
    b: Vec<f64>,
}

impl AffineGrads {
    fn zeros_like(a: &Affine) -> Self {
        Self {
            w: vec![0.0; a.w.len()],
            b: vec![0.0; a.b.len()],
        }
    }
}

fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

fn silu_grad(x: f64) -> f64 {
    let s = 1.0 / (1.0 + (-x).exp());
    s * (1.0 + x * (1.0 - s))
}

/// 2-hidden-layer net for one (r_in, r_out) pair. The output layer starts at
/// zero so an untrained net predicts the zero image.
#[derive(Debug, Clone)]
struct PairNet {
    r_in: usize,
    r_out: usize,
    l1: Affine,
    l2: Affine,
    l3: Affine,
}

#[derive(Debug, Clone)]
struct PairGrads {
    l1: AffineGrads,
    l2: AffineGrads,
    l3: AffineGrads,
}

impl PairGrads {
    fn zeros_like(net: &PairNet) -> Self {
        Self {
            l1: AffineGrads::zeros_like(&net.l1),
            l2: AffineGrads::zeros_like(&net.l2),
            l3: AffineGrads::zeros_like(&net.l3),
        }
    }
}

struct ForwardCache {
    input: Vec<f64>,
    pre1: Vec<f64>,
    act1: Vec<f64>,
    pre2: Vec<f64>,
    act2: Vec<f64>,
    out: Vec<f64>,
}

impl PairNet {
    fn new<R: Rng + ?Sized>(
        channels: usize,
        r_in: usize,
        r_out: usize,
        cfg: &MlpConfig,
        rng: &mut R,
    ) -> Self {
        let n_in = channels * r_in * r_in + cfg.embed_dim;
        let n_out = channels * r_out * r_out;
        Self {
            r_in,
            r_out,
            l1: Affine::he_init(n_in, cfg.hidden, rng),
            l2: Affine::he_init(cfg.hidden, cfg.hidden, rng),
            l3: Affine::zeros(cfg.hidden, n_out),
        }
    }

    fn forward(&self, input: Vec<f64>) -> ForwardCache {
        let mut pre1 = vec![0.0; self.l1.n_out];
        self.l1.forward(&input, &mut pre1);
        let act1: Vec<f64> = pre1.iter().map(|&v| silu(v)).collect();
        let mut pre2 = vec![0.0; self.l2.n_out];
        self.l2.forward(&act1, &mut pre2);
        let act2: Vec<f64> = pre2.iter().map(|&v| silu(v)).collect();
        let mut out = vec![0.0; self.l3.n_out];
        self.l3.forward(&act2, &mut out);
        ForwardCache {
            input,
            pre1,
            act1,
            pre2,
            act2,
            out,
        }
    }

    /// Backprop from d(loss)/d(out); returns the gradient w.r.t. the input.
    fn backward(&self, cache: &ForwardCache, d_out: &[f64], g: &mut PairGrads) -> Vec<f64> {
        let mut d_act2 = vec![0.0; self.l2.n_out];
        self.l3.backward(&cache.act2, d_out, &mut g.l3, &mut d_act2);
        let d_pre2: Vec<f64> = d_act2
            .iter()
            .zip(&cache.pre2)
            .map(|(d, &p)| d * silu_grad(p))
            .collect();
        let mut d_act1 = vec![0.0; self.l1.n_out];
        self.l2
            .backward(&cache.act1, &d_pre2, &mut g.l2, &mut d_act1);
        let d_pre1: Vec<f64> = d_act1
            .iter()
            .zip(&cache.pre1)
            .map(|(d, &p)| d * silu_grad(p))
            .collect();
        let mut d_input = vec![0.0; self.l1.n_in];
        self.l1
            .backward(&cache.input, &d_pre1, &mut g.l1, &mut d_input);
        d_input
    }

    fn param_count(&self) -> usize {
        [&self.l1, &self.l2, &self.l3]
            .iter()
            .map(|a| a.w.len() + a.b.len())
            .sum()
    }
}

/// Sinusoidal timestep embedding: dim/2 sine and dim/2 cosine components at
/// geometrically spaced frequencies.
pub(crate) fn timestep_embedding(t: usize, dim: usize) -> Vec<f64> {
    let half = dim / 2;
    let mut emb = Vec::with_capacity(dim);
    for i in 0..half {
        let freq = (-(10_000.0f64.ln()) * i as f64 / half as f64).exp();
        emb.push((t as f64 * freq).sin());
    }
    for i in 0..half {
        let freq = (-(10_000.0f64.ln()) * i as f64 / half as f64).exp();
        emb.push((t as f64 * freq).cos());
    }
    emb
}

/// Per-resolution-pair MLP denoiser.
#[derive(Debug, Clone)]
pub struct MlpDenoiser {
    channels: usize,
    cfg: MlpConfig,
    nets: BTreeMap<(usize, usize), PairNet>,
}

impl MlpDenoiser {
    /// Creates one net per (r(t), r(t-1)) pair occurring in the process.
    pub fn new<R: Rng + ?Sized>(
        process: &DiffusionProcess,
        cfg: MlpConfig,
        rng: &mut R,
    ) -> Result<Self> {
        if cfg.hidden == 0 || cfg.embed_dim == 0 || !cfg.embed_dim.is_multiple_of(2) {
            return Err(SsdError::Parameter(
                "hidden must be > 0 and embed_dim a positive even number".into(),
            ));
        }
        let rs = process.resolution();
        let mut pairs: Vec<(usize, usize)> = (1..=process.t_max())
            .map(|t| (rs.resolution(t), rs.resolution(t - 1)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        let mut nets = BTreeMap::new();
        for (r_in, r_out) in pairs {
            nets.insert(
                (r_in, r_out),
                PairNet::new(process.channels(), r_in, r_out, &cfg, rng),
            );
        }
        Ok(Self {
            channels: process.channels(),
            cfg,
            nets,
        })
    }

    pub fn config(&self) -> MlpConfig {
        self.cfg
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.nets.keys().copied().collect()
    }

    /// Total number of learnable parameters.
    pub fn param_count(&self) -> usize {
        self.nets.values().map(|n| n.param_count()).sum()
    }

    fn net_input(&self, x_t: &Tensor, t: usize) -> Vec<f64> {
        let mut input = x_t.data().to_vec();
        input.extend(timestep_embedding(t, self.cfg.embed_dim));
        input
    }

    /// Mean over the batch of `min(snr, gamma) * mean((pred - target)^2)`,
    /// plus parameter gradients. Pure in (weights, items); the finite
    /// difference checks rely on that.
    fn loss_and_grad(
        &self,
        pair: (usize, usize),
        items: &[(Vec<f64>, Vec<f64>, f64)],
    ) -> Result<(f64, PairGrads)> {
        let net = self
            .nets
            .get(&pair)
            .ok_or_else(|| SsdError::Parameter(format!("no net for resolution pair {pair:?}")))?;
        let mut grads = PairGrads::zeros_like(net);
        let b = items.len() as f64;
        let mut loss = 0.0;
        for (input, target, weight) in items {
            let cache = net.forward(input.clone());
            let d = target.len() as f64;
            let mut d_out = vec![0.0; target.len()];
            let mut mse = 0.0;
            for (k, (p, tgt)) in cache.out.iter().zip(target).enumerate() {
                let diff = p - tgt;
                mse += diff * diff;
                d_out[k] = 2.0 * weight * diff / (b * d);
            }
            loss += weight * mse / d;
            net.backward(&cache, &d_out, &mut grads);
        }
        Ok((loss / b, grads))
    }

    fn loss_only(&self, pair: (usize, usize), items: &[(Vec<f64>, Vec<f64>, f64)]) -> f64 {
        let net = &self.nets[&pair];
        let b = items.len() as f64;
        let mut loss = 0.0;
        for (input, target, weight) in items {
            let cache = net.forward(input.clone());
            let d = target.len() as f64;
            let mse: f64 = cache
                .out
                .iter()
                .zip(target)
                .map(|(p, t)| (p - t) * (p - t))
                .sum();
            loss += weight * mse / d;
        }
        loss / b
    }
}

impl Denoiser for MlpDenoiser {
    fn predict(&self, process: &DiffusionProcess, x_t: &Tensor, t: usize) -> Result<Tensor> {
        let rs = process.resolution();
        let pair = (rs.resolution(t), rs.resolution(t - 1));
        let net = self
            .nets
            .get(&pair)
            .ok_or_else(|| SsdError::Parameter(format!("no net for resolution pair {pair:?}")))?;
        let want = TensorShape::square(self.channels, net.r_in);
        if x_t.shape() != want {
            return Err(SsdError::Shape(format!(
                "expected {want}, got {}",
                x_t.shape()
            )));
        }
        let cache = net.forward(self.net_input(x_t, t));
        Tensor::from_vec(TensorShape::square(self.channels, net.r_out), cache.out)
    }
}

/// Adam moments per pair net plus the shared step counters.
#[derive(Debug, Clone)]
pub struct TrainState {
    adam: AdamConfig,
    moments: BTreeMap<(usize, usize), (PairGrads, PairGrads, u64)>,
}

impl TrainState {
    pub fn new(model: &MlpDenoiser, adam: AdamConfig) -> Self {
        let moments = model
            .nets
            .iter()
            .map(|(k, net)| {
                (
                    *k,
                    (PairGrads::zeros_like(net), PairGrads::zeros_like(net), 0),
                )
            })
            .collect();
        Self { adam, moments }
    }

    pub fn adam(&self) -> AdamConfig {
        self.adam
    }
}

fn adam_update(
    p: &mut [f64],
    g: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: &AdamConfig,
    step: u64,
    decay: bool,
) {
    let b1t = 1.0 - cfg.beta1.powi(step as i32);
    let b2t = 1.0 - cfg.beta2.powi(step as i32);
    for i in 0..p.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        let m_hat = m[i] / b1t;
        let v_hat = v[i] / b2t;
        let wd = if decay { cfg.weight_decay * p[i] } else { 0.0 };
        p[i] -= cfg.lr * (m_hat / (v_hat.sqrt() + cfg.eps) + wd);
    }
}

/// One training iteration: sample a shared-resolution batch of timesteps,
/// noise the images, and take one optimizer step on the pair net. Returns
/// the scalar loss before the update.
pub fn train_iter<R: Rng + ?Sized>(
    model: &mut MlpDenoiser,
    process: &DiffusionProcess,
    x0_batch: &[Tensor],
    rng: &mut R,
    state: &mut TrainState,
) -> Result<f64> {
    if x0_batch.is_empty() {
        return Err(SsdError::Parameter("empty batch".into()));
    }
    let rs = process.resolution();
    let ts = sample_timesteps_batch(rs, x0_batch.len(), rng);
    let pair = (rs.resolution(ts[0]), rs.resolution(ts[0] - 1));

    let mut items = Vec::with_capacity(ts.len());
    for (x0, &t) in x0_batch.iter().zip(&ts) {
        let eps = Tensor::standard_normal(process.shape_at(t), rng);
        let x_t = process.marginal_sample(x0, t, &eps)?;
        let target = process
            .cumulative_operator(t - 1)?
            .apply(x0)?
            .scale(1.0 / process.noise().signal_coeff(t - 1));
        let weight = process.noise().min_snr_weight(t, MIN_SNR_GAMMA)?;
        items.push((model.net_input(&x_t, t), target.into_data(), weight));
    }

    let (loss, grads) = model.loss_and_grad(pair, &items)?;
    if !loss.is_finite() {
        return Err(SsdError::Training(format!(
            "non-finite loss at pair {pair:?}, t in {:?}",
            (ts.iter().min(), ts.iter().max())
        )));
    }

    let net = model.nets.get_mut(&pair).expect("net exists");
    let (m, v, step) = state.moments.get_mut(&pair).expect("state exists");
    *step += 1;
    let s = *step;
    let cfg = state.adam;
    for (layer, gl, ml, vl) in [
        (&mut net.l1, &grads.l1, &mut m.l1, &mut v.l1),
        (&mut net.l2, &grads.l2, &mut m.l2, &mut v.l2),
        (&mut net.l3, &grads.l3, &mut m.l3, &mut v.l3),
    ] {
        adam_update(&mut layer.w, &gl.w, &mut ml.w, &mut vl.w, &cfg, s, true);
        adam_update(&mut layer.b, &gl.b, &mut ml.b, &mut vl.b, &cfg, s, false);
    }
    Ok(loss)
}

/// Synthetic training set: soft Gaussian blobs with random center, width,
/// and signed amplitude per channel, values within [-1, 1].
pub fn synthetic_blobs<R: Rng + ?Sized>(
    count: usize,
    channels: usize,
    res: usize,
    rng: &mut R,
) -> Vec<Tensor> {
    (0..count)
        .map(|_| {
            let mut img = Tensor::zeros(TensorShape::square(channels, res));
            for c in 0..channels {
                let cx = rng.random_range(0.15..0.85) * res as f64;
                let cy = rng.random_range(0.15..0.85) * res as f64;
                let width = rng.random_range(0.1..0.35) * res as f64;
                let amp: f64 =
                    rng.random_range(0.4..1.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
                for y in 0..res {
                    for x in 0..res {
                        let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                        img.set(c, y, x, amp * (-d2 / (2.0 * width * width)).exp());
                    }
                }
            }
            img
        })
        .collect()
}

/// Validates the backpropagation path by central finite differences on the
/// training loss: a 10-parameter slice spanning every layer and both weight
/// and bias kinds, at h = 1e-4, on a fixed random batch. Returns the worst
/// relative error between the analytic and finite-difference gradients.
pub fn gradient_check_10_params(seed: u64) -> Result<f64> {
    use crate::schedules::ResolutionSchedule;

    let ns = crate::schedules::NoiseSchedule::linear_default(30)?;
    let rs = ResolutionSchedule::new(crate::schedules::ScheduleKind::Equal, 1.0, &[4, 8], 30)?;
    let p = DiffusionProcess::new(ns, rs, 1)?;
    let mut rng = crate::rng::stream(seed, 0, 0, crate::rng::tag::TRAIN);
    let cfg = MlpConfig {
        hidden: 16,
        embed_dim: 8,
    };
    let mut model = MlpDenoiser::new(&p, cfg, &mut rng)?;
    let pair = (8usize, 8usize);
    // The output layer starts at zero; perturb it so its inputs matter.
    {
        let net = model.nets.get_mut(&pair).expect("pair exists");
        for w in net.l3.w.iter_mut() {
            *w = 0.3 * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let items: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..3)
        .map(|_| {
            let x = Tensor::standard_normal(TensorShape::square(1, 8), &mut rng);
            let tgt: Vec<f64> = (0..64)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            (model.net_input(&x, 5), tgt, 2.5)
        })
        .collect();
    let (_, grads) = model.loss_and_grad(pair, &items)?;

    let picks: [(usize, usize); 10] = [
        (0, 0),
        (0, 17),
        (0, 40),
        (1, 0),
        (1, 9),
        (2, 3),
        (2, 100),
        (3, 7),
        (4, 21),
        (5, 30),
    ];
    let h = 1e-4;
    let mut worst = 0.0f64;
    for (which, idx) in picks {
        let analytic = match which {
            0 => grads.l1.w[idx],
            1 => grads.l1.b[idx],
            2 => grads.l2.w[idx],
            3 => grads.l2.b[idx],
            4 => grads.l3.w[idx],
            _ => grads.l3.b[idx],
        };
        let poke = |delta: f64, model: &mut MlpDenoiser| {
            let net = model.nets.get_mut(&pair).expect("pair exists");
            match which {
                0 => net.l1.w[idx] += delta,
                1 => net.l1.b[idx] += delta,
                2 => net.l2.w[idx] += delta,
                3 => net.l2.b[idx] += delta,
                4 => net.l3.w[idx] += delta,
                _ => net.l3.b[idx] += delta,
            }
        };
        poke(h, &mut model);
        let up = model.loss_only(pair, &items);
        poke(-2.0 * h, &mut model);
        let down = model.loss_only(pair, &items);
        poke(h, &mut model);
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-8));
    }
    Ok(worst)
}

const CKPT_MAGIC: &[u8; 4] = b"SSDW";
const CKPT_VERSION: u32 = 1;

fn write_record<W: Write>(w: &mut W, name: &str, dims: &[usize], data: &[f64]) -> Result<()> {
    let bytes = name.as_bytes();
    w.write_all(&(bytes.len() as u32).to_le_bytes())?;
    w.write_all(bytes)?;
    w.write_all(&[dims.len() as u8])?;
    for &d in dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    debug_assert_eq!(dims.iter().product::<usize>(), data.len());
    for &v in data {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

type Record = (String, Vec<usize>, Vec<f64>);

fn read_record<R: Read>(r: &mut R) -> Result<Option<Record>> {
    let mut len4 = [0u8; 4];
    match r.read_exact(&mut len4) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let name_len = u32::from_le_bytes(len4) as usize;
    let mut name = vec![0u8; name_len];
    r.read_exact(&mut name)?;
    let name = String::from_utf8(name).map_err(|_| SsdError::Format("bad tensor name".into()))?;
    let mut rank = [0u8; 1];
    r.read_exact(&mut rank)?;
    let mut dims = Vec::with_capacity(rank[0] as usize);
    for _ in 0..rank[0] {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        dims.push(u32::from_le_bytes(b) as usize);
    }
    let numel: usize = dims.iter().product();
    let mut data = Vec::with_capacity(numel);
    for _ in 0..numel {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        data.push(f32::from_le_bytes(b) as f64);
    }
    Ok(Some((name, dims, data)))
}

/// Writes model weights in the SSDW checkpoint format.
pub fn save_checkpoint<P: AsRef<Path>>(path: P, model: &MlpDenoiser) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(CKPT_MAGIC)?;
    w.write_all(&CKPT_VERSION.to_le_bytes())?;
    write_record(
        &mut w,
        "config",
        &[3],
        &[
            model.channels as f64,
            model.cfg.embed_dim as f64,
            model.cfg.hidden as f64,
        ],
    )?;
    for ((r_in, r_out), net) in &model.nets {
        let prefix = format!("pair_{r_in}x{r_out}");
        for (tag, layer) in [("l1", &net.l1), ("l2", &net.l2), ("l3", &net.l3)] {
            write_record(
                &mut w,
                &format!("{prefix}.{tag}.weight"),
                &[layer.n_out, layer.n_in],
                &layer.w,
            )?;
            write_record(
                &mut w,
                &format!("{prefix}.{tag}.bias"),
                &[layer.n_out],
                &layer.b,
            )?;
        }
    }
    Ok(())
}

/// Reads a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint<P: AsRef<Path>>(path: P) -> Result<MlpDenoiser> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CKPT_MAGIC {
        return Err(SsdError::Format("missing SSDW magic".into()));
    }
    let mut ver = [0u8; 4];
    r.read_exact(&mut ver)?;
    let version = u32::from_le_bytes(ver);
    if version != CKPT_VERSION {
        return Err(SsdError::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }

    let mut records: BTreeMap<String, (Vec<usize>, Vec<f64>)> = BTreeMap::new();
    while let Some((name, dims, data)) = read_record(&mut r)? {
        records.insert(name, (dims, data));
    }
    let (_, config) = records
        .remove("config")
        .ok_or_else(|| SsdError::Format("checkpoint lacks config record".into()))?;
    if config.len() != 3 {
        return Err(SsdError::Format("bad config record".into()));
    }
    let channels = config[0] as usize;
    let cfg = MlpConfig {
        embed_dim: config[1] as usize,
        hidden: config[2] as usize,
    };

    let mut nets = BTreeMap::new();
    let pair_names: Vec<String> = records
        .keys()
        .filter_map(|k| k.split('.').next().map(str::to_string))
        .collect();
    let mut seen: Vec<String> = Vec::new();
    for p in pair_names {
        if !seen.contains(&p) {
            seen.push(p);
        }
    }
    for prefix in seen {
        let body = prefix
            .strip_prefix("pair_")
            .ok_or_else(|| SsdError::Format(format!("unexpected record group {prefix}")))?;
        let (r_in, r_out) = body
            .split_once('x')
            .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
            .ok_or_else(|| SsdError::Format(format!("bad pair name {prefix}")))?;
        let mut layer = |tag: &str| -> Result<Affine> {
            let (wd, w) = records
                .remove(&format!("{prefix}.{tag}.weight"))
                .ok_or_else(|| SsdError::Format(format!("missing {prefix}.{tag}.weight")))?;
            let (bd, b) = records
                .remove(&format!("{prefix}.{tag}.bias"))
                .ok_or_else(|| SsdError::Format(format!("missing {prefix}.{tag}.bias")))?;
            if wd.len() != 2 || bd.len() != 1 || wd[0] != bd[0] {
                return Err(SsdError::Format(format!(
                    "inconsistent dims for {prefix}.{tag}"
                )));
            }
            Ok(Affine {
                n_in: wd[1],
                n_out: wd[0],
                w,
                b,
            })
        };
        let net = PairNet {
            r_in,
            r_out,
            l1: layer("l1")?,
            l2: layer("l2")?,
            l3: layer("l3")?,
        };
        nets.insert((r_in, r_out), net);
    }
    if nets.is_empty() {
        return Err(SsdError::Format("checkpoint has no pair nets".into()));
    }
    Ok(MlpDenoiser {
        channels,
        cfg,
        nets,
    })
}
