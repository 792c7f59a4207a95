//! Post-norm transformer encoder with learned absolute positions, an optional
//! additive language embedding and a masked-token head tied to the token
//! embedding. Every forward pass keeps the activations its backward pass
//! needs; gradients are accumulated into an [`EncoderParams`] of the same
//! shape as the weights.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::tensor::{dot, matmul, matmul_at_acc, matmul_bt_acc, softmax_in_place, Matrix};
use super::EncoderError;
use crate::corpus::LangId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub model_dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub max_seq_len: usize,
    pub vocab_size: usize,
    pub use_language_embedding: bool,
    pub language_count: usize,
    /// Standard deviation of the token and position embedding init.
    pub embedding_init_std: f64,
    pub layer_norm_eps: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            model_dim: 64,
            layers: 2,
            heads: 4,
            ffn_dim: 128,
            max_seq_len: 32,
            vocab_size: 0,
            use_language_embedding: false,
            language_count: 0,
            embedding_init_std: 0.02,
            layer_norm_eps: 1e-5,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), EncoderError> {
        let bad = |field, reason: String| Err(EncoderError::Config { field, reason });
        if self.model_dim == 0 || self.heads == 0 || self.model_dim % self.heads != 0 {
            return bad("model_dim", format!("{} not divisible by {} heads", self.model_dim, self.heads));
        }
        if self.max_seq_len < 4 {
            return bad("max_seq_len", format!("{} < 4", self.max_seq_len));
        }
        if self.vocab_size < 5 {
            return bad("vocab_size", format!("{} leaves no room beside the specials", self.vocab_size));
        }
        if self.ffn_dim == 0 {
            return bad("ffn_dim", "must be positive".into());
        }
        if self.use_language_embedding && self.language_count == 0 {
            return bad("language_count", "language embedding needs at least one language".into());
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.heads
    }
}

/// `x · weight + bias`, weight stored `in × out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Matrix,
    pub bias: Matrix,
}

impl Linear {
    fn zeros(inp: usize, out: usize) -> Self {
        Self { weight: Matrix::zeros(inp, out), bias: Matrix::zeros(1, out) }
    }

    fn forward(&self, x: &Matrix) -> Matrix {
        let mut y = matmul(x, &self.weight);
        add_row_bias(&mut y, self.bias.data());
        y
    }

    /// Accumulates parameter gradients and returns `dx`.
    fn backward(&self, x: &Matrix, dy: &Matrix, grad: &mut Linear) -> Matrix {
        matmul_at_acc(x, dy, &mut grad.weight);
        accumulate_col_sums(dy, grad.bias.data_mut());
        let mut dx = Matrix::zeros(x.rows(), x.cols());
        matmul_bt_acc(dy, &self.weight, &mut dx);
        dx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNorm {
    pub gain: Matrix,
    pub bias: Matrix,
}

impl LayerNorm {
    fn identity(dim: usize) -> Self {
        let mut gain = Matrix::zeros(1, dim);
        gain.fill(1.0);
        Self { gain, bias: Matrix::zeros(1, dim) }
    }

    fn forward(&self, x: &Matrix, eps: f64) -> (Matrix, NormCache) {
        let (t, d) = x.shape();
        let mut xhat = Matrix::zeros(t, d);
        let mut y = Matrix::zeros(t, d);
        let mut inv_std = Vec::with_capacity(t);
        for i in 0..t {
            let row = x.row(i);
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let is = 1.0 / (var + eps).sqrt();
            inv_std.push(is);
            let xh = xhat.row_mut(i);
            for (o, v) in xh.iter_mut().zip(row) {
                *o = (v - mean) * is;
            }
            let yr = y.row_mut(i);
            for j in 0..d {
                yr[j] = xhat.get(i, j) * self.gain.data()[j] + self.bias.data()[j];
            }
        }
        (y, NormCache { xhat, inv_std })
    }

    fn backward(&self, cache: &NormCache, dy: &Matrix, grad: &mut LayerNorm) -> Matrix {
        let (t, d) = dy.shape();
        let mut dx = Matrix::zeros(t, d);
        let gain = self.gain.data();
        for i in 0..t {
            let dyr = dy.row(i);
            let xh = cache.xhat.row(i);
            {
                let gg = grad.gain.data_mut();
                for j in 0..d {
                    gg[j] += dyr[j] * xh[j];
                }
            }
            {
                let gb = grad.bias.data_mut();
                for j in 0..d {
                    gb[j] += dyr[j];
                }
            }
            let dxh: Vec<f64> = (0..d).map(|j| dyr[j] * gain[j]).collect();
            let sum: f64 = dxh.iter().sum();
            let sum_x: f64 = dxh.iter().zip(xh).map(|(a, b)| a * b).sum();
            let is = cache.inv_std[i];
            let out = dx.row_mut(i);
            for j in 0..d {
                out[j] = is / d as f64 * (d as f64 * dxh[j] - sum - xh[j] * sum_x);
            }
        }
        dx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub attn_norm: LayerNorm,
    pub ffn_in: Linear,
    pub ffn_out: Linear,
    pub ffn_norm: LayerNorm,
}

/// All trainable tensors. Also used, zero-filled, as a gradient buffer and
/// for optimizer moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub token_embedding: Matrix,
    pub position_embedding: Matrix,
    pub language_embedding: Option<Matrix>,
    pub embedding_norm: LayerNorm,
    pub layers: Vec<LayerParams>,
    pub mlm_bias: Matrix,
}

impl EncoderParams {
    pub fn zeros(config: &EncoderConfig) -> Self {
        let d = config.model_dim;
        let layer = || LayerParams {
            query: Linear::zeros(d, d),
            key: Linear::zeros(d, d),
            value: Linear::zeros(d, d),
            output: Linear::zeros(d, d),
            attn_norm: LayerNorm { gain: Matrix::zeros(1, d), bias: Matrix::zeros(1, d) },
            ffn_in: Linear::zeros(d, config.ffn_dim),
            ffn_out: Linear::zeros(config.ffn_dim, d),
            ffn_norm: LayerNorm { gain: Matrix::zeros(1, d), bias: Matrix::zeros(1, d) },
        };
        Self {
            token_embedding: Matrix::zeros(config.vocab_size, d),
            position_embedding: Matrix::zeros(config.max_seq_len, d),
            language_embedding: config
                .use_language_embedding
                .then(|| Matrix::zeros(config.language_count, d)),
            embedding_norm: LayerNorm { gain: Matrix::zeros(1, d), bias: Matrix::zeros(1, d) },
            layers: (0..config.layers).map(|_| layer()).collect(),
            mlm_bias: Matrix::zeros(1, config.vocab_size),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
        z
    }

    /// Every tensor with a stable name, in a fixed order.
    pub fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out: Vec<(String, &Matrix)> = vec![
            ("token_embedding".into(), &self.token_embedding),
            ("position_embedding".into(), &self.position_embedding),
        ];
        if let Some(l) = &self.language_embedding {
            out.push(("language_embedding".into(), l));
        }
        out.push(("embedding_norm.gain".into(), &self.embedding_norm.gain));
        out.push(("embedding_norm.bias".into(), &self.embedding_norm.bias));
        for (i, l) in self.layers.iter().enumerate() {
            for (name, lin) in [("query", &l.query), ("key", &l.key), ("value", &l.value), ("output", &l.output)] {
                out.push((format!("layers.{i}.{name}.weight"), &lin.weight));
                out.push((format!("layers.{i}.{name}.bias"), &lin.bias));
            }
            out.push((format!("layers.{i}.attn_norm.gain"), &l.attn_norm.gain));
            out.push((format!("layers.{i}.attn_norm.bias"), &l.attn_norm.bias));
            out.push((format!("layers.{i}.ffn_in.weight"), &l.ffn_in.weight));
            out.push((format!("layers.{i}.ffn_in.bias"), &l.ffn_in.bias));
            out.push((format!("layers.{i}.ffn_out.weight"), &l.ffn_out.weight));
            out.push((format!("layers.{i}.ffn_out.bias"), &l.ffn_out.bias));
            out.push((format!("layers.{i}.ffn_norm.gain"), &l.ffn_norm.gain));
            out.push((format!("layers.{i}.ffn_norm.bias"), &l.ffn_norm.bias));
        }
        out.push(("mlm_bias".into(), &self.mlm_bias));
        out
    }

    /// Same order as [`named_tensors`](Self::named_tensors).
    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out: Vec<&mut Matrix> = vec![&mut self.token_embedding, &mut self.position_embedding];
        if let Some(l) = &mut self.language_embedding {
            out.push(l);
        }
        out.push(&mut self.embedding_norm.gain);
        out.push(&mut self.embedding_norm.bias);
        for l in &mut self.layers {
            for lin in [&mut l.query, &mut l.key, &mut l.value, &mut l.output] {
                out.push(&mut lin.weight);
                out.push(&mut lin.bias);
            }
            out.push(&mut l.attn_norm.gain);
            out.push(&mut l.attn_norm.bias);
            out.push(&mut l.ffn_in.weight);
            out.push(&mut l.ffn_in.bias);
            out.push(&mut l.ffn_out.weight);
            out.push(&mut l.ffn_out.bias);
            out.push(&mut l.ffn_norm.gain);
            out.push(&mut l.ffn_norm.bias);
        }
        out.push(&mut self.mlm_bias);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.data().len()).sum()
    }

    /// `self += other * scale`.
    pub fn add_scaled(&mut self, other: &EncoderParams, scale: f64) {
        let src: Vec<&Matrix> = other.named_tensors().into_iter().map(|(_, t)| t).collect();
        for (dst, s) in self.tensors_mut().into_iter().zip(src) {
            dst.data_mut().iter_mut().zip(s.data()).for_each(|(a, b)| *a += b * scale);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.named_tensors().iter().all(|(_, t)| t.is_finite())
    }
}

pub(crate) struct NormCache {
    xhat: Matrix,
    inv_std: Vec<f64>,
}

struct LayerCache {
    input: Matrix,
    q: Matrix,
    k: Matrix,
    v: Matrix,
    /// Attention probabilities per head, `T × T`.
    probs: Vec<Matrix>,
    context: Matrix,
    attn_norm: NormCache,
    hidden: Matrix,
    ffn_pre: Matrix,
    ffn_act: Matrix,
    ffn_norm: NormCache,
}

/// Activations of one sentence's forward pass.
pub struct ForwardPass {
    ids: Vec<u32>,
    lang: Option<usize>,
    embedding_norm: NormCache,
    layers: Vec<LayerCache>,
    /// Last-layer hidden states, `T × model_dim`.
    pub states: Matrix,
}

impl ForwardPass {
    pub fn ids(&self) -> &[u32] {
        &self.ids
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub config: EncoderConfig,
    pub params: EncoderParams,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + 0.044715 * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

fn add_row_bias(y: &mut Matrix, bias: &[f64]) {
    for i in 0..y.rows() {
        y.row_mut(i).iter_mut().zip(bias).for_each(|(a, b)| *a += b);
    }
}

fn accumulate_col_sums(dy: &Matrix, out: &mut [f64]) {
    for i in 0..dy.rows() {
        out.iter_mut().zip(dy.row(i)).for_each(|(a, b)| *a += b);
    }
}

impl Encoder {
    /// Random initialisation: linear weights `N(0, 1/fan_in)`, embeddings
    /// `N(0, embedding_init_std²)`, biases and the language table zero, norm
    /// gains one.
    pub fn new(config: EncoderConfig, seed: u64) -> Result<Self, EncoderError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = EncoderParams::zeros(&config);
        let mut fill = |m: &mut Matrix, std: f64| {
            let dist = Normal::new(0.0, std).expect("finite std");
            m.data_mut().iter_mut().for_each(|x| *x = dist.sample(&mut rng));
        };
        let d = config.model_dim;
        fill(&mut params.token_embedding, config.embedding_init_std);
        fill(&mut params.position_embedding, config.embedding_init_std);
        params.embedding_norm = LayerNorm::identity(d);
        for l in &mut params.layers {
            for lin in [&mut l.query, &mut l.key, &mut l.value, &mut l.output, &mut l.ffn_in] {
                let fan_in = lin.weight.rows() as f64;
                fill(&mut lin.weight, 1.0 / fan_in.sqrt());
            }
            fill(&mut l.ffn_out.weight, 1.0 / (config.ffn_dim as f64).sqrt());
            l.attn_norm = LayerNorm::identity(d);
            l.ffn_norm = LayerNorm::identity(d);
        }
        Ok(Self { config, params })
    }

    pub fn from_params(config: EncoderConfig, params: EncoderParams) -> Result<Self, EncoderError> {
        config.validate()?;
        let expected = EncoderParams::zeros(&config);
        let shapes = |p: &EncoderParams| p.named_tensors().into_iter().map(|(n, t)| (n, t.shape())).collect::<Vec<_>>();
        if shapes(&expected) != shapes(&params) {
            return Err(EncoderError::Config { field: "params", reason: "tensor shapes do not match config".into() });
        }
        Ok(Self { config, params })
    }

    fn check_input(&self, ids: &[u32], lang: Option<LangId>) -> Result<Option<usize>, EncoderError> {
        if ids.is_empty() || ids.len() > self.config.max_seq_len {
            return Err(EncoderError::SequenceLength { len: ids.len(), max: self.config.max_seq_len });
        }
        if let Some(&bad) = ids.iter().find(|&&i| i as usize >= self.config.vocab_size) {
            return Err(EncoderError::UnknownToken(bad));
        }
        if !self.config.use_language_embedding {
            return Ok(None);
        }
        match lang {
            None => Err(EncoderError::MissingLanguage),
            Some(l) if l.index() >= self.config.language_count => Err(EncoderError::UnknownLanguage(l)),
            Some(l) => Ok(Some(l.index())),
        }
    }

    /// Last-layer hidden states, `T × model_dim`.
    pub fn encode(&self, ids: &[u32], lang: Option<LangId>) -> Result<Matrix, EncoderError> {
        Ok(self.forward(ids, lang)?.states)
    }

    pub fn forward(&self, ids: &[u32], lang: Option<LangId>) -> Result<ForwardPass, EncoderError> {
        let lang = self.check_input(ids, lang)?;
        let p = &self.params;
        let (t, d) = (ids.len(), self.config.model_dim);
        let eps = self.config.layer_norm_eps;

        let mut emb = Matrix::zeros(t, d);
        for (pos, &id) in ids.iter().enumerate() {
            let row = emb.row_mut(pos);
            let tok = p.token_embedding.row(id as usize);
            let pe = p.position_embedding.row(pos);
            for j in 0..d {
                row[j] = tok[j] + pe[j];
            }
            if let (Some(l), Some(table)) = (lang, &p.language_embedding) {
                row.iter_mut().zip(table.row(l)).for_each(|(a, b)| *a += b);
            }
        }
        let (mut x, embedding_norm) = p.embedding_norm.forward(&emb, eps);

        let heads = self.config.heads;
        let dh = self.config.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        let mut layers = Vec::with_capacity(p.layers.len());
        for lp in &p.layers {
            let q = lp.query.forward(&x);
            let k = lp.key.forward(&x);
            let v = lp.value.forward(&x);
            let mut context = Matrix::zeros(t, d);
            let mut probs = Vec::with_capacity(heads);
            for h in 0..heads {
                let off = h * dh;
                let mut a = Matrix::zeros(t, t);
                for i in 0..t {
                    let qi = &q.row(i)[off..off + dh];
                    let row = a.row_mut(i);
                    for (j, r) in row.iter_mut().enumerate() {
                        *r = dot(qi, &k.row(j)[off..off + dh]) * scale;
                    }
                    softmax_in_place(row);
                }
                for i in 0..t {
                    for j in 0..t {
                        let w = a.get(i, j);
                        let vj = &v.row(j)[off..off + dh];
                        let ci = &mut context.row_mut(i)[off..off + dh];
                        ci.iter_mut().zip(vj).for_each(|(c, vv)| *c += w * vv);
                    }
                }
                probs.push(a);
            }
            let mut resid = lp.output.forward(&context);
            resid.add_assign(&x);
            let (hidden, attn_norm) = lp.attn_norm.forward(&resid, eps);

            let ffn_pre = lp.ffn_in.forward(&hidden);
            let mut ffn_act = ffn_pre.clone();
            ffn_act.data_mut().iter_mut().for_each(|z| *z = gelu(*z));
            let mut resid2 = lp.ffn_out.forward(&ffn_act);
            resid2.add_assign(&hidden);
            let (out, ffn_norm) = lp.ffn_norm.forward(&resid2, eps);

            layers.push(LayerCache {
                input: std::mem::replace(&mut x, out),
                q,
                k,
                v,
                probs,
                context,
                attn_norm,
                hidden,
                ffn_pre,
                ffn_act,
                ffn_norm,
            });
        }
        Ok(ForwardPass { ids: ids.to_vec(), lang, embedding_norm, layers, states: x })
    }

    /// Backpropagates `d_states` (gradient w.r.t. the last-layer states)
    /// through the pass, accumulating into `grads`.
    pub fn backward(&self, pass: &ForwardPass, d_states: &Matrix, grads: &mut EncoderParams) {
        let p = &self.params;
        let t = pass.ids.len();
        let d = self.config.model_dim;
        let heads = self.config.heads;
        let dh = self.config.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();

        let mut dx = d_states.clone();
        for (li, (lp, cache)) in p.layers.iter().zip(&pass.layers).enumerate().rev() {
            let g = &mut grads.layers[li];
            let d_resid2 = lp.ffn_norm.backward(&cache.ffn_norm, &dx, &mut g.ffn_norm);
            let d_act = lp.ffn_out.backward(&cache.ffn_act, &d_resid2, &mut g.ffn_out);
            let mut d_pre = d_act;
            d_pre
                .data_mut()
                .iter_mut()
                .zip(cache.ffn_pre.data())
                .for_each(|(g, &z)| *g *= gelu_grad(z));
            let mut d_hidden = lp.ffn_in.backward(&cache.hidden, &d_pre, &mut g.ffn_in);
            d_hidden.add_assign(&d_resid2);

            let d_resid = lp.attn_norm.backward(&cache.attn_norm, &d_hidden, &mut g.attn_norm);
            let d_context = lp.output.backward(&cache.context, &d_resid, &mut g.output);

            let mut dq = Matrix::zeros(t, d);
            let mut dk = Matrix::zeros(t, d);
            let mut dv = Matrix::zeros(t, d);
            for h in 0..heads {
                let off = h * dh;
                let a = &cache.probs[h];
                for i in 0..t {
                    let dci = &d_context.row(i)[off..off + dh];
                    // dA_ij = dC_i · V_j, then softmax backward.
                    let da: Vec<f64> = (0..t).map(|j| dot(dci, &cache.v.row(j)[off..off + dh])).collect();
                    let ai = a.row(i);
                    let inner: f64 = da.iter().zip(ai).map(|(x, y)| x * y).sum();
                    for j in 0..t {
                        let aij = ai[j];
                        {
                            let dvj = &mut dv.row_mut(j)[off..off + dh];
                            dvj.iter_mut().zip(dci).for_each(|(x, c)| *x += aij * c);
                        }
                        let ds = aij * (da[j] - inner) * scale;
                        if ds == 0.0 {
                            continue;
                        }
                        {
                            let kj = &cache.k.row(j)[off..off + dh];
                            let dqi = &mut dq.row_mut(i)[off..off + dh];
                            dqi.iter_mut().zip(kj).for_each(|(x, kk)| *x += ds * kk);
                        }
                        let qi = &cache.q.row(i)[off..off + dh];
                        let dkj = &mut dk.row_mut(j)[off..off + dh];
                        dkj.iter_mut().zip(qi).for_each(|(x, qq)| *x += ds * qq);
                    }
                }
            }
            let mut d_input = d_resid;
            d_input.add_assign(&lp.query.backward(&cache.input, &dq, &mut g.query));
            d_input.add_assign(&lp.key.backward(&cache.input, &dk, &mut g.key));
            d_input.add_assign(&lp.value.backward(&cache.input, &dv, &mut g.value));
            dx = d_input;
        }

        let d_emb = p.embedding_norm.backward(&pass.embedding_norm, &dx, &mut grads.embedding_norm);
        for (pos, &id) in pass.ids.iter().enumerate() {
            let de = d_emb.row(pos);
            grads.token_embedding.row_mut(id as usize).iter_mut().zip(de).for_each(|(a, b)| *a += b);
            grads.position_embedding.row_mut(pos).iter_mut().zip(de).for_each(|(a, b)| *a += b);
            if let (Some(l), Some(table)) = (pass.lang, grads.language_embedding.as_mut()) {
                table.row_mut(l).iter_mut().zip(de).for_each(|(a, b)| *a += b);
            }
        }
    }

    /// Masked-token logits for the given rows of `states`:
    /// `states[p] · token_embeddingᵀ + mlm_bias`, one row per position.
    pub fn mlm_head(&self, states: &Matrix, positions: &[usize]) -> Matrix {
        let v = self.config.vocab_size;
        let emb = &self.params.token_embedding;
        let bias = self.params.mlm_bias.data();
        let mut out = Matrix::zeros(positions.len(), v);
        for (r, &pos) in positions.iter().enumerate() {
            let h = states.row(pos);
            let row = out.row_mut(r);
            for (w, o) in row.iter_mut().enumerate() {
                *o = dot(h, emb.row(w)) + bias[w];
            }
        }
        out
    }

    /// Backward of [`mlm_head`](Self::mlm_head): accumulates into the tied
    /// embedding and bias gradients, and into `d_states` at `positions`.
    pub fn mlm_head_backward(
        &self,
        states: &Matrix,
        positions: &[usize],
        d_logits: &Matrix,
        d_states: &mut Matrix,
        grads: &mut EncoderParams,
    ) {
        let emb = &self.params.token_embedding;
        for (r, &pos) in positions.iter().enumerate() {
            let dl = d_logits.row(r);
            let h = states.row(pos).to_vec();
            {
                let ds = d_states.row_mut(pos);
                for (w, &g) in dl.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    ds.iter_mut().zip(emb.row(w)).for_each(|(a, e)| *a += g * e);
                }
            }
            for (w, &g) in dl.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                grads.token_embedding.row_mut(w).iter_mut().zip(&h).for_each(|(a, hh)| *a += g * hh);
                grads.mlm_bias.data_mut()[w] += g;
            }
        }
    }

    /// Logits over the full vocabulary at every position.
    pub fn mlm_logits(&self, ids: &[u32], lang: Option<LangId>) -> Result<Matrix, EncoderError> {
        let states = self.encode(ids, lang)?;
        let positions: Vec<usize> = (0..ids.len()).collect();
        Ok(self.mlm_head(&states, &positions))
    }
}
