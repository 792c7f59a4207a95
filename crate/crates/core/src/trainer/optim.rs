use serde::{Deserialize, Serialize};

use crate::encoder::EncoderParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

/// Adam with decoupled weight decay and a constant learning rate. Decay is
/// applied to weight matrices and embedding tables, not to biases or norm
/// gains.
pub struct AdamW {
    config: AdamWConfig,
    m: EncoderParams,
    v: EncoderParams,
    decay: Vec<bool>,
    step: u64,
}

impl AdamW {
    pub fn new(params: &EncoderParams, config: AdamWConfig) -> Self {
        let decay = params
            .named_tensors()
            .iter()
            .map(|(name, _)| !(name.ends_with(".bias") || name.ends_with(".gain") || name == "mlm_bias"))
            .collect();
        Self { config, m: params.zeros_like(), v: params.zeros_like(), decay, step: 0 }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, params: &mut EncoderParams, grads: &EncoderParams, lr: f64) {
        self.step += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        let grads: Vec<&[f64]> = grads.named_tensors().into_iter().map(|(_, t)| t.data()).collect();
        let tensors = params.tensors_mut().into_iter().zip(self.m.tensors_mut()).zip(self.v.tensors_mut());
        for (i, ((p, m), v)) in tensors.enumerate() {
            let wd = if self.decay[i] { c.weight_decay } else { 0.0 };
            let (p, m, v) = (p.data_mut(), m.data_mut(), v.data_mut());
            for k in 0..p.len() {
                let g = grads[i][k];
                m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g;
                v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g * g;
                let step = (m[k] / bc1) / ((v[k] / bc2).sqrt() + c.eps);
                p[k] -= lr * (step + wd * p[k]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{Encoder, EncoderConfig};

    #[test]
    fn first_step_moves_each_weight_by_about_lr() {
        let config = EncoderConfig { model_dim: 4, layers: 1, heads: 1, ffn_dim: 4, vocab_size: 6, ..Default::default() };
        let enc = Encoder::new(config, 0).unwrap();
        let mut params = enc.params.clone();
        let mut grads = params.zeros_like();
        grads.tensors_mut().into_iter().for_each(|t| t.fill(0.5));
        let mut opt = AdamW::new(&params, AdamWConfig { weight_decay: 0.0, ..Default::default() });
        opt.update(&mut params, &grads, 0.01);
        for ((_, before), (_, after)) in enc.params.named_tensors().iter().zip(params.named_tensors()) {
            for (a, b) in before.data().iter().zip(after.data()) {
                assert!((a - b - 0.01).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn decay_skips_biases() {
        let config = EncoderConfig { model_dim: 4, layers: 1, heads: 1, ffn_dim: 4, vocab_size: 6, ..Default::default() };
        let enc = Encoder::new(config, 0).unwrap();
        let mut params = enc.params.clone();
        params.tensors_mut().into_iter().for_each(|t| t.fill(1.0));
        let grads = params.zeros_like();
        let mut opt = AdamW::new(&params, AdamWConfig { weight_decay: 0.5, ..Default::default() });
        opt.update(&mut params, &grads, 0.1);
        assert!((params.token_embedding.get(0, 0) - 0.95).abs() < 1e-12);
        assert_eq!(params.layers[0].query.bias.get(0, 0), 1.0);
        assert_eq!(params.layers[0].attn_norm.gain.get(0, 0), 1.0);
    }
}
