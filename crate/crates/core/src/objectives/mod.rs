//! Sentence-level translation ranking, word-level translation ranking and
//! aligned word prediction, plus their weighted combination.
//!
//! Similarities are raw cosines unless a scale other than 1 is configured.
//! Word spans of different token lengths are compared position by position
//! over the shorter length.

mod awp;
mod batch;
mod ranking;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{tensor, EncoderError, Matrix};

pub use awp::{awp_direction, awp_loss, AwpMode};
pub use batch::{evaluate_batch, BatchItem, ObjectiveOptions};
pub use ranking::{tr_loss, tr_loss_grad, wtr_direction, wtr_loss, wtr_pair_grad, TrGrad, TrOptions, WtrGrad};

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("cosine similarity of a zero vector")]
    ZeroVector,
    #[error("empty token span")]
    EmptySpan,
    #[error("translation ranking needs at least 2 pairs, got {0}")]
    BatchTooSmall(usize),
    #[error("{what}: {left} vs {right}")]
    LengthMismatch { what: &'static str, left: usize, right: usize },
    #[error("loss weight {name} = {value} is negative or not finite")]
    BadWeight { name: &'static str, value: f64 },
    #[error("loss component {name} is not finite")]
    NonFinite { name: &'static str },
    #[error(transparent)]
    Encoder(#[from] EncoderError),
}

/// Weights of the translation ranking, aligned word prediction and word
/// translation ranking terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: 0.8, beta: 0.1, gamma: 0.1 }
    }
}

impl LossWeights {
    /// Sentence ranking only.
    pub const TR_ONLY: LossWeights = LossWeights { alpha: 1.0, beta: 0.0, gamma: 0.0 };
    /// The grid-searched alternative to the defaults.
    pub const GRID_SEARCHED: LossWeights = LossWeights { alpha: 0.8, beta: 0.02, gamma: 0.18 };

    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, ObjectiveError> {
        let w = Self { alpha, beta, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ObjectiveError::BadWeight { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchLosses {
    pub tr: f64,
    pub awp: f64,
    pub wtr: f64,
    pub total: f64,
    pub n: usize,
}

pub fn combined_loss(tr: f64, awp: f64, wtr: f64, n: usize, w: LossWeights) -> Result<BatchLosses, ObjectiveError> {
    w.validate()?;
    for (name, v) in [("tr", tr), ("awp", awp), ("wtr", wtr)] {
        if !v.is_finite() {
            return Err(ObjectiveError::NonFinite { name });
        }
    }
    Ok(BatchLosses { tr, awp, wtr, total: w.alpha * tr + w.beta * awp + w.gamma * wtr, n })
}

pub fn phi(u: &[f64], v: &[f64]) -> Result<f64, ObjectiveError> {
    let (nu, nv) = (tensor::norm(u), tensor::norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(ObjectiveError::ZeroVector);
    }
    Ok((tensor::dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Cosine and its gradients with respect to both arguments.
pub(crate) fn phi_grad(u: &[f64], v: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>), ObjectiveError> {
    let (nu, nv) = (tensor::norm(u), tensor::norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(ObjectiveError::ZeroVector);
    }
    let c = tensor::dot(u, v) / (nu * nv);
    let du = u.iter().zip(v).map(|(a, b)| b / (nu * nv) - c * a / (nu * nu)).collect();
    let dv = u.iter().zip(v).map(|(a, b)| a / (nu * nv) - c * b / (nv * nv)).collect();
    Ok((c, du, dv))
}

/// Mean row-wise cosine over the first `min(rows)` rows of both spans.
pub fn phi_m(a: &Matrix, b: &Matrix) -> Result<f64, ObjectiveError> {
    let m = a.rows().min(b.rows());
    if m == 0 {
        return Err(ObjectiveError::EmptySpan);
    }
    let mut sum = 0.0;
    for t in 0..m {
        sum += phi(a.row(t), b.row(t))?;
    }
    Ok(sum / m as f64)
}

/// `phi_m` over row ranges of two token-state matrices, adding
/// `upstream * d phi_m` into the matching rows of the gradient buffers.
pub(crate) fn phi_m_span_grad(
    a: &Matrix,
    a_span: (usize, usize),
    b: &Matrix,
    b_span: (usize, usize),
    upstream: f64,
    da: &mut Matrix,
    db: &mut Matrix,
) -> Result<(), ObjectiveError> {
    let m = (a_span.1 - a_span.0).min(b_span.1 - b_span.0);
    if m == 0 {
        return Err(ObjectiveError::EmptySpan);
    }
    let w = upstream / m as f64;
    for t in 0..m {
        let (_, gu, gv) = phi_grad(a.row(a_span.0 + t), b.row(b_span.0 + t))?;
        da.row_mut(a_span.0 + t).iter_mut().zip(&gu).for_each(|(x, g)| *x += w * g);
        db.row_mut(b_span.0 + t).iter_mut().zip(&gv).for_each(|(x, g)| *x += w * g);
    }
    Ok(())
}

/// `phi_m` over row ranges without materialising the spans.
pub(crate) fn phi_m_span(a: &Matrix, a_span: (usize, usize), b: &Matrix, b_span: (usize, usize)) -> Result<f64, ObjectiveError> {
    let m = (a_span.1 - a_span.0).min(b_span.1 - b_span.0);
    if m == 0 {
        return Err(ObjectiveError::EmptySpan);
    }
    let mut sum = 0.0;
    for t in 0..m {
        sum += phi(a.row(a_span.0 + t), b.row(b_span.0 + t))?;
    }
    Ok(sum / m as f64)
}
