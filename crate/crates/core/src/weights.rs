//! Regularity-index weights `μ` on frequency space.

// Inherent float methods shadow the trait whenever std is linked.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::params::FunctionParam;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parabolic split needs dimension >= 2 and spatial_dims = dimension - 1")]
    InvalidSplit,
    #[error("non-finite frequency")]
    NonFinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

/// How the frequency vector enters the weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Anisotropy {
    /// `1 + |ξ|²`.
    Isotropic,
    /// `1 + |ξ'|² + |ξ_k|`, the last axis being time.
    ParabolicSplit { spatial_dims: usize },
}

/// `μ(ξ) = b^{s/2} φ(b^{1/2})` with `b` given by the anisotropy.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityIndex {
    s: f64,
    #[serde(default)]
    phi: FunctionParam,
    anisotropy: Anisotropy,
    dim: usize,
}

impl RegularityIndex {
    pub fn new(s: f64, phi: FunctionParam, anisotropy: Anisotropy, dim: usize) -> Result<Self, WeightError> {
        if dim == 0 {
            return Err(WeightError::InvalidArgument("dimension must be at least 1"));
        }
        if !s.is_finite() {
            return Err(WeightError::InvalidArgument("order must be finite"));
        }
        if let Anisotropy::ParabolicSplit { spatial_dims } = anisotropy {
            if dim < 2 || spatial_dims + 1 != dim {
                return Err(WeightError::InvalidSplit);
            }
        }
        Ok(RegularityIndex { s, phi, anisotropy, dim })
    }

    pub fn isotropic(s: f64, phi: FunctionParam, dim: usize) -> Result<Self, WeightError> {
        Self::new(s, phi, Anisotropy::Isotropic, dim)
    }

    /// Anisotropic index with time on the last of `dim` axes.
    pub fn parabolic(s: f64, phi: FunctionParam, dim: usize) -> Result<Self, WeightError> {
        Self::new(s, phi, Anisotropy::ParabolicSplit { spatial_dims: dim.saturating_sub(1) }, dim)
    }

    /// Re-validate after deserialization.
    pub fn validated(self) -> Result<Self, WeightError> {
        Self::new(self.s, self.phi, self.anisotropy, self.dim)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn phi(&self) -> &FunctionParam {
        &self.phi
    }

    pub fn anisotropy(&self) -> Anisotropy {
        self.anisotropy
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same split and `φ`, different order.
    pub fn with_order(&self, s: f64) -> Self {
        RegularityIndex { s, ..self.clone() }
    }

    pub fn with_phi(&self, phi: FunctionParam) -> Self {
        RegularityIndex { phi, ..self.clone() }
    }

    /// The base `b(ξ) ≥ 1`.
    #[inline]
    pub fn base(&self, xi: &[f64]) -> f64 {
        match self.anisotropy {
            Anisotropy::Isotropic => 1.0 + xi.iter().map(|x| x * x).sum::<f64>(),
            Anisotropy::ParabolicSplit { spatial_dims } => {
                let spatial: f64 = xi[..spatial_dims].iter().map(|x| x * x).sum();
                1.0 + spatial + xi[spatial_dims].abs()
            }
        }
    }

    /// `μ` as a function of the base `b`.
    #[inline]
    pub fn eval_base(&self, b: f64) -> f64 {
        b.powf(0.5 * self.s) * self.phi.eval(b.sqrt())
    }

    pub fn eval(&self, xi: &[f64]) -> Result<f64, WeightError> {
        if xi.len() != self.dim {
            return Err(WeightError::DimensionMismatch { expected: self.dim, got: xi.len() });
        }
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(WeightError::NonFinite);
        }
        Ok(self.eval_base(self.base(xi)))
    }
}

/// Empirical fit of `μ(ξ)/μ(η) ≤ c(1+|ξ−η|)^l`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdmissibilityFit {
    pub c: f64,
    pub l: f64,
    /// Largest value of `log(μ(ξ)/μ(η)) − log c − l·log(1+|ξ−η|)`; `≤ 0` up to rounding.
    pub max_residual: f64,
    pub pairs: usize,
    pub seed: u64,
}

/// Sample pairs with `η` uniform in `[−w, w]^k` and `|ξ−η|` log-uniform in
/// `[1e-3, 2w]`. `c` is taken from pairs at distance at most 1 (never below
/// 1), then `l` is the least exponent that covers the remaining pairs.
pub fn check_admissibility(
    idx: &RegularityIndex,
    sample_pairs: usize,
    half_width: f64,
    seed: u64,
) -> Result<AdmissibilityFit, WeightError> {
    if sample_pairs < 100 {
        return Err(WeightError::InvalidArgument("need at least 100 sample pairs"));
    }
    if !(half_width > 0.0) {
        return Err(WeightError::InvalidArgument("half_width must be positive"));
    }
    let k = idx.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(sample_pairs);
    let mut xi = alloc::vec![0.0; k];
    let mut eta = alloc::vec![0.0; k];
    let mut dir = alloc::vec![0.0; k];
    let (lo, hi) = (1e-3f64.ln(), (2.0 * half_width).ln());
    for _ in 0..sample_pairs {
        for e in eta.iter_mut() {
            *e = rng.random_range(-half_width..half_width);
        }
        let mut nrm = 0.0;
        for d in dir.iter_mut() {
            *d = rng.sample::<f64, _>(StandardNormal);
            nrm += *d * *d;
        }
        let nrm = nrm.sqrt().max(1e-300);
        let dist = rng.random_range(lo..hi).exp();
        for j in 0..k {
            xi[j] = eta[j] + dist * dir[j] / nrm;
        }
        let y = (idx.eval(&xi)? / idx.eval(&eta)?).ln();
        points.push((dist, y));
    }
    let log_c = points
        .iter()
        .filter(|(d, _)| *d <= 1.0)
        .map(|&(_, y)| y)
        .fold(0.0f64, f64::max);
    let l = points
        .iter()
        .filter(|(d, _)| *d > 1.0)
        .map(|&(d, y)| (y - log_c) / (1.0 + d).ln())
        .fold(0.0f64, f64::max);
    let max_residual = points
        .iter()
        .map(|&(d, y)| y - log_c - l * (1.0 + d).ln())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(AdmissibilityFit { c: log_c.exp(), l, max_residual, pairs: sample_pairs, seed })
}
