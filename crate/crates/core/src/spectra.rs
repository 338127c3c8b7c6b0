//! Periodic lattices, spectral fields and multiplier norms.
//!
//! Coefficients are stored in FFT order (index `i < N/2` is frequency `i`,
//! otherwise `i − N`), row-major with the last axis fastest. The last axis is
//! time whenever a parabolic weight is used.

// Inherent float methods shadow the trait whenever std is linked.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::weights::{Anisotropy, RegularityIndex};

/// Above this many lattice points weights are never tabulated.
pub const MAX_TABLE_POINTS: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coefficient count {got} does not match lattice size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid lattice: {0}")]
    InvalidLattice(&'static str),
    #[error("fields live on different lattices")]
    LatticeMismatch,
    #[error("lattice with {points} points is too large to tabulate")]
    TooLarge { points: usize },
    #[error("mode index out of range on axis {axis}")]
    ModeOutOfRange { axis: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeSpec")]
pub struct Lattice {
    sizes: Vec<usize>,
    periods: Vec<f64>,
}

#[derive(Deserialize)]
struct LatticeSpec {
    sizes: Vec<usize>,
    periods: Vec<f64>,
}

impl TryFrom<LatticeSpec> for Lattice {
    type Error = SpectralError;
    fn try_from(spec: LatticeSpec) -> Result<Self, Self::Error> {
        Lattice::new(spec.sizes, spec.periods)
    }
}

impl Lattice {
    pub fn new(sizes: Vec<usize>, periods: Vec<f64>) -> Result<Self, SpectralError> {
        if sizes.is_empty() {
            return Err(SpectralError::InvalidLattice("need at least one axis"));
        }
        if sizes.len() != periods.len() {
            return Err(SpectralError::InvalidLattice("sizes and periods differ in length"));
        }
        if sizes.iter().any(|n| !n.is_power_of_two()) {
            return Err(SpectralError::InvalidLattice("sizes must be powers of two"));
        }
        if periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(SpectralError::InvalidLattice("periods must be positive"));
        }
        Ok(Lattice { sizes, periods })
    }

    /// Same size and period on every axis.
    pub fn cube(dim: usize, n: usize, period: f64) -> Result<Self, SpectralError> {
        Self::new(alloc::vec![n; dim], alloc::vec![period; dim])
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.periods[axis] / self.sizes[axis] as f64
    }

    /// Signed mode number of storage index `i` on `axis`.
    #[inline]
    pub fn signed_index(&self, axis: usize, i: usize) -> i64 {
        let n = self.sizes[axis];
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    #[inline]
    pub fn frequency(&self, axis: usize, i: usize) -> f64 {
        2.0 * core::f64::consts::PI * self.signed_index(axis, i) as f64 / self.periods[axis]
    }

    pub fn axis_frequencies(&self, axis: usize) -> Vec<f64> {
        (0..self.sizes[axis]).map(|i| self.frequency(axis, i)).collect()
    }

    /// Storage index of the mode with signed numbers `m`.
    pub fn mode_index(&self, m: &[i64]) -> Result<usize, SpectralError> {
        if m.len() != self.dim() {
            return Err(SpectralError::DimensionMismatch { expected: self.dim(), got: m.len() });
        }
        let mut flat = 0usize;
        for (axis, (&mj, &n)) in m.iter().zip(&self.sizes).enumerate() {
            let half = (n / 2) as i64;
            if mj < -half || mj >= half.max(1) {
                return Err(SpectralError::ModeOutOfRange { axis });
            }
            let i = if mj < 0 { (mj + n as i64) as usize } else { mj as usize };
            flat = flat * n + i;
        }
        Ok(flat)
    }

    /// Multi-index of a flat storage index.
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for axis in (0..self.dim()).rev() {
            let n = self.sizes[axis];
            out[axis] = flat % n;
            flat /= n;
        }
    }

    pub fn frequency_vector(&self, flat: usize, out: &mut [f64]) {
        let mut idx = alloc::vec![0usize; self.dim()];
        self.unravel(flat, &mut idx);
        for (axis, o) in out.iter_mut().enumerate() {
            *o = self.frequency(axis, idx[axis]);
        }
    }

    fn check_index(&self, idx: &RegularityIndex) -> Result<(), SpectralError> {
        if idx.dim() != self.dim() {
            return Err(SpectralError::DimensionMismatch { expected: self.dim(), got: idx.dim() });
        }
        Ok(())
    }

    /// Visit `(flat, base)` for every lattice point in storage order, where
    /// `base` is `b(ξ)` of the given anisotropy.
    pub fn for_each_base(&self, anisotropy: Anisotropy, mut f: impl FnMut(usize, f64)) {
        let k = self.dim();
        let contrib: Vec<Vec<f64>> = (0..k)
            .map(|axis| {
                let time = matches!(anisotropy, Anisotropy::ParabolicSplit { .. }) && axis + 1 == k;
                self.axis_frequencies(axis)
                    .into_iter()
                    .map(|w| if time { w.abs() } else { w * w })
                    .collect()
            })
            .collect();
        // Partial sums along the odometer keep the cost at O(1) per point.
        let mut idx = alloc::vec![0usize; k];
        let mut partial = alloc::vec![0.0f64; k + 1];
        for axis in 0..k {
            partial[axis + 1] = partial[axis] + contrib[axis][0];
        }
        let total = self.len();
        for flat in 0..total {
            f(flat, 1.0 + partial[k]);
            let mut axis = k;
            while axis > 0 {
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < self.sizes[axis] {
                    break;
                }
                idx[axis] = 0;
            }
            for a in axis..k {
                partial[a + 1] = partial[a] + contrib[a][idx[a]];
            }
        }
    }

    /// Visit `(flat, μ(ξ))` lazily.
    pub fn for_each_weight(&self, idx: &RegularityIndex, mut f: impl FnMut(usize, f64)) -> Result<(), SpectralError> {
        self.check_index(idx)?;
        self.for_each_base(idx.anisotropy(), |flat, b| f(flat, idx.eval_base(b)));
        Ok(())
    }

    /// Tabulated weights, refused above [`MAX_TABLE_POINTS`].
    pub fn weight_table(&self, idx: &RegularityIndex) -> Result<Vec<f64>, SpectralError> {
        if self.len() > MAX_TABLE_POINTS {
            return Err(SpectralError::TooLarge { points: self.len() });
        }
        let mut out = alloc::vec![0.0; self.len()];
        self.for_each_weight(idx, |flat, mu| out[flat] = mu)?;
        Ok(out)
    }
}

/// Fourier coefficients of a lattice function under the unitary DFT.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    lattice: Lattice,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(lattice: Lattice, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != lattice.len() {
            return Err(SpectralError::LengthMismatch { expected: lattice.len(), got: coeffs.len() });
        }
        Ok(SpectralField { lattice, coeffs })
    }

    pub fn zeros(lattice: Lattice) -> Self {
        let n = lattice.len();
        SpectralField { lattice, coeffs: alloc::vec![Complex64::new(0.0, 0.0); n] }
    }

    /// One nonzero coefficient at the mode with signed numbers `m`.
    pub fn single_mode(lattice: Lattice, m: &[i64], coeff: Complex64) -> Result<Self, SpectralError> {
        let flat = lattice.mode_index(m)?;
        let mut field = Self::zeros(lattice);
        field.coeffs[flat] = coeff;
        Ok(field)
    }

    /// Independent standard complex Gaussian coefficients.
    pub fn random<R: Rng + ?Sized>(lattice: Lattice, rng: &mut R) -> Self {
        let coeffs = (0..lattice.len())
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        SpectralField { lattice, coeffs }
    }

    pub fn random_seeded(lattice: Lattice, seed: u64) -> Self {
        Self::random(lattice, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        SpectralField { lattice: self.lattice.clone(), coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// Coefficient-wise `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self, SpectralError> {
        if self.lattice != other.lattice {
            return Err(SpectralError::LatticeMismatch);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| a * x + b * y).collect();
        Ok(SpectralField { lattice: self.lattice.clone(), coeffs })
    }

    /// Plain ℓ² norm of the coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `(Σ μ²(ξ)|û(ξ)|²)^{1/2}`.
pub fn norm(idx: &RegularityIndex, u: &SpectralField) -> Result<f64, SpectralError> {
    let mut acc = 0.0;
    let c = u.coeffs();
    u.lattice().for_each_weight(idx, |flat, mu| acc += mu * mu * c[flat].norm_sqr())?;
    Ok(acc.sqrt())
}

/// `Σ μ²(ξ) û(ξ) conj(v̂(ξ))`.
pub fn inner_product(idx: &RegularityIndex, u: &SpectralField, v: &SpectralField) -> Result<Complex64, SpectralError> {
    if u.lattice() != v.lattice() {
        return Err(SpectralError::LatticeMismatch);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let (a, b) = (u.coeffs(), v.coeffs());
    u.lattice().for_each_weight(idx, |flat, mu| acc += a[flat] * b[flat].conj() * (mu * mu))?;
    Ok(acc)
}

/// Operator norm of the identity `H^{from} → H^{to}` on the lattice:
/// `max μ_to/μ_from`.
pub fn embedding_constant(
    from: &RegularityIndex,
    to: &RegularityIndex,
    lattice: &Lattice,
) -> Result<f64, SpectralError> {
    if from.dim() != to.dim() {
        return Err(SpectralError::DimensionMismatch { expected: from.dim(), got: to.dim() });
    }
    if from.anisotropy() != to.anisotropy() {
        return Err(SpectralError::InvalidLattice("indices use different anisotropy"));
    }
    lattice.check_index(from)?;
    let mut worst = 0.0f64;
    lattice.for_each_base(from.anisotropy(), |_, b| {
        worst = worst.max(to.eval_base(b) / from.eval_base(b));
    });
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::FunctionParam;
    use core::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn frequencies_in_fft_order() {
        let lat = Lattice::new(alloc::vec![8], alloc::vec![2.0 * PI]).unwrap();
        let f = lat.axis_frequencies(0);
        assert_eq!(f, [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
        assert_eq!(lat.mode_index(&[-1]).unwrap(), 7);
        assert!(lat.mode_index(&[4]).is_err());
        assert!(Lattice::new(alloc::vec![6], alloc::vec![1.0]).is_err());
    }

    #[test]
    fn odometer_matches_direct_evaluation() {
        let lat = Lattice::new(alloc::vec![4, 8, 2], alloc::vec![1.0, 3.0, 0.5]).unwrap();
        let idx = RegularityIndex::parabolic(1.3, FunctionParam::log_power(&[1.0]), 3).unwrap();
        let table = lat.weight_table(&idx).unwrap();
        let mut xi = [0.0; 3];
        for (flat, mu) in table.iter().enumerate() {
            lat.frequency_vector(flat, &mut xi);
            assert!((idx.eval(&xi).unwrap() - mu).abs() <= 1e-13 * mu);
        }
    }

    #[test]
    fn single_mode_norm() {
        let lat = Lattice::new(alloc::vec![16, 16], alloc::vec![2.0 * PI, 2.0 * PI]).unwrap();
        let idx = RegularityIndex::parabolic(2.0, FunctionParam::one(), 2).unwrap();
        let u = SpectralField::single_mode(lat.clone(), &[3, 5], c(1.0)).unwrap();
        assert!((norm(&idx, &u).unwrap() - 15.0).abs() < 1e-12);
        assert_eq!(norm(&idx, &SpectralField::zeros(lat)).unwrap(), 0.0);
    }

    #[test]
    fn two_mode_parseval() {
        // s = 2 isotropic: μ = 1 + |ξ|², so modes (1,0) and (1,1) carry weights 2 and 3
        let lat = Lattice::cube(2, 8, 2.0 * PI).unwrap();
        let idx = RegularityIndex::isotropic(2.0, FunctionParam::one(), 2).unwrap();
        let a = SpectralField::single_mode(lat.clone(), &[1, 0], c(1.0)).unwrap();
        let b = SpectralField::single_mode(lat, &[1, 1], c(1.0)).unwrap();
        let u = a.combine(c(1.0), &b, c(1.0)).unwrap();
        assert!((norm(&idx, &u).unwrap() - 13f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn inner_product_single_modes() {
        let lat = Lattice::new(alloc::vec![8, 8], alloc::vec![1.0, 1.0]).unwrap();
        let idx = RegularityIndex::isotropic(1.5, FunctionParam::one(), 2).unwrap();
        let a = Complex64::new(1.0, 2.0);
        let b = Complex64::new(-0.5, 0.25);
        let u = SpectralField::single_mode(lat.clone(), &[1, 2], a).unwrap();
        let v = SpectralField::single_mode(lat.clone(), &[1, 2], b).unwrap();
        let w = SpectralField::single_mode(lat.clone(), &[2, 1], b).unwrap();
        assert_eq!(inner_product(&idx, &u, &w).unwrap(), Complex64::new(0.0, 0.0));
        let mut xi = [0.0; 2];
        lat.frequency_vector(lat.mode_index(&[1, 2]).unwrap(), &mut xi);
        let mu = idx.eval(&xi).unwrap();
        let got = inner_product(&idx, &u, &v).unwrap();
        assert!((got - a * b.conj() * mu * mu).norm() < 1e-12 * mu * mu);
    }

    #[test]
    fn embedding_constants() {
        let lat = Lattice::cube(2, 16, 4.0).unwrap();
        let s2 = RegularityIndex::isotropic(2.0, FunctionParam::one(), 2).unwrap();
        let s1 = s2.with_order(1.0);
        assert_eq!(embedding_constant(&s2, &s2, &lat).unwrap(), 1.0);
        assert!((embedding_constant(&s2, &s1, &lat).unwrap() - 1.0).abs() < 1e-15);
        let par = RegularityIndex::parabolic(1.0, FunctionParam::one(), 2).unwrap();
        assert!(embedding_constant(&s2, &par, &lat).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let lat = Lattice::cube(2, 8, 1.0).unwrap();
        let idx = RegularityIndex::isotropic(1.0, FunctionParam::one(), 3).unwrap();
        let u = SpectralField::zeros(lat);
        assert!(matches!(norm(&idx, &u), Err(SpectralError::DimensionMismatch { .. })));
    }

    #[test]
    fn lattice_config() {
        let lat: Lattice = serde_json::from_str(r#"{"sizes":[8,4],"periods":[1.0,2.0]}"#).unwrap();
        assert_eq!(lat.len(), 32);
        assert!(serde_json::from_str::<Lattice>(r#"{"sizes":[6],"periods":[1.0]}"#).is_err());
    }
}
