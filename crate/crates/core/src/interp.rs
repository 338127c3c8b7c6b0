//! Interpolation with a function parameter between multiplier spaces.
//!
//! Every pair here is diagonal in the Fourier basis, so the generating
//! operator `J` is the multiplier `j = μ₁/μ₀` and `ψ(J)` is `ψ(j)`.

// Inherent float methods shadow the trait whenever std is linked.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::{
    collections::BTreeMap,
    string::{String, ToString},
    vec::Vec,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::{build_psi, reiterate, FunctionParam, InterpParam, ParamError};
use crate::spectra::{Lattice, SpectralError, SpectralField};
use crate::trial::trial_rng;
use crate::weights::{RegularityIndex, WeightError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InterpError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("weights must be positive and finite")]
    NonPositiveWeight,
    #[error("projector is not idempotent: |P(Pv) - Pv| / |Pv| = {defect:e}")]
    ProjectorMismatch { defect: f64 },
    #[error("vector is not in the range of the projector (defect {defect:e})")]
    NotInSubspace { defect: f64 },
    #[error("Gram matrix of the subspace is not positive definite")]
    Singular,
    #[error("need at least {0} inputs")]
    TooFew(usize),
}

/// A pair of diagonal weights `μ₀ ≤ C·μ₁` over a common index set.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalPair {
    mu0: Vec<f64>,
    mu1: Vec<f64>,
}

impl DiagonalPair {
    pub fn new(mu0: Vec<f64>, mu1: Vec<f64>) -> Result<Self, InterpError> {
        if mu0.len() != mu1.len() {
            return Err(InterpError::DimensionMismatch { expected: mu0.len(), got: mu1.len() });
        }
        if mu0.iter().chain(&mu1).any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(InterpError::NonPositiveWeight);
        }
        Ok(DiagonalPair { mu0, mu1 })
    }

    /// Orthogonal sum: weights concatenated block by block.
    pub fn direct_sum(pairs: &[DiagonalPair]) -> Self {
        let mut mu0 = Vec::new();
        let mut mu1 = Vec::new();
        for p in pairs {
            mu0.extend_from_slice(&p.mu0);
            mu1.extend_from_slice(&p.mu1);
        }
        DiagonalPair { mu0, mu1 }
    }

    pub fn len(&self) -> usize {
        self.mu0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu0.is_empty()
    }

    pub fn mu0(&self) -> &[f64] {
        &self.mu0
    }

    pub fn mu1(&self) -> &[f64] {
        &self.mu1
    }

    /// Values of the generating multiplier `j = μ₁/μ₀`.
    pub fn generating(&self) -> Vec<f64> {
        self.mu0.iter().zip(&self.mu1).map(|(a, b)| b / a).collect()
    }

    /// Weights of `X_ψ`: `μ₀·ψ(j)`.
    pub fn interpolated_weights(&self, psi: &InterpParam) -> Vec<f64> {
        self.mu0.iter().zip(&self.mu1).map(|(a, b)| a * psi.eval(b / a)).collect()
    }

    /// The pair `[X_α, X_β]` built from this one.
    pub fn reweighted(&self, alpha: &InterpParam, beta: &InterpParam) -> Result<Self, InterpError> {
        Self::new(self.interpolated_weights(alpha), self.interpolated_weights(beta))
    }

    pub fn interpolated_norm(&self, psi: &InterpParam, coeffs: &[Complex64]) -> Result<f64, InterpError> {
        if coeffs.len() != self.len() {
            return Err(InterpError::DimensionMismatch { expected: self.len(), got: coeffs.len() });
        }
        let mut acc = 0.0;
        for ((a, b), c) in self.mu0.iter().zip(&self.mu1).zip(coeffs) {
            let w = a * psi.eval(b / a);
            acc += w * w * c.norm_sqr();
        }
        Ok(acc.sqrt())
    }

    /// `sup μ₀/μ₁`, the norm of the embedding `X₁ → X₀`.
    pub fn embedding_constant(&self) -> f64 {
        self.mu0.iter().zip(&self.mu1).map(|(a, b)| a / b).fold(0.0, f64::max)
    }
}

/// Weighted ℓ² norm with explicit weights.
pub fn weighted_norm(weights: &[f64], coeffs: &[Complex64]) -> f64 {
    weights.iter().zip(coeffs).map(|(w, c)| w * w * c.norm_sqr()).sum::<f64>().sqrt()
}

/// Two regularity indices on a common lattice.
#[derive(Clone, Debug)]
pub struct AdmissiblePair {
    x0: RegularityIndex,
    x1: RegularityIndex,
    lattice: Lattice,
}

impl AdmissiblePair {
    pub fn new(x0: RegularityIndex, x1: RegularityIndex, lattice: Lattice) -> Result<Self, InterpError> {
        for idx in [&x0, &x1] {
            if idx.dim() != lattice.dim() {
                return Err(InterpError::DimensionMismatch { expected: lattice.dim(), got: idx.dim() });
            }
        }
        if x0.anisotropy() != x1.anisotropy() {
            return Err(InterpError::Spectral(SpectralError::InvalidLattice("indices use different anisotropy")));
        }
        Ok(AdmissiblePair { x0, x1, lattice })
    }

    pub fn x0(&self) -> &RegularityIndex {
        &self.x0
    }

    pub fn x1(&self) -> &RegularityIndex {
        &self.x1
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Tabulated weights of both spaces.
    pub fn diagonal(&self) -> Result<DiagonalPair, InterpError> {
        DiagonalPair::new(self.lattice.weight_table(&self.x0)?, self.lattice.weight_table(&self.x1)?)
    }

    pub fn generating_multiplier(&self) -> Result<GeneratingMultiplier, InterpError> {
        Ok(GeneratingMultiplier { lattice: self.lattice.clone(), values: self.diagonal()?.generating() })
    }

    fn check_field(&self, u: &SpectralField) -> Result<(), InterpError> {
        if u.lattice() != &self.lattice {
            return Err(InterpError::Spectral(SpectralError::LatticeMismatch));
        }
        Ok(())
    }
}

/// `J` as a multiplier on the lattice.
#[derive(Clone, Debug)]
pub struct GeneratingMultiplier {
    lattice: Lattice,
    values: Vec<f64>,
}

impl GeneratingMultiplier {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn apply(&self, u: &SpectralField) -> Result<SpectralField, InterpError> {
        if u.lattice() != &self.lattice {
            return Err(InterpError::Spectral(SpectralError::LatticeMismatch));
        }
        let coeffs = u.coeffs().iter().zip(&self.values).map(|(c, j)| c * j).collect();
        Ok(SpectralField::new(self.lattice.clone(), coeffs)?)
    }
}

/// `‖ψ(J)u‖_{X₀} = (Σ μ₀²ψ²(j)|û|²)^{1/2}`, evaluated without tabulating weights.
pub fn interpolated_norm(pair: &AdmissiblePair, psi: &InterpParam, u: &SpectralField) -> Result<f64, InterpError> {
    pair.check_field(u)?;
    let (x0, x1) = (&pair.x0, &pair.x1);
    let c = u.coeffs();
    let mut acc = 0.0;
    pair.lattice.for_each_base(x0.anisotropy(), |flat, b| {
        let m0 = x0.eval_base(b);
        let w = m0 * psi.eval(x1.eval_base(b) / m0);
        acc += w * w * c[flat].norm_sqr();
    });
    Ok(acc.sqrt())
}

/// JSON-friendly record of one verification sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub proposition: String,
    pub parameters: BTreeMap<String, f64>,
    pub labels: BTreeMap<String, String>,
    pub trials: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl VerificationReport {
    fn new(proposition: &str, trials: usize, seed: u64, tolerance: f64) -> Self {
        VerificationReport {
            proposition: proposition.to_string(),
            parameters: BTreeMap::new(),
            labels: BTreeMap::new(),
            trials,
            max_deviation: 0.0,
            tolerance,
            seed,
            notes: Vec::new(),
            pass: false,
        }
    }

    fn finish(mut self, max_deviation: f64) -> Self {
        self.max_deviation = max_deviation;
        self.pass = max_deviation <= self.tolerance;
        self
    }
}

fn rel_dev(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Largest relative gap between two weighted norms over random fields.
fn sweep(w_a: &[f64], w_b: &[f64], trials: usize, seed: u64) -> f64 {
    let mut worst = 0.0f64;
    let mut coeffs = alloc::vec![Complex64::new(0.0, 0.0); w_a.len()];
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        crate::trial::fill_gaussian(&mut rng, &mut coeffs);
        worst = worst.max(rel_dev(weighted_norm(w_a, &coeffs), weighted_norm(w_b, &coeffs)));
    }
    worst
}

/// Tolerance used for the interpolation identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance used for the sum and reiteration identities.
pub const EXACT_TOL: f64 = 1e-12;

/// Interpolation of anisotropic Sobolev spaces with the parameter from
/// [`build_psi`]: `[H^{s₀−λ}, H^{s₁−λ}]_ψ` against `H^{s−λ;φ}`.
#[allow(clippy::too_many_arguments)]
pub fn verify_prop_aniso(
    s0: f64,
    s: f64,
    s1: f64,
    lambda: f64,
    phi: &FunctionParam,
    lattice: &Lattice,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport, InterpError> {
    let make = |order: f64, p: FunctionParam| RegularityIndex::parabolic(order, p, lattice.dim());
    let mut rep = verify_orders(
        "interpolation-anisotropic",
        make(s0 - lambda, FunctionParam::one())?,
        make(s1 - lambda, FunctionParam::one())?,
        make(s - lambda, phi.clone())?,
        (s0, s, s1, lambda),
        phi,
        lattice,
        trials,
        seed,
    )?;
    if s0 < 0.0 || lambda > s0 {
        rep.notes.push(
            "domain case (cylinder or its lateral surface) would need 0 <= s0 and lambda <= s0; \
             the full-lattice identity checked here does not"
                .to_string(),
        );
    }
    Ok(rep)
}

/// Isotropic counterpart of [`verify_prop_aniso`].
#[allow(clippy::too_many_arguments)]
pub fn verify_prop_iso(
    s0: f64,
    s: f64,
    s1: f64,
    lambda: f64,
    phi: &FunctionParam,
    lattice: &Lattice,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport, InterpError> {
    let make = |order: f64, p: FunctionParam| RegularityIndex::isotropic(order, p, lattice.dim());
    verify_orders(
        "interpolation-isotropic",
        make(s0 - lambda, FunctionParam::one())?,
        make(s1 - lambda, FunctionParam::one())?,
        make(s - lambda, phi.clone())?,
        (s0, s, s1, lambda),
        phi,
        lattice,
        trials,
        seed,
    )
}

#[allow(clippy::too_many_arguments)]
fn verify_orders(
    name: &str,
    x0: RegularityIndex,
    x1: RegularityIndex,
    target: RegularityIndex,
    (s0, s, s1, lambda): (f64, f64, f64, f64),
    phi: &FunctionParam,
    lattice: &Lattice,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport, InterpError> {
    let psi = build_psi(s0, s, s1, phi)?;
    let pair = AdmissiblePair::new(x0, x1, lattice.clone())?.diagonal()?;
    let interp = pair.interpolated_weights(&psi);
    let direct = lattice.weight_table(&target)?;
    let mut rep = VerificationReport::new(name, trials, seed, IDENTITY_TOL);
    for (k, v) in [("s0", s0), ("s", s), ("s1", s1), ("lambda", lambda)] {
        rep.parameters.insert(k.to_string(), v);
    }
    rep.labels.insert("phi".to_string(), phi.label());
    rep.labels.insert("lattice".to_string(), alloc::format!("{:?}", lattice.sizes()));
    Ok(rep.finish(sweep(&interp, &direct, trials, seed)))
}

/// The interpolated norm of an orthogonal sum against the ℓ²-combination of
/// the componentwise interpolated norms, on random block fields.
pub fn verify_orthogonal_sum(
    pairs: &[DiagonalPair],
    psi: &InterpParam,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport, InterpError> {
    if pairs.len() < 2 {
        return Err(InterpError::TooFew(2));
    }
    let total = DiagonalPair::direct_sum(pairs);
    let mut worst = 0.0f64;
    let mut coeffs = alloc::vec![Complex64::new(0.0, 0.0); total.len()];
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        crate::trial::fill_gaussian(&mut rng, &mut coeffs);
        let whole = total.interpolated_norm(psi, &coeffs)?;
        let mut acc = 0.0;
        let mut offset = 0;
        for p in pairs {
            let part = p.interpolated_norm(psi, &coeffs[offset..offset + p.len()])?;
            acc += part * part;
            offset += p.len();
        }
        worst = worst.max(rel_dev(whole, acc.sqrt()));
    }
    let mut rep = VerificationReport::new("orthogonal-sum", trials, seed, EXACT_TOL);
    rep.parameters.insert("blocks".to_string(), pairs.len() as f64);
    rep.labels.insert("psi".to_string(), psi.label());
    Ok(rep.finish(worst))
}

/// `[X_α, X_β]_ψ` computed by interpolating twice, against `X_ω` with
/// `ω = reiterate(α, β, ψ)`.
pub fn verify_reiteration(
    alpha: &InterpParam,
    beta: &InterpParam,
    psi: &InterpParam,
    pair: &DiagonalPair,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport, InterpError> {
    let omega = reiterate(alpha, beta, psi)?;
    let twice = pair.reweighted(alpha, beta)?.interpolated_weights(psi);
    let once = pair.interpolated_weights(&omega);
    let mut rep = VerificationReport::new("reiteration", trials, seed, EXACT_TOL);
    rep.labels.insert("alpha".to_string(), alpha.label());
    rep.labels.insert("beta".to_string(), beta.label());
    rep.labels.insert("psi".to_string(), psi.label());
    Ok(rep.finish(sweep(&twice, &once, trials, seed)))
}

/// A linear projector on coefficient vectors.
pub trait Projector {
    fn project(&self, v: &[Complex64]) -> Vec<Complex64>;
}

impl<F> Projector for F
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    fn project(&self, v: &[Complex64]) -> Vec<Complex64> {
        self(v)
    }
}

fn vnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormal basis (columns) of the range of `P`, from `P` applied to the
/// unit vectors. Fails if `P∘P ≠ P` on those columns or on `extra`.
pub fn projector_range_basis(
    p: &dyn Projector,
    n: usize,
    extra: &[&[Complex64]],
) -> Result<DMatrix<Complex64>, InterpError> {
    let zero = Complex64::new(0.0, 0.0);
    let mut cols = DMatrix::from_element(n, n, zero);
    let mut e = alloc::vec![zero; n];
    let check = |v: &[Complex64]| -> Result<Vec<Complex64>, InterpError> {
        let pv = p.project(v);
        if pv.len() != n {
            return Err(InterpError::DimensionMismatch { expected: n, got: pv.len() });
        }
        let ppv = p.project(&pv);
        let scale = vnorm(&pv);
        let diff: Vec<Complex64> = ppv.iter().zip(&pv).map(|(a, b)| a - b).collect();
        let defect = if scale > 0.0 { vnorm(&diff) / scale } else { vnorm(&diff) };
        if defect > 1e-10 {
            return Err(InterpError::ProjectorMismatch { defect });
        }
        Ok(pv)
    };
    for i in 0..n {
        e[i] = Complex64::new(1.0, 0.0);
        let pv = check(&e)?;
        e[i] = zero;
        for (r, v) in pv.into_iter().enumerate() {
            cols[(r, i)] = v;
        }
    }
    for v in extra {
        check(v)?;
    }
    orthonormal_range(cols)
}

/// Orthonormal basis of the column space, rank decided relative to the
/// largest singular value.
pub fn orthonormal_range(m: DMatrix<Complex64>) -> Result<DMatrix<Complex64>, InterpError> {
    let n = m.nrows();
    let svd = m.svd(true, false);
    let u = svd.u.ok_or(InterpError::Singular)?;
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-9 * smax.max(1e-300))
        .collect();
    let mut q = DMatrix::from_element(n, keep.len(), Complex64::new(0.0, 0.0));
    for (j, &i) in keep.iter().enumerate() {
        q.set_column(j, &u.column(i));
    }
    Ok(q)
}

/// Generalized eigen-decomposition of `(G₁, G₀)` on a subspace, ready to
/// evaluate `‖ψ(J_Y)y‖_{Y₀}` for many `y`.
#[derive(Clone, Debug)]
pub struct SubspacePair {
    basis: DMatrix<Complex64>,
    /// `L⁻¹` applied then `Vᴴ`: maps coordinates `c` to `z = Vᴴ Lᴴ c`.
    to_spectral: DMatrix<Complex64>,
    /// Eigenvalues of `J_Y`, i.e. square roots of the generalized eigenvalues.
    j_values: Vec<f64>,
}

impl SubspacePair {
    /// `g0`, `g1` are Hermitian Gram matrices of the ambient spaces; `basis`
    /// has orthonormal columns spanning the subspace.
    pub fn new(g0: &DMatrix<Complex64>, g1: &DMatrix<Complex64>, basis: DMatrix<Complex64>) -> Result<Self, InterpError> {
        let b_h = basis.adjoint();
        let h0 = hermitize(&b_h * g0 * &basis);
        let h1 = hermitize(&b_h * g1 * &basis);
        let chol = h0.cholesky().ok_or(InterpError::Singular)?;
        let l = chol.l();
        let l_inv = l.clone().try_inverse().ok_or(InterpError::Singular)?;
        let c = hermitize(&l_inv * h1 * l_inv.adjoint());
        let eig = c.symmetric_eigen();
        let j_values = eig.eigenvalues.iter().map(|&lam| lam.max(0.0).sqrt()).collect();
        let to_spectral = eig.eigenvectors.adjoint() * l.adjoint();
        Ok(SubspacePair { basis, to_spectral, j_values })
    }

    pub fn basis(&self) -> &DMatrix<Complex64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn j_values(&self) -> &[f64] {
        &self.j_values
    }

    /// Coordinates of `y` in the basis, with the relative distance of `y`
    /// from the subspace.
    pub fn coordinates(&self, y: &[Complex64]) -> (DVector<Complex64>, f64) {
        let yv = DVector::from_column_slice(y);
        let c = self.basis.adjoint() * &yv;
        let resid = (&yv - &self.basis * &c).norm();
        let scale = yv.norm();
        (c, if scale > 0.0 { resid / scale } else { resid })
    }

    /// Spectral coordinates `z` of a subspace element given its basis coordinates.
    pub fn spectral(&self, c: &DVector<Complex64>) -> DVector<Complex64> {
        &self.to_spectral * c
    }

    /// `‖ψ(J_Y)y‖_{Y₀}` for `y` in the subspace.
    pub fn norm(&self, psi: &InterpParam, y: &[Complex64]) -> Result<f64, InterpError> {
        let (c, defect) = self.coordinates(y);
        if defect > 1e-8 {
            return Err(InterpError::NotInSubspace { defect });
        }
        let z = self.spectral(&c);
        let acc: f64 = z
            .iter()
            .zip(&self.j_values)
            .map(|(zi, &j)| {
                let w = psi.eval(j);
                w * w * zi.norm_sqr()
            })
            .sum();
        Ok(acc.sqrt())
    }
}

fn hermitize(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let h = m.adjoint();
    (m + h).map(|c| c * 0.5)
}

/// Interpolated norm of `u` in `[Y₀, Y₁]_ψ`, where `Y₀ = P(X₀)` and
/// `Y₁ = X₁ ∩ Y₀` for the diagonal pair and projector `P`.
pub fn interpolate_subspace_norm(
    pair: &DiagonalPair,
    psi: &InterpParam,
    projector: &dyn Projector,
    u: &[Complex64],
) -> Result<f64, InterpError> {
    let n = pair.len();
    if u.len() != n {
        return Err(InterpError::DimensionMismatch { expected: n, got: u.len() });
    }
    let basis = projector_range_basis(projector, n, &[u])?;
    let g0 = DMatrix::from_diagonal(&DVector::from_iterator(n, pair.mu0.iter().map(|m| Complex64::new(m * m, 0.0))));
    let g1 = DMatrix::from_diagonal(&DVector::from_iterator(n, pair.mu1.iter().map(|m| Complex64::new(m * m, 0.0))));
    SubspacePair::new(&g0, &g1, basis)?.norm(psi, u)
}
