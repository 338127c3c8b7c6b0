//! Quotient (restriction) norms: the least `H^μ` norm over all lattice
//! fields whose samples agree with given values on a subdomain.
//!
//! Writing `S` for restriction to the mask, `F` for the unitary DFT and `M`
//! for multiplication by `μ`, the least-norm extension of data `d` is
//! `ŵ = M⁻² F S* λ` where `λ` solves `A λ = d` with `A = S F* M⁻² F S*`, and
//! the norm is `(λ* d)^{1/2}`. [`quotient_norm`] runs preconditioned CG on
//! this system without forming `A`. [`BoxQuotient`] factors it densely for
//! box-shaped masks, splitting off axes that the mask covers completely.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use hoermander_core::{Lattice, RegularityIndex, SpectralError, SpectralField};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dft::{self, Direction};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuotientError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid mask: {0}")]
    InvalidMask(&'static str),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("tolerance {0} outside (0, 1e-4]")]
    InvalidTolerance(f64),
    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("window {window} does not fit axis {axis} of size {size}")]
    BadWindow { axis: usize, window: usize, size: usize },
    #[error("factorization broke down")]
    Singular,
}

/// A proper nonempty subset of the physical grid of a lattice.
#[derive(Clone, Debug)]
pub struct SubdomainMask {
    lattice: Lattice,
    mask: Vec<bool>,
    points: Vec<usize>,
}

impl SubdomainMask {
    pub fn new(lattice: Lattice, mask: Vec<bool>) -> Result<Self, QuotientError> {
        if mask.len() != lattice.len() {
            return Err(QuotientError::LengthMismatch { expected: lattice.len(), got: mask.len() });
        }
        let points: Vec<usize> = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
        if points.is_empty() {
            return Err(QuotientError::InvalidMask("mask is empty"));
        }
        if points.len() == mask.len() {
            return Err(QuotientError::InvalidMask("mask covers the whole grid"));
        }
        Ok(SubdomainMask { lattice, mask, points })
    }

    /// Grid points with index `< windows[a]` along every axis `a`.
    pub fn window(lattice: Lattice, windows: &[usize]) -> Result<Self, QuotientError> {
        check_windows(&lattice, windows)?;
        let k = lattice.dim();
        let mut idx = vec![0usize; k];
        let mask = (0..lattice.len())
            .map(|flat| {
                lattice.unravel(flat, &mut idx);
                idx.iter().zip(windows).all(|(i, w)| i < w)
            })
            .collect();
        SubdomainMask::new(lattice, mask)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Flat indices of the masked points in storage order.
    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Values of a full physical array on the mask.
    pub fn restrict(&self, samples: &[Complex64]) -> Vec<Complex64> {
        self.points.iter().map(|&p| samples[p]).collect()
    }

    /// Zero outside the mask.
    pub fn zero_fill(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.lattice.len()];
        for (&p, &v) in self.points.iter().zip(values) {
            out[p] = v;
        }
        out
    }
}

fn check_windows(lattice: &Lattice, windows: &[usize]) -> Result<(), QuotientError> {
    if windows.len() != lattice.dim() {
        return Err(SpectralError::DimensionMismatch { expected: lattice.dim(), got: windows.len() }.into());
    }
    for (axis, (&w, &n)) in windows.iter().zip(lattice.sizes()).enumerate() {
        if w == 0 || w > n {
            return Err(QuotientError::BadWindow { axis, window: w, size: n });
        }
    }
    Ok(())
}

/// Stopping rule for [`quotient_norm`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOptions {
    /// Relative residual `‖d − Aλ‖/‖d‖` at which to stop.
    pub tol: f64,
    /// Iteration cap; `None` means `10·√m` for `m` masked points.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { tol: 1e-8, max_iter: None }
    }
}

#[derive(Clone, Debug)]
pub struct QuotientSolution {
    pub value: f64,
    pub iterations: usize,
    pub relative_residual: f64,
    /// Coefficients of the least-norm extension found.
    pub extension: SpectralField,
}

struct Operators<'a> {
    mask: &'a SubdomainMask,
    sizes: Vec<usize>,
    mu2: Vec<f64>,
}

impl Operators<'_> {
    /// `S F* D F S* x` with `D = μ^{2·power}`.
    fn apply(&self, x: &[Complex64], power: i32) -> Vec<Complex64> {
        let mut full = self.mask.zero_fill(x);
        dft::transform(&mut full, &self.sizes, Direction::Forward);
        for (c, m) in full.iter_mut().zip(&self.mu2) {
            *c *= m.powi(power);
        }
        dft::transform(&mut full, &self.sizes, Direction::Inverse);
        self.mask.restrict(&full)
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn l2(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Least `H^μ` norm of a lattice field matching `samples` on the mask.
///
/// CG runs on `Aλ = d` preconditioned by `S F* M² F S*`, the restriction of
/// the inverse of the unrestricted operator. The value returned is
/// `(Re λ*(d + r))^{1/2}` with `r = d − Aλ`, whose error is quadratic in
/// the error of `λ`.
pub fn quotient_norm(
    idx: &RegularityIndex,
    samples: &[Complex64],
    mask: &SubdomainMask,
    opts: CgOptions,
) -> Result<QuotientSolution, QuotientError> {
    if !(opts.tol > 0.0 && opts.tol <= 1e-4) {
        return Err(QuotientError::InvalidTolerance(opts.tol));
    }
    let m = mask.len();
    if samples.len() != m {
        return Err(QuotientError::LengthMismatch { expected: m, got: samples.len() });
    }
    let lattice = mask.lattice();
    let mu2: Vec<f64> = lattice.weight_table(idx)?.into_iter().map(|w| w * w).collect();
    let ops = Operators { mask, sizes: lattice.sizes().to_vec(), mu2 };
    let zero = Complex64::new(0.0, 0.0);
    let dnorm = l2(samples);
    if dnorm == 0.0 {
        return Ok(QuotientSolution {
            value: 0.0,
            iterations: 0,
            relative_residual: 0.0,
            extension: SpectralField::zeros(lattice.clone()),
        });
    }
    let cap = opts.max_iter.unwrap_or_else(|| (10.0 * (m as f64).sqrt()).ceil() as usize);
    let mut lambda = vec![zero; m];
    let mut r = samples.to_vec();
    let mut z = ops.apply(&r, 1);
    let mut p = z.clone();
    let mut rz = dot(&r, &z).re;
    let mut iterations = 0;
    let mut res = 1.0;
    while iterations < cap {
        let ap = ops.apply(&p, -1);
        let alpha = rz / dot(&p, &ap).re;
        for i in 0..m {
            lambda[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        iterations += 1;
        res = l2(&r) / dnorm;
        if res < opts.tol {
            break;
        }
        z = ops.apply(&r, 1);
        let rz_new = dot(&r, &z).re;
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..m {
            p[i] = z[i] + p[i] * beta;
        }
    }
    if res >= opts.tol {
        return Err(QuotientError::NoConvergence { iterations, residual: res });
    }
    // Recompute the residual so the value does not inherit drift from the recurrence.
    let al = ops.apply(&lambda, -1);
    let r_true: Vec<Complex64> = samples.iter().zip(&al).map(|(d, a)| d - a).collect();
    let sum: Vec<Complex64> = samples.iter().zip(&r_true).map(|(d, r)| d + r).collect();
    let value = dot(&lambda, &sum).re.max(0.0).sqrt();
    let mut ext = mask.zero_fill(&lambda);
    dft::transform(&mut ext, lattice.sizes(), Direction::Forward);
    for (c, m2) in ext.iter_mut().zip(&ops.mu2) {
        *c /= *m2;
    }
    Ok(QuotientSolution {
        value,
        iterations,
        relative_residual: l2(&r_true) / dnorm,
        extension: SpectralField::new(lattice.clone(), ext)?,
    })
}

/// Lower factor `L` with `L L* = A` for one block of a [`BoxQuotient`].
struct Factor {
    lower: DMatrix<Complex64>,
}

/// Dense quotient norms for the box window `{index < windows[a]}`.
///
/// Axes with `windows[a] == sizes[a]` are covered completely; along them the
/// problem splits into one block per frequency. Each block is factored from a
/// QR decomposition of `M⁻¹ F S*`, which squares the conditioning only
/// implicitly. Blocks are built on first use and cached, and blocks whose
/// frequencies share absolute values share a factor.
pub struct BoxQuotient {
    lattice: Lattice,
    idx: RegularityIndex,
    windows: Vec<usize>,
    full: Vec<usize>,
    reduced: Vec<usize>,
    cache: Mutex<BTreeMap<Vec<u64>, Arc<Factor>>>,
}

/// Blocks carrying less than this fraction of the data are skipped; they only
/// hold transform round-off for band-limited data.
pub const BLOCK_DROP: f64 = 1e-13;

impl BoxQuotient {
    pub fn new(idx: RegularityIndex, lattice: Lattice, windows: &[usize]) -> Result<Self, QuotientError> {
        check_windows(&lattice, windows)?;
        if idx.dim() != lattice.dim() {
            return Err(SpectralError::DimensionMismatch { expected: lattice.dim(), got: idx.dim() }.into());
        }
        let (full, reduced): (Vec<usize>, Vec<usize>) =
            (0..lattice.dim()).partition(|&a| windows[a] == lattice.sizes()[a]);
        if reduced.is_empty() {
            return Err(QuotientError::InvalidMask("window covers the whole grid"));
        }
        Ok(BoxQuotient { lattice, idx, windows: windows.to_vec(), full, reduced, cache: Mutex::new(BTreeMap::new()) })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn index(&self) -> &RegularityIndex {
        &self.idx
    }

    pub fn windows(&self) -> &[usize] {
        &self.windows
    }

    /// Number of window points.
    pub fn len(&self) -> usize {
        self.windows.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn block_len(&self) -> usize {
        self.reduced.iter().map(|&a| self.windows[a]).product()
    }

    fn factor(&self, full_modes: &[usize]) -> Result<Arc<Factor>, QuotientError> {
        let key: Vec<u64> = self
            .full
            .iter()
            .zip(full_modes)
            .map(|(&a, &i)| self.lattice.frequency(a, i).abs().to_bits())
            .collect();
        let mut cache = self.cache.lock().expect("quotient cache poisoned");
        if let Some(f) = cache.get(&key) {
            return Ok(f.clone());
        }
        let f = Arc::new(self.build_factor(full_modes)?);
        cache.insert(key, f.clone());
        Ok(f)
    }

    fn build_factor(&self, full_modes: &[usize]) -> Result<Factor, QuotientError> {
        let k = self.lattice.dim();
        let sizes: Vec<usize> = self.reduced.iter().map(|&a| self.lattice.sizes()[a]).collect();
        let wins: Vec<usize> = self.reduced.iter().map(|&a| self.windows[a]).collect();
        let rows: usize = sizes.iter().product();
        let cols: usize = wins.iter().product();
        let scale = 1.0 / (rows as f64).sqrt();
        let mut xi = vec![0.0; k];
        for (&a, &i) in self.full.iter().zip(full_modes) {
            xi[a] = self.lattice.frequency(a, i);
        }
        let mut ridx = vec![0usize; sizes.len()];
        let mut cidx = vec![0usize; wins.len()];
        let mut cstar = DMatrix::<Complex64>::zeros(rows, cols);
        for row in 0..rows {
            unravel(row, &sizes, &mut ridx);
            for (j, &a) in self.reduced.iter().enumerate() {
                xi[a] = self.lattice.frequency(a, ridx[j]);
            }
            let inv_mu = scale / self.idx.eval_base(self.idx.base(&xi));
            for col in 0..cols {
                unravel(col, &wins, &mut cidx);
                let mut phase = 0.0;
                for j in 0..sizes.len() {
                    let m = self.lattice.signed_index(self.reduced[j], ridx[j]) as f64;
                    phase -= 2.0 * PI * m * cidx[j] as f64 / sizes[j] as f64;
                }
                cstar[(row, col)] = Complex64::from_polar(inv_mu, phase);
            }
        }
        let r = cstar.qr().r();
        if (0..cols).any(|i| r[(i, i)].norm() == 0.0 || !r[(i, i)].is_finite()) {
            return Err(QuotientError::Singular);
        }
        Ok(Factor { lower: r.adjoint() })
    }

    /// Quotient norm of window values (row-major over the window shape).
    pub fn norm(&self, values: &[Complex64]) -> Result<f64, QuotientError> {
        Ok(self.norm_sqr(values)?.sqrt())
    }

    pub fn norm_sqr(&self, values: &[Complex64]) -> Result<f64, QuotientError> {
        if values.len() != self.len() {
            return Err(QuotientError::LengthMismatch { expected: self.len(), got: values.len() });
        }
        let mut data = values.to_vec();
        for &a in &self.full {
            dft::transform_axis(&mut data, &self.windows, a, Direction::Forward);
        }
        let total: f64 = data.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return Ok(0.0);
        }
        let full_sizes: Vec<usize> = self.full.iter().map(|&a| self.windows[a]).collect();
        let blocks: usize = full_sizes.iter().product();
        let bl = self.block_len();
        let mut fidx = vec![0usize; full_sizes.len()];
        let mut widx = vec![0usize; self.windows.len()];
        let mut block = DVector::<Complex64>::zeros(bl);
        let wins: Vec<usize> = self.reduced.iter().map(|&a| self.windows[a]).collect();
        let mut ridx = vec![0usize; wins.len()];
        let mut acc = 0.0;
        for b in 0..blocks {
            unravel(b, &full_sizes, &mut fidx);
            for (j, &a) in self.full.iter().enumerate() {
                widx[a] = fidx[j];
            }
            let mut part = 0.0;
            for i in 0..bl {
                unravel(i, &wins, &mut ridx);
                for (j, &a) in self.reduced.iter().enumerate() {
                    widx[a] = ridx[j];
                }
                block[i] = data[ravel(&widx, &self.windows)];
                part += block[i].norm_sqr();
            }
            if part <= BLOCK_DROP * BLOCK_DROP * total {
                continue;
            }
            let f = self.factor(&fidx)?;
            let z = f.lower.solve_lower_triangular(&block).ok_or(QuotientError::Singular)?;
            acc += z.norm_squared();
        }
        Ok(acc)
    }

    /// `W` with `W*W` the Gram matrix of the quotient norm on window values.
    /// Only for windows whose covered axes are single points.
    pub fn whitener(&self) -> Result<DMatrix<Complex64>, QuotientError> {
        if self.full.iter().any(|&a| self.windows[a] > 1) {
            return Err(QuotientError::InvalidMask("whitener needs a mask without covered axes"));
        }
        let f = self.factor(&vec![0; self.full.len()])?;
        let n = f.lower.nrows();
        f.lower.solve_lower_triangular(&DMatrix::identity(n, n)).ok_or(QuotientError::Singular)
    }
}

pub(crate) fn unravel(mut flat: usize, sizes: &[usize], out: &mut [usize]) {
    for a in (0..sizes.len()).rev() {
        out[a] = flat % sizes[a];
        flat /= sizes[a];
    }
}

pub(crate) fn ravel(idx: &[usize], sizes: &[usize]) -> usize {
    idx.iter().zip(sizes).fold(0, |acc, (&i, &n)| acc * n + i)
}
