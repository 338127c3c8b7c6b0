//! Cauchy data at `t = 0`, the trace `R`, its right inverse `T`, and the
//! projector onto compatible data.
//!
//! `T v = F⁻¹[β(⟨ξ⟩² t) Σ_k v̂_k(ξ) t^k / k!]` with `⟨ξ⟩² = 1 + |ξ|²`. The
//! time axis is always the last one.

use hoermander_core::spectra::norm;
use hoermander_core::{compat_count, CutoffProfile, FunctionParam, Lattice, RegularityIndex, SpectralError, SpectralField};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::compat::{boundary_targets, boundary_traces, compute_v, CompatCheckError, CompatOptions};
use crate::cylinder::{Cylinder, ProblemData};
use crate::dft::{self, Direction};
use crate::grid::{fornberg, Axis, GridError, GridFn};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("need at least one Cauchy component")]
    Empty,
    #[error("time grid of {have} points cannot resolve derivative order {order}")]
    InsufficientTimeResolution { order: usize, have: usize },
    #[error("cutoff support {support} reaches half the time period {half}")]
    CutoffWrapsAround { support: f64, half: f64 },
    #[error("spatial lattices differ")]
    LatticeMismatch,
    #[error("projector needs r = {expected} conditions at s0 = {s0}, got {got}")]
    CountMismatch { s0: f64, expected: usize, got: usize },
    #[error("lift at boundary frequency {eta} is unresolved (condition {cond:.2e})")]
    UnresolvedLift { eta: f64, cond: f64 },
    #[error("weight: {0}")]
    Weight(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Compat(#[from] CompatCheckError),
}

/// `(v_0, …, v_{r−1})` on one spatial lattice, as Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct CauchyData {
    lattice: Lattice,
    components: Vec<SpectralField>,
}

impl CauchyData {
    pub fn new(components: Vec<SpectralField>) -> Result<Self, TraceError> {
        let lattice = components.first().ok_or(TraceError::Empty)?.lattice().clone();
        if components.iter().any(|c| c.lattice() != &lattice) {
            return Err(TraceError::LatticeMismatch);
        }
        Ok(CauchyData { lattice, components })
    }

    /// `r` independent Gaussian components.
    pub fn random(lattice: Lattice, r: usize, seed: u64) -> Result<Self, TraceError> {
        let comps = (0..r)
            .map(|k| {
                let mut rng = hoermander_core::trial::trial_rng(seed, k as u64);
                SpectralField::random(lattice.clone(), &mut rng)
            })
            .collect();
        Self::new(comps)
    }

    pub fn r(&self) -> usize {
        self.components.len()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn components(&self) -> &[SpectralField] {
        &self.components
    }

    /// `(Σ_k ‖v_k‖²_{s−2k−1;φ})^{1/2}`, the norm of `⊕ H^{s−2k−1;φ}`.
    pub fn norm(&self, s: f64, phi: &FunctionParam) -> Result<f64, TraceError> {
        let mut acc = 0.0;
        for (k, c) in self.components.iter().enumerate() {
            let idx = RegularityIndex::isotropic(s - 2.0 * k as f64 - 1.0, phi.clone(), self.lattice.dim())
                .map_err(|e| TraceError::Weight(e.to_string()))?;
            acc += norm(&idx, c)?.powi(2);
        }
        Ok(acc.sqrt())
    }

    /// Largest componentwise relative deviation from `other`.
    pub fn max_relative_error(&self, other: &CauchyData) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| {
                let diff: f64 = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm_sqr()).sum();
                diff.sqrt() / a.l2_norm().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}

/// How `∂_t^k` at `t = 0` is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceMode {
    /// Differentiate the time series spectrally.
    Spectral,
    /// Centered finite differences over `2p + 1` points, exact on polynomials
    /// of degree `≤ 2p`.
    Stencil { p: usize },
}

fn spatial_lattice(lattice: &Lattice) -> Result<Lattice, SpectralError> {
    let k = lattice.dim() - 1;
    Lattice::new(lattice.sizes()[..k].to_vec(), lattice.periods()[..k].to_vec())
}

/// `(∂_t^k u|_{t=0})_{k<r}` of a field on a space × time lattice.
pub fn trace_r(u: &SpectralField, r: usize, mode: TraceMode) -> Result<CauchyData, TraceError> {
    let lat = u.lattice();
    if r == 0 {
        return Err(TraceError::Empty);
    }
    if lat.dim() < 2 {
        return Err(SpectralError::DimensionMismatch { expected: 2, got: lat.dim() }.into());
    }
    let ta = lat.dim() - 1;
    let nt = lat.sizes()[ta];
    let spatial = spatial_lattice(lat)?;
    let ns = spatial.len();
    let weights: Vec<Vec<Complex64>> = match mode {
        TraceMode::Spectral => (0..r)
            .map(|k| {
                (0..nt)
                    .map(|i| Complex64::new(0.0, lat.frequency(ta, i)).powu(k as u32) / (nt as f64).sqrt())
                    .collect()
            })
            .collect(),
        TraceMode::Stencil { p } => {
            if 2 * p + 1 > nt || r > 2 * p + 1 {
                return Err(TraceError::InsufficientTimeResolution { order: r - 1, have: nt });
            }
            // Samples at t_j, j = −p..p, come from the inverse DFT row of each
            // frequency; fold the stencil into one weight per frequency.
            let dt = lat.spacing(ta);
            let xs: Vec<f64> = (0..=2 * p).map(|j| (j as f64 - p as f64) * dt).collect();
            let w = fornberg(0.0, &xs, r - 1);
            (0..r)
                .map(|k| {
                    (0..nt)
                        .map(|i| {
                            let om = lat.frequency(ta, i);
                            xs.iter()
                                .zip(&w[k])
                                .map(|(t, wj)| Complex64::from_polar(*wj, om * t))
                                .sum::<Complex64>()
                                / (nt as f64).sqrt()
                        })
                        .collect()
                })
                .collect()
        }
    };
    let comps = weights
        .iter()
        .map(|w| {
            let coeffs = (0..ns)
                .map(|s| (0..nt).map(|i| u.coeffs()[s * nt + i] * w[i]).sum())
                .collect();
            SpectralField::new(spatial.clone(), coeffs)
        })
        .collect::<Result<Vec<_>, _>>()?;
    CauchyData::new(comps)
}

/// `β(⟨ξ⟩² t) Σ_k c_k t^k / k!`.
fn profile(beta: &CutoffProfile, bracket2: f64, c: &[Complex64], t: f64) -> Complex64 {
    let b = beta.eval(bracket2 * t);
    if b == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let mut term = 1.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, ck) in c.iter().enumerate() {
        if k > 0 {
            term *= t / k as f64;
        }
        acc += ck * term;
    }
    acc * b
}

fn bracket2(lattice: &Lattice, flat: usize, xi: &mut [f64]) -> f64 {
    lattice.frequency_vector(flat, xi);
    1.0 + xi.iter().map(|x| x * x).sum::<f64>()
}

/// `T v` on `target`, whose spatial section must be the lattice of `v`. Time
/// samples use signed `t ∈ [−L_t/2, L_t/2)`.
pub fn lift_t(v: &CauchyData, beta: &CutoffProfile, target: &Lattice) -> Result<SpectralField, TraceError> {
    let ta = target.dim() - 1;
    if spatial_lattice(target)? != v.lattice {
        return Err(TraceError::LatticeMismatch);
    }
    let half = 0.5 * target.periods()[ta];
    if beta.support_radius() >= half {
        return Err(TraceError::CutoffWrapsAround { support: beta.support_radius(), half });
    }
    let nt = target.sizes()[ta];
    let dt = target.spacing(ta);
    let times: Vec<f64> = (0..nt).map(|i| target.signed_index(ta, i) as f64 * dt).collect();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); target.len()];
    let mut xi = vec![0.0; v.lattice.dim()];
    let mut c = vec![Complex64::new(0.0, 0.0); v.r()];
    for s in 0..v.lattice.len() {
        let b2 = bracket2(&v.lattice, s, &mut xi);
        for (k, comp) in v.components.iter().enumerate() {
            c[k] = comp.coeffs()[s];
        }
        let row = &mut coeffs[s * nt..(s + 1) * nt];
        for (i, t) in times.iter().enumerate() {
            row[i] = profile(beta, b2, &c, *t);
        }
        dft::transform_axis(row, &[nt], 0, Direction::Forward);
    }
    Ok(SpectralField::new(target.clone(), coeffs)?)
}

/// `T v` restricted to `Π = ℝ^{n−1} × [0, τ]`, sampled at `t_j = j τ/(n_t − 1)`:
/// physical values on the spatial grid times the time window.
pub fn lift_t_strip(v: &CauchyData, beta: &CutoffProfile, tau: f64, n_t: usize) -> Result<GridFn, TraceError> {
    if n_t < 2 || !(tau > 0.0) {
        return Err(TraceError::InsufficientTimeResolution { order: 0, have: n_t });
    }
    let lat = &v.lattice;
    let dt = tau / (n_t - 1) as f64;
    let ns = lat.len();
    let mut spec = vec![Complex64::new(0.0, 0.0); ns * n_t];
    let mut xi = vec![0.0; lat.dim()];
    let mut c = vec![Complex64::new(0.0, 0.0); v.r()];
    for s in 0..ns {
        let b2 = bracket2(lat, s, &mut xi);
        for (k, comp) in v.components.iter().enumerate() {
            c[k] = comp.coeffs()[s];
        }
        for j in 0..n_t {
            spec[s * n_t + j] = profile(beta, b2, &c, j as f64 * dt);
        }
    }
    let mut sizes = lat.sizes().to_vec();
    sizes.push(n_t);
    for a in 0..lat.dim() {
        dft::transform_axis(&mut spec, &sizes, a, Direction::Inverse);
    }
    let mut axes: Vec<Axis> = (0..lat.dim()).map(|a| Axis::periodic(lat.sizes()[a], lat.periods()[a])).collect();
    axes.push(Axis::window(n_t, dt));
    Ok(GridFn::new(axes, spec)?)
}

/// Cauchy data of a field sampled on spatial grid × time window, by one-sided
/// differences with the given accuracy (at least `k + 4` for order `k`).
pub fn trace_window(u: &GridFn, r: usize, accuracy: usize) -> Result<CauchyData, TraceError> {
    let ta = u.axes().len() - 1;
    let spatial = u.axes()[..ta].to_vec();
    let lattice = Lattice::new(
        spatial.iter().map(|a| a.len).collect(),
        spatial.iter().map(|a| a.spacing * a.len as f64).collect(),
    )?;
    let comps = (0..r)
        .map(|k| {
            let d = u.derivative_at(ta, 0, k, accuracy.max(k + 4))?;
            Ok(SpectralField::new(lattice.clone(), dft::forward(d.values(), lattice.sizes()))?)
        })
        .collect::<Result<Vec<_>, TraceError>>()?;
    CauchyData::new(comps)
}

/// Above this condition number a per-frequency lift is reported unresolved.
pub const LIFT_COND_LIMIT: f64 = 1e8;

/// Residual blocks below this fraction of the traces they compare are
/// round-off and are left alone.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// Time profiles `β(⟨η⟩² t) t^j / j!` on `axis`, and the matrix of their
/// discrete traces `M[k][j] = R_k φ_j`.
fn lift_block(axis: Axis, beta: &CutoffProfile, b2: f64, r: usize, accuracy: usize) -> Result<(Vec<Vec<Complex64>>, DMatrix<Complex64>), GridError> {
    let times: Vec<f64> = (0..axis.len)
        .map(|i| if axis.periodic && 2 * i >= axis.len { (i as f64 - axis.len as f64) * axis.spacing } else { axis.coord(i) })
        .collect();
    let mut basis = Vec::with_capacity(r);
    let mut m = DMatrix::zeros(r, r);
    for j in 0..r {
        let mut c = vec![Complex64::new(0.0, 0.0); r];
        c[j] = Complex64::new(1.0, 0.0);
        let vals: Vec<Complex64> = times.iter().map(|t| profile(beta, b2, &c, *t)).collect();
        let g = GridFn::new(vec![axis], vals.clone())?;
        for k in 0..r {
            m[(k, j)] = g.derivative_at(0, 0, k, accuracy.max(k + 4))?.values()[0];
        }
        basis.push(vals);
    }
    Ok((basis, m))
}

/// `P(f, g, h) = (f, g*, h)` with `g* = g + T(c)`, where `c_k` are the
/// residuals `v_k|Γ − ∂_t^k g|Γ` (or `B_k − …`) of the `r` conditions valid at
/// `s0`. The lift is corrected per boundary frequency so that the discrete
/// traces of `g*` satisfy the conditions exactly.
pub fn lemma2_projector(
    cyl: &Cylinder,
    data: &ProblemData,
    s0: f64,
    r: usize,
    beta: &CutoffProfile,
    opts: CompatOptions,
) -> Result<ProblemData, TraceError> {
    let expected = compat_count(s0, cyl.problem().boundary_kind()).map_err(CompatCheckError::from)?;
    if r != expected {
        return Err(TraceError::CountMismatch { s0, expected, got: r });
    }
    if r == 0 {
        return Ok(data.clone());
    }
    let v = compute_v(cyl, &data.f, &data.h, r - 1, opts.accuracy)?;
    let targets = boundary_targets(cyl, &v, r, opts.accuracy)?;
    let traces = boundary_traces(&data.g, r, opts.accuracy)?;
    let mut g_new = Vec::with_capacity(2);
    for side in 0..2 {
        let g = &data.g[side];
        let residual: Vec<GridFn> = (0..r)
            .map(|k| targets[k][side].add_aligned(&traces[k][side].scaled(Complex64::new(-1.0, 0.0))))
            .collect::<Result<_, _>>()?;
        let scale = (0..r)
            .map(|k| targets[k][side].max_abs().max(traces[k][side].max_abs()))
            .fold(0.0, f64::max);
        g_new.push(g.add_aligned(&correction(g, &residual, scale, beta, opts.accuracy)?)?);
    }
    let g1 = g_new.pop().expect("two sides");
    let g0 = g_new.pop().expect("two sides");
    Ok(ProblemData { f: data.f.clone(), g: [g0, g1], h: data.h.clone() })
}

/// Field on the grid of `g` whose discrete traces are `residual`.
fn correction(g: &GridFn, residual: &[GridFn], scale: f64, beta: &CutoffProfile, accuracy: usize) -> Result<GridFn, TraceError> {
    let r = residual.len();
    let ta = g.axes().len() - 1;
    let t_axis = g.axes()[ta];
    let nt = t_axis.len;
    // Boundary-frequency representation of the residuals.
    let (ny, period) = if ta == 1 { (g.axes()[0].len, g.axes()[0].spacing * g.axes()[0].len as f64) } else { (1, 1.0) };
    let hat: Vec<Vec<Complex64>> = residual
        .iter()
        .map(|c| if ny > 1 { dft::forward(c.values(), &[ny]) } else { c.values().to_vec() })
        .collect();
    // Sample maxima bound the per-frequency coefficients by √ny times as much.
    let floor = RESIDUAL_FLOOR * scale * (ny as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); ny * nt];
    for e in 0..ny {
        let rhs = DVector::from_iterator(r, hat.iter().map(|h| h[e]));
        if rhs.norm() <= floor {
            continue;
        }
        let m_idx = if 2 * e >= ny { e as f64 - ny as f64 } else { e as f64 };
        let eta = 2.0 * std::f64::consts::PI * m_idx / period;
        let (basis, m) = lift_block(t_axis, beta, 1.0 + eta * eta, r, accuracy)?;
        let sv = m.clone().svd(false, false).singular_values;
        let cond = sv.max() / sv.min();
        if !(cond <= LIFT_COND_LIMIT) {
            return Err(TraceError::UnresolvedLift { eta, cond });
        }
        let a = m.lu().solve(&rhs).ok_or(TraceError::UnresolvedLift { eta, cond })?;
        for i in 0..nt {
            out[e * nt + i] = (0..r).map(|j| a[j] * basis[j][i]).sum();
        }
    }
    if ny > 1 {
        dft::transform_axis(&mut out, &[ny, nt], 0, Direction::Inverse);
    }
    Ok(GridFn::new(g.axes().to_vec(), out)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::check_compatibility;
    use crate::problem::{Boundary, Geometry, ParabolicProblem};

    fn lattices() -> (Lattice, Lattice) {
        (Lattice::new(vec![64], vec![64.0]).unwrap(), Lattice::new(vec![64, 1024], vec![64.0, 2.5]).unwrap())
    }

    #[test]
    fn trace_of_lift_is_identity() {
        let (space, full) = lattices();
        let beta = CutoffProfile::default();
        for r in 1..=3 {
            let v = CauchyData::random(space.clone(), r, 11 + r as u64).unwrap();
            let u = lift_t(&v, &beta, &full).unwrap();
            let back = trace_r(&u, r, TraceMode::Stencil { p: 4 }).unwrap();
            assert!(v.max_relative_error(&back) < 1e-9, "r = {r}: {}", v.max_relative_error(&back));
        }
    }

    #[test]
    fn trace_of_time_monomials() {
        let lat = Lattice::new(vec![8, 64], vec![1.0, 2.0]).unwrap();
        // u = a(x) and u = a(x) sin(πt): traces (a, 0, 0) and (0, πa, 0).
        let a = SpectralField::single_mode(lat.clone(), &[1, 0], Complex64::new(1.0, 0.0)).unwrap();
        let tr = trace_r(&a, 3, TraceMode::Spectral).unwrap();
        assert!((tr.components()[0].coeffs()[1] - 0.125).norm() < 1e-14);
        assert!(tr.components()[1].l2_norm() < 1e-14 && tr.components()[2].l2_norm() < 1e-14);
        let s = SpectralField::single_mode(lat.clone(), &[1, 1], Complex64::new(0.5, 0.0))
            .unwrap()
            .combine(Complex64::new(0.0, -1.0), &SpectralField::single_mode(lat, &[1, -1], Complex64::new(0.5, 0.0)).unwrap(), Complex64::new(0.0, 1.0))
            .unwrap();
        let tr = trace_r(&s, 3, TraceMode::Spectral).unwrap();
        assert!(tr.components()[0].l2_norm() < 1e-14);
        let want = std::f64::consts::PI / 8.0;
        assert!((tr.components()[1].coeffs()[1].norm() - want).abs() < 1e-13);
    }

    #[test]
    fn wrap_around_is_an_error() {
        let space = Lattice::new(vec![8], vec![8.0]).unwrap();
        let short = Lattice::new(vec![8, 64], vec![8.0, 2.0]).unwrap();
        let v = CauchyData::random(space, 1, 1).unwrap();
        assert!(matches!(lift_t(&v, &CutoffProfile::default(), &short), Err(TraceError::CutoffWrapsAround { .. })));
    }

    #[test]
    fn strip_lift_has_exact_window_traces() {
        let (space, _) = lattices();
        let beta = CutoffProfile::default();
        for r in 1..=3 {
            let v = CauchyData::random(space.clone(), r, 5).unwrap();
            // Eight points span 7Δt = 0.044, inside the flat region 0.5/(1 + π²) at the top frequency.
            let u = lift_t_strip(&v, &beta, 0.5, 81).unwrap();
            let back = trace_window(&u, r, 4).unwrap();
            assert!(v.max_relative_error(&back) < 1e-9, "r = {r}: {}", v.max_relative_error(&back));
        }
    }

    #[test]
    fn projector_fixes_compatible_and_repairs_offset() {
        let p = ParabolicProblem::heat(Geometry::PeriodicStrip, 0.5, Boundary::Dirichlet).unwrap();
        let cyl = Cylinder::new(p, 16).unwrap();
        let d = cyl.apply_lambda(&cyl.trial(4, 0, 4).unwrap()).unwrap();
        let beta = CutoffProfile::default();
        let opts = CompatOptions::default();
        let pd = lemma2_projector(&cyl, &d, 4.0, 2, &beta, opts).unwrap();
        let diff = pd.g[0].add_aligned(&d.g[0].scaled(Complex64::new(-1.0, 0.0))).unwrap();
        assert!(diff.max_abs() < 1e-9 * d.g[0].max_abs());
        let offset = GridFn::from_fn(d.g[1].axes().to_vec(), |c| Complex64::new(1.0 + c[1], 0.0));
        let bad = ProblemData { g: [d.g[0].clone(), d.g[1].add_aligned(&offset).unwrap()], ..d.clone() };
        assert!(!check_compatibility(&cyl, &bad.f, &bad.g, &bad.h, 4.0, opts).unwrap().pass);
        let fixed = lemma2_projector(&cyl, &bad, 4.0, 2, &beta, opts).unwrap();
        assert!(check_compatibility(&cyl, &fixed.f, &fixed.g, &fixed.h, 4.0, opts).unwrap().pass);
        let twice = lemma2_projector(&cyl, &fixed, 4.0, 2, &beta, opts).unwrap();
        let diff = twice.g[1].add_aligned(&fixed.g[1].scaled(Complex64::new(-1.0, 0.0))).unwrap();
        assert!(diff.max_abs() < 1e-9 * fixed.g[1].max_abs());
        assert!(lemma2_projector(&cyl, &bad, 4.0, 1, &beta, opts).is_err());
    }
}
