//! Desk-scale experiments on model problems: two-sided ratios
//! `‖Λu‖/‖u‖` under refinement, a collocation round trip on the interval,
//! and half-interpolated norms at a jump point of the compatibility count.

use hoermander_core::interp::projector_range_basis;
use hoermander_core::{
    compat_count, in_jump_set, CutoffProfile, FunctionParam, InterpError, InterpParam, SpectralField, SubspacePair,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compat::{CompatCheckError, CompatOptions};
use crate::cylinder::{cell_scale, Cylinder, CylinderError, NormSet, ProblemData};
use crate::grid::GridFn;
use crate::problem::{Geometry, ParabolicProblem};
use crate::quotient::QuotientError;
use crate::traces::{lemma2_projector, TraceError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error("invalid case: {0}")]
    Invalid(String),
    #[error(transparent)]
    Cylinder(#[from] CylinderError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Compat(#[from] CompatCheckError),
    #[error("least-squares solve failed: {0}")]
    Solve(&'static str),
}

impl From<QuotientError> for BenchError {
    fn from(e: QuotientError) -> Self {
        BenchError::Cylinder(e.into())
    }
}

/// Drift tolerance between the two finest resolutions.
pub const DRIFT_LIMIT: f64 = 2.0;

/// Round-trip tolerance in the target norm.
pub const ROUND_TRIP_TOL: f64 = 1e-6;

fn default_trials() -> usize {
    30
}

fn default_phis() -> Vec<FunctionParam> {
    vec![FunctionParam::one()]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchCase {
    pub problem: ParabolicProblem,
    pub s_grid: Vec<f64>,
    #[serde(default = "default_phis")]
    pub phi_list: Vec<FunctionParam>,
    #[serde(default = "default_trials")]
    pub trial_count: usize,
    pub resolutions: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Trial band; a quarter of the coarsest resolution when absent.
    #[serde(default)]
    pub band: Option<usize>,
    /// Allow orders in the jump set.
    #[serde(default)]
    pub jump_study: bool,
    /// Trials used for the round trip on the finest interval grid; 0 skips it.
    #[serde(default)]
    pub round_trip_trials: usize,
}

fn check_ladder(resolutions: &[usize]) -> Result<(), BenchError> {
    if resolutions.is_empty() {
        return Err(BenchError::Invalid("empty resolution ladder".into()));
    }
    if resolutions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::Invalid("resolutions must increase".into()));
    }
    Ok(())
}

impl BenchCase {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.trial_count < 30 {
            return Err(BenchError::Invalid(format!("trial_count {} < 30", self.trial_count)));
        }
        check_ladder(&self.resolutions)?;
        if self.s_grid.is_empty() || self.phi_list.is_empty() {
            return Err(BenchError::Invalid("empty s_grid or phi_list".into()));
        }
        let kind = self.problem.boundary_kind();
        for &s in &self.s_grid {
            if !(s > 2.0) || !s.is_finite() {
                return Err(BenchError::Invalid(format!("order {s} must exceed 2")));
            }
            if in_jump_set(s, kind) && !self.jump_study {
                return Err(BenchError::Invalid(format!("order {s} lies in the jump set")));
            }
        }
        for phi in &self.phi_list {
            phi.check_positive().map_err(|e| BenchError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn band(&self) -> usize {
        self.band.unwrap_or(self.resolutions[0] / 4)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsoRow {
    pub geometry: Geometry,
    pub l: u8,
    pub s: f64,
    pub phi: String,
    pub resolution: usize,
    pub trials: usize,
    pub lower_ratio: f64,
    pub upper_ratio: f64,
    pub condition: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriftRow {
    pub s: f64,
    pub phi: String,
    pub resolutions: [usize; 2],
    pub conditions: [f64; 2],
    pub drift: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundTripRow {
    pub s: f64,
    pub phi: String,
    pub resolution: usize,
    pub trials: usize,
    pub rank: usize,
    pub unknowns: usize,
    pub max_relative_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsomorphismReport {
    pub seed: u64,
    pub band: usize,
    pub rows: Vec<IsoRow>,
    pub drift: Vec<DriftRow>,
    pub round_trip: Vec<RoundTripRow>,
    pub pass: bool,
}

struct TrialData {
    window: Vec<Complex64>,
    data: ProblemData,
}

fn trial_data(cyl: &Cylinder, seed: u64, count: usize, band: usize) -> Result<Vec<(SpectralField, TrialData)>, BenchError> {
    (0..count as u64)
        .into_par_iter()
        .map(|t| {
            let u = cyl.trial(seed, t, band)?;
            let td = TrialData { window: cyl.window_values(&u)?, data: cyl.apply_lambda(&u)? };
            Ok((u, td))
        })
        .collect()
}

fn ratios(norms: &NormSet, trials: &[(SpectralField, TrialData)]) -> Result<Vec<f64>, BenchError> {
    trials
        .par_iter()
        .map(|(_, td)| Ok(norms.target(&td.data)? / norms.u.norm(&td.window)?))
        .collect()
}

/// Two-sided ratio sweep over `(s, φ, resolution)`.
pub fn estimate_isomorphism(case: &BenchCase) -> Result<IsomorphismReport, BenchError> {
    case.validate()?;
    let band = case.band();
    let l = case.problem.boundary_kind().l();
    let geometry = case.problem.geometry();
    let finest = *case.resolutions.last().expect("validated");
    let rt_trials = if geometry == Geometry::Interval { case.round_trip_trials.min(case.trial_count) } else { 0 };
    let mut rows = Vec::new();
    let mut round_trip = Vec::new();
    for &n in &case.resolutions {
        let cyl = Cylinder::new(case.problem.clone(), n)?;
        let trials = trial_data(&cyl, case.seed, case.trial_count, band)?;
        let solver = if n == finest && rt_trials > 0 { Some(CollocationSolver::new(&cyl, n / 4)?) } else { None };
        let solved: Vec<ProblemData> = match &solver {
            Some(sv) => trials[..rt_trials]
                .par_iter()
                .map(|(_, td)| {
                    let u = sv.solve(&cyl, &td.data)?;
                    Ok(cyl.apply_lambda(&u)?.combine(Complex64::new(1.0, 0.0), &td.data, Complex64::new(-1.0, 0.0))
                        .map_err(CylinderError::from)?)
                })
                .collect::<Result<_, BenchError>>()?,
            None => Vec::new(),
        };
        for &s in &case.s_grid {
            for phi in &case.phi_list {
                let norms = cyl.norms(s, phi)?;
                let r = ratios(&norms, &trials)?;
                let lower = r.iter().cloned().fold(f64::INFINITY, f64::min);
                let upper = r.iter().cloned().fold(0.0, f64::max);
                let condition = upper / lower;
                rows.push(IsoRow {
                    geometry,
                    l,
                    s,
                    phi: phi.label(),
                    resolution: n,
                    trials: r.len(),
                    lower_ratio: lower,
                    upper_ratio: upper,
                    condition,
                    pass: lower > 0.0 && condition.is_finite(),
                });
                if let Some(sv) = &solver {
                    let errs: Vec<f64> = solved
                        .par_iter()
                        .zip(&trials[..rt_trials])
                        .map(|(diff, (_, td))| Ok(norms.target(diff)? / norms.target(&td.data)?))
                        .collect::<Result<_, BenchError>>()?;
                    let max_relative_error = errs.iter().cloned().fold(0.0, f64::max);
                    round_trip.push(RoundTripRow {
                        s,
                        phi: phi.label(),
                        resolution: n,
                        trials: errs.len(),
                        rank: sv.rank,
                        unknowns: sv.modes.len(),
                        max_relative_error,
                        pass: max_relative_error <= ROUND_TRIP_TOL,
                    });
                }
            }
        }
    }
    let drift = drift_rows(&rows, &case.resolutions);
    let pass = rows.iter().all(|r| r.pass) && drift.iter().all(|d| d.pass) && round_trip.iter().all(|r| r.pass);
    Ok(IsomorphismReport { seed: case.seed, band, rows, drift, round_trip, pass })
}

fn drift_rows(rows: &[IsoRow], resolutions: &[usize]) -> Vec<DriftRow> {
    if resolutions.len() < 2 {
        return Vec::new();
    }
    let (a, b) = (resolutions[resolutions.len() - 2], resolutions[resolutions.len() - 1]);
    rows.iter()
        .filter(|r| r.resolution == a)
        .filter_map(|ra| {
            let rb = rows.iter().find(|r| r.resolution == b && r.s == ra.s && r.phi == ra.phi)?;
            let drift = (ra.condition / rb.condition).max(rb.condition / ra.condition);
            Some(DriftRow {
                s: ra.s,
                phi: ra.phi.clone(),
                resolutions: [a, b],
                conditions: [ra.condition, rb.condition],
                drift,
                pass: drift.is_finite() && drift < DRIFT_LIMIT,
            })
        })
        .collect()
}

/// Least-squares preimage of data under `Λ` among box modes `|m| ≤ band`,
/// matching data on the window grid.
pub struct CollocationSolver {
    modes: Vec<usize>,
    svd: nalgebra::SVD<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    rank: usize,
    eps: f64,
}

impl CollocationSolver {
    pub fn new(cyl: &Cylinder, band: usize) -> Result<Self, BenchError> {
        let lat = cyl.lattice();
        let sizes = lat.sizes().to_vec();
        if sizes.iter().any(|&s| 2 * band >= s) {
            return Err(CylinderError::BandTooWide { band, n: cyl.resolution() }.into());
        }
        let mut modes = Vec::new();
        let mut idx = vec![0usize; sizes.len()];
        for flat in 0..lat.len() {
            lat.unravel(flat, &mut idx);
            if (0..sizes.len()).all(|a| lat.signed_index(a, idx[a]).unsigned_abs() as usize <= band) {
                modes.push(flat);
            }
        }
        let cols: Vec<Vec<Complex64>> = modes
            .par_iter()
            .map(|&flat| {
                let mut c = vec![Complex64::new(0.0, 0.0); lat.len()];
                c[flat] = Complex64::new(1.0, 0.0);
                let u = SpectralField::new(lat.clone(), c).map_err(CylinderError::from)?;
                Ok(cyl.pack(&cyl.apply_lambda(&u)?)?)
            })
            .collect::<Result<_, BenchError>>()?;
        let m = DMatrix::from_fn(cyl.data_len(), modes.len(), |i, j| cols[j][i]);
        let svd = m.svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let eps = 1e-13 * smax;
        let rank = svd.singular_values.iter().filter(|&&v| v > eps).count();
        Ok(CollocationSolver { modes, svd, rank, eps })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn unknowns(&self) -> usize {
        self.modes.len()
    }

    pub fn solve(&self, cyl: &Cylinder, data: &ProblemData) -> Result<SpectralField, BenchError> {
        let d = DVector::from_vec(cyl.pack(data)?);
        let x = self.svd.solve(&d, self.eps).map_err(BenchError::Solve)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); cyl.lattice().len()];
        for (&flat, v) in self.modes.iter().zip(x.iter()) {
            coeffs[flat] = *v;
        }
        Ok(SpectralField::new(cyl.lattice().clone(), coeffs).map_err(CylinderError::from)?)
    }
}

fn default_eps() -> Vec<f64> {
    vec![0.1, 0.2]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JumpCase {
    pub problem: ParabolicProblem,
    pub s_star: f64,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trial_count: usize,
    pub resolutions: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub band: Option<usize>,
    #[serde(default)]
    pub phi: FunctionParam,
    #[serde(default)]
    pub cutoff: CutoffProfile,
}

impl JumpCase {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.problem.geometry() != Geometry::Interval {
            return Err(BenchError::Invalid("jump study runs on the interval".into()));
        }
        if !in_jump_set(self.s_star, self.problem.boundary_kind()) {
            return Err(BenchError::Invalid(format!("{} is not a jump point", self.s_star)));
        }
        if self.eps.len() != 2 || self.eps[0] == self.eps[1] || self.eps.iter().any(|&e| !(e > 0.0 && e < 0.5)) {
            return Err(BenchError::Invalid("need two distinct eps in (0, 1/2)".into()));
        }
        if self.trial_count < 2 {
            return Err(BenchError::Invalid("need at least two trials".into()));
        }
        check_ladder(&self.resolutions)
    }

    pub fn band(&self) -> usize {
        self.band.unwrap_or(self.resolutions[0] / 4)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JumpRow {
    pub resolution: usize,
    pub dim: usize,
    pub subspace_dim: usize,
    pub trials: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `C` with every ratio in `[1/C, C]`.
    pub envelope: f64,
    /// Truncated norm of a compatible trial scaled to the ramp's ambient norm.
    pub compatible_norm: f64,
    /// Truncated norm of the ramp `g = t`, which violates the new condition.
    pub violating_norm: f64,
    /// The part of `violating_norm` from the component off the compatible
    /// subspace; it carries the divergence.
    pub violating_outside: f64,
    pub t_min: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JumpStudyReport {
    pub s_star: f64,
    pub eps: Vec<f64>,
    pub r: usize,
    pub seed: u64,
    pub rows: Vec<JumpRow>,
    pub envelope_drift: f64,
    pub violating_growth: bool,
    pub pass: bool,
}

/// Gram matrix of the target norm at order `s` on packed window data.
pub fn target_gram(cyl: &Cylinder, s: f64, phi: &FunctionParam) -> Result<DMatrix<Complex64>, BenchError> {
    let norms = cyl.norms(s, phi)?;
    let gram = |q: &crate::quotient::BoxQuotient| -> Result<DMatrix<Complex64>, BenchError> {
        let w = q.whitener()?;
        let c = cell_scale(q).powi(2);
        Ok((w.adjoint() * w).map(|v| v * c))
    };
    let wg = gram(&norms.g)?;
    let blocks = [gram(&norms.f)?, wg.clone(), wg, gram(&norms.h)?];
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut g = DMatrix::zeros(n, n);
    let mut at = 0;
    for b in &blocks {
        g.view_mut((at, at), (b.nrows(), b.ncols())).copy_from(b);
        at += b.nrows();
    }
    Ok(g)
}

/// Squared `θ = 1/2` K-method norm, split into the part from the component
/// off the subspace and the part from the component in it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfNormSqr {
    pub outside: f64,
    pub inside: f64,
}

impl HalfNormSqr {
    pub fn total(&self) -> f64 {
        self.outside + self.inside
    }
}

/// K-method norm of `y` for the pair (ambient space with Gram `g0`, span of
/// `basis` with Gram `g1`), with the `t`-integral cut at `t_min`. The
/// outside part grows like `t_min^{-1}`.
pub fn truncated_half_norm_sqr(
    g0: &DMatrix<Complex64>,
    g1: &DMatrix<Complex64>,
    basis: &DMatrix<Complex64>,
    y: &[Complex64],
    t_min: f64,
) -> Result<HalfNormSqr, BenchError> {
    let bh = basis.adjoint();
    let a0 = &bh * g0 * basis;
    let a1 = &bh * g1 * basis;
    let l = a0.cholesky().ok_or(InterpError::Singular)?.l();
    let l_inv = l.try_inverse().ok_or(InterpError::Singular)?;
    let c = &l_inv * a1 * l_inv.adjoint();
    let c = (&c + c.adjoint()).map(|v| v * 0.5);
    let eig = c.symmetric_eigen();
    let yv = DVector::from_column_slice(y);
    let g0y = g0 * &yv;
    let total = yv.dotc(&g0y).re;
    let w = eig.eigenvectors.adjoint() * (&l_inv * (&bh * &g0y));
    let inside: f64 = w.iter().map(|v| v.norm_sqr()).sum();
    // Below round-off, `y` counts as inside the subspace.
    let outside = if total - inside <= 1e-12 * total { 0.0 } else { total - inside };
    let mut acc = 0.0;
    for (wi, &lam) in w.iter().zip(eig.eigenvalues.iter()) {
        let q = lam.max(0.0).sqrt();
        acc += wi.norm_sqr() * q * (std::f64::consts::FRAC_PI_2 - (q * t_min).atan());
    }
    let c = 2.0 / std::f64::consts::PI;
    Ok(HalfNormSqr { outside: c * outside / t_min, inside: c * acc })
}

/// Half-interpolated norms at a jump point for two values of `ε`.
pub fn jump_study(case: &JumpCase) -> Result<JumpStudyReport, BenchError> {
    case.validate()?;
    let kind = case.problem.boundary_kind();
    let r = compat_count(case.s_star + case.eps[0], kind).map_err(CompatCheckError::from)?;
    let band = case.band();
    let opts = CompatOptions::default();
    let half = InterpParam::power(0.5);
    let mut rows = Vec::new();
    for &n in &case.resolutions {
        let cyl = Cylinder::new(case.problem.clone(), n)?;
        let dim = cyl.data_len();
        let project = |v: &[Complex64]| -> Result<Vec<Complex64>, BenchError> {
            let d = lemma2_projector(&cyl, &cyl.unpack(v)?, case.s_star + case.eps[0], r, &case.cutoff, opts)?;
            Ok(cyl.pack(&d)?)
        };
        let failure = std::sync::Mutex::new(None);
        let p = |v: &[Complex64]| -> Vec<Complex64> {
            project(v).unwrap_or_else(|e| {
                failure.lock().expect("poisoned").get_or_insert(e);
                vec![Complex64::new(0.0, 0.0); v.len()]
            })
        };
        let basis = projector_range_basis(&p, dim, &[]);
        if let Some(e) = failure.into_inner().expect("poisoned") {
            return Err(e);
        }
        let basis = basis?;
        let trials: Vec<Vec<Complex64>> = (0..case.trial_count as u64)
            .into_par_iter()
            .map(|t| {
                let u = cyl.trial(case.seed, t, band)?;
                project(&cyl.pack(&cyl.apply_lambda(&u)?)?)
            })
            .collect::<Result<_, _>>()?;
        let grams: Vec<[DMatrix<Complex64>; 2]> = case
            .eps
            .iter()
            .map(|&e| Ok([target_gram(&cyl, case.s_star - e, &case.phi)?, target_gram(&cyl, case.s_star + e, &case.phi)?]))
            .collect::<Result<_, BenchError>>()?;
        let pairs: Vec<SubspacePair> = grams
            .iter()
            .map(|[g0, g1]| SubspacePair::new(g0, g1, basis.clone()))
            .collect::<Result<_, _>>()?;
        let norms: Vec<[f64; 2]> = trials
            .par_iter()
            .map(|y| Ok([pairs[0].norm(&half, y)?, pairs[1].norm(&half, y)?]))
            .collect::<Result<_, BenchError>>()?;
        let ratio: Vec<f64> = norms.iter().map(|[a, b]| a / b).collect();
        let min_ratio = ratio.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_ratio = ratio.iter().cloned().fold(0.0, f64::max);
        let envelope = max_ratio.max(1.0 / min_ratio);
        let j_max = pairs[0].j_values().iter().cloned().fold(0.0, f64::max);
        let t_min = 1.0 / j_max;
        let [g0, g1] = &grams[0];
        let violating = time_ramp(&cyl)?;
        let size = |y: &[Complex64]| {
            let v = DVector::from_column_slice(y);
            v.dotc(&(g0 * &v)).re.sqrt()
        };
        let k = Complex64::new(size(&violating) / size(&trials[0]), 0.0);
        let compatible: Vec<Complex64> = trials[0].iter().map(|v| v * k).collect();
        let comp = truncated_half_norm_sqr(g0, g1, &basis, &compatible, t_min)?;
        let viol = truncated_half_norm_sqr(g0, g1, &basis, &violating, t_min)?;
        rows.push(JumpRow {
            resolution: n,
            dim,
            subspace_dim: basis.ncols(),
            trials: ratio.len(),
            min_ratio,
            max_ratio,
            envelope,
            compatible_norm: comp.total().sqrt(),
            violating_norm: viol.total().sqrt(),
            violating_outside: viol.outside.sqrt(),
            t_min,
        });
    }
    let envelope_drift = match rows.len() {
        0 | 1 => 1.0,
        k => {
            let (a, b) = (rows[k - 2].envelope, rows[k - 1].envelope);
            (a / b).max(b / a)
        }
    };
    let violating_growth = rows.len() > 1 && rows.windows(2).all(|w| w[1].violating_norm > w[0].violating_norm);
    let pass = rows.iter().all(|r| r.envelope.is_finite() && r.compatible_norm.is_finite())
        && envelope_drift.is_finite()
        && envelope_drift < DRIFT_LIMIT;
    Ok(JumpStudyReport {
        s_star: case.s_star,
        eps: case.eps.clone(),
        r,
        seed: case.seed,
        rows,
        envelope_drift,
        violating_growth,
        pass,
    })
}

/// Packed data `(0, t, 0)`: the zeroth condition holds, the first fails by one.
fn time_ramp(cyl: &Cylinder) -> Result<Vec<Complex64>, BenchError> {
    let mut d = cyl.unpack(&vec![Complex64::new(0.0, 0.0); cyl.data_len()])?;
    for g in d.g.iter_mut() {
        *g = GridFn::from_fn(g.axes().to_vec(), |c| Complex64::new(*c.last().expect("time axis"), 0.0));
    }
    Ok(cyl.pack(&d)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Boundary;

    fn case(geometry: Geometry, s_grid: Vec<f64>, phis: Vec<FunctionParam>) -> BenchCase {
        BenchCase {
            problem: ParabolicProblem::heat(geometry, 0.5, Boundary::Dirichlet).unwrap(),
            s_grid,
            phi_list: phis,
            trial_count: 30,
            resolutions: vec![16],
            seed: 3,
            band: Some(4),
            jump_study: false,
            round_trip_trials: 0,
        }
    }

    #[test]
    fn validation() {
        let mut c = case(Geometry::Interval, vec![3.5], vec![FunctionParam::one()]);
        assert!(c.validate().is_err());
        c.jump_study = true;
        assert!(c.validate().is_ok());
        c.trial_count = 10;
        assert!(c.validate().is_err());
        let c = BenchCase { resolutions: vec![32, 16], ..case(Geometry::Interval, vec![3.0], vec![]) };
        assert!(c.validate().is_err());
    }

    #[test]
    fn ratios_are_homogeneous() {
        let c = case(Geometry::Interval, vec![3.0], vec![FunctionParam::one()]);
        let cyl = Cylinder::new(c.problem.clone(), 16).unwrap();
        let norms = cyl.norms(3.0, &FunctionParam::one()).unwrap();
        for t in 0..5 {
            let u = cyl.trial(1, t, 4).unwrap();
            let v = u.scaled(Complex64::new(5.0, 0.0));
            let a = norms.target(&cyl.apply_lambda(&u).unwrap()).unwrap() / norms.source(&cyl, &u).unwrap();
            let b = norms.target(&cyl.apply_lambda(&v).unwrap()).unwrap() / norms.source(&cyl, &v).unwrap();
            assert!((a - b).abs() <= 1e-12 * a, "{a} vs {b}");
        }
    }

    #[test]
    fn log_parameters_stay_near_the_power_case() {
        let phis = vec![FunctionParam::one(), FunctionParam::log_power(&[1.0]), FunctionParam::log_power(&[-1.0])];
        let rep = estimate_isomorphism(&case(Geometry::Interval, vec![3.0], phis)).unwrap();
        assert!(rep.pass);
        let base = rep.rows[0].condition;
        for row in &rep.rows {
            assert!(row.condition.is_finite() && row.lower_ratio > 0.0);
            assert!(row.condition < 10.0 * base && base < 10.0 * row.condition);
        }
    }

    #[test]
    fn collocation_recovers_band_limited_solutions() {
        let c = case(Geometry::Interval, vec![3.0], vec![FunctionParam::one()]);
        let cyl = Cylinder::new(c.problem.clone(), 16).unwrap();
        let solver = CollocationSolver::new(&cyl, 4).unwrap();
        let norms = cyl.norms(3.0, &FunctionParam::one()).unwrap();
        let u = cyl.trial(9, 0, 4).unwrap();
        let data = cyl.apply_lambda(&u).unwrap();
        let back = cyl.apply_lambda(&solver.solve(&cyl, &data).unwrap()).unwrap();
        let diff = back.combine(Complex64::new(1.0, 0.0), &data, Complex64::new(-1.0, 0.0)).unwrap();
        assert!(norms.target(&diff).unwrap() <= 1e-8 * norms.target(&data).unwrap());
    }

    #[test]
    fn truncated_norm_matches_subspace_norm_inside() {
        let g0 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]).map(|v| Complex64::new(v, 0.0)));
        let g1 = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 20.0, 9.0]).map(|v| Complex64::new(v, 0.0)));
        let basis = DMatrix::from_fn(3, 2, |i, j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
        let y = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), Complex64::new(0.0, 0.0)];
        let pair = SubspacePair::new(&g0, &g1, basis.clone()).unwrap();
        let want = pair.norm(&InterpParam::power(0.5), &y).unwrap().powi(2);
        let got = truncated_half_norm_sqr(&g0, &g1, &basis, &y, 1e-12).unwrap();
        assert_eq!(got.outside, 0.0);
        let got = got.total();
        assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
        let off = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let a = truncated_half_norm_sqr(&g0, &g1, &basis, &off, 1e-2).unwrap().total();
        let b = truncated_half_norm_sqr(&g0, &g1, &basis, &off, 1e-3).unwrap().total();
        assert!((b / a - 10.0).abs() < 1e-12);
    }

    #[test]
    fn jump_study_small() {
        let jc = JumpCase {
            problem: ParabolicProblem::heat(Geometry::Interval, 0.5, Boundary::Dirichlet).unwrap(),
            s_star: 3.5,
            eps: vec![0.1, 0.2],
            trial_count: 8,
            resolutions: vec![16],
            seed: 5,
            band: Some(4),
            phi: FunctionParam::one(),
            cutoff: CutoffProfile::default(),
        };
        let rep = jump_study(&jc).unwrap();
        assert_eq!(rep.r, 2);
        let row = &rep.rows[0];
        assert_eq!(row.dim, 81 + 27);
        assert_eq!(row.subspace_dim, row.dim - 4);
        assert!(row.envelope.is_finite() && row.envelope >= 1.0);
        assert!(row.violating_outside > 0.0 && row.compatible_norm.is_finite());
    }
}
