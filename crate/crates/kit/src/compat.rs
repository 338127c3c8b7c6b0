//! Compatibility conditions at `t = 0`: the recurrence for `v_k`, the
//! boundary expressions `B_k`, and residual reports.

use hoermander_core::parabolic::{binomial, CompatError};
use hoermander_core::spectra::norm;
use hoermander_core::{compat_count, in_jump_set, BoundaryKind, FunctionParam, Lattice, RegularityIndex, SpectralField};
use num_complex::Complex64;
use serde::Serialize;

use crate::cylinder::Cylinder;
use crate::dft;
use crate::expr::{Expr, Var};
use crate::grid::{GridError, GridFn};
use crate::problem::Boundary;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompatCheckError {
    #[error("derivative of order {order} along axis {axis} needs {needed} points, grid has {have}")]
    InsufficientSmoothness { axis: usize, order: usize, needed: usize, have: usize },
    #[error(transparent)]
    Grid(GridError),
    #[error(transparent)]
    Count(#[from] CompatError),
    #[error("tolerance must be positive")]
    BadTolerance,
}

impl From<GridError> for CompatCheckError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::InsufficientPoints { axis, needed, have } => {
                CompatCheckError::InsufficientSmoothness { axis, order: needed.saturating_sub(4), needed, have }
            }
            e => CompatCheckError::Grid(e),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CompatOptions {
    /// Pass when `ρ_k ≤ tol · max(1, scale_k)`.
    pub tol: f64,
    /// Least finite-difference accuracy; a derivative of order `k` uses at
    /// least `k + 4`.
    pub accuracy: usize,
}

impl Default for CompatOptions {
    fn default() -> Self {
        CompatOptions { tol: 1e-8, accuracy: 4 }
    }
}

fn acc_for(opts_acc: usize, order: usize) -> usize {
    opts_acc.max(order + 4)
}

/// `D^α v = i^{|α|} ∂^α v` on a spatial grid.
fn apply_d(v: &GridFn, alpha: &[usize], accuracy: usize) -> Result<GridFn, GridError> {
    let mut out = v.clone();
    for (axis, &k) in alpha.iter().enumerate() {
        out = out.derivative(axis, k, acc_for(accuracy, k))?;
    }
    let order: usize = alpha.iter().sum();
    Ok(out.scaled(Complex64::new(0.0, 1.0).powu(order as u32)))
}

fn sum(acc: Option<GridFn>, term: GridFn) -> Result<GridFn, GridError> {
    match acc {
        None => Ok(term),
        Some(a) => a.add_aligned(&term),
    }
}

/// `v₀ = h` and
/// `v_k = −Σ_α Σ_{q<k} C(k−1, q) ∂_t^{k−1−q} a_α(·, 0) D^α v_q + ∂_t^{k−1} f(·, 0)`.
pub fn compute_v(cyl: &Cylinder, f: &GridFn, h: &GridFn, k_max: usize, accuracy: usize) -> Result<Vec<GridFn>, CompatCheckError> {
    let t = cyl.t_axis();
    let svars = cyl.spatial_vars();
    let mut v = vec![h.clone()];
    for k in 1..=k_max {
        let ft = f.derivative_at(t, 0, k - 1, acc_for(accuracy, k - 1))?;
        let mut acc = Some(ft);
        for c in cyl.problem().coefficients() {
            for q in 0..k {
                let dt = c.coeff.derivative_n(Var::T, k - 1 - q);
                if dt.as_constant().is_some_and(|z| z == Complex64::new(0.0, 0.0)) {
                    continue;
                }
                let d = apply_d(&v[q], &c.alpha, accuracy)?;
                let term = cyl.multiply_coefficient(&d, &svars, &dt, (0.0, 0.0, 0.0))?;
                acc = Some(sum(acc, term.scaled(Complex64::new(-binomial(k - 1, q), 0.0)))?);
            }
        }
        v.push(acc.expect("time-derivative term"));
    }
    Ok(v)
}

/// `B_k = Σ_q C(k, q) (Σ_j ∂_t^{k−q} b_j(·, 0) D_j v_q + ∂_t^{k−q} b_0(·, 0) v_q)`
/// on boundary component `side`.
pub fn b_k(cyl: &Cylinder, b: &[Expr], v: &[GridFn], k: usize, side: usize, accuracy: usize) -> Result<GridFn, CompatCheckError> {
    let mut bvars = cyl.spatial_vars();
    bvars.remove(0);
    let x = side as f64;
    let ix = cyl.side_index(side);
    let i = Complex64::new(0.0, 1.0);
    let mut acc: Option<GridFn> = None;
    for (q, vq) in v.iter().enumerate().take(k + 1) {
        let weight = Complex64::new(binomial(k, q), 0.0);
        for (j, bj) in b.iter().enumerate() {
            let dt = bj.derivative_n(Var::T, k - q);
            if dt.as_constant().is_some_and(|z| z == Complex64::new(0.0, 0.0)) {
                continue;
            }
            let part = match j {
                0 => vq.slice(0, ix)?,
                1 => vq.derivative_at(0, ix, 1, acc_for(accuracy, 1))?.scaled(i),
                _ => vq.derivative(j - 1, 1, acc_for(accuracy, 1))?.slice(0, ix)?.scaled(i),
            };
            let term = cyl.multiply_coefficient(&part, &bvars, &dt, (x, 0.0, 0.0))?;
            acc = Some(sum(acc, term.scaled(weight))?);
        }
    }
    Ok(acc.unwrap_or_else(|| v[0].slice(0, ix).expect("side index").scaled(Complex64::new(0.0, 0.0))))
}

/// Right-hand sides `v_k|Γ` or `B_k` of the first `r` conditions, per side.
pub fn boundary_targets(
    cyl: &Cylinder,
    v: &[GridFn],
    r: usize,
    accuracy: usize,
) -> Result<Vec<[GridFn; 2]>, CompatCheckError> {
    (0..r)
        .map(|k| {
            let side = |s: usize| -> Result<GridFn, CompatCheckError> {
                match cyl.problem().boundary() {
                    Boundary::Dirichlet => Ok(v[k].slice(0, cyl.side_index(s))?),
                    Boundary::FirstOrder { b } => b_k(cyl, b, v, k, s, accuracy),
                }
            };
            Ok([side(0)?, side(1)?])
        })
        .collect()
}

/// `∂_t^k g(·, 0)` for `k < r`, per side.
pub fn boundary_traces(g: &[GridFn; 2], r: usize, accuracy: usize) -> Result<Vec<[GridFn; 2]>, CompatCheckError> {
    (0..r)
        .map(|k| {
            let tr = |g: &GridFn| g.derivative_at(g.axes().len() - 1, 0, k, acc_for(accuracy, k));
            Ok([tr(&g[0])?, tr(&g[1])?])
        })
        .collect()
}

/// Norm of a function on one boundary component. A point carries `|c|`; a
/// circle carries the multiplier norm of order `order` on its lattice.
pub fn boundary_norm(c: &GridFn, order: f64) -> f64 {
    if c.axes().is_empty() {
        return c.values()[0].norm();
    }
    let n = c.axes()[0].len;
    let lattice = Lattice::new(vec![n], vec![c.axes()[0].spacing * n as f64]).expect("boundary lattice");
    let field = SpectralField::new(lattice, dft::forward(c.values(), &[n])).expect("boundary field");
    let idx = RegularityIndex::isotropic(order, FunctionParam::one(), 1).expect("boundary index");
    norm(&idx, &field).expect("matching dimension")
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatibilityReport {
    pub s: f64,
    pub l: u8,
    pub count: usize,
    /// `s ∈ E_l`; residuals then cover the count just above `s` as well.
    pub jump_point: bool,
    pub upper_count: usize,
    pub residuals: Vec<f64>,
    pub scales: Vec<f64>,
    pub tol: f64,
    pub fd_accuracy: usize,
    pub spectral_time: bool,
    pub pass: bool,
    pub pass_upper: Option<bool>,
    #[serde(skip)]
    pub v_funcs: Vec<GridFn>,
}

/// Residuals `ρ_k = ‖∂_t^k g(·, 0)|Γ − (v_k|Γ or B_k)‖` of all conditions at `s`.
pub fn check_compatibility(
    cyl: &Cylinder,
    f: &GridFn,
    g: &[GridFn; 2],
    h: &GridFn,
    s: f64,
    opts: CompatOptions,
) -> Result<CompatibilityReport, CompatCheckError> {
    if !(opts.tol > 0.0) {
        return Err(CompatCheckError::BadTolerance);
    }
    let kind = cyl.problem().boundary_kind();
    let count = compat_count(s, kind)?;
    let jump_point = in_jump_set(s, kind);
    let upper_count = if jump_point { count + 1 } else { count };
    let v = compute_v(cyl, f, h, upper_count.saturating_sub(1), opts.accuracy)?;
    let rhs = boundary_targets(cyl, &v, upper_count, opts.accuracy)?;
    let traces = boundary_traces(g, upper_count, opts.accuracy)?;
    let mut residuals = Vec::with_capacity(upper_count);
    let mut scales = Vec::with_capacity(upper_count);
    for k in 0..upper_count {
        let order = residual_order(s, kind, k);
        let (mut rho, mut scale) = (0.0, 0.0f64);
        for side in 0..2 {
            let diff = traces[k][side].add_aligned(&rhs[k][side].scaled(Complex64::new(-1.0, 0.0)))?;
            rho += boundary_norm(&diff, order).powi(2);
            scale = scale.max(boundary_norm(&traces[k][side], order)).max(boundary_norm(&rhs[k][side], order));
        }
        residuals.push(rho.sqrt());
        scales.push(scale);
    }
    let ok = |k: usize| residuals[k] <= opts.tol * scales[k].max(1.0);
    let pass = (0..count).all(ok);
    let pass_upper = jump_point.then(|| (0..upper_count).all(ok));
    let spectral_time = f.axes()[cyl.t_axis()].periodic && g.iter().all(|g| g.axes().last().is_some_and(|a| a.periodic));
    Ok(CompatibilityReport {
        s,
        l: kind.l(),
        count,
        jump_point,
        upper_count,
        residuals,
        scales,
        tol: opts.tol,
        fd_accuracy: acc_for(opts.accuracy, upper_count.saturating_sub(1)),
        spectral_time,
        pass,
        pass_upper,
        v_funcs: v,
    })
}

/// Orders of the boundary norms used for condition `k`.
pub fn residual_order(s: f64, kind: BoundaryKind, k: usize) -> f64 {
    s - 1.0 - kind.lateral_loss() - 2.0 * k as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use crate::problem::{Geometry, ParabolicProblem};
    use std::f64::consts::PI;

    #[test]
    fn heat_recurrence_on_sine() {
        let p = ParabolicProblem::heat(Geometry::PeriodicStrip, 0.5, Boundary::Dirichlet).unwrap();
        let cyl = Cylinder::new(p, 16).unwrap();
        let h = GridFn::from_fn(vec![Axis::periodic(16, 2.0), Axis::periodic(8, 1.0)], |c| {
            Complex64::new((2.0 * PI * c[1]).sin(), 0.0)
        });
        let f = GridFn::zeros(cyl.box_axes());
        let v = compute_v(&cyl, &f, &h, 3, 4).unwrap();
        for (k, vk) in v.iter().enumerate() {
            let scale = (-4.0 * PI * PI).powi(k as i32);
            for (a, b) in vk.values().iter().zip(h.values()) {
                assert!((a - b * scale).norm() < 1e-9 * scale.abs(), "k = {k}");
            }
        }
    }

    #[test]
    fn zero_data_gives_zero_v_and_vacuous_report() {
        let p = ParabolicProblem::heat(Geometry::Interval, 0.5, ParabolicProblem::neumann_boundary(Geometry::Interval))
            .unwrap();
        let cyl = Cylinder::new(p, 16).unwrap();
        let d = cyl.apply_lambda(&SpectralField::zeros(cyl.lattice().clone())).unwrap();
        let v = compute_v(&cyl, &d.f, &d.h, 2, 4).unwrap();
        assert!(v.iter().all(|v| v.max_abs() == 0.0));
        let r = check_compatibility(&cyl, &d.f, &d.g, &d.h, 2.4, CompatOptions::default()).unwrap();
        assert_eq!(r.count, 0);
        assert!(r.pass && r.residuals.is_empty());
    }

    #[test]
    fn synthesized_data_pass_and_offset_fails() {
        let p = ParabolicProblem::heat(Geometry::Interval, 0.5, Boundary::Dirichlet).unwrap();
        let cyl = Cylinder::new(p, 32).unwrap();
        let u = cyl.trial(9, 0, 4).unwrap();
        let d = cyl.apply_lambda(&u).unwrap();
        let r = check_compatibility(&cyl, &d.f, &d.g, &d.h, 4.0, CompatOptions::default()).unwrap();
        assert_eq!(r.count, 2);
        assert!(r.pass && r.spectral_time, "{:?}", r.residuals);
        let one = Complex64::new(1.0, 0.0);
        let g0 = GridFn::from_fn(d.g[0].axes().to_vec(), |_| one);
        let bad = [d.g[0].add_aligned(&g0).unwrap(), d.g[1].clone()];
        let r = check_compatibility(&cyl, &d.f, &bad, &d.h, 4.0, CompatOptions::default()).unwrap();
        assert!(!r.pass);
        assert!((r.residuals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn jump_point_reports_both_counts() {
        let p = ParabolicProblem::heat(Geometry::Interval, 0.5, Boundary::Dirichlet).unwrap();
        let cyl = Cylinder::new(p, 16).unwrap();
        let d = cyl.apply_lambda(&cyl.trial(2, 0, 4).unwrap()).unwrap();
        let r = check_compatibility(&cyl, &d.f, &d.g, &d.h, 3.5, CompatOptions::default()).unwrap();
        assert!(r.jump_point);
        assert_eq!((r.count, r.upper_count), (1, 2));
        assert_eq!(r.pass_upper, Some(true));
    }
}
