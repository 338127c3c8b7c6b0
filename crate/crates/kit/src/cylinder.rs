//! Discretized cylinders `Ω = G × (0, τ)` embedded in periodic boxes.
//!
//! The box has period 2 in `x` and `2τ` in `t`, so `Ω` is the window of the
//! first `N/2 + 1` points along both; on the strip the `y` circle is covered
//! completely. Boundary data live on `Γ × (0, τ)` with `Γ = {x = 0}` and
//! `{x = 1}` (grid indices `0` and `N/2`). For the interval, `Γ` is a point and
//! its lattice carries a one-point dummy axis.

use hoermander_core::trial::{fill_gaussian, trial_rng};
use hoermander_core::{FunctionParam, Lattice, RegularityIndex, SpectralError, SpectralField};
use num_complex::Complex64;
use rand::Rng;

use crate::dft;
use crate::expr::{Expr, Var};
use crate::grid::{Axis, GridError, GridFn};
use crate::problem::{Boundary, Geometry, ParabolicProblem};
use crate::quotient::{BoxQuotient, QuotientError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CylinderError {
    #[error("resolution {0} must be a power of two, at least 8")]
    BadResolution(usize),
    #[error("band {band} too wide for resolution {n}")]
    BandTooWide { band: usize, n: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Quotient(#[from] QuotientError),
    #[error("weight: {0}")]
    Weight(String),
}

/// `(f, g, h)` with `f` on `Ω`, `g[side]` on `Γ_side × (0, τ)` and `h` on `G`.
/// Axes stay periodic where the data are box-periodic, so that derivatives
/// there are spectral.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemData {
    pub f: GridFn,
    pub g: [GridFn; 2],
    pub h: GridFn,
}

impl ProblemData {
    /// `a·self + b·other`, restricting axes to common windows.
    pub fn combine(&self, a: Complex64, other: &ProblemData, b: Complex64) -> Result<ProblemData, GridError> {
        let lin = |x: &GridFn, y: &GridFn| x.scaled(a).add_aligned(&y.scaled(b));
        Ok(ProblemData {
            f: lin(&self.f, &other.f)?,
            g: [lin(&self.g[0], &other.g[0])?, lin(&self.g[1], &other.g[1])?],
            h: lin(&self.h, &other.h)?,
        })
    }

    pub fn scaled(&self, a: Complex64) -> ProblemData {
        ProblemData { f: self.f.scaled(a), g: [self.g[0].scaled(a), self.g[1].scaled(a)], h: self.h.scaled(a) }
    }
}

pub struct Cylinder {
    problem: ParabolicProblem,
    n: usize,
    lattice: Lattice,
    windows: Vec<usize>,
}

impl Cylinder {
    pub fn new(problem: ParabolicProblem, n: usize) -> Result<Self, CylinderError> {
        if n < 8 || !n.is_power_of_two() {
            return Err(CylinderError::BadResolution(n));
        }
        let tau = problem.tau();
        let (lattice, windows) = match problem.geometry() {
            Geometry::Interval => (Lattice::new(vec![n, n], vec![2.0, 2.0 * tau])?, vec![n / 2 + 1, n / 2 + 1]),
            Geometry::PeriodicStrip => (
                Lattice::new(vec![n, n / 2, n], vec![2.0, 1.0, 2.0 * tau])?,
                vec![n / 2 + 1, n / 2, n / 2 + 1],
            ),
        };
        Ok(Cylinder { problem, n, lattice, windows })
    }

    pub fn problem(&self) -> &ParabolicProblem {
        &self.problem
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    /// The periodic box around `Ω`.
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Window lengths of `Ω` inside the box.
    pub fn windows(&self) -> &[usize] {
        &self.windows
    }

    /// Grid index of boundary component `side` along `x`.
    pub fn side_index(&self, side: usize) -> usize {
        side * (self.n / 2)
    }

    pub fn t_axis(&self) -> usize {
        self.problem.spatial_dim()
    }

    pub fn dt(&self) -> f64 {
        2.0 * self.problem.tau() / self.n as f64
    }

    fn strip(&self) -> bool {
        self.problem.geometry() == Geometry::PeriodicStrip
    }

    /// Variables along the axes of `Ω`.
    pub fn vars(&self) -> Vec<Var> {
        if self.strip() {
            vec![Var::X, Var::Y, Var::T]
        } else {
            vec![Var::X, Var::T]
        }
    }

    pub fn spatial_vars(&self) -> Vec<Var> {
        let mut v = self.vars();
        v.pop();
        v
    }

    pub fn boundary_vars(&self) -> Vec<Var> {
        let mut v = self.vars();
        v.remove(0);
        v
    }

    pub fn box_axes(&self) -> Vec<Axis> {
        (0..self.lattice.dim()).map(|a| Axis::periodic(self.lattice.sizes()[a], self.lattice.periods()[a])).collect()
    }

    /// Axes of `Ω` (window in `x` and `t`).
    pub fn window_axes(&self) -> Vec<Axis> {
        self.box_axes()
            .into_iter()
            .zip(&self.windows)
            .map(|(ax, &w)| if w == ax.len { ax } else { Axis::window(w, ax.spacing) })
            .collect()
    }

    pub fn spatial_window_axes(&self) -> Vec<Axis> {
        let mut a = self.window_axes();
        a.pop();
        a
    }

    pub fn boundary_window_axes(&self) -> Vec<Axis> {
        let mut a = self.window_axes();
        a.remove(0);
        a
    }

    /// Lattice and window for functions on `Γ × (0, τ)`.
    pub fn boundary_lattice(&self) -> Result<(Lattice, Vec<usize>), CylinderError> {
        let (n, t2) = (self.n, 2.0 * self.problem.tau());
        Ok(if self.strip() {
            (Lattice::new(vec![n / 2, n], vec![1.0, t2])?, vec![n / 2, n / 2 + 1])
        } else {
            (Lattice::new(vec![1, n], vec![1.0, t2])?, vec![1, n / 2 + 1])
        })
    }

    /// Lattice and window for functions on `G`.
    pub fn spatial_lattice(&self) -> Result<(Lattice, Vec<usize>), CylinderError> {
        let n = self.n;
        Ok(if self.strip() {
            (Lattice::new(vec![n, n / 2], vec![2.0, 1.0])?, vec![n / 2 + 1, n / 2])
        } else {
            (Lattice::new(vec![n], vec![2.0])?, vec![n / 2 + 1])
        })
    }

    /// Band-limited random trial: modes `|m_x|, |m_t| ≤ band`, `|m_y| ≤ band/2`,
    /// Gaussian coefficients damped by `(1 + |m|²)^{−p/2}` with a per-trial
    /// `p ∈ [0, 3]`. The function does not depend on the resolution.
    pub fn trial(&self, seed: u64, trial: u64, band: usize) -> Result<SpectralField, CylinderError> {
        let bands: Vec<usize> = self.vars().iter().map(|v| if *v == Var::Y { band / 2 } else { band }).collect();
        let sizes = self.lattice.sizes();
        if bands.iter().zip(sizes).any(|(&b, &s)| 2 * b >= s) {
            return Err(CylinderError::BandTooWide { band, n: self.n });
        }
        let mut rng = trial_rng(seed, trial);
        let p: f64 = rng.random_range(0.0..3.0);
        let scale = (self.lattice.len() as f64).sqrt();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.lattice.len()];
        let widths: Vec<usize> = bands.iter().map(|b| 2 * b + 1).collect();
        let count: usize = widths.iter().product();
        let mut gauss = vec![Complex64::new(0.0, 0.0); count];
        fill_gaussian(&mut rng, &mut gauss);
        let mut idx = vec![0usize; widths.len()];
        let mut m = vec![0i64; widths.len()];
        for (flat, c) in gauss.into_iter().enumerate() {
            crate::quotient::unravel(flat, &widths, &mut idx);
            for a in 0..m.len() {
                m[a] = idx[a] as i64 - bands[a] as i64;
            }
            let r2: f64 = m.iter().map(|&v| (v * v) as f64).sum();
            coeffs[self.lattice.mode_index(&m)?] = c * scale * (1.0 + r2).powf(-0.5 * p);
        }
        Ok(SpectralField::new(self.lattice.clone(), coeffs)?)
    }

    /// Samples of a box field on the box grid.
    pub fn samples(&self, u: &SpectralField) -> GridFn {
        GridFn::new(self.box_axes(), dft::inverse(u.coeffs(), self.lattice.sizes())).expect("box shape")
    }

    /// Values of a box field on the window of `Ω`, row-major.
    pub fn window_values(&self, u: &SpectralField) -> Result<Vec<Complex64>, CylinderError> {
        Ok(self.samples(u).restrict_all(&self.windows)?.into_values())
    }

    /// Box samples of `F⁻¹[σ(ξ) û]`.
    fn multiplier(&self, u: &SpectralField, sigma: impl Fn(&[f64]) -> Complex64) -> GridFn {
        let mut xi = vec![0.0; self.lattice.dim()];
        let coeffs: Vec<Complex64> = u
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                self.lattice.frequency_vector(i, &mut xi);
                c * sigma(&xi)
            })
            .collect();
        GridFn::new(self.box_axes(), dft::inverse(&coeffs, self.lattice.sizes())).expect("box shape")
    }

    /// Restrict periodic `x`/`t` axes along which `e` varies to the window,
    /// then multiply by `e`. `base` supplies `(x, y, t)` for fixed variables.
    pub fn multiply_coefficient(
        &self,
        g: &GridFn,
        vars: &[Var],
        e: &Expr,
        base: (f64, f64, f64),
    ) -> Result<GridFn, GridError> {
        if let Some(c) = e.as_constant() {
            return Ok(g.scaled(c));
        }
        let mut out = g.clone();
        for (a, v) in vars.iter().enumerate() {
            if *v != Var::Y && e.depends_on(*v) && out.axes()[a].periodic {
                out = out.restrict(a, self.n / 2 + 1)?;
            }
        }
        Ok(out.multiply_fn(|coords| {
            let (x, y, t) = at(vars, coords, base);
            e.eval(x, y, t)
        }))
    }

    /// `Λ u = (A u, u|S or B u, u(·, 0))`. Derivatives are taken spectrally on
    /// the box and coefficients are applied pointwise, so the result is exact
    /// for box fields.
    pub fn apply_lambda(&self, u: &SpectralField) -> Result<ProblemData, CylinderError> {
        if u.lattice() != &self.lattice {
            return Err(CylinderError::Spectral(SpectralError::LatticeMismatch));
        }
        let n = self.problem.spatial_dim();
        let t = self.t_axis();
        let vars = self.vars();
        let i = Complex64::new(0.0, 1.0);
        let dpow = |xi: &[f64], alpha: &[usize]| -> Complex64 {
            Complex64::new(alpha.iter().zip(xi).map(|(&k, x)| (-x).powi(k as i32)).product(), 0.0)
        };
        let constant: Vec<(&[usize], Complex64)> = self
            .problem
            .coefficients()
            .iter()
            .filter_map(|c| c.coeff.as_constant().map(|v| (c.alpha.as_slice(), v)))
            .collect();
        let mut f = self.multiplier(u, |xi| {
            i * xi[t] + constant.iter().map(|(alpha, v)| v * dpow(&xi[..n], alpha)).sum::<Complex64>()
        });
        for c in self.problem.coefficients().iter().filter(|c| c.coeff.as_constant().is_none()) {
            let d = self.multiplier(u, |xi| dpow(&xi[..n], &c.alpha));
            f = f.add_aligned(&self.multiply_coefficient(&d, &vars, &c.coeff, (0.0, 0.0, 0.0))?)?;
        }
        let samples = self.samples(u);
        let bvars = self.boundary_vars();
        let g = match self.problem.boundary() {
            Boundary::Dirichlet => [samples.slice(0, 0)?, samples.slice(0, self.side_index(1))?],
            Boundary::FirstOrder { b } => {
                let mut parts = Vec::with_capacity(n + 1);
                parts.push(samples.clone());
                for j in 0..n {
                    parts.push(self.multiplier(u, |xi| Complex64::new(-xi[j], 0.0)));
                }
                let mut sides = Vec::with_capacity(2);
                for side in 0..2 {
                    let x = side as f64;
                    let mut acc: Option<GridFn> = None;
                    for (j, part) in parts.iter().enumerate() {
                        let slice = part.slice(0, self.side_index(side))?;
                        let term = self.multiply_coefficient(&slice, &bvars, &b[j], (x, 0.0, 0.0))?;
                        acc = Some(match acc {
                            None => term,
                            Some(a) => a.add_aligned(&term)?,
                        });
                    }
                    sides.push(acc.expect("at least one term"));
                }
                let g1 = sides.pop().expect("two sides");
                [sides.pop().expect("two sides"), g1]
            }
        };
        let h = samples.slice(t, 0)?;
        Ok(ProblemData { f, g, h })
    }

    /// Quotient norms of `ℋ_l`/`𝒬_l` components and of the solution space at
    /// order `s` with parameter `φ`.
    pub fn norms(&self, s: f64, phi: &FunctionParam) -> Result<NormSet, CylinderError> {
        let k = self.lattice.dim();
        let werr = |e: hoermander_core::weights::WeightError| CylinderError::Weight(e.to_string());
        let par = |order: f64, dim: usize| RegularityIndex::parabolic(order, phi.clone(), dim).map_err(werr);
        let loss = self.problem.boundary_kind().lateral_loss();
        let u = BoxQuotient::new(par(s, k)?, self.lattice.clone(), &self.windows)?;
        let f = BoxQuotient::new(par(s - 2.0, k)?, self.lattice.clone(), &self.windows)?;
        let (bl, bw) = self.boundary_lattice()?;
        let g = BoxQuotient::new(par(s - loss, 2)?, bl, &bw)?;
        let (sl, sw) = self.spatial_lattice()?;
        let iso = RegularityIndex::isotropic(s - 1.0, phi.clone(), sl.dim()).map_err(werr)?;
        let h = BoxQuotient::new(iso, sl, &sw)?;
        Ok(NormSet { s, phi: phi.clone(), u, f, g, h })
    }
}

impl Cylinder {
    fn lens(axes: &[Axis]) -> Vec<usize> {
        axes.iter().map(|a| a.len).collect()
    }

    /// Length of [`Cylinder::pack`] output.
    pub fn data_len(&self) -> usize {
        let n = |a: Vec<Axis>| a.iter().map(|a| a.len).product::<usize>();
        n(self.window_axes()) + 2 * n(self.boundary_window_axes()) + n(self.spatial_window_axes())
    }

    /// Window values of `(f, g₀, g₁, h)`, concatenated.
    pub fn pack(&self, data: &ProblemData) -> Result<Vec<Complex64>, CylinderError> {
        let mut out = data.f.restrict_all(&Self::lens(&self.window_axes()))?.into_values();
        let bl = Self::lens(&self.boundary_window_axes());
        for g in &data.g {
            out.extend(g.restrict_all(&bl)?.into_values());
        }
        out.extend(data.h.restrict_all(&Self::lens(&self.spatial_window_axes()))?.into_values());
        Ok(out)
    }

    /// Inverse of [`Cylinder::pack`]; all axes come back as windows.
    pub fn unpack(&self, v: &[Complex64]) -> Result<ProblemData, CylinderError> {
        if v.len() != self.data_len() {
            return Err(GridError::ShapeMismatch { expected: self.data_len(), got: v.len() }.into());
        }
        let mut rest = v;
        let mut take = |axes: Vec<Axis>| -> Result<GridFn, GridError> {
            let n: usize = axes.iter().map(|a| a.len).product();
            let (head, tail) = rest.split_at(n);
            rest = tail;
            GridFn::new(axes, head.to_vec())
        };
        let f = take(self.window_axes())?;
        let g0 = take(self.boundary_window_axes())?;
        let g1 = take(self.boundary_window_axes())?;
        let h = take(self.spatial_window_axes())?;
        Ok(ProblemData { f, g: [g0, g1], h })
    }
}

/// `(x, y, t)` from grid coordinates along `vars`, defaults from `base`.
pub fn at(vars: &[Var], coords: &[f64], base: (f64, f64, f64)) -> (f64, f64, f64) {
    let (mut x, mut y, mut t) = base;
    for (v, c) in vars.iter().zip(coords) {
        match v {
            Var::X => x = *c,
            Var::Y => y = *c,
            Var::T => t = *c,
        }
    }
    (x, y, t)
}

/// Norms for one `(s, φ)` on one cylinder.
pub struct NormSet {
    pub s: f64,
    pub phi: FunctionParam,
    pub u: BoxQuotient,
    pub f: BoxQuotient,
    pub g: BoxQuotient,
    pub h: BoxQuotient,
}

/// `√(cell volume)` of the lattice of `q`, turning lattice sums into
/// Riemann sums.
pub fn cell_scale(q: &BoxQuotient) -> f64 {
    let lat = q.lattice();
    (0..lat.dim()).map(|a| lat.spacing(a)).product::<f64>().sqrt()
}

fn window_of(q: &BoxQuotient, v: &GridFn) -> Result<Vec<Complex64>, CylinderError> {
    // The dummy axis of the interval boundary lattice is absent from the grid.
    let w = q.windows();
    Ok(v.restrict_all(&w[w.len() - v.axes().len()..])?.into_values())
}

impl NormSet {
    /// `‖u‖` in `H^{s,s/2;φ}(Ω)`. All norms here carry the cell volume.
    pub fn source(&self, cyl: &Cylinder, u: &SpectralField) -> Result<f64, CylinderError> {
        Ok(cell_scale(&self.u) * self.u.norm(&cyl.window_values(u)?)?)
    }

    /// Component norms `(f, g₀, g₁, h)`.
    pub fn components(&self, data: &ProblemData) -> Result<[f64; 4], CylinderError> {
        Ok([
            cell_scale(&self.f) * self.f.norm(&window_of(&self.f, &data.f)?)?,
            cell_scale(&self.g) * self.g.norm(&window_of(&self.g, &data.g[0])?)?,
            cell_scale(&self.g) * self.g.norm(&window_of(&self.g, &data.g[1])?)?,
            cell_scale(&self.h) * self.h.norm(&window_of(&self.h, &data.h)?)?,
        ])
    }

    /// `ℓ²` combination of the component norms.
    pub fn target(&self, data: &ProblemData) -> Result<f64, CylinderError> {
        Ok(self.components(data)?.iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}
