//! Sampled functions on tensor grids. Periodic axes are differentiated
//! spectrally, window axes by finite differences with Fornberg weights.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dft::{self, Direction};
use crate::quotient::{ravel, unravel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub len: usize,
    pub spacing: f64,
    pub periodic: bool,
}

impl Axis {
    /// `len` points covering one period.
    pub fn periodic(len: usize, period: f64) -> Axis {
        Axis { len, spacing: period / len as f64, periodic: true }
    }

    /// `len` points `0, h, …, (len−1)h` with no wrap-around.
    pub fn window(len: usize, spacing: f64) -> Axis {
        Axis { len, spacing, periodic: false }
    }

    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("axis {0} out of range")]
    AxisOutOfRange(usize),
    #[error("axis {axis} has {have} points, a stencil needs {needed}")]
    InsufficientPoints { axis: usize, needed: usize, have: usize },
    #[error("grids differ")]
    GridMismatch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFn {
    axes: Vec<Axis>,
    values: Vec<Complex64>,
}

/// Weights `w[d][j]` of the `d`-th derivative at `x0` from values at `xs`,
/// for `d ≤ m` (Fornberg's recursion).
pub fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut w = vec![vec![0.0; n]; m + 1];
    w[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[k][i] = c1 * (k as f64 * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                w[k][j] = (c4 * w[k][j] - k as f64 * w[k - 1][j]) / c3;
            }
            w[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    w
}

impl GridFn {
    pub fn new(axes: Vec<Axis>, values: Vec<Complex64>) -> Result<Self, GridError> {
        let n: usize = axes.iter().map(|a| a.len).product();
        if values.len() != n {
            return Err(GridError::ShapeMismatch { expected: n, got: values.len() });
        }
        Ok(GridFn { axes, values })
    }

    pub fn zeros(axes: Vec<Axis>) -> Self {
        let n = axes.iter().map(|a| a.len).product();
        GridFn { axes, values: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// Samples of `f(coordinates)`.
    pub fn from_fn(axes: Vec<Axis>, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let sizes: Vec<usize> = axes.iter().map(|a| a.len).collect();
        let n = sizes.iter().product();
        let mut idx = vec![0; axes.len()];
        let mut x = vec![0.0; axes.len()];
        let values = (0..n)
            .map(|flat| {
                unravel(flat, &sizes, &mut idx);
                for (a, ax) in axes.iter().enumerate() {
                    x[a] = ax.coord(idx[a]);
                }
                f(&x)
            })
            .collect();
        GridFn { axes, values }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len).collect()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.values[ravel(idx, &self.sizes())]
    }

    /// Coordinates of every grid point, in storage order.
    pub fn for_each_point(&self, mut f: impl FnMut(usize, &[f64])) {
        let sizes = self.sizes();
        let mut idx = vec![0; self.axes.len()];
        let mut x = vec![0.0; self.axes.len()];
        for flat in 0..self.values.len() {
            unravel(flat, &sizes, &mut idx);
            for (a, ax) in self.axes.iter().enumerate() {
                x[a] = ax.coord(idx[a]);
            }
            f(flat, &x);
        }
    }

    fn same_grid(&self, other: &GridFn) -> Result<(), GridError> {
        if self.axes != other.axes {
            return Err(GridError::GridMismatch);
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &GridFn, b: Complex64) -> Result<GridFn, GridError> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(GridFn { axes: self.axes.clone(), values })
    }

    /// `self + other` after restricting both to their common window.
    pub fn add_aligned(&self, other: &GridFn) -> Result<GridFn, GridError> {
        if self.axes.len() != other.axes.len() {
            return Err(GridError::GridMismatch);
        }
        let (mut a, mut b) = (self.clone(), other.clone());
        for ax in 0..self.axes.len() {
            let (p, q) = (self.axes[ax], other.axes[ax]);
            if p == q {
                continue;
            }
            if (p.spacing - q.spacing).abs() > 1e-12 * p.spacing {
                return Err(GridError::GridMismatch);
            }
            let len = p.len.min(q.len);
            a = a.restrict(ax, len)?;
            b = b.restrict(ax, len)?;
        }
        let one = Complex64::new(1.0, 0.0);
        a.combine(one, &b, one)
    }

    pub fn scaled(&self, a: Complex64) -> GridFn {
        GridFn { axes: self.axes.clone(), values: self.values.iter().map(|v| a * v).collect() }
    }

    /// Pointwise product with `f(coordinates)`.
    pub fn multiply_fn(&self, f: impl Fn(&[f64]) -> Complex64) -> GridFn {
        let mut out = self.clone();
        self.for_each_point(|flat, x| out.values[flat] *= f(x));
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn check_axis(&self, axis: usize) -> Result<(), GridError> {
        if axis >= self.axes.len() {
            return Err(GridError::AxisOutOfRange(axis));
        }
        Ok(())
    }

    /// Fix `axis` at `index`, dropping it.
    pub fn slice(&self, axis: usize, index: usize) -> Result<GridFn, GridError> {
        self.check_axis(axis)?;
        let sizes = self.sizes();
        let mut axes = self.axes.clone();
        axes.remove(axis);
        let mut out = GridFn::zeros(axes);
        let mut idx = vec![0; sizes.len()];
        let mut sub = vec![0; sizes.len() - 1];
        let out_sizes = out.sizes();
        for (flat, v) in out.values.iter_mut().enumerate() {
            unravel(flat, &out_sizes, &mut sub);
            idx[..axis].copy_from_slice(&sub[..axis]);
            idx[axis] = index;
            idx[axis + 1..].copy_from_slice(&sub[axis..]);
            *v = self.values[ravel(&idx, &sizes)];
        }
        Ok(out)
    }

    /// First `len` points along `axis`, as a window axis.
    pub fn restrict(&self, axis: usize, len: usize) -> Result<GridFn, GridError> {
        self.check_axis(axis)?;
        let sizes = self.sizes();
        if len > sizes[axis] || len == 0 {
            return Err(GridError::InsufficientPoints { axis, needed: len, have: sizes[axis] });
        }
        let mut axes = self.axes.clone();
        axes[axis] = Axis::window(len, self.axes[axis].spacing);
        let mut out = GridFn::zeros(axes);
        let out_sizes = out.sizes();
        let mut idx = vec![0; sizes.len()];
        for (flat, v) in out.values.iter_mut().enumerate() {
            unravel(flat, &out_sizes, &mut idx);
            *v = self.values[ravel(&idx, &sizes)];
        }
        Ok(out)
    }

    /// Restrict every axis to the given lengths (equal lengths keep the axis).
    pub fn restrict_all(&self, lens: &[usize]) -> Result<GridFn, GridError> {
        let mut out = self.clone();
        for (a, &len) in lens.iter().enumerate() {
            if len != self.axes[a].len {
                out = out.restrict(a, len)?;
            }
        }
        Ok(out)
    }

    /// `∂^order` along `axis`. Window axes use `order + accuracy` points
    /// nearest to each node.
    pub fn derivative(&self, axis: usize, order: usize, accuracy: usize) -> Result<GridFn, GridError> {
        self.check_axis(axis)?;
        if order == 0 {
            return Ok(self.clone());
        }
        let ax = self.axes[axis];
        let sizes = self.sizes();
        let mut out = self.clone();
        if ax.periodic {
            let n = ax.len;
            let period = ax.spacing * n as f64;
            dft::transform_axis(&mut out.values, &sizes, axis, Direction::Forward);
            let mult: Vec<Complex64> = (0..n)
                .map(|i| {
                    let m = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
                    if n % 2 == 0 && i == n / 2 && order % 2 == 1 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let w = 2.0 * std::f64::consts::PI * m as f64 / period;
                    Complex64::new(0.0, w).powu(order as u32)
                })
                .collect();
            let stride: usize = sizes[axis + 1..].iter().product();
            for (flat, v) in out.values.iter_mut().enumerate() {
                *v *= mult[(flat / stride) % n];
            }
            dft::transform_axis(&mut out.values, &sizes, axis, Direction::Inverse);
            return Ok(out);
        }
        let npts = order + accuracy;
        if npts > ax.len {
            return Err(GridError::InsufficientPoints { axis, needed: npts, have: ax.len });
        }
        let stencils: Vec<(usize, Vec<f64>)> = (0..ax.len)
            .map(|i| {
                let start = i.saturating_sub(npts / 2).min(ax.len - npts);
                let xs: Vec<f64> = (start..start + npts).map(|j| ax.coord(j)).collect();
                (start, fornberg(ax.coord(i), &xs, order).swap_remove(order))
            })
            .collect();
        let stride: usize = sizes[axis + 1..].iter().product();
        for (flat, v) in out.values.iter_mut().enumerate() {
            let i = (flat / stride) % ax.len;
            let base = flat - i * stride;
            let (start, w) = &stencils[i];
            *v = w.iter().enumerate().map(|(j, wj)| self.values[base + (start + j) * stride] * wj).sum();
        }
        Ok(out)
    }

    /// `∂^order` along `axis`, evaluated at `index` only.
    pub fn derivative_at(&self, axis: usize, index: usize, order: usize, accuracy: usize) -> Result<GridFn, GridError> {
        self.check_axis(axis)?;
        let ax = self.axes[axis];
        if ax.periodic || order == 0 {
            return self.derivative(axis, order, accuracy)?.slice(axis, index);
        }
        let npts = order + accuracy;
        if npts > ax.len {
            return Err(GridError::InsufficientPoints { axis, needed: npts, have: ax.len });
        }
        let start = index.saturating_sub(npts / 2).min(ax.len - npts);
        let xs: Vec<f64> = (start..start + npts).map(|j| ax.coord(j)).collect();
        let w = fornberg(ax.coord(index), &xs, order).swap_remove(order);
        let mut out = self.slice(axis, start)?.scaled(Complex64::new(w[0], 0.0));
        for (j, wj) in w.iter().enumerate().skip(1) {
            out = out.combine(Complex64::new(1.0, 0.0), &self.slice(axis, start + j)?, Complex64::new(*wj, 0.0))?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn fornberg_central_second_derivative() {
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w[2], vec![1.0, -2.0, 1.0]);
        assert_eq!(w[1], vec![-0.5, 0.0, 0.5]);
        let w = fornberg(0.0, &[0.0, 1.0, 2.0], 1);
        assert_eq!(w[1], vec![-1.5, 2.0, -0.5]);
    }

    #[test]
    fn spectral_derivative_of_trig() {
        let axes = vec![Axis::periodic(16, 2.0), Axis::periodic(8, 1.0)];
        let f = GridFn::from_fn(axes, |x| c((PI * x[0]).sin() * (2.0 * PI * x[1]).cos()));
        let d = f.derivative(0, 2, 0).unwrap();
        for (flat, v) in d.values().iter().enumerate() {
            assert!((v + f.values()[flat] * PI * PI).norm() < 1e-12);
        }
        let dt = f.derivative(1, 1, 0).unwrap().slice(1, 0).unwrap();
        assert!(dt.max_abs() < 1e-12);
    }

    #[test]
    fn window_stencils_are_exact_on_polynomials() {
        let axes = vec![Axis::window(9, 0.125)];
        let f = GridFn::from_fn(axes, |x| c(x[0].powi(5) - 2.0 * x[0]));
        let d = f.derivative(0, 2, 5).unwrap();
        d.for_each_point(|flat, x| assert!((d.values()[flat] - c(20.0 * x[0].powi(3))).norm() < 1e-9));
        let at0 = f.derivative_at(0, 0, 1, 6).unwrap();
        assert!((at0.values()[0] - c(-2.0)).norm() < 1e-10);
        assert!(matches!(f.derivative(0, 3, 8), Err(GridError::InsufficientPoints { .. })));
    }

    #[test]
    fn slicing_and_restriction() {
        let axes = vec![Axis::periodic(4, 1.0), Axis::periodic(8, 2.0)];
        let f = GridFn::from_fn(axes, |x| Complex64::new(x[0], x[1]));
        let s = f.slice(1, 3).unwrap();
        assert_eq!(s.sizes(), vec![4]);
        assert_eq!(s.values()[2], Complex64::new(0.5, 0.75));
        let r = f.restrict(1, 5).unwrap();
        assert_eq!(r.sizes(), vec![4, 5]);
        assert!(!r.axes()[1].periodic);
        assert_eq!(r.get(&[1, 4]), Complex64::new(0.25, 1.0));
    }
}
