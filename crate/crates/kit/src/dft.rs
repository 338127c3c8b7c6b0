//! Unitary discrete Fourier transforms over row-major arrays, last axis
//! fastest, matching the coefficient order of [`hoermander_core::Lattice`].

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

/// Forward (`e^{−2πi m j/N}`) or inverse transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    let d = match dir {
        Direction::Forward => FftDirection::Forward,
        Direction::Inverse => FftDirection::Inverse,
    };
    FftPlanner::new().plan_fft(n, d)
}

/// Transform `data` (shape `sizes`) along one axis in place, scaled by `1/√N`.
pub fn transform_axis(data: &mut [Complex64], sizes: &[usize], axis: usize, dir: Direction) {
    let n = sizes[axis];
    if n == 1 {
        return;
    }
    let stride: usize = sizes[axis + 1..].iter().product();
    let outer: usize = sizes[..axis].iter().product();
    let fft = plan(n, dir);
    let scale = 1.0 / (n as f64).sqrt();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for o in 0..outer {
        for s in 0..stride {
            let base = o * n * stride + s;
            for (j, c) in line.iter_mut().enumerate() {
                *c = data[base + j * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (j, c) in line.iter().enumerate() {
                data[base + j * stride] = c * scale;
            }
        }
    }
}

/// Unitary transform along every axis.
pub fn transform(data: &mut [Complex64], sizes: &[usize], dir: Direction) {
    debug_assert_eq!(data.len(), sizes.iter().product::<usize>());
    for axis in 0..sizes.len() {
        transform_axis(data, sizes, axis, dir);
    }
}

/// Physical samples to coefficients.
pub fn forward(samples: &[Complex64], sizes: &[usize]) -> Vec<Complex64> {
    let mut out = samples.to_vec();
    transform(&mut out, sizes, Direction::Forward);
    out
}

/// Coefficients to physical samples.
pub fn inverse(coeffs: &[Complex64], sizes: &[usize]) -> Vec<Complex64> {
    let mut out = coeffs.to_vec();
    transform(&mut out, sizes, Direction::Inverse);
    out
}
