//! Sampled checks of parabolicity and of the covering condition.
//!
//! Both symbols are homogeneous (`p` of weight 2, `ξ` of weight 1), so it is
//! enough to look at `|ξ| = 1` with `p` in the closed half disk, and at the
//! pure-`p` point `ξ = 0, |p| = 1`.

use hoermander_core::trial::trial_rng;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::problem::{point, Boundary, ParabolicProblem, ProblemError};

pub const MARGIN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct PetrovskiiReport {
    pub margin: f64,
    /// `(x…, t, ξ…)` where the margin was attained.
    pub worst_point: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoveringReport {
    pub margin_a: f64,
    pub margin_b: f64,
    pub samples: usize,
    pub seed: u64,
    pub pass_a: bool,
    pub pass_b: bool,
    pub pass: bool,
}

/// Distance from `−c` to `{Re p ≥ 0, |p| ≤ 1}`, or 0 if `p + c|ξ|²` has a root
/// with `Re p ≥ 0` after rescaling `ξ`.
fn half_disk_margin(c: Complex64) -> f64 {
    if c.re <= 0.0 {
        return 0.0;
    }
    let excess = (c.im.abs() - 1.0).max(0.0);
    c.re.hypot(excess).min(1.0)
}

fn unit_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..count)
            .map(|i| {
                let a = std::f64::consts::PI * i as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
    }
}

fn sample_points(p: &ParabolicProblem, count: usize, seed: u64) -> Vec<(Vec<f64>, f64)> {
    let n = p.spatial_dim();
    let mut rng = trial_rng(seed, 0);
    // Corners of the closed cylinder first.
    let mut out = Vec::with_capacity(count);
    for &x in &[0.0, 1.0] {
        for &t in &[0.0, p.tau()] {
            out.push((if n == 1 { vec![x] } else { vec![x, 0.0] }, t));
        }
    }
    while out.len() < count {
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
        if n == 2 {
            x[1] = rng.random_range(0.0..1.0);
        }
        out.push((x, rng.random_range(0.0..=p.tau())));
    }
    out
}

/// Minimum over sampled `(x, t)` and unit `ξ` of the distance of the
/// principal symbol's root set from the closed right half-plane.
pub fn check_petrovskii(p: &ParabolicProblem, samples: usize, seed: u64) -> PetrovskiiReport {
    let samples = samples.max(1000);
    let n = p.spatial_dim();
    let dirs = unit_directions(n, 64);
    let points = sample_points(p, samples.div_ceil(dirs.len()).max(4), seed);
    let mut margin = 1.0;
    let mut worst_point = Vec::new();
    let mut count = 0;
    for (x, t) in &points {
        for xi in &dirs {
            count += 1;
            let m = half_disk_margin(p.principal_symbol(x, *t, xi));
            if m < margin || worst_point.is_empty() {
                margin = margin.min(m);
                worst_point = x.iter().chain([t]).chain(xi).copied().collect();
            }
        }
    }
    PetrovskiiReport { margin, worst_point, samples: count, seed, pass: margin > MARGIN_TOL }
}

/// `min_{|p| = R, Re p ≥ 0} |p + z|`.
fn arc_distance(z: Complex64, radius: f64) -> f64 {
    if z.re > 0.0 {
        let i = Complex64::new(0.0, radius);
        (z + i).norm().min((z - i).norm())
    } else {
        (z.norm() - radius).abs()
    }
}

/// Part b) margin along the tangent ray: `min_ρ min_p |p + ρ² q₁|` with
/// `|p| = 1 − ρ`.
fn tangent_margin(q1: Complex64) -> f64 {
    let f = |rho: f64| arc_distance(q1 * rho * rho, 1.0 - rho);
    let grid = 400;
    let (mut best, mut best_i) = (f64::INFINITY, 0usize);
    for i in 0..=grid {
        let v = f(i as f64 / grid as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    // Golden-section refinement around the best grid node.
    let (mut a, mut b) = ((best_i.saturating_sub(1)) as f64 / grid as f64, ((best_i + 1).min(grid)) as f64 / grid as f64);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.min(f(0.5 * (a + b)))
}

/// Parts a) and b) of the covering condition at sampled boundary points.
pub fn check_covering(p: &ParabolicProblem, samples: usize, seed: u64) -> Result<CoveringReport, ProblemError> {
    let b = match p.boundary() {
        Boundary::FirstOrder { b } => b,
        Boundary::Dirichlet => return Err(ProblemError::NotFirstOrder),
    };
    let n = p.spatial_dim();
    let samples = samples.max(1000);
    let mut rng = trial_rng(seed, 1);
    let (mut margin_a, mut margin_b) = (f64::INFINITY, f64::INFINITY);
    for i in 0..samples {
        let side = i % 2;
        let mut x = vec![side as f64; n];
        if n == 2 {
            x[1] = if i < 4 { 0.0 } else { rng.random_range(0.0..1.0) };
        }
        let t = if i < 4 { if i < 2 { 0.0 } else { p.tau() } } else { rng.random_range(0.0..=p.tau()) };
        let (px, py) = point(&x);
        let nu = p.inward_normal(side);
        let bj: Vec<Complex64> = (1..=n).map(|j| b[j].eval(px, py, t)).collect();
        let b_nu: Complex64 = bj.iter().zip(&nu).map(|(b, v)| b * v).sum();
        margin_a = margin_a.min(b_nu.norm());
        if n == 1 {
            margin_b = margin_b.min(1.0);
            continue;
        }
        if b_nu.norm() <= MARGIN_TOL {
            margin_b = 0.0;
            continue;
        }
        // w = e_y − (b_y / b_ν) ν, so that η + ζν = ±ρ w for tangent η = ±ρ e_y.
        let ratio = bj[1] / b_nu;
        let w = [-ratio * nu[0], Complex64::new(1.0, 0.0)];
        let q1: Complex64 = p
            .coefficients()
            .iter()
            .filter(|c| c.alpha.iter().sum::<usize>() == 2)
            .map(|c| c.coeff.eval(px, py, t) * w[0].powu(c.alpha[0] as u32) * w[1].powu(c.alpha[1] as u32))
            .sum();
        margin_b = margin_b.min(tangent_margin(q1));
    }
    let pass_a = margin_a > MARGIN_TOL;
    let pass_b = margin_b > MARGIN_TOL;
    Ok(CoveringReport { margin_a, margin_b, samples, seed, pass_a, pass_b, pass: pass_a && pass_b })
}
