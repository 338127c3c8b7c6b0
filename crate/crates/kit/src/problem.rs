//! Parabolic problems on flat cylinders `Ω = G × (0, τ)`.
//!
//! `A u = ∂_t u + Σ_{|α|≤2} a_α(x, t) D^α u` with `D_j = i ∂/∂x_j`, and either
//! the Dirichlet condition or `B u = Σ_j b_j D_j u + b_0 u` on `S = Γ × (0, τ)`.

use hoermander_core::BoundaryKind;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::expr::{Expr, Var};

/// `G = (0, 1)` with `Γ = {0, 1}`, or `G = (0, 1) × circle` with `Γ` two circles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    Interval,
    PeriodicStrip,
}

impl Geometry {
    pub fn spatial_dim(self) -> usize {
        match self {
            Geometry::Interval => 1,
            Geometry::PeriodicStrip => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub alpha: Vec<usize>,
    pub coeff: Expr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Boundary {
    Dirichlet,
    /// `b = [b_0, b_1, …, b_n]`.
    FirstOrder { b: Vec<Expr> },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("tau must be positive")]
    BadTau,
    #[error("multi-index {0:?} has the wrong length or order above 2")]
    BadMultiIndex(Vec<usize>),
    #[error("first-order boundary needs {expected} coefficients, got {got}")]
    BadBoundary { expected: usize, got: usize },
    #[error("boundary operator is not first order")]
    NotFirstOrder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemSpec")]
pub struct ParabolicProblem {
    geometry: Geometry,
    tau: f64,
    a: Vec<Coefficient>,
    boundary: Boundary,
}

#[derive(Deserialize)]
struct ProblemSpec {
    geometry: Geometry,
    tau: f64,
    a: Vec<Coefficient>,
    boundary: Boundary,
}

impl TryFrom<ProblemSpec> for ParabolicProblem {
    type Error = ProblemError;
    fn try_from(s: ProblemSpec) -> Result<Self, ProblemError> {
        ParabolicProblem::new(s.geometry, s.tau, s.a, s.boundary)
    }
}

impl ParabolicProblem {
    pub fn new(geometry: Geometry, tau: f64, a: Vec<Coefficient>, boundary: Boundary) -> Result<Self, ProblemError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ProblemError::BadTau);
        }
        let n = geometry.spatial_dim();
        for c in &a {
            if c.alpha.len() != n || c.alpha.iter().sum::<usize>() > 2 {
                return Err(ProblemError::BadMultiIndex(c.alpha.clone()));
            }
        }
        if let Boundary::FirstOrder { b } = &boundary {
            if b.len() != n + 1 {
                return Err(ProblemError::BadBoundary { expected: n + 1, got: b.len() });
            }
        }
        Ok(ParabolicProblem { geometry, tau, a, boundary })
    }

    /// `∂_t − Δ`, i.e. `a_α = 1` for `α = 2e_j`.
    pub fn heat(geometry: Geometry, tau: f64, boundary: Boundary) -> Result<Self, ProblemError> {
        Self::diffusion(geometry, tau, Expr::constant(1.0), boundary)
    }

    /// `∂_t − k(x, t) Δ`.
    pub fn diffusion(geometry: Geometry, tau: f64, k: Expr, boundary: Boundary) -> Result<Self, ProblemError> {
        let n = geometry.spatial_dim();
        let a = (0..n)
            .map(|j| {
                let mut alpha = vec![0; n];
                alpha[j] = 2;
                Coefficient { alpha, coeff: k.clone() }
            })
            .collect();
        Self::new(geometry, tau, a, boundary)
    }

    /// `B = Σ_j ν_j D_j` on both boundary components.
    pub fn neumann_boundary(geometry: Geometry) -> Boundary {
        let mut b = vec![Expr::constant(0.0); geometry.spatial_dim() + 1];
        // ν = +e_x at x = 0 and −e_x at x = 1, so b_x = 1 − 2x.
        b[1] = Expr::parse("1 - 2*x").expect("valid expression");
        Boundary::FirstOrder { b }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn spatial_dim(&self) -> usize {
        self.geometry.spatial_dim()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn coefficients(&self) -> &[Coefficient] {
        &self.a
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn boundary_kind(&self) -> BoundaryKind {
        match self.boundary {
            Boundary::Dirichlet => BoundaryKind::Dirichlet,
            Boundary::FirstOrder { .. } => BoundaryKind::FirstOrder,
        }
    }

    pub fn first_order(&self) -> Result<&[Expr], ProblemError> {
        match &self.boundary {
            Boundary::FirstOrder { b } => Ok(b),
            Boundary::Dirichlet => Err(ProblemError::NotFirstOrder),
        }
    }

    /// `Σ_{|α|=2} a_α(x, t) ξ^α`.
    pub fn principal_symbol(&self, x: &[f64], t: f64, xi: &[f64]) -> Complex64 {
        let (px, py) = point(x);
        self.a
            .iter()
            .filter(|c| c.alpha.iter().sum::<usize>() == 2)
            .map(|c| c.coeff.eval(px, py, t) * monomial(xi, &c.alpha))
            .sum()
    }

    /// Inward unit normal on boundary component `side` (0 at `x = 0`, 1 at `x = 1`).
    pub fn inward_normal(&self, side: usize) -> Vec<f64> {
        let mut nu = vec![0.0; self.spatial_dim()];
        nu[0] = if side == 0 { 1.0 } else { -1.0 };
        nu
    }

    /// `x` coordinate of boundary component `side`.
    pub fn boundary_x(side: usize) -> f64 {
        side as f64
    }

    /// True when no coefficient depends on any variable.
    pub fn has_constant_coefficients(&self) -> bool {
        let b_const = match &self.boundary {
            Boundary::Dirichlet => true,
            Boundary::FirstOrder { b } => b.iter().all(|e| e.as_constant().is_some()),
        };
        b_const && self.a.iter().all(|c| c.coeff.as_constant().is_some())
    }

    /// True when no coefficient of `A` depends on `t` (boundary coefficients
    /// may still vary in space).
    pub fn time_independent(&self) -> bool {
        let b_ok = match &self.boundary {
            Boundary::Dirichlet => true,
            Boundary::FirstOrder { b } => b.iter().all(|e| !e.depends_on(Var::T)),
        };
        b_ok && self.a.iter().all(|c| !c.coeff.depends_on(Var::T))
    }
}

/// `(x, y)` from a spatial point of either geometry.
pub fn point(x: &[f64]) -> (f64, f64) {
    (x[0], x.get(1).copied().unwrap_or(0.0))
}

pub fn monomial(xi: &[f64], alpha: &[usize]) -> Complex64 {
    Complex64::new(xi.iter().zip(alpha).map(|(v, &k)| v.powi(k as i32)).product(), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_symbol_and_validation() {
        let p = ParabolicProblem::heat(Geometry::PeriodicStrip, 0.5, Boundary::Dirichlet).unwrap();
        let s = p.principal_symbol(&[0.2, 0.3], 0.1, &[0.6, 0.8]);
        assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(p.has_constant_coefficients());
        let bad = Coefficient { alpha: vec![3], coeff: Expr::constant(1.0) };
        assert!(ParabolicProblem::new(Geometry::Interval, 1.0, vec![bad], Boundary::Dirichlet).is_err());
        let b = Boundary::FirstOrder { b: vec![Expr::constant(0.0)] };
        assert!(matches!(
            ParabolicProblem::heat(Geometry::Interval, 1.0, b),
            Err(ProblemError::BadBoundary { expected: 2, got: 1 })
        ));
        assert!(ParabolicProblem::heat(Geometry::Interval, 0.0, Boundary::Dirichlet).is_err());
    }

    #[test]
    fn config_round_trip() {
        let json = r#"{"geometry":"PeriodicStrip","tau":0.5,
            "a":[{"alpha":[2,0],"coeff":"1+t"},{"alpha":[0,2],"coeff":1}],
            "boundary":{"kind":"FirstOrder","b":["0","1-2*x","0.5"]}}"#;
        let p: ParabolicProblem = serde_json::from_str(json).unwrap();
        assert_eq!(p.boundary_kind(), BoundaryKind::FirstOrder);
        assert!(!p.time_independent());
        let back: ParabolicProblem = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back.coefficients().len(), 2);
        let s = back.principal_symbol(&[0.0, 0.0], 1.0, &[1.0, 0.0]);
        assert!((s - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }
}
