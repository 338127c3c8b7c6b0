//! The cutoff `β` used by the lifting operator, and its integral constants.
//!
//! `β(τ) = 1` for `|τ| ≤ a`, `0` for `|τ| ≥ b`, and in between
//! `β = S((b − |τ|)/(b − a))` with the smooth step
//! `S(x) = f(x)/(f(x) + f(1 − x))`, `f(x) = exp(−1/x)`. All derivatives of `β`
//! are continuous, including at `|τ| = a` and `|τ| = b`.

// Inherent float methods shadow the trait whenever std is linked.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::jet::Jet;
use crate::quad::integrate;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CutoffError {
    #[error("need 0 < flat_radius < support_radius, got {flat} and {support}")]
    BadRadii { flat: f64, support: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CutoffSpec")]
pub struct CutoffProfile {
    flat_radius: f64,
    support_radius: f64,
}

#[derive(Deserialize)]
struct CutoffSpec {
    flat_radius: f64,
    support_radius: f64,
}

impl TryFrom<CutoffSpec> for CutoffProfile {
    type Error = CutoffError;
    fn try_from(s: CutoffSpec) -> Result<Self, CutoffError> {
        CutoffProfile::new(s.flat_radius, s.support_radius)
    }
}

impl Default for CutoffProfile {
    fn default() -> Self {
        CutoffProfile { flat_radius: 0.5, support_radius: 1.0 }
    }
}

/// Below this distance from an end of the transition, `exp(−1/x)` underflows
/// against 1 and the step is flat to machine precision.
const EDGE: f64 = 1e-3;

impl CutoffProfile {
    pub fn new(flat_radius: f64, support_radius: f64) -> Result<Self, CutoffError> {
        if !(flat_radius > 0.0 && flat_radius < support_radius && support_radius.is_finite()) {
            return Err(CutoffError::BadRadii { flat: flat_radius, support: support_radius });
        }
        Ok(CutoffProfile { flat_radius, support_radius })
    }

    pub fn flat_radius(&self) -> f64 {
        self.flat_radius
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Taylor jet of `β` at `tau` up to `order`.
    pub(crate) fn jet(&self, tau: f64, order: usize) -> Jet {
        let (a, b) = (self.flat_radius, self.support_radius);
        let r = tau.abs();
        if r <= a {
            return Jet::constant(1.0, order);
        }
        if r >= b {
            return Jet::constant(0.0, order);
        }
        let x0 = (b - r) / (b - a);
        if x0 < EDGE {
            return Jet::constant(0.0, order);
        }
        if x0 > 1.0 - EDGE {
            return Jet::constant(1.0, order);
        }
        let sign = if tau < 0.0 { -1.0 } else { 1.0 };
        let x = Jet::affine(x0, -sign / (b - a), order);
        let one_minus = x.scale(-1.0).add_const(1.0);
        // u = 1/x − 1/(1−x); S = 1/(1 + e^u)
        let u = x.recip().add(&one_minus.recip().scale(-1.0));
        if u.value() <= 0.0 {
            u.exp().add_const(1.0).recip()
        } else {
            let e = u.scale(-1.0).exp();
            e.mul(&e.add_const(1.0).recip())
        }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.jet(tau, 0).value()
    }

    /// `β^{(m)}(τ)`.
    pub fn derivative(&self, tau: f64, m: usize) -> f64 {
        self.jet(tau, m).derivative(m)
    }

    /// `∂_τ^m (β(τ) τ^k)`.
    pub fn weighted_derivative(&self, tau: f64, m: usize, k: usize) -> f64 {
        self.jet(tau, m).mul(&Jet::monomial(tau, k, m)).derivative(m)
    }

    fn integrate_support(&self, f: impl Fn(f64) -> f64) -> f64 {
        let (a, b) = (self.flat_radius, self.support_radius);
        integrate(&f, -b, -a, 64, 16) + integrate(&f, -a, a, 8, 16) + integrate(&f, a, b, 64, 16)
    }

    /// `c₁ = ∫ |∂_τ^m(β(τ)τ^k)|² dτ` and `c₂ = ∫ |τ^k β(τ)|² dτ`.
    pub fn lift_constants(&self, m: usize, k: usize) -> LiftConstants {
        let c1 = self.integrate_support(|t| {
            let v = self.weighted_derivative(t, m, k);
            v * v
        });
        let c2 = self.integrate_support(|t| {
            let v = self.eval(t) * t.powi(k as i32);
            v * v
        });
        LiftConstants { m, k, c1, c2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftConstants {
    pub m: usize,
    pub k: usize,
    pub c1: f64,
    pub c2: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_support() {
        let beta = CutoffProfile::default();
        assert_eq!(beta.eval(0.0), 1.0);
        for t in [-0.5, -0.2, 0.3, 0.5] {
            assert_eq!(beta.eval(t), 1.0);
        }
        for t in [-3.0, -1.0, 1.0, 1.5] {
            assert_eq!(beta.eval(t), 0.0);
        }
        assert!((beta.eval(0.75) - 0.5).abs() < 1e-15);
        assert!((beta.eval(-0.75) - 0.5).abs() < 1e-15);
        assert!(CutoffProfile::new(1.0, 0.5).is_err());
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let beta = CutoffProfile::default();
        let h = 1e-5;
        for t in [0.55, 0.7, 0.9, -0.62] {
            let fd = (beta.eval(t + h) - beta.eval(t - h)) / (2.0 * h);
            assert!((beta.derivative(t, 1) - fd).abs() < 1e-8, "t={t}");
            let fd2 = (beta.derivative(t + h, 1) - beta.derivative(t - h, 1)) / (2.0 * h);
            assert!((beta.derivative(t, 2) - fd2).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn constants_of_flat_part() {
        // c₂(0) = ∫β² lies between the flat width and the support width
        let c = CutoffProfile::default().lift_constants(0, 0);
        assert!(c.c2 > 1.0 && c.c2 < 2.0);
        assert_eq!(c.c1, c.c2);
        // the step is symmetric about 3/4, so ∫β = 2·(1/2 + 1/4) exactly
        let beta = CutoffProfile::default();
        let mass = beta.integrate_support(|t| beta.eval(t));
        assert!((mass - 1.5).abs() < 1e-13);
    }
}
