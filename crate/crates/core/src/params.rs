//! Function parameters: slowly varying `φ` and interpolation parameters `ψ`.
//!
//! The shipped families are iterated-log powers shifted so that every factor
//! equals 1 at `r = 1`, e.g. `1 + ln r` instead of `ln r`. Custom evaluators are
//! accepted but can only be checked by sampling.

// Inherent float methods shadow the trait whenever std is linked.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::{format, string::String, sync::Arc, vec::Vec};
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("parameter is not positive and finite at r = {r} (value {value})")]
    NonPositiveValue { r: f64, value: f64 },
    #[error("orders must satisfy s0 < s < s1, got ({s0}, {s}, {s1})")]
    OrderingViolation { s0: f64, s: f64, s1: f64 },
    #[error("alpha/beta keeps growing near infinity: {ratios:?}")]
    UnboundedRatio { ratios: [f64; 3] },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

/// Positive scalar function wrapped for sharing across threads.
#[derive(Clone)]
pub struct CustomFn {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CustomFn {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CustomFn { label: label.into(), f: Arc::new(f) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn call(&self, r: f64) -> f64 {
        (self.f)(r)
    }
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomFn({})", self.label)
    }
}

/// Sample radii used for the positivity check: 1, 10, ..., 1e8.
pub const DECADE_GRID: [f64; 9] = [1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8];

fn one() -> f64 {
    1.0
}

/// A function parameter `φ` of class 𝓜, or a power times such a parameter.
///
/// Config form: `{"kind":"LogPower","theta":[1.0,-0.5]}` is
/// `(1+ln r)^1 · (1+ln(1+ln r))^-0.5`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FunctionParam {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    LogPower {
        theta: Vec<f64>,
    },
    PowerTimesSlow {
        base_power: f64,
        #[serde(default)]
        theta: Vec<f64>,
    },
    #[serde(skip)]
    Custom { f: CustomFn },
}

impl Default for FunctionParam {
    fn default() -> Self {
        FunctionParam::one()
    }
}

/// `Π ℓ_i(r)^{θ_i}` with `ℓ_1 = 1 + ln r`, `ℓ_{i+1} = 1 + ln ℓ_i`, for `r ≥ 1`.
fn iterated_log_product(theta: &[f64], r: f64) -> f64 {
    let mut level = 1.0 + r.max(1.0).ln();
    let mut out = 1.0;
    for (i, &th) in theta.iter().enumerate() {
        if i > 0 {
            level = 1.0 + level.ln();
        }
        if th != 0.0 {
            out *= level.powf(th);
        }
    }
    out
}

impl FunctionParam {
    /// `φ ≡ 1`.
    pub fn one() -> Self {
        FunctionParam::Constant { value: 1.0 }
    }

    pub fn log_power(theta: &[f64]) -> Self {
        FunctionParam::LogPower { theta: theta.to_vec() }
    }

    pub fn power_times_slow(base_power: f64, theta: &[f64]) -> Self {
        FunctionParam::PowerTimesSlow { base_power, theta: theta.to_vec() }
    }

    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        FunctionParam::Custom { f: CustomFn::new(label, f) }
    }

    /// Exponent of the `r^θ` factor; zero for members of 𝓜.
    pub fn base_power(&self) -> f64 {
        match self {
            FunctionParam::PowerTimesSlow { base_power, .. } => *base_power,
            _ => 0.0,
        }
    }

    pub fn exponents(&self) -> &[f64] {
        match self {
            FunctionParam::LogPower { theta } | FunctionParam::PowerTimesSlow { theta, .. } => theta,
            _ => &[],
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self, FunctionParam::Custom { .. })
    }

    /// Evaluate at `r`. The log families are defined on `[1, ∞)` and are held
    /// at their value at 1 below that.
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            FunctionParam::Constant { value } => *value,
            FunctionParam::LogPower { theta } => iterated_log_product(theta, r),
            FunctionParam::PowerTimesSlow { base_power, theta } => {
                r.powf(*base_power) * iterated_log_product(theta, r)
            }
            FunctionParam::Custom { f } => f.call(r),
        }
    }

    /// Sampled positivity on `{1, 10, ..., 1e8}`.
    pub fn check_positive(&self) -> Result<(), ParamError> {
        for &r in DECADE_GRID.iter() {
            positive_at(|x| self.eval(x), r)?;
        }
        Ok(())
    }

    /// Short label used in reports and file names.
    pub fn label(&self) -> String {
        format!("{self}")
    }
}

impl fmt::Display for FunctionParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn log_part(f: &mut fmt::Formatter<'_>, theta: &[f64]) -> fmt::Result {
            let mut first = true;
            for (i, th) in theta.iter().enumerate() {
                if *th == 0.0 {
                    continue;
                }
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "log{}^{}", i + 1, th)?;
            }
            if first {
                write!(f, "1")?;
            }
            Ok(())
        }
        match self {
            FunctionParam::Constant { value } => write!(f, "{value}"),
            FunctionParam::LogPower { theta } => log_part(f, theta),
            FunctionParam::PowerTimesSlow { base_power, theta } => {
                write!(f, "r^{base_power}*")?;
                log_part(f, theta)
            }
            FunctionParam::Custom { f: c } => write!(f, "custom:{}", c.label()),
        }
    }
}

fn positive_at(f: impl Fn(f64) -> f64, r: f64) -> Result<f64, ParamError> {
    let value = f(r);
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ParamError::NonPositiveValue { r, value })
    }
}

/// Outcome of [`check_slow_variation`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlowVariationReport {
    pub radii: Vec<f64>,
    pub deviations: Vec<f64>,
    pub final_deviation: f64,
    pub decreasing: bool,
    pub pass: bool,
}

/// Heuristic diagnostic for `φ(λr)/φ(r) → 1`.
///
/// Computes `max_λ |φ(λr)/φ(r) − 1|` at `r = 1e3, 1e4, ...` up to `r_max`
/// (and at `r_max` itself). Passes when the sequence does not increase and the
/// last value is below 0.1.
pub fn check_slow_variation(
    phi: &FunctionParam,
    lambdas: &[f64],
    r_max: f64,
) -> Result<SlowVariationReport, ParamError> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(0.25..=4.0).contains(l)) {
        return Err(ParamError::InvalidArgument("lambdas must lie in [1/4, 4]"));
    }
    if !(r_max >= 1e3) || !r_max.is_finite() {
        return Err(ParamError::InvalidArgument("r_max must be finite and at least 1e3"));
    }
    phi.check_positive()?;

    let mut radii = Vec::new();
    let mut r = 1e3;
    while r <= r_max * (1.0 + 1e-12) {
        radii.push(r);
        r *= 10.0;
    }
    if (radii[radii.len() - 1] / r_max - 1.0).abs() > 1e-12 {
        radii.push(r_max);
    }

    let mut deviations = Vec::with_capacity(radii.len());
    for &r in &radii {
        let base = positive_at(|x| phi.eval(x), r)?;
        let mut worst = 0.0f64;
        for &l in lambdas {
            let shifted = positive_at(|x| phi.eval(x), l * r)?;
            worst = worst.max((shifted / base - 1.0).abs());
        }
        deviations.push(worst);
    }

    let decreasing = deviations.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15);
    let final_deviation = deviations[deviations.len() - 1];
    Ok(SlowVariationReport {
        radii,
        deviations,
        final_deviation,
        decreasing,
        pass: decreasing && final_deviation < 0.1,
    })
}

/// Constants with `c0·r^{s0−s} ≤ φ(r) ≤ c1·r^{s1−s}` on `[1, 1e8]`: a
/// 20-per-decade scan, then a golden-section refinement around the extreme
/// samples.
pub fn power_sandwich(phi: &FunctionParam, s0: f64, s: f64, s1: f64) -> Result<(f64, f64), ParamError> {
    if !(s0 < s && s < s1) {
        return Err(ParamError::OrderingViolation { s0, s, s1 });
    }
    // Both bounds in ln-space: ln φ(e^u) + p·u, minimised for c0, maximised for c1.
    let g = |u: f64, p: f64| -> Result<f64, ParamError> {
        let r = u.exp();
        Ok(positive_at(|x| phi.eval(x), r)?.ln() + p * u)
    };
    let (u_max, steps) = (8.0 * core::f64::consts::LN_10, 160usize);
    let node = |i: usize| u_max * i as f64 / steps as f64;
    let mut lo = (f64::INFINITY, 0usize);
    let mut hi = (f64::NEG_INFINITY, 0usize);
    for i in 0..=steps {
        let u = node(i);
        let a = g(u, s - s0)?;
        if a < lo.0 {
            lo = (a, i);
        }
        let b = g(u, s - s1)?;
        if b > hi.0 {
            hi = (b, i);
        }
    }
    let refine = |(best, i): (f64, usize), p: f64, sign: f64| -> Result<f64, ParamError> {
        let (mut a, mut b) = (node(i.saturating_sub(1)), node((i + 1).min(steps)));
        let k = 0.5 * (5f64.sqrt() - 1.0);
        let mut best = sign * best;
        for _ in 0..80 {
            let (x1, x2) = (b - k * (b - a), a + k * (b - a));
            let (f1, f2) = (sign * g(x1, p)?, sign * g(x2, p)?);
            best = best.min(f1).min(f2);
            if f1 < f2 {
                b = x2;
            } else {
                a = x1;
            }
        }
        Ok(sign * best)
    };
    Ok((refine(lo, s - s0, 1.0)?.exp(), refine(hi, s - s1, -1.0)?.exp()))
}

/// An interpolation parameter `ψ` of class 𝓑.
#[derive(Clone, Debug)]
pub enum InterpParam {
    /// `ψ(r) = r^θ`.
    Power { theta: f64 },
    Constant { value: f64 },
    /// The parameter built from `(s0, s, s1, φ)` by [`build_psi`].
    FromOrders { s0: f64, s: f64, s1: f64, phi: FunctionParam },
    /// `ω(r) = α(r)·ψ(β(r)/α(r))`.
    Reiterated { alpha: Arc<InterpParam>, beta: Arc<InterpParam>, psi: Arc<InterpParam> },
    Custom { f: CustomFn },
}

impl InterpParam {
    pub fn power(theta: f64) -> Self {
        InterpParam::Power { theta }
    }

    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        InterpParam::Custom { f: CustomFn::new(label, f) }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            InterpParam::Power { theta } => r.powf(*theta),
            InterpParam::Constant { value } => *value,
            InterpParam::FromOrders { s0, s, s1, phi } => {
                if r >= 1.0 {
                    let width = s1 - s0;
                    r.powf((s - s0) / width) * phi.eval(r.powf(1.0 / width))
                } else {
                    phi.eval(1.0)
                }
            }
            InterpParam::Reiterated { alpha, beta, psi } => {
                let a = alpha.eval(r);
                a * psi.eval(beta.eval(r) / a)
            }
            InterpParam::Custom { f } => f.call(r),
        }
    }

    pub fn label(&self) -> String {
        match self {
            InterpParam::Power { theta } => format!("r^{theta}"),
            InterpParam::Constant { value } => format!("{value}"),
            InterpParam::FromOrders { s0, s, s1, phi } => format!("psi({s0},{s},{s1};{phi})"),
            InterpParam::Reiterated { alpha, beta, psi } => {
                format!("reiterate({},{},{})", alpha.label(), beta.label(), psi.label())
            }
            InterpParam::Custom { f } => format!("custom:{}", f.label()),
        }
    }

    /// Sampled check for membership in 𝓑: positive and finite on
    /// `[1e-8, 1e8]`, and not decaying over the last two decades (so that
    /// `1/ψ` stays bounded near infinity).
    pub fn check_membership(&self) -> MembershipReport {
        let mut min_value = f64::INFINITY;
        let mut max_value = 0.0f64;
        let mut finite_positive = true;
        for i in -160..=160 {
            let v = self.eval(10f64.powf(i as f64 / 20.0));
            if !(v.is_finite() && v > 0.0) {
                finite_positive = false;
                continue;
            }
            min_value = min_value.min(v);
            max_value = max_value.max(v);
        }
        let tail_slope = if finite_positive {
            (self.eval(1e8).ln() - self.eval(1e6).ln()) / (2.0 * core::f64::consts::LN_10)
        } else {
            f64::NAN
        };
        MembershipReport {
            min_value,
            max_value,
            tail_slope,
            pass: finite_positive && tail_slope >= -1e-3,
        }
    }

    /// Advisory pseudoconcavity diagnostic: local log-log slopes over
    /// `[1e2, 1e8]` should stay within `[0, 1]` and not increase.
    pub fn pseudoconcavity(&self) -> PseudoconcavityReport {
        let n = 61;
        let xs: Vec<f64> = (0..n).map(|i| 2.0 + 6.0 * i as f64 / (n - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| self.eval(10f64.powf(x)).ln()).collect();
        let slopes: Vec<f64> = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / ((x[1] - x[0]) * core::f64::consts::LN_10))
            .collect();
        let mean_x = xs.iter().sum::<f64>() / n as f64;
        let mean_y = ys.iter().sum::<f64>() / n as f64;
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            sxy += (x - mean_x) * (y - mean_y);
            sxx += (x - mean_x) * (x - mean_x);
        }
        let slope = sxy / sxx / core::f64::consts::LN_10;
        let max_slope_increase = slopes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        let tol = 0.05;
        let in_range = slopes.iter().all(|&k| k.is_finite() && k >= -tol && k <= 1.0 + tol);
        PseudoconcavityReport {
            slope,
            max_slope_increase,
            pass: in_range && max_slope_increase <= 1e-3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MembershipReport {
    pub min_value: f64,
    pub max_value: f64,
    pub tail_slope: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PseudoconcavityReport {
    /// Fitted exponent of `ψ ≈ c·r^θ` on `[1e2, 1e8]`.
    pub slope: f64,
    pub max_slope_increase: f64,
    pub pass: bool,
}

/// `ψ(r) = r^{(s−s0)/(s1−s0)} φ(r^{1/(s1−s0)})` for `r ≥ 1`, `φ(1)` below.
pub fn build_psi(s0: f64, s: f64, s1: f64, phi: &FunctionParam) -> Result<InterpParam, ParamError> {
    if !(s0 < s && s < s1) || !(s0.is_finite() && s1.is_finite()) {
        return Err(ParamError::OrderingViolation { s0, s, s1 });
    }
    Ok(InterpParam::FromOrders { s0, s, s1, phi: phi.clone() })
}

/// `ω(r) = α(r)·ψ(β(r)/α(r))`. Rejects inputs whose ratio `α/β` increases
/// over each of the last two decades up to `1e8`.
pub fn reiterate(alpha: &InterpParam, beta: &InterpParam, psi: &InterpParam) -> Result<InterpParam, ParamError> {
    let mut ratios = [0.0; 3];
    for (slot, r) in ratios.iter_mut().zip([1e6, 1e7, 1e8]) {
        let a = positive_at(|x| alpha.eval(x), r)?;
        let b = positive_at(|x| beta.eval(x), r)?;
        *slot = a / b;
    }
    let grows = |lo: f64, hi: f64| hi > lo * (1.0 + 1e-9);
    if grows(ratios[0], ratios[1]) && grows(ratios[1], ratios[2]) {
        return Err(ParamError::UnboundedRatio { ratios });
    }
    Ok(InterpParam::Reiterated {
        alpha: Arc::new(alpha.clone()),
        beta: Arc::new(beta.clone()),
        psi: Arc::new(psi.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn log_power_values() {
        let phi = FunctionParam::log_power(&[1.0, -0.5]);
        let r = 1e4f64;
        let l1 = 1.0 + r.ln();
        let l2 = 1.0 + l1.ln();
        assert!(rel(phi.eval(r), l1 / l2.sqrt()) < 1e-15);
        assert_eq!(phi.eval(1.0), 1.0);
        assert_eq!(phi.eval(0.3), 1.0);
    }

    #[test]
    fn config_round_trip_shape() {
        let phi: FunctionParam = serde_json::from_str(r#"{"kind":"LogPower","theta":[1.0,-0.5]}"#).unwrap();
        assert_eq!(phi.exponents(), &[1.0, -0.5]);
        let c: FunctionParam = serde_json::from_str(r#"{"kind":"Constant"}"#).unwrap();
        assert_eq!(c.eval(7.0), 1.0);
        let back = serde_json::to_string(&phi).unwrap();
        assert!(back.contains("\"kind\":\"LogPower\""));
    }

    #[test]
    fn slow_variation_constant() {
        let rep = check_slow_variation(&FunctionParam::one(), &[0.5, 2.0, 4.0], 1e8).unwrap();
        assert!(rep.pass);
        assert!(rep.deviations.iter().all(|&d| d == 0.0));
        assert_eq!(rep.radii.len(), 6);
    }

    #[test]
    fn slow_variation_log() {
        let phi = FunctionParam::log_power(&[1.0]);
        let rep = check_slow_variation(&phi, &[2.0], 1e6).unwrap();
        // ln 2 / (1 + ln 1e6)
        assert!((rep.final_deviation - 0.046_784_8).abs() < 1e-6);
        assert!(rep.pass);
    }

    #[test]
    fn slow_variation_power_fails() {
        let phi = FunctionParam::power_times_slow(0.5, &[]);
        let rep = check_slow_variation(&phi, &[2.0], 1e8).unwrap();
        assert!((rep.final_deviation - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!(!rep.pass);
    }

    #[test]
    fn slow_variation_rejects_bad_input() {
        let neg = FunctionParam::custom("neg", |r| 1.0 - r);
        assert!(matches!(
            check_slow_variation(&neg, &[2.0], 1e4),
            Err(ParamError::NonPositiveValue { .. })
        ));
        assert!(check_slow_variation(&FunctionParam::one(), &[8.0], 1e4).is_err());
        assert!(check_slow_variation(&FunctionParam::one(), &[2.0], 10.0).is_err());
    }

    #[test]
    fn psi_examples() {
        let psi = build_psi(0.0, 1.0, 2.0, &FunctionParam::one()).unwrap();
        assert_eq!(psi.eval(0.5), 1.0);
        assert!(rel(psi.eval(9.0), 3.0) < 1e-15);
        let psi = build_psi(2.0, 3.0, 5.0, &FunctionParam::log_power(&[1.0])).unwrap();
        let c = 9f64.powf(1.0 / 3.0);
        assert!(rel(psi.eval(9.0), c * (1.0 + c.ln())) < 1e-14);
        assert!((psi.eval(9.0) - 3.6036).abs() < 1e-3);
        assert!(matches!(
            build_psi(0.0, 0.0, 2.0, &FunctionParam::one()),
            Err(ParamError::OrderingViolation { .. })
        ));
    }

    #[test]
    fn reiterate_power_case() {
        let w = reiterate(&InterpParam::power(0.25), &InterpParam::power(0.75), &InterpParam::power(0.5)).unwrap();
        for r in [1.0, 3.0, 1e3, 1e7] {
            assert!(rel(w.eval(r), r.sqrt()) < 1e-14);
        }
        let err = reiterate(&InterpParam::power(0.75), &InterpParam::power(0.25), &InterpParam::power(0.5));
        assert!(matches!(err, Err(ParamError::UnboundedRatio { .. })));
    }

    #[test]
    fn reiterate_proof_triple() {
        let phi = FunctionParam::log_power(&[1.0]);
        let (eps, delta, s) = (0.25, 0.5, 3.0);
        let alpha = build_psi(s - eps - delta, s - eps, s + eps + delta, &phi).unwrap();
        let beta = build_psi(s - eps - delta, s + eps, s + eps + delta, &phi).unwrap();
        let w = reiterate(&alpha, &beta, &InterpParam::power(0.5)).unwrap();
        for r in [1.0, 2.5, 40.0, 1e5, 1e9] {
            let expect = r.sqrt() * phi.eval(r.powf(2.0 / 3.0));
            assert!(rel(w.eval(r), expect) < 1e-13, "r={r}");
        }
        assert_eq!(w.eval(0.5), 1.0);
    }

    #[test]
    fn sandwich_constants_finite() {
        let phi = FunctionParam::log_power(&[-1.0]);
        let (c0, c1) = power_sandwich(&phi, 1.0, 1.5, 2.0).unwrap();
        assert!(c0 > 0.0 && c0.is_finite() && c1 > 0.0 && c1.is_finite());
    }

    #[test]
    fn membership_and_concavity() {
        let psi = build_psi(0.0, 1.0, 2.0, &FunctionParam::log_power(&[1.0])).unwrap();
        assert!(psi.check_membership().pass);
        let pc = psi.pseudoconcavity();
        assert!(pc.pass && (pc.slope - 0.5).abs() < 0.1);
        let decaying = InterpParam::custom("1/r", |r| 1.0 / r);
        assert!(!decaying.check_membership().pass);
        assert!(!InterpParam::power(1.5).pseudoconcavity().pass);
    }
}
