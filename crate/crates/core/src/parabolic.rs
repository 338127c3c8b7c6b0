//! Counting compatibility conditions and locating the jump sets `E₀`, `E₁`.
//!
//! `l = 0` is the Dirichlet problem, `l = 1` the first-order boundary problem.

// Inherent float methods shadow the trait whenever std is linked.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompatError {
    #[error("order s = {0} must exceed 2")]
    OrderTooLow(f64),
    #[error("interval index {r} is not valid for l = {l}")]
    BadInterval { l: u8, r: usize },
}

/// Kind of boundary condition: Dirichlet (`l = 0`) or first order (`l = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryKind {
    Dirichlet,
    FirstOrder,
}

impl BoundaryKind {
    pub fn l(self) -> u8 {
        match self {
            BoundaryKind::Dirichlet => 0,
            BoundaryKind::FirstOrder => 1,
        }
    }

    /// Offset `c` in `#{k ≥ 0 : k < s/2 − c}`.
    fn offset(self) -> f64 {
        match self {
            BoundaryKind::Dirichlet => 0.75,
            BoundaryKind::FirstOrder => 1.25,
        }
    }

    /// Order lost on the lateral surface: `1/2` or `3/2`.
    pub fn lateral_loss(self) -> f64 {
        match self {
            BoundaryKind::Dirichlet => 0.5,
            BoundaryKind::FirstOrder => 1.5,
        }
    }
}

/// Number of compatibility conditions at order `s > 2`.
pub fn compat_count(s: f64, kind: BoundaryKind) -> Result<usize, CompatError> {
    if !(s > 2.0) || !s.is_finite() {
        return Err(CompatError::OrderTooLow(s));
    }
    Ok((0.5 * s - kind.offset()).ceil().max(0.0) as usize)
}

/// Exact membership in `E₀ = {2r + 3/2}` or `E₁ = {2r + 1/2}`, `r ≥ 1`.
pub fn in_jump_set(s: f64, kind: BoundaryKind) -> bool {
    let shift = match kind {
        BoundaryKind::Dirichlet => 1.5,
        BoundaryKind::FirstOrder => 0.5,
    };
    let q = 0.5 * (s - shift);
    q.is_finite() && q >= 1.0 && q == q.floor()
}

/// Open interval on which the count is constant: `J_{0,1} = (2, 7/2)`,
/// `J_{0,r} = (2r − 1/2, 2r + 3/2)` for `r ≥ 2`, `J_{1,0} = (2, 5/2)`,
/// `J_{1,r} = (2r + 1/2, 2r + 5/2)` for `r ≥ 1`.
pub fn jump_interval(kind: BoundaryKind, r: usize) -> Result<(f64, f64), CompatError> {
    let rf = r as f64;
    match (kind, r) {
        (BoundaryKind::Dirichlet, 0) => Err(CompatError::BadInterval { l: 0, r }),
        (BoundaryKind::Dirichlet, 1) => Ok((2.0, 3.5)),
        (BoundaryKind::Dirichlet, _) => Ok((2.0 * rf - 0.5, 2.0 * rf + 1.5)),
        (BoundaryKind::FirstOrder, 0) => Ok((2.0, 2.5)),
        (BoundaryKind::FirstOrder, _) => Ok((2.0 * rf + 0.5, 2.0 * rf + 2.5)),
    }
}

/// Index `r` of the interval containing `s`, or `None` on a jump point.
pub fn interval_of(s: f64, kind: BoundaryKind) -> Result<Option<usize>, CompatError> {
    let count = compat_count(s, kind)?;
    Ok(if in_jump_set(s, kind) { None } else { Some(count) })
}

/// Binomial coefficient as a float; exact for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

#[cfg(test)]
mod tests {
    use super::*;
    use BoundaryKind::*;

    #[test]
    fn worked_counts() {
        assert_eq!(compat_count(3.0, Dirichlet).unwrap(), 1);
        assert_eq!(compat_count(3.5, Dirichlet).unwrap(), 1);
        assert_eq!(compat_count(3.5 + 1e-9, Dirichlet).unwrap(), 2);
        assert_eq!(compat_count(4.0, Dirichlet).unwrap(), 2);
        assert_eq!(compat_count(5.5, Dirichlet).unwrap(), 2);
        assert_eq!(compat_count(2.4, FirstOrder).unwrap(), 0);
        assert_eq!(compat_count(2.5, FirstOrder).unwrap(), 0);
        assert_eq!(compat_count(2.6, FirstOrder).unwrap(), 1);
        assert!(compat_count(2.0, Dirichlet).is_err());
    }

    #[test]
    fn jump_sets() {
        assert!(in_jump_set(3.5, Dirichlet));
        assert!(in_jump_set(5.5, Dirichlet));
        assert!(!in_jump_set(1.5, Dirichlet));
        assert!(!in_jump_set(4.5, Dirichlet));
        assert!(in_jump_set(2.5, FirstOrder));
        assert!(in_jump_set(4.5, FirstOrder));
        assert!(!in_jump_set(0.5, FirstOrder));
        assert_eq!(interval_of(3.5, Dirichlet).unwrap(), None);
        assert_eq!(interval_of(4.0, Dirichlet).unwrap(), Some(2));
    }

    #[test]
    fn intervals_hold_constant_counts() {
        for kind in [Dirichlet, FirstOrder] {
            for r in 0..6 {
                let Ok((lo, hi)) = jump_interval(kind, r) else { continue };
                for i in 1..20 {
                    let s = lo + (hi - lo) * i as f64 / 20.0;
                    assert_eq!(compat_count(s, kind).unwrap(), r, "{kind:?} r={r} s={s}");
                }
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(3, 0), 1.0);
        assert_eq!(binomial(2, 3), 0.0);
    }
}
