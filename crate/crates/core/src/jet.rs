//! Truncated Taylor series for exact derivatives of smooth closed forms.

// Inherent float methods shadow the trait whenever std is linked.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;


/// Coefficients `c_j = f^{(j)}(x₀)/j!` for `j ≤ order`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Jet {
    pub c: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = alloc::vec![0.0; order + 1];
        c[0] = v;
        Jet { c }
    }

    /// The affine function `v + slope·(x − x₀)`.
    pub fn affine(v: f64, slope: f64, order: usize) -> Self {
        let mut j = Self::constant(v, order);
        if order > 0 {
            j.c[1] = slope;
        }
        j
    }

    /// `(x₀ + h)^k` expanded in `h`.
    pub fn monomial(x0: f64, k: usize, order: usize) -> Self {
        let mut c = alloc::vec![0.0; order + 1];
        let mut binom = 1.0;
        for (j, cj) in c.iter_mut().enumerate().take(k.min(order) + 1) {
            *cj = binom * x0.powi((k - j) as i32);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        Jet { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `j`-th derivative at the expansion point.
    pub fn derivative(&self, j: usize) -> f64 {
        let mut f = 1.0;
        for i in 2..=j {
            f *= i as f64;
        }
        self.c.get(j).copied().unwrap_or(0.0) * f
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let n = self.c.len();
        let mut c = alloc::vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet { c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { c: self.c.iter().map(|a| a * s).collect() }
    }

    pub fn add_const(&self, s: f64) -> Jet {
        let mut j = self.clone();
        j.c[0] += s;
        j
    }

    pub fn recip(&self) -> Jet {
        let n = self.c.len();
        let mut b = alloc::vec![0.0; n];
        b[0] = 1.0 / self.c[0];
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.c[j] * b[k - j]).sum();
            b[k] = -s * b[0];
        }
        Jet { c: b }
    }

    pub fn exp(&self) -> Jet {
        let n = self.c.len();
        let mut e = alloc::vec![0.0; n];
        e[0] = self.c[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * self.c[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Jet { c: e }
    }
}
