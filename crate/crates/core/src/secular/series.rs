//! Taylor coefficients in the detuning `xi` of the three functions that
//! appear in the effective master equation:
//!
//! * `1 / (1 + xi²)`       (the `f_k` of the cavity-decay double sum),
//! * `1 / sqrt(1 + xi²)`   (`sin 2chi` at zero coupling),
//! * `xi / sqrt(1 + xi²)`  (`cos 2chi` at zero coupling).
//!
//! Every derivative has the form `P_k(xi) (1 + xi²)^(-a-k)` with an integer
//! polynomial `P_k`, obtained from
//! `d/dxi [P u^(-a)] = [P' u - 2a xi P] u^(-a-1)`, `u = 1 + xi²`.
//! Coefficients stay exact integers until [`IntPoly::eval`].

use serde::Serialize;

use crate::fock::factorial;
use crate::model::ModelParams;

/// Polynomial in `xi` with integer coefficients, lowest power first.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct IntPoly(pub Vec<i128>);

impl IntPoly {
    pub fn constant(c: i128) -> Self {
        Self(vec![c]).trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0)
    }

    pub fn derivative(&self) -> Self {
        Self(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.checked_mul(i as i128).expect("derivative overflow"))
                .collect(),
        )
        .trimmed()
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.0.len().max(other.0.len());
        Self(
            (0..len)
                .map(|i| {
                    let a = self.0.get(i).copied().unwrap_or(0);
                    let b = other.0.get(i).copied().unwrap_or(0);
                    a.checked_add(b).expect("polynomial overflow")
                })
                .collect(),
        )
        .trimmed()
    }

    pub fn scale(&self, k: i128) -> Self {
        Self(
            self.0
                .iter()
                .map(|c| c.checked_mul(k).expect("polynomial overflow"))
                .collect(),
        )
        .trimmed()
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return Self::default();
        }
        let mut out = vec![0i128; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                let t = a.checked_mul(*b).expect("polynomial overflow");
                out[i + j] = out[i + j].checked_add(t).expect("polynomial overflow");
            }
        }
        Self(out).trimmed()
    }

    /// `xi^shift * self`.
    fn shifted(&self, shift: usize) -> Self {
        let mut v = vec![0; shift];
        v.extend_from_slice(&self.0);
        Self(v).trimmed()
    }

    /// `(1 + xi²)^power`.
    pub fn one_plus_sq_pow(power: u32) -> Self {
        let base = Self(vec![1, 0, 1]);
        (0..power).fold(Self::constant(1), |acc, _| acc.mul(&base))
    }

    pub fn eval(&self, xi: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * xi + *c as f64)
    }
}

/// `P(xi) (1 + xi²)^(-half_exponent/2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivative {
    pub numerator: IntPoly,
    pub half_exponent: u32,
}

impl Derivative {
    fn next(&self) -> Self {
        // P' (1 + xi²) - 2a xi P, with 2a = half_exponent
        let lead = self.numerator.derivative().mul(&IntPoly(vec![1, 0, 1]));
        let tail = self
            .numerator
            .shifted(1)
            .scale(-(self.half_exponent as i128));
        Self {
            numerator: lead.add(&tail),
            half_exponent: self.half_exponent + 2,
        }
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let u = 1.0 + xi * xi;
        self.numerator.eval(xi) * u.powf(-(self.half_exponent as f64) / 2.0)
    }
}

/// The three generating functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XiFunction {
    /// `1 / (1 + xi²)`
    InverseOnePlusSquare,
    /// `1 / sqrt(1 + xi²)`
    Sine,
    /// `xi / sqrt(1 + xi²)`
    Cosine,
}

impl XiFunction {
    fn seed(self) -> Derivative {
        match self {
            Self::InverseOnePlusSquare => Derivative {
                numerator: IntPoly::constant(1),
                half_exponent: 2,
            },
            Self::Sine => Derivative {
                numerator: IntPoly::constant(1),
                half_exponent: 1,
            },
            Self::Cosine => Derivative {
                numerator: IntPoly(vec![0, 1]),
                half_exponent: 1,
            },
        }
    }

    /// Derivatives of orders `0..=max_order`.
    pub fn derivatives(self, max_order: usize) -> Vec<Derivative> {
        let mut out = Vec::with_capacity(max_order + 1);
        out.push(self.seed());
        for k in 0..max_order {
            let next = out[k].next();
            out.push(next);
        }
        out
    }
}

/// Exact integer numerators of the sandwich weights
/// `C_j C_k + S_j S_k - δ_j0 δ_k0`, where `C_j`, `S_j` are the j-th `xi`
/// derivatives of `cos 2chi` and `sin 2chi` at zero coupling.
///
/// The weight equals `numerator(xi) / (1 + xi²)^(j+k+1)`. The identity
/// `cos² + sin² = 1` makes the `(0, 0)` numerator exactly zero.
pub struct SandwichNumerators {
    max_order: usize,
    table: Vec<Vec<IntPoly>>,
}

impl SandwichNumerators {
    pub fn new(max_order: usize) -> Self {
        let c = XiFunction::Cosine.derivatives(max_order);
        let s = XiFunction::Sine.derivatives(max_order);
        let mut table = vec![vec![IntPoly::default(); max_order + 1]; max_order + 1];
        for j in 0..=max_order {
            for k in 0..=max_order - j {
                let mut q = c[j]
                    .numerator
                    .mul(&c[k].numerator)
                    .add(&s[j].numerator.mul(&s[k].numerator));
                if j == 0 && k == 0 {
                    q = q.add(&IntPoly::one_plus_sq_pow(1).scale(-1));
                }
                table[j][k] = q;
            }
        }
        Self { max_order, table }
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Numerator for the pair `(j, k)`, `j + k <= max_order`.
    pub fn numerator(&self, j: usize, k: usize) -> &IntPoly {
        &self.table[j][k]
    }

    /// `(C_j C_k + S_j S_k - δ_j0 δ_k0) / (j! k!)` at `xi`.
    pub fn weight(&self, j: usize, k: usize, xi: f64) -> f64 {
        let u = 1.0 + xi * xi;
        let denom = factorial(j as u32) as f64 * factorial(k as u32) as f64;
        self.table[j][k].eval(xi) / (denom * u.powi((j + k + 1) as i32))
    }
}

/// Series coefficients of the effective master equation, each including
/// its power of `eta` and the `1/k!`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesCoefficients {
    pub eta: f64,
    pub xi: f64,
    /// `f_k = eta^k / k! d^k/dxi^k [1 / (1 + xi²)]`
    pub f: Vec<f64>,
    /// Coefficient of `(b + b†)^k` in `sin 2chi`.
    pub sin_series: Vec<f64>,
    /// Coefficient of `(b + b†)^k` in `cos 2chi`.
    pub cos_series: Vec<f64>,
}

/// Expands all three operator series up to `(b + b†)^(2N)`.
pub fn expand_coefficients(params: &ModelParams, order: usize) -> SeriesCoefficients {
    let max_k = 2 * order;
    let series = |func: XiFunction| -> Vec<f64> {
        func.derivatives(max_k)
            .iter()
            .enumerate()
            .map(|(k, d)| {
                params.eta.powi(k as i32) * d.eval(params.xi) / factorial(k as u32) as f64
            })
            .collect()
    };
    SeriesCoefficients {
        eta: params.eta,
        xi: params.xi,
        f: series(XiFunction::InverseOnePlusSquare),
        sin_series: series(XiFunction::Sine),
        cos_series: series(XiFunction::Cosine),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Central finite differences of increasing order from a fine stencil;
    /// only used for low orders where they are accurate.
    fn finite_difference(f: impl Fn(f64) -> f64, x: f64, order: usize) -> f64 {
        let h: f64 = 1e-2;
        match order {
            0 => f(x),
            1 => (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h),
            2 => {
                (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
                    / (12.0 * h * h)
            }
            3 => {
                (f(x - 3.0 * h) - 8.0 * f(x - 2.0 * h) + 13.0 * f(x - h) - 13.0 * f(x + h)
                    + 8.0 * f(x + 2.0 * h)
                    - f(x + 3.0 * h))
                    / (8.0 * h.powi(3))
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        type Case = (XiFunction, fn(f64) -> f64);
        let funcs: [Case; 3] = [
            (XiFunction::InverseOnePlusSquare, |x| 1.0 / (1.0 + x * x)),
            (XiFunction::Sine, |x| 1.0 / (1.0 + x * x).sqrt()),
            (XiFunction::Cosine, |x| x / (1.0 + x * x).sqrt()),
        ];
        for (func, f) in funcs {
            let ders = func.derivatives(3);
            for xi in [0.0, 0.3, -0.8, 1.7] {
                for (k, d) in ders.iter().enumerate() {
                    assert_relative_eq!(d.eval(xi), finite_difference(f, xi, k), epsilon = 1e-5);
                }
            }
        }
    }

    #[test]
    fn f_coefficients_at_zero_detuning() {
        let eta = 0.37;
        let c = expand_coefficients(&ModelParams::new(1e-3, 0.0, eta, 0.0), 2);
        assert_eq!(c.f.len(), 5);
        assert_eq!(c.f[0], 1.0);
        assert_eq!(c.f[1], 0.0);
        assert_relative_eq!(c.f[2], -eta * eta, epsilon = 1e-15);
        // 1/(1+x²) = 1 - x² + x⁴ - ...
        assert_relative_eq!(c.f[4], eta.powi(4), epsilon = 1e-15);
    }

    #[test]
    fn cos_series_at_zero_detuning() {
        let eta = 0.05;
        let c = expand_coefficients(&ModelParams::new(1e-3, 0.0, eta, 0.0), 1);
        assert_eq!(c.cos_series[0], 0.0);
        assert_relative_eq!(c.cos_series[1], eta, epsilon = 1e-16);
        assert_eq!(c.sin_series[0], 1.0);
    }

    #[test]
    fn zero_coupling_leaves_only_constant_terms() {
        let xi = 0.4;
        let c = expand_coefficients(&ModelParams::new(1e-3, 0.0, 0.0, xi), 4);
        for k in 1..=8 {
            assert_eq!(c.f[k], 0.0);
            assert_eq!(c.sin_series[k], 0.0);
            assert_eq!(c.cos_series[k], 0.0);
        }
        let (s, co) = (c.sin_series[0], c.cos_series[0]);
        assert_relative_eq!(s, 1.0 / (1.0 + xi * xi).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(co, xi / (1.0 + xi * xi).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(s * s + co * co, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sandwich_numerators_cancel_at_every_total_order() {
        // Σ_{j+k=s} C(s, j) Q_jk = 0 for s >= 1; Q_00 = 0.
        let max = 2 * crate::secular::MAX_ORDER;
        let table = SandwichNumerators::new(max);
        assert!(table.numerator(0, 0).is_zero());
        for s in 1..=max {
            let mut sum = IntPoly::default();
            for j in 0..=s {
                let w = crate::fock::binomial(s as u32, j as u32);
                sum = sum.add(&table.numerator(j, s - j).scale(w));
            }
            assert!(sum.is_zero(), "total order {s}");
        }
    }

    #[test]
    fn second_order_weight_is_squared_derivative_norm() {
        // C_1² + S_1² = 1 / (1 + xi²)²
        let table = SandwichNumerators::new(2);
        for xi in [0.0, 0.5, 2.0] {
            let u = 1.0 + xi * xi;
            assert_relative_eq!(table.weight(1, 1, xi), 1.0 / (u * u), epsilon = 1e-15);
            assert_relative_eq!(table.weight(2, 0, xi), -0.5 / (u * u), epsilon = 1e-15);
        }
    }
}
