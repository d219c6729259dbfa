//! Truncated Fock-space operators and exact normal ordering of quadrature
//! powers.
//!
//! The normal-ordered form of `(b† + b)^k` comes from the binomial identity
//! for two operators `A`, `B` whose commutator `C = [A, B]` is central:
//!
//! ```text
//! (A + B)^n = Σ_{k'} n! / (k'! ((n-k')/2)!) (-C/2)^((n-k')/2) Σ_r C(k', r) A^r B^(k'-r)
//! ```
//!
//! where `k'` runs over the values `n, n-2, ...` of the same parity as `n`.
//! With `A = b†`, `B = b` and `C = -1`, every `A^r B^(k'-r)` is already a
//! normal-ordered monomial.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact coefficient type of normal-ordered polynomials.
pub type Coeff = Ratio<i128>;

/// A dense operator on the Fock ladder `|0>, ..., |n_max>`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix(pub DMatrix<Complex64>);

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_max(&self) -> usize {
        self.dim() - 1
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    /// Real parts, for operators known to be real in the Fock basis.
    pub fn real(&self) -> DMatrix<f64> {
        self.0.map(|z| z.re)
    }
}

/// Annihilation, creation and number operators of one truncation.
#[derive(Clone, Debug)]
pub struct LadderMatrices {
    pub annihilation: OperatorMatrix,
    pub creation: OperatorMatrix,
    pub number: OperatorMatrix,
}

/// Ladder operators on `n_max + 1` Fock levels.
///
/// *Panics* if `n_max == 0`.
pub fn ladder_matrices(n_max: usize) -> LadderMatrices {
    assert!(n_max >= 1, "Fock truncation needs n_max >= 1");
    let dim = n_max + 1;
    let annihilation = DMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            Complex64::zero()
        }
    });
    let creation = annihilation.adjoint();
    let number = &creation * &annihilation;
    LadderMatrices {
        annihilation: OperatorMatrix(annihilation),
        creation: OperatorMatrix(creation),
        number: OperatorMatrix(number),
    }
}

/// `x (x-1) ... (x-k+1)` as a float; zero when `k > x`.
pub fn falling_factorial(x: usize, k: usize) -> f64 {
    if k > x {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (x - i) as f64)
}

/// `<n| b†^p b^q |m>`.
pub fn monomial_element(p: usize, q: usize, n: usize, m: usize) -> f64 {
    if m < q || n < p || m - q != n - p {
        return 0.0;
    }
    (falling_factorial(m, q) * falling_factorial(n, p)).sqrt()
}

/// A finite sum `Σ c_pq b†^p b^q` of normal-ordered monomials.
///
/// Keys are `(p, q)` = (creation power, annihilation power). Zero
/// coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NormalOrderedPoly {
    terms: BTreeMap<(u32, u32), Coeff>,
}

impl NormalOrderedPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::monomial(0, 0, Coeff::one())
    }

    pub fn monomial(p: u32, q: u32, coeff: Coeff) -> Self {
        let mut out = Self::zero();
        out.add_term(p, q, coeff);
        out
    }

    pub fn annihilation() -> Self {
        Self::monomial(0, 1, Coeff::one())
    }

    pub fn creation() -> Self {
        Self::monomial(1, 0, Coeff::one())
    }

    pub fn number() -> Self {
        Self::monomial(1, 1, Coeff::one())
    }

    pub fn add_term(&mut self, p: u32, q: u32, coeff: Coeff) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry((p, q)).or_insert_with(Coeff::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&(p, q));
        }
    }

    pub fn coeff(&self, p: u32, q: u32) -> Coeff {
        self.terms.get(&(p, q)).copied().unwrap_or_else(Coeff::zero)
    }

    /// Iterates `((p, q), coeff)` in lexicographic key order.
    pub fn iter(&self) -> impl Iterator<Item = ((u32, u32), Coeff)> + '_ {
        self.terms.iter().map(|(&k, &c)| (k, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest total degree `p + q`.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(p, q)| p + q).max().unwrap_or(0)
    }

    pub fn scaled(&self, factor: Coeff) -> Self {
        let mut out = Self::zero();
        for ((p, q), c) in self.iter() {
            out.add_term(p, q, c * factor);
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((p, q), c) in other.iter() {
            out.add_term(p, q, c);
        }
        out
    }

    /// Hermitian conjugate: `b†^p b^q -> b†^q b^p`.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for ((p, q), c) in self.iter() {
            out.add_term(q, p, c);
        }
        out
    }

    /// Normal-ordered product, using
    /// `b^q b†^r = Σ_j j! C(q, j) C(r, j) b†^(r-j) b^(q-j)`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for ((p1, q1), c1) in self.iter() {
            for ((p2, q2), c2) in other.iter() {
                for j in 0..=q1.min(p2) {
                    let w = factorial(j) * binomial(q1, j) * binomial(p2, j);
                    out.add_term(p1 + p2 - j, q1 + q2 - j, c1 * c2 * Coeff::from_integer(w));
                }
            }
        }
        out
    }

    /// Matrix of the polynomial on `n_max + 1` Fock levels.
    pub fn to_matrix(&self, n_max: usize) -> DMatrix<f64> {
        let dim = n_max + 1;
        let mut m = DMatrix::zeros(dim, dim);
        for ((p, q), c) in self.iter() {
            let c = to_f64(c);
            let (p, q) = (p as usize, q as usize);
            for col in q..dim {
                let row = col - q + p;
                if row < dim {
                    m[(row, col)] += c * monomial_element(p, q, row, col);
                }
            }
        }
        m
    }
}

pub(crate) fn to_f64(c: Coeff) -> f64 {
    c.numer().to_f64().unwrap() / c.denom().to_f64().unwrap()
}

pub(crate) fn factorial(n: u32) -> i128 {
    (1..=n as i128).product()
}

pub(crate) fn binomial(n: u32, k: u32) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k as i128 {
        acc = acc * (n as i128 - i) / (i + 1);
    }
    acc
}

/// Normal-ordered expansion of `(A + B)^n` when `[A, B] = commutator` is a
/// c-number. `A` is the creation-like factor placed to the left.
pub fn binomial_expansion(n: u32, commutator: Coeff) -> NormalOrderedPoly {
    let mut out = NormalOrderedPoly::zero();
    let half = -commutator / Coeff::from_integer(2);
    // k' has the parity of n: n, n-2, ..., (0 or 1).
    let mut k_prime = n as i64;
    while k_prime >= 0 {
        let kp = k_prime as u32;
        let pairs = (n - kp) / 2;
        let lead = Coeff::new(factorial(n), factorial(kp) * factorial(pairs)) * pow(half, pairs);
        for r in 0..=kp {
            let c = lead * Coeff::from_integer(binomial(kp, r));
            out.add_term(r, kp - r, c);
        }
        k_prime -= 2;
    }
    out
}

fn pow(base: Coeff, exp: u32) -> Coeff {
    (0..exp).fold(Coeff::one(), |acc, _| acc * base)
}

/// Normal-ordered `(b† + b)^k`.
pub fn quadrature_power(k: u32) -> NormalOrderedPoly {
    // [b†, b] = -1
    binomial_expansion(k, -Coeff::one())
}

/// Absolute value of the largest coefficient; handy for overflow checks.
pub fn max_abs_coeff(poly: &NormalOrderedPoly) -> Coeff {
    poly.iter()
        .map(|(_, c)| c.abs())
        .fold(Coeff::zero(), |a, b| if b > a { b } else { a })
}
