//! Banded storage and an LU factorization with partial pivoting.
//!
//! Both generators in this crate are banded once their basis is ordered by
//! photon number: the photon-number rate matrix has half-bandwidth equal to
//! the largest photon jump, and the vectorized Liouvillian of the joint
//! emitter-cavity system has half-bandwidth of roughly twice the Hilbert-space
//! dimension. Dense storage of the latter would need hundreds of megabytes at
//! the default size limit, so the factorization here works on the band only.
//!
//! Rows are stored as windows of width `2*kl + ku + 1` starting `kl` columns
//! left of the diagonal; the extra `kl` columns on the right absorb the fill
//! produced by row interchanges.

use nalgebra::ComplexField;

use crate::error::LinalgError;

/// A square matrix with `kl` sub-diagonals and `ku` super-diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T> BandMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![T::zero(); n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        if i < self.n && j < self.n && off >= 0 && (off as usize) < self.width {
            Some(i * self.width + off as usize)
        } else {
            None
        }
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> T {
        if !self.in_band(i, j) {
            return T::zero();
        }
        self.slot(i, j).map_or(T::zero(), |s| self.data[s])
    }

    /// Sets entry `(i, j)`.
    ///
    /// *Panics* if `(i, j)` lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(
            self.in_band(i, j),
            "entry ({i}, {j}) outside band (kl={}, ku={})",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j).expect("band slot");
        self.data[s] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: T) {
        let current = self.get(i, j);
        self.set(i, j, current + value);
    }

    /// Column range `(first, last)` of the band in row `i`.
    pub fn row_span(&self, i: usize) -> (usize, usize) {
        (i.saturating_sub(self.kl), (i + self.ku).min(self.n - 1))
    }

    /// Overwrites row `i` with the unit row `e_i`.
    pub fn set_unit_row(&mut self, i: usize) {
        let (lo, hi) = self.row_span(i);
        for j in lo..=hi {
            self.set(i, j, if j == i { T::one() } else { T::zero() });
        }
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (lo, hi) = self.row_span(i);
            let base = i * self.width + self.kl - i;
            let mut acc = T::zero();
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                acc += self.data[base + j] * *xj;
            }
            *yi = acc;
        }
    }

    /// Sum of every column, `1ᵀ A`.
    pub fn column_sums(&self) -> Vec<T> {
        let mut sums = vec![T::zero(); self.n];
        for i in 0..self.n {
            let (lo, hi) = self.row_span(i);
            for (j, s) in sums.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *s += self.get(i, j);
            }
        }
        sums
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<T> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Factorizes `A = P L U` with partial pivoting restricted to the band.
    pub fn lu(&self) -> Result<BandLu<T>, LinalgError> {
        BandLu::factor(self.clone())
    }
}

/// LU factors of a [`BandMatrix`].
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    factors: BandMatrix<T>,
    multipliers: Vec<T>,
    pivots: Vec<usize>,
}

impl<T> BandLu<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    fn factor(mut a: BandMatrix<T>) -> Result<Self, LinalgError> {
        let n = a.n;
        let kl = a.kl;
        let reach = kl + a.ku;
        let mut multipliers = vec![T::zero(); n * kl.max(1)];
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.data[a.slot(k, k).unwrap()].modulus();
            for r in k + 1..=last_row {
                let m = a.data[a.slot(r, k).unwrap()].modulus();
                if m > best {
                    best = m;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(LinalgError::Singular { column: k });
            }
            pivots[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let sk = a.slot(k, j).unwrap();
                    let sp = a.slot(p, j).unwrap();
                    a.data.swap(sk, sp);
                }
            }
            let pivot = a.data[a.slot(k, k).unwrap()];
            for r in k + 1..=last_row {
                let srk = a.slot(r, k).unwrap();
                let m = a.data[srk] / pivot;
                a.data[srk] = T::zero();
                multipliers[k * kl + (r - k - 1)] = m;
                if m == T::zero() {
                    continue;
                }
                for j in k + 1..=last_col {
                    let skj = a.data[a.slot(k, j).unwrap()];
                    let srj = a.slot(r, j).unwrap();
                    a.data[srj] -= m * skj;
                }
            }
        }
        Ok(Self {
            factors: a,
            multipliers,
            pivots,
        })
    }

    /// Ratio of the smallest to the largest pivot modulus.
    ///
    /// A value at roundoff level means the matrix is numerically singular.
    pub fn pivot_ratio(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for k in 0..self.factors.n {
            let m = self.factors.get_factor(k, k).modulus();
            lo = lo.min(m);
            hi = hi.max(m);
        }
        if hi == 0.0 {
            0.0
        } else {
            lo / hi
        }
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let a = &self.factors;
        let n = a.n;
        let kl = a.kl;
        assert_eq!(rhs.len(), n);
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                x[r] -= self.multipliers[k * kl + (r - k - 1)] * xk;
            }
        }
        let reach = kl + a.ku;
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..=(i + reach).min(n - 1) {
                acc -= a.get_factor(i, j) * x[j];
            }
            x[i] = acc / a.get_factor(i, i);
        }
        x
    }
}

impl<T> BandMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    // Unlike `get`, reads fill-in outside the declared band.
    fn get_factor(&self, i: usize, j: usize) -> T {
        self.slot(i, j).map_or(T::zero(), |s| self.data[s])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use num_complex::Complex64;

    fn pseudo_random(seed: &mut u64) -> f64 {
        *seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn band_lu_matches_dense_solve_real() {
        let mut seed = 7;
        let (n, kl, ku) = (40, 3, 2);
        let mut a = BandMatrix::<f64>::zeros(n, kl, ku);
        for i in 0..n {
            let (lo, hi) = a.row_span(i);
            for j in lo..=hi {
                a.set(i, j, pseudo_random(&mut seed));
            }
        }
        let b: Vec<f64> = (0..n).map(|_| pseudo_random(&mut seed)).collect();
        let x = a.lu().unwrap().solve(&b);
        let dense = a.to_dense();
        let expected = dense.lu().solve(&DVector::from_vec(b)).unwrap();
        for i in 0..n {
            assert_relative_eq!(x[i], expected[i], epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn band_lu_handles_zero_diagonal_by_pivoting() {
        // [[0,1],[1,0]] needs a row swap.
        let mut a = BandMatrix::<Complex64>::zeros(2, 1, 1);
        a.set(0, 1, Complex64::new(1.0, 0.0));
        a.set(1, 0, Complex64::new(0.0, 2.0));
        let x = a
            .lu()
            .unwrap()
            .solve(&[Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)]);
        assert_relative_eq!(x[0].re, 2.0, epsilon = 1e-14);
        assert_relative_eq!(x[1].re, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = BandMatrix::<f64>::zeros(3, 1, 1);
        assert!(matches!(a.lu(), Err(LinalgError::Singular { column: 0 })));
    }

    #[test]
    fn mul_vec_and_column_sums_agree_with_dense() {
        let mut seed = 3;
        let mut a = BandMatrix::<f64>::zeros(9, 2, 1);
        for i in 0..9 {
            let (lo, hi) = a.row_span(i);
            for j in lo..=hi {
                a.set(i, j, pseudo_random(&mut seed));
            }
        }
        let x: Vec<f64> = (0..9).map(|k| k as f64).collect();
        let mut y = vec![0.0; 9];
        a.mul_vec(&x, &mut y);
        let dense: DMatrix<f64> = a.to_dense();
        let yd = &dense * DVector::from_vec(x);
        let sums = a.column_sums();
        for i in 0..9 {
            assert_relative_eq!(y[i], yd[i], epsilon = 1e-14);
            assert_relative_eq!(sums[i], dense.column(i).sum(), epsilon = 1e-14);
        }
    }
}
