use nalgebra::DMatrix;

use crate::linalg::BandMatrix;

/// Generator `W` of the photon-number distribution, `dP_n/dt = Σ_m W[n,m] P_m`.
///
/// Entries with `|n - m| > bandwidth` vanish. Columns whose transitions
/// could leave the ladder (`m > n_max - bandwidth`) are closed by a
/// reflecting boundary: their diagonal is reset to minus the sum of the
/// retained off-diagonal entries. All other diagonal entries come straight
/// from the expansion, so their column sums measure how exactly the
/// generator conserves probability.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMatrix {
    band: BandMatrix<f64>,
    bandwidth: usize,
}

impl RateMatrix {
    /// Wraps a band generator and closes its top columns.
    pub(crate) fn from_open_band(mut band: BandMatrix<f64>, bandwidth: usize) -> Self {
        let n_max = band.dim() - 1;
        let first_open = (n_max + 1).saturating_sub(bandwidth);
        for s in first_open..=n_max {
            let lo = s.saturating_sub(bandwidth);
            let hi = (s + bandwidth).min(n_max);
            let outflow: f64 = (lo..=hi).filter(|&t| t != s).map(|t| band.get(t, s)).sum();
            band.set(s, s, -outflow);
        }
        Self { band, bandwidth }
    }

    pub fn n_max(&self) -> usize {
        self.band.dim() - 1
    }

    pub fn dim(&self) -> usize {
        self.band.dim()
    }

    /// Largest photon jump `N`.
    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// `W[to, from]`.
    pub fn entry(&self, to: usize, from: usize) -> f64 {
        self.band.get(to, from)
    }

    pub fn band(&self) -> &BandMatrix<f64> {
        &self.band
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.band.to_dense()
    }

    /// `W p`.
    pub fn apply(&self, p: &[f64], out: &mut [f64]) {
        self.band.mul_vec(p, out);
    }

    /// Largest `|Σ_n W[n, m]|` over all columns.
    pub fn column_sum_defect(&self) -> f64 {
        self.band
            .column_sums()
            .into_iter()
            .fold(0.0, |acc, s| acc.max(s.abs()))
    }

    /// Largest absolute entry, a scale for relative comparisons.
    pub fn max_abs_entry(&self) -> f64 {
        let n = self.dim();
        let mut best = 0.0_f64;
        for s in 0..n {
            let (lo, hi) = self.band.row_span(s);
            for t in lo..=hi {
                best = best.max(self.band.get(s, t).abs());
            }
        }
        best
    }

    /// Off-diagonal entries `W[to, from] < 0` as `(to, from, value)`.
    ///
    /// Such pseudo-rates can appear at large detuning or high photon
    /// numbers; the steady state is then not guaranteed to be positive.
    pub fn negative_rates(&self) -> Vec<(usize, usize, f64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for from in 0..n {
            let lo = from.saturating_sub(self.bandwidth);
            let hi = (from + self.bandwidth).min(n - 1);
            for to in lo..=hi {
                let w = self.band.get(to, from);
                if to != from && w < 0.0 {
                    out.push((to, from, w));
                }
            }
        }
        out
    }
}

/// Largest entrywise relative gap `|a - b| / max(|a|, |b|)` between two
/// generators of equal size. Entries smaller than `1e-14` times the largest
/// entry of either matrix count as zero.
pub fn max_relative_gap(a: &RateMatrix, b: &RateMatrix) -> f64 {
    assert_eq!(a.dim(), b.dim(), "generators differ in size");
    let floor = 1e-14 * a.max_abs_entry().max(b.max_abs_entry());
    let width = a.bandwidth().max(b.bandwidth());
    let n = a.dim();
    let mut worst = 0.0_f64;
    for from in 0..n {
        let lo = from.saturating_sub(width);
        let hi = (from + width).min(n - 1);
        for to in lo..=hi {
            let (x, y) = (a.entry(to, from), b.entry(to, from));
            let scale = x.abs().max(y.abs()).max(floor);
            if scale > 0.0 {
                worst = worst.max((x - y).abs() / scale);
            }
        }
    }
    worst
}
