//! Small linear-algebra helpers: compressed rows for the hot stencil paths,
//! a general band matrix, and eigenvalue bounds for symmetric matrices.

use nalgebra::{DMatrix, SymmetricEigen};

/// Compressed sparse rows. Built from a dense operator by dropping exact zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    n_cols: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseRows {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut row_start = Vec::with_capacity(m.nrows() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_start.push(cols.len());
        }
        Self {
            n_cols: m.ncols(),
            row_start,
            cols,
            vals,
        }
    }

    pub fn nrows(&self) -> usize {
        self.row_start.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    /// `out = self * x`
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `out += alpha * self * x`
    pub fn apply_add(&self, alpha: f64, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let s: f64 = self.row(i).map(|(j, v)| v * x[j]).sum();
            *o += alpha * s;
        }
    }
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Panics when `(i, j)` lies outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    /// Row-major band storage, `kl + ku + 1` slots per row.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row_range(i).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Band of `(self + selfᵀ)/2`, widened to the larger bandwidth on both sides.
    pub fn symmetric_part(&self) -> BandMatrix {
        let k = self.kl.max(self.ku);
        let mut s = BandMatrix::zeros(self.n, k, k);
        for i in 0..self.n {
            for j in self.row_range(i) {
                let v = 0.5 * self.get(i, j);
                s.add(i, j, v);
                s.add(j, i, v);
            }
        }
        s
    }

    /// Number of eigenvalues strictly below `shift`, for a symmetric band
    /// matrix, from the inertia of an unpivoted LDLᵀ of `self - shift·I`.
    pub fn count_eigenvalues_below(&self, shift: f64) -> usize {
        let k = self.kl.max(self.ku);
        let n = self.n;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let tiny = f64::EPSILON * scale * 1e-3;
        // l[i][m] holds L(i, i-k+m) for m < k; d holds the pivots.
        let mut l = vec![0.0; n * k.max(1)];
        let mut d = vec![0.0; n];
        let mut negatives = 0;
        for j in 0..n {
            let lo = j.saturating_sub(k);
            let mut dj = self.get(j, j) - shift;
            for m in lo..j {
                let ljm = l[j * k + (m + k - j)];
                dj -= ljm * ljm * d[m];
            }
            if dj == 0.0 {
                dj = -tiny;
            }
            d[j] = dj;
            if dj < 0.0 {
                negatives += 1;
            }
            for i in (j + 1)..(j + k + 1).min(n) {
                let lo_i = i.saturating_sub(k);
                let mut v = self.get(i, j);
                for m in lo_i.max(lo)..j {
                    v -= l[i * k + (m + k - i)] * l[j * k + (m + k - j)] * d[m];
                }
                l[i * k + (j + k - i)] = v / dj;
            }
        }
        negatives
    }

    /// Smallest eigenvalue of a symmetric band matrix by inertia bisection,
    /// to absolute accuracy `tol · max(1, ‖A‖_max)`.
    pub fn min_eigenvalue_symmetric(&self, tol: f64) -> f64 {
        let (mut lo, mut hi) = self.gershgorin_bounds();
        let width = tol * self.max_abs().max(1.0);
        // count_below(hi + margin) >= 1 always; keep the invariant
        // count(lo) == 0 and count(hi) >= 1.
        lo -= width;
        hi += width;
        for _ in 0..200 {
            if hi - lo <= width {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.count_eigenvalues_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let c = self.get(i, i);
            let r: f64 = self
                .row_range(i)
                .filter(|&j| j != i)
                .map(|j| self.get(i, j).abs())
                .sum();
            lo = lo.min(c - r);
            hi = hi.max(c + r);
        }
        (lo, hi)
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Extreme eigenvalues `(min, max)` of the symmetric part of `m`.
pub fn symmetric_eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let s = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let ev = eig.eigenvalues;
    (ev.min(), ev.max())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> BandMatrix {
        let mut a = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            a.set(i, i, 2.0);
            if i + 1 < n {
                a.set(i, i + 1, -1.0);
                a.set(i + 1, i, -1.0);
            }
        }
        a
    }

    #[test]
    fn inertia_of_dirichlet_laplacian() {
        let n = 20;
        let a = laplacian(n);
        // eigenvalues 2 - 2 cos(kπ/(n+1))
        let lam_min = 2.0 - 2.0 * (std::f64::consts::PI / (n + 1) as f64).cos();
        assert_eq!(a.count_eigenvalues_below(0.0), 0);
        assert_eq!(a.count_eigenvalues_below(lam_min * 1.0001), 1);
        assert_eq!(a.count_eigenvalues_below(4.0), n);
        let est = a.min_eigenvalue_symmetric(1e-14);
        assert!((est - lam_min).abs() < 1e-12, "{est} vs {lam_min}");
    }

    #[test]
    fn banded_min_eig_matches_dense_on_indefinite_matrix() {
        let n = 15;
        let mut a = BandMatrix::zeros(n, 3, 3);
        for i in 0..n {
            for j in a.row_range(i) {
                if j >= i {
                    let v = ((i * 7 + j * 13) % 11) as f64 / 5.0 - 1.0;
                    a.set(i, j, v);
                    a.set(j, i, v);
                }
            }
        }
        let (dense_min, _) = symmetric_eigen_range(&a.to_dense());
        let band_min = a.min_eigenvalue_symmetric(1e-14);
        assert!((dense_min - band_min).abs() < 1e-11);
    }

    #[test]
    fn sparse_rows_match_dense_product() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 2.0, 0.0, 0.0, 0.0, -1.0, 3.0, 0.5]);
        let s = SparseRows::from_dense(&m);
        assert_eq!(s.nnz(), 5);
        let x = [1.0, 2.0, 3.0];
        let mut y = [0.0; 3];
        s.apply(&x, &mut y);
        assert_eq!(y, [7.0, 0.0, 6.5]);
        s.apply_add(2.0, &x, &mut y);
        assert_eq!(y, [21.0, 0.0, 19.5]);
    }
}
