//! Upwind SBP operator pairs `(D_m, D_p, H, B)` for interior orders 3 and 4.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{max_abs, SparseRows};
use crate::stencil::{spacing_ratios, CandidateFluxSet, Order};

#[derive(Debug, Clone)]
pub struct UpwindPair {
    pub order: Order,
    pub grid: Grid,
    /// Diagonal of `H` (the SBP norm); equals the flux-point spacings.
    pub h_diag: Vec<f64>,
    pub dm: DMatrix<f64>,
    pub dp: DMatrix<f64>,
    pub dm_sparse: SparseRows,
    pub dp_sparse: SparseRows,
}

impl UpwindPair {
    pub fn new(order: Order, grid: &Grid) -> Result<Self> {
        order.check_points(grid.n)?;
        let n = grid.n;
        let h = grid.h;
        let h_diag: Vec<f64> = spacing_ratios(order, n).iter().map(|r| r * h).collect();
        let fluxes = CandidateFluxSet::new(order, n)?;

        // H D_m = Δ F with F the linear flux rows; row i = F_{i+1} - F_i.
        let mut dm = DMatrix::zeros(n, n);
        for point in &fluxes.points {
            let (first, coeffs) = point.linear_combined();
            let i = point.label;
            for (k, c) in coeffs.iter().enumerate() {
                if i >= 1 {
                    dm[(i - 1, first + k)] += c;
                }
                if i < n {
                    dm[(i, first + k)] -= c;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                dm[(i, j)] /= h_diag[i];
            }
        }
        let dp = dp_from_dm(&dm, &h_diag);
        Ok(Self {
            order,
            grid: grid.clone(),
            dm_sparse: SparseRows::from_dense(&dm),
            dp_sparse: SparseRows::from_dense(&dp),
            h_diag,
            dm,
            dp,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn p(&self) -> usize {
        self.order.p()
    }

    pub fn boundary_order(&self) -> usize {
        self.order.boundary_order()
    }

    pub fn closure_width(&self) -> usize {
        self.order.closure_width()
    }

    pub fn h_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.h_diag))
    }

    pub fn b_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut b = DMatrix::zeros(n, n);
        b[(0, 0)] = -1.0;
        b[(n - 1, n - 1)] = 1.0;
        b
    }

    /// `Q_m = H D_m - B/2`.
    pub fn qm(&self) -> DMatrix<f64> {
        let mut q = self.h_matrix() * &self.dm;
        let n = self.n();
        q[(0, 0)] += 0.5;
        q[(n - 1, n - 1)] -= 0.5;
        q
    }

    pub fn apply_dm(&self, u: &[f64], out: &mut [f64]) {
        self.dm_sparse.apply(u, out);
    }

    pub fn apply_dp(&self, u: &[f64], out: &mut [f64]) {
        self.dp_sparse.apply(u, out);
    }

    /// `uᵀ H v`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.h_diag
            .iter()
            .zip(u.iter().zip(v))
            .map(|(h, (a, b))| h * a * b)
            .sum()
    }

    pub fn norm_sq(&self, u: &[f64]) -> f64 {
        self.inner(u, u)
    }
}

/// `D_p = H⁻¹(-(H D_m)ᵀ + B)`, so that `H D_p + (H D_m)ᵀ = B` holds entrywise.
fn dp_from_dm(dm: &DMatrix<f64>, h: &[f64]) -> DMatrix<f64> {
    let n = dm.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let mut b = 0.0;
        if i == j && i == 0 {
            b = -1.0;
        } else if i == j && i == n - 1 {
            b = 1.0;
        }
        (-dm[(j, i)] * h[j] + b) / h[i]
    })
}

pub fn build_upwind_pair(p: usize, grid: &Grid) -> Result<UpwindPair> {
    UpwindPair::new(Order::from_p(p)?, grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbpPropertyReport {
    pub sbp_residual: f64,
    pub qm_min_eig: f64,
    /// Highest `k` with `(D_m x^k)_j = k x_j^(k-1)` at each row, capped at `p + 1`.
    pub rowwise_accuracy_orders: Vec<usize>,
    pub norm_sum_error: f64,
}

impl SbpPropertyReport {
    pub fn interior_order(&self, closure: usize) -> usize {
        let n = self.rowwise_accuracy_orders.len();
        self.rowwise_accuracy_orders[closure..n - closure]
            .iter()
            .copied()
            .min()
            .unwrap_or(0)
    }

    pub fn boundary_order(&self, closure: usize) -> usize {
        let n = self.rowwise_accuracy_orders.len();
        self.rowwise_accuracy_orders[..closure]
            .iter()
            .chain(&self.rowwise_accuracy_orders[n - closure..])
            .copied()
            .min()
            .unwrap_or(0)
    }
}

/// Rowwise polynomial exactness of `D`, measured in local coordinates
/// `ξ = (x - x_j)/h` so that the test is insensitive to `n`.
pub fn rowwise_orders(d: &DMatrix<f64>, h: f64, max_k: usize, tol: f64) -> Vec<usize> {
    let n = d.nrows();
    (0..n)
        .map(|row| {
            let mut order = 0;
            for k in 0..=max_k {
                let mut value = 0.0;
                let mut scale = 0.0;
                for j in 0..n {
                    let c = d[(row, j)] * h;
                    if c != 0.0 {
                        let xi = j as f64 - row as f64;
                        let t = c * xi.powi(k as i32);
                        value += t;
                        scale += t.abs();
                    }
                }
                let exact = if k == 1 { 1.0 } else { 0.0 };
                if (value - exact).abs() > tol * scale.max(1.0) {
                    break;
                }
                order = k;
            }
            order
        })
        .collect()
}

pub fn verify_sbp(pair: &UpwindPair) -> SbpPropertyReport {
    let h = pair.h_matrix();
    let b = pair.b_matrix();
    let residual = &h * &pair.dm + (&h * &pair.dp).transpose() - b;
    let q = pair.qm();
    let sym = &q + q.transpose();
    let qm_min_eig = nalgebra::SymmetricEigen::new(sym).eigenvalues.min();
    let norm_sum_error = (pair.h_diag.iter().sum::<f64>() - pair.grid.length()).abs();
    SbpPropertyReport {
        sbp_residual: max_abs(&residual),
        qm_min_eig,
        rowwise_accuracy_orders: rowwise_orders(&pair.dm, pair.h(), pair.p() + 1, 1e-10),
        norm_sum_error,
    }
}

/// Writes `row,col,value` triplets of the nonzero entries.
pub fn write_operator_csv<W: Write>(m: &DMatrix<f64>, writer: W) -> Result<()> {
    let sparse = SparseRows::from_dense(m);
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv output failed: {e}"));
    w.write_record(["row", "col", "value"]).map_err(io)?;
    for i in 0..sparse.nrows() {
        for (j, v) in sparse.row(i) {
            w.serialize((i, j, v)).map_err(io)?;
        }
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv output failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(p: usize, n: usize) -> UpwindPair {
        build_upwind_pair(p, &Grid::unit(n).unwrap()).unwrap()
    }

    fn scaled_row(pair: &UpwindPair, row: usize) -> Vec<f64> {
        (0..pair.n())
            .map(|j| pair.dm[(row, j)] * pair.h())
            .collect()
    }

    fn assert_row(actual: &[f64], first: usize, expected: &[f64]) {
        for (j, a) in actual.iter().enumerate() {
            let e = if j >= first && j < first + expected.len() {
                expected[j - first]
            } else {
                0.0
            };
            assert!((a - e).abs() < 1e-12, "column {j}: {a} vs {e}");
        }
    }

    #[test]
    fn p3_rows_match_the_reference_stencils() {
        let p = pair(3, 20);
        let n = 20;
        assert_row(&scaled_row(&p, 0), 0, &[-1.0, 1.0]);
        assert_row(
            &scaled_row(&p, 1),
            0,
            &[-9.0 / 13.0, 5.0 / 13.0, 4.0 / 13.0],
        );
        for i in 2..n - 2 {
            assert_row(
                &scaled_row(&p, i),
                i - 2,
                &[1.0 / 6.0, -1.0, 0.5, 1.0 / 3.0],
            );
        }
        assert_row(
            &scaled_row(&p, n - 2),
            n - 4,
            &[2.0 / 13.0, -12.0 / 13.0, 5.0 / 13.0, 5.0 / 13.0],
        );
        assert_row(&scaled_row(&p, n - 1), n - 3, &[0.4, -1.8, 1.4]);
        assert!((p.h_diag[0] - 5.0 / 12.0 * p.h()).abs() < 1e-15);
        assert!((p.h_diag[1] - 13.0 / 12.0 * p.h()).abs() < 1e-15);
    }

    #[test]
    fn p4_interior_row() {
        let p = pair(4, 30);
        for i in 4..26 {
            assert_row(
                &scaled_row(&p, i),
                i - 3,
                &[-1.0 / 12.0, 0.5, -1.5, 5.0 / 6.0, 0.25],
            );
        }
    }

    #[test]
    fn dp_is_the_reflected_operator_in_the_interior() {
        let p = pair(4, 30);
        let h = p.h();
        for i in 6..24 {
            for j in 0..30 {
                let mirrored = -p.dm[(29 - i, 29 - j)];
                assert!((p.dp[(i, j)] - mirrored).abs() * h < 1e-12);
            }
        }
    }

    #[test]
    fn report_for_p3_n50() {
        let r = verify_sbp(&pair(3, 50));
        assert!(r.sbp_residual < 1e-12);
        assert!(r.qm_min_eig >= -1e-12);
        assert_eq!(r.boundary_order(2), 1);
        assert!(r.interior_order(2) >= 3);
        let o = &r.rowwise_accuracy_orders;
        assert_eq!(&o[..2], &[1, 1]);
        assert_eq!(&o[48..], &[1, 1]);
    }

    #[test]
    fn report_for_p4() {
        for n in [12, 20, 64] {
            let r = verify_sbp(&pair(4, n));
            assert!(r.sbp_residual < 1e-12, "n={n}");
            assert!(r.qm_min_eig >= -1e-12, "n={n}: {}", r.qm_min_eig);
            assert_eq!(r.boundary_order(4), 2);
            assert_eq!(r.interior_order(4), 4);
            assert!(r.norm_sum_error < 1e-12);
        }
    }

    #[test]
    fn rejects_unsupported_configurations() {
        let g = Grid::unit(20).unwrap();
        assert_eq!(
            build_upwind_pair(5, &g).unwrap_err(),
            Error::UnsupportedOrder(5)
        );
        assert!(matches!(
            build_upwind_pair(3, &Grid::unit(7).unwrap()),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            build_upwind_pair(4, &Grid::unit(11).unwrap()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn csv_export_lists_nonzeros() {
        let p = pair(3, 8);
        let mut buf = Vec::new();
        write_operator_csv(&p.dm, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("row,col,value"));
        assert_eq!(lines.count(), p.dm_sparse.nnz());
    }
}
