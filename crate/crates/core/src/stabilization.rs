//! Energy stabilization of the frozen WENO operator: split `H D_mw` into
//! skew and symmetric parts, factor the symmetric part into difference
//! bands `Δ Λ₁ Δᵀ + ΔΔᵀ Λ₂ ΔΔᵀ + ΔΔᵀΔ Λ₃ ΔᵀΔΔᵀ`, and add the correction
//! `R_s` that makes `R_mw + R_s` positive semidefinite.

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_len, Error, Result};
use crate::grid::Grid;
use crate::linalg::{max_abs, BandMatrix};
use crate::stencil::Order;
use crate::weno::{WeightMode, WenoOperator};

/// The `n × (n+1)` difference matrix with `Δ[i][i] = -1`, `Δ[i][i+1] = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DifferenceFactor {
    pub n: usize,
}

impl DifferenceFactor {
    /// `out_i = f_{i+1} - f_i`, `f` of length `n + 1`.
    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = f[i + 1] - f[i];
        }
    }

    /// `Δᵀ u`, of length `n + 1`.
    pub fn apply_transpose(&self, u: &[f64], out: &mut [f64]) {
        out[0] = -u[0];
        for c in 1..self.n {
            out[c] = u[c - 1] - u[c];
        }
        out[self.n] = u[self.n - 1];
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n + 1, |i, j| {
            if j == i {
                -1.0
            } else if j == i + 1 {
                1.0
            } else {
                0.0
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSplit {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub reconstruction_residual: f64,
}

/// `Q = ½(HD - (HD)ᵀ + B)` and `R = ½(HD + (HD)ᵀ - B)`.
pub fn symmetric_split(
    h_diag: &[f64],
    d: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<SymmetricSplit> {
    let n = h_diag.len();
    if d.nrows() != n || d.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "symmetric_split needs {n}×{n} matrices"
        )));
    }
    let hd = DMatrix::from_fn(n, n, |i, j| h_diag[i] * d[(i, j)]);
    let hdt = hd.transpose();
    let q = (&hd - &hdt + b) * 0.5;
    let r = (&hd + &hdt - b) * 0.5;
    let reconstruction_residual = max_abs(&(&q + &r - &hd));
    Ok(SymmetricSplit {
        q,
        r,
        reconstruction_residual,
    })
}

/// `½(√(Λ² + δ²) - Λ)`; nonnegative, and zero for `Λ ≥ 0` when `δ = 0`.
#[inline]
pub fn modify_lambda(value: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return (-value).max(0.0);
    }
    0.5 * (value.hypot(delta) - value)
}

/// Band factors of a symmetric matrix with zero row sums.
///
/// `l1[c]` multiplies the column `e_{c-1} - e_c`, `l2[c]` the column
/// `-e_{c-1} + 2e_c - e_{c+1}` and `l3[c]` the column
/// `-e_{c-2} + 3e_{c-1} - 3e_c + e_{c+1}`. Entries whose column would be
/// cut off by the domain ends are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaFactors {
    pub order: Order,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub l3: Vec<f64>,
    pub l1s: Vec<f64>,
    pub l2s: Vec<f64>,
    pub l3s: Vec<f64>,
    pub deltas: [f64; 3],
    pub residual: f64,
}

impl LambdaFactors {
    pub fn zeros(order: Order, n: usize) -> Self {
        Self {
            order,
            l1: vec![0.0; n + 1],
            l2: vec![0.0; n],
            l3: vec![0.0; n + 1],
            l1s: vec![0.0; n + 1],
            l2s: vec![0.0; n],
            l3s: vec![0.0; n + 1],
            deltas: [0.0; 3],
            residual: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.l2.len()
    }

    /// Fills `l1, l2, l3` from `r` (outermost band first) and stores the
    /// max-norm of what the three bands fail to reproduce. `scratch` must
    /// have the same bandwidth as `r`.
    fn extract_into(&mut self, r: &BandMatrix, scratch: &mut BandMatrix) {
        let n = r.n();
        scratch.data_mut().copy_from_slice(r.data());
        self.l1.iter_mut().for_each(|v| *v = 0.0);
        self.l2.iter_mut().for_each(|v| *v = 0.0);
        self.l3.iter_mut().for_each(|v| *v = 0.0);
        let rm = scratch;
        if self.order == Order::Fourth {
            for c in 2..=n - 2 {
                let lam = -rm.get(c - 2, c + 1);
                self.l3[c] = lam;
                rank_one_sub(rm, c - 2, &[-1.0, 3.0, -3.0, 1.0], lam);
            }
        }
        for c in 1..=n - 2 {
            let lam = rm.get(c - 1, c + 1);
            self.l2[c] = lam;
            rank_one_sub(rm, c - 1, &[-1.0, 2.0, -1.0], lam);
        }
        for c in 1..n {
            let lam = -rm.get(c - 1, c);
            self.l1[c] = lam;
            rank_one_sub(rm, c - 1, &[1.0, -1.0], lam);
        }
        self.residual = rm.max_abs();
    }

    pub fn modify(&mut self, deltas: [f64; 3]) {
        self.deltas = deltas;
        let n = self.n();
        for c in 1..n {
            self.l1s[c] = modify_lambda(self.l1[c], deltas[0]);
        }
        for c in 1..n - 1 {
            self.l2s[c] = modify_lambda(self.l2[c], deltas[1]);
        }
        if self.order == Order::Fourth {
            for c in 2..n - 1 {
                self.l3s[c] = modify_lambda(self.l3[c], deltas[2]);
            }
        }
    }

    fn bands(&self, modified: bool) -> (&[f64], &[f64], &[f64]) {
        if modified {
            (&self.l1s, &self.l2s, &self.l3s)
        } else {
            (&self.l1, &self.l2, &self.l3)
        }
    }

    /// `out += (Σ band terms) u` using the modified or raw factors.
    pub fn apply_add(&self, modified: bool, u: &[f64], out: &mut [f64]) {
        let (l1, l2, l3) = self.bands(modified);
        let n = self.n();
        for c in 1..n {
            let a = l1[c] * (u[c - 1] - u[c]);
            out[c - 1] += a;
            out[c] -= a;
        }
        for c in 1..n - 1 {
            let b = l2[c] * (-u[c - 1] + 2.0 * u[c] - u[c + 1]);
            out[c - 1] -= b;
            out[c] += 2.0 * b;
            out[c + 1] -= b;
        }
        if self.order == Order::Fourth {
            for c in 2..n - 1 {
                let t = l3[c] * (-u[c - 2] + 3.0 * u[c - 1] - 3.0 * u[c] + u[c + 1]);
                out[c - 2] -= t;
                out[c - 1] += 3.0 * t;
                out[c] -= 3.0 * t;
                out[c + 1] += t;
            }
        }
    }

    /// Adds the band terms into `band` (half-bandwidth ≥ `order.bandwidth()`).
    pub fn assemble_into(&self, modified: bool, band: &mut BandMatrix) {
        let (l1, l2, l3) = self.bands(modified);
        let n = self.n();
        for c in 1..n {
            rank_one_sub(band, c - 1, &[1.0, -1.0], -l1[c]);
        }
        for c in 1..n - 1 {
            rank_one_sub(band, c - 1, &[-1.0, 2.0, -1.0], -l2[c]);
        }
        if self.order == Order::Fourth {
            for c in 2..n - 1 {
                rank_one_sub(band, c - 2, &[-1.0, 3.0, -3.0, 1.0], -l3[c]);
            }
        }
    }

    pub fn assemble(&self, modified: bool) -> BandMatrix {
        let k = self.order.bandwidth();
        let mut band = BandMatrix::zeros(self.n(), k, k);
        self.assemble_into(modified, &mut band);
        band
    }

    pub fn all_modified_nonnegative(&self) -> bool {
        self.l1s
            .iter()
            .chain(&self.l2s)
            .chain(&self.l3s)
            .all(|&v| v >= 0.0)
    }
}

/// `m -= lam · v vᵀ` with `v` supported on rows `first..first + v.len()`.
fn rank_one_sub(m: &mut BandMatrix, first: usize, v: &[f64], lam: f64) {
    if lam == 0.0 {
        return;
    }
    for (a, va) in v.iter().enumerate() {
        for (b, vb) in v.iter().enumerate() {
            m.add(first + a, first + b, -lam * va * vb);
        }
    }
}

pub const DECOMPOSITION_TOLERANCE: f64 = 1e-10;

/// Band extraction of `r`; fails if the bands do not reproduce `r`.
pub fn extract_lambdas(r: &BandMatrix, order: Order) -> Result<LambdaFactors> {
    let n = r.n();
    order.check_points(n)?;
    let k = order.bandwidth();
    let mut band = BandMatrix::zeros(n, k, k);
    for i in 0..n {
        for j in r.row_range(i) {
            let v = r.get(i, j);
            if v != 0.0 {
                if i.abs_diff(j) > k {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i}, {j}) lies outside the half-bandwidth {k}"
                    )));
                }
                band.set(i, j, v);
            }
        }
    }
    let mut scratch = band.clone();
    let mut lam = LambdaFactors::zeros(order, n);
    lam.extract_into(&band, &mut scratch);
    let tol = DECOMPOSITION_TOLERANCE * band.max_abs().max(1.0);
    if lam.residual > tol {
        return Err(Error::DecompositionFailure {
            residual: lam.residual,
            tolerance: tol,
        });
    }
    Ok(lam)
}

pub fn extract_lambdas_dense(r: &DMatrix<f64>, order: Order) -> Result<LambdaFactors> {
    let n = r.nrows();
    let mut band = BandMatrix::zeros(n, n - 1, n - 1);
    for i in 0..n {
        for j in 0..n {
            band.set(i, j, r[(i, j)]);
        }
    }
    extract_lambdas(&band, order)
}

/// Per-evaluation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub decomposition_residual: f64,
    pub fallback: bool,
    pub r_norm: f64,
    pub max_rs: f64,
    /// Smallest eigenvalue of `R_mw + R_s`, when certification was requested.
    pub min_eig: Option<f64>,
}

/// Accumulated diagnostics over many evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizationStats {
    pub evaluations: usize,
    pub certified: usize,
    pub fallbacks: usize,
    pub min_eig: f64,
    /// Smallest `min_eig / max(‖R_mw‖, tiny)` seen.
    pub min_relative_eig: f64,
    pub max_rs: f64,
    pub max_residual: f64,
}

impl Default for StabilizationStats {
    fn default() -> Self {
        Self {
            evaluations: 0,
            certified: 0,
            fallbacks: 0,
            min_eig: f64::INFINITY,
            min_relative_eig: f64::INFINITY,
            max_rs: 0.0,
            max_residual: 0.0,
        }
    }
}

impl StabilizationStats {
    pub fn record(&mut self, r: &EvalReport) {
        self.evaluations += 1;
        self.fallbacks += r.fallback as usize;
        self.max_rs = self.max_rs.max(r.max_rs);
        self.max_residual = self.max_residual.max(r.decomposition_residual);
        if let Some(e) = r.min_eig {
            self.certified += 1;
            self.min_eig = self.min_eig.min(e);
            self.min_relative_eig = self
                .min_relative_eig
                .min(e / r.r_norm.max(f64::MIN_POSITIVE));
        }
    }

    pub fn merge(&mut self, other: &StabilizationStats) {
        self.evaluations += other.evaluations;
        self.certified += other.certified;
        self.fallbacks += other.fallbacks;
        self.min_eig = self.min_eig.min(other.min_eig);
        self.min_relative_eig = self.min_relative_eig.min(other.min_relative_eig);
        self.max_rs = self.max_rs.max(other.max_rs);
        self.max_residual = self.max_residual.max(other.max_residual);
    }
}

/// Scratch storage for one thread of evaluation.
#[derive(Debug, Clone)]
pub struct StabilizationWorkspace {
    hd: BandMatrix,
    r: BandMatrix,
    scratch: BandMatrix,
    lambdas: LambdaFactors,
    acc: Vec<f64>,
}

impl StabilizationWorkspace {
    pub fn new(order: Order, n: usize) -> Self {
        let k = order.bandwidth();
        Self {
            hd: BandMatrix::zeros(n, k, k),
            r: BandMatrix::zeros(n, k, k),
            scratch: BandMatrix::zeros(n, k, k),
            lambdas: LambdaFactors::zeros(order, n),
            acc: vec![0.0; n],
        }
    }

    pub fn lambdas(&self) -> &LambdaFactors {
        &self.lambdas
    }

    pub fn r_mw(&self) -> &BandMatrix {
        &self.r
    }
}

/// `D_mws = H⁻¹(H D_mw + R_s)` with the weights and `R_s` frozen at the
/// state it is applied to.
#[derive(Debug, Clone)]
pub struct StabilizedOperator {
    pub weno: WenoOperator,
    pub deltas: [f64; 3],
}

impl StabilizedOperator {
    /// `ε = h²`, `δ₁ = δ₂ = h⁴`, `δ₃ = 0`.
    pub fn new(order: Order, grid: &Grid) -> Result<Self> {
        let h4 = grid.h.powi(4);
        Ok(Self {
            weno: WenoOperator::new(order, grid)?,
            deltas: [h4, h4, 0.0],
        })
    }

    pub fn with_parts(weno: WenoOperator, deltas: [f64; 3]) -> Result<Self> {
        if deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "stabilization deltas must be nonnegative, got {deltas:?}"
            )));
        }
        Ok(Self { weno, deltas })
    }

    pub fn order(&self) -> Order {
        self.weno.order
    }

    pub fn n(&self) -> usize {
        self.weno.n()
    }

    pub fn workspace(&self) -> StabilizationWorkspace {
        StabilizationWorkspace::new(self.order(), self.n())
    }

    fn spacings(&self) -> &[f64] {
        &self.weno.flux_grid.bar_spacings
    }

    /// Freezes the operator at `u` and fills `ws` with `H D_mw`, `R_mw`
    /// and the modified factors. Returns whether band extraction succeeded.
    fn freeze(&self, u: &[f64], ws: &mut StabilizationWorkspace) -> bool {
        let n = self.n();
        self.weno.hd_band_into(u, WeightMode::Nonlinear, &mut ws.hd);
        ws.r.fill_zero();
        for i in 0..n {
            for j in ws.hd.row_range(i) {
                let v = 0.5 * ws.hd.get(i, j);
                ws.r.add(i, j, v);
                ws.r.add(j, i, v);
            }
        }
        ws.r.add(0, 0, 0.5);
        ws.r.add(n - 1, n - 1, -0.5);
        ws.lambdas.extract_into(&ws.r, &mut ws.scratch);
        let ok = ws.lambdas.residual <= DECOMPOSITION_TOLERANCE * ws.r.max_abs().max(1.0);
        if ok {
            ws.lambdas.modify(self.deltas);
        }
        ok
    }

    /// Dense `R_s = V max(-λ, 0) Vᵀ` from the eigendecomposition of `R_mw`.
    fn eigen_shift(r: &BandMatrix) -> DMatrix<f64> {
        let eig = SymmetricEigen::new(r.to_dense());
        let shifted = eig.eigenvalues.map(|l| (-l).max(0.0));
        &eig.eigenvectors * DMatrix::from_diagonal(&shifted) * eig.eigenvectors.transpose()
    }

    /// Writes `D_mws u` into `out`. With `certify`, also computes the
    /// smallest eigenvalue of `R_mw + R_s`.
    pub fn apply_into(
        &self,
        u: &[f64],
        ws: &mut StabilizationWorkspace,
        out: &mut [f64],
        certify: bool,
    ) -> EvalReport {
        let n = self.n();
        let ok = self.freeze(u, ws);
        ws.hd.apply(u, &mut ws.acc);
        let r_norm = ws.r.max_abs();
        let mut report = EvalReport {
            decomposition_residual: ws.lambdas.residual,
            fallback: !ok,
            r_norm,
            max_rs: 0.0,
            min_eig: None,
        };
        if ok {
            ws.lambdas.apply_add(true, u, &mut ws.acc);
            if certify {
                let mut total = ws.r.clone();
                ws.lambdas.assemble_into(true, &mut total);
                let rs = ws.lambdas.assemble(true);
                report.max_rs = rs.max_abs();
                report.min_eig = Some(total.min_eigenvalue_symmetric(1e-14));
            }
        } else {
            warn!(
                "band extraction residual {:.3e} too large; using eigenvalue shift",
                ws.lambdas.residual
            );
            let rs = Self::eigen_shift(&ws.r);
            let rs_u = &rs * DVector::from_column_slice(u);
            for (a, v) in ws.acc.iter_mut().zip(rs_u.iter()) {
                *a += v;
            }
            report.max_rs = max_abs(&rs);
            if certify {
                let total = ws.r.to_dense() + rs;
                report.min_eig = Some(SymmetricEigen::new(total).eigenvalues.min());
            }
        }
        for i in 0..n {
            out[i] = ws.acc[i] / self.spacings()[i];
        }
        report
    }

    pub fn apply(&self, u: &[f64], certify: bool) -> Result<(Vec<f64>, EvalReport)> {
        check_len("state", u.len(), self.n())?;
        let mut ws = self.workspace();
        let mut out = vec![0.0; self.n()];
        let report = self.apply_into(u, &mut ws, &mut out, certify);
        Ok((out, report))
    }

    /// Band factors at `u`, or a decomposition failure.
    pub fn lambdas(&self, u: &[f64]) -> Result<LambdaFactors> {
        check_len("state", u.len(), self.n())?;
        let mut ws = self.workspace();
        if self.freeze(u, &mut ws) {
            Ok(ws.lambdas)
        } else {
            let tol = DECOMPOSITION_TOLERANCE * ws.r.max_abs().max(1.0);
            Err(Error::DecompositionFailure {
                residual: ws.lambdas.residual,
                tolerance: tol,
            })
        }
    }

    /// Dense `R_mw` and `R_s` at `u`.
    pub fn frozen_parts(&self, u: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        check_len("state", u.len(), self.n())?;
        let mut ws = self.workspace();
        let rs = if self.freeze(u, &mut ws) {
            ws.lambdas.assemble(true).to_dense()
        } else {
            Self::eigen_shift(&ws.r)
        };
        Ok((ws.r.to_dense(), rs))
    }

    /// Dense `D_mws` frozen at `u`.
    pub fn matrix(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let (_, rs) = self.frozen_parts(u)?;
        let hd = self.weno.hd_band(u, WeightMode::Nonlinear)?.to_dense();
        let mut d = hd + rs;
        for (i, s) in self.spacings().iter().enumerate() {
            for j in 0..self.n() {
                d[(i, j)] /= s;
            }
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbp::UpwindPair;

    fn grid(n: usize) -> Grid {
        Grid::unit(n).unwrap()
    }

    fn step(g: &Grid) -> Vec<f64> {
        g.points
            .iter()
            .map(|&x| if x < 0.43 { 1.0 } else { 0.0 })
            .collect()
    }

    #[test]
    fn modify_lambda_values() {
        assert!((modify_lambda(0.0, 1e-4) - 5e-5).abs() < 1e-18);
        let expected = 0.5 * ((10.0f64 * 1e-8).sqrt() - 3e-4);
        assert!((modify_lambda(3e-4, 1e-4) - expected).abs() < 1e-18);
        assert!((modify_lambda(3e-4, 1e-4) - 8.11e-6).abs() < 1e-8);
        assert_eq!(modify_lambda(0.7, 0.0), 0.0);
        assert_eq!(modify_lambda(-0.7, 0.0), 0.7);
        assert!(modify_lambda(-1.0, 1e-4) >= 1.0);
    }

    #[test]
    fn difference_factor_shape() {
        let d = DifferenceFactor { n: 5 }.to_dense();
        assert_eq!(d.shape(), (5, 6));
        for i in 0..5 {
            let nz: Vec<f64> = d.row(i).iter().copied().filter(|v| *v != 0.0).collect();
            assert_eq!(nz, vec![-1.0, 1.0]);
        }
        let f: Vec<f64> = (0..6).map(|i| (i * i) as f64).collect();
        let mut out = vec![0.0; 5];
        DifferenceFactor { n: 5 }.apply(&f, &mut out);
        assert_eq!(out, vec![1.0, 3.0, 5.0, 7.0, 9.0]);
    }

    #[test]
    fn split_of_linear_operator_is_the_sbp_dissipation() {
        let g = grid(30);
        let pair = UpwindPair::new(Order::Fourth, &g).unwrap();
        let s = symmetric_split(&pair.h_diag, &pair.dm, &pair.b_matrix()).unwrap();
        let q = pair.qm();
        let expected = (&q + q.transpose()) * 0.5;
        assert!(max_abs(&(&s.r - expected)) < 1e-13);
        assert!(s.reconstruction_residual < 1e-12);
        let skew = &s.q - pair.b_matrix() * 0.5;
        assert!(max_abs(&(&skew + skew.transpose())) < 1e-13);
    }

    #[test]
    fn linear_p4_lambdas() {
        let g = grid(30);
        let pair = UpwindPair::new(Order::Fourth, &g).unwrap();
        let s = symmetric_split(&pair.h_diag, &pair.dm, &pair.b_matrix()).unwrap();
        let lam = extract_lambdas_dense(&s.r, Order::Fourth).unwrap();
        for c in 5..25 {
            assert!((lam.l3[c] - 1.0 / 24.0).abs() < 1e-13, "{c}: {}", lam.l3[c]);
            assert!(lam.l2[c].abs() < 1e-13);
            assert!(lam.l1[c].abs() < 1e-13);
        }
        assert!(lam.residual < 1e-13);
    }

    #[test]
    fn linear_p3_lambdas() {
        let g = grid(30);
        let pair = UpwindPair::new(Order::Third, &g).unwrap();
        let s = symmetric_split(&pair.h_diag, &pair.dm, &pair.b_matrix()).unwrap();
        let lam = extract_lambdas_dense(&s.r, Order::Third).unwrap();
        assert!(lam.l3.iter().all(|v| *v == 0.0));
        for c in 3..27 {
            assert!((lam.l2[c] - 1.0 / 12.0).abs() < 1e-13);
            assert!(lam.l1[c].abs() < 1e-13);
        }
    }

    #[test]
    fn interior_p4_factors_follow_the_weights() {
        let g = grid(40);
        let op = StabilizedOperator::new(Order::Fourth, &g).unwrap();
        let u: Vec<f64> = g
            .points
            .iter()
            .map(|&x| (9.0 * x).sin() + if x > 0.5 { 1.0 } else { 0.0 })
            .collect();
        let lam = op.lambdas(&u).unwrap();
        let w = |label: usize, j: usize| op.weno.nonlinear_weights(&u, label).unwrap().weights[j];
        for c in 6..33 {
            let l3 = w(c + 1, 2) / 6.0;
            let l2 = w(c + 1, 1) / 4.0 + w(c + 1, 2) / 12.0 - w(c + 2, 2) / 3.0;
            let l1 = (w(c, 1) + w(c, 2)) / 4.0 - w(c + 1, 1) / 4.0 - 5.0 * w(c + 1, 2) / 12.0
                + w(c + 2, 2) / 6.0;
            assert!((lam.l3[c] - l3).abs() < 1e-13, "Λ3 at {c}");
            assert!((lam.l2[c] - l2).abs() < 1e-13, "Λ2 at {c}");
            assert!((lam.l1[c] - l1).abs() < 1e-13, "Λ1 at {c}");
        }
    }

    #[test]
    fn step_state_needs_stabilization_and_gets_it() {
        for order in [Order::Third, Order::Fourth] {
            let g = grid(60);
            let op = StabilizedOperator::new(order, &g).unwrap();
            let u = step(&g);
            let (r, rs) = op.frozen_parts(&u).unwrap();
            let (r_min, _) = crate::linalg::symmetric_eigen_range(&r);
            assert!(r_min < -1e-6, "p={order}: R_mw is already PSD ({r_min})");
            let (t_min, _) = crate::linalg::symmetric_eigen_range(&(&r + &rs));
            assert!(t_min >= -1e-10 * max_abs(&r), "p={order}: {t_min}");
            let (_, report) = op.apply(&u, true).unwrap();
            assert!(!report.fallback);
            assert!((report.min_eig.unwrap() - t_min).abs() < 1e-9);
        }
    }

    #[test]
    fn stabilized_operator_annihilates_constants() {
        for order in [Order::Third, Order::Fourth] {
            let g = grid(40);
            let op = StabilizedOperator::new(order, &g).unwrap();
            let u = step(&g);
            let m = op.matrix(&u).unwrap();
            for i in 0..40 {
                let s: f64 = m.row(i).iter().sum();
                assert!(s.abs() < 1e-9, "p={order} row {i}: {s}");
            }
        }
    }

    #[test]
    fn zero_deltas_reduce_to_dmw_for_psd_split() {
        let g = grid(40);
        let weno = WenoOperator::new(Order::Fourth, &g).unwrap();
        let op = StabilizedOperator::with_parts(weno.clone(), [0.0; 3]).unwrap();
        let u: Vec<f64> = g
            .points
            .iter()
            .map(|x| (2.0 * std::f64::consts::PI * x).sin())
            .collect();
        let lam = op.lambdas(&u).unwrap();
        let raw_nonneg = lam
            .l1
            .iter()
            .chain(&lam.l2)
            .chain(&lam.l3)
            .all(|v| *v >= 0.0);
        if raw_nonneg {
            let (a, _) = op.apply(&u, false).unwrap();
            let b = weno.apply_dmw(&u).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-11);
            }
        }
        let (x, _) = op.apply(&u, false).unwrap();
        let m = op.matrix(&u).unwrap();
        let y = &m * DVector::from_column_slice(&u);
        for i in 0..40 {
            assert!((x[i] - y[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn bands_reassemble_the_symmetric_part() {
        let g = grid(50);
        let op = StabilizedOperator::new(Order::Fourth, &g).unwrap();
        let u = step(&g);
        let lam = op.lambdas(&u).unwrap();
        let (r, _) = op.frozen_parts(&u).unwrap();
        let rebuilt = lam.assemble(false).to_dense();
        assert!(max_abs(&(rebuilt - r)) < 1e-12);
        assert!(lam.all_modified_nonnegative());
    }
}
