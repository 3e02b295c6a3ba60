//! Flux-point grid, WENO-Z weights and the nonlinear conservative operator `D_mw`.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::grid::Grid;
use crate::linalg::BandMatrix;
use crate::stencil::{indicators, spacing_ratios, CandidateFluxSet, FluxPoint, Order, WeightRule};

/// Flux points `x̄_0..=x̄_n`; `bar_spacings[i] = x̄_{i+1} - x̄_i` equals `H[i][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxGrid {
    pub n: usize,
    pub bar_points: Vec<f64>,
    pub bar_spacings: Vec<f64>,
}

impl FluxGrid {
    pub fn new(order: Order, grid: &Grid) -> Result<Self> {
        order.check_points(grid.n)?;
        let bar_spacings: Vec<f64> = spacing_ratios(order, grid.n)
            .iter()
            .map(|r| r * grid.h)
            .collect();
        let mut bar_points = Vec::with_capacity(grid.n + 1);
        bar_points.push(grid.domain.0);
        for s in &bar_spacings {
            bar_points.push(bar_points.last().unwrap() + s);
        }
        *bar_points.last_mut().unwrap() = grid.domain.1;
        Ok(Self {
            n: grid.n,
            bar_points,
            bar_spacings,
        })
    }
}

pub fn build_flux_grid(p: usize, grid: &Grid) -> Result<FluxGrid> {
    FluxGrid::new(Order::from_p(p)?, grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    Linear,
    Nonlinear,
}

/// Indicator data and weights at one flux point.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessData {
    pub label: usize,
    pub beta: Vec<f64>,
    pub tau: f64,
    pub epsilon: f64,
    pub linear_weights: Vec<f64>,
    pub weights: Vec<f64>,
}

/// A flux value together with its candidate substencil fluxes.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxDecomposition {
    pub value: f64,
    pub candidates: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct WenoOperator {
    pub order: Order,
    pub grid: Grid,
    pub flux_grid: FluxGrid,
    pub fluxes: CandidateFluxSet,
    pub epsilon: f64,
}

impl WenoOperator {
    /// Operator with `ε = h²`.
    pub fn new(order: Order, grid: &Grid) -> Result<Self> {
        Self::with_epsilon(order, grid, grid.h * grid.h)
    }

    pub fn with_epsilon(order: Order, grid: &Grid, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "WENO epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Self {
            order,
            grid: grid.clone(),
            flux_grid: FluxGrid::new(order, grid)?,
            fluxes: CandidateFluxSet::new(order, grid.n)?,
            epsilon,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    fn point(&self, label: usize) -> Result<&FluxPoint> {
        self.fluxes.points.get(label).ok_or(Error::IndexOutOfRange {
            index: label,
            max: self.n(),
        })
    }

    /// Writes the weights of `point` into `w` and returns how many there are.
    #[inline]
    fn weights_into(
        &self,
        point: &FluxPoint,
        u: &[f64],
        mode: WeightMode,
        w: &mut [f64; 3],
    ) -> usize {
        let m = point.linear_weights.len();
        if mode == WeightMode::Linear || point.rule == WeightRule::Fixed {
            w[..m].copy_from_slice(&point.linear_weights);
            return m;
        }
        let ind = indicators(point.rule, point.anchor, u);
        let mut total = 0.0;
        for j in 0..m {
            let a = point.linear_weights[j] * (1.0 + ind.tau / (self.epsilon + ind.beta[j]));
            w[j] = a;
            total += a;
        }
        for v in &mut w[..m] {
            *v /= total;
        }
        m
    }

    pub fn nonlinear_weights(&self, u: &[f64], label: usize) -> Result<SmoothnessData> {
        check_len("state", u.len(), self.n())?;
        let point = self.point(label)?;
        let m = point.linear_weights.len();
        let ind = indicators(point.rule, point.anchor, u);
        let mut w = [0.0; 3];
        self.weights_into(point, u, WeightMode::Nonlinear, &mut w);
        let fixed = point.rule == WeightRule::Fixed;
        Ok(SmoothnessData {
            label,
            beta: if fixed {
                Vec::new()
            } else {
                ind.beta[..m].to_vec()
            },
            tau: ind.tau,
            epsilon: self.epsilon,
            linear_weights: point.linear_weights.clone(),
            weights: w[..m].to_vec(),
        })
    }

    pub fn smoothness(&self, u: &[f64]) -> Result<Vec<SmoothnessData>> {
        (0..=self.n())
            .map(|i| self.nonlinear_weights(u, i))
            .collect()
    }

    fn decompose(&self, u: &[f64], label: usize, mode: WeightMode) -> Result<FluxDecomposition> {
        check_len("state", u.len(), self.n())?;
        let point = self.point(label)?;
        let mut w = [0.0; 3];
        let m = self.weights_into(point, u, mode, &mut w);
        let candidates: Vec<f64> = point.substencils.iter().map(|s| s.eval(u)).collect();
        let value = candidates.iter().zip(&w[..m]).map(|(c, w)| c * w).sum();
        Ok(FluxDecomposition {
            value,
            candidates,
            weights: w[..m].to_vec(),
        })
    }

    pub fn linear_flux(&self, u: &[f64], label: usize) -> Result<FluxDecomposition> {
        self.decompose(u, label, WeightMode::Linear)
    }

    pub fn nonlinear_flux(&self, u: &[f64], label: usize) -> Result<FluxDecomposition> {
        self.decompose(u, label, WeightMode::Nonlinear)
    }

    /// All `n + 1` numerical fluxes.
    pub fn fluxes_into(&self, u: &[f64], mode: WeightMode, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n() + 1);
        let mut w = [0.0; 3];
        for (point, f) in self.fluxes.points.iter().zip(out.iter_mut()) {
            let m = self.weights_into(point, u, mode, &mut w);
            *f = point.substencils[..m]
                .iter()
                .zip(&w[..m])
                .map(|(s, w)| w * s.eval(u))
                .sum();
        }
    }

    /// `out_i = (f_{i+1} - f_i) / h̄_i`; `flux` is scratch space of length `n + 1`.
    pub fn apply_with(&self, u: &[f64], mode: WeightMode, flux: &mut [f64], out: &mut [f64]) {
        self.fluxes_into(u, mode, flux);
        for (i, o) in out.iter_mut().enumerate() {
            *o = (flux[i + 1] - flux[i]) / self.flux_grid.bar_spacings[i];
        }
    }

    pub fn apply(&self, u: &[f64], mode: WeightMode) -> Result<Vec<f64>> {
        check_len("state", u.len(), self.n())?;
        let mut flux = vec![0.0; self.n() + 1];
        let mut out = vec![0.0; self.n()];
        self.apply_with(u, mode, &mut flux, &mut out);
        Ok(out)
    }

    pub fn apply_dmw(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.apply(u, WeightMode::Nonlinear)
    }

    /// `H D_mw` with the weights frozen at `u`, as a band matrix of
    /// half-bandwidth `order.bandwidth()`; `band` is overwritten.
    pub fn hd_band_into(&self, u: &[f64], mode: WeightMode, band: &mut BandMatrix) {
        let n = self.n();
        band.fill_zero();
        let mut w = [0.0; 3];
        for point in &self.fluxes.points {
            let m = self.weights_into(point, u, mode, &mut w);
            let i = point.label;
            for (s, wj) in point.substencils[..m].iter().zip(&w[..m]) {
                for (k, c) in s.coeffs.iter().enumerate() {
                    let col = s.first + k;
                    let v = wj * c;
                    if i >= 1 {
                        band.add(i - 1, col, v);
                    }
                    if i < n {
                        band.add(i, col, -v);
                    }
                }
            }
        }
    }

    pub fn hd_band(&self, u: &[f64], mode: WeightMode) -> Result<BandMatrix> {
        check_len("state", u.len(), self.n())?;
        let k = self.order.bandwidth();
        let mut band = BandMatrix::zeros(self.n(), k, k);
        self.hd_band_into(u, mode, &mut band);
        Ok(band)
    }

    /// Dense `D_mw` with the weights frozen at `u`.
    pub fn dmw_matrix(&self, u: &[f64], mode: WeightMode) -> Result<DMatrix<f64>> {
        let mut d = self.hd_band(u, mode)?.to_dense();
        for (i, s) in self.flux_grid.bar_spacings.iter().enumerate() {
            for j in 0..self.n() {
                d[(i, j)] /= s;
            }
        }
        Ok(d)
    }
}

/// One row per weight: `label,substencil,beta,tau,epsilon,d,w`.
pub fn write_smoothness_csv<W: Write>(data: &[SmoothnessData], writer: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv output failed: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["label", "substencil", "beta", "tau", "epsilon", "d", "w"])
        .map_err(io)?;
    for s in data {
        for j in 0..s.weights.len() {
            let beta = s.beta.get(j).copied().unwrap_or(0.0);
            w.serialize((
                s.label,
                j + 1,
                beta,
                s.tau,
                s.epsilon,
                s.linear_weights[j],
                s.weights[j],
            ))
            .map_err(io)?;
        }
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv output failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbp::UpwindPair;

    fn op(order: Order, n: usize) -> WenoOperator {
        WenoOperator::new(order, &Grid::unit(n).unwrap()).unwrap()
    }

    #[test]
    fn p3_flux_grid_offsets() {
        let fg = build_flux_grid(3, &Grid::unit(13).unwrap()).unwrap();
        assert!((fg.bar_points[1] - 5.0 / 144.0).abs() < 1e-15);
        assert!((fg.bar_spacings[1] - 13.0 / 144.0).abs() < 1e-15);
        assert!((fg.bar_points[12] - (1.0 - 5.0 / 144.0)).abs() < 1e-15);
        let h = 1.0 / 12.0;
        for i in 3..10 {
            assert!((fg.bar_points[i] - (i as f64 - 0.5) * h).abs() < 1e-14);
        }
    }

    #[test]
    fn p4_second_flux_point() {
        let g = Grid::unit(21).unwrap();
        let fg = FluxGrid::new(Order::Fourth, &g).unwrap();
        assert!((fg.bar_points[2] - 29.0 / 18.0 * g.h).abs() < 1e-14);
        assert_eq!(fg.bar_points[0], 0.0);
        assert_eq!(fg.bar_points[21], 1.0);
    }

    #[test]
    fn spacings_match_norm() {
        for order in [Order::Third, Order::Fourth] {
            let g = Grid::new(33, -1.0, 1.0).unwrap();
            let fg = FluxGrid::new(order, &g).unwrap();
            let pair = UpwindPair::new(order, &g).unwrap();
            for (a, b) in fg.bar_spacings.iter().zip(&pair.h_diag) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn hand_evaluated_p3_weights() {
        let o = op(Order::Third, 12);
        let mut u = vec![0.0; 12];
        u[6] = 1.0;
        let o = WenoOperator::with_epsilon(Order::Third, &o.grid, 0.01).unwrap();
        // label 6 is anchored at grid point 5: local data (0, 0, 1)
        let s = o.nonlinear_weights(&u, 6).unwrap();
        assert_eq!(s.beta, vec![0.0, 1.0]);
        assert_eq!(s.tau, 1.0);
        assert!((s.weights[0] - 0.962_087).abs() < 1e-6, "{:?}", s.weights);
        assert!((s.weights[1] - 0.037_913).abs() < 1e-6);
    }

    #[test]
    fn linear_data_keeps_linear_weights() {
        let o = op(Order::Third, 20);
        let u: Vec<f64> = (0..20).map(|j| 0.3 * j as f64).collect();
        for i in 2..19 {
            let s = o.nonlinear_weights(&u, i).unwrap();
            for (w, d) in s.weights.iter().zip(&s.linear_weights) {
                assert!((w - d).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn linear_mode_reproduces_dm() {
        for order in [Order::Third, Order::Fourth] {
            let g = Grid::unit(25).unwrap();
            let o = WenoOperator::new(order, &g).unwrap();
            let pair = UpwindPair::new(order, &g).unwrap();
            let u: Vec<f64> = (0..25)
                .map(|j| ((j * 7919) % 23) as f64 / 23.0 - 0.5)
                .collect();
            let a = o.apply(&u, WeightMode::Linear).unwrap();
            let mut b = vec![0.0; 25];
            pair.apply_dm(&u, &mut b);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-13 * (1.0 + y.abs()));
            }
            let m = o.dmw_matrix(&u, WeightMode::Linear).unwrap();
            assert!(crate::linalg::max_abs(&(m - &pair.dm)) < 1e-11);
        }
    }

    #[test]
    fn frozen_matrix_reproduces_the_nonlinear_action() {
        for order in [Order::Third, Order::Fourth] {
            let n = 30;
            let o = op(order, n);
            let u: Vec<f64> = (0..n).map(|j| if j < 12 { 1.0 } else { 0.0 }).collect();
            let m = o.dmw_matrix(&u, WeightMode::Nonlinear).unwrap();
            let direct = o.apply_dmw(&u).unwrap();
            let via = &m * nalgebra::DVector::from_column_slice(&u);
            for i in 0..n {
                assert!((via[i] - direct[i]).abs() < 1e-10);
                let row_sum: f64 = m.row(i).iter().sum();
                assert!(row_sum.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn conservation_telescopes() {
        let o = op(Order::Fourth, 40);
        let u: Vec<f64> = o
            .grid
            .points
            .iter()
            .map(|x| (7.0 * x).sin() + (x > &0.4) as u8 as f64)
            .collect();
        let d = o.apply_dmw(&u).unwrap();
        let total: f64 = d
            .iter()
            .zip(&o.flux_grid.bar_spacings)
            .map(|(a, b)| a * b)
            .sum();
        assert!((total - (u[39] - u[0])).abs() < 1e-12);
    }

    #[test]
    fn smoothness_csv_has_one_row_per_weight() {
        let o = op(Order::Fourth, 16);
        let u: Vec<f64> = (0..16).map(|j| (j as f64).sin()).collect();
        let data = o.smoothness(&u).unwrap();
        let mut buf = Vec::new();
        write_smoothness_csv(&data, &mut buf).unwrap();
        let rows = String::from_utf8(buf).unwrap().lines().count() - 1;
        let expected: usize = data.iter().map(|s| s.weights.len()).sum();
        assert_eq!(rows, expected);
    }

    #[test]
    fn out_of_range_label() {
        let o = op(Order::Third, 10);
        assert_eq!(
            o.nonlinear_weights(&[0.0; 10], 11).unwrap_err(),
            Error::IndexOutOfRange { index: 11, max: 10 }
        );
    }
}
