//! SAT-penalized semidiscretizations of `u_t + u_x = 0` and of the 2×2
//! system `w_t + A w_x = 0`, `A = [[0, 1], [1, 0]]`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_len, Result};
use crate::linalg::max_abs;
use crate::sbp::UpwindPair;
use crate::stabilization::{StabilizationStats, StabilizationWorkspace, StabilizedOperator};
use crate::weno::{WeightMode, WenoOperator};

/// Boundary data `g(t)`; remembers whether it is identically zero.
#[derive(Clone)]
pub struct BoundaryData {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    homogeneous: bool,
}

impl BoundaryData {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            homogeneous: false,
        }
    }

    pub fn zero() -> Self {
        Self {
            f: Arc::new(|_| 0.0),
            homogeneous: true,
        }
    }

    pub fn constant(c: f64) -> Self {
        if c == 0.0 {
            Self::zero()
        } else {
            Self::new(move |_| c)
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.homogeneous {
            f.write_str("BoundaryData(0)")
        } else {
            f.write_str("BoundaryData(fn)")
        }
    }
}

/// A method-of-lines right-hand side that the time integrator can drive.
pub trait Semidiscretization: Sync {
    type Workspace: Send;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn workspace(&self) -> Self::Workspace;

    fn rhs_into(&self, u: &[f64], t: f64, ws: &mut Self::Workspace, out: &mut [f64]);

    /// Discrete energy `‖u‖²_H`.
    fn energy(&self, u: &[f64]) -> f64;

    fn h(&self) -> f64;

    /// True when the energy must not grow: homogeneous data and a
    /// configuration covered by an energy estimate.
    fn energy_nonincreasing(&self) -> bool;
}

/// Evaluator owning a private workspace for one scheme.
pub struct RhsEvaluator<'a, S: Semidiscretization> {
    pub scheme: &'a S,
    pub workspace: S::Workspace,
    pub evaluations: usize,
}

impl<'a, S: Semidiscretization> RhsEvaluator<'a, S> {
    pub fn new(scheme: &'a S) -> Self {
        Self {
            scheme,
            workspace: scheme.workspace(),
            evaluations: 0,
        }
    }

    pub fn eval_into(&mut self, u: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        check_len("state", u.len(), self.scheme.len())?;
        check_len("output", out.len(), self.scheme.len())?;
        self.scheme.rhs_into(u, t, &mut self.workspace, out);
        self.evaluations += 1;
        Ok(())
    }

    pub fn eval(&mut self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.scheme.len()];
        self.eval_into(u, t, &mut out)?;
        Ok(out)
    }
}

/// Derivative approximation used in the advection scheme.
#[derive(Debug, Clone)]
pub enum SpatialOperator {
    /// The linear upwind operator `D_m`.
    Linear,
    /// The WENO operator `D_mw`.
    Weno(WenoOperator),
    /// The stabilized WENO operator `D_mws`.
    Stabilized(StabilizedOperator),
}

#[derive(Debug, Clone)]
pub struct AdvectionScheme {
    pub pair: UpwindPair,
    pub tau: f64,
    pub g: BoundaryData,
    pub spatial: SpatialOperator,
}

#[derive(Debug, Clone)]
pub struct AdvectionWorkspace {
    flux: Vec<f64>,
    stab: Option<StabilizationWorkspace>,
    /// Compute the `R_mw + R_s` eigenvalue certificate on every evaluation.
    pub certify: bool,
    pub stats: StabilizationStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCertificate {
    pub max_eig: f64,
    pub certified: bool,
}

impl AdvectionScheme {
    pub fn new(pair: UpwindPair, tau: f64, g: BoundaryData) -> Self {
        Self {
            pair,
            tau,
            g,
            spatial: SpatialOperator::Linear,
        }
    }

    pub fn with_spatial(mut self, spatial: SpatialOperator) -> Self {
        self.spatial = spatial;
        self
    }

    pub fn n(&self) -> usize {
        self.pair.n()
    }

    /// The energy estimate covers `τ ≤ -1/2` for the linear and the
    /// stabilized operators; the plain WENO operator has none.
    pub fn certified_stable(&self) -> bool {
        self.tau <= -0.5 && !matches!(self.spatial, SpatialOperator::Weno(_))
    }

    /// `M = -(Q_m + Q_mᵀ) + (2τ + 1) e₀e₀ᵀ - e_{n-1}e_{n-1}ᵀ`, so that
    /// `d/dt ‖u‖²_H = uᵀ M u` for homogeneous data.
    pub fn stability_matrix(&self) -> DMatrix<f64> {
        let q = self.pair.qm();
        let mut m = -(&q + q.transpose());
        let n = self.n();
        m[(0, 0)] += 2.0 * self.tau + 1.0;
        m[(n - 1, n - 1)] -= 1.0;
        m
    }

    pub fn stability_certificate(&self) -> StabilityCertificate {
        let m = self.stability_matrix();
        let max_eig = nalgebra::SymmetricEigen::new(m.clone()).eigenvalues.max();
        StabilityCertificate {
            max_eig,
            certified: max_eig <= 1e-12 * max_abs(&m).max(1.0),
        }
    }

    /// Dense matrix `L` with `rhs = L u + τ H⁻¹ e₀ (-g)`; only for the linear operator.
    pub fn rhs_matrix(&self) -> DMatrix<f64> {
        let mut l = -self.pair.dm.clone();
        l[(0, 0)] += self.tau / self.pair.h_diag[0];
        l
    }
}

impl Semidiscretization for AdvectionScheme {
    type Workspace = AdvectionWorkspace;

    fn len(&self) -> usize {
        self.n()
    }

    fn workspace(&self) -> AdvectionWorkspace {
        AdvectionWorkspace {
            flux: vec![0.0; self.n() + 1],
            stab: match &self.spatial {
                SpatialOperator::Stabilized(op) => Some(op.workspace()),
                _ => None,
            },
            certify: false,
            stats: StabilizationStats::default(),
        }
    }

    fn rhs_into(&self, u: &[f64], t: f64, ws: &mut AdvectionWorkspace, out: &mut [f64]) {
        match &self.spatial {
            SpatialOperator::Linear => self.pair.apply_dm(u, out),
            SpatialOperator::Weno(op) => op.apply_with(u, WeightMode::Nonlinear, &mut ws.flux, out),
            SpatialOperator::Stabilized(op) => {
                let stab = ws.stab.get_or_insert_with(|| op.workspace());
                let report = op.apply_into(u, stab, out, ws.certify);
                ws.stats.record(&report);
            }
        }
        for o in out.iter_mut() {
            *o = -*o;
        }
        out[0] += self.tau * (u[0] - self.g.eval(t)) / self.pair.h_diag[0];
    }

    fn energy(&self, u: &[f64]) -> f64 {
        self.pair.norm_sq(u)
    }

    fn h(&self) -> f64 {
        self.pair.h()
    }

    fn energy_nonincreasing(&self) -> bool {
        self.g.is_homogeneous() && self.certified_stable()
    }
}

pub fn advection_rhs(scheme: &AdvectionScheme, u: &[f64], t: f64) -> Result<Vec<f64>> {
    RhsEvaluator::new(scheme).eval(u, t)
}

pub fn advection_stability_matrix(scheme: &AdvectionScheme) -> DMatrix<f64> {
    scheme.stability_matrix()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParameters {
    pub alpha0: f64,
    pub alpha1: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub tau4: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemStability {
    /// `α₀ ≥ 0` and `α₁ ≤ 0`.
    pub wellposed: bool,
    /// Both quadratic inequalities of the stability condition hold.
    pub inequalities: bool,
    /// The inequalities together with `τ₁ ≤ 0` and `τ₃ ≤ 0`.
    pub stable: bool,
}

/// Evaluates the boundary-energy conditions of the system scheme.
///
/// The two quadratic inequalities leave `τ₁` (at `α₀ = 0`) and `τ₃` (at
/// `α₁ = 0`) unconstrained, although a positive value gives a boundary
/// term `2τ u²` of the wrong sign; the `stable` flag therefore also asks
/// for `τ₁ ≤ 0` and `τ₃ ≤ 0`.
pub fn system_stability_check(p: &SystemParameters) -> SystemStability {
    let left = (p.alpha0 * p.tau1 - p.tau2 - 1.0).powi(2) + 4.0 * p.alpha0 * p.tau1;
    let right = (p.alpha1 * p.tau3 - p.tau4 + 1.0).powi(2) - 4.0 * p.alpha1 * p.tau3;
    let inequalities = left <= 0.0 && right <= 0.0;
    SystemStability {
        wellposed: p.alpha0 >= 0.0 && p.alpha1 <= 0.0,
        inequalities,
        stable: inequalities && p.tau1 <= 0.0 && p.tau3 <= 0.0,
    }
}

#[derive(Debug, Clone)]
pub struct SystemScheme {
    pub pair: UpwindPair,
    pub params: SystemParameters,
    pub g1: BoundaryData,
    pub gn: BoundaryData,
}

#[derive(Debug, Clone)]
pub struct SystemWorkspace {
    diff: Vec<f64>,
    sum: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl SystemScheme {
    pub fn new(
        pair: UpwindPair,
        params: SystemParameters,
        g1: BoundaryData,
        gn: BoundaryData,
    ) -> Self {
        Self {
            pair,
            params,
            g1,
            gn,
        }
    }

    pub fn n(&self) -> usize {
        self.pair.n()
    }

    /// `A_m = [[1, 1], [1, 1]]/2`.
    pub fn a_minus() -> [[f64; 2]; 2] {
        [[0.5, 0.5], [0.5, 0.5]]
    }

    /// `A_p = [[-1, 1], [1, -1]]/2`.
    pub fn a_plus() -> [[f64; 2]; 2] {
        [[-0.5, 0.5], [0.5, -0.5]]
    }

    pub fn stability(&self) -> SystemStability {
        system_stability_check(&self.params)
    }

    /// Dense `2n × 2n` matrix `L` of the homogeneous-data right-hand side.
    pub fn rhs_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let (am, ap) = (Self::a_minus(), Self::a_plus());
        let mut l = DMatrix::zeros(2 * n, 2 * n);
        for bi in 0..2 {
            for bj in 0..2 {
                let block = -(&self.pair.dp * ap[bi][bj]) - &self.pair.dm * am[bi][bj];
                l.view_mut((bi * n, bj * n), (n, n)).copy_from(&block);
            }
        }
        let p = &self.params;
        let (h0, hn) = (self.pair.h_diag[0], self.pair.h_diag[n - 1]);
        l[(0, 0)] += p.tau1 / h0;
        l[(0, n)] += p.tau1 * p.alpha0 / h0;
        l[(n, 0)] += p.tau2 / h0;
        l[(n, n)] += p.tau2 * p.alpha0 / h0;
        l[(n - 1, n - 1)] += p.tau3 / hn;
        l[(n - 1, 2 * n - 1)] += p.tau3 * p.alpha1 / hn;
        l[(2 * n - 1, n - 1)] += p.tau4 / hn;
        l[(2 * n - 1, 2 * n - 1)] += p.tau4 * p.alpha1 / hn;
        l
    }

    /// Symmetric `E` with `d/dt ‖w‖²_H = wᵀ E w` for homogeneous data.
    pub fn energy_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let l = self.rhs_matrix();
        let hw = DMatrix::from_fn(2 * n, 2 * n, |i, j| l[(i, j)] * self.pair.h_diag[i % n]);
        &hw + hw.transpose()
    }
}

impl Semidiscretization for SystemScheme {
    type Workspace = SystemWorkspace;

    fn len(&self) -> usize {
        2 * self.n()
    }

    fn workspace(&self) -> SystemWorkspace {
        let n = self.n();
        SystemWorkspace {
            diff: vec![0.0; n],
            sum: vec![0.0; n],
            a: vec![0.0; n],
            b: vec![0.0; n],
        }
    }

    fn rhs_into(&self, w: &[f64], t: f64, ws: &mut SystemWorkspace, out: &mut [f64]) {
        let n = self.n();
        let (u, v) = w.split_at(n);
        for i in 0..n {
            ws.diff[i] = 0.5 * (v[i] - u[i]);
            ws.sum[i] = 0.5 * (u[i] + v[i]);
        }
        self.pair.apply_dp(&ws.diff, &mut ws.a);
        self.pair.apply_dm(&ws.sum, &mut ws.b);
        let (ou, ov) = out.split_at_mut(n);
        for i in 0..n {
            ou[i] = -ws.a[i] - ws.b[i];
            ov[i] = ws.a[i] - ws.b[i];
        }
        let p = &self.params;
        let r0 = (u[0] + p.alpha0 * v[0] - self.g1.eval(t)) / self.pair.h_diag[0];
        ou[0] += p.tau1 * r0;
        ov[0] += p.tau2 * r0;
        let rn = (u[n - 1] + p.alpha1 * v[n - 1] - self.gn.eval(t)) / self.pair.h_diag[n - 1];
        ou[n - 1] += p.tau3 * rn;
        ov[n - 1] += p.tau4 * rn;
    }

    fn energy(&self, w: &[f64]) -> f64 {
        let n = self.n();
        self.pair.norm_sq(&w[..n]) + self.pair.norm_sq(&w[n..])
    }

    fn h(&self) -> f64 {
        self.pair.h()
    }

    fn energy_nonincreasing(&self) -> bool {
        self.g1.is_homogeneous() && self.gn.is_homogeneous() && self.stability().stable
    }
}

pub fn system_rhs(scheme: &SystemScheme, w: &[f64], t: f64) -> Result<Vec<f64>> {
    RhsEvaluator::new(scheme).eval(w, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::stencil::Order;
    use nalgebra::DVector;

    fn pair(order: Order, n: usize) -> UpwindPair {
        UpwindPair::new(order, &Grid::unit(n).unwrap()).unwrap()
    }

    fn reference_params(tau1: f64) -> SystemParameters {
        SystemParameters {
            alpha0: 0.5,
            alpha1: 0.0,
            tau1,
            tau2: -1.0 / 3.0,
            tau3: 0.0,
            tau4: 1.0,
        }
    }

    #[test]
    fn constants_are_steady() {
        let s = AdvectionScheme::new(pair(Order::Third, 20), -1.0, BoundaryData::constant(2.5));
        let r = advection_rhs(&s, &[2.5; 20], 0.3).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn linear_state_without_penalty() {
        for order in [Order::Third, Order::Fourth] {
            let p = pair(order, 30);
            let x = p.grid.points.clone();
            let s = AdvectionScheme::new(p, 0.0, BoundaryData::zero());
            let r = advection_rhs(&s, &x, 0.0).unwrap();
            assert!(r.iter().all(|v| (v + 1.0).abs() < 1e-11));
            let s = AdvectionScheme { tau: -1.0, ..s };
            let r = advection_rhs(&s, &x, 0.0).unwrap();
            assert!((r[0] + 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn penalty_scaling_uses_the_exact_norm_weight() {
        let p = pair(Order::Third, 13);
        let h = p.h();
        let s = AdvectionScheme::new(p, -1.0, BoundaryData::zero());
        let mut u = vec![0.0; 13];
        u[0] = 1.0;
        let r = advection_rhs(&s, &u, 0.0).unwrap();
        // -D_m u at row 0 is 1/h; the penalty adds -12/(5h)
        assert!((r[0] - (1.0 / h - 12.0 / (5.0 * h))).abs() < 1e-10);
    }

    #[test]
    fn advection_certificates() {
        let m = AdvectionScheme::new(pair(Order::Third, 30), -0.5, BoundaryData::zero());
        let q = m.pair.qm();
        let expect = -(&q + q.transpose());
        let sm = m.stability_matrix();
        assert_eq!(sm[(0, 0)], expect[(0, 0)]);
        assert!(m.stability_certificate().certified);
        let m1 = AdvectionScheme {
            tau: -1.0,
            ..m.clone()
        };
        assert!(m1.stability_certificate().max_eig <= 1e-12);
        let m0 = AdvectionScheme { tau: 0.0, ..m };
        let c = m0.stability_certificate();
        assert!(c.max_eig > 0.0 && !c.certified);
        assert!(!m0.certified_stable());
    }

    #[test]
    fn rhs_matches_assembled_matrix() {
        let s = AdvectionScheme::new(pair(Order::Fourth, 24), -2.0, BoundaryData::zero());
        let u: Vec<f64> = (0..24).map(|j| ((j * 37) % 11) as f64 - 5.0).collect();
        let r = advection_rhs(&s, &u, 0.0).unwrap();
        let m = s.rhs_matrix() * DVector::from_column_slice(&u);
        for i in 0..24 {
            assert!((r[i] - m[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let s = AdvectionScheme::new(pair(Order::Third, 10), -1.0, BoundaryData::zero());
        assert!(advection_rhs(&s, &[0.0; 9], 0.0).is_err());
    }

    #[test]
    fn split_matrices() {
        let (am, ap) = (SystemScheme::a_minus(), SystemScheme::a_plus());
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 0.0 } else { 1.0 };
                assert_eq!(am[i][j] + ap[i][j], expected);
            }
        }
    }

    #[test]
    fn stability_examples() {
        let s = system_stability_check(&reference_params(-4.0 / 3.0));
        assert!(s.stable && s.wellposed && s.inequalities);
        let s = system_stability_check(&SystemParameters {
            alpha0: 0.7,
            tau1: 0.0,
            tau2: -1.0,
            ..reference_params(0.0)
        });
        assert!(s.stable);
        let s = system_stability_check(&SystemParameters {
            tau2: 0.0,
            ..reference_params(-4.0 / 3.0)
        });
        assert!(!s.stable && !s.inequalities);
        let s = system_stability_check(&SystemParameters {
            alpha0: 0.0,
            tau1: 0.5,
            tau2: -1.0,
            ..reference_params(0.0)
        });
        assert!(s.inequalities && !s.stable);
        assert!(
            !system_stability_check(&SystemParameters {
                alpha1: 0.1,
                ..reference_params(-2.0)
            })
            .wellposed
        );
    }

    #[test]
    fn system_constants_with_matching_data() {
        let p = pair(Order::Third, 20);
        let params = reference_params(-2.0);
        let (cu, cv) = (0.7, -0.3);
        let s = SystemScheme::new(
            p,
            params,
            BoundaryData::constant(cu + params.alpha0 * cv),
            BoundaryData::constant(cu + params.alpha1 * cv),
        );
        let mut w = vec![cu; 20];
        w.extend(vec![cv; 20]);
        let r = system_rhs(&s, &w, 0.0).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn system_penalty_on_v_block_only() {
        let p = pair(Order::Third, 20);
        let h0 = p.h_diag[0];
        let params = SystemParameters {
            alpha0: 0.5,
            tau1: 0.0,
            tau2: -1.0,
            ..reference_params(0.0)
        };
        let s = SystemScheme::new(
            p.clone(),
            params,
            BoundaryData::zero(),
            BoundaryData::zero(),
        );
        let mut w = vec![0.0; 40];
        w[20] = 1.0;
        let with = system_rhs(&s, &w, 0.0).unwrap();
        let free = SystemScheme::new(
            p,
            SystemParameters {
                tau2: 0.0,
                ..params
            },
            BoundaryData::zero(),
            BoundaryData::zero(),
        );
        let without = system_rhs(&free, &w, 0.0).unwrap();
        for i in 0..40 {
            let expected = if i == 20 { -0.5 / h0 } else { 0.0 };
            assert!((with[i] - without[i] - expected).abs() < 1e-12, "row {i}");
        }
    }

    #[test]
    fn system_rhs_matches_assembled_matrix() {
        let s = SystemScheme::new(
            pair(Order::Fourth, 16),
            reference_params(-2.0),
            BoundaryData::zero(),
            BoundaryData::zero(),
        );
        let w: Vec<f64> = (0..32).map(|j| ((j * 13) % 7) as f64 - 3.0).collect();
        let r = system_rhs(&s, &w, 0.0).unwrap();
        let m = s.rhs_matrix() * DVector::from_column_slice(&w);
        for i in 0..32 {
            assert!((r[i] - m[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn stable_parameters_give_energy_decay() {
        for order in [Order::Third, Order::Fourth] {
            for tau1 in [-4.0 / 3.0, -2.0] {
                let s = SystemScheme::new(
                    pair(order, 30),
                    reference_params(tau1),
                    BoundaryData::zero(),
                    BoundaryData::zero(),
                );
                assert!(s.energy_nonincreasing());
                let e = s.energy_matrix();
                let max = nalgebra::SymmetricEigen::new(e).eigenvalues.max();
                assert!(max <= 1e-10, "p={order} τ₁={tau1}: {max}");
            }
        }
    }
}
