//! Normal-mode analysis of the `p = 3` schemes: characteristic roots,
//! boundary systems `C(s̃) Σ = d`, determinant conditions and the slow-mode
//! coefficients that decide the convergence rate.
//!
//! Everything is in units of the grid spacing (`s̃ = s h`, truncation
//! vectors per unit of `h² ∂²/∂x²` of the boundary data).

use nalgebra::{Complex, DMatrix, DVector, Matrix2, Matrix4, Vector2, Vector4};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::sat::{AdvectionScheme, BoundaryData, SystemParameters, SystemScheme};
use crate::sbp::UpwindPair;
use crate::stencil::Order;

pub type C64 = Complex<f64>;

/// Perturbation used to decide admissibility on the imaginary axis.
pub const ADMISSIBILITY_SHIFT: f64 = 1e-6;

const SQRT33: f64 = 5.744_562_646_538_029;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Inflow,
    Outflow,
}

/// Cubic `c₀ + c₁κ + c₂κ² + c₃κ³ = 0` of the interior `p = 3` recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicProblem {
    pub side: Side,
    pub s_tilde: C64,
}

impl CharacteristicProblem {
    pub fn new(side: Side, s_tilde: C64) -> Self {
        Self { side, s_tilde }
    }

    pub fn coefficients(&self) -> [C64; 4] {
        let s = self.s_tilde;
        let r = |x: f64| C64::new(x, 0.0);
        match self.side {
            Side::Inflow => [r(-1.0 / 6.0), r(1.0), -(s + 0.5), r(-1.0 / 3.0)],
            Side::Outflow => [r(1.0 / 3.0), s + 0.5, r(-1.0), r(1.0 / 6.0)],
        }
    }

    pub fn eval(&self, k: C64) -> C64 {
        let c = self.coefficients();
        ((c[3] * k + c[2]) * k + c[1]) * k + c[0]
    }

    fn derivative(&self, k: C64) -> C64 {
        let c = self.coefficients();
        (c[3] * 3.0 * k + c[2] * 2.0) * k + c[1]
    }

    /// Companion-matrix eigenvalues, each refined by a few Newton steps.
    pub fn roots(&self) -> Result<Vec<C64>> {
        let c = self.coefficients();
        let lead = c[3];
        let mut m = DMatrix::<C64>::zeros(3, 3);
        m[(1, 0)] = C64::new(1.0, 0.0);
        m[(2, 1)] = C64::new(1.0, 0.0);
        for i in 0..3 {
            m[(i, 2)] = -c[i] / lead;
        }
        let schur = nalgebra::linalg::Schur::try_new(m, 1e-15, 10_000).ok_or_else(|| {
            Error::NumericalFailure("companion Schur iteration did not converge".into())
        })?;
        let eig = schur
            .eigenvalues()
            .ok_or_else(|| Error::NumericalFailure("companion eigenvalues unavailable".into()))?;
        let mut roots: Vec<C64> = eig.iter().copied().collect();
        for r in &mut roots {
            for _ in 0..4 {
                let d = self.derivative(*r);
                if d.norm() == 0.0 {
                    break;
                }
                let step = self.eval(*r) / d;
                if !step.re.is_finite() || !step.im.is_finite() {
                    break;
                }
                *r -= step;
            }
        }
        if roots
            .iter()
            .any(|r| !(r.re.is_finite() && r.im.is_finite()))
        {
            return Err(Error::NumericalFailure(
                "non-finite characteristic root".into(),
            ));
        }
        Ok(roots)
    }
}

/// Matches each of `prev` to a distinct nearest element of `next`.
fn match_roots(prev: &[C64], next: &[C64]) -> Vec<C64> {
    let mut used = vec![false; next.len()];
    prev.iter()
        .map(|p| {
            let (k, _) = next
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .min_by(|a, b| (a.1 - p).norm().total_cmp(&(b.1 - p).norm()))
                .expect("as many roots as before");
            used[k] = true;
            next[k]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub side: Side,
    pub s_tilde: C64,
    pub roots: Vec<C64>,
    /// `|κ| < 1` for `Re(s̃) > 0` (decided at `s̃ + δ` on the imaginary axis).
    pub admissible: Vec<bool>,
    /// The root equals 1 at `s̃ = 0`.
    pub slow: Vec<bool>,
}

impl RootSet {
    pub fn admissible_roots(&self) -> Vec<C64> {
        self.roots
            .iter()
            .zip(&self.admissible)
            .filter(|(_, a)| **a)
            .map(|(r, _)| *r)
            .collect()
    }

    pub fn slow_root(&self) -> Option<C64> {
        self.roots
            .iter()
            .zip(self.slow.iter().zip(&self.admissible))
            .find(|(_, (s, a))| **s && **a)
            .map(|(r, _)| *r)
    }

    /// Admissible roots that are not slow.
    pub fn fast_roots(&self) -> Vec<C64> {
        self.roots
            .iter()
            .zip(self.slow.iter().zip(&self.admissible))
            .filter(|(_, (s, a))| !**s && **a)
            .map(|(r, _)| *r)
            .collect()
    }
}

/// Roots at `s̃`, tracked by continuation from `s̃ = 0` so that the slow
/// root keeps its identity.
pub fn characteristic_roots(side: Side, s_tilde: C64) -> Result<RootSet> {
    let base = CharacteristicProblem::new(side, C64::new(0.0, 0.0)).roots()?;
    let slow: Vec<bool> = base.iter().map(|r| (r - 1.0).norm() < 1e-8).collect();
    let steps = (32.0 * s_tilde.norm().max(1.0)).ceil() as usize;
    let mut current = base;
    for k in 1..=steps {
        let s = s_tilde * (k as f64 / steps as f64);
        let next = CharacteristicProblem::new(side, s).roots()?;
        current = match_roots(&current, &next);
    }
    let admissible = if s_tilde.re > ADMISSIBILITY_SHIFT {
        current.iter().map(|r| r.norm() < 1.0).collect()
    } else {
        let shifted = CharacteristicProblem::new(side, s_tilde + ADMISSIBILITY_SHIFT).roots()?;
        match_roots(&current, &shifted)
            .iter()
            .map(|r| r.norm() < 1.0)
            .collect()
    };
    Ok(RootSet {
        side,
        s_tilde,
        roots: current,
        admissible,
        slow,
    })
}

/// `(κ₁, κ₂)` = (slow, fast) admissible inflow roots.
fn inflow_pair(s: C64) -> Result<(C64, C64)> {
    let set = characteristic_roots(Side::Inflow, s)?;
    let slow = set
        .slow_root()
        .ok_or_else(|| Error::NumericalFailure("no admissible slow inflow root".into()))?;
    let fast = set.fast_roots();
    if fast.len() != 1 {
        return Err(Error::NumericalFailure(format!(
            "expected one fast admissible inflow root, found {}",
            fast.len()
        )));
    }
    Ok((slow, fast[0]))
}

fn outflow_root(s: C64) -> Result<C64> {
    let adm = characteristic_roots(Side::Outflow, s)?.admissible_roots();
    if adm.len() != 1 {
        return Err(Error::NumericalFailure(format!(
            "expected one admissible outflow root, found {}",
            adm.len()
        )));
    }
    Ok(adm[0])
}

/// A small complex linear system `C Σ = d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySystem {
    pub matrix: DMatrix<C64>,
    pub rhs: DVector<C64>,
}

impl BoundarySystem {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn determinant(&self) -> C64 {
        self.matrix.determinant()
    }

    pub fn solve(&self) -> Result<DVector<C64>> {
        self.matrix
            .clone()
            .lu()
            .solve(&self.rhs)
            .ok_or_else(|| Error::NumericalFailure("singular boundary system".into()))
    }
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Inflow system of the advection scheme with closed-form entries;
/// unknowns `(σ₁, σ₂)` multiply the slow and fast roots.
pub fn scalar_boundary_system(tau: f64, s: C64) -> Result<BoundarySystem> {
    let (k1, k2) = inflow_pair(s)?;
    let row1 = |k: C64| s - 1.0 - 12.0 / 5.0 * tau + k;
    let row2 = |k: C64| -9.0 / 13.0 + s * k + k * (5.0 / 13.0) + k * k * (4.0 / 13.0);
    Ok(BoundarySystem {
        matrix: DMatrix::from_row_slice(2, 2, &[row1(k1), row1(k2), row2(k1), row2(k2)]),
        rhs: DVector::from_vec(vec![c(0.5), c(-5.0 / 26.0)]),
    })
}

const OPERATOR_POINTS: usize = 40;

fn unit_spacing_pair() -> UpwindPair {
    let g = Grid::new(OPERATOR_POINTS, 0.0, (OPERATOR_POINTS - 1) as f64).expect("valid grid");
    UpwindPair::new(Order::Third, &g).expect("valid pair")
}

/// Truncation `-(A w_x) - L w` of quadratic data at the first rows.
fn truncation(l: &DMatrix<f64>, exact: &[f64], exact_rhs: &[f64], rows: &[usize]) -> Vec<f64> {
    let w = DVector::from_column_slice(exact);
    let lw = l * w;
    rows.iter().map(|&r| exact_rhs[r] - lw[r]).collect()
}

/// Inflow system of the advection scheme assembled directly from the
/// operator rows and the derived truncation error (unit spacing).
pub fn scalar_boundary_system_from_operator(tau: f64, s: C64) -> Result<BoundarySystem> {
    let (k1, k2) = inflow_pair(s)?;
    let scheme = AdvectionScheme::new(unit_spacing_pair(), tau, BoundaryData::zero());
    let l = scheme.rhs_matrix();
    let n = OPERATOR_POINTS;
    let mut m = DMatrix::<C64>::zeros(2, 2);
    for (col, k) in [k1, k2].into_iter().enumerate() {
        for row in 0..2 {
            let mut v = s * k.powu(row as u32);
            for j in 0..n {
                v -= k.powu(j as u32) * l[(row, j)];
            }
            m[(row, col)] = v;
        }
    }
    let x: Vec<f64> = (0..n).map(|j| j as f64).collect();
    let exact: Vec<f64> = x.iter().map(|x| 0.5 * x * x).collect();
    let exact_rhs: Vec<f64> = x.iter().map(|x| -x).collect();
    let d = truncation(&l, &exact, &exact_rhs, &[0, 1]);
    Ok(BoundarySystem {
        matrix: m,
        rhs: DVector::from_iterator(2, d.into_iter().map(c)),
    })
}

pub fn boundary_determinant_scalar(tau: f64, s: C64) -> Result<C64> {
    Ok(scalar_boundary_system(tau, s)?.determinant())
}

pub fn scalar_determinant_closed_form(tau: f64) -> f64 {
    3.0 * tau * (3.0 + 5.0 * SQRT33) / 65.0
}

/// Slow-mode coefficients, per unit of `h²` times the boundary data's
/// second derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSolution {
    pub closed_form: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_discrepancy: f64,
}

impl SigmaSolution {
    pub fn values(&self) -> &[f64] {
        &self.closed_form
    }
}

/// `(σ₁, σ₂)` of the inflow system at `s̃ = 0`, from the closed form and
/// from a direct solve; they must agree to `1e-10`.
pub fn sigma_scalar(tau: f64) -> Result<SigmaSolution> {
    if tau == 0.0 {
        return Err(Error::DivisionByZero("σ₁ is undefined for τ = 0".into()));
    }
    let q = 3.0 + 5.0 * SQRT33;
    let closed_form = vec![-10.0 * (1.0 + tau) / (q * tau), 10.0 / q];
    let sol = scalar_boundary_system(tau, c(0.0))?.solve()?;
    let numeric: Vec<f64> = sol.iter().map(|z| z.re).collect();
    finish(closed_form, numeric, 1e-10)
}

fn finish(closed_form: Vec<f64>, numeric: Vec<f64>, tol: f64) -> Result<SigmaSolution> {
    let max_discrepancy = closed_form
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max);
    if max_discrepancy > tol {
        return Err(Error::NumericalFailure(format!(
            "closed form {closed_form:?} and direct solve {numeric:?} disagree by {max_discrepancy:.3e}"
        )));
    }
    Ok(SigmaSolution {
        closed_form,
        numeric,
        max_discrepancy,
    })
}

/// Truncation vector of the system inflow boundary for `(û_xx, v̂_xx)`.
pub fn system_truncation_closed_form(u_xx: f64, v_xx: f64) -> Vector4<f64> {
    Vector4::new(
        -(3.0 * v_xx + 2.0 * u_xx) / 10.0,
        (3.0 * v_xx + 2.0 * u_xx) / 26.0,
        -(3.0 * u_xx + 2.0 * v_xx) / 10.0,
        (3.0 * u_xx + 2.0 * v_xx) / 26.0,
    )
}

/// `C_s(0)` with closed-form entries; unknowns `(σ₀, σ₁, σ₂, γ̂₁)` where
/// `σ₁` multiplies the fast and `σ₂` the slow root.
pub fn system_matrix_closed_form(alpha0: f64, tau1: f64, tau2: f64) -> Matrix4<f64> {
    let a = SQRT33 + 4.0;
    Matrix4::new(
        a / 10.0,
        (96.0 * alpha0 * tau1 - 5.0 * SQRT33 + 73.0) / 40.0,
        (24.0 * alpha0 * tau1 + 7.0) / 10.0,
        -(12.0 * tau1 * (alpha0 - 1.0) + 7.0) / 5.0,
        -a / 26.0,
        (5.0 * SQRT33 + 23.0) / 104.0,
        5.0 / 26.0,
        -5.0 / 13.0,
        -a / 10.0,
        (96.0 * alpha0 * tau2 - 5.0 * SQRT33 + 17.0) / 40.0,
        (24.0 * alpha0 * tau2 - 7.0) / 10.0,
        (7.0 - 12.0 * tau2 * (alpha0 - 1.0)) / 5.0,
        a / 26.0,
        (5.0 * SQRT33 - 17.0) / 104.0,
        -5.0 / 26.0,
        5.0 / 13.0,
    )
}

/// The system inflow boundary system assembled from the operator rows for
/// any `s̃`, with the derived truncation for `(û_xx, v̂_xx)`.
///
/// Rows are `(s̃ I - h L) ŵ` at the first two points of each block. The
/// closed-form `C_s(0)` and truncation vector are the negatives of these, which
/// leaves the solution unchanged.
pub fn system_boundary_system_from_operator(
    alpha0: f64,
    tau1: f64,
    tau2: f64,
    s: C64,
    u_xx: f64,
    v_xx: f64,
) -> Result<BoundarySystem> {
    let (k_slow, k_fast) = inflow_pair(s)?;
    let theta = outflow_root(s)?;
    let n = OPERATOR_POINTS;
    let params = SystemParameters {
        alpha0,
        alpha1: 0.0,
        tau1,
        tau2,
        tau3: 0.0,
        tau4: 1.0,
    };
    let scheme = SystemScheme::new(
        unit_spacing_pair(),
        params,
        BoundaryData::zero(),
        BoundaryData::zero(),
    );
    let l = scheme.rhs_matrix();

    // γ_j and δ_j as linear combinations of (σ₀, σ₁, σ₂, γ̂₁).
    let zero = c(0.0);
    let mut gamma = vec![[zero; 4]; n];
    let mut delta = vec![[zero; 4]; n];
    gamma[0] = [zero, zero, zero, c(1.0)];
    delta[0] = [zero, c(1.0), c(1.0), c(-1.0)];
    for j in 1..n {
        let t = theta.powu(j as u32 - 1) * 0.5;
        let f = k_fast.powu(j as u32) * 0.5;
        let sl = k_slow.powu(j as u32) * 0.5;
        gamma[j] = [t, f, sl, zero];
        delta[j] = [-t, f, sl, zero];
    }
    let coef = |idx: usize| if idx < n { gamma[idx] } else { delta[idx - n] };

    let rows = [0, 1, n, n + 1];
    let mut m = DMatrix::<C64>::zeros(4, 4);
    for (r, &row) in rows.iter().enumerate() {
        let own = coef(row);
        for k in 0..4 {
            let mut v = s * own[k];
            for j in 0..2 * n {
                let lij = l[(row, j)];
                if lij != 0.0 {
                    v -= coef(j)[k] * lij;
                }
            }
            m[(r, k)] = v;
        }
    }

    let x: Vec<f64> = (0..n).map(|j| j as f64).collect();
    let mut exact: Vec<f64> = x.iter().map(|x| 0.5 * u_xx * x * x).collect();
    exact.extend(x.iter().map(|x| 0.5 * v_xx * x * x));
    let mut exact_rhs: Vec<f64> = x.iter().map(|x| -v_xx * x).collect();
    exact_rhs.extend(x.iter().map(|x| -u_xx * x));
    let d = truncation(&l, &exact, &exact_rhs, &rows);
    Ok(BoundarySystem {
        matrix: m,
        rhs: DVector::from_iterator(4, d.into_iter().map(c)),
    })
}

/// `σ₂` of the system inflow boundary per unit of `û_xx + v̂_xx`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSigma {
    pub closed_form: f64,
    /// `σ₂` from the closed-form `C_s(0)` with `(û_xx, v̂_xx) = (1, 0)` and `(0, 1)`.
    pub numeric: [f64; 2],
    /// Full solution `(σ₀, σ₁, σ₂, γ̂₁)` for `(1, 0)`.
    pub solution: [f64; 4],
    pub determinant: f64,
    pub max_discrepancy: f64,
}

pub fn sigma2_closed_form(alpha0: f64, tau1: f64, tau2: f64) -> f64 {
    -(25.0 * SQRT33 - 15.0) * (alpha0 * tau1 + tau2 + 1.0)
        / (204.0 * (tau1 + tau2) * (alpha0 + 1.0))
}

pub fn sigma2_system(alpha0: f64, tau1: f64, tau2: f64) -> Result<SystemSigma> {
    if alpha0 < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "α₀ must be nonnegative, got {alpha0}"
        )));
    }
    if tau1 + tau2 == 0.0 {
        return Err(Error::DegenerateParameters("τ₁ + τ₂ = 0".into()));
    }
    let closed_form = sigma2_closed_form(alpha0, tau1, tau2);
    let m = system_matrix_closed_form(alpha0, tau1, tau2);
    let lu = m.lu();
    let solve = |u: f64, v: f64| {
        lu.solve(&system_truncation_closed_form(u, v))
            .ok_or_else(|| Error::NumericalFailure("singular C_s(0)".into()))
    };
    let a = solve(1.0, 0.0)?;
    let b = solve(0.0, 1.0)?;
    let numeric = [a[2], b[2]];
    let max_discrepancy = numeric
        .iter()
        .map(|x| (x - closed_form).abs() / closed_form.abs().max(1.0))
        .fold(0.0, f64::max);
    if max_discrepancy > 1e-9 {
        return Err(Error::NumericalFailure(format!(
            "σ₂ closed form {closed_form} disagrees with the direct solve {numeric:?}"
        )));
    }
    Ok(SystemSigma {
        closed_form,
        numeric,
        solution: [a[0], a[1], a[2], a[3]],
        determinant: m.determinant(),
        max_discrepancy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaBound {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// `1/(1 - |κ₁|²)` against its leading-order bound `1/(2 Re s̃)`.
pub fn kappa_bound_check(eta_h: f64) -> Result<KappaBound> {
    if eta_h.is_nan() || eta_h <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "η h must be positive, got {eta_h}"
        )));
    }
    let (k1, _) = inflow_pair(c(eta_h))?;
    let lhs = 1.0 / (1.0 - k1.norm_sqr());
    let rhs = 1.0 / (2.0 * eta_h);
    Ok(KappaBound {
        lhs,
        rhs,
        ok: lhs <= rhs * 1.1,
    })
}

/// Outflow error `(ξ̂₁, ξ̂₂)` at the last two points, closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct OutflowSolution {
    pub kappa: C64,
    pub determinant: C64,
    pub xi: [C64; 2],
}

pub fn outflow_system(s: C64) -> Result<(Matrix2<C64>, Vector2<C64>, C64)> {
    let k = outflow_root(s)?;
    let m = Matrix2::new(
        c(5.0 / 13.0),
        s + 5.0 / 13.0 - k * (12.0 / 13.0) + k * k * (2.0 / 13.0),
        s + 7.0 / 5.0,
        k * (2.0 / 5.0) - 9.0 / 5.0,
    );
    Ok((m, Vector2::new(c(-1.0 / 26.0), c(1.0 / 10.0)), k))
}

pub fn outflow_solution(s: C64) -> Result<OutflowSolution> {
    let (m, d, kappa) = outflow_system(s)?;
    let determinant = m.determinant();
    let xi = m
        .lu()
        .solve(&d)
        .ok_or_else(|| Error::NumericalFailure("singular outflow system".into()))?;
    Ok(OutflowSolution {
        kappa,
        determinant,
        xi: [xi[0], xi[1]],
    })
}

/// Rate implied by the inflow analysis of the advection scheme.
pub fn predicted_rate_scalar(tau: f64) -> Result<f64> {
    let s = sigma_scalar(tau)?;
    Ok(if s.closed_form[0].abs() < 1e-12 {
        2.5
    } else {
        2.0
    })
}

/// Rate implied by the analysis of the system scheme.
pub fn predicted_rate_system(p: &SystemParameters) -> Result<f64> {
    let s = sigma2_system(p.alpha0, p.tau1, p.tau2)?;
    let right = p.alpha1 * p.tau3 + p.tau4 - 1.0;
    Ok(if s.closed_form.abs() < 1e-12 && right.abs() < 1e-12 {
        2.5
    } else {
        2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_real(v: &[C64]) -> Vec<f64> {
        let mut r: Vec<f64> = v.iter().map(|z| z.re).collect();
        r.sort_by(f64::total_cmp);
        r
    }

    #[test]
    fn inflow_roots_at_zero() {
        let set = characteristic_roots(Side::Inflow, c(0.0)).unwrap();
        let r = sorted_real(&set.roots);
        let expected = [(-5.0 - SQRT33) / 4.0, (-5.0 + SQRT33) / 4.0, 1.0];
        for (a, b) in r.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let adm = sorted_real(&set.admissible_roots());
        assert_eq!(adm.len(), 2);
        assert!((adm[0] - 0.186_141).abs() < 1e-6);
        assert!((adm[1] - 1.0).abs() < 1e-12);
        assert!((set.slow_root().unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn outflow_single_admissible_root() {
        let set = characteristic_roots(Side::Outflow, c(0.0)).unwrap();
        let adm = set.admissible_roots();
        assert_eq!(adm.len(), 1);
        assert!((adm[0].re - (5.0 - SQRT33) / 2.0).abs() < 1e-12);
        assert!((adm[0].re + 0.372_281).abs() < 1e-6);
    }

    #[test]
    fn slow_root_follows_one_minus_s() {
        let set = characteristic_roots(Side::Inflow, c(0.01)).unwrap();
        let k = set.slow_root().unwrap();
        assert!((k - (1.0 - 0.01)).norm() < 1e-3);
    }

    #[test]
    fn closed_form_determinant() {
        for tau in [-0.5, -1.0, -2.0] {
            let d = boundary_determinant_scalar(tau, c(0.0)).unwrap();
            assert!((d.re - scalar_determinant_closed_form(tau)).abs() < 1e-10);
            assert!(d.im.abs() < 1e-12);
        }
        assert!((scalar_determinant_closed_form(-1.0) + 1.464_13).abs() < 1e-5);
    }

    #[test]
    fn scalar_sigmas() {
        let s = sigma_scalar(-1.0).unwrap();
        assert!(s.closed_form[0].abs() < 1e-12);
        assert!((s.closed_form[1] - 0.315_23).abs() < 1e-5);
        let s = sigma_scalar(-2.0).unwrap();
        assert!((s.numeric[0] + 0.157_62).abs() < 1e-5);
        let s = sigma_scalar(-0.5).unwrap();
        assert!((s.numeric[0] - 0.315_23).abs() < 1e-5);
        assert_eq!(
            sigma_scalar(0.0).unwrap_err(),
            Error::DivisionByZero("σ₁ is undefined for τ = 0".into())
        );
    }

    #[test]
    fn operator_route_reproduces_the_scalar_system() {
        for (tau, s) in [
            (-1.0, c(0.0)),
            (-2.0, C64::new(0.05, 0.3)),
            (-0.7, C64::new(0.2, -0.1)),
        ] {
            let closed = scalar_boundary_system(tau, s).unwrap();
            let derived = scalar_boundary_system_from_operator(tau, s).unwrap();
            assert!(
                (&closed.matrix - &derived.matrix).norm() < 1e-10,
                "τ={tau} s={s}"
            );
            assert!((&closed.rhs - &derived.rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn operator_route_is_the_negated_closed_form_system() {
        for (a0, t1, t2) in [
            (0.5, -4.0 / 3.0, -1.0 / 3.0),
            (0.5, -2.0, -1.0 / 3.0),
            (1.3, -0.4, -2.0),
        ] {
            let closed = system_matrix_closed_form(a0, t1, t2);
            let derived =
                system_boundary_system_from_operator(a0, t1, t2, c(0.0), 0.7, -1.1).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert!(
                        (derived.matrix[(i, j)] + closed[(i, j)]).norm() < 1e-10,
                        "({i},{j})"
                    );
                }
                let d = system_truncation_closed_form(0.7, -1.1);
                assert!((derived.rhs[i] + d[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn system_sigma_examples() {
        let s = sigma2_system(0.5, -4.0 / 3.0, -1.0 / 3.0).unwrap();
        assert!(s.closed_form.abs() < 1e-12 && s.numeric[0].abs() < 1e-12);
        let s = sigma2_system(0.5, -2.0, -1.0 / 3.0).unwrap();
        assert!((s.closed_form + 0.060_04).abs() < 1e-5);
        assert!(sigma2_system(0.0, -1.0, -1.0).unwrap().closed_form.abs() < 1e-15);
        assert!(matches!(
            sigma2_system(0.5, 1.0, -1.0),
            Err(Error::DegenerateParameters(_))
        ));
    }

    #[test]
    fn kappa_bound() {
        // κ₁ ≈ e^(-s̃), so 1/(1 - |κ₁|²) ≈ 1/(2s̃) + 1/2 rather than
        // the 50.25 of the first-order root 1 - s̃; numpy root of the cubic
        // gives 50.501662472293
        let b = kappa_bound_check(0.01).unwrap();
        assert!((b.lhs - 50.501_662_472_293).abs() < 1e-8, "{}", b.lhs);
        assert_eq!(b.rhs, 50.0);
        assert!(b.ok);
        let b = kappa_bound_check(0.001).unwrap();
        assert!((b.lhs / b.rhs - 1.0).abs() < 2e-3);
    }

    #[test]
    fn outflow_determinant_condition() {
        let o = outflow_solution(c(0.0)).unwrap();
        assert!(o.determinant.norm() > 1e-3);
        assert!(o.xi.iter().all(|x| x.norm().is_finite()));
    }

    #[test]
    fn predicted_rates() {
        assert_eq!(predicted_rate_scalar(-1.0).unwrap(), 2.5);
        assert_eq!(predicted_rate_scalar(-2.0).unwrap(), 2.0);
        let p = SystemParameters {
            alpha0: 0.5,
            alpha1: 0.0,
            tau1: -4.0 / 3.0,
            tau2: -1.0 / 3.0,
            tau3: 0.0,
            tau4: 1.0,
        };
        assert_eq!(predicted_rate_system(&p).unwrap(), 2.5);
        assert_eq!(
            predicted_rate_system(&SystemParameters { tau1: -2.0, ..p }).unwrap(),
            2.0
        );
    }
}
