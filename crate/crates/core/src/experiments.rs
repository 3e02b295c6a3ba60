//! Convergence sweeps with manufactured solutions and the discontinuous
//! four-shapes advection test.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::sat::{
    AdvectionScheme, BoundaryData, RhsEvaluator, SpatialOperator, SystemParameters, SystemScheme,
};
use crate::sbp::UpwindPair;
use crate::stabilization::{StabilizationStats, StabilizedOperator};
use crate::stencil::Order;
use crate::time::{integrate, integrate_with, IntegratorConfig};
use crate::weno::WenoOperator;

pub const DEFAULT_GRIDS: [usize; 5] = [41, 81, 161, 321, 641];

/// CFL number of the convergence sweeps. At 0.5 the RK4 error is still
/// visible against the `h^3.5` spatial error of `p = 4` on these grids.
pub const CONVERGENCE_CFL: f64 = 0.25;

/// CFL number of the four-shapes runs.
pub const FOUR_SHAPES_CFL: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Advection,
    System,
}

/// Exact smooth solutions on `[0, 1]` up to `T = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedProblem {
    pub kind: ProblemKind,
    pub domain: (f64, f64),
    pub t_final: f64,
}

impl ManufacturedProblem {
    pub fn advection() -> Self {
        Self {
            kind: ProblemKind::Advection,
            domain: (0.0, 1.0),
            t_final: 1.0,
        }
    }

    pub fn system() -> Self {
        Self {
            kind: ProblemKind::System,
            ..Self::advection()
        }
    }

    /// `U = sin(2π(x - t) + 1)`.
    pub fn advection_exact(x: f64, t: f64) -> f64 {
        (2.0 * PI * (x - t) + 1.0).sin()
    }

    pub fn advection_exact_t(x: f64, t: f64) -> f64 {
        -2.0 * PI * (2.0 * PI * (x - t) + 1.0).cos()
    }

    /// `(U, V) = (-sin 2π(x+t) + cos 2π(x-t), sin 2π(x+t) + cos 2π(x-t))`.
    pub fn system_exact(x: f64, t: f64) -> (f64, f64) {
        let a = (2.0 * PI * (x + t)).sin();
        let b = (2.0 * PI * (x - t)).cos();
        (-a + b, a + b)
    }

    pub fn system_exact_t(x: f64, t: f64) -> (f64, f64) {
        let a = 2.0 * PI * (2.0 * PI * (x + t)).cos();
        let b = 2.0 * PI * (2.0 * PI * (x - t)).sin();
        (-a + b, a + b)
    }

    /// Exact state on the grid at time `t` (stacked `(u, v)` for the system).
    pub fn exact_state(&self, grid: &Grid, t: f64) -> Vec<f64> {
        match self.kind {
            ProblemKind::Advection => grid
                .points
                .iter()
                .map(|&x| Self::advection_exact(x, t))
                .collect(),
            ProblemKind::System => {
                let (u, v): (Vec<f64>, Vec<f64>) = grid
                    .points
                    .iter()
                    .map(|&x| Self::system_exact(x, t))
                    .unzip();
                u.into_iter().chain(v).collect()
            }
        }
    }

    pub fn exact_time_derivative(&self, grid: &Grid, t: f64) -> Vec<f64> {
        match self.kind {
            ProblemKind::Advection => grid
                .points
                .iter()
                .map(|&x| Self::advection_exact_t(x, t))
                .collect(),
            ProblemKind::System => {
                let (u, v): (Vec<f64>, Vec<f64>) = grid
                    .points
                    .iter()
                    .map(|&x| Self::system_exact_t(x, t))
                    .unzip();
                u.into_iter().chain(v).collect()
            }
        }
    }

    pub fn advection_inflow(&self) -> BoundaryData {
        let x0 = self.domain.0;
        BoundaryData::new(move |t| Self::advection_exact(x0, t))
    }

    /// Data `U + α V` at both ends of the system.
    pub fn system_data(&self, params: &SystemParameters) -> (BoundaryData, BoundaryData) {
        let (x0, x1) = self.domain;
        let (a0, a1) = (params.alpha0, params.alpha1);
        let left = BoundaryData::new(move |t| {
            let (u, v) = Self::system_exact(x0, t);
            u + a0 * v
        });
        let right = BoundaryData::new(move |t| {
            let (u, v) = Self::system_exact(x1, t);
            u + a1 * v
        });
        (left, right)
    }
}

/// The inflow signal of the four-shapes test.
pub fn four_shapes_inflow(t: f64) -> f64 {
    let dz = 0.005;
    let z = -1.2;
    let a = 10.0;
    let beta = 2f64.ln() / (36.0 * dz * dz);
    let xi = -1.0 - t;
    if (0.0..=0.4).contains(&t) {
        let g = |c: f64| (-beta * (xi - c).powi(2)).exp();
        (g(z - dz) + g(z + dz) + 4.0 * g(z)) / 6.0
    } else if (0.6..=0.8).contains(&t) {
        1.0
    } else if (1.0..=1.2).contains(&t) {
        1.0 - (10.0 * (xi + 2.1)).abs()
    } else if (1.4..=1.6).contains(&t) {
        let e = |al: f64| (1.0 - al * al * (xi + 2.5).powi(2)).max(0.0).sqrt();
        (e(a - dz) + e(a + dz) + 4.0 * e(a)) / 6.0
    } else {
        0.0
    }
}

/// Zero initial data on `[-1, 1]`, inflow `g(t)`, exact `u = g(t - (x + 1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourShapesProblem {
    pub domain: (f64, f64),
    pub t_final: f64,
}

impl Default for FourShapesProblem {
    fn default() -> Self {
        Self {
            domain: (-1.0, 1.0),
            t_final: 1.9,
        }
    }
}

impl FourShapesProblem {
    pub fn exact(&self, x: f64, t: f64) -> f64 {
        let lag = t - (x - self.domain.0);
        if lag >= 0.0 {
            four_shapes_inflow(lag)
        } else {
            0.0
        }
    }

    pub fn exact_state(&self, grid: &Grid, t: f64) -> Vec<f64> {
        grid.points.iter().map(|&x| self.exact(x, t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    LinearAdvection,
    LinearSystem,
    /// SBP-WENO advection; stabilized unless configured otherwise.
    WenoAdvection,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::LinearAdvection => "advection",
            SchemeKind::LinearSystem => "system",
            SchemeKind::WenoAdvection => "weno",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub kind: SchemeKind,
    pub order: Order,
    pub tau: f64,
    pub system: SystemParameters,
    pub grids: Vec<usize>,
    pub cfl: f64,
    /// Add the energy stabilization to the WENO operator.
    pub stabilized: bool,
    /// `ε` as a multiple of `h²`.
    pub epsilon_scale: f64,
    /// `δ₁ = δ₂` as a multiple of `h⁴`.
    pub delta_scale: f64,
}

impl ConvergenceConfig {
    pub fn new(kind: SchemeKind, order: Order) -> Self {
        Self {
            kind,
            order,
            tau: -1.0,
            system: SystemParameters {
                alpha0: 0.5,
                alpha1: 0.0,
                tau1: -4.0 / 3.0,
                tau2: -1.0 / 3.0,
                tau3: 0.0,
                tau4: 1.0,
            },
            grids: DEFAULT_GRIDS.to_vec(),
            cfl: CONVERGENCE_CFL,
            stabilized: true,
            epsilon_scale: 1.0,
            delta_scale: 1.0,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_tau1(mut self, tau1: f64) -> Self {
        self.system.tau1 = tau1;
        self
    }

    pub fn with_grids(mut self, grids: Vec<usize>) -> Self {
        self.grids = grids;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    /// `None` when the run blew up or failed.
    pub error: Option<f64>,
    /// Rate against the previous row, when both errors exist.
    pub rate: Option<f64>,
    pub status: String,
    pub stabilization: Option<StabilizationStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope over all surviving rows.
    pub slope: Option<f64>,
    /// Least-squares slope over the three finest surviving rows.
    pub slope_finest3: Option<f64>,
}

impl ConvergenceTable {
    fn from_rows(mut rows: Vec<ConvergenceRow>) -> Self {
        for k in 1..rows.len() {
            if let (Some(a), Some(b)) = (rows[k - 1].error, rows[k].error) {
                rows[k].rate = fit_rate(&[a, b], &[rows[k - 1].h, rows[k].h]).ok();
            }
        }
        let ok: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.error.is_some()).collect();
        let errors: Vec<f64> = ok.iter().map(|r| r.error.unwrap()).collect();
        let hs: Vec<f64> = ok.iter().map(|r| r.h).collect();
        let slope = fit_rate(&errors, &hs).ok();
        let k = errors.len().saturating_sub(3);
        let slope_finest3 = if errors.len() >= 3 {
            fit_rate(&errors[k..], &hs[k..]).ok()
        } else {
            None
        };
        Self {
            rows,
            slope,
            slope_finest3,
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv output failed: {e}"));
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "h", "error_l2h", "rate", "status"])
            .map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                format!("{:.17e}", r.h),
                r.error.map_or(String::new(), |e| format!("{e:.17e}")),
                r.rate.map_or(String::new(), |e| format!("{e:.6}")),
                r.status.clone(),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidArgument(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

/// Least-squares slope of `log(error)` against `log(h)`; rows with a
/// nonpositive or non-finite entry are skipped.
pub fn fit_rate(errors: &[f64], hs: &[f64]) -> Result<f64> {
    if errors.len() != hs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} errors but {} spacings",
            errors.len(),
            hs.len()
        )));
    }
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(errors)
        .filter(|(h, e)| h.is_finite() && e.is_finite() && **h > 0.0 && **e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "a rate needs at least 2 valid rows, got {}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all spacings are equal".into()));
    }
    Ok(sxy / sxx)
}

/// `√(eᵀ H e)` summed over blocks.
pub fn h_norm_error(pair: &UpwindPair, numeric: &[f64], exact: &[f64]) -> f64 {
    let n = pair.n();
    let diff: Vec<f64> = numeric.iter().zip(exact).map(|(a, b)| a - b).collect();
    diff.chunks(n).map(|c| pair.norm_sq(c)).sum::<f64>().sqrt()
}

fn advection_scheme(
    cfg: &ConvergenceConfig,
    grid: &Grid,
    g: BoundaryData,
) -> Result<AdvectionScheme> {
    let pair = UpwindPair::new(cfg.order, grid)?;
    let mut scheme = AdvectionScheme::new(pair, cfg.tau, g);
    if cfg.kind == SchemeKind::WenoAdvection {
        let weno =
            WenoOperator::with_epsilon(cfg.order, grid, cfg.epsilon_scale * grid.h * grid.h)?;
        scheme = scheme.with_spatial(if cfg.stabilized {
            let d = cfg.delta_scale * grid.h.powi(4);
            SpatialOperator::Stabilized(StabilizedOperator::with_parts(weno, [d, d, 0.0])?)
        } else {
            SpatialOperator::Weno(weno)
        });
    }
    Ok(scheme)
}

fn run_one(cfg: &ConvergenceConfig, n: usize) -> Result<(f64, Option<StabilizationStats>)> {
    let problem = match cfg.kind {
        SchemeKind::LinearSystem => ManufacturedProblem::system(),
        _ => ManufacturedProblem::advection(),
    };
    let grid = Grid::new(n, problem.domain.0, problem.domain.1)?;
    let config = IntegratorConfig::new(problem.t_final).with_cfl(cfg.cfl);
    let u0 = problem.exact_state(&grid, 0.0);
    let exact = problem.exact_state(&grid, problem.t_final);
    match cfg.kind {
        SchemeKind::LinearSystem => {
            let pair = UpwindPair::new(cfg.order, &grid)?;
            let (g1, gn) = problem.system_data(&cfg.system);
            let scheme = SystemScheme::new(pair, cfg.system, g1, gn);
            let traj = integrate(&scheme, &u0, &config)?;
            Ok((h_norm_error(&scheme.pair, traj.final_state(), &exact), None))
        }
        _ => {
            let scheme = advection_scheme(cfg, &grid, problem.advection_inflow())?;
            let mut ev = RhsEvaluator::new(&scheme);
            let traj = integrate_with(&mut ev, &u0, &config)?;
            let stats = matches!(scheme.spatial, SpatialOperator::Stabilized(_))
                .then_some(ev.workspace.stats);
            Ok((
                h_norm_error(&scheme.pair, traj.final_state(), &exact),
                stats,
            ))
        }
    }
}

/// Runs every grid (in parallel) and fits the observed rates.
pub fn run_convergence(cfg: &ConvergenceConfig) -> Result<ConvergenceTable> {
    if cfg.grids.is_empty() {
        return Err(Error::InsufficientData("no grids given".into()));
    }
    if cfg.grids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "grids must be strictly increasing, got {:?}",
            cfg.grids
        )));
    }
    for &n in &cfg.grids {
        cfg.order.check_points(n)?;
    }
    let rows: Vec<ConvergenceRow> = cfg
        .grids
        .par_iter()
        .map(|&n| {
            let h = 1.0 / (n - 1) as f64;
            match run_one(cfg, n) {
                Ok((e, stats)) => ConvergenceRow {
                    n,
                    h,
                    error: Some(e),
                    rate: None,
                    status: "ok".into(),
                    stabilization: stats,
                },
                Err(err) => ConvergenceRow {
                    n,
                    h,
                    error: None,
                    rate: None,
                    status: err.to_string(),
                    stabilization: None,
                },
            }
        })
        .collect();
    Ok(ConvergenceTable::from_rows(rows))
}

/// Largest `|rhs(U) - U_t|` on the boundary-closure rows and on the
/// interior rows, for the exact manufactured solution at `t`. The boundary
/// constant depends on the phase of the solution at the closure rows, so
/// times where it nearly vanishes show a blurred order.
pub fn manufactured_residual(
    kind: ProblemKind,
    order: Order,
    n: usize,
    t: f64,
) -> Result<(f64, f64)> {
    let problem = match kind {
        ProblemKind::Advection => ManufacturedProblem::advection(),
        ProblemKind::System => ManufacturedProblem::system(),
    };
    let grid = Grid::new(n, problem.domain.0, problem.domain.1)?;
    let pair = UpwindPair::new(order, &grid)?;
    let w = problem.exact_state(&grid, t);
    let wt = problem.exact_time_derivative(&grid, t);
    let rhs = match kind {
        ProblemKind::Advection => {
            let s = AdvectionScheme::new(pair, -1.0, problem.advection_inflow());
            RhsEvaluator::new(&s).eval(&w, t)?
        }
        ProblemKind::System => {
            let params = ConvergenceConfig::new(SchemeKind::LinearSystem, order).system;
            let (g1, gn) = problem.system_data(&params);
            let s = SystemScheme::new(pair, params, g1, gn);
            RhsEvaluator::new(&s).eval(&w, t)?
        }
    };
    let r = order.closure_width();
    let (mut boundary, mut interior) = (0.0f64, 0.0f64);
    for (idx, (a, b)) in rhs.iter().zip(&wt).enumerate() {
        let i = idx % n;
        let e = (a - b).abs();
        if i < r || i >= n - r {
            boundary = boundary.max(e);
        } else {
            interior = interior.max(e);
        }
    }
    Ok((boundary, interior))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourShapesScheme {
    /// Stabilized SBP-WENO.
    Weno,
    /// The linear upwind operator.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourShapesResult {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub exact: Vec<f64>,
    pub t_final: f64,
    pub overshoot: f64,
    pub undershoot: f64,
    pub total_variation: f64,
    pub exact_total_variation: f64,
    pub error_l2h: f64,
    pub steps: usize,
    pub stabilization: Option<StabilizationStats>,
    pub max_energy_growth: f64,
    pub energy_nonincreasing: bool,
}

impl FourShapesResult {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv output failed: {e}"));
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "u", "exact"]).map_err(io)?;
        for i in 0..self.x.len() {
            w.write_record([
                format!("{:.17e}", self.x[i]),
                format!("{:.17e}", self.u[i]),
                format!("{:.17e}", self.exact[i]),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidArgument(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

pub fn total_variation(u: &[f64]) -> f64 {
    u.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourShapesConfig {
    pub scheme: FourShapesScheme,
    pub order: Order,
    pub n: usize,
    pub tau: f64,
    pub cfl: f64,
    /// Evaluate the `R_mw + R_s` certificate at every right-hand side.
    pub certify: bool,
    /// Start from the exact profile at `t = 1.9` with zero inflow instead.
    pub homogeneous: bool,
    pub t_final: f64,
}

impl FourShapesConfig {
    pub fn new(scheme: FourShapesScheme, order: Order, n: usize) -> Self {
        Self {
            scheme,
            order,
            n,
            tau: -1.0,
            cfl: FOUR_SHAPES_CFL,
            certify: false,
            homogeneous: false,
            t_final: FourShapesProblem::default().t_final,
        }
    }
}

pub fn run_four_shapes(cfg: &FourShapesConfig) -> Result<FourShapesResult> {
    if cfg.n < 201 {
        return Err(Error::InvalidArgument(format!(
            "the four-shapes test needs n ≥ 201, got {}",
            cfg.n
        )));
    }
    let problem = FourShapesProblem::default();
    let grid = Grid::new(cfg.n, problem.domain.0, problem.domain.1)?;
    let pair = UpwindPair::new(cfg.order, &grid)?;
    let (g, u0, exact) = if cfg.homogeneous {
        let profile = problem.exact_state(&grid, problem.t_final);
        // the profile leaves through the outflow boundary at unit speed
        let shifted: Vec<f64> = grid
            .points
            .iter()
            .map(|&x| problem.exact(x - cfg.t_final, problem.t_final))
            .collect();
        (BoundaryData::zero(), profile, shifted)
    } else {
        let g = BoundaryData::new(four_shapes_inflow);
        (g, vec![0.0; cfg.n], problem.exact_state(&grid, cfg.t_final))
    };
    let mut scheme = AdvectionScheme::new(pair, cfg.tau, g);
    if cfg.scheme == FourShapesScheme::Weno {
        scheme = scheme.with_spatial(SpatialOperator::Stabilized(StabilizedOperator::new(
            cfg.order, &grid,
        )?));
    }
    let config = IntegratorConfig::new(cfg.t_final).with_cfl(cfg.cfl);
    let mut ev = RhsEvaluator::new(&scheme);
    ev.workspace.certify = cfg.certify;
    let traj = integrate_with(&mut ev, &u0, &config)?;
    let u = traj.final_state().to_vec();
    let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = u.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(FourShapesResult {
        x: grid.points.clone(),
        overshoot: max - 1.0,
        undershoot: -min,
        total_variation: total_variation(&u),
        exact_total_variation: total_variation(&exact),
        error_l2h: h_norm_error(&scheme.pair, &u, &exact),
        steps: traj.steps,
        stabilization: (cfg.scheme == FourShapesScheme::Weno).then_some(ev.workspace.stats),
        max_energy_growth: traj.max_energy_growth,
        energy_nonincreasing: traj.energy_nonincreasing(),
        u,
        exact,
        t_final: cfg.t_final,
    })
}
