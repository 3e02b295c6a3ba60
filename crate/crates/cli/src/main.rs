//! Command-line driver for the operator checks, the normal-mode analysis and
//! the numerical experiments. Tables go to stdout or `--out` as CSV; short
//! summaries go to stderr.

mod config;
mod output;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, CommandFactory, Parser, Subcommand, ValueEnum};
use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use upwind_sbp::experiments::{ConvergenceTable, DEFAULT_GRIDS};
use upwind_sbp::normal_mode::{
    characteristic_roots, predicted_rate_scalar, predicted_rate_system, scalar_boundary_system,
    scalar_determinant_closed_form, sigma2_system, sigma_scalar, Side,
};
use upwind_sbp::sbp::write_operator_csv;
use upwind_sbp::weno::write_smoothness_csv;
use upwind_sbp::*;

use output::Plot;

#[derive(Parser)]
#[command(
    name = "upwind-sbp",
    version,
    about = "Upwind SBP operators, SBP-WENO and their verification experiments"
)]
struct Cli {
    /// Write the CSV table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Also write a gnuplot script next to the `--out` file.
    #[arg(long, global = true)]
    gnuplot: bool,

    /// Preset flags from a `key = value` file; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the SBP identity, dissipation and accuracy of an operator pair.
    #[command(args_override_self = true)]
    VerifySbp {
        #[arg(long, default_value = "3", value_parser = parse_order)]
        p: Order,
        #[arg(long, default_value_t = 50)]
        n: usize,
    },
    /// Characteristic roots, boundary determinants and predicted rates.
    #[command(args_override_self = true)]
    NormalMode {
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        tau: f64,
        #[command(flatten)]
        system: SystemArgs,
    },
    /// Convergence sweep against a manufactured solution.
    #[command(args_override_self = true)]
    Converge {
        #[arg(value_enum)]
        kind: ConvergeKind,
        #[arg(long, default_value = "3", value_parser = parse_order)]
        p: Order,
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        tau: f64,
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, value_delimiter = ',', num_args = 1, action = ArgAction::Set, default_values_t = DEFAULT_GRIDS)]
        grids: Vec<usize>,
        #[arg(long, default_value_t = experiments::CONVERGENCE_CFL)]
        cfl: f64,
        /// Drop the energy stabilization from the WENO operator.
        #[arg(long)]
        no_stabilize: bool,
        /// `ε` in units of `h²`.
        #[arg(long, default_value_t = 1.0)]
        epsilon_scale: f64,
        /// `δ₁ = δ₂` in units of `h⁴`.
        #[arg(long, default_value_t = 1.0)]
        delta_scale: f64,
    },
    /// The discontinuous four-shapes advection test.
    #[command(args_override_self = true)]
    FourShapes {
        #[arg(long, value_enum, default_value = "weno")]
        scheme: ShapesScheme,
        #[arg(long, default_value = "3", value_parser = parse_order)]
        p: Order,
        #[arg(long, default_value_t = 401)]
        n: usize,
        #[arg(long, default_value_t = experiments::FOUR_SHAPES_CFL)]
        cfl: f64,
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        tau: f64,
        /// Check `R_mw + R_s ⪰ 0` at every right-hand side.
        #[arg(long)]
        certify: bool,
        /// Start from the final exact profile with zero inflow.
        #[arg(long)]
        homogeneous: bool,
        #[arg(long)]
        t_final: Option<f64>,
    },
    /// Band factors of the frozen WENO operator and their stabilization.
    #[command(args_override_self = true)]
    StabilizationReport {
        #[arg(long, default_value = "3", value_parser = parse_order)]
        p: Order,
        #[arg(long, default_value_t = 41)]
        n: usize,
        #[arg(long, value_enum, default_value = "step")]
        state: State,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Smoothness indicators and weights at every flux point.
    #[command(args_override_self = true)]
    WenoWeights {
        #[arg(long, default_value = "3", value_parser = parse_order)]
        p: Order,
        #[arg(long, default_value_t = 41)]
        n: usize,
        #[arg(long, value_enum, default_value = "step")]
        state: State,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sparse triplets of one operator on the unit interval.
    #[command(args_override_self = true)]
    ExportOperator {
        #[arg(long, default_value = "3", value_parser = parse_order)]
        p: Order,
        #[arg(long, default_value_t = 21)]
        n: usize,
        #[arg(long, value_enum, default_value = "dm")]
        which: Which,
    },
}

#[derive(clap::Args, Clone, Copy)]
struct SystemArgs {
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    alpha0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha1: f64,
    #[arg(long, default_value_t = -4.0 / 3.0, allow_negative_numbers = true)]
    tau1: f64,
    #[arg(long, default_value_t = -1.0 / 3.0, allow_negative_numbers = true)]
    tau2: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    tau3: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    tau4: f64,
}

impl SystemArgs {
    fn params(self) -> SystemParameters {
        SystemParameters {
            alpha0: self.alpha0,
            alpha1: self.alpha1,
            tau1: self.tau1,
            tau2: self.tau2,
            tau3: self.tau3,
            tau4: self.tau4,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum ConvergeKind {
    Advection,
    System,
    Weno,
}

#[derive(ValueEnum, Clone, Copy)]
enum ShapesScheme {
    Weno,
    Linear,
}

#[derive(ValueEnum, Clone, Copy)]
enum State {
    Smooth,
    Step,
    Random,
}

#[derive(ValueEnum, Clone, Copy)]
enum Which {
    Dm,
    Dp,
    H,
    Qm,
}

fn parse_order(s: &str) -> std::result::Result<Order, String> {
    let p: usize = s.parse().map_err(|e| format!("{e}"))?;
    Order::from_p(p).map_err(|e| e.to_string())
}

fn sample_state(grid: &Grid, state: State, seed: u64) -> Vec<f64> {
    match state {
        State::Smooth => grid
            .points
            .iter()
            .map(|x| (2.0 * std::f64::consts::PI * x).sin())
            .collect(),
        State::Step => grid
            .points
            .iter()
            .map(|&x| if x < 0.37 { 1.0 } else { 0.0 })
            .collect(),
        State::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..grid.n).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
    }
}

fn csv_io(e: csv::Error) -> anyhow::Error {
    anyhow::Error::new(e).context("writing CSV")
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let first = Cli::try_parse_from(&argv).unwrap_or_else(|e| e.exit());
    let cli = match &first.config {
        Some(path) => {
            let entries = config::read(path)?;
            let merged = config::overlay(&Cli::command(), &argv, &entries)?;
            Cli::try_parse_from(&merged).unwrap_or_else(|e| e.exit())
        }
        None => first,
    };
    run(cli)
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out.as_deref();
    let mut plot = None;
    match cli.command {
        Cmd::VerifySbp { p, n } => {
            let pair = UpwindPair::new(p, &Grid::unit(n)?)?;
            let r = verify_sbp(&pair);
            let k = pair.closure_width();
            let mut w = csv::Writer::from_writer(output::writer(out)?);
            w.write_record([
                "p",
                "n",
                "sbp_residual",
                "qm_min_eig",
                "interior_order",
                "boundary_order",
                "norm_sum_error",
            ])
            .map_err(csv_io)?;
            w.write_record([
                p.p().to_string(),
                n.to_string(),
                format!("{:.3e}", r.sbp_residual),
                format!("{:.3e}", r.qm_min_eig),
                r.interior_order(k).to_string(),
                r.boundary_order(k).to_string(),
                format!("{:.3e}", r.norm_sum_error),
            ])
            .map_err(csv_io)?;
            w.flush()?;
            if r.sbp_residual >= 1e-12 || r.qm_min_eig < -1e-12 {
                bail!("operator pair violates the SBP property");
            }
        }
        Cmd::NormalMode { tau, system } => {
            let params = system.params();
            let roots = characteristic_roots(Side::Inflow, Complex::new(0.0, 0.0))?;
            let mut rows: Vec<(String, String)> = roots
                .roots
                .iter()
                .enumerate()
                .map(|(k, z)| (format!("root_{k}"), format!("{:.15}", z.re)))
                .collect();
            rows.push((
                "det_closed_form".into(),
                format!("{:.15}", scalar_determinant_closed_form(tau)),
            ));
            rows.push((
                "det_numeric".into(),
                format!(
                    "{:.15}",
                    scalar_boundary_system(tau, Complex::new(0.0, 0.0))?
                        .determinant()
                        .re
                ),
            ));
            match sigma_scalar(tau) {
                Ok(s) => {
                    rows.push(("sigma1".into(), format!("{:.15e}", s.closed_form[0])));
                    rows.push(("sigma2".into(), format!("{:.15e}", s.closed_form[1])));
                    rows.push((
                        "predicted_rate_scalar".into(),
                        predicted_rate_scalar(tau)?.to_string(),
                    ));
                }
                Err(e) => eprintln!("scalar σ skipped: {e}"),
            }
            let stab = system_stability_check(&params);
            rows.push(("system_wellposed".into(), stab.wellposed.to_string()));
            rows.push(("system_stable".into(), stab.stable.to_string()));
            match sigma2_system(params.alpha0, params.tau1, params.tau2) {
                Ok(s) => {
                    rows.push((
                        "system_sigma2_closed_form".into(),
                        format!("{:.15e}", s.closed_form),
                    ));
                    rows.push((
                        "system_sigma2_numeric".into(),
                        format!("{:.15e}", s.numeric[0]),
                    ));
                    rows.push((
                        "predicted_rate_system".into(),
                        predicted_rate_system(&params)?.to_string(),
                    ));
                }
                Err(e) => eprintln!("system σ₂ skipped: {e}"),
            }
            let mut w = csv::Writer::from_writer(output::writer(out)?);
            w.write_record(["quantity", "value"]).map_err(csv_io)?;
            for (q, v) in rows {
                w.write_record([q, v]).map_err(csv_io)?;
            }
            w.flush()?;
        }
        Cmd::Converge {
            kind,
            p,
            tau,
            system,
            grids,
            cfl,
            no_stabilize,
            epsilon_scale,
            delta_scale,
        } => {
            let scheme = match kind {
                ConvergeKind::Advection => SchemeKind::LinearAdvection,
                ConvergeKind::System => SchemeKind::LinearSystem,
                ConvergeKind::Weno => SchemeKind::WenoAdvection,
            };
            let mut cfg = ConvergenceConfig::new(scheme, p)
                .with_tau(tau)
                .with_grids(grids)
                .with_cfl(cfl);
            cfg.system = system.params();
            cfg.stabilized = !no_stabilize;
            cfg.epsilon_scale = epsilon_scale;
            cfg.delta_scale = delta_scale;
            let table = run_convergence(&cfg)?;
            table.write_csv(output::writer(out)?)?;
            report_slopes(&table);
            plot = Some((Plot::Convergence, format!("{} p={}", scheme.name(), p.p())));
        }
        Cmd::FourShapes {
            scheme,
            p,
            n,
            cfl,
            tau,
            certify,
            homogeneous,
            t_final,
        } => {
            let scheme = match scheme {
                ShapesScheme::Weno => FourShapesScheme::Weno,
                ShapesScheme::Linear => FourShapesScheme::Linear,
            };
            let mut cfg = FourShapesConfig::new(scheme, p, n);
            cfg.cfl = cfl;
            cfg.tau = tau;
            cfg.certify = certify;
            cfg.homogeneous = homogeneous;
            if let Some(t) = t_final {
                cfg.t_final = t;
            }
            let r = run_four_shapes(&cfg)?;
            r.write_csv(output::writer(out)?)?;
            eprintln!(
                "t = {}: overshoot {:.4}, undershoot {:.4}, total variation {:.4} (exact {:.4}), H-norm error {:.3e}, {} steps",
                r.t_final, r.overshoot, r.undershoot, r.total_variation, r.exact_total_variation, r.error_l2h, r.steps
            );
            if let Some(s) = r.stabilization {
                eprintln!(
                    "stabilization: {} evaluations, {} certified, {} fallbacks, min eig {:.2e} (relative {:.2e})",
                    s.evaluations, s.certified, s.fallbacks, s.min_eig, s.min_relative_eig
                );
            }
            if homogeneous {
                eprintln!(
                    "largest one-step relative energy growth {:.2e}",
                    r.max_energy_growth
                );
            }
            plot = Some((
                Plot::Profile,
                format!("four shapes, {scheme:?} p={}", p.p()),
            ));
        }
        Cmd::StabilizationReport { p, n, state, seed } => {
            let grid = Grid::unit(n)?;
            let u = sample_state(&grid, state, seed);
            let op = StabilizedOperator::new(p, &grid)?;
            let lam = op.lambdas(&u)?;
            let (rmw, rs) = op.frozen_parts(&u)?;
            let (min_rmw, _) = upwind_sbp::linalg::symmetric_eigen_range(&rmw);
            let (min_total, _) = upwind_sbp::linalg::symmetric_eigen_range(&(&rmw + &rs));
            let mut w = csv::Writer::from_writer(output::writer(out)?);
            w.write_record([
                "column",
                "lambda1",
                "lambda2",
                "lambda3",
                "lambda1_s",
                "lambda2_s",
                "lambda3_s",
            ])
            .map_err(csv_io)?;
            let get = |v: &[f64], c: usize| v.get(c).map_or(String::new(), |x| format!("{x:.15e}"));
            for c in 0..=n {
                w.write_record([
                    c.to_string(),
                    get(&lam.l1, c),
                    get(&lam.l2, c),
                    get(&lam.l3, c),
                    get(&lam.l1s, c),
                    get(&lam.l2s, c),
                    get(&lam.l3s, c),
                ])
                .map_err(csv_io)?;
            }
            w.flush()?;
            eprintln!(
                "decomposition residual {:.2e}, min eig R_mw {min_rmw:.4e}, min eig R_mw + R_s {min_total:.4e}, ‖R_mw‖ {:.4e}",
                lam.residual,
                upwind_sbp::linalg::max_abs(&rmw)
            );
        }
        Cmd::WenoWeights { p, n, state, seed } => {
            let grid = Grid::unit(n)?;
            let u = sample_state(&grid, state, seed);
            let weno = WenoOperator::new(p, &grid)?;
            write_smoothness_csv(&weno.smoothness(&u)?, output::writer(out)?)?;
        }
        Cmd::ExportOperator { p, n, which } => {
            let pair = UpwindPair::new(p, &Grid::unit(n)?)?;
            let m = match which {
                Which::Dm => pair.dm.clone(),
                Which::Dp => pair.dp.clone(),
                Which::H => pair.h_matrix(),
                Which::Qm => pair.qm(),
            };
            write_operator_csv(&m, output::writer(out)?)?;
            plot = Some((Plot::Operator, format!("operator n={n} p={}", p.p())));
        }
    }
    if cli.gnuplot {
        let Some((kind, title)) = plot else {
            bail!("this subcommand has no plot");
        };
        let script = output::gnuplot(out, kind, &title).context("writing the gnuplot script")?;
        eprintln!("plot script: {}", script.display());
    }
    Ok(())
}

fn report_slopes(table: &ConvergenceTable) {
    let show = |s: Option<f64>| s.map_or("n/a".to_string(), |s| format!("{s:.3}"));
    for r in table.rows.iter().filter(|r| r.error.is_none()) {
        eprintln!("n = {}: {}", r.n, r.status);
    }
    eprintln!(
        "slope over all grids {}, over the three finest {}",
        show(table.slope),
        show(table.slope_finest3)
    );
}
