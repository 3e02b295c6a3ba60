//! Classical fourth-order Runge–Kutta time stepping with energy monitoring.

use crate::error::{check_len, Error, Result};
use crate::sat::{RhsEvaluator, Semidiscretization};

/// Scratch vectors for one RK4 step.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        Self {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            stage: vec![0.0; len],
        }
    }

    /// Advances `u` in place from `t` to `t + dt`.
    pub fn step<F>(&mut self, rhs: &mut F, u: &mut [f64], t: f64, dt: f64) -> Result<()>
    where
        F: FnMut(&[f64], f64, &mut [f64]) -> Result<()>,
    {
        let half = 0.5 * dt;
        rhs(u, t, &mut self.k1)?;
        for i in 0..u.len() {
            self.stage[i] = u[i] + half * self.k1[i];
        }
        rhs(&self.stage, t + half, &mut self.k2)?;
        for i in 0..u.len() {
            self.stage[i] = u[i] + half * self.k2[i];
        }
        rhs(&self.stage, t + half, &mut self.k3)?;
        for i in 0..u.len() {
            self.stage[i] = u[i] + dt * self.k3[i];
        }
        rhs(&self.stage, t + dt, &mut self.k4)?;
        let w = dt / 6.0;
        for i in 0..u.len() {
            u[i] += w * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
        Ok(())
    }
}

/// One RK4 step of `u' = f(u, t)`.
pub fn rk4_step<F>(mut f: F, u: &[f64], t: f64, dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], f64) -> Vec<f64>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let mut out = u.to_vec();
    let mut rk = Rk4::new(u.len());
    let mut rhs = |x: &[f64], t: f64, o: &mut [f64]| {
        o.copy_from_slice(&f(x, t));
        Ok(())
    };
    rk.step(&mut rhs, &mut out, t, dt)?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalBlowup {
            step: 1,
            time: t + dt,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub cfl: f64,
    pub t_final: f64,
    /// Replaces `cfl · h` when set.
    pub dt: Option<f64>,
    /// Keep a snapshot every this many steps (the final state is always kept).
    pub snapshot_every: Option<usize>,
    /// Relative per-step energy growth tolerated for energy-stable runs.
    pub energy_tolerance: f64,
    /// The run counts as blown up once `max |u|` exceeds this factor times
    /// `1 + max |u₀|`.
    pub blowup_factor: f64,
}

impl IntegratorConfig {
    pub fn new(t_final: f64) -> Self {
        Self {
            cfl: 0.5,
            t_final,
            dt: None,
            snapshot_every: None,
            energy_tolerance: 1e-10,
            blowup_factor: 1e6,
        }
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_snapshots(mut self, every: usize) -> Self {
        self.snapshot_every = Some(every);
        self
    }

    /// Nominal step for spacing `h`.
    pub fn nominal_dt(&self, h: f64) -> f64 {
        self.dt.unwrap_or(self.cfl * h)
    }

    /// Step sizes reaching `t_final` exactly; only the last one is shortened
    /// (a remainder below `1e-10` of a step is absorbed into the previous step).
    pub fn schedule(&self, h: f64) -> Result<Vec<f64>> {
        let dt = self.nominal_dt(h);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "final time must be nonnegative, got {}",
                self.t_final
            )));
        }
        let ratio = self.t_final / dt;
        let mut full = ratio.floor() as usize;
        let mut rest = self.t_final - full as f64 * dt;
        if rest < 1e-10 * dt && full > 0 {
            full -= 1;
            rest += dt;
        }
        let mut steps = vec![dt; full];
        if rest > 0.0 {
            steps.push(rest);
        }
        Ok(steps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `‖u‖²_H` at `t = 0` and after every step.
    pub energies: Vec<f64>,
    pub steps: usize,
    pub rhs_evaluations: usize,
    /// Largest relative one-step energy growth.
    pub max_energy_growth: f64,
    /// Steps whose energy growth exceeded the tolerance (energy-stable runs only).
    pub energy_violations: Vec<usize>,
    pub energy_monitored: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("at least the initial time")
    }

    pub fn energy_nonincreasing(&self) -> bool {
        self.energy_violations.is_empty()
    }
}

pub fn integrate<S: Semidiscretization>(
    scheme: &S,
    u0: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    let mut ev = RhsEvaluator::new(scheme);
    integrate_with(&mut ev, u0, config)
}

/// As [`integrate`], reusing the evaluator's workspace (and its statistics).
pub fn integrate_with<S: Semidiscretization>(
    ev: &mut RhsEvaluator<'_, S>,
    u0: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    let scheme = ev.scheme;
    check_len("initial state", u0.len(), scheme.len())?;
    let schedule = config.schedule(scheme.h())?;
    let monitored = scheme.energy_nonincreasing();
    let bound = config.blowup_factor * (1.0 + u0.iter().fold(0.0f64, |m, v| m.max(v.abs())));

    let mut u = u0.to_vec();
    let mut t = 0.0;
    let mut rk = Rk4::new(u.len());
    let mut energy = scheme.energy(&u);
    let start_evals = ev.evaluations;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![u.clone()],
        energies: vec![energy],
        steps: 0,
        rhs_evaluations: 0,
        max_energy_growth: f64::NEG_INFINITY,
        energy_violations: Vec::new(),
        energy_monitored: monitored,
    };
    let last = schedule.len();
    for (k, dt) in schedule.into_iter().enumerate() {
        let mut rhs = |x: &[f64], t: f64, o: &mut [f64]| ev.eval_into(x, t, o);
        rk.step(&mut rhs, &mut u, t, dt)?;
        t = if k + 1 == last {
            config.t_final
        } else {
            t + dt
        };
        if u.iter().any(|v| !v.is_finite() || v.abs() > bound) {
            return Err(Error::NumericalBlowup {
                step: k + 1,
                time: t,
            });
        }
        let next = scheme.energy(&u);
        let growth = (next - energy) / energy.max(f64::MIN_POSITIVE);
        traj.max_energy_growth = traj.max_energy_growth.max(growth);
        if monitored && growth > config.energy_tolerance {
            traj.energy_violations.push(k + 1);
        }
        energy = next;
        traj.energies.push(energy);
        traj.steps = k + 1;
        let keep = config
            .snapshot_every
            .is_some_and(|e| e > 0 && (k + 1) % e == 0);
        if keep || k + 1 == last {
            traj.times.push(t);
            traj.states.push(u.clone());
        }
    }
    traj.rhs_evaluations = ev.evaluations - start_evals;
    Ok(traj)
}
