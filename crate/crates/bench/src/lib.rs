//! Fixtures shared by the benchmarks.

use upwind_sbp::{
    AdvectionScheme, BoundaryData, Grid, Order, Result, SpatialOperator, StabilizedOperator,
    UpwindPair, WenoOperator,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Linear,
    Weno,
    Stabilized,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::Linear, Kernel::Weno, Kernel::Stabilized];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Linear => "linear",
            Kernel::Weno => "weno",
            Kernel::Stabilized => "stabilized",
        }
    }
}

/// Advection scheme on `[0, 1]` with a unit inflow value.
pub fn scheme(kernel: Kernel, order: Order, n: usize) -> Result<AdvectionScheme> {
    let grid = Grid::unit(n)?;
    let base = AdvectionScheme::new(
        UpwindPair::new(order, &grid)?,
        -1.0,
        BoundaryData::constant(1.0),
    );
    Ok(match kernel {
        Kernel::Linear => base,
        Kernel::Weno => base.with_spatial(SpatialOperator::Weno(WenoOperator::new(order, &grid)?)),
        Kernel::Stabilized => base.with_spatial(SpatialOperator::Stabilized(
            StabilizedOperator::new(order, &grid)?,
        )),
    })
}

/// A smooth wave with a jump, so that the nonlinear weights are active.
pub fn state(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            (6.0 * x).sin() + if x > 0.5 { 1.0 } else { 0.0 }
        })
        .collect()
}
