//! Flux-form stencil tables for the third- and fourth-order upwind operators.
//!
//! Grid points are indexed `0..n` and flux points `0..=n`; flux point `i`
//! lies between grid points `i - 1` and `i`, and `D_m u|_i = (f_{i+1} - f_i) / h̄_i`
//! in 0-based row numbering. Every flux is a convex combination of
//! candidate substencil fluxes; the linear combination reproduces `D_m`.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

/// Interior order of an upwind SBP pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    Third,
    Fourth,
}

impl Order {
    pub fn from_p(p: usize) -> Result<Self> {
        match p {
            3 => Ok(Order::Third),
            4 => Ok(Order::Fourth),
            other => Err(Error::UnsupportedOrder(other)),
        }
    }

    pub fn p(self) -> usize {
        match self {
            Order::Third => 3,
            Order::Fourth => 4,
        }
    }

    /// Accuracy of the boundary closure rows.
    pub fn boundary_order(self) -> usize {
        match self {
            Order::Third => 1,
            Order::Fourth => 2,
        }
    }

    /// Number of modified rows at each boundary.
    pub fn closure_width(self) -> usize {
        match self {
            Order::Third => 2,
            Order::Fourth => 4,
        }
    }

    pub fn min_points(self) -> usize {
        match self {
            Order::Third => 8,
            Order::Fourth => 12,
        }
    }

    /// Half-bandwidth of `H D_m` (and of its symmetric part).
    pub fn bandwidth(self) -> usize {
        match self {
            Order::Third => 2,
            Order::Fourth => 3,
        }
    }

    pub(crate) fn check_points(self, n: usize) -> Result<()> {
        if n < self.min_points() {
            Err(Error::InvalidArgument(format!(
                "p = {} needs at least {} grid points, got {n}",
                self.p(),
                self.min_points()
            )))
        } else {
            Ok(())
        }
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.p())
    }
}

/// Norm weights `h̄_i / h` at the first flux intervals; mirrored on the right.
const P3_EDGE_SPACING: [f64; 2] = [5.0 / 12.0, 13.0 / 12.0];
const P4_EDGE_SPACING: [f64; 4] = [49.0 / 144.0, 61.0 / 48.0, 41.0 / 48.0, 149.0 / 144.0];

/// `h̄_i / h` for `i = 1..=n` (returned 0-based, length `n`).
pub fn spacing_ratios(order: Order, n: usize) -> Vec<f64> {
    let edge: &[f64] = match order {
        Order::Third => &P3_EDGE_SPACING,
        Order::Fourth => &P4_EDGE_SPACING,
    };
    let mut s = vec![1.0; n];
    for (k, &w) in edge.iter().enumerate() {
        s[k] = w;
        s[n - 1 - k] = w;
    }
    s
}

/// Which smoothness-indicator formulas a flux point uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightRule {
    /// Single fixed stencil, no adaptation.
    Fixed,
    P3Interior,
    P4Interior,
    P4Left1,
    P4Left2,
    P4Left3,
    P4Right1,
    P4Right2,
    P4Right3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Substencil {
    /// Grid index of `coeffs[0]`.
    pub first: usize,
    pub coeffs: &'static [f64],
}

impl Substencil {
    #[inline]
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(&u[self.first..self.first + self.coeffs.len()])
            .map(|(c, v)| c * v)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxPoint {
    pub label: usize,
    pub rule: WeightRule,
    /// Grid index the indicator formulas are written around.
    pub anchor: usize,
    pub substencils: Vec<Substencil>,
    pub linear_weights: Vec<f64>,
}

impl FluxPoint {
    fn new(
        label: usize,
        rule: WeightRule,
        anchor: usize,
        substencils: Vec<Substencil>,
        linear_weights: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(substencils.len(), linear_weights.len());
        Self {
            label,
            rule,
            anchor,
            substencils,
            linear_weights,
        }
    }

    fn fixed(label: usize, first: usize, coeffs: &'static [f64]) -> Self {
        Self::new(
            label,
            WeightRule::Fixed,
            first,
            vec![Substencil { first, coeffs }],
            vec![1.0],
        )
    }

    /// Flux as a single stencil `(first, coeffs)` for the given weights.
    pub fn combined(&self, weights: &[f64]) -> (usize, Vec<f64>) {
        let first = self.substencils.iter().map(|s| s.first).min().unwrap();
        let last = self
            .substencils
            .iter()
            .map(|s| s.first + s.coeffs.len())
            .max()
            .unwrap();
        let mut c = vec![0.0; last - first];
        for (s, w) in self.substencils.iter().zip(weights) {
            for (k, v) in s.coeffs.iter().enumerate() {
                c[s.first - first + k] += w * v;
            }
        }
        (first, c)
    }

    pub fn linear_combined(&self) -> (usize, Vec<f64>) {
        self.combined(&self.linear_weights)
    }
}

const ONE: [f64; 1] = [1.0];

const P3_FIRST_INTERIOR: [f64; 2] = [7.0 / 12.0, 5.0 / 12.0];
const LEFT_TWO_POINT: [f64; 2] = [-0.5, 1.5];
const CENTERED_TWO_POINT: [f64; 2] = [0.5, 0.5];
const P3_OUT_LEFT: [f64; 2] = [-7.0 / 12.0, 19.0 / 12.0];
const P3_OUT_RIGHT: [f64; 2] = [5.0 / 12.0, 7.0 / 12.0];

const P4_INT_THREE_POINT: [f64; 3] = [1.0 / 3.0, -7.0 / 6.0, 11.0 / 6.0];

const P4_L1_A: [f64; 2] = [95.0 / 144.0, 49.0 / 144.0];
const P4_L1_B: [f64; 3] = [1741.0 / 1152.0, -209.0 / 576.0, -19.0 / 128.0];
const P4_L2_A: [f64; 2] = [-11.0 / 18.0, 29.0 / 18.0];
const P4_L2_B: [f64; 3] = [5.0 / 11.0, 95.0 / 198.0, 13.0 / 198.0];
const P4_L3_A: [f64; 2] = [77.0 / 144.0, 67.0 / 144.0];
const P4_L3_B: [f64; 2] = [-67.0 / 144.0, 211.0 / 144.0];
const P4_L3_C: [f64; 3] = [9.0 / 32.0, -37.0 / 36.0, 503.0 / 288.0];

// Right-boundary substencils, stored in increasing grid index.
const P4_R1_A: [f64; 2] = [49.0 / 144.0, 95.0 / 144.0];
const P4_R1_B: [f64; 2] = [-95.0 / 144.0, 239.0 / 144.0];
const P4_R1_C: [f64; 3] = [47.0 / 96.0, -59.0 / 36.0, 619.0 / 288.0];
const P4_R2_A: [f64; 2] = [29.0 / 18.0, -11.0 / 18.0];
const P4_R2_B: [f64; 2] = [11.0 / 18.0, 7.0 / 18.0];
const P4_R2_C: [f64; 3] = [24.0 / 90.0, -83.0 / 90.0, 149.0 / 90.0];
const P4_R3_A: [f64; 4] = [49.0 / 80.0, -131.0 / 1440.0, 583.0 / 720.0, -53.0 / 160.0];
const P4_R3_B: [f64; 3] = [-53.0 / 288.0, 5.0 / 6.0, 101.0 / 288.0];
const P4_R3_C: [f64; 3] = [101.0 / 288.0, -89.0 / 72.0, 181.0 / 96.0];

fn sub(first: usize, coeffs: &'static [f64]) -> Substencil {
    Substencil { first, coeffs }
}

/// All `n + 1` flux points with their candidate substencils and linear weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFluxSet {
    pub order: Order,
    pub n: usize,
    pub points: Vec<FluxPoint>,
}

impl CandidateFluxSet {
    pub fn new(order: Order, n: usize) -> Result<Self> {
        order.check_points(n)?;
        let last = n - 1;
        let mut points = Vec::with_capacity(n + 1);
        match order {
            Order::Third => {
                points.push(FluxPoint::fixed(0, 0, &ONE));
                points.push(FluxPoint::fixed(1, 0, &P3_FIRST_INTERIOR));
                for i in 2..n - 1 {
                    let g = i - 1;
                    points.push(FluxPoint::new(
                        i,
                        WeightRule::P3Interior,
                        g,
                        vec![sub(g - 1, &LEFT_TWO_POINT), sub(g, &CENTERED_TWO_POINT)],
                        vec![1.0 / 3.0, 2.0 / 3.0],
                    ));
                }
                let g = last - 1;
                points.push(FluxPoint::new(
                    n - 1,
                    WeightRule::P3Interior,
                    g,
                    vec![sub(g - 1, &P3_OUT_LEFT), sub(g, &P3_OUT_RIGHT)],
                    vec![2.0 / 7.0, 5.0 / 7.0],
                ));
                points.push(FluxPoint::fixed(n, last, &ONE));
            }
            Order::Fourth => {
                points.push(FluxPoint::fixed(0, 0, &ONE));
                points.push(FluxPoint::new(
                    1,
                    WeightRule::P4Left1,
                    0,
                    vec![sub(0, &P4_L1_A), sub(1, &P4_L1_B)],
                    vec![15.0 / 19.0, 4.0 / 19.0],
                ));
                points.push(FluxPoint::new(
                    2,
                    WeightRule::P4Left2,
                    0,
                    vec![sub(0, &P4_L2_A), sub(1, &P4_L2_B)],
                    vec![5.0 / 16.0, 11.0 / 16.0],
                ));
                points.push(FluxPoint::new(
                    3,
                    WeightRule::P4Left3,
                    0,
                    vec![sub(2, &P4_L3_A), sub(1, &P4_L3_B), sub(0, &P4_L3_C)],
                    vec![39.0 / 67.0, 689.0 / 1809.0, 1.0 / 27.0],
                ));
                for i in 4..=n - 4 {
                    let g = i - 1;
                    points.push(FluxPoint::new(
                        i,
                        WeightRule::P4Interior,
                        g,
                        vec![
                            sub(g, &CENTERED_TWO_POINT),
                            sub(g - 1, &LEFT_TWO_POINT),
                            sub(g - 2, &P4_INT_THREE_POINT),
                        ],
                        vec![0.5, 0.25, 0.25],
                    ));
                }
                points.push(FluxPoint::new(
                    n - 3,
                    WeightRule::P4Right3,
                    last,
                    vec![
                        sub(last - 3, &P4_R3_A),
                        sub(last - 4, &P4_R3_B),
                        sub(last - 5, &P4_R3_C),
                    ],
                    vec![5.0 / 53.0, 3576.0 / 5353.0, 24.0 / 101.0],
                ));
                points.push(FluxPoint::new(
                    n - 2,
                    WeightRule::P4Right2,
                    last,
                    vec![
                        sub(last - 1, &P4_R2_A),
                        sub(last - 2, &P4_R2_B),
                        sub(last - 4, &P4_R2_C),
                    ],
                    vec![31.0 / 176.0, 45.0 / 88.0, 5.0 / 16.0],
                ));
                points.push(FluxPoint::new(
                    n - 1,
                    WeightRule::P4Right1,
                    last,
                    vec![
                        sub(last - 1, &P4_R1_A),
                        sub(last - 2, &P4_R1_B),
                        sub(last - 3, &P4_R1_C),
                    ],
                    vec![69.0 / 95.0, 1127.0 / 4465.0, 1.0 / 47.0],
                ));
                points.push(FluxPoint::fixed(n, last, &ONE));
            }
        }
        debug_assert_eq!(points.len(), n + 1);
        Ok(Self { order, n, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

/// Smoothness indicators `β` (first `count` entries) and the global measure `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indicators {
    pub beta: [f64; 3],
    pub tau: f64,
    pub count: usize,
}

pub fn indicators(rule: WeightRule, anchor: usize, u: &[f64]) -> Indicators {
    let g = anchor;
    match rule {
        WeightRule::Fixed => Indicators {
            beta: [0.0; 3],
            tau: 0.0,
            count: 1,
        },
        WeightRule::P3Interior => Indicators {
            beta: [sq(u[g] - u[g - 1]), sq(u[g + 1] - u[g]), 0.0],
            tau: sq(u[g + 1] - 2.0 * u[g] + u[g - 1]),
            count: 2,
        },
        WeightRule::P4Interior => {
            let b3 = 13.0 / 12.0 * sq(u[g] - 2.0 * u[g - 1] + u[g - 2])
                + 0.25 * sq(5.0 * u[g] - 8.0 * u[g - 1] + 3.0 * u[g - 2]);
            Indicators {
                beta: [sq(u[g + 1] - u[g]), sq(u[g] - u[g - 1]), b3],
                tau: sq(u[g + 1] - 3.0 * u[g] + 3.0 * u[g - 1] - u[g - 2]),
                count: 3,
            }
        }
        WeightRule::P4Left1 => {
            let b1 = sq(u[1] - u[0]);
            let b2 = sq(9.0 * u[1] - 14.0 * u[2] + 5.0 * u[3]) / 16.0
                + 49.0 / 48.0 * sq(u[1] - 2.0 * u[2] + u[3]);
            Indicators {
                beta: [b1, b2, 0.0],
                tau: sq(b2 - b1),
                count: 2,
            }
        }
        WeightRule::P4Left2 => {
            let b1 = sq(u[1] - u[0]);
            let b2 = 13.0 / 12.0 * sq(u[1] - 2.0 * u[2] + u[3])
                + 0.25 * sq(3.0 * u[1] - 4.0 * u[2] + u[3]);
            Indicators {
                beta: [b1, b2, 0.0],
                tau: (b2 - b1).abs(),
                count: 2,
            }
        }
        WeightRule::P4Left3 => {
            let b1 = sq(u[3] - u[2]);
            let b2 = sq(u[2] - u[1]);
            let b3 = 13.0 / 12.0 * sq(u[0] - 2.0 * u[1] + u[2])
                + 0.25 * sq(u[0] - 4.0 * u[1] + 3.0 * u[2]);
            Indicators {
                beta: [b1, b2, b3],
                tau: (b1 + b2 - 2.0 * b3).abs(),
                count: 3,
            }
        }
        WeightRule::P4Right1 => {
            let b1 = sq(u[g] - u[g - 1]);
            let b2 = sq(u[g - 1] - u[g - 2]);
            let b3 = 13.0 / 12.0 * sq(u[g - 1] - 2.0 * u[g - 2] + u[g - 3])
                + 0.25 * sq(3.0 * u[g - 1] - 4.0 * u[g - 2] + u[g - 3]);
            Indicators {
                beta: [b1, b2, b3],
                tau: (b1 + b2 - 2.0 * b3).abs(),
                count: 3,
            }
        }
        WeightRule::P4Right2 => {
            let b1 = sq(u[g] - u[g - 1]);
            let b2 = sq(u[g - 1] - u[g - 2]);
            let b3 = 13.0 / 12.0 * sq(u[g - 2] - 2.0 * u[g - 3] + u[g - 4])
                + 0.25 * sq(3.0 * u[g - 2] - 4.0 * u[g - 3] + u[g - 4]);
            Indicators {
                beta: [b1, b2, b3],
                tau: (b1 + b2 - 2.0 * b3).abs(),
                count: 3,
            }
        }
        WeightRule::P4Right3 => {
            let (a0, a1, a2, a3) = (u[g], u[g - 1], u[g - 2], u[g - 3]);
            let b1 = 781.0 / 720.0 * sq(a0 - 3.0 * a1 + 3.0 * a2 - a3)
                + 13.0 / 12.0 * sq(a0 - 4.0 * a1 + 5.0 * a2 - 2.0 * a3)
                + sq(3.0 * a0 - 13.0 * a1 + 25.0 * a2 - 15.0 * a3) / 64.0;
            let b2 = 13.0 / 12.0 * sq(u[g - 2] - 2.0 * u[g - 3] + u[g - 4])
                + 0.25 * sq(u[g - 2] - u[g - 4]);
            let b3 = 13.0 / 12.0 * sq(u[g - 3] - 2.0 * u[g - 4] + u[g - 5])
                + 0.25 * sq(3.0 * u[g - 3] - 4.0 * u[g - 4] + u[g - 5]);
            Indicators {
                beta: [b1, b2, b3],
                tau: (4.0 * b1 - 3.0 * b2 - b3).abs(),
                count: 3,
            }
        }
    }
}
