use crate::error::{Error, Result};

/// Uniform grid `x_j = x_left + j h`, `j = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub h: f64,
    pub points: Vec<f64>,
    pub domain: (f64, f64),
}

impl Grid {
    pub fn new(n: usize, x_left: f64, x_right: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "a grid needs at least 2 points, got {n}"
            )));
        }
        if !(x_left.is_finite() && x_right.is_finite()) || x_left >= x_right {
            return Err(Error::InvalidArgument(format!(
                "degenerate domain [{x_left}, {x_right}]"
            )));
        }
        let h = (x_right - x_left) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|j| x_left + j as f64 * h).collect();
        points[n - 1] = x_right;
        Ok(Self {
            n,
            h,
            points,
            domain: (x_left, x_right),
        })
    }

    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, 0.0, 1.0)
    }

    pub fn length(&self) -> f64 {
        self.domain.1 - self.domain.0
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

pub fn build_grid(n: usize, x_left: f64, x_right: f64) -> Result<Grid> {
    Grid::new(n, x_left, x_right)
}
