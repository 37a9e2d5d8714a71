use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid over `[x_min, x_max]` with `n_points` nodes, both ends
/// included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::NonFinite("grid endpoint"));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!("x_min {x_min} >= x_max {x_max}")));
        }
        if n_points < 3 {
            return Err(Error::InvalidGrid(format!("n_points {n_points} < 3")));
        }
        Ok(Self { x_min, x_max, n_points })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        // weighted form keeps symmetric grids exactly antisymmetric
        let m = (self.n_points - 1) as f64;
        let i = i as f64;
        (self.x_min * (m - i) + self.x_max * i) / m
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    /// Halves the spacing, keeping the old nodes as a subset.
    pub fn refined(&self) -> Self {
        Self { n_points: 2 * (self.n_points - 1) + 1, ..*self }
    }

    /// Same spacing, relabelled by `x -> x - shift`.
    pub fn translated(&self, shift: f64) -> Self {
        Self { x_min: self.x_min - shift, x_max: self.x_max - shift, ..*self }
    }
}
