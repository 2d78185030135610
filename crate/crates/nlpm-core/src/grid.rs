//! Uniform cell-centered grids and sampled fields.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed when a dependency links std
use num_traits::Float;

use crate::error::{check_param, Error, Result};

/// Uniform grid of `n` cells on `[x_min, x_max]`; nodes are cell centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub h: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        check_param(n >= 8, "n", n as f64, "need at least 8 cells")?;
        check_param(x_min.is_finite() && x_max.is_finite() && x_max > x_min, "x_max", x_max, "must exceed x_min")?;
        Ok(Self { x_min, x_max, n, h: (x_max - x_min) / n as f64 })
    }

    /// Symmetric grid on `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Index of the cell containing `x`, if any.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if x < self.x_min || x > self.x_max {
            return None;
        }
        let i = ((x - self.x_min) / self.h).floor() as usize;
        Some(i.min(self.n - 1))
    }

    /// Same box with `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Self {
        Self { n: self.n * factor, h: self.h / factor as f64, ..*self }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n && self.x_min == other.x_min && self.x_max == other.x_max
    }
}

/// Real samples attached to a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch { want: grid.n, got: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.n] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self { grid, values: (0..grid.n).map(|i| f(grid.x(i))).collect() }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.h
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (s * self.grid.h).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.h).sqrt()
    }

    pub fn dot(&self, other: &Field) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.h
    }

    pub fn sub(&self, other: &Field) -> Field {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Field { grid: self.grid, values }
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.grid.same_as(grid) && self.values.len() == grid.n {
            Ok(())
        } else {
            Err(Error::GridMismatch { want: grid.n, got: self.values.len() })
        }
    }

    /// Rejects negative or non-finite samples.
    pub fn check_nonnegative(&self) -> Result<()> {
        for (i, &v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NotFinite { index: i });
            }
            if v < 0.0 {
                return Err(Error::Negative { index: i, value: v });
            }
        }
        Ok(())
    }

    /// Sample mirrored through the grid center: `out[i] = u[n-1-i]`.
    pub fn reflected(&self) -> Field {
        let mut values = self.values.clone();
        values.reverse();
        Field { grid: self.grid, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_cell_centers() {
        let g = Grid::new(-1.0, 1.0, 8).unwrap();
        assert_eq!(g.h, 0.25);
        assert_eq!(g.x(0), -0.875);
        assert_eq!(g.x(7), 0.875);
        assert_eq!(g.cell_of(0.0), Some(4));
        assert_eq!(g.cell_of(1.0), Some(7));
        assert_eq!(g.cell_of(1.5), None);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::new(0.0, 1.0, 4).is_err());
        assert!(Grid::new(1.0, 0.0, 16).is_err());
    }

    #[test]
    fn field_norms() {
        let g = Grid::new(0.0, 1.0, 10).unwrap();
        let f = Field::new(g, vec![2.0; 10]).unwrap();
        assert!((f.integral() - 2.0).abs() < 1e-14);
        assert!((f.lp_norm(3.0) - 2.0).abs() < 1e-14);
        assert!(Field::new(g, vec![0.0; 9]).is_err());
        assert!(Field::new(g, vec![-1.0; 10]).unwrap().check_nonnegative().is_err());
    }
}
