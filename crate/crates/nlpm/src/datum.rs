//! Initial data on a grid.

use std::path::Path;

use anyhow::{bail, Context, Result};
use nlpm_core::grid::{Field, Grid};
use nlpm_core::integrated::{cumulative, IntegratedState};
use nlpm_core::validate::huang_profile;

use crate::config::Datum;

/// Density samples of the datum. Fails for the point-mass datum.
pub fn density(d: &Datum, grid: &Grid, s: f64) -> Result<Field> {
    Ok(match *d {
        Datum::Box { lo, hi, height } => Field::from_fn(*grid, |x| if x >= lo && x <= hi { height } else { 0.0 }),
        Datum::Gaussian { amplitude, center, width } => {
            Field::from_fn(*grid, |x| amplitude * (-((x - center) / width).powi(2)).exp())
        }
        Datum::ExpTail { amplitude, rate } => Field::from_fn(*grid, |x| amplitude * (-rate * x.abs()).exp()),
        Datum::Huang { lambda, radius } => huang_profile(grid, lambda, radius, s)?,
        Datum::File { ref path } => read_profile(path, grid)?,
        Datum::HeavisideIntegrated { .. } => bail!("the point-mass datum has no density samples"),
    })
}

/// Integrated datum `v0(x) = int_{-inf}^x u0`.
pub fn integrated(d: &Datum, grid: &Grid, s: f64) -> Result<IntegratedState> {
    match *d {
        Datum::HeavisideIntegrated { mass, at } => {
            let v = Field::from_fn(*grid, |x| if x >= at { mass } else { 0.0 });
            Ok(IntegratedState { v, mass })
        }
        _ => Ok(cumulative(&density(d, grid, s)?)?),
    }
}

/// Reads `x,u` rows (header optional); the `x` column must match the grid.
pub fn read_profile(path: &Path, grid: &Grid) -> Result<Field> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading datum {}", path.display()))?;
    let mut values = Vec::with_capacity(grid.n);
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (Some(xs), Some(us)) = (cols.next(), cols.next()) else {
            bail!("{}:{}: expected two columns x,u", path.display(), ln + 1);
        };
        let (Ok(x), Ok(u)) = (xs.parse::<f64>(), us.parse::<f64>()) else {
            if values.is_empty() && ln == 0 {
                continue; // header
            }
            bail!("{}:{}: not a number", path.display(), ln + 1);
        };
        let i = values.len();
        if i >= grid.n || (x - grid.x(i)).abs() > 1e-9 * grid.h.max(x.abs()) {
            bail!("{}:{}: x = {x} does not match grid node {}", path.display(), ln + 1, i);
        }
        values.push(u);
    }
    if values.len() != grid.n {
        bail!("{}: {} rows for a grid of {} cells", path.display(), values.len(), grid.n);
    }
    let f = Field::new(*grid, values)?;
    f.check_nonnegative()?;
    Ok(f)
}
