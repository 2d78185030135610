//! Reference solutions: free-space fractional heat flow and the explicit
//! algebraic-tail profile that is self-similar at one critical exponent.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed when a dependency links std
use num_traits::Float;

use crate::diagnostics::{energy_series, fit_front, front_trace, conservation, FitWindow, FrontFit};
use crate::error::{check_param, Error, Result};
use crate::evolve::Trajectory;
use crate::fft::{wavenumber, FftPlan};
use crate::grid::{Field, Grid};
use crate::math::{linear_fit, loglog_slope};

/// `u(t)` for `u_t = -(-Delta)^{1-s} u` on the line, by multiplying the
/// zero-padded transform with `exp(-t |k|^{2(1-s)})`.
pub fn fractional_heat_reference(u0: &Field, s: f64, t: f64) -> Result<Field> {
    check_param(s > 0.0 && s < 1.0, "s", s, "order must lie in (0,1)")?;
    check_param(t >= 0.0, "t", t, "must be >= 0")?;
    if t == 0.0 {
        return Ok(u0.clone());
    }
    let n = u0.len();
    let size = (8 * n).next_power_of_two();
    let plan = FftPlan::new(size);
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    // center the box in the padded period so the wrap-around sees zeros
    let off = (size - n) / 2;
    for (i, &v) in u0.values.iter().enumerate() {
        buf[off + i].re = v;
    }
    plan.forward(&mut buf);
    let a2 = 2.0 * (1.0 - s);
    for (k, c) in buf.iter_mut().enumerate() {
        let xi = wavenumber(k, size, u0.grid.h).abs();
        *c *= (-t * xi.powf(a2)).exp();
    }
    plan.inverse(&mut buf);
    let values = buf[off..off + n].iter().map(|c| c.re).collect();
    Ok(Field { grid: u0.grid, values })
}

/// Exponent at which the algebraic profile is self-similar in 1D:
/// `(6s - 1)/(1 + 2s)`.
pub fn m_ex(s: f64) -> f64 {
    (6.0 * s - 1.0) / (1.0 + 2.0 * s)
}

/// Mass-preserving decay rate `1/(m + 1 - 2s)`.
pub fn decay_exponent(m: f64, s: f64) -> f64 {
    1.0 / (m + 1.0 - 2.0 * s)
}

/// `lambda (R^2 + x^2)^{-(1+2s)/2}`.
pub fn huang_profile(grid: &Grid, lambda: f64, radius: f64, s: f64) -> Result<Field> {
    check_param(s > 0.0 && s < 1.0, "s", s, "order must lie in (0,1)")?;
    check_param(lambda > 0.0 && radius > 0.0, "radius", radius, "lambda and R must be positive")?;
    Ok(Field::from_fn(*grid, |x| lambda * (radius * radius + x * x).powf(-0.5 - s)))
}

/// Outcome of the self-similarity test.
#[derive(Debug, Clone, PartialEq)]
pub struct Similarity {
    pub alpha_fit: f64,
    pub alpha_pred: f64,
    /// Time origin: the data behave like `(t + tau0)^{-alpha}`.
    pub tau0: f64,
    /// Largest pairwise relative L1 distance of the rescaled profiles.
    pub collapse: f64,
}

/// Linear interpolation of a field at `x`, zero outside the box.
fn sample(u: &Field, x: f64) -> f64 {
    let g = u.grid;
    let p = (x - g.x_min) / g.h - 0.5;
    if p < 0.0 || p > (g.n - 1) as f64 {
        return 0.0;
    }
    let i = (p.floor() as usize).min(g.n - 2);
    let w = p - i as f64;
    u.values[i] * (1.0 - w) + u.values[i + 1] * w
}

/// Fits the time origin from `|u|_inf^{-1/alpha*}` being linear in `t`,
/// then the decay exponent against `t + tau0`, and measures the collapse
/// of `(t+tau0)^a u(y (t+tau0)^a, t)` on `|y| <= y_max` for snapshots
/// after `t_skip`. The window is clipped so that it stays inside the box at
/// the last snapshot.
pub fn self_similar_decay_check(traj: &Trajectory, t_skip: f64, y_max: f64) -> Result<Similarity> {
    let p = &traj.params;
    let alpha_pred = decay_exponent(p.m, p.s);
    let snaps: Vec<_> = traj.snapshots.iter().filter(|s| s.t >= t_skip).collect();
    if snaps.len() < 4 {
        return Err(Error::Insufficient("decay window holds fewer than 4 snapshots"));
    }
    let ts: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let lin: Vec<f64> = snaps.iter().map(|s| s.field.max().powf(-1.0 / alpha_pred)).collect();
    let (slope, icpt) = linear_fit(&ts, &lin).ok_or(Error::Insufficient("degenerate time fit"))?;
    if !(slope > 0.0) {
        return Err(Error::Insufficient("no decay"));
    }
    let tau0 = icpt / slope;
    let shifted: Vec<f64> = ts.iter().map(|t| t + tau0).collect();
    let peaks: Vec<f64> = snaps.iter().map(|s| s.field.max()).collect();
    let alpha_fit = -loglog_slope(&shifted, &peaks).ok_or(Error::Insufficient("degenerate decay fit"))?;
    let last_scale = shifted.last().map_or(1.0, |t| t.powf(alpha_pred));
    let y_max = y_max.min(0.9 * p.grid.x_max.min(-p.grid.x_min) / last_scale);
    let ny = 801;
    let ys: Vec<f64> = (0..ny).map(|k| -y_max + 2.0 * y_max * k as f64 / (ny - 1) as f64).collect();
    let dy = 2.0 * y_max / (ny - 1) as f64;
    let profiles: Vec<Vec<f64>> = snaps
        .iter()
        .zip(&shifted)
        .map(|(s, &tt)| {
            let sc = tt.powf(alpha_pred);
            ys.iter().map(|&y| sc * sample(&s.field, y * sc)).collect()
        })
        .collect();
    let mut collapse = 0.0f64;
    for i in 0..profiles.len() {
        for j in i + 1..profiles.len() {
            let d: f64 = profiles[i].iter().zip(&profiles[j]).map(|(a, b)| (a - b).abs()).sum::<f64>() * dy;
            let nrm: f64 = profiles[i].iter().map(|a| a.abs()).sum::<f64>() * dy;
            collapse = collapse.max(d / nrm);
        }
    }
    Ok(Similarity { alpha_fit, alpha_pred, tau0, collapse })
}

/// Regression anchor for `m = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub mass_drift: f64,
    pub linf_decays: bool,
    pub front: FrontFit,
}

impl CvReport {
    pub fn passes(&self) -> bool {
        let e = self.front.exponent / self.front.predicted;
        self.mass_drift <= 1e-10 && self.linf_decays && self.front.bounded && (0.85..=1.15).contains(&e)
    }
}

/// Mass, sup-norm decay and the front law of an `m = 2` trajectory, with
/// the front threshold relative to the initial maximum.
pub fn cv_regression(traj: &Trajectory, rel_threshold: f64) -> Result<CvReport> {
    check_param(traj.params.m == 2.0, "m", traj.params.m, "regression anchor runs at m = 2")?;
    let series = energy_series(traj);
    let c = conservation(&series, 1e-12)?;
    let u0max = traj.snapshots[0].field.max();
    let trace = front_trace(traj, rel_threshold * u0max)?;
    let front = fit_front(&trace, traj.params.s, traj.params.grid.h, FitWindow::default())?;
    Ok(CvReport { mass_drift: c.mass_drift, linf_decays: c.linf_monotone, front })
}

/// Relative L2 distance `|a - b|_2 / |b|_2`.
pub fn relative_l2(a: &Field, b: &Field) -> f64 {
    a.sub(b).l2_norm() / b.l2_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn heat_reference_identity_and_mass() {
        let g = Grid::symmetric(20.0, 512).unwrap();
        let u0 = Field::from_fn(g, |x| (-x * x).exp());
        assert_eq!(fractional_heat_reference(&u0, 0.5, 0.0).unwrap(), u0);
        let u = fractional_heat_reference(&u0, 0.5, 0.5).unwrap();
        // part of the heavy tail spreads past the box edges
        assert!(u.integral() < u0.integral());
        assert!(u.max() < u0.max());
    }

    #[test]
    fn half_order_heat_is_a_cauchy_convolution() {
        // s = 1/2: kernel of exp(-t|k|) is t/(pi (x^2 + t^2)); datum is a Cauchy bump
        let g = Grid::symmetric(200.0, 8192).unwrap();
        let c = |x: f64, a: f64| a / (core::f64::consts::PI * (x * x + a * a));
        let u0 = Field::from_fn(g, |x| c(x, 1.0));
        let u = fractional_heat_reference(&u0, 0.5, 0.5).unwrap();
        for x in [0.0, 0.7, 3.0] {
            let i = g.cell_of(x).unwrap();
            assert_relative_eq!(u.values[i], c(g.x(i), 1.5), max_relative = 2e-3);
        }
    }

    #[test]
    fn critical_exponent_values() {
        assert_relative_eq!(m_ex(0.5), 1.0);
        assert_relative_eq!(m_ex(0.75), 1.4, max_relative = 1e-15);
        assert_relative_eq!(decay_exponent(1.4, 0.75), 1.0 / 0.9, max_relative = 1e-15);
    }

    #[test]
    fn profile_is_even_and_decreasing() {
        let g = Grid::symmetric(5.0, 100).unwrap();
        let u = huang_profile(&g, 1.0, 1.0, 0.75).unwrap();
        for i in 0..50 {
            assert_relative_eq!(u.values[i], u.values[99 - i], max_relative = 1e-14);
            if i > 0 {
                assert!(u.values[i] > u.values[i - 1]);
            }
        }
    }

    #[test]
    fn interpolation_is_exact_for_lines() {
        let g = Grid::symmetric(1.0, 16).unwrap();
        let u = Field::from_fn(g, |x| 2.0 * x + 1.0);
        assert_relative_eq!(sample(&u, 0.3), 1.6, max_relative = 1e-14);
        assert_eq!(sample(&u, 5.0), 0.0);
    }
}
