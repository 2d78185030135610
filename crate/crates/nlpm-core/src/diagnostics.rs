//! Scalar functionals and front/tail measurements over trajectories.

use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed when a dependency links std
use num_traits::Float;

use crate::error::{check_param, Error, Result};
use crate::evolve::Trajectory;
use crate::grid::Field;
use crate::math::loglog_slope;

/// Entropy density `F_mu` with `F_mu'' = 1/d_mu` and `F_mu(0) = F_mu'(0) = 0`.
///
/// For `mu = 0` and `2 < m < 3` the normalization at zero is impossible
/// (`F'` blows up), so the renormalized `u^{3-m}/((2-m)(3-m))` is used.
pub fn f_mu(u: f64, m: f64, mu: f64) -> Result<f64> {
    check_param(u >= 0.0, "u", u, "density must be nonnegative")?;
    check_param(m > 1.0 && m <= 3.0, "m", m, "entropy defined for 1 < m <= 3")?;
    check_param(mu >= 0.0, "mu", mu, "must be >= 0")?;
    if m == 2.0 || m == 3.0 {
        check_param(mu > 0.0, "mu", mu, "logarithmic branch needs mu > 0")?;
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let v = if m == 2.0 {
        (u + mu) * (u / mu).ln_1p() - u
    } else if m == 3.0 {
        -(u / mu).ln_1p() + u / mu
    } else if mu == 0.0 {
        u.powf(3.0 - m) / ((2.0 - m) * (3.0 - m))
    } else {
        let a = 3.0 - m;
        let b = 2.0 - m;
        ((u + mu).powf(a) - mu.powf(a)) / (b * a) - mu.powf(b) * u / b
    };
    Ok(v)
}

/// `sum F_mu(u_i) h`.
pub fn f_mu_integral(u: &Field, m: f64, mu: f64) -> Result<f64> {
    let mut s = 0.0;
    for &v in &u.values {
        s += f_mu(v, m, mu)?;
    }
    Ok(s * u.grid.h)
}

/// Per-snapshot functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    /// Mass in the box plus everything that left through the boundary cells.
    pub mass: f64,
    pub linf: f64,
    pub l2: f64,
    pub l3: f64,
    /// `None` when the entropy is undefined for the parameters (e.g. `m = 2, mu = 0`).
    pub f_mu: Option<f64>,
    pub hs_sq: f64,
    pub diss_grad_hs: f64,
    pub diss_pressure: f64,
}

pub fn energy_series(traj: &Trajectory) -> Vec<EnergyReport> {
    let p = &traj.params;
    traj.snapshots
        .iter()
        .map(|s| EnergyReport {
            t: s.t,
            mass: s.field.integral() + s.outflow - s.clipped,
            linf: s.field.max(),
            l2: s.field.l2_norm(),
            l3: s.field.lp_norm(3.0),
            f_mu: f_mu_integral(&s.field, p.m, p.mu).ok(),
            hs_sq: s.hs_sq,
            diss_grad_hs: s.diss_grad_hs,
            diss_pressure: s.diss_pressure,
        })
        .collect()
}

/// Outcome of the monotonicity suite on an energy series.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub mass_drift: f64,
    pub linf_monotone: bool,
    pub l2_monotone: bool,
    pub l3_monotone: bool,
    pub hs_monotone: bool,
    pub dissipation_monotone: bool,
}

impl ConservationReport {
    pub fn passes(&self, mass_tol: f64) -> bool {
        self.mass_drift <= mass_tol && self.linf_monotone && self.l2_monotone && self.l3_monotone
    }
}

fn non_increasing(v: impl Iterator<Item = f64>, slack: f64) -> bool {
    let v: Vec<f64> = v.collect();
    v.windows(2).all(|w| w[1] <= w[0] + slack * w[0].abs().max(1.0))
}

/// Relative mass drift and the norm monotonicity flags (`linf_slack` absolute-ish).
pub fn conservation(series: &[EnergyReport], linf_slack: f64) -> Result<ConservationReport> {
    let first = series.first().ok_or(Error::Insufficient("empty trajectory"))?;
    let m0 = first.mass;
    let mass_drift = series
        .iter()
        .map(|r| if m0 != 0.0 { ((r.mass - m0) / m0).abs() } else { r.mass.abs() })
        .fold(0.0, f64::max);
    Ok(ConservationReport {
        mass_drift,
        linf_monotone: non_increasing(series.iter().map(|r| r.linf), linf_slack),
        l2_monotone: non_increasing(series.iter().map(|r| r.l2), linf_slack),
        l3_monotone: non_increasing(series.iter().map(|r| r.l3), linf_slack),
        hs_monotone: non_increasing(series.iter().map(|r| r.hs_sq), 1e-12),
        dissipation_monotone: series
            .windows(2)
            .all(|w| w[1].diss_grad_hs >= w[0].diss_grad_hs && w[1].diss_pressure >= w[0].diss_pressure),
    })
}

/// Largest `|F(t) + delta D_visc(t) + D_grad(t) - F(0)|`, relative to `|F(0)|`
/// (absolute when `F(0) = 0`).
pub fn first_energy_residual(traj: &Trajectory) -> Result<f64> {
    let p = &traj.params;
    let first = traj.snapshots.first().ok_or(Error::Insufficient("empty trajectory"))?;
    let f0 = f_mu_integral(&first.field, p.m, p.mu)?;
    let mut worst = 0.0f64;
    for s in &traj.snapshots {
        let f = f_mu_integral(&s.field, p.m, p.mu)?;
        let r = f + p.delta * s.diss_viscous + s.diss_grad_hs - f0;
        worst = worst.max(r.abs());
    }
    Ok(if f0 != 0.0 { worst / f0.abs() } else { worst })
}

/// `1/2 |H_s u(t)|^2 + D_pressure(t)` against `1/2 |H_s u_0|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondEnergy {
    pub lhs: Vec<f64>,
    pub rhs: f64,
    /// Largest excess of `lhs` over `rhs`, relative to `rhs` (absolute if `rhs = 0`).
    pub max_excess: f64,
    /// `1/2 |H_s u|^2` non-increasing across snapshots.
    pub monotone: bool,
    pub holds: bool,
}

pub fn second_energy_check(traj: &Trajectory, tol: f64) -> SecondEnergy {
    let rhs = 0.5 * traj.snapshots.first().map_or(0.0, |s| s.hs_sq);
    let lhs: Vec<f64> = traj.snapshots.iter().map(|s| 0.5 * s.hs_sq + s.diss_pressure).collect();
    let scale = if rhs.abs() > 0.0 { rhs.abs() } else { 1.0 };
    let max_excess = lhs.iter().map(|l| (l - rhs) / scale).fold(0.0, f64::max);
    let monotone = traj.snapshots.windows(2).all(|w| w[1].hs_sq <= w[0].hs_sq + tol * scale);
    SecondEnergy { lhs, rhs, max_excess, monotone, holds: max_excess <= tol }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
    Flat,
}

impl Trend {
    pub fn label(self) -> &'static str {
        match self {
            Trend::Increasing => "increasing",
            Trend::Decreasing => "decreasing",
            Trend::Flat => "flat",
        }
    }
}

/// Sign of `d/dt int u^{3-m}` over consecutive snapshots and the fraction
/// of pairs that agree with the majority direction.
pub fn sign_of_u3m_drift(traj: &Trajectory) -> Result<(Trend, f64)> {
    let m = traj.params.m;
    check_param(m != 2.0 && m != 3.0, "m", m, "drift of int u^{3-m} is trivial for m = 2, 3")?;
    let vals: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| s.field.values.iter().map(|v| v.max(0.0).powf(3.0 - m)).sum::<f64>() * s.field.grid.h)
        .collect();
    if vals.len() < 2 {
        return Err(Error::Insufficient("need two snapshots"));
    }
    let scale = vals.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let floor = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let (mut up, mut down) = (0usize, 0usize);
    for w in vals.windows(2) {
        let d = w[1] - w[0];
        if d > floor {
            up += 1;
        } else if d < -floor {
            down += 1;
        }
    }
    let pairs = (vals.len() - 1) as f64;
    Ok(if up == 0 && down == 0 {
        (Trend::Flat, 1.0)
    } else if up >= down {
        (Trend::Increasing, up as f64 / pairs)
    } else {
        (Trend::Decreasing, down as f64 / pairs)
    })
}

/// Outermost positions where `u` exceeds the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontTrace {
    pub threshold: f64,
    pub times: Vec<f64>,
    /// `NaN` when nothing exceeds the threshold.
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// Cells between each right edge and the box edge.
    pub right_margin: Vec<usize>,
}

/// Edges are the outer faces of the outermost cells above `threshold`.
pub fn front_trace(traj: &Trajectory, threshold: f64) -> Result<FrontTrace> {
    check_param(threshold > 0.0, "threshold", threshold, "must be positive")?;
    let mut tr = FrontTrace { threshold, times: Vec::new(), left: Vec::new(), right: Vec::new(), right_margin: Vec::new() };
    for s in &traj.snapshots {
        let g = s.field.grid;
        let vals = &s.field.values;
        tr.times.push(s.t);
        match (vals.iter().position(|v| *v > threshold), vals.iter().rposition(|v| *v > threshold)) {
            (Some(a), Some(b)) => {
                tr.left.push(g.x(a) - 0.5 * g.h);
                tr.right.push(g.x(b) + 0.5 * g.h);
                tr.right_margin.push(g.n - 1 - b);
            }
            _ => {
                tr.left.push(f64::NAN);
                tr.right.push(f64::NAN);
                tr.right_margin.push(g.n);
            }
        }
    }
    Ok(tr)
}

/// Growth law of the right edge.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontFit {
    pub r0: f64,
    pub exponent: f64,
    /// `1/(2-2s)`.
    pub predicted: f64,
    /// Constant of the bound `r0 + C t^predicted`, from the first window.
    pub c_bound: f64,
    /// Every snapshot satisfies the bound.
    pub bounded: bool,
    /// Snapshots used by the exponent fit.
    pub used: usize,
}

/// Window rules for [`fit_front`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub skip: usize,
    pub min_cells: f64,
    pub boundary_cells: usize,
    /// Headroom on the fitted bound constant.
    pub c_factor: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self { skip: 5, min_cells: 5.0, boundary_cells: 10, c_factor: 1.25 }
    }
}

/// Fits `right(t) - r0` against `t` in log-log. The bound constant is the
/// largest ratio `(right - r0)/t^predicted` over the first window (all
/// snapshots up to the first quarter of the usable ones), times `c_factor`.
pub fn fit_front(trace: &FrontTrace, s: f64, h: f64, win: FitWindow) -> Result<FrontFit> {
    let r0 = *trace.right.first().ok_or(Error::Insufficient("empty trace"))?;
    if !r0.is_finite() {
        return Err(Error::Insufficient("no initial support"));
    }
    let predicted = 1.0 / (2.0 - 2.0 * s);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut idx = Vec::new();
    for k in win.skip..trace.times.len() {
        let d = trace.right[k] - r0;
        if trace.times[k] > 0.0 && d >= win.min_cells * h && trace.right_margin[k] >= win.boundary_cells {
            xs.push(trace.times[k]);
            ys.push(d);
            idx.push(k);
        }
    }
    if xs.len() < 3 {
        return Err(Error::Insufficient("front moved fewer than the minimum number of cells"));
    }
    let exponent = loglog_slope(&xs, &ys).ok_or(Error::Insufficient("degenerate fit"))?;
    let last_early = idx[(idx.len() / 4).max(1) - 1];
    let mut c = 0.0f64;
    for k in 1..=last_early {
        let t = trace.times[k];
        if t > 0.0 && trace.right[k].is_finite() {
            c = c.max((trace.right[k] - r0) / t.powf(predicted));
        }
    }
    let c_bound = c * win.c_factor;
    let bounded = trace.times.iter().zip(&trace.right).zip(&trace.right_margin).all(|((&t, &r), &margin)| {
        margin >= win.boundary_cells && (r.is_nan() || r <= r0 + c_bound * t.powf(predicted) + 1e-12)
    });
    Ok(FrontFit { r0, exponent, predicted, c_bound, bounded, used: xs.len() })
}

/// Propagation regime of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Finite,
    Infinite,
    Indeterminate,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Finite => "finite",
            Regime::Infinite => "infinite",
            Regime::Indeterminate => "indeterminate",
        }
    }

    /// A positivity certificate far outside the initial support decides
    /// "infinite"; otherwise a bounded front decides "finite".
    pub fn classify(positive: bool, front_bounded: Option<bool>) -> Regime {
        match (positive, front_bounded) {
            (true, _) => Regime::Infinite,
            (false, Some(true)) => Regime::Finite,
            _ => Regime::Indeterminate,
        }
    }
}

/// Extrema over a spatial region.
#[derive(Debug, Clone, PartialEq)]
pub struct TailProbe {
    pub min: f64,
    pub max: f64,
    /// `min > floor`.
    pub positive: bool,
}

pub fn tail_probe(u: &Field, region: (f64, f64), floor: f64) -> Result<TailProbe> {
    let g = u.grid;
    let (a, b) = region;
    check_param(a < b && a >= g.x_min && b <= g.x_max, "region", a, "must be a nonempty interval inside the grid")?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..g.n {
        let x = g.x(i);
        if x >= a && x <= b {
            lo = lo.min(u.values[i]);
            hi = hi.max(u.values[i]);
        }
    }
    if lo > hi {
        return Err(Error::Insufficient("region holds no cell center"));
    }
    Ok(TailProbe { min: lo, max: hi, positive: lo > floor })
}

/// Log-log slope of `v` against `|x|` over the cells of `region` with `v > 0`.
pub fn tail_exponent(v: &Field, region: (f64, f64)) -> Option<f64> {
    let g = v.grid;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..g.n {
        let x = g.x(i);
        if x >= region.0 && x <= region.1 && x != 0.0 && v.values[i] > 0.0 {
            xs.push(x.abs());
            ys.push(v.values[i]);
        }
    }
    loglog_slope(&xs, &ys)
}

/// Spatial tail power `(2 alpha + m)/(2 - m)` of the integrated scaling solutions.
pub fn tail_power(m: f64, alpha: f64) -> f64 {
    (2.0 * alpha + m) / (2.0 - m)
}

/// Time scaling exponent `1/(m - 1 + 2 alpha)`.
pub fn time_exponent(m: f64, alpha: f64) -> f64 {
    1.0 / (m - 1.0 + 2.0 * alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{run, SimParams};
    use crate::grid::Grid;
    use crate::math::GaussRule;
    use approx::assert_relative_eq;

    #[test]
    fn entropy_branches() {
        assert_eq!(f_mu(0.0, 1.5, 0.1).unwrap(), 0.0);
        assert_relative_eq!(f_mu(1.0, 2.0, 1.0).unwrap(), 2.0 * 2f64.ln() - 1.0, max_relative = 1e-15);
        assert_relative_eq!(f_mu(1.0, 3.0, 1.0).unwrap(), 1.0 - 2f64.ln(), max_relative = 1e-15);
        assert!(f_mu(1.0, 2.0, 0.0).is_err());
        assert!(f_mu(-1.0, 1.5, 0.1).is_err());
        // m = 2.5, mu = 0: negative coefficient 1/((2-m)(3-m)) = -4
        assert_relative_eq!(f_mu(4.0, 2.5, 0.0).unwrap(), -8.0, max_relative = 1e-15);
    }

    #[test]
    fn entropy_second_derivative_is_inverse_mobility() {
        for &(m, mu) in &[(1.5, 0.1), (2.0, 0.3), (2.5, 0.2), (3.0, 0.5), (1.2, 0.0)] {
            let u: f64 = 0.7;
            let e = 1e-4;
            let d2 = (f_mu(u + e, m, mu).unwrap() - 2.0 * f_mu(u, m, mu).unwrap() + f_mu(u - e, m, mu).unwrap()) / (e * e);
            assert_relative_eq!(d2, (u + mu).powf(1.0 - m), max_relative = 1e-6);
        }
    }

    #[test]
    fn entropy_integral_matches_quadrature() {
        // F(u) = int_0^u int_0^v (w+mu)^{1-m} dw dv = int_0^u (u-w)(w+mu)^{1-m} dw
        let (m, mu) = (1.5, 0.1);
        let rule = GaussRule::new(40);
        for &u in &[0.01, 0.3, 1.0, 2.5] {
            let q = rule.integrate(0.0, u, |w| (u - w) * (w + mu).powf(1.0 - m));
            assert_relative_eq!(f_mu(u, m, mu).unwrap(), q, max_relative = 1e-10);
        }
        let g = Grid::symmetric(5.0, 400).unwrap();
        let gauss = Field::from_fn(g, |x| (-x * x).exp());
        let direct: f64 = gauss.values.iter().map(|&u| rule.integrate(0.0, u, |w| (u - w) * (w + mu).powf(1.0 - m))).sum::<f64>() * g.h;
        assert_relative_eq!(f_mu_integral(&gauss, m, mu).unwrap(), direct, max_relative = 1e-8);
    }

    #[test]
    fn regime_rules() {
        assert_eq!(Regime::classify(true, Some(true)), Regime::Infinite);
        assert_eq!(Regime::classify(false, Some(true)), Regime::Finite);
        assert_eq!(Regime::classify(false, Some(false)), Regime::Indeterminate);
        assert_eq!(Regime::classify(false, None), Regime::Indeterminate);
    }

    #[test]
    fn exponents_arithmetic() {
        assert_relative_eq!(tail_power(1.5, 0.5), 5.0);
        assert_relative_eq!(time_exponent(1.5, 0.5), 2.0 / 3.0);
    }

    fn zero_run() -> Trajectory {
        let g = Grid::symmetric(4.0, 64).unwrap();
        let mut p = SimParams::new(1.5, 0.25, g, 0.1);
        p.snapshot_every = 0.01;
        run(&Field::zeros(g), &p).unwrap()
    }

    #[test]
    fn zero_state_sentinels() {
        let tr = zero_run();
        assert_eq!(first_energy_residual(&tr).unwrap(), 0.0);
        let se = second_energy_check(&tr, 0.02);
        assert!(se.holds && se.monotone);
        assert_eq!(sign_of_u3m_drift(&tr).unwrap().0, Trend::Flat);
        let ft = front_trace(&tr, 1e-8).unwrap();
        assert!(matches!(fit_front(&ft, 0.25, 0.125, FitWindow::default()), Err(Error::Insufficient(_))));
    }

    #[test]
    fn short_run_diagnostics() {
        let g = Grid::symmetric(6.0, 256).unwrap();
        let mut p = SimParams::new(1.5, 0.25, g, 0.2);
        p.mu = 0.05;
        p.snapshot_every = 0.02;
        let u0 = Field::from_fn(g, |x| (-x * x).exp());
        let tr = run(&u0, &p).unwrap();
        let series = energy_series(&tr);
        let c = conservation(&series, 1e-12).unwrap();
        assert!(c.passes(1e-10), "{c:?}");
        assert!(c.hs_monotone && c.dissipation_monotone);
        assert!(first_energy_residual(&tr).unwrap() < 0.05);
        assert!(second_energy_check(&tr, 0.02).holds);
        let (trend, frac) = sign_of_u3m_drift(&tr).unwrap();
        assert_eq!(trend, Trend::Decreasing);
        assert!(frac >= 0.95);
    }

    #[test]
    fn probe_and_tail_fit() {
        let g = Grid::symmetric(10.0, 200).unwrap();
        let u = Field::from_fn(g, |x| if x.abs() < 1.0 { 1.0 } else { 0.0 });
        assert!(!tail_probe(&u, (-8.0, -3.0), 0.0).unwrap().positive);
        assert!(tail_probe(&u, (-20.0, -3.0), 0.0).is_err());
        let v = Field::from_fn(g, |x| (x.abs() + 1.0).powf(-5.0));
        let e = tail_exponent(&v, (-10.0, -6.0)).unwrap();
        assert!(e < -4.0 && e > -6.0);
    }

    #[test]
    fn front_fit_recovers_synthetic_law() {
        let n = 41;
        let h = 1e-3;
        let times: Vec<f64> = (0..n).map(|k| k as f64 * 0.025).collect();
        let right: Vec<f64> = times.iter().map(|t| 1.0 + 0.5 * t.powf(0.6)).collect();
        let tr = FrontTrace {
            threshold: 1e-8,
            times: times.clone(),
            left: right.iter().map(|r| -r).collect(),
            right,
            right_margin: alloc::vec![1000; n],
        };
        let f = fit_front(&tr, 0.25, h, FitWindow::default()).unwrap();
        assert_relative_eq!(f.exponent, 0.6, max_relative = 1e-10);
        assert!(f.bounded);
        assert_relative_eq!(f.predicted, 2.0 / 3.0);
    }
}
